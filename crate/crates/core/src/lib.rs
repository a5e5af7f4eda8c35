//! Finite-element laboratory for penalized spectral shape functionals on
//! planar star-shaped domains.
//!
//! The crate is layered bottom-up: [`geometry`] describes domains exactly,
//! [`mesh`] discretizes them, [`elliptic`] solves the Dirichlet eigenvalue
//! and torsion problems, [`distances`] and [`energy`] compose the
//! functionals, [`shapegrad`] differentiates them and [`optimizer`] descends
//! on Fourier coefficients.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod distances;
pub mod elliptic;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod optimizer;
pub mod quadrature;
pub mod shapegrad;

pub use error::{Error, Result};
pub use geometry::{BallSpec, FourierMode, Point, PsiWeight, StarDomain};
