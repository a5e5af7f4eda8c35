//! Bessel functions of the first kind (orders 0 and 1) by power series.
//! Accurate to about 1e-14 for the arguments used here (|x| < 12).

use std::sync::OnceLock;

pub fn j0(x: f64) -> f64 {
    series(0, x)
}

pub fn j1(x: f64) -> f64 {
    series(1, x)
}

fn series(order: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for m in 1..200 {
        let m = m as f64;
        term *= q / (m * (m + order as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero of J0, refined by Newton's method (J0' = -J1).
pub fn j0_first_zero() -> f64 {
    static ZERO: OnceLock<f64> = OnceLock::new();
    *ZERO.get_or_init(|| {
        let mut x = 2.4;
        for _ in 0..50 {
            let dx = j0(x) / -j1(x);
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        x
    })
}

/// First positive zero of J1, refined by Newton's method
/// (J1' = J0 - J1 / x).
pub fn j1_first_zero() -> f64 {
    static ZERO: OnceLock<f64> = OnceLock::new();
    *ZERO.get_or_init(|| {
        let mut x = 3.8;
        for _ in 0..50 {
            let dx = j1(x) / (j0(x) - j1(x) / x);
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        x
    })
}
