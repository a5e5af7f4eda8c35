//! Independent reference values used across the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Power series for J_n evaluated term by term with exact factorials.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact_m = 1.0;
    let mut fact_mn: f64 = (1..=n).map(f64::from).product();
    for m in 0..60u32 {
        if m > 0 {
            fact_m *= m as f64;
            fact_mn *= (m + n) as f64;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (0.5 * x).powi((2 * m + n) as i32) / (fact_m * fact_mn);
    }
    sum
}

/// First positive zero of J_n by bisection on a bracketing interval.
pub fn bessel_zero(n: u32, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let fa = bessel_j(n, a);
    assert!(fa * bessel_j(n, b) < 0.0, "bracket does not straddle a zero");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j(n, m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn j01() -> f64 {
    bessel_zero(0, 2.0, 3.0)
}

pub fn j11() -> f64 {
    bessel_zero(1, 3.0, 4.5)
}

/// Monte-Carlo area and centroid of a set given by an indicator.
pub fn monte_carlo_moments(
    inside: impl Fn(f64, f64) -> bool,
    bbox: [f64; 4],
    samples: usize,
    seed: u64,
) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [x0, x1, y0, y1] = bbox;
    let (mut hits, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for _ in 0..samples {
        let x = rng.random_range(x0..x1);
        let y = rng.random_range(y0..y1);
        if inside(x, y) {
            hits += 1;
            sx += x;
            sy += y;
        }
    }
    let area = (x1 - x0) * (y1 - y0) * hits as f64 / samples as f64;
    (area, sx / hits as f64, sy / hits as f64)
}

/// Area of the intersection of two unit disks whose centers are `t` apart.
pub fn unit_lens(t: f64) -> f64 {
    2.0 * (t / 2.0).acos() - 0.5 * t * (4.0 - t * t).sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
