//! Quadrature rules shared by the geometry and shape-derivative code.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Number of uniform angles used for periodic trapezoid sums.
pub const PERIODIC_POINTS: usize = 2048;

const GL_ORDER: usize = 10;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Integrates `f` over `[a, b]` with one Gauss-Legendre panel.
pub fn gauss_panel(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = default_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Composite Gauss-Legendre with panels no wider than `max_panel`.
pub fn gauss_composite(a: f64, b: f64, max_panel: f64, f: impl Fn(f64) -> f64) -> f64 {
    let len = b - a;
    if len == 0.0 {
        return 0.0;
    }
    let panels = ((len.abs() / max_panel).ceil() as usize).max(1);
    let step = len / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + step * i as f64;
            gauss_panel(lo, lo + step, &f)
        })
        .sum()
}

/// Trapezoid sum of a 2π-periodic function on `n` uniform nodes.
pub fn periodic_trapezoid(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let dt = 2.0 * PI / n as f64;
    (0..n).map(|i| f(dt * i as f64)).sum::<f64>() * dt
}

/// Integrates a 2π-periodic function whose smoothness breaks where `g`
/// changes sign. Break points are located on a uniform scan and refined by
/// bisection; each smooth arc is then integrated with composite
/// Gauss-Legendre. Without sign changes the plain trapezoid sum is used.
pub fn periodic_with_breaks(f: impl Fn(f64) -> f64, break_fns: &[&dyn Fn(f64) -> f64]) -> f64 {
    let n = PERIODIC_POINTS;
    let dt = 2.0 * PI / n as f64;
    let mut roots = Vec::new();
    for g in break_fns {
        let vals: Vec<f64> = (0..=n).map(|i| g(dt * i as f64)).collect();
        for i in 0..n {
            let (g0, g1) = (vals[i], vals[i + 1]);
            if g0 == 0.0 {
                roots.push(dt * i as f64);
            } else if g0 * g1 < 0.0 {
                let (mut lo, mut hi) = (dt * i as f64, dt * (i + 1) as f64);
                let mut glo = g0;
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    if gm * glo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        glo = gm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
    }
    if roots.is_empty() {
        return periodic_trapezoid(n, f);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let max_panel = 2.0 * PI / 256.0;
    let mut total = 0.0;
    for i in 0..roots.len() {
        let a = roots[i];
        let b = if i + 1 < roots.len() { roots[i + 1] } else { roots[0] + 2.0 * PI };
        total += gauss_composite(a, b, max_panel, &f);
    }
    total
}
