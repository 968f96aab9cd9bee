//! Gauss-Legendre quadrature with breakpoint-aware cell splitting and a
//! power substitution for integrable endpoint singularities.
//!
//! All singular densities handled by this crate blow up like `t^{-3/4}` at a
//! cell's left endpoint. Substituting `t = a + u^4` turns such integrands (and
//! the matching `t^{1/4}` primitives) into smooth ones, so plain Gauss rules
//! apply on the transformed cell.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

type Rule = (Vec<f64>, Vec<f64>);

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Computed once per order by Newton iteration on the Legendre polynomial and
/// cached for reuse.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "quadrature order must be at least 1");
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| compute_rule(n)).clone()
}

fn compute_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` via the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss integration of `f` over `(a, b)` with `order` points.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, order: usize, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Gauss integration of `f` over `(a, b)` where `f` has an integrable power
/// singularity (of the `t^{-3/4}` family) at the left endpoint `a`.
///
/// Uses the substitution `t = a + u^4`, which maps exponents `-3/4` and `1/4`
/// to smooth integrands.
pub fn integrate_singular_left<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    order: usize,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let u_max = (b - a).powf(0.25);
    integrate(0.0, u_max, order, |u| {
        let u2 = u * u;
        f(a + u2 * u2) * 4.0 * u * u2
    })
}

/// One quadrature cell of a composite rule.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub a: f64,
    pub b: f64,
    /// The integrand is singular at the left endpoint of this cell.
    pub singular_left: bool,
}

impl Cell {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, order: usize, f: F) -> f64 {
        if self.singular_left {
            integrate_singular_left(self.a, self.b, order, f)
        } else {
            integrate(self.a, self.b, order, f)
        }
    }
}

/// Splits `(a, b)` at the given interior breakpoints and flags cells whose
/// left endpoint carries a singularity of the integrand.
///
/// `max_phase` optionally bounds `scale * cell_width`; cells are subdivided
/// uniformly until the bound holds. This keeps a fixed-order Gauss rule
/// accurate for oscillatory factors like `sin(alpha t)` with `scale = alpha`.
pub fn split_cells(
    a: f64,
    b: f64,
    breakpoints: &[f64],
    singular_points: &[f64],
    max_phase: Option<f64>,
    tol: f64,
) -> Vec<Cell> {
    if b <= a + tol {
        return Vec::new();
    }
    let mut cuts = vec![a, b];
    for &p in breakpoints {
        if p > a + tol && p < b - tol {
            cuts.push(p);
        }
    }
    cuts.sort_by(|u, v| u.partial_cmp(v).expect("non-finite breakpoint"));
    cuts.dedup_by(|u, v| (*u - *v).abs() <= tol);

    let is_singular = |t: f64| singular_points.iter().any(|&s| (s - t).abs() <= tol);
    let mut cells = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = match max_phase {
            Some(phase) if phase > 0.0 => {
                let need = ((hi - lo) * phase / MAX_CELL_PHASE).ceil();
                (need as usize).max(1)
            }
            _ => 1,
        };
        let step = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let ca = lo + k as f64 * step;
            let cb = if k + 1 == pieces { hi } else { ca + step };
            cells.push(Cell {
                a: ca,
                b: cb,
                singular_left: k == 0 && is_singular(ca),
            });
        }
    }
    cells
}

/// Phase bound per cell used by [`split_cells`]; an 8-point Gauss rule
/// resolves `sin` over this span to well below 1e-12.
const MAX_CELL_PHASE: f64 = 3.0;
