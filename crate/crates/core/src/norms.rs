//! Error measurement: the dual norm of density errors by two independent
//! routes, L2 norms and localized indicator contributions.
//!
//! The dual norm of a density `w` is the H1-seminorm of the Riesz
//! representer solving `-phi'' = w`, `phi'(0) = 0`, `phi(T) = 0`. Its kernel
//! representation reduces, after one integration by parts, to the L2 norm of
//! the running integral of `w`; that is the production route used here. The
//! second route expands `w` in the cosine basis `cos(alpha_k t)` and sums
//! the weighted squared moments; it shares no arithmetic with the first and
//! guards against derivation mistakes in either.

use crate::kernel::{mode_frequency, ExactDensity, PiecewiseConstant};
use crate::mesh::{nesting_map, LateralMesh};
use crate::quadrature::split_cells;
use crate::{Error, Result, Side};

/// The difference between a closed-form density and a piecewise-constant
/// approximation over the same lateral boundary.
#[derive(Clone)]
pub struct DensityError {
    pub exact: ExactDensity,
    pub approx: PiecewiseConstant,
}

impl DensityError {
    pub fn new(exact: ExactDensity, approx: PiecewiseConstant) -> Self {
        DensityError { exact, approx }
    }

    /// Wraps a plain piecewise-constant density as an error against zero,
    /// so norms of discrete densities reuse the same entry points.
    pub fn from_pc(approx: PiecewiseConstant) -> Self {
        DensityError {
            exact: ExactDensity::zero(),
            approx,
        }
    }
}

/// Piecewise-linear running integral of a piecewise-constant side, with
/// precomputed node values for O(log n) evaluation.
struct CumulativePc<'a> {
    nodes: &'a [f64],
    coeffs: &'a [f64],
    node_values: Vec<f64>,
}

impl<'a> CumulativePc<'a> {
    fn build(pc: &'a PiecewiseConstant, side: Side) -> Self {
        let nodes = pc.mesh().side(side).nodes();
        let coeffs = pc.coeffs(side);
        let mut node_values = Vec::with_capacity(nodes.len());
        node_values.push(0.0);
        let mut acc = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            acc += c * (nodes[i + 1] - nodes[i]);
            node_values.push(acc);
        }
        CumulativePc {
            nodes,
            coeffs,
            node_values,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = *self.nodes.last().unwrap();
        if t >= last {
            return *self.node_values.last().unwrap();
        }
        let i = self.nodes.partition_point(|&x| x <= t) - 1;
        self.node_values[i] + self.coeffs[i] * (t - self.nodes[i])
    }
}

fn check_order(order: usize, what: &str) -> Result<()> {
    if order < 1 {
        return Err(Error::InvalidArgument(format!("{what} must be at least 1")));
    }
    Ok(())
}

/// Quadrature cells of one side for error integrands: split at the approx
/// mesh nodes and the exact density's breakpoints and singular onsets.
fn error_cells(
    err: &DensityError,
    side: Side,
    max_phase: Option<f64>,
) -> Vec<crate::quadrature::Cell> {
    let mesh = err.approx.mesh();
    let horizon = mesh.horizon();
    let mut cuts = mesh.side(side).nodes().to_vec();
    cuts.extend_from_slice(err.exact.breakpoints(side));
    cuts.extend_from_slice(err.exact.singularities(side));
    split_cells(
        0.0,
        horizon,
        &cuts,
        err.exact.singularities(side),
        max_phase,
        mesh.node_tolerance(),
    )
}

/// Dual norm of the density error through the Riesz-representer kernel
/// `T - max(t, s)`: equals the L2 norm of the running-integral difference,
/// integrated with `quad_order` Gauss points per cell and a power
/// substitution on cells whose left end touches a singular onset.
pub fn dual_norm_green(err: &DensityError, quad_order: usize) -> Result<f64> {
    check_order(quad_order, "quadrature order")?;
    let mut total = 0.0;
    for side in Side::BOTH {
        let approx_cum = CumulativePc::build(&err.approx, side);
        for cell in error_cells(err, side, None) {
            total += cell.integrate(quad_order, |t| {
                let e = err.exact.cumulative(side, t) - approx_cum.eval(t);
                e * e
            });
        }
    }
    Ok(total.sqrt())
}

/// Dual norm of the density error through the truncated cosine expansion:
/// `(2/T) sum_k alpha_k^{-2} <e, cos(alpha_k .)>^2` per side.
///
/// Moments of the piecewise-constant part are closed form. Moments of the
/// exact part integrate the running integral against `sin(alpha_k t)`
/// (boundary terms vanish since `cos(alpha_k T) = 0`), on phase-limited
/// cells, so no pointwise density values are needed.
pub fn dual_norm_spectral(err: &DensityError, modes: usize) -> Result<f64> {
    check_order(modes, "mode count")?;
    let mesh = err.approx.mesh();
    let horizon = mesh.horizon();
    let exact_is_zero = err.exact.is_zero();
    let mut total = 0.0;
    for side in Side::BOTH {
        let nodes = mesh.side(side).nodes();
        let coeffs = err.approx.coeffs(side);
        for k in 0..modes {
            let alpha = mode_frequency(k, horizon);
            // Closed-form cosine moments of the approximation.
            let mut approx_moment = 0.0;
            let mut sin_prev = 0.0; // sin(alpha * 0)
            for (i, &c) in coeffs.iter().enumerate() {
                let sin_next = (alpha * nodes[i + 1]).sin();
                approx_moment += c * (sin_next - sin_prev);
                sin_prev = sin_next;
            }
            approx_moment /= alpha;
            let exact_moment = if exact_is_zero {
                0.0
            } else {
                let cells = error_cells(err, side, Some(alpha));
                let integral: f64 = cells
                    .iter()
                    .map(|cell| {
                        cell.integrate(16, |t| err.exact.cumulative(side, t) * (alpha * t).sin())
                    })
                    .sum();
                alpha * integral
            };
            let m = exact_moment - approx_moment;
            total += 2.0 / horizon * m * m / (alpha * alpha);
        }
    }
    Ok(total.sqrt())
}

/// L2 norm over both sides of a piecewise-constant density.
pub fn l2_norm(p: &PiecewiseConstant) -> f64 {
    let mut total = 0.0;
    for side in Side::BOTH {
        let mesh = p.mesh().side(side);
        for (i, &c) in p.coeffs(side).iter().enumerate() {
            total += mesh.element_len(i) * c * c;
        }
    }
    total.sqrt()
}

/// L2 norm of the density error. Infinite when the exact density is not
/// square integrable; requires pointwise density values otherwise.
pub fn l2_error(err: &DensityError, quad_order: usize) -> Result<f64> {
    check_order(quad_order, "quadrature order")?;
    if !err.exact.is_square_integrable() {
        return Ok(f64::INFINITY);
    }
    if !err.exact.has_pointwise_density() {
        return Err(Error::InvalidArgument(
            "exact density lacks pointwise values for the L2 error".into(),
        ));
    }
    let mut total = 0.0;
    for side in Side::BOTH {
        for cell in error_cells(err, side, None) {
            let mid = 0.5 * (cell.a + cell.b);
            let approx = err.approx.eval(side, mid);
            total += cell.integrate(quad_order, |t| {
                let e = err.exact.density(side, t).unwrap() - approx;
                e * e
            });
        }
    }
    Ok(total.sqrt())
}

/// Squared indicator contributions per coarse element: the fine-mesh dual
/// residual's squared L2 mass, aggregated over the fine elements inside each
/// coarse element. The contributions sum to the squared L2 norm of the
/// residual.
pub fn local_indicator(p: &PiecewiseConstant, coarse: &LateralMesh) -> Result<Vec<f64>> {
    let map = nesting_map(p.mesh(), coarse)?;
    let mut eta_sq = vec![0.0; coarse.n_dofs()];
    for side in Side::BOTH {
        let mesh = p.mesh().side(side);
        for (k, &c) in p.coeffs(side).iter().enumerate() {
            let parent = map[side.index()][k];
            eta_sq[coarse.global_index(side, parent)] += mesh.element_len(k) * c * c;
        }
    }
    Ok(eta_sq)
}
