//! Closed-form pointwise application of the 1D wave boundary integral
//! operators.
//!
//! In one spatial dimension the single layer operator reduces to causal
//! running integrals with a cross coupling shifted by the domain length `L`:
//! on either side, `(V w)(t) = 1/2 int_0^t w_same + 1/2 int_0^{t-L} w_other`.
//! Everything in this module evaluates such expressions exactly for
//! piecewise-constant densities; no quadrature is involved.

use crate::mesh::LateralMesh;
use crate::{Error, Result, Side};
use std::sync::Arc;

type SideFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A piecewise-constant density over a lateral mesh, one coefficient per
/// element per side.
#[derive(Clone, Debug)]
pub struct PiecewiseConstant {
    mesh: LateralMesh,
    coeffs: [Vec<f64>; 2],
}

impl PiecewiseConstant {
    pub fn new(mesh: LateralMesh, coeffs0: Vec<f64>, coeffs_l: Vec<f64>) -> Result<Self> {
        if coeffs0.len() != mesh.side(Side::X0).n_elements()
            || coeffs_l.len() != mesh.side(Side::XL).n_elements()
        {
            return Err(Error::InvalidArgument(format!(
                "coefficient lengths ({}, {}) do not match element counts ({}, {})",
                coeffs0.len(),
                coeffs_l.len(),
                mesh.side(Side::X0).n_elements(),
                mesh.side(Side::XL).n_elements()
            )));
        }
        Ok(PiecewiseConstant {
            mesh,
            coeffs: [coeffs0, coeffs_l],
        })
    }

    pub fn zero(mesh: LateralMesh) -> Self {
        let c0 = vec![0.0; mesh.side(Side::X0).n_elements()];
        let cl = vec![0.0; mesh.side(Side::XL).n_elements()];
        PiecewiseConstant {
            mesh,
            coeffs: [c0, cl],
        }
    }

    pub fn constant(mesh: LateralMesh, value0: f64, value_l: f64) -> Self {
        let c0 = vec![value0; mesh.side(Side::X0).n_elements()];
        let cl = vec![value_l; mesh.side(Side::XL).n_elements()];
        PiecewiseConstant {
            mesh,
            coeffs: [c0, cl],
        }
    }

    /// Builds from a global coefficient vector in mesh degree-of-freedom
    /// order (side `x=0` block first).
    pub fn from_dofs(mesh: LateralMesh, dofs: &[f64]) -> Result<Self> {
        if dofs.len() != mesh.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                mesh.n_dofs(),
                dofs.len()
            )));
        }
        let n0 = mesh.side(Side::X0).n_elements();
        PiecewiseConstant::new(mesh, dofs[..n0].to_vec(), dofs[n0..].to_vec())
    }

    pub fn mesh(&self) -> &LateralMesh {
        &self.mesh
    }

    pub fn coeffs(&self, side: Side) -> &[f64] {
        &self.coeffs[side.index()]
    }

    /// Global coefficient vector in mesh degree-of-freedom order.
    pub fn dofs(&self) -> Vec<f64> {
        let mut out = self.coeffs[0].clone();
        out.extend_from_slice(&self.coeffs[1]);
        out
    }

    /// Right-continuous evaluation; `t = T` uses the last element.
    pub fn eval(&self, side: Side, t: f64) -> f64 {
        let idx = self.mesh.side(side).element_containing(t);
        self.coeffs[side.index()][idx]
    }

    /// Exact running integral `int_0^t` of the density on one side;
    /// zero for `t <= 0`, clamped at `t >= T`.
    pub fn cumulative(&self, side: Side, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mesh = self.mesh.side(side);
        let mut acc = 0.0;
        for (i, &c) in self.coeffs[side.index()].iter().enumerate() {
            let (a, b) = mesh.element(i);
            if t <= a {
                break;
            }
            acc += c * (t.min(b) - a);
        }
        acc
    }
}

/// Dirichlet-type data on the lateral boundary: one function of time per
/// side, an optional a.e. time derivative, and quadrature metadata.
#[derive(Clone)]
pub struct SideFunction {
    values: [SideFn; 2],
    derivatives: [Option<SideFn>; 2],
    /// Interior times at which the function or its derivative has a kink or
    /// jump; quadrature cells are split here.
    breakpoints: [Vec<f64>; 2],
    /// Times at which the derivative has an integrable power singularity
    /// (slice onsets of the fractional benchmark data).
    singularities: [Vec<f64>; 2],
}

impl SideFunction {
    pub fn new(
        f0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fl: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SideFunction {
            values: [Arc::new(f0), Arc::new(fl)],
            derivatives: [None, None],
            breakpoints: [Vec::new(), Vec::new()],
            singularities: [Vec::new(), Vec::new()],
        }
    }

    pub fn zero() -> Self {
        SideFunction::new(|_| 0.0, |_| 0.0).with_derivatives(|_| 0.0, |_| 0.0)
    }

    pub fn with_derivatives(
        mut self,
        df0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dfl: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = [Some(Arc::new(df0)), Some(Arc::new(dfl))];
        self
    }

    pub fn with_breakpoints(mut self, side0: Vec<f64>, side_l: Vec<f64>) -> Self {
        self.breakpoints = [side0, side_l];
        self
    }

    pub fn with_singularities(mut self, side0: Vec<f64>, side_l: Vec<f64>) -> Self {
        self.singularities = [side0, side_l];
        self
    }

    pub fn eval(&self, side: Side, t: f64) -> f64 {
        (self.values[side.index()])(t)
    }

    /// A.e. time derivative; `None` when no derivative was registered.
    pub fn eval_dt(&self, side: Side, t: f64) -> Option<f64> {
        self.derivatives[side.index()].as_ref().map(|f| f(t))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivatives.iter().all(|d| d.is_some())
    }

    pub fn breakpoints(&self, side: Side) -> &[f64] {
        &self.breakpoints[side.index()]
    }

    pub fn singularities(&self, side: Side) -> &[f64] {
        &self.singularities[side.index()]
    }
}

/// A closed-form density with its exact running integral, used for error
/// measurement against discrete solutions.
///
/// The pointwise density may be absent on a side when it is too singular to
/// sample (the `t^{-3/4}` benchmark); the cumulative integral is always
/// available and is what the dual-norm routines consume.
#[derive(Clone)]
pub struct ExactDensity {
    density: [Option<SideFn>; 2],
    cumulative: [SideFn; 2],
    breakpoints: [Vec<f64>; 2],
    singularities: [Vec<f64>; 2],
    square_integrable: bool,
    is_zero: bool,
}

impl ExactDensity {
    pub fn new(
        density0: Option<SideFn>,
        density_l: Option<SideFn>,
        cumulative0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cumulative_l: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ExactDensity {
            density: [density0, density_l],
            cumulative: [Arc::new(cumulative0), Arc::new(cumulative_l)],
            breakpoints: [Vec::new(), Vec::new()],
            singularities: [Vec::new(), Vec::new()],
            square_integrable: true,
            is_zero: false,
        }
    }

    pub fn zero() -> Self {
        let mut z = ExactDensity::new(
            Some(Arc::new(|_| 0.0)),
            Some(Arc::new(|_| 0.0)),
            |_| 0.0,
            |_| 0.0,
        );
        z.is_zero = true;
        z
    }

    /// Whether this is the zero density; norm routines then skip its
    /// quadrature terms entirely.
    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    pub fn with_breakpoints(mut self, side0: Vec<f64>, side_l: Vec<f64>) -> Self {
        self.breakpoints = [side0, side_l];
        self
    }

    pub fn with_singularities(mut self, side0: Vec<f64>, side_l: Vec<f64>) -> Self {
        self.singularities = [side0, side_l];
        self
    }

    pub fn not_square_integrable(mut self) -> Self {
        self.square_integrable = false;
        self
    }

    pub fn is_square_integrable(&self) -> bool {
        self.square_integrable
    }

    /// Pointwise density on a side, when it admits pointwise sampling.
    pub fn density(&self, side: Side, t: f64) -> Option<f64> {
        self.density[side.index()].as_ref().map(|f| f(t))
    }

    pub fn has_pointwise_density(&self) -> bool {
        self.density.iter().all(|d| d.is_some())
    }

    /// Exact running integral `int_0^t` of the density; zero for `t <= 0`.
    pub fn cumulative(&self, side: Side, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (self.cumulative[side.index()])(t)
        }
    }

    pub fn breakpoints(&self, side: Side) -> &[f64] {
        &self.breakpoints[side.index()]
    }

    pub fn singularities(&self, side: Side) -> &[f64] {
        &self.singularities[side.index()]
    }
}

fn check_time_in_horizon(t: f64, horizon: f64) -> Result<()> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {horizon}]"
        )));
    }
    Ok(())
}

/// Trace of the single layer potential on one side:
/// `1/2 int_0^t w_same + 1/2 int_0^{t-L} w_other`.
///
/// Continuous and piecewise linear in `t`; evaluated from exact cumulative
/// element sums.
pub fn apply_v(w: &PiecewiseConstant, side: Side, t: f64) -> Result<f64> {
    check_time_in_horizon(t, w.mesh().horizon())?;
    let shifted = t - w.mesh().length();
    Ok(0.5 * w.cumulative(side, t) + 0.5 * w.cumulative(side.opposite(), shifted))
}

/// Time derivative of the single layer trace:
/// `1/2 w_same(t) + 1/2 w_other(t - L)`, with right-continuous evaluation at
/// element nodes. The shifted term vanishes for `t < L`.
pub fn apply_dtv(w: &PiecewiseConstant, side: Side, t: f64) -> Result<f64> {
    check_time_in_horizon(t, w.mesh().horizon())?;
    let mut val = 0.5 * w.eval(side, t);
    let shifted = t - w.mesh().length();
    if shifted >= 0.0 {
        val += 0.5 * w.eval(side.opposite(), shifted);
    }
    Ok(val)
}

/// Double layer operator for data vanishing outside the lateral boundary:
/// `(K g)(side, t) = -1/2 g(other side, t - L)`, zero for `t < L`.
pub fn apply_k(g: &SideFunction, side: Side, t: f64, length: f64) -> f64 {
    let shifted = t - length;
    if shifted < 0.0 {
        0.0
    } else {
        -0.5 * g.eval(side.opposite(), shifted)
    }
}

/// Single layer potential in the interior of the space-time strip:
/// `u(x,t) = 1/2 int_0^{t-|x|} w_0 + 1/2 int_0^{t-|x-L|} w_L`.
pub fn potential_eval(w: &PiecewiseConstant, x: f64, t: f64) -> Result<f64> {
    let length = w.mesh().length();
    if !(0.0..=length).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "spatial point {x} outside [0, {length}]"
        )));
    }
    check_time_in_horizon(t, w.mesh().horizon())?;
    Ok(0.5 * w.cumulative(Side::X0, t - x) + 0.5 * w.cumulative(Side::XL, t - (length - x)))
}

/// Modified Hilbert transform at coefficient level: maps the expansion of a
/// function in the sine basis `sin(alpha_k t)`, `alpha_k = (pi/2 + k pi)/T`,
/// to the value of the corresponding cosine series at `t`.
pub fn apply_mht_coeffs(sine_coeffs: &[f64], t: f64, horizon: f64) -> f64 {
    sine_coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (mode_frequency(k, horizon) * t).cos())
        .sum()
}

/// Frequency of the k-th basis mode, `alpha_k = (pi/2 + k pi) / T`.
pub fn mode_frequency(k: usize, horizon: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI) / horizon
}

/// Single layer trace of a closed-form density, evaluated from its exact
/// cumulative integral.
pub fn apply_v_exact(density: &ExactDensity, length: f64, side: Side, t: f64) -> f64 {
    0.5 * density.cumulative(side, t) + 0.5 * density.cumulative(side.opposite(), t - length)
}
