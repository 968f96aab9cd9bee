//! Reference Dirichlet data on the strip `(0,3) x (0,6)` with closed-form
//! exact densities.
//!
//! All three data sets satisfy the shift identity `g(0, t-L) = g(L, t)`,
//! which makes the density `2 dt g(0,.)` supported on the side `x=0` the
//! exact solution of the first-kind equation. The third set has a fractional
//! power onset whose density is integrable but not square integrable.

use crate::kernel::{ExactDensity, SideFunction};
use crate::{Error, Formulation, Result, Side};
use std::f64::consts::PI;
use std::sync::Arc;

/// Identifier of a benchmark data set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// Compactly supported polynomial bump, smooth density.
    G1,
    /// Rectified sine wave, density with jumps at integer times.
    G2,
    /// Fractional power onset `t^{1/4}`, density not square integrable.
    G3,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::G1, CaseId::G2, CaseId::G3];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::G1 => "g1",
            CaseId::G2 => "g2",
            CaseId::G3 => "g3",
        }
    }
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g1" => Ok(CaseId::G1),
            "g2" => Ok(CaseId::G2),
            "g3" => Ok(CaseId::G3),
            other => Err(Error::InvalidArgument(format!(
                "unknown case '{other}' (expected g1, g2 or g3)"
            ))),
        }
    }
}

/// Quantity selected by [`eval_case`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalTarget {
    /// The Dirichlet datum itself.
    G,
    /// Its a.e. time derivative.
    DtG,
    /// The running integral of the exact density.
    ExactDensityCumulative,
}

/// One benchmark problem: geometry plus closed-form data and densities.
#[derive(Clone, Copy, Debug)]
pub struct BenchmarkCase {
    id: CaseId,
}

const LENGTH: f64 = 3.0;
const HORIZON: f64 = 6.0;

impl BenchmarkCase {
    pub fn new(id: CaseId) -> Self {
        BenchmarkCase { id }
    }

    pub fn id(&self) -> CaseId {
        self.id
    }

    pub fn length(&self) -> f64 {
        LENGTH
    }

    pub fn horizon(&self) -> f64 {
        HORIZON
    }

    /// The Dirichlet data with a.e. derivatives and quadrature metadata.
    pub fn dirichlet(&self) -> SideFunction {
        match self.id {
            CaseId::G1 => SideFunction::new(g1_side0, g1_side_l)
                .with_derivatives(dt_g1_side0, dt_g1_side_l)
                .with_breakpoints(vec![2.0], vec![3.0, 5.0]),
            CaseId::G2 => SideFunction::new(g2_side0, g2_side_l)
                .with_derivatives(dt_g2_side0, dt_g2_side_l)
                .with_breakpoints(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![3.0, 4.0, 5.0]),
            CaseId::G3 => SideFunction::new(g3_side0, g3_side_l)
                .with_derivatives(dt_g3_side0, dt_g3_side_l)
                .with_breakpoints(vec![], vec![3.0])
                .with_singularities(vec![0.0], vec![3.0]),
        }
    }

    /// Exact density of the indirect equation: `2 dt g(0,.)` on the side
    /// `x=0`, zero on `x=L`; the running integral is `2 g(0,.)`.
    pub fn exact_density(&self) -> ExactDensity {
        match self.id {
            CaseId::G1 => ExactDensity::new(
                Some(Arc::new(|t| 2.0 * dt_g1_side0(t))),
                Some(Arc::new(|_| 0.0)),
                |t| 2.0 * g1_side0(t),
                |_| 0.0,
            )
            .with_breakpoints(vec![2.0], vec![]),
            CaseId::G2 => ExactDensity::new(
                Some(Arc::new(|t| 2.0 * dt_g2_side0(t))),
                Some(Arc::new(|_| 0.0)),
                |t| 2.0 * g2_side0(t),
                |_| 0.0,
            )
            .with_breakpoints(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![]),
            CaseId::G3 => ExactDensity::new(
                Some(Arc::new(|t| 2.0 * dt_g3_side0(t))),
                Some(Arc::new(|_| 0.0)),
                |t| 2.0 * g3_side0(t),
                |_| 0.0,
            )
            .with_singularities(vec![0.0], vec![])
            .not_square_integrable(),
        }
    }

    /// Exact density of the direct equation with right-hand side
    /// `(1/2 I + K) g`: `dt g(0, t)` on `x=0` and `-dt g(0, t-L)` on `x=L`,
    /// derived from the shift identity of the benchmark data.
    pub fn exact_direct_density(&self) -> ExactDensity {
        match self.id {
            CaseId::G1 => ExactDensity::new(
                Some(Arc::new(dt_g1_side0)),
                Some(Arc::new(|t| -dt_g1_side0(t - LENGTH))),
                g1_side0,
                |t| -g1_side0(t - LENGTH),
            )
            .with_breakpoints(vec![2.0], vec![3.0, 5.0]),
            CaseId::G2 => ExactDensity::new(
                Some(Arc::new(dt_g2_side0)),
                Some(Arc::new(|t| -dt_g2_side0(t - LENGTH))),
                g2_side0,
                |t| -g2_side0(t - LENGTH),
            )
            .with_breakpoints(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![3.0, 4.0, 5.0]),
            CaseId::G3 => ExactDensity::new(
                Some(Arc::new(dt_g3_side0)),
                Some(Arc::new(|t| -dt_g3_side0(t - LENGTH))),
                g3_side0,
                |t| -g3_side0(t - LENGTH),
            )
            .with_breakpoints(vec![], vec![3.0])
            .with_singularities(vec![0.0], vec![3.0])
            .not_square_integrable(),
        }
    }

    /// Exact density matching the equation a formulation discretizes: the
    /// direct equation has its own density, the indirect ones share theirs.
    pub fn exact_density_for(&self, formulation: Formulation) -> ExactDensity {
        match formulation {
            Formulation::DirectEnergetic => self.exact_direct_density(),
            _ => self.exact_density(),
        }
    }
}

// Case 1: polynomial bump.

fn g1_side0(t: f64) -> f64 {
    if (0.0..=2.0).contains(&t) {
        0.5 * (t - 2.0).powi(3) * (-t).powi(3)
    } else {
        0.0
    }
}

fn g1_side_l(t: f64) -> f64 {
    if (LENGTH..=LENGTH + 2.0).contains(&t) {
        0.5 * (t - 5.0).powi(3) * (3.0 - t).powi(3)
    } else {
        0.0
    }
}

fn dt_g1_side0(t: f64) -> f64 {
    if (0.0..=2.0).contains(&t) {
        3.0 * t * t * (2.0 - t) * (2.0 - t) * (1.0 - t)
    } else {
        0.0
    }
}

fn dt_g1_side_l(t: f64) -> f64 {
    if (LENGTH..=LENGTH + 2.0).contains(&t) {
        let s = t - LENGTH;
        3.0 * s * s * (2.0 - s) * (2.0 - s) * (1.0 - s)
    } else {
        0.0
    }
}

// Case 2: rectified sine.

fn g2_side0(t: f64) -> f64 {
    if t >= 0.0 {
        0.5 * (-PI * t).sin().abs()
    } else {
        0.0
    }
}

fn g2_side_l(t: f64) -> f64 {
    if t >= LENGTH {
        0.5 * (PI * (LENGTH - t)).sin().abs()
    } else {
        0.0
    }
}

fn dt_g2_side0(t: f64) -> f64 {
    if t >= 0.0 {
        let s = (PI * t).sin();
        0.5 * PI * (PI * t).cos() * s.signum() * ((s != 0.0) as u8 as f64)
    } else {
        0.0
    }
}

fn dt_g2_side_l(t: f64) -> f64 {
    if t >= LENGTH {
        dt_g2_side0(t - LENGTH)
    } else {
        0.0
    }
}

// Case 3: fractional power onset.

fn g3_side0(t: f64) -> f64 {
    if t >= 0.0 {
        t.powf(0.25)
    } else {
        0.0
    }
}

fn g3_side_l(t: f64) -> f64 {
    if t >= LENGTH {
        (t - LENGTH).powf(0.25)
    } else {
        0.0
    }
}

fn dt_g3_side0(t: f64) -> f64 {
    if t > 0.0 {
        0.25 * t.powf(-0.75)
    } else {
        0.0
    }
}

fn dt_g3_side_l(t: f64) -> f64 {
    if t > LENGTH {
        0.25 * (t - LENGTH).powf(-0.75)
    } else {
        0.0
    }
}

/// Closed-form evaluation of benchmark quantities.
pub fn eval_case(id: CaseId, which: EvalTarget, side: Side, t: f64) -> Result<f64> {
    if !(0.0..=HORIZON).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {HORIZON}]"
        )));
    }
    let case = BenchmarkCase::new(id);
    match which {
        EvalTarget::G => Ok(case.dirichlet().eval(side, t)),
        EvalTarget::DtG => case
            .dirichlet()
            .eval_dt(side, t)
            .ok_or_else(|| Error::InvalidArgument("case has no registered derivative".into())),
        EvalTarget::ExactDensityCumulative => Ok(case.exact_density().cumulative(side, t)),
    }
}
