//! Indicator-driven adaptive refinement of the coarse density mesh.
//!
//! Each iteration solves the mixed system on the current coarse mesh nested
//! into its m-subdivision, localizes the squared L2 mass of the dual
//! residual onto coarse elements, bulk-marks the largest contributions and
//! bisects them. The constrained variant re-closes the mesh under the
//! side-to-side time shift after every refinement, which preserves the
//! discrete stability identity that non-closed meshes lose.

use crate::assembly::{assemble_system, AssemblyOptions};
use crate::kernel::{ExactDensity, SideFunction};
use crate::mesh::{subdivide, LateralMesh};
use crate::norms::{dual_norm_green, l2_error, local_indicator, DensityError};
use crate::solver::solve_mixed;
use crate::{Error, Formulation, Result, Side};

/// Parameters of the adaptive loop.
#[derive(Clone, Debug)]
pub struct AdaptiveConfig {
    /// Bulk marking fraction in (0, 1).
    pub theta: f64,
    pub max_iters: usize,
    /// Nesting factor between the density mesh and the residual mesh.
    pub m: usize,
    /// Re-close the mesh under the time shift after each refinement.
    pub constrained: bool,
    pub formulation: Formulation,
    /// Stop once the coarse mesh exceeds this many degrees of freedom.
    pub dof_cap: usize,
    pub assembly: AssemblyOptions,
    /// Gauss points per cell for error norms along the trace.
    pub norm_quad_order: usize,
}

impl AdaptiveConfig {
    pub fn new(formulation: Formulation, m: usize) -> Self {
        AdaptiveConfig {
            theta: 0.5,
            max_iters: 15,
            m,
            constrained: false,
            formulation,
            dof_cap: 20_000,
            assembly: AssemblyOptions::default(),
            norm_quad_order: 16,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "marking fraction must lie in (0,1), got {}",
                self.theta
            )));
        }
        if self.m < 1 || self.max_iters < 1 {
            return Err(Error::InvalidArgument(
                "need m >= 1 and at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// One row of a refinement study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRecord {
    /// Iteration or level number, starting at 1.
    pub level: usize,
    pub dofs_coarse: usize,
    pub dofs_fine: usize,
    /// L2 norm of the dual residual.
    pub indicator: f64,
    /// Dual-norm error against the exact density; NaN when unknown.
    pub error_dual: f64,
    /// L2 error; NaN when unknown, infinite for non-square-integrable
    /// exact densities.
    pub error_l2: f64,
    /// Running fitted rate of the dual error (indicator when no exact
    /// density is available) against coarse DoFs; NaN for the first rows.
    pub rate: f64,
}

/// Outcome of the adaptive loop: per-iteration records plus the mesh each
/// iteration solved on.
#[derive(Clone, Debug)]
pub struct AdaptiveTrace {
    pub records: Vec<ConvergenceRecord>,
    pub meshes: Vec<LateralMesh>,
    /// True when the loop stopped early on a singular Schur complement.
    pub failed: bool,
    pub constrained: bool,
}

/// Smallest marked set, in descending indicator order, whose squared mass
/// reaches `theta` times the total. Ties resolve to the side `x=0` block
/// first and then to earlier elements, which the global ordering encodes.
pub fn dorfler_mark(eta_sq: &[f64], coarse: &LateralMesh, theta: f64) -> Vec<(Side, usize)> {
    let total: f64 = eta_sq.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].partial_cmp(&eta_sq[a]).unwrap().then(a.cmp(&b)));
    let n0 = coarse.side(Side::X0).n_elements();
    let mut marked = Vec::new();
    let mut acc = 0.0;
    for idx in order {
        marked.push(if idx < n0 {
            (Side::X0, idx)
        } else {
            (Side::XL, idx - n0)
        });
        acc += eta_sq[idx];
        if acc >= theta * total {
            break;
        }
    }
    marked
}

/// Runs the adaptive loop and records one row per iteration. A singular
/// solve ends the trace early with its failure flag set.
pub fn adapt(
    g: &SideFunction,
    exact: Option<&ExactDensity>,
    initial: &LateralMesh,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveTrace> {
    cfg.validate()?;
    let mut coarse = initial.clone();
    let mut trace = AdaptiveTrace {
        records: Vec::new(),
        meshes: Vec::new(),
        failed: false,
        constrained: cfg.constrained,
    };
    for iter in 1..=cfg.max_iters {
        let pair = subdivide(&coarse, cfg.m)?;
        let sys = assemble_system(&pair, g, cfg.formulation, &cfg.assembly)?;
        let sol = match solve_mixed(&sys) {
            Ok(sol) => sol,
            Err(Error::SingularSystem { .. }) => {
                trace.failed = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let eta_sq = local_indicator(&sol.residual, &coarse)?;
        let total_sq: f64 = eta_sq.iter().sum();
        let (error_dual, error_l2) = match exact {
            Some(exact) => {
                let err = DensityError::new(exact.clone(), sol.density.clone());
                (
                    dual_norm_green(&err, cfg.norm_quad_order)?,
                    l2_error(&err, cfg.norm_quad_order)?,
                )
            }
            None => (f64::NAN, f64::NAN),
        };
        trace.records.push(ConvergenceRecord {
            level: iter,
            dofs_coarse: coarse.n_dofs(),
            dofs_fine: pair.fine().n_dofs(),
            indicator: total_sq.sqrt(),
            error_dual,
            error_l2,
            rate: f64::NAN,
        });
        trace.meshes.push(coarse.clone());
        if total_sq <= 0.0 || coarse.n_dofs() > cfg.dof_cap {
            break;
        }
        if iter < cfg.max_iters {
            let marked = dorfler_mark(&eta_sq, &coarse, cfg.theta);
            coarse = coarse.refine_marked(&marked)?;
            if cfg.constrained {
                coarse = coarse.enforce_shift_constraint();
            }
        }
    }
    fill_running_rates(&mut trace.records, exact.is_some());
    Ok(trace)
}

/// Fills the running fitted rate of each record from the rows seen so far.
pub(crate) fn fill_running_rates(records: &mut [ConvergenceRecord], use_error: bool) {
    for i in 0..records.len() {
        let pts: Vec<(f64, f64)> = records[..=i]
            .iter()
            .map(|r| {
                let e = if use_error { r.error_dual } else { r.indicator };
                (r.dofs_coarse as f64, e)
            })
            .collect();
        if let Ok(rate) = fit_rate(&pts) {
            records[i].rate = rate;
        }
    }
}

/// Least-squares convergence rate: the negated slope of log(error) against
/// log(DoFs). Needs at least three points with positive finite error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0 && e.is_finite())
        .map(|&(d, e)| (d.ln(), e.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 usable records, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mean_x: f64 = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y: f64 = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    let sxy: f64 = usable
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    Ok(-sxy / sxx)
}
