//! Benchmark studies: uniform and adaptive convergence runs and the
//! stability-constant sweep, with plot-ready CSV output.

use crate::adaptivity::{
    adapt, fill_running_rates, fit_rate, AdaptiveConfig, AdaptiveTrace, ConvergenceRecord,
};
use crate::assembly::{assemble_system, AssemblyOptions, DualMassMatrix, GalerkinSystem};
use crate::benchmarks::{BenchmarkCase, CaseId};
use crate::mesh::{subdivide, LateralMesh};
use crate::norms::{dual_norm_green, l2_error, l2_norm, DensityError};
use crate::solver::{discrete_inf_sup, solve_mixed, InfSupReport};
use crate::{Error, Formulation, Result};
use std::io::Write;

/// Mesh refinement strategy of a study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refinement {
    /// Uniform meshes with the element count doubling per level.
    Uniform,
    /// Adaptive loop with the shift closure enforced each iteration.
    AdaptiveConstrained,
    /// Adaptive loop without the mesh constraint.
    AdaptiveNonconstrained,
}

impl std::str::FromStr for Refinement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Refinement::Uniform),
            "adaptive-constrained" => Ok(Refinement::AdaptiveConstrained),
            "adaptive-nonconstrained" => Ok(Refinement::AdaptiveNonconstrained),
            other => Err(Error::InvalidArgument(format!(
                "unknown refinement '{other}'"
            ))),
        }
    }
}

/// Full description of one study run.
#[derive(Clone, Debug)]
pub struct StudySpec {
    pub case: CaseId,
    pub formulation: Formulation,
    pub refinement: Refinement,
    /// Nesting factor between density and residual meshes.
    pub m: usize,
    /// Level count (uniform) or iteration count (adaptive).
    pub levels: usize,
    /// Bulk marking fraction for adaptive runs.
    pub theta: f64,
    /// Elements per side of the coarsest mesh. The default of 8 on the
    /// horizon 6 puts nodes on every slice boundary, as the stability
    /// theory assumes.
    pub initial_elements: usize,
    pub assembly: AssemblyOptions,
    pub norm_quad_order: usize,
}

impl StudySpec {
    pub fn new(case: CaseId, formulation: Formulation, m: usize) -> Self {
        StudySpec {
            case,
            formulation,
            refinement: Refinement::Uniform,
            m,
            levels: 6,
            theta: 0.5,
            initial_elements: 8,
            assembly: AssemblyOptions::default(),
            norm_quad_order: 16,
        }
    }

    /// Checks hard preconditions and returns soft warnings about parameter
    /// choices outside the reliable regime of the indicator.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.levels < 1 || self.initial_elements < 1 || self.m < 1 {
            return Err(Error::InvalidArgument(
                "levels, initial elements and m must be at least 1".into(),
            ));
        }
        let mut warnings = Vec::new();
        if self.formulation == Formulation::Standard && self.m < 3 {
            warnings.push(format!(
                "standard formulation with m={} is outside the stability theory (m > 2); \
                 the residual is not a reliable error indicator",
                self.m
            ));
        } else if self.m < 2 {
            warnings.push(format!(
                "m={} leaves no nesting between density and residual meshes; \
                 the indicator degenerates",
                self.m
            ));
        }
        Ok(warnings)
    }
}

/// Uniform convergence study: one record per level, element count doubling
/// each level. A singular solve is recorded as a NaN row and the study
/// continues on the next level.
pub fn run_convergence(spec: &StudySpec) -> Result<Vec<ConvergenceRecord>> {
    spec.validate()?;
    if spec.refinement != Refinement::Uniform {
        return Ok(run_adaptive(spec)?.records);
    }
    let case = BenchmarkCase::new(spec.case);
    let g = case.dirichlet();
    let exact = case.exact_density_for(spec.formulation);
    let mut records = Vec::with_capacity(spec.levels);
    for level in 0..spec.levels {
        let elements = spec.initial_elements << level;
        let coarse = LateralMesh::uniform(case.length(), case.horizon(), elements)?;
        let pair = subdivide(&coarse, spec.m)?;
        let sys = assemble_system(&pair, &g, spec.formulation, &spec.assembly)?;
        let record = match solve_mixed(&sys) {
            Ok(sol) => {
                let err = DensityError::new(exact.clone(), sol.density.clone());
                ConvergenceRecord {
                    level: level + 1,
                    dofs_coarse: coarse.n_dofs(),
                    dofs_fine: pair.fine().n_dofs(),
                    indicator: l2_norm(&sol.residual),
                    error_dual: dual_norm_green(&err, spec.norm_quad_order)?,
                    error_l2: l2_error(&err, spec.norm_quad_order)?,
                    rate: f64::NAN,
                }
            }
            Err(Error::SingularSystem { .. }) => ConvergenceRecord {
                level: level + 1,
                dofs_coarse: coarse.n_dofs(),
                dofs_fine: pair.fine().n_dofs(),
                indicator: f64::NAN,
                error_dual: f64::NAN,
                error_l2: f64::NAN,
                rate: f64::NAN,
            },
            Err(e) => return Err(e),
        };
        records.push(record);
    }
    fill_running_rates(&mut records, true);
    Ok(records)
}

/// Adaptive study for the spec's case and marking parameters.
pub fn run_adaptive(spec: &StudySpec) -> Result<AdaptiveTrace> {
    spec.validate()?;
    let constrained = match spec.refinement {
        Refinement::AdaptiveConstrained => true,
        Refinement::AdaptiveNonconstrained => false,
        Refinement::Uniform => {
            return Err(Error::InvalidArgument(
                "adaptive run requested with uniform refinement".into(),
            ))
        }
    };
    let case = BenchmarkCase::new(spec.case);
    let initial = LateralMesh::uniform(case.length(), case.horizon(), spec.initial_elements)?;
    let exact = case.exact_density_for(spec.formulation);
    let cfg = AdaptiveConfig {
        theta: spec.theta,
        max_iters: spec.levels,
        m: spec.m,
        constrained,
        formulation: spec.formulation,
        dof_cap: 20_000,
        assembly: spec.assembly,
        norm_quad_order: spec.norm_quad_order,
    };
    adapt(&case.dirichlet(), Some(&exact), &initial, &cfg)
}

/// Overall fitted rate of a finished study, from the dual-norm errors.
pub fn study_rate(records: &[ConvergenceRecord]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.dofs_coarse as f64, r.error_dual))
        .collect();
    fit_rate(&pts)
}

/// Overall fitted rate of the indicator of a finished study.
pub fn indicator_rate(records: &[ConvergenceRecord]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.dofs_coarse as f64, r.indicator))
        .collect();
    fit_rate(&pts)
}

/// Stability-constant sweep: for `n = 1..=n_max` builds the uniform mesh
/// with `per_slice_elements` elements per slice per side on the horizon
/// `n * length` and computes the discrete inf-sup constant.
///
/// Formulations posed in L2 (the time-differentiated ones) measure the
/// denominator in the L2 Gram matrix; the others use the dual-norm Gram
/// matrix.
pub fn run_infsup_study(
    formulation: Formulation,
    m: usize,
    n_max: usize,
    per_slice_elements: usize,
    length: f64,
) -> Result<Vec<InfSupReport>> {
    if per_slice_elements < 1 || n_max < 1 {
        return Err(Error::InvalidArgument(
            "need at least one slice and one element per slice".into(),
        ));
    }
    let opts = AssemblyOptions::default();
    let mut reports = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let horizon = n as f64 * length;
        let coarse = LateralMesh::uniform(length, horizon, n * per_slice_elements)?;
        let pair = subdivide(&coarse, m)?;
        let sys = GalerkinSystem::operator_only(&pair, formulation, &opts)?;
        let mass = match formulation {
            Formulation::Energetic | Formulation::DirectEnergetic => DualMassMatrix::l2(&coarse),
            Formulation::Standard | Formulation::Mht => DualMassMatrix::greens(&coarse),
        };
        reports.push(discrete_inf_sup(&sys, &mass)?);
    }
    Ok(reports)
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// Writes the convergence CSV:
/// `level,dofs_coarse,dofs_fine,indicator_l2,error_dual,error_l2,rate_running`.
pub fn write_convergence_csv<W: Write>(records: &[ConvergenceRecord], out: &mut W) -> Result<()> {
    writeln!(
        out,
        "level,dofs_coarse,dofs_fine,indicator_l2,error_dual,error_l2,rate_running"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.level,
            r.dofs_coarse,
            r.dofs_fine,
            fmt_f(r.indicator),
            fmt_f(r.error_dual),
            fmt_f(r.error_l2),
            fmt_f(r.rate)
        )?;
    }
    Ok(())
}

/// Writes the adaptive-trace CSV:
/// `iter,dofs_coarse,dofs_fine,indicator,error_dual,error_l2,constrained_flag`.
pub fn write_adapt_csv<W: Write>(trace: &AdaptiveTrace, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "iter,dofs_coarse,dofs_fine,indicator,error_dual,error_l2,constrained_flag"
    )?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.level,
            r.dofs_coarse,
            r.dofs_fine,
            fmt_f(r.indicator),
            fmt_f(r.error_dual),
            fmt_f(r.error_l2),
            trace.constrained as u8
        )?;
    }
    Ok(())
}

/// Writes the stability CSV: `n,gamma_discrete,gamma_theory,c_tilde`.
pub fn write_infsup_csv<W: Write>(reports: &[InfSupReport], out: &mut W) -> Result<()> {
    writeln!(out, "n,gamma_discrete,gamma_theory,c_tilde")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{}",
            r.n,
            fmt_f(r.gamma_discrete),
            fmt_f(r.gamma_theory),
            fmt_f(r.c_tilde)
        )?;
    }
    Ok(())
}
