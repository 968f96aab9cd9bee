//! Experiment driver: solves the benchmark problems, runs convergence and
//! stability studies and dumps meshes, writing plot-ready CSV.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors.

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use wavebem::adaptivity::ConvergenceRecord;
use wavebem::assembly::{assemble_system, AssemblyOptions};
use wavebem::benchmarks::{BenchmarkCase, CaseId};
use wavebem::mesh::{subdivide, LateralMesh};
use wavebem::norms::{dual_norm_green, l2_error, l2_norm, DensityError};
use wavebem::solver::solve_mixed;
use wavebem::study::{
    run_adaptive, run_convergence, run_infsup_study, study_rate, write_adapt_csv,
    write_convergence_csv, write_infsup_csv, Refinement, StudySpec,
};
use wavebem::{schur_quadratic_form, Error, Formulation};

#[derive(Parser)]
#[command(
    name = "wavebem",
    about = "Space-time boundary element solver for the 1D wave equation",
    version,
    arg_required_else_help = true
)]
struct Cli {
    /// Seed for randomized consistency checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Benchmark case: g1, g2 or g3.
    #[arg(long, default_value = "g1")]
    case: String,

    /// Formulation: standard, energetic, mht or direct.
    #[arg(long, default_value = "standard")]
    formulation: String,

    /// Subdivision factor between the density mesh and the residual mesh.
    #[arg(long, default_value_t = 3)]
    m: usize,

    /// Gauss points per quadrature cell for load vectors.
    #[arg(long, default_value_t = 8)]
    quad_order: usize,

    /// Series length of the modified Hilbert transform.
    #[arg(long, default_value_t = 256)]
    mht_modes: usize,
}

impl ProblemArgs {
    fn case(&self) -> Result<CaseId, Error> {
        self.case.parse()
    }

    fn formulation(&self) -> Result<Formulation, Error> {
        self.formulation.parse()
    }

    fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions {
            quad_order: self.quad_order,
            mht_modes: self.mht_modes,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark problem on a uniform mesh and print diagnostics.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,

        /// Elements per side of the density mesh.
        #[arg(long, default_value_t = 8)]
        elements: usize,

        /// Write the assembled operator matrix, mass diagonal and load
        /// vector as plain text into this directory.
        #[arg(long)]
        dump_matrices: Option<PathBuf>,
    },
    /// Uniform convergence study; writes CSV and prints the fitted rate.
    Convergence {
        #[command(flatten)]
        problem: ProblemArgs,

        /// Number of uniform refinement levels.
        #[arg(long, default_value_t = 6)]
        levels: usize,

        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Indicator-driven adaptive refinement; writes the trace as CSV.
    Adapt {
        #[command(flatten)]
        problem: ProblemArgs,

        /// Number of adaptive iterations.
        #[arg(long, default_value_t = 15)]
        levels: usize,

        /// Bulk marking fraction in (0,1).
        #[arg(long, default_value_t = 0.5)]
        theta: f64,

        /// Enforce the side-to-side shift closure after each refinement.
        #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
        constrained: bool,

        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete inf-sup constants over a range of time-slice counts.
    Infsup {
        /// Formulation: standard, energetic, mht or direct.
        #[arg(long, default_value = "standard")]
        formulation: String,

        /// Subdivision factor between density and residual meshes.
        #[arg(long, default_value_t = 3)]
        m: usize,

        /// Largest number of time slices.
        #[arg(long, default_value_t = 8)]
        n_max: usize,

        /// Elements per slice per side of the density mesh.
        #[arg(long, default_value_t = 32)]
        per_slice: usize,

        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a mesh as plain text: one line of node values per side.
    DumpMesh {
        /// Elements per side.
        #[arg(long, default_value_t = 8)]
        elements: usize,

        /// Spatial length of the strip.
        #[arg(long, default_value_t = 3.0)]
        len: f64,

        /// Time horizon.
        #[arg(long, default_value_t = 6.0)]
        horizon: f64,

        /// Close the mesh under the side-to-side time shift first.
        #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
        constrained: bool,

        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(path: &Option<PathBuf>, contents: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => std::io::stdout().write_all(contents)?,
    }
    Ok(())
}

fn fmt_or_nan(v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else {
        format!("{v:.6e}")
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            problem,
            elements,
            dump_matrices,
        } => {
            let case = BenchmarkCase::new(problem.case()?);
            let formulation = problem.formulation()?;
            let coarse = LateralMesh::uniform(case.length(), case.horizon(), elements)?;
            let pair = subdivide(&coarse, problem.m)?;
            let sys = assemble_system(&pair, &case.dirichlet(), formulation, &problem.assembly())?;
            if let Some(dir) = &dump_matrices {
                dump_system(&sys, dir)?;
                eprintln!("matrices written to {}", dir.display());
            }
            let sol = solve_mixed(&sys)?;
            let err = DensityError::new(case.exact_density_for(formulation), sol.density.clone());
            let orth = (sys.vmat.transpose() * DVector::from_vec(sol.residual.dofs())).norm();

            // Randomized consistency check: the Schur quadratic form must
            // match the mass-weighted norm of the projected trace
            // p~ = D^{-1} V w, accumulated independently.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
            let w = DVector::from_fn(coarse.n_dofs(), |_, _| rng.random_range(-1.0..1.0));
            let direct = schur_quadratic_form(&sys, &w)?;
            let vw = &sys.vmat * &w;
            let ptilde = DVector::from_iterator(
                vw.len(),
                vw.iter().zip(sys.mass.iter()).map(|(v, d)| v / d),
            );
            let independent: f64 = ptilde
                .iter()
                .zip(sys.mass.iter())
                .map(|(p, d)| p * p * d)
                .sum();
            let consistency = (direct - independent).abs() / direct.max(f64::MIN_POSITIVE);

            println!(
                "case {} formulation {formulation} m={}",
                case.id(),
                problem.m
            );
            println!(
                "dofs: coarse {} fine {}",
                coarse.n_dofs(),
                pair.fine().n_dofs()
            );
            println!("indicator |p|_L2          : {:.6e}", l2_norm(&sol.residual));
            println!(
                "error |w - w_H| dual      : {}",
                fmt_or_nan(dual_norm_green(&err, 16)?)
            );
            println!(
                "error |w - w_H| L2        : {}",
                fmt_or_nan(l2_error(&err, 16)?)
            );
            println!("residual orthogonality    : {orth:.3e}");
            println!(
                "quadratic-form consistency: {consistency:.3e} (seed {})",
                cli.seed
            );
            Ok(())
        }
        Command::Convergence {
            problem,
            levels,
            out,
        } => {
            let mut spec = StudySpec::new(problem.case()?, problem.formulation()?, problem.m);
            spec.levels = levels;
            spec.assembly = problem.assembly();
            for warning in spec.validate()? {
                eprintln!("warning: {warning}");
            }
            let records = run_convergence(&spec)?;
            let mut buf = Vec::new();
            write_convergence_csv(&records, &mut buf)?;
            write_out(&out, &buf)?;
            let rate = match study_rate(&records) {
                Ok(rate) => format!("fitted dual-error rate: {rate:.4}"),
                Err(_) => "fitted dual-error rate: n/a".into(),
            };
            // Keep stdout pure CSV when no output file was given.
            if out.is_some() {
                println!("{rate}");
            } else {
                eprintln!("{rate}");
            }
            Ok(())
        }
        Command::Adapt {
            problem,
            levels,
            theta,
            constrained,
            out,
        } => {
            let mut spec = StudySpec::new(problem.case()?, problem.formulation()?, problem.m);
            spec.levels = levels;
            spec.theta = theta;
            spec.assembly = problem.assembly();
            spec.refinement = if constrained {
                Refinement::AdaptiveConstrained
            } else {
                Refinement::AdaptiveNonconstrained
            };
            for warning in spec.validate()? {
                eprintln!("warning: {warning}");
            }
            let trace = run_adaptive(&spec)?;
            let mut buf = Vec::new();
            write_adapt_csv(&trace, &mut buf)?;
            write_out(&out, &buf)?;
            if trace.failed {
                eprintln!(
                    "adaptive loop stopped early: singular system after {} iterations",
                    trace.records.len()
                );
                return Err(Error::SingularSystem {
                    formulation: spec.formulation,
                    m: spec.m,
                });
            }
            summarize_trace(&trace.records, out.is_some());
            Ok(())
        }
        Command::Infsup {
            formulation,
            m,
            n_max,
            per_slice,
            out,
        } => {
            let formulation: Formulation = formulation.parse()?;
            let reports = run_infsup_study(formulation, m, n_max, per_slice, 3.0)?;
            let mut buf = Vec::new();
            write_infsup_csv(&reports, &mut buf)?;
            write_out(&out, &buf)?;
            Ok(())
        }
        Command::DumpMesh {
            elements,
            len,
            horizon,
            constrained,
            out,
        } => {
            let mut mesh = LateralMesh::uniform(len, horizon, elements)?;
            if constrained {
                mesh = mesh.enforce_shift_constraint();
            }
            write_out(&out, mesh.to_text().as_bytes())?;
            Ok(())
        }
    }
}

fn summarize_trace(records: &[ConvergenceRecord], to_stdout: bool) {
    if let Some(last) = records.last() {
        let line = format!(
            "{} iterations, final dofs {}, indicator {:.6e}, dual error {}",
            records.len(),
            last.dofs_coarse,
            last.indicator,
            fmt_or_nan(last.error_dual)
        );
        if to_stdout {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

/// Plain-text dump of the assembled system: row-major full precision.
fn dump_system(sys: &wavebem::assembly::GalerkinSystem, dir: &PathBuf) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let mut v = String::new();
    for i in 0..sys.vmat.nrows() {
        let row: Vec<String> = (0..sys.vmat.ncols())
            .map(|j| format!("{:.16e}", sys.vmat[(i, j)]))
            .collect();
        v.push_str(&row.join(" "));
        v.push('\n');
    }
    std::fs::write(dir.join("vmat.txt"), v)?;
    let d: Vec<String> = sys.mass.iter().map(|x| format!("{x:.16e}")).collect();
    std::fs::write(dir.join("mass.txt"), d.join(" ") + "\n")?;
    let g: Vec<String> = sys.rhs.iter().map(|x| format!("{x:.16e}")).collect();
    std::fs::write(dir.join("rhs.txt"), g.join(" ") + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
