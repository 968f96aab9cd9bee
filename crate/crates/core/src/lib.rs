//! Space-time boundary element solver for the Dirichlet problem of the 1D
//! wave equation on the strip `(0,L) x (0,T)`.
//!
//! The library discretizes first-kind boundary integral equations on the
//! lateral boundary (two copies of the time interval, one per endpoint of the
//! spatial domain) with piecewise constant densities. The least-squares
//! variational problem is solved as a mixed saddle-point system on a nested
//! coarse/fine mesh pair; the fine-mesh dual residual doubles as a local
//! error indicator for adaptive refinement.
//!
//! Module map:
//! - [`mesh`]: lateral boundary meshes, nested subdivision, shift closure
//! - [`kernel`]: pointwise application of the wave boundary integral operators
//! - [`assembly`]: Galerkin matrices and load vectors for all formulations
//! - [`solver`]: Schur-complement solve and discrete inf-sup constants
//! - [`norms`]: dual-norm and L2 error measurement, local indicators
//! - [`adaptivity`]: indicator-driven refinement loop and rate fitting
//! - [`benchmarks`]: the three reference Dirichlet data sets with exact densities
//! - [`study`]: convergence and stability studies with CSV output

pub mod adaptivity;
pub mod assembly;
pub mod benchmarks;
pub mod kernel;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod solver;
pub mod study;

use std::fmt;

/// One of the two lateral boundary components, `x = 0` or `x = L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// The boundary trace at `x = 0`.
    X0,
    /// The boundary trace at `x = L`.
    XL,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::X0, Side::XL];

    pub fn opposite(self) -> Side {
        match self {
            Side::X0 => Side::XL,
            Side::XL => Side::X0,
        }
    }

    /// Storage index: side `x=0` first, then `x=L`.
    pub fn index(self) -> usize {
        match self {
            Side::X0 => 0,
            Side::XL => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::X0 => write!(f, "x=0"),
            Side::XL => write!(f, "x=L"),
        }
    }
}

/// Variational formulation of the first-kind boundary integral equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Least squares for `V w = g` in L2.
    Standard,
    /// Time-differentiated equation `dt V w = dt g`.
    Energetic,
    /// Modified-Hilbert-transform symmetrization `H_T V w = H_T g`.
    Mht,
    /// Direct first-kind equation with right-hand side `(1/2 I + K) g`,
    /// tested in the time-differentiated form.
    DirectEnergetic,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [
        Formulation::Standard,
        Formulation::Energetic,
        Formulation::Mht,
        Formulation::DirectEnergetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Standard => "standard",
            Formulation::Energetic => "energetic",
            Formulation::Mht => "mht",
            Formulation::DirectEnergetic => "direct-energetic",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Formulation::Standard),
            "energetic" => Ok(Formulation::Energetic),
            "mht" => Ok(Formulation::Mht),
            "direct" | "direct-energetic" => Ok(Formulation::DirectEnergetic),
            other => Err(Error::InvalidArgument(format!(
                "unknown formulation '{other}' (expected standard, energetic, mht or direct)"
            ))),
        }
    }
}

/// Library error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Schur complement factorization hit a non-positive pivot. Expected
    /// for the provably unstable nesting factors (`m <= 2` for the standard
    /// formulation); reported with the offending setup.
    #[error("singular system: {formulation} formulation with subdivision factor m={m} produced a non-positive Schur pivot")]
    SingularSystem { formulation: Formulation, m: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use assembly::{
    assemble_dtv, assemble_dual_mass, assemble_mass, assemble_mht_v, assemble_rhs, assemble_system,
    assemble_v, assemble_v_decoupled, AssemblyOptions, DualMassMatrix, GalerkinSystem,
};
pub use benchmarks::{eval_case, BenchmarkCase, CaseId, EvalTarget};
pub use kernel::{
    apply_dtv, apply_k, apply_mht_coeffs, apply_v, apply_v_exact, potential_eval, ExactDensity,
    PiecewiseConstant, SideFunction,
};
pub use mesh::{subdivide, LateralMesh, NestedPair, TemporalMesh};
pub use norms::{
    dual_norm_green, dual_norm_spectral, l2_error, l2_norm, local_indicator, DensityError,
};
pub use solver::{
    c_tilde, discrete_inf_sup, ellipticity_constant, schur_quadratic_form, solve_mixed,
    theoretical_stability_constant, InfSupReport, MixedSolution,
};
