//! Schur-complement solution of the mixed saddle-point system and discrete
//! inf-sup constants.
//!
//! The mixed system couples the fine-mesh dual residual `p` with the coarse
//! primal density `w` through the diagonal mass `D` and the operator matrix
//! `V`. Eliminating `p` leaves the symmetric Schur complement
//! `S = V^T D^{-1} V`, positive definite whenever the nesting factor
//! satisfies the stability theory; a tolerance-guarded Cholesky
//! factorization turns loss of definiteness into a typed error.

use crate::assembly::{DualMassMatrix, GalerkinSystem};
use crate::kernel::PiecewiseConstant;
use crate::{Error, Formulation, Result};
use nalgebra::{DMatrix, DVector};

/// Solution of the mixed system: primal density on the coarse mesh and dual
/// residual on the fine mesh.
#[derive(Clone, Debug)]
pub struct MixedSolution {
    /// Primal density approximation on the coarse mesh.
    pub density: PiecewiseConstant,
    /// Dual residual on the fine mesh; its L2 norm is the error indicator.
    pub residual: PiecewiseConstant,
    pub formulation: Formulation,
}

/// Discrete inf-sup constant next to its theoretical companions.
#[derive(Clone, Copy, Debug)]
pub struct InfSupReport {
    /// Square root of the smallest generalized eigenvalue of `S x = lambda M x`.
    pub gamma_discrete: f64,
    /// Theoretical lower bound `2 sin(pi/(2(2n+1))) (1/2 - 1/m)`; only a
    /// meaningful bound for nesting factors `m > 2`.
    pub gamma_theory: f64,
    /// Continuous lower bound `sin(pi/(2(2n+1)))` of the single layer
    /// operator.
    pub c_tilde: f64,
    /// Number of time slices.
    pub n: usize,
    /// Nesting factor of the mesh pair.
    pub m: usize,
}

/// Continuous lower-bound constant of the single layer operator for `n`
/// time slices, `sin(pi / (2(2n+1)))`.
pub fn c_tilde(n: usize) -> f64 {
    (std::f64::consts::PI / (2.0 * (2.0 * n as f64 + 1.0))).sin()
}

/// Ellipticity constant of the time-differentiated operator for `n` time
/// slices, `sin^2(pi / (2(n+1)))`.
pub fn ellipticity_constant(n: usize) -> f64 {
    let s = (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
    s * s
}

/// Theoretical discrete stability constant
/// `gamma_n = 2 sin(pi/(2(2n+1))) (1/2 - 1/m)`.
pub fn theoretical_stability_constant(n: usize, m: usize) -> f64 {
    2.0 * c_tilde(n) * (0.5 - 1.0 / m as f64)
}

/// Relative pivot floor of the guarded Cholesky factorization: pivots that
/// cancel below this fraction of their own initial diagonal entry are
/// treated as loss of positive definiteness. Relative to the per-column
/// diagonal, not the global maximum, so strongly graded meshes (whose
/// legitimate pivots scale with the cubed local element size) do not trip
/// the guard.
const PIVOT_RTOL: f64 = 1e-14;

/// In-place lower Cholesky factorization with a relative pivot guard.
/// Returns the lower factor or `None` when a pivot falls below the floor.
fn cholesky_guarded(mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    for j in 0..n {
        let mut pivot = a[(j, j)];
        let floor = PIVOT_RTOL * a[(j, j)];
        for k in 0..j {
            pivot -= a[(j, k)] * a[(j, k)];
        }
        if !pivot.is_finite() || pivot <= floor {
            return None;
        }
        let ljj = pivot.sqrt();
        a[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / ljj;
        }
    }
    // Zero the strict upper triangle so the factor can be used directly.
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Some(a)
}

fn solve_with_factor(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let y = l
        .solve_lower_triangular(rhs)
        .expect("factor has positive diagonal");
    l.transpose()
        .solve_upper_triangular(&y)
        .expect("factor has positive diagonal")
}

/// Schur complement `V^T D^{-1} V`, formed as a Gram product of the
/// row-scaled operator so it is symmetric by construction.
fn schur_matrix(sys: &GalerkinSystem) -> DMatrix<f64> {
    let mut scaled = sys.vmat.clone();
    for (j, mut row) in scaled.row_iter_mut().enumerate() {
        row *= 1.0 / sys.mass[j].sqrt();
    }
    scaled.transpose() * scaled
}

/// Solves the mixed system by the Schur complement: factorizes
/// `S = V^T D^{-1} V`, solves for the primal coefficients and recovers the
/// dual residual `p = D^{-1} (g - V w)`.
pub fn solve_mixed(sys: &GalerkinSystem) -> Result<MixedSolution> {
    let s = schur_matrix(sys);
    let l = cholesky_guarded(s).ok_or(Error::SingularSystem {
        formulation: sys.formulation,
        m: sys.pair.subdivision_factor(),
    })?;
    let dinv_g = DVector::from_iterator(
        sys.rhs.len(),
        sys.rhs.iter().zip(sys.mass.iter()).map(|(g, d)| g / d),
    );
    let reduced = sys.vmat.transpose() * dinv_g;
    let w = solve_with_factor(&l, &reduced);
    let resid = &sys.rhs - &sys.vmat * &w;
    let p = DVector::from_iterator(
        resid.len(),
        resid.iter().zip(sys.mass.iter()).map(|(r, d)| r / d),
    );
    Ok(MixedSolution {
        density: PiecewiseConstant::from_dofs(sys.pair.coarse().clone(), w.as_slice())?,
        residual: PiecewiseConstant::from_dofs(sys.pair.fine().clone(), p.as_slice())?,
        formulation: sys.formulation,
    })
}

/// Quadratic form of the Schur complement, `w^T V^T D^{-1} V w`, which
/// equals the squared L2 norm of the fine-mesh projection of `V w`.
pub fn schur_quadratic_form(sys: &GalerkinSystem, w: &DVector<f64>) -> Result<f64> {
    if w.len() != sys.vmat.ncols() {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector has length {}, expected {}",
            w.len(),
            sys.vmat.ncols()
        )));
    }
    let y = &sys.vmat * w;
    Ok(y.iter().zip(sys.mass.iter()).map(|(v, d)| v * v / d).sum())
}

/// Discrete inf-sup constant of the assembled operator with respect to the
/// Gram matrix `M`: the square root of the smallest eigenvalue of
/// `S x = lambda M x`, reduced to a standard symmetric problem through a
/// Cholesky factor of `M`.
pub fn discrete_inf_sup(sys: &GalerkinSystem, mass: &DualMassMatrix) -> Result<InfSupReport> {
    let m_mat = mass.matrix();
    if m_mat.nrows() != sys.vmat.ncols() {
        return Err(Error::InvalidArgument(format!(
            "Gram matrix size {} does not match coarse space size {}",
            m_mat.nrows(),
            sys.vmat.ncols()
        )));
    }
    let l = cholesky_guarded(m_mat.clone())
        .ok_or_else(|| Error::InvalidArgument("Gram matrix is not positive definite".into()))?;
    let s = schur_matrix(sys);
    // C = L^{-1} S L^{-T}
    let x = l
        .solve_lower_triangular(&s)
        .expect("factor has positive diagonal");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("factor has positive diagonal");
    let sym = 0.5 * (&c + c.transpose());
    let eigenvalues = sym.symmetric_eigenvalues();
    let lambda_min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = sys.pair.coarse().slice_count();
    let m = sys.pair.subdivision_factor();
    Ok(InfSupReport {
        gamma_discrete: lambda_min.max(0.0).sqrt(),
        gamma_theory: theoretical_stability_constant(n, m),
        c_tilde: c_tilde(n),
        n,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, AssemblyOptions};
    use crate::kernel::SideFunction;
    use crate::mesh::{subdivide, LateralMesh};
    use crate::norms::l2_norm;
    use approx::assert_relative_eq;

    #[test]
    fn stability_constants() {
        // n = 1: c_tilde = sin(pi/6) = 1/2, and gamma_1 -> 1/2 as m grows.
        assert_relative_eq!(c_tilde(1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(
            theoretical_stability_constant(1, 1_000_000_000),
            0.5,
            epsilon = 1e-6
        );
        // n = 2, m = 3: 2 sin(pi/10) / 6.
        assert_relative_eq!(
            theoretical_stability_constant(2, 3),
            0.10301,
            epsilon = 5e-6
        );
        // Ellipticity constant of the differentiated operator at n = 1.
        assert_relative_eq!(ellipticity_constant(1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn schur_form_single_element() {
        let coarse = LateralMesh::uniform(1.0, 1.0, 1).unwrap();
        let pair = subdivide(&coarse, 1).unwrap();
        let sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let w = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(
            schur_quadratic_form(&sys, &w).unwrap(),
            1.0 / 16.0,
            epsilon = 1e-15
        );
        let zero = DVector::zeros(2);
        assert_eq!(schur_quadratic_form(&sys, &zero).unwrap(), 0.0);
        let bad = DVector::zeros(3);
        assert!(schur_quadratic_form(&sys, &bad).is_err());
    }

    #[test]
    fn schur_form_nonnegative_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let coarse = LateralMesh::uniform(3.0, 6.0, 5).unwrap();
        let pair = subdivide(&coarse, 3).unwrap();
        let sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        for _ in 0..20 {
            let w = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
            assert!(schur_quadratic_form(&sys, &w).unwrap() >= 0.0);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let coarse = LateralMesh::uniform(3.0, 6.0, 4).unwrap();
        let pair = subdivide(&coarse, 3).unwrap();
        let sys = assemble_system(
            &pair,
            &SideFunction::zero(),
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let sol = solve_mixed(&sys).unwrap();
        assert!(sol.density.dofs().iter().all(|&v| v.abs() < 1e-12));
        assert!(sol.residual.dofs().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn manufactured_coarse_density_is_recovered() {
        // g = V w* for a coarse-representable density: the solver must
        // return w* with vanishing residual.
        let coarse = LateralMesh::uniform(3.0, 6.0, 4).unwrap();
        let pair = subdivide(&coarse, 3).unwrap();
        let mut sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let target = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5, -1.0, 2.0]);
        sys.rhs = &sys.vmat * &target;
        let sol = solve_mixed(&sys).unwrap();
        for (have, want) in sol.density.dofs().iter().zip(target.iter()) {
            assert_relative_eq!(have, want, epsilon = 1e-10);
        }
        assert!(l2_norm(&sol.residual) <= 1e-10);
    }

    #[test]
    fn discrete_orthogonality_of_residual() {
        let case = crate::benchmarks::BenchmarkCase::new(crate::benchmarks::CaseId::G1);
        let coarse = LateralMesh::uniform(case.length(), case.horizon(), 8).unwrap();
        let pair = subdivide(&coarse, 3).unwrap();
        let sys = assemble_system(
            &pair,
            &case.dirichlet(),
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let sol = solve_mixed(&sys).unwrap();
        let p = DVector::from_vec(sol.residual.dofs());
        let orth = sys.vmat.transpose() * p;
        assert!(orth.iter().all(|v| v.abs() < 1e-9), "V^T p = {orth:?}");
    }

    #[test]
    fn solve_and_quadratic_form_agree() {
        // (S w, w) must equal p~^T D p~ for p~ = D^{-1} V w, computed
        // independently.
        let coarse = LateralMesh::uniform(3.0, 6.0, 6).unwrap();
        let pair = subdivide(&coarse, 3).unwrap();
        let sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let w = DVector::from_fn(12, |i, _| ((i * 7 + 3) % 5) as f64 - 2.0);
        let direct = schur_quadratic_form(&sys, &w).unwrap();
        let vw = &sys.vmat * &w;
        let ptilde =
            DVector::from_iterator(vw.len(), vw.iter().zip(sys.mass.iter()).map(|(v, d)| v / d));
        let via_p: f64 = ptilde
            .iter()
            .zip(sys.mass.iter())
            .map(|(p, d)| p * p * d)
            .sum();
        assert_relative_eq!(direct, via_p, max_relative = 1e-12);
    }

    #[test]
    fn singular_system_is_reported_for_m1_standard() {
        // Without nesting the standard piecewise-constant pairing is not
        // inf-sup stable; on a uniform single-slice mesh the Schur matrix
        // stays regular, so instead check the typed error on a rigged system.
        let coarse = LateralMesh::uniform(3.0, 6.0, 2).unwrap();
        let pair = subdivide(&coarse, 1).unwrap();
        let mut sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Standard,
            &AssemblyOptions::default(),
        )
        .unwrap();
        // Force a rank-deficient operator.
        sys.vmat.fill_column(0, 0.0);
        match solve_mixed(&sys) {
            Err(Error::SingularSystem { formulation, m }) => {
                assert_eq!(formulation, Formulation::Standard);
                assert_eq!(m, 1);
            }
            other => panic!("expected singular-system error, got {other:?}"),
        }
    }

    #[test]
    fn inf_sup_matches_half_for_single_slice_energetic() {
        // T = L, m = 1: the discretized differentiated operator is exactly
        // w/2, so the constant with the L2 Gram matrix is exactly 1/2.
        let coarse = LateralMesh::uniform(3.0, 3.0, 8).unwrap();
        let pair = subdivide(&coarse, 1).unwrap();
        let sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Energetic,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let report = discrete_inf_sup(&sys, &DualMassMatrix::l2(pair.coarse())).unwrap();
        assert_relative_eq!(report.gamma_discrete, 0.5, epsilon = 1e-10);
        assert_eq!(report.n, 1);
        assert_relative_eq!(report.c_tilde, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn inf_sup_rejects_indefinite_gram() {
        let coarse = LateralMesh::uniform(3.0, 3.0, 2).unwrap();
        let pair = subdivide(&coarse, 1).unwrap();
        let sys = GalerkinSystem::operator_only(
            &pair,
            Formulation::Energetic,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let mut bad = DualMassMatrix::l2(pair.coarse());
        // Make it indefinite through the public surface: scale by -1.
        let m = bad.matrix().clone();
        bad = DualMassMatrix::from_matrix(-m);
        assert!(discrete_inf_sup(&sys, &bad).is_err());
    }
}
