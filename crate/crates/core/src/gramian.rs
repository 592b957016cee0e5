//! Controllability Gramians of semistable second-order networks, the coupling Gramian
//! between a network and its reduction, and Gramian-based H2 norms.
//!
//! For a network with realization `(a, b)` and convergence matrix `j`, the Gramian is
//! the unique symmetric `P` with
//!
//! ```text
//! a P + P a^T + (I - j) b b^T (I - j)^T = 0,    nu^T P = 0,
//! ```
//!
//! where `nu = (D 1; M 1)` spans the left null space of `a`. The solver returns one
//! particular solution; adding `beta * Pi` with `Pi = [[1 1^T, 0], [0, 0]]` and
//! `beta = -nu^T X nu / sigma_d^2` selects the canonical one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, symmetric_eigenvalues, symmetrize};
use crate::matrixeq::{
    real_schur, relative_residual, solve_sylvester_schur, RealSchurForm, SingularOptions,
    SolveReport,
};
use crate::sys2::{
    check_bounded, check_output_shape, convergence_matrix, first_order, ConvergenceData,
    FirstOrderRealization, SecondOrderNetwork,
};

/// Relative size of `nu^T P` beyond which canonicalization is reported as failed.
const ANNIHILATION_HARD_RTOL: f64 = 1e-6;
/// Relative negativity of the smallest eigenvalue of `P` tolerated as round-off.
const PSD_RTOL: f64 = 1e-8;
/// Absolute negativity of a trace tolerated as round-off before taking a square root.
pub const TRACE_CLAMP: f64 = 1e-10;

/// Canonical Gramian of a semistable network together with the data it was built from.
#[derive(Debug, Clone)]
pub struct NetworkGramian {
    p: DMatrix<f64>,
    nu: DVector<f64>,
    sigma_d: f64,
    realization: FirstOrderRealization,
    convergence: DMatrix<f64>,
    /// `(I - j) b`.
    deviation_input: DMatrix<f64>,
    inputs: DMatrix<f64>,
    schur: RealSchurForm,
    report: SolveReport,
}

impl NetworkGramian {
    /// Gramian of the realization `fo` with convergence data `cd`.
    ///
    /// `inputs` is the second-order input matrix `F`, kept for the boundedness check of
    /// output norms.
    pub fn from_realization(
        fo: FirstOrderRealization,
        cd: ConvergenceData,
        inputs: DMatrix<f64>,
        opts: &SingularOptions,
    ) -> Result<Self> {
        let dim = fo.state_dim();
        let deviation_input = deviation_input(&fo.b, &cd.j);
        let c = &deviation_input * deviation_input.transpose();
        let schur = real_schur(&fo.a)?;
        let (x, report) = solve_sylvester_schur(&schur, &schur, &c, opts)?;
        let p = symmetrize(&canonicalize_between(
            &x,
            &cd.nu,
            &cd.nu,
            cd.sigma_d,
            dim / 2,
            dim / 2,
        ));

        let p_norm = spectral_norm(&p);
        let defect = (cd.nu.transpose() * &p).norm();
        if defect > ANNIHILATION_HARD_RTOL * p_norm * cd.nu.norm() {
            return Err(Error::InternalConsistency(format!(
                "canonical Gramian is not annihilated by (D1; M1): defect {defect:e}"
            )));
        }
        if p_norm > 0.0 {
            let min_eig = symmetric_eigenvalues(&p)[0];
            if min_eig < -PSD_RTOL * p_norm {
                return Err(Error::InternalConsistency(format!(
                    "Gramian has eigenvalue {min_eig:e} below -{PSD_RTOL:e} * {p_norm:e}"
                )));
            }
        }
        let report = SolveReport {
            residual_rel: relative_residual(&fo.a, &fo.a.transpose(), &c, &p),
            ..report
        };
        Ok(NetworkGramian {
            p,
            nu: cd.nu,
            sigma_d: cd.sigma_d,
            realization: fo,
            convergence: cd.j,
            deviation_input,
            inputs,
            schur,
            report,
        })
    }

    /// The canonical `2n x 2n` Gramian.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `(D 1; M 1)`.
    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    pub fn sigma_d(&self) -> f64 {
        self.sigma_d
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.p.nrows() / 2
    }

    pub fn realization(&self) -> &FirstOrderRealization {
        &self.realization
    }

    pub fn convergence(&self) -> &DMatrix<f64> {
        &self.convergence
    }

    /// `(I - j) b (I - j)^T b^T`-forcing term of the defining equation.
    pub fn forcing(&self) -> DMatrix<f64> {
        &self.deviation_input * self.deviation_input.transpose()
    }

    /// Diagnostics of the underlying solve; the residual refers to the canonical `P`.
    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    pub fn schur(&self) -> &RealSchurForm {
        &self.schur
    }
}

pub fn network_gramian(sys: &SecondOrderNetwork) -> Result<NetworkGramian> {
    network_gramian_with(sys, &SingularOptions::default())
}

pub fn network_gramian_with(
    sys: &SecondOrderNetwork,
    opts: &SingularOptions,
) -> Result<NetworkGramian> {
    NetworkGramian::from_realization(
        first_order(sys),
        convergence_matrix(sys),
        sys.f().clone(),
        opts,
    )
}

/// `x + beta * Pi` with `beta = -nu^T x nu / sigma_d^2`, symmetrized.
///
/// Any particular solution of the defining equation maps to the same canonical Gramian.
pub fn canonicalize(x: &DMatrix<f64>, nu: &DVector<f64>, sigma_d: f64) -> DMatrix<f64> {
    let n = x.nrows() / 2;
    symmetrize(&canonicalize_between(x, nu, nu, sigma_d, n, n))
}

/// `x + beta * [[1_n 1_r^T, 0], [0, 0]]` with `beta = -nu_left^T x nu_right / sigma_d^2`.
fn canonicalize_between(
    x: &DMatrix<f64>,
    nu_left: &DVector<f64>,
    nu_right: &DVector<f64>,
    sigma_d: f64,
    n: usize,
    r: usize,
) -> DMatrix<f64> {
    let beta = -(nu_left.transpose() * x * nu_right)[(0, 0)] / (sigma_d * sigma_d);
    let mut out = x.clone();
    for j in 0..r {
        for i in 0..n {
            out[(i, j)] += beta;
        }
    }
    out
}

fn deviation_input(b: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    b - j * b
}

/// Cross Gramian linking the full network's states to a reduced network's states.
#[derive(Debug, Clone)]
pub struct CouplingGramian {
    px: DMatrix<f64>,
    report: SolveReport,
}

impl CouplingGramian {
    /// The `2n x 2r` coupling Gramian.
    pub fn px(&self) -> &DMatrix<f64> {
        &self.px
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }
}

/// Canonical solution `P_x` of
/// `a P_x + P_x a_r^T + (I - j) b b_r^T (I - j_r)^T = 0` with `nu^T P_x nu_r = 0`,
/// reusing the factorizations held by the two Gramians.
pub fn coupling_between(
    full: &NetworkGramian,
    reduced: &NetworkGramian,
    opts: &SingularOptions,
) -> Result<CouplingGramian> {
    if full.deviation_input.ncols() != reduced.deviation_input.ncols() {
        return Err(Error::Dimension(format!(
            "full model has {} inputs, reduced model {}",
            full.deviation_input.ncols(),
            reduced.deviation_input.ncols()
        )));
    }
    let c = &full.deviation_input * reduced.deviation_input.transpose();
    let (x, report) = solve_sylvester_schur(&full.schur, &reduced.schur, &c, opts)?;
    let px = canonicalize_between(
        &x,
        &full.nu,
        &reduced.nu,
        full.sigma_d,
        full.n(),
        reduced.n(),
    );
    let report = SolveReport {
        residual_rel: relative_residual(
            &full.realization.a,
            &reduced.realization.a.transpose(),
            &c,
            &px,
        ),
        ..report
    };
    Ok(CouplingGramian { px, report })
}

/// `sqrt(tr(H P H^T))` for the output `hs x + hv x'`, with `H = [hs, hv]`.
pub fn h2_output_norm(g: &NetworkGramian, hs: &DMatrix<f64>, hv: &DMatrix<f64>) -> Result<f64> {
    let n = g.n();
    check_output_shape(hs, hv, n)?;
    check_bounded(hs, &g.inputs)?;
    let mut total = Trace::default();
    let mut support = Vec::new();
    for row in 0..hs.nrows() {
        support.clear();
        support.extend((0..n).map(|i| (i, hs[(row, i)])).filter(|e| e.1 != 0.0));
        support.extend((0..n).map(|i| (n + i, hv[(row, i)])).filter(|e| e.1 != 0.0));
        total.add(&selector_quadratic(&g.p, &support));
    }
    total.sqrt()
}

/// `h^T P h` for a sparse `h`, accumulated in support order.
pub(crate) fn selector_quadratic(p: &DMatrix<f64>, support: &[(usize, f64)]) -> Trace {
    let mut t = Trace::default();
    for &(a, ha) in support {
        for &(b, hb) in support {
            let term = ha * hb * p[(a, b)];
            t.value += term;
            t.gross += term.abs();
        }
    }
    t
}

/// A trace of a positive semidefinite form, with the magnitude of its terms for
/// round-off judgement.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Trace {
    pub value: f64,
    pub gross: f64,
}

impl Trace {
    pub(crate) fn add(&mut self, other: &Trace) {
        self.value += other.value;
        self.gross += other.gross;
    }

    /// Square root, clamping round-off negativity of at most `TRACE_CLAMP * max(1, gross)`.
    pub(crate) fn sqrt(&self) -> Result<f64> {
        if self.value >= 0.0 {
            return Ok(self.value.sqrt());
        }
        if self.value >= -TRACE_CLAMP * self.gross.max(1.0) {
            return Ok(0.0);
        }
        Err(Error::InternalConsistency(format!(
            "trace of a semidefinite form is {:e}",
            self.value
        )))
    }
}

/// Gramian for a stiffness matrix that is symmetric positive definite instead of a
/// Laplacian. The realization is then Hurwitz, the convergence matrix vanishes, and no
/// canonicalization applies.
pub fn spd_stiffness_gramian(
    masses: &DVector<f64>,
    d: &DMatrix<f64>,
    k: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = masses.len();
    if d.shape() != (n, n) || k.shape() != (n, n) || f.nrows() != n {
        return Err(Error::Dimension("inconsistent SPD-stiffness system".into()));
    }
    if masses.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument("masses must be positive".into()));
    }
    for (name, mat) in [("damping", d), ("stiffness", k)] {
        let asym = (mat - mat.transpose()).amax();
        let norm = spectral_norm(mat);
        if asym > 1e-12 * norm || !(symmetric_eigenvalues(mat)[0] > 1e-10 * norm) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be symmetric positive definite"
            )));
        }
    }
    let fo = FirstOrderRealization::from_parts(masses, d, k, f);
    let schur = real_schur(&fo.a)?;
    if let Some(b) = schur.zero_blocks().first() {
        return Err(Error::StabilityViolation {
            real_part: b.re,
            tolerance: schur.zero_tol(),
        });
    }
    let c = &fo.b * fo.b.transpose();
    let (x, _) = solve_sylvester_schur(&schur, &schur, &c, &SingularOptions::default())?;
    Ok(symmetrize(&x))
}
