//! Second-order network model `M x'' + D x' + L x = F u`, its validation, first-order
//! realization, convergence data, transfer function, and time-domain oracles.

mod quadrature;
mod simulate;

pub use quadrature::{
    gramian_quadrature, h2_quadrature, output_h2_quadrature, ImpulseModel, QuadratureGrid,
};
pub use simulate::{impulse_response_at, simulate, simulate_first_order, Excitation, Trajectory};

use nalgebra::{Complex, DMatrix, DVector, SVD};

use crate::error::{Error, Result, Violation};
use crate::linalg::{ones, spectral_norm, symmetric_eigenvalues};

/// Relative tolerance on asymmetry of `D` and `L`.
pub const SYMMETRY_RTOL: f64 = 1e-12;
/// Smallest eigenvalue of `D` must exceed this multiple of `||D||_2`.
pub const DAMPING_PD_RTOL: f64 = 1e-10;
/// Largest admissible off-diagonal of `L`, relative to `||L||_2`.
pub const STIFFNESS_OFFDIAG_RTOL: f64 = 1e-12;
/// Largest admissible row sum of `L`, relative to `||L||_2`.
pub const STIFFNESS_ROWSUM_RTOL: f64 = 1e-10;
/// Semidefiniteness and connectivity threshold on eigenvalues of `L`, relative to `||L||_2`.
pub const STIFFNESS_EIG_RTOL: f64 = 1e-10;

/// A validated second-order network with diagonal inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderNetwork {
    masses: DVector<f64>,
    d: DMatrix<f64>,
    l: DMatrix<f64>,
    f: DMatrix<f64>,
}

impl SecondOrderNetwork {
    /// Vertex count.
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Input count.
    pub fn m(&self) -> usize {
        self.f.ncols()
    }

    pub fn masses(&self) -> &DVector<f64> {
        &self.masses
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.masses)
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// Total damping `1^T D 1`.
    pub fn sigma_d(&self) -> f64 {
        self.d.sum()
    }

    /// The same network with a different input matrix.
    pub fn with_inputs(&self, f: DMatrix<f64>) -> Result<Self> {
        validate(self.masses.clone(), self.d.clone(), self.l.clone(), f)
    }
}

/// Checks every structural condition and returns the model, or all violations found.
///
/// Masses must be positive; `D` symmetric positive definite; `L` a symmetric Laplacian
/// (nonpositive off-diagonals, zero row sums, semidefinite) of a connected graph.
pub fn validate(
    masses: DVector<f64>,
    d: DMatrix<f64>,
    l: DMatrix<f64>,
    f: DMatrix<f64>,
) -> Result<SecondOrderNetwork> {
    let n = masses.len();
    if n == 0 {
        return Err(Error::Dimension("network has no vertices".into()));
    }
    for (name, mat) in [("damping", &d), ("stiffness", &l)] {
        if mat.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{name} is {}x{}, expected {n}x{n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
    }
    if f.nrows() != n {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, expected {n}",
            f.nrows()
        )));
    }

    let mut violations = Vec::new();
    if !masses.iter().all(|x| x.is_finite()) {
        violations.push(Violation::NonFinite { matrix: "masses" });
    }
    if !d.iter().all(|x| x.is_finite()) {
        violations.push(Violation::NonFinite { matrix: "damping" });
    }
    if !l.iter().all(|x| x.is_finite()) {
        violations.push(Violation::NonFinite {
            matrix: "stiffness",
        });
    }
    if !f.iter().all(|x| x.is_finite()) {
        violations.push(Violation::NonFinite { matrix: "input" });
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    for (i, &m) in masses.iter().enumerate() {
        if !(m > 0.0) {
            violations.push(Violation::NonPositiveMass { index: i, value: m });
        }
    }

    let d_norm = spectral_norm(&d);
    if let Some((row, col, difference)) = worst_asymmetry(&d, SYMMETRY_RTOL * d_norm) {
        violations.push(Violation::AsymmetricDamping {
            row,
            col,
            difference,
        });
    }
    let threshold = DAMPING_PD_RTOL * d_norm;
    let d_min = symmetric_eigenvalues(&d)[0];
    if !(d_min > threshold) {
        violations.push(Violation::DampingNotPositiveDefinite {
            min_eigenvalue: d_min,
            threshold,
        });
    }

    let l_norm = spectral_norm(&l);
    if let Some((row, col, difference)) = worst_asymmetry(&l, SYMMETRY_RTOL * l_norm) {
        violations.push(Violation::AsymmetricStiffness {
            row,
            col,
            difference,
        });
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in 0..n {
            let v = l[(i, j)];
            if i != j && v > STIFFNESS_OFFDIAG_RTOL * l_norm && worst.is_none_or(|w| v > w.2) {
                worst = Some((i, j, v));
            }
        }
    }
    if let Some((row, col, value)) = worst {
        violations.push(Violation::PositiveStiffnessOffDiagonal { row, col, value });
    }
    let mut worst_sum: Option<(usize, f64)> = None;
    for i in 0..n {
        let s: f64 = l.row(i).sum();
        if s.abs() > STIFFNESS_ROWSUM_RTOL * l_norm && worst_sum.is_none_or(|w| s.abs() > w.1.abs())
        {
            worst_sum = Some((i, s));
        }
    }
    if let Some((row, sum)) = worst_sum {
        violations.push(Violation::NonZeroStiffnessRowSum { row, sum });
    }
    let eig = symmetric_eigenvalues(&l);
    let eig_tol = STIFFNESS_EIG_RTOL * l_norm;
    if eig[0] < -eig_tol {
        violations.push(Violation::StiffnessNotSemidefinite {
            min_eigenvalue: eig[0],
        });
    }
    if n >= 2 && !(eig[1] > eig_tol) {
        violations.push(Violation::Disconnected {
            fiedler_value: eig[1],
            threshold: eig_tol,
        });
    }

    if violations.is_empty() {
        Ok(SecondOrderNetwork { masses, d, l, f })
    } else {
        Err(Error::Validation(violations))
    }
}

fn worst_asymmetry(m: &DMatrix<f64>, tol: f64) -> Option<(usize, usize, f64)> {
    let mut worst = None;
    let mut worst_diff = tol;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > worst_diff {
                worst_diff = diff;
                worst = Some((i, j, diff));
            }
        }
    }
    worst
}

/// State-space form `[x; x']' = a [x; x'] + b u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderRealization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl FirstOrderRealization {
    /// `a = [[0, I], [-M^-1 K, -M^-1 D]]`, `b = [[0], [M^-1 F]]` for diagonal `M`.
    pub fn from_parts(
        masses: &DVector<f64>,
        d: &DMatrix<f64>,
        k: &DMatrix<f64>,
        f: &DMatrix<f64>,
    ) -> Self {
        let n = masses.len();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        let mut b = DMatrix::zeros(2 * n, f.ncols());
        for i in 0..n {
            a[(i, n + i)] = 1.0;
            let inv = 1.0 / masses[i];
            for j in 0..n {
                a[(n + i, j)] = -inv * k[(i, j)];
                a[(n + i, n + j)] = -inv * d[(i, j)];
            }
            for j in 0..f.ncols() {
                b[(n + i, j)] = inv * f[(i, j)];
            }
        }
        FirstOrderRealization { a, b }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

pub fn first_order(sys: &SecondOrderNetwork) -> FirstOrderRealization {
    FirstOrderRealization::from_parts(&sys.masses, &sys.d, &sys.l, &sys.f)
}

/// Limit of `exp(a t)` and its left annihilator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceData {
    /// `sigma_d^-1 [[1 1^T D, 1 1^T M], [0, 0]]`.
    pub j: DMatrix<f64>,
    /// `1^T D 1`.
    pub sigma_d: f64,
    /// `(D 1; M 1)`.
    pub nu: DVector<f64>,
}

impl ConvergenceData {
    /// Convergence data of a network with diagonal masses `masses` and damping `d`,
    /// normalized by the given total damping.
    pub fn from_parts(masses: &DVector<f64>, d: &DMatrix<f64>, sigma_d: f64) -> Self {
        let n = masses.len();
        let d1 = d * ones(n);
        let mut nu = DVector::zeros(2 * n);
        nu.rows_mut(0, n).copy_from(&d1);
        nu.rows_mut(n, n).copy_from(masses);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for c in 0..2 * n {
            let v = nu[c] / sigma_d;
            for r in 0..n {
                j[(r, c)] = v;
            }
        }
        ConvergenceData { j, sigma_d, nu }
    }
}

pub fn convergence_matrix(sys: &SecondOrderNetwork) -> ConvergenceData {
    ConvergenceData::from_parts(&sys.masses, &sys.d, sys.sigma_d())
}

/// Relative singular-value threshold below which the pencil counts as singular.
const PENCIL_RCOND: f64 = 1e-12;

/// Transfer matrix `(s^2 M + s D + L)^-1 F`.
pub fn eval_transfer(sys: &SecondOrderNetwork, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::NonFinite("frequency"));
    }
    let n = sys.n();
    let pencil = DMatrix::from_fn(n, n, |i, j| {
        let m = if i == j { sys.masses[i] } else { 0.0 };
        s * s * m + s * sys.d[(i, j)] + Complex::from(sys.l[(i, j)])
    });
    let sv = SVD::new(pencil.clone(), false, false).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    if !(smin > PENCIL_RCOND * smax) {
        return Err(Error::SingularPencil { re: s.re, im: s.im });
    }
    let rhs = sys.f.map(Complex::from);
    pencil
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularPencil { re: s.re, im: s.im })
}

/// Checks that an output with position weights `hs` has a finite H2 norm for inputs `f`:
/// either `hs 1 = 0` or `1^T f = 0`.
pub(crate) fn check_bounded(hs: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<()> {
    const TOL: f64 = 1e-10;
    let n = f.nrows();
    let out_defect = (hs * ones(n)).amax();
    let out_scale = hs.amax().max(1.0) * n as f64;
    let in_defect = (ones(n).transpose() * f).amax();
    let in_scale = f.amax().max(1.0) * n as f64;
    if out_defect <= TOL * out_scale || in_defect <= TOL * in_scale {
        Ok(())
    } else {
        Err(Error::UnboundedNorm {
            residual: out_defect,
        })
    }
}

/// Checks the shape of an output weight pair `(hs, hv)` against `n` vertices.
pub(crate) fn check_output_shape(hs: &DMatrix<f64>, hv: &DMatrix<f64>, n: usize) -> Result<()> {
    if hs.ncols() != n || hv.ncols() != n || hs.nrows() != hv.nrows() {
        return Err(Error::Dimension(format!(
            "output weights are {}x{} and {}x{}, expected p x {n} each",
            hs.nrows(),
            hs.ncols(),
            hv.nrows(),
            hv.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Clause;
    use crate::linalg::symmetrize;
    use crate::network::{benchmark_system, BenchmarkConfig};

    pub(crate) fn four_vertex_network() -> SecondOrderNetwork {
        let masses = DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]);
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[
                4., -2., 0., -1., -2., 2., 0., 0., 0., 0., 3.5, -3., -1., 0., -3., 4.,
            ],
        );
        let l = DMatrix::from_row_slice(
            4,
            4,
            &[
                4., -1., -2., -1., -1., 3., -1., -1., -2., -1., 5., -2., -1., -1., -2., 4.,
            ],
        );
        let f = DMatrix::from_row_slice(4, 2, &[1., 0., 0., 0., 0., 0., 0., 1.]);
        validate(masses, d, l, f).unwrap()
    }

    fn clauses(err: Error) -> Vec<Clause> {
        match err {
            Error::Validation(v) => v.iter().map(|v| v.clause()).collect(),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn four_vertex_network_is_accepted() {
        let sys = four_vertex_network();
        assert_eq!(sys.n(), 4);
        assert_eq!(sys.m(), 2);
        assert_eq!(sys.sigma_d(), 1.5);
    }

    #[test]
    fn each_clause_is_reported() {
        let sys = four_vertex_network();
        let (m, d, l, f) = (
            sys.masses().clone(),
            sys.d().clone(),
            sys.l().clone(),
            sys.f().clone(),
        );

        let mut bad_m = m.clone();
        bad_m[2] = -1.0;
        let err = validate(bad_m, d.clone(), l.clone(), f.clone()).unwrap_err();
        assert_eq!(clauses(err.clone()), vec![Clause::Mass]);
        assert!(err.to_string().contains("mass 3"));

        let mut asym = d.clone();
        asym[(0, 1)] = -1.5;
        let err = validate(m.clone(), asym, l.clone(), f.clone()).unwrap_err();
        assert!(
            matches!(&err, Error::Validation(v) if matches!(v[0], Violation::AsymmetricDamping { row: 0, col: 1, .. }))
        );

        let singular = symmetrize(&DMatrix::from_element(4, 4, 1.0));
        assert_eq!(
            clauses(validate(m.clone(), singular, l.clone(), f.clone()).unwrap_err()),
            vec![Clause::Damping]
        );

        let zero = DMatrix::zeros(4, 4);
        let err = validate(m.clone(), d.clone(), zero, f.clone()).unwrap_err();
        assert!(
            matches!(&err, Error::Validation(v) if matches!(v[..], [Violation::Disconnected { .. }]))
        );

        let mut pos = l.clone();
        pos[(0, 1)] = 1.0;
        pos[(1, 0)] = 1.0;
        pos[(0, 0)] = 0.0;
        pos[(1, 1)] = 1.0;
        let got = clauses(validate(m.clone(), d.clone(), pos, f.clone()).unwrap_err());
        assert!(got.contains(&Clause::Stiffness));

        let mut nan = d.clone();
        nan[(1, 1)] = f64::NAN;
        assert!(matches!(
            validate(m, nan, l, f).unwrap_err(),
            Error::Validation(v) if v == vec![Violation::NonFinite { matrix: "damping" }]
        ));
    }

    #[test]
    fn single_vertex_is_connected() {
        let sys = validate(
            DVector::from_element(1, 2.0),
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(sys.is_ok());
    }

    #[test]
    fn dimension_mismatch_is_not_a_violation() {
        let sys = four_vertex_network();
        let f = DMatrix::zeros(3, 1);
        assert!(matches!(
            validate(sys.masses().clone(), sys.d().clone(), sys.l().clone(), f),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn first_order_blocks() {
        let fo = first_order(&four_vertex_network());
        let n = 4;
        assert_eq!(fo.a.view((0, 0), (n, n)), DMatrix::<f64>::zeros(n, n));
        assert_eq!(fo.a.view((0, n), (n, n)), DMatrix::<f64>::identity(n, n));
        assert_eq!(fo.b.view((0, 0), (n, 2)), DMatrix::<f64>::zeros(n, 2));
        let row: Vec<f64> = fo.a.view((n, 0), (1, n)).iter().copied().collect();
        assert_eq!(row, vec![-4.0, 1.0, 2.0, 1.0]);
        assert_eq!(fo.a[(n + 1, n)], 1.0);
    }

    #[test]
    fn convergence_identities() {
        let sys = four_vertex_network();
        let fo = first_order(&sys);
        let cd = convergence_matrix(&sys);
        assert_eq!(cd.sigma_d, 1.5);
        assert!(cd.j.rows(4, 4).iter().all(|&x| x == 0.0));
        let a_norm = spectral_norm(&fo.a);
        assert!((&cd.j * &cd.j - &cd.j).amax() <= 1e-9);
        assert!((&fo.a * &cd.j).amax() <= 1e-9 * a_norm);
        assert!((&cd.j * &fo.a).amax() <= 1e-9 * a_norm);
        assert!((cd.nu.transpose() * &fo.a).amax() <= 1e-10);
        assert!((cd.nu.transpose() * &cd.j - cd.nu.transpose()).amax() <= 1e-10);
    }

    #[test]
    fn semistable_spectrum_and_limit() {
        for seed in 0..8 {
            let sys =
                benchmark_system(6 + seed as usize, &BenchmarkConfig::default(), seed).unwrap();
            let fo = first_order(&sys);
            let schur = crate::matrixeq::real_schur(&fo.a).unwrap();
            let eig = schur.eigenvalues();
            let tol = 1e-9 * spectral_norm(&fo.a);
            let zero = eig.iter().filter(|e| e.0.hypot(e.1) <= tol).count();
            assert_eq!(zero, 1);
            let decay = eig
                .iter()
                .filter(|e| e.0.hypot(e.1) > tol)
                .map(|e| -e.0)
                .fold(f64::INFINITY, f64::min);
            assert!(decay > 1e-10);
            let t = 40.0 / decay;
            let lim = (&fo.a * t).exp();
            assert!((lim - convergence_matrix(&sys).j).norm() <= 1e-6);
        }
    }

    #[test]
    fn transfer_cases() {
        let sys = four_vertex_network();
        assert!(matches!(
            eval_transfer(&sys, Complex::new(0.0, 0.0)),
            Err(Error::SingularPencil { .. })
        ));

        let single = validate(
            DVector::from_element(1, 2.0),
            DMatrix::from_element(1, 1, 3.0),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 5.0),
        )
        .unwrap();
        let s = Complex::new(0.7, -1.3);
        let eta = eval_transfer(&single, s).unwrap()[(0, 0)];
        let want = Complex::from(5.0) / (s * s * 2.0 + s * 3.0);
        assert!((eta - want).norm() <= 1e-14 * want.norm());

        let fo = first_order(&sys);
        for s in [
            Complex::new(0.3, 0.8),
            Complex::new(2.0, -5.0),
            Complex::new(0.01, 0.0),
        ] {
            let eta = eval_transfer(&sys, s).unwrap();
            let conj = eval_transfer(&sys, s.conj()).unwrap();
            assert!((eta.map(|z| z.conj()) - &conj).norm() <= 1e-13 * eta.norm());

            let n2 = fo.state_dim();
            let shifted = DMatrix::from_fn(n2, n2, |i, j| {
                let id = if i == j { s } else { Complex::from(0.0) };
                id - Complex::from(fo.a[(i, j)])
            });
            let state = shifted.lu().solve(&fo.b.map(Complex::from)).unwrap();
            let via_state = state.rows(0, 4).into_owned();
            assert!((via_state - &eta).norm() <= 1e-9 * eta.norm());
        }
    }

    #[test]
    fn boundedness_check() {
        let f = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let diff = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let sel = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(check_bounded(&diff, &f).is_ok());
        assert!(matches!(
            check_bounded(&sel, &f),
            Err(Error::UnboundedNorm { .. })
        ));
        let balanced = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert!(check_bounded(&sel, &balanced).is_ok());
    }
}
