//! Time-domain quadrature of impulse-response energies, used as an independent check on
//! the Gramian formulas.

use nalgebra::DMatrix;

use super::{
    check_bounded, check_output_shape, convergence_matrix, first_order, SecondOrderNetwork,
};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::matrixeq::real_schur;

/// Relative size of the integrand at the horizon, against its peak, above which the
/// horizon is rejected as too short.
pub const TAIL_RTOL: f64 = 1e-8;

/// Uniform composite-Simpson grid on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl QuadratureGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "quadrature horizon {t_max} must be positive"
            )));
        }
        if steps == 0 || !steps.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "Simpson quadrature needs a positive even step count, got {steps}"
            )));
        }
        Ok(QuadratureGrid { t_max, steps })
    }

    /// A grid resolving every mode of the given system matrices: horizon `40 / decay`
    /// where `decay` is the slowest nonzero decay rate, and step `0.025 / rho` where `rho`
    /// is the largest eigenvalue modulus.
    pub fn covering(mats: &[&DMatrix<f64>]) -> Result<Self> {
        let mut rho: f64 = 0.0;
        let mut decay = f64::INFINITY;
        for a in mats {
            let schur = real_schur(a)?;
            let tol = 1e-9 * spectral_norm(a);
            for (re, im) in schur.eigenvalues() {
                let modulus = re.hypot(im);
                rho = rho.max(modulus);
                if modulus > tol {
                    decay = decay.min(-re);
                }
            }
        }
        if !(decay > 0.0) {
            return Err(Error::StabilityViolation {
                real_part: -decay,
                tolerance: 0.0,
            });
        }
        if !decay.is_finite() {
            return QuadratureGrid::new(1.0, 2);
        }
        let t_max = 40.0 / decay;
        let steps = ((t_max * rho / 0.025).ceil() as usize).max(2);
        QuadratureGrid::new(t_max, steps + steps % 2)
    }

    fn step(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    fn weight(&self, k: usize) -> f64 {
        let w = if k == 0 || k == self.steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * self.step() / 3.0
    }
}

/// A semistable input-to-state map whose impulse response `(exp(a t) - j) b` decays.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Limit of `exp(a t)`; `None` for Hurwitz `a`.
    pub convergence: Option<DMatrix<f64>>,
}

impl ImpulseModel {
    pub fn of_network(sys: &SecondOrderNetwork) -> Self {
        let fo = first_order(sys);
        ImpulseModel {
            a: fo.a,
            b: fo.b,
            convergence: Some(convergence_matrix(sys).j),
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.a.nrows();
        if !self.a.is_square() || self.b.nrows() != n {
            return Err(Error::Dimension(format!(
                "impulse model with a {}x{} and b {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                self.b.nrows(),
                self.b.ncols()
            )));
        }
        if let Some(j) = &self.convergence {
            if j.shape() != (n, n) {
                return Err(Error::Dimension("convergence matrix shape".into()));
            }
        }
        Ok(())
    }

    /// Calls `visit(k, g_k)` with `g_k = (exp(a t_k) - j) b` on every grid point.
    fn for_each_sample(
        &self,
        grid: &QuadratureGrid,
        mut visit: impl FnMut(usize, &DMatrix<f64>),
    ) -> Result<()> {
        self.check()?;
        let step = (&self.a * grid.step()).exp();
        let limit = match &self.convergence {
            Some(j) => j * &self.b,
            None => DMatrix::zeros(self.b.nrows(), self.b.ncols()),
        };
        let mut y = self.b.clone();
        for k in 0..=grid.steps {
            visit(k, &(&y - &limit));
            y = &step * y;
        }
        Ok(())
    }
}

/// `integral_0^t_max g1(t) g2(t)^T dt` with `g_i = (exp(a_i t) - j_i) b_i`.
pub fn gramian_quadrature(
    left: &ImpulseModel,
    right: &ImpulseModel,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    if left.b.ncols() != right.b.ncols() {
        return Err(Error::Dimension(
            "models have different input counts".into(),
        ));
    }
    let mut right_samples = Vec::with_capacity(grid.steps + 1);
    right.for_each_sample(grid, |_, g| right_samples.push(g.clone()))?;
    let mut acc = DMatrix::zeros(left.a.nrows(), right.a.nrows());
    let mut peak: f64 = 0.0;
    let mut last = 0.0;
    left.for_each_sample(grid, |k, g| {
        let g2 = &right_samples[k];
        acc += g * g2.transpose() * grid.weight(k);
        let size = (g.norm() * g2.norm()).sqrt();
        peak = peak.max(size);
        last = size;
    })?;
    check_tail(last, peak, (left.b.norm() * right.b.norm()).sqrt())?;
    Ok(acc)
}

/// `sqrt(integral_0^t_max ||c g(t)||_F^2 dt)`.
pub fn output_h2_quadrature(
    model: &ImpulseModel,
    c: &DMatrix<f64>,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if c.ncols() != model.a.nrows() {
        return Err(Error::Dimension(format!(
            "output matrix has {} columns, expected {}",
            c.ncols(),
            model.a.nrows()
        )));
    }
    let mut acc = 0.0;
    let mut peak: f64 = 0.0;
    let mut last = 0.0;
    model.for_each_sample(grid, |k, g| {
        let out = c * g;
        let e = out.norm_squared();
        acc += e * grid.weight(k);
        peak = peak.max(e.sqrt());
        last = e.sqrt();
    })?;
    check_tail(last, peak, c.norm() * model.b.norm())?;
    Ok(acc.max(0.0).sqrt())
}

/// H2 norm of the output `hs x + hv x'` of the network's impulse response, by quadrature.
pub fn h2_quadrature(
    sys: &SecondOrderNetwork,
    hs: &DMatrix<f64>,
    hv: &DMatrix<f64>,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let n = sys.n();
    check_output_shape(hs, hv, n)?;
    check_bounded(hs, sys.f())?;
    let mut c = DMatrix::zeros(hs.nrows(), 2 * n);
    c.view_mut((0, 0), hs.shape()).copy_from(hs);
    c.view_mut((0, n), hv.shape()).copy_from(hv);
    output_h2_quadrature(&ImpulseModel::of_network(sys), &c, grid)
}

/// `scale` bounds the integrand's size before projection; round-off below
/// `1e-12 * scale` is never treated as a tail.
fn check_tail(last: f64, peak: f64, scale: f64) -> Result<()> {
    let limit = (TAIL_RTOL * peak).max(1e-12 * scale);
    if last > limit {
        return Err(Error::Truncation { tail: last, limit });
    }
    Ok(())
}
