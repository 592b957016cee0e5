use nalgebra::{DMatrix, DVector};

use super::schur::{real_schur, RealSchurForm, SchurBlock};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Diagnostics of a Sylvester-type solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// `||a X + X b + c||_F / ||c||_F` (absolute residual when `c = 0`).
    pub residual_rel: f64,
    /// Number of singular diagonal equations whose free variable was fixed.
    pub singular_blocks_zeroed: usize,
    /// Magnitude of the right-hand side on the singular diagonal equation.
    pub consistency_defect: f64,
}

/// Handling of the singular diagonal equation of a semistable solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularOptions {
    /// Accepted defect relative to `||c||_F`.
    pub consistency_rtol: f64,
    /// Value assigned to the free variable (in Schur coordinates).
    pub free_value: f64,
}

impl Default for SingularOptions {
    fn default() -> Self {
        SingularOptions {
            consistency_rtol: 1e-7,
            free_value: 0.0,
        }
    }
}

/// Unique solution of `a X + X a^T + q = 0` for Hurwitz `a`.
pub fn solve_standard_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, "a")?;
    check_shape(q, a.nrows(), a.nrows(), "q")?;
    let schur = real_schur(a)?;
    if let Some(b) = schur.blocks().iter().find(|b| b.re >= -schur.zero_tol()) {
        return Err(Error::StabilityViolation {
            real_part: b.re,
            tolerance: schur.zero_tol(),
        });
    }
    let (x, _) = solve_sylvester_schur(&schur, &schur, q, &SingularOptions::default())?;
    Ok(symmetrize(&x))
}

/// A particular symmetric solution of `a X + X a^T + c = 0` for semistable `a`
/// with at most one simple zero eigenvalue.
///
/// The free variable of the singular diagonal equation is fixed to zero in Schur
/// coordinates.
pub fn solve_lyapunov_like(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SolveReport)> {
    solve_lyapunov_like_with(a, c, &SingularOptions::default())
}

pub fn solve_lyapunov_like_with(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    opts: &SingularOptions,
) -> Result<(DMatrix<f64>, SolveReport)> {
    check_square(a, "a")?;
    check_shape(c, a.nrows(), a.nrows(), "c")?;
    let schur = real_schur(a)?;
    let (x, mut report) = solve_sylvester_schur(&schur, &schur, c, opts)?;
    let x = symmetrize(&x);
    report.residual_rel = relative_residual(a, &a.transpose(), c, &x);
    Ok((x, report))
}

/// A particular solution of `a X + X b + c = 0` for semistable `a` and `b`.
pub fn solve_sylvester_like(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SolveReport)> {
    solve_sylvester_like_with(a, b, c, &SingularOptions::default())
}

pub fn solve_sylvester_like_with(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    opts: &SingularOptions,
) -> Result<(DMatrix<f64>, SolveReport)> {
    check_square(a, "a")?;
    check_square(b, "b")?;
    check_shape(c, a.nrows(), b.nrows(), "c")?;
    let sa = real_schur(a)?;
    let sbt = real_schur(&b.transpose())?;
    solve_sylvester_schur(&sa, &sbt, c, opts)
}

/// Bartels-Stewart on precomputed factorizations: `schur_a` factors `a`, `schur_bt`
/// factors `b^T`, and the equation solved is `a X + X b + c = 0`.
///
/// Both factorizations must carry their zero blocks last (as produced by
/// [`real_schur`]); then the only singular diagonal equation is the very first one
/// solved, and its right-hand side is the projection of `c` onto the two left null
/// vectors.
pub fn solve_sylvester_schur(
    schur_a: &RealSchurForm,
    schur_bt: &RealSchurForm,
    c: &DMatrix<f64>,
    opts: &SingularOptions,
) -> Result<(DMatrix<f64>, SolveReport)> {
    let n1 = schur_a.dim();
    let n2 = schur_bt.dim();
    check_shape(c, n1, n2, "c")?;
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let za = singular_block(schur_a)?;
    let zb = singular_block(schur_bt)?;

    let ta = &schur_a.t;
    let tb = &schur_bt.t;
    let c_norm = c.norm();
    let ct = schur_a.q.transpose() * c * &schur_bt.q;

    let mut y = DMatrix::<f64>::zeros(n1, n2);
    let mut zeroed = 0;
    let mut defect = 0.0;

    for bj in schur_bt.blocks().iter().rev() {
        for bi in schur_a.blocks().iter().rev() {
            let (i0, p) = (bi.start, bi.size);
            let (j0, q) = (bj.start, bj.size);
            let ie = i0 + p;
            let je = j0 + q;
            // r = ct[I,J] + sum_{k >= ie} ta[I,k] y[k,J] + sum_{l >= je} y[I,l] tb[J,l]
            let mut r = [[0.0f64; 2]; 2];
            for (ii, i) in (i0..ie).enumerate() {
                for (jj, j) in (j0..je).enumerate() {
                    let mut acc = ct[(i, j)];
                    for k in ie..n1 {
                        acc += ta[(i, k)] * y[(k, j)];
                    }
                    for l in je..n2 {
                        acc += y[(i, l)] * tb[(j, l)];
                    }
                    r[ii][jj] = acc;
                }
            }

            if Some(bi.start) == za && Some(bj.start) == zb {
                defect = r[0][0].abs();
                let limit = opts.consistency_rtol * c_norm;
                if defect > limit {
                    return Err(Error::InconsistentEquation {
                        defect,
                        tolerance: limit,
                    });
                }
                y[(i0, j0)] = opts.free_value;
                zeroed += 1;
                continue;
            }

            let sol = solve_small(ta, tb, bi, bj, &r)?;
            for ii in 0..p {
                for jj in 0..q {
                    y[(i0 + ii, j0 + jj)] = sol[jj * p + ii];
                }
            }
        }
    }

    let x = &schur_a.q * y * schur_bt.q.transpose();
    let b = schur_bt.original().transpose();
    let report = SolveReport {
        residual_rel: relative_residual(schur_a.original(), &b, c, &x),
        singular_blocks_zeroed: zeroed,
        consistency_defect: defect,
    };
    Ok((x, report))
}

/// `||a X + X b + c||_F / ||c||_F`, or the absolute residual for `c = 0`.
pub fn relative_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> f64 {
    let res = (a * x + x * b + c).norm();
    let cn = c.norm();
    if cn > 0.0 {
        res / cn
    } else {
        res
    }
}

/// Start index of the singular (zero) 1x1 block, after checking semistability.
fn singular_block(schur: &RealSchurForm) -> Result<Option<usize>> {
    let tol = schur.zero_tol();
    let zero = schur.zero_blocks();
    if zero.len() > 1 || zero.iter().any(|b| b.size != 1 || b.im.abs() > tol) {
        return Err(Error::ZeroEigenvalueMultiplicity {
            found: zero.iter().map(|b| b.size).sum(),
        });
    }
    if let Some(b) = schur.blocks()[..schur.blocks().len() - zero.len()]
        .iter()
        .find(|b| b.re >= -tol)
    {
        return Err(Error::StabilityViolation {
            real_part: b.re,
            tolerance: tol,
        });
    }
    Ok(zero.first().map(|b| b.start))
}

/// Solve `T_II Y + Y T_JJ^T = -R` for a block of size at most 2x2 (vec column-major).
fn solve_small(
    ta: &DMatrix<f64>,
    tb: &DMatrix<f64>,
    bi: &SchurBlock,
    bj: &SchurBlock,
    r: &[[f64; 2]; 2],
) -> Result<Vec<f64>> {
    let (p, q) = (bi.size, bj.size);
    if p == 1 && q == 1 {
        let coeff = ta[(bi.start, bi.start)] + tb[(bj.start, bj.start)];
        return Ok(vec![-r[0][0] / coeff]);
    }
    let m = p * q;
    let mut k = DMatrix::<f64>::zeros(m, m);
    for jj in 0..q {
        for ii in 0..p {
            let row = jj * p + ii;
            // (I_q (x) T_II) part
            for kk in 0..p {
                k[(row, jj * p + kk)] += ta[(bi.start + ii, bi.start + kk)];
            }
            // (T_JJ (x) I_p) part: (Y T_JJ^T)_{ii,jj} = sum_l Y_{ii,l} T_JJ[jj,l]
            for l in 0..q {
                k[(row, l * p + ii)] += tb[(bj.start + jj, bj.start + l)];
            }
        }
    }
    let rhs = DVector::from_fn(m, |row, _| -r[row % p][row / p]);
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular diagonal block system".into()))?;
    Ok(sol.iter().copied().collect())
}

fn check_square(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}
