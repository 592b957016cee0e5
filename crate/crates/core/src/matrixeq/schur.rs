use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, spectral_norm};

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-9;
const SCHUR_RETRIES: usize = 4;

/// A 1x1 or 2x2 diagonal block of a quasi-triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurBlock {
    pub start: usize,
    pub size: usize,
    /// Real part of the block's eigenvalue(s).
    pub re: f64,
    /// Imaginary part (nonnegative member of the conjugate pair, 0 for 1x1 blocks).
    pub im: f64,
}

impl SchurBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

/// Real Schur factorization `a = q * t * q^T`.
///
/// Blocks whose eigenvalues have a real part within `zero_tol` of zero are moved to the
/// bottom-right corner of `t`; the remaining blocks keep the relative order produced by the
/// QR iteration.
#[derive(Debug, Clone)]
pub struct RealSchurForm {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    original: DMatrix<f64>,
    blocks: Vec<SchurBlock>,
    zero_tol: f64,
    trailing_zero_blocks: usize,
}

impl RealSchurForm {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// The factorized matrix.
    pub fn original(&self) -> &DMatrix<f64> {
        &self.original
    }

    pub fn blocks(&self) -> &[SchurBlock] {
        &self.blocks
    }

    /// Absolute threshold on the real part used to classify zero eigenvalues.
    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    /// The trailing blocks whose eigenvalues have near-zero real part.
    pub fn zero_blocks(&self) -> &[SchurBlock] {
        &self.blocks[self.blocks.len() - self.trailing_zero_blocks..]
    }

    /// Eigenvalues as (re, im) pairs, one per eigenvalue, in diagonal order.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            if b.size == 1 {
                out.push((b.re, 0.0));
            } else {
                out.push((b.re, b.im));
                out.push((b.re, -b.im));
            }
        }
        out
    }
}

/// Real Schur decomposition with near-zero eigenvalues ordered last, using the zero
/// threshold `1e-9 * ||a||_2`.
pub fn real_schur(a: &DMatrix<f64>) -> Result<RealSchurForm> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "real_schur needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite("matrix passed to real_schur"));
    }
    let tol = ZERO_EIGENVALUE_RTOL * spectral_norm(a);
    real_schur_with_tolerance(a, tol)
}

/// Plain QR iteration, retried on fixed orthogonal similarities of `a` when it stalls.
fn converged_schur(a: &DMatrix<f64>, max_iter: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
        return Ok(s.unpack());
    }
    let n = a.nrows();
    for attempt in 1..=SCHUR_RETRIES {
        let seed = DMatrix::from_fn(n, n, |i, j| {
            let x = (attempt * 7919 + i * 104_729 + j * 1_299_709) as f64;
            (x * 0.618_033_988_749_895).sin()
        });
        let q0 = seed.qr().q();
        let rotated = q0.transpose() * a * &q0;
        if let Some(s) = Schur::try_new(rotated, f64::EPSILON, max_iter) {
            let (q, t) = s.unpack();
            return Ok((q0 * q, t));
        }
    }
    Err(Error::SchurNonConvergence {
        iterations: max_iter,
    })
}

/// As [`real_schur`] with an explicit absolute zero threshold.
pub fn real_schur_with_tolerance(a: &DMatrix<f64>, zero_tol: f64) -> Result<RealSchurForm> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "real_schur needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite("matrix passed to real_schur"));
    }
    let n = a.nrows();
    let max_iter = 100 * n.max(10);
    let (mut q, mut t) = converged_schur(a, max_iter)?;

    for j in 0..n {
        for i in j + 2..n {
            t[(i, j)] = 0.0;
        }
    }
    split_real_pairs(&mut t, &mut q);

    let blocks = scan_blocks(&t)?;
    let flagged: Vec<bool> = blocks.iter().map(|b| b.re.abs() <= zero_tol).collect();
    move_flagged_last(&mut t, &mut q, &blocks, &flagged)?;
    split_real_pairs(&mut t, &mut q);

    let blocks = scan_blocks(&t)?;
    let trailing_zero_blocks = blocks
        .iter()
        .rev()
        .take_while(|b| b.re.abs() <= zero_tol)
        .count();
    let total_flagged = blocks.iter().filter(|b| b.re.abs() <= zero_tol).count();
    if total_flagged != trailing_zero_blocks {
        return Err(Error::NumericalFailure(
            "eigenvalue reordering left a near-zero block in the leading part".into(),
        ));
    }

    let recon = &q * &t * q.transpose();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if (recon - a).norm() > 1e-9 * scale && (n > 0) {
        return Err(Error::NumericalFailure(
            "real Schur reconstruction error exceeds 1e-9 relative".into(),
        ));
    }

    Ok(RealSchurForm {
        q,
        t,
        original: a.clone(),
        blocks,
        zero_tol,
        trailing_zero_blocks,
    })
}

fn block_eigen(t: &DMatrix<f64>, start: usize, size: usize) -> (f64, f64) {
    if size == 1 {
        return (t[(start, start)], 0.0);
    }
    let (a, b) = (t[(start, start)], t[(start, start + 1)]);
    let (c, d) = (t[(start + 1, start)], t[(start + 1, start + 1)]);
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        // real pair; split_real_pairs removes these blocks
        (half_tr, 0.0)
    } else {
        (half_tr, (-disc).sqrt())
    }
}

fn scan_blocks(t: &DMatrix<f64>) -> Result<Vec<SchurBlock>> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != 0.0 {
            2
        } else {
            1
        };
        if size == 2 && i + 2 < n && t[(i + 2, i + 1)] != 0.0 {
            return Err(Error::NumericalFailure(format!(
                "Schur factor is not quasi-triangular near row {}",
                i + 1
            )));
        }
        let (re, im) = block_eigen(t, i, size);
        blocks.push(SchurBlock {
            start: i,
            size,
            re,
            im,
        });
        i += size;
    }
    Ok(blocks)
}

/// Triangularize every 2x2 diagonal block that has real eigenvalues.
fn split_real_pairs(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b) = (t[(i, i)], t[(i, i + 1)]);
        let (c, d) = (t[(i + 1, i)], t[(i + 1, i + 1)]);
        let p = 0.5 * (a - d);
        let disc = p * p + b * c;
        if disc < 0.0 {
            i += 2;
            continue;
        }
        // eigenvalue lambda = (a+d)/2 + sign(p) sqrt(disc), computed stably
        let root = disc.sqrt();
        let lambda = 0.5 * (a + d) + if p >= 0.0 { root } else { -root };
        // eigenvector of [[a,b],[c,d]] for lambda, from whichever row is better conditioned
        let v1 = (b, lambda - a);
        let v2 = (lambda - d, c);
        let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        };
        let r = x.hypot(y);
        if r == 0.0 {
            i += 2;
            continue;
        }
        let (cs, sn) = (x / r, y / r);
        // G = [[cs, -sn], [sn, cs]]; first column is the eigenvector
        apply_rotation(t, q, i, cs, sn);
        t[(i + 1, i)] = 0.0;
        i += 2;
    }
}

/// t <- G^T t G and q <- q G on rows/columns (i, i+1).
fn apply_rotation(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>, i: usize, cs: f64, sn: f64) {
    let n = t.nrows();
    for j in 0..n {
        let (u, v) = (t[(i, j)], t[(i + 1, j)]);
        t[(i, j)] = cs * u + sn * v;
        t[(i + 1, j)] = -sn * u + cs * v;
    }
    for j in 0..n {
        let (u, v) = (t[(j, i)], t[(j, i + 1)]);
        t[(j, i)] = cs * u + sn * v;
        t[(j, i + 1)] = -sn * u + cs * v;
    }
    for j in 0..q.nrows() {
        let (u, v) = (q[(j, i)], q[(j, i + 1)]);
        q[(j, i)] = cs * u + sn * v;
        q[(j, i + 1)] = -sn * u + cs * v;
    }
}

/// Stable partition of the diagonal blocks: flagged blocks move to the end.
fn move_flagged_last(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    blocks: &[SchurBlock],
    flagged: &[bool],
) -> Result<()> {
    // Work on a list of (size, flagged) in diagonal order.
    let mut layout: Vec<(usize, bool)> = blocks
        .iter()
        .map(|b| b.size)
        .zip(flagged.iter().copied())
        .collect();
    let mut settled = layout.len();
    for idx in (0..layout.len()).rev() {
        if !layout[idx].1 {
            continue;
        }
        // bubble block idx right until it reaches the settled region
        let mut pos = idx;
        while pos + 1 < settled {
            let start: usize = layout[..pos].iter().map(|b| b.0).sum();
            swap_adjacent_blocks(t, q, start, layout[pos].0, layout[pos + 1].0)?;
            layout.swap(pos, pos + 1);
            pos += 1;
        }
        settled = pos;
    }
    Ok(())
}

/// Swap the adjacent diagonal blocks of sizes `p` (at `k`) and `s` (at `k + p`).
fn swap_adjacent_blocks(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    k: usize,
    p: usize,
    s: usize,
) -> Result<()> {
    let w = p + s;
    let t11 = t.view((k, k), (p, p)).clone_owned();
    let t12 = t.view((k, k + p), (p, s)).clone_owned();
    let t22 = t.view((k + p, k + p), (s, s)).clone_owned();

    // T11 X - X T22 = T12, vectorized column-major
    let ps = p * s;
    let mut kron = DMatrix::<f64>::zeros(ps, ps);
    for jc in 0..s {
        for ir in 0..p {
            let row = jc * p + ir;
            for kk in 0..p {
                kron[(row, jc * p + kk)] += t11[(ir, kk)];
            }
            for l in 0..s {
                kron[(row, l * p + ir)] -= t22[(l, jc)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(ps, t12.iter().copied());
    let sol = kron.lu().solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure("cannot swap Schur blocks with equal spectra".into())
    })?;
    if !sol.iter().all(|x| x.is_finite()) {
        return Err(Error::NumericalFailure(
            "Schur block swap produced non-finite values".into(),
        ));
    }

    // Basis [ -X ; I_s ] of the invariant subspace belonging to T22, completed to an
    // orthogonal w x w matrix by Gram-Schmidt against the identity.
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(w);
    let mut candidates: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(s + w);
    for jc in 0..s {
        let mut v = nalgebra::DVector::zeros(w);
        for ir in 0..p {
            v[ir] = -sol[jc * p + ir];
        }
        v[p + jc] = 1.0;
        candidates.push(v);
    }
    for e in 0..w {
        let mut v = nalgebra::DVector::zeros(w);
        v[e] = 1.0;
        candidates.push(v);
    }
    for mut v in candidates {
        if cols.len() == w {
            break;
        }
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            cols.push(v / nrm);
        }
    }
    if cols.len() != w {
        return Err(Error::NumericalFailure(
            "failed to complete orthogonal basis in block swap".into(),
        ));
    }
    let g = DMatrix::from_columns(&cols);

    let n = t.nrows();
    let rows = g.transpose() * t.view((k, 0), (w, n));
    t.view_mut((k, 0), (w, n)).copy_from(&rows);
    let cols_t = t.view((0, k), (n, w)) * &g;
    t.view_mut((0, k), (n, w)).copy_from(&cols_t);
    let cols_q = q.view((0, k), (q.nrows(), w)) * &g;
    q.view_mut((0, k), (q.nrows(), w)).copy_from(&cols_q);

    // new layout: block of size s at k, block of size p at k + s
    for i in k + s..k + w {
        for j in k..k + s {
            t[(i, j)] = 0.0;
        }
    }
    for j in 0..n {
        for i in j + 2..n {
            t[(i, j)] = 0.0;
        }
    }
    Ok(())
}
