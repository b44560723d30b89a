//! Hermitian eigendecomposition via cyclic Jacobi, and the matrix functions
//! built on top of it: PSD square root, polar decomposition, operator norm
//! and numerical rank.
//!
//! Cyclic Jacobi is exact enough at the dimensions this crate supports
//! (≤ 16 for effect spaces, ≤ 256 for Choi matrices) and keeps the kernel
//! self-contained: no LAPACK linkage, fully deterministic sweep order.

use num_complex::Complex64;

use super::{CMatrix, ToleranceConfig};
use crate::{Error, Result};

/// Hard cap on Jacobi sweeps; quadratic convergence makes ~10 typical.
const MAX_SWEEPS: usize = 100;

fn off_diagonal_fro(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Jacobi on the Hermitian part of `m`; no Hermiticity precondition check.
///
/// Returns eigenvalues ascending and the matching unitary of eigenvectors.
pub(crate) fn eig_symmetrized(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.dim();
    let mut a = m.hermitize();
    let mut v = CMatrix::identity(n);
    let scale = a.fro_norm();
    let stop = f64::EPSILON * scale;

    let mut sweeps = 0;
    while off_diagonal_fro(&a) > stop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off: off_diagonal_fro(&a) });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok((values, vectors))
}

/// One Jacobi rotation annihilating the (p, q) entry: `A ← R* A R`, `V ← V R`
/// with `R` the identity outside the (p, q) block `[[c, w], [-w̄, c]]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let b = a.get(p, q);
    let abs_b = b.norm();
    if abs_b <= f64::MIN_POSITIVE {
        return;
    }
    let phase = b / abs_b;
    let theta = (a.get(q, q).re - a.get(p, p).re) / (2.0 * abs_b);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let w = phase * s;

    let n = a.dim();
    // Column update: B = A R.
    for i in 0..n {
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, aip * c - aiq * w.conj());
        a.set(i, q, aip * w + aiq * c);
    }
    // Row update: A' = R* B.
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, apj * c - aqj * w);
        a.set(q, j, apj * w.conj() + aqj * c);
    }
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    // Accumulate V ← V R.
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, vip * c - viq * w.conj());
        v.set(i, q, vip * w + viq * c);
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending; the second component is the unitary `V`
/// with `M = V diag(λ) V*`. Fails with [`Error::NotHermitian`] when
/// `‖M − M*‖` exceeds `hermit_tol`.
pub fn hermitian_eig(m: &CMatrix, tol: &ToleranceConfig) -> Result<(Vec<f64>, CMatrix)> {
    let defect = m.hermiticity_defect();
    if defect > tol.hermit_tol {
        return Err(Error::NotHermitian { defect, tol: tol.hermit_tol });
    }
    eig_symmetrized(m)
}

/// The unique PSD square root of a PSD Hermitian matrix.
///
/// Eigenvalues in `[-psd_tol, 0)` are clamped to zero; anything below
/// `-psd_tol` is rejected as [`Error::NotPsd`].
pub fn sqrt_psd(m: &CMatrix, tol: &ToleranceConfig) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eig(m, tol)?;
    let min = values.first().copied().unwrap_or(0.0);
    if min < -tol.psd_tol {
        return Err(Error::NotPsd { min_eigenvalue: min, tol: tol.psd_tol });
    }
    let roots: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(reassemble(&vectors, &roots).hermitize())
}

/// `V diag(d) V*`.
pub(crate) fn reassemble(vectors: &CMatrix, diag: &[f64]) -> CMatrix {
    let n = vectors.dim();
    let mut scaled = vectors.clone();
    for j in 0..n {
        for i in 0..n {
            scaled.set(i, j, vectors.get(i, j) * diag[j]);
        }
    }
    scaled.matmul(&vectors.adjoint())
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint().matmul(m);
    let (values, _) = eig_symmetrized(&gram).expect("Jacobi converges on Hermitian input");
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Polar decomposition `C = U P` with `P = (C*C)^{1/2}` PSD and `U` unitary.
///
/// `U` is completed to a full unitary on `ker(P)` (a unitary is in
/// particular a partial isometry, and the reconstruction only constrains `U`
/// on `range(P)`).
pub fn polar_decompose(c: &CMatrix, _tol: &ToleranceConfig) -> Result<(CMatrix, CMatrix)> {
    let n = c.dim();
    let gram = c.adjoint().matmul(c);
    let (values, x) = eig_symmetrized(&gram)?;
    let sigmas: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let p = reassemble(&x, &sigmas).hermitize();

    let sigma_max = sigmas.last().copied().unwrap_or(0.0);
    let cut = (sigma_max.max(1.0)) * 1e-13;

    // Left vectors w_i = C x_i / σ_i for σ_i above the cut, processed in
    // decreasing σ order so Gram-Schmidt cleanup never perturbs the
    // well-conditioned directions.
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut col_of_x: Vec<Option<usize>> = vec![None; n];
    for idx in (0..n).rev() {
        if sigmas[idx] <= cut {
            continue;
        }
        let xi: Vec<Complex64> = (0..n).map(|r| x.get(r, idx)).collect();
        let mut w = c.mat_vec(&xi);
        for z in &mut w {
            *z /= sigmas[idx];
        }
        if let Some(w) = orthonormalize_against(&basis, w, 1e-3) {
            col_of_x[idx] = Some(basis.len());
            basis.push(w);
        }
    }
    // Complete with standard basis vectors for the kernel columns.
    let mut completion: Vec<usize> = Vec::new();
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[e] = Complex64::new(1.0, 0.0);
        if let Some(v) = orthonormalize_against(&basis, v, 1e-3) {
            completion.push(basis.len());
            basis.push(v);
        }
    }
    debug_assert_eq!(basis.len(), n, "orthonormal completion must span");

    let mut u = CMatrix::zeros(n);
    let mut next_completion = completion.into_iter();
    for idx in 0..n {
        let w_idx = match col_of_x[idx] {
            Some(k) => k,
            None => next_completion.next().expect("completion covers kernel columns"),
        };
        // U += w x_idx*.
        for r in 0..n {
            for s in 0..n {
                let cur = u.get(r, s);
                u.set(r, s, cur + basis[w_idx][r] * x.get(s, idx).conj());
            }
        }
    }
    Ok((u, p))
}

/// Two-pass Gram-Schmidt; returns the normalized residual or `None` when the
/// candidate is (numerically) inside the current span.
fn orthonormalize_against(
    basis: &[Vec<Complex64>],
    mut v: Vec<Complex64>,
    min_residual: f64,
) -> Option<Vec<Complex64>> {
    let n = v.len();
    for _pass in 0..2 {
        for b in basis {
            let overlap: Complex64 = (0..n).map(|i| b[i].conj() * v[i]).sum();
            for i in 0..n {
                v[i] -= overlap * b[i];
            }
        }
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= min_residual {
        return None;
    }
    for z in &mut v {
        *z /= norm;
    }
    Some(v)
}

/// Count of eigenvalues above `rank_tol` for a PSD Hermitian matrix.
pub fn numerical_rank(m: &CMatrix, tol: &ToleranceConfig) -> Result<usize> {
    let (values, _) = hermitian_eig(m, tol)?;
    let min = values.first().copied().unwrap_or(0.0);
    if min < -tol.psd_tol {
        return Err(Error::NotPsd { min_eigenvalue: min, tol: tol.psd_tol });
    }
    Ok(values.iter().filter(|&&l| l > tol.rank_tol).count())
}
