//! Dense complex matrix helpers: multi-index bookkeeping, permutations of
//! tensor factors, partial traces over raw dimension lists, and Hermitian
//! spectral utilities.
//!
//! Everything here works on flat `DMatrix<Complex64>` values plus an explicit
//! list of factor dimensions in row-major order (first factor most
//! significant). The register-aware layer lives in [`super::operator`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// A square complex matrix.
pub type CMat = DMatrix<Complex64>;
/// A complex column vector.
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

/// Row-major strides for a dimension list.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Decompose a flat index into digits for the given dimension list.
pub fn digits_of(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = Vec::with_capacity(dims.len());
    for k in 0..dims.len() {
        out.push(index / st[k]);
        index %= st[k];
    }
    out
}

/// Map flat indices of a source factor ordering onto a target ordering.
///
/// `perm[t]` is the source position of the factor that sits at target
/// position `t`. Returns `map` with `map[src_index] = tgt_index`.
pub fn factor_permutation_map(src_dims: &[usize], perm: &[usize]) -> Vec<usize> {
    debug_assert_eq!(src_dims.len(), perm.len());
    let tgt_dims: Vec<usize> = perm.iter().map(|&p| src_dims[p]).collect();
    let tgt_strides = strides(&tgt_dims);
    let src_strides = strides(src_dims);
    // stride contributed in the target index by each source digit
    let mut contrib = vec![0usize; src_dims.len()];
    for (t, &p) in perm.iter().enumerate() {
        contrib[p] = tgt_strides[t];
    }
    let total: usize = src_dims.iter().product();
    let mut map = vec![0usize; total];
    for i in 0..total {
        let mut rem = i;
        let mut j = 0usize;
        for k in 0..src_dims.len() {
            let d = rem / src_strides[k];
            rem %= src_strides[k];
            j += d * contrib[k];
        }
        map[i] = j;
    }
    map
}

/// Relocate matrix entries along an index map: `out[map[i], map[j]] = m[i, j]`.
///
/// This is conjugation by the permutation matrix of `map`, performed exactly
/// (no arithmetic on the entries).
pub fn permute_matrix(m: &CMat, map: &[usize]) -> CMat {
    let n = m.nrows();
    debug_assert_eq!(n, map.len());
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// Relocate vector entries along an index map.
pub fn permute_vector(v: &CVec, map: &[usize]) -> CVec {
    let mut out = CVec::zeros(v.len());
    for i in 0..v.len() {
        out[map[i]] = v[i];
    }
    out
}

/// Permutation matrix of an index map (`P e_i = e_{map[i]}`).
pub fn permutation_matrix(map: &[usize]) -> CMat {
    let n = map.len();
    let mut p = CMat::zeros(n, n);
    for (i, &j) in map.iter().enumerate() {
        p[(j, i)] = cr(1.0);
    }
    p
}

/// Partial trace over the factors marked `true` in `keep_mask = false`.
///
/// `dims` describes the factors of `m`; factors with `traced[k] = true` are
/// summed out. The result is ordered by the surviving factors in their
/// original relative order.
pub fn partial_trace(m: &CMat, dims: &[usize], traced: &[bool]) -> CMat {
    debug_assert_eq!(dims.len(), traced.len());
    let st = strides(dims);
    let keep: Vec<usize> = (0..dims.len()).filter(|&k| !traced[k]).collect();
    let out: Vec<usize> = (0..dims.len()).filter(|&k| traced[k]).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let out_dim: usize = out.iter().map(|&k| dims[k]).product();

    // flat offsets of every keep-assignment / out-assignment in the source
    let offsets = |factors: &[usize], total: usize| -> Vec<usize> {
        let fdims: Vec<usize> = factors.iter().map(|&k| dims[k]).collect();
        let fstrides = strides(&fdims);
        let mut v = vec![0usize; total];
        for (i, slot) in v.iter_mut().enumerate() {
            let mut acc = 0usize;
            for (pos, &k) in factors.iter().enumerate() {
                acc += ((i / fstrides[pos]) % fdims[pos]) * st[k];
            }
            *slot = acc;
        }
        v
    };
    let keep_off = offsets(&keep, keep_dim);
    let out_off = offsets(&out, out_dim);

    let mut res = CMat::zeros(keep_dim, keep_dim);
    for (r2, &o2) in keep_off.iter().enumerate() {
        for (r1, &o1) in keep_off.iter().enumerate() {
            let mut acc = Complex64::default();
            for &s in &out_off {
                acc += m[(o1 + s, o2 + s)];
            }
            res[(r1, r2)] = acc;
        }
    }
    res
}

/// Contract a vector against a leading group of factors:
/// `B[r, r'] = sum_{s, s'} conj(psi[s]) * M[(s, r), (s', r')] * psi[s']`
/// where `sub` marks the contracted factors (the vector is indexed by them in
/// their original relative order) and `r` ranges over the remaining factors.
pub fn sandwich_vector(m: &CMat, dims: &[usize], sub: &[bool], psi: &CVec) -> CMat {
    let st = strides(dims);
    let subs: Vec<usize> = (0..dims.len()).filter(|&k| sub[k]).collect();
    let rest: Vec<usize> = (0..dims.len()).filter(|&k| !sub[k]).collect();
    let sub_dim: usize = subs.iter().map(|&k| dims[k]).product();
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
    debug_assert_eq!(psi.len(), sub_dim);

    let offsets = |factors: &[usize], total: usize| -> Vec<usize> {
        let fdims: Vec<usize> = factors.iter().map(|&k| dims[k]).collect();
        let fstrides = strides(&fdims);
        let mut v = vec![0usize; total];
        for (i, slot) in v.iter_mut().enumerate() {
            let mut acc = 0usize;
            for (pos, &k) in factors.iter().enumerate() {
                acc += ((i / fstrides[pos]) % fdims[pos]) * st[k];
            }
            *slot = acc;
        }
        v
    };
    let sub_off = offsets(&subs, sub_dim);
    let rest_off = offsets(&rest, rest_dim);

    let mut res = CMat::zeros(rest_dim, rest_dim);
    for (r2, &o2) in rest_off.iter().enumerate() {
        for (r1, &o1) in rest_off.iter().enumerate() {
            let mut acc = Complex64::default();
            for (s1, &so1) in sub_off.iter().enumerate() {
                for (s2, &so2) in sub_off.iter().enumerate() {
                    acc += psi[s1].conj() * m[(so1 + o1, so2 + o2)] * psi[s2];
                }
            }
            res[(r1, r2)] = acc;
        }
    }
    res
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().sum()
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|x| x * cr(0.5))
}

/// Frobenius distance from Hermitian symmetry.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm() * 0.5
}

/// Sorted (ascending) eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Eigenpairs `(lambda, v)` of the Hermitian part of `m`.
pub fn hermitian_eigenpairs(m: &CMat) -> Vec<(f64, CVec)> {
    let eig = hermitize(m).symmetric_eigen();
    (0..m.nrows())
        .map(|k| (eig.eigenvalues[k], CVec::from(eig.eigenvectors.column(k))))
        .collect()
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn op_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// `tr(a * b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = Complex64::default();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Outer product `v * v^dagger`.
pub fn projector(v: &CVec) -> CMat {
    let n = v.len();
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m
}
