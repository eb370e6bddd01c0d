//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Vectorization is column-stacking throughout: `vec(A X B) = (B^T ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(d: usize) -> CMat {
    CMat::zeros(d, d)
}

pub fn scaled_identity(d: usize, s: f64) -> CMat {
    identity(d) * c64(s, 0.0)
}

pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()) * c64(0.5, 0.0)
}

pub fn fro_norm(x: &CMat) -> f64 {
    x.norm()
}

/// True when `||X - X*||_F <= rel * max(1, ||X||_F)`.
pub fn is_hermitian(x: &CMat, rel: f64) -> bool {
    if !x.is_square() {
        return false;
    }
    let skew = (x - x.adjoint()).norm();
    skew <= rel * x.norm().max(1.0)
}

pub fn singular_values(x: &CMat) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm (largest singular value).
pub fn op_norm(x: &CMat) -> f64 {
    singular_values(x).first().copied().unwrap_or(0.0)
}

/// `||X|| ||X^{-1}||` from singular values; infinite when singular.
pub fn condition_number(x: &CMat) -> f64 {
    let sv = singular_values(x);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn herm_eigen(x: &CMat) -> HermEigen {
    let d = x.nrows();
    if d == 0 {
        return HermEigen {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let eig = hermitian_part(x).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermEigen { values, vectors }
}

pub fn min_eig(x: &CMat) -> f64 {
    herm_eigen(x).values.first().copied().unwrap_or(0.0)
}

pub fn max_eig(x: &CMat) -> f64 {
    herm_eigen(x).values.last().copied().unwrap_or(0.0)
}

/// `V diag(g(λ)) V*` for the Hermitian part of `x`.
pub fn herm_function(x: &CMat, g: impl Fn(f64) -> f64) -> CMat {
    let eig = herm_eigen(x);
    let d = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for j in 0..d {
        let s = g(eig.values[j]);
        for i in 0..d {
            scaled[(i, j)] *= s;
        }
    }
    scaled * eig.vectors.adjoint()
}

/// Square root of a PSD matrix, eigenvalues below `clip_rel * ||x||` set to zero.
pub fn psd_sqrt(x: &CMat, clip_rel: f64) -> CMat {
    let scale = max_eig(x).abs().max(min_eig(x).abs());
    let clip = clip_rel * scale;
    herm_function(x, |l| if l > clip { l.sqrt() } else { 0.0 })
}

/// Inverse square root of a positive definite matrix.
pub fn pd_inv_sqrt(x: &CMat) -> Result<CMat> {
    let lo = min_eig(x);
    if lo <= 0.0 || !lo.is_finite() {
        return Err(Error::Numerical(format!(
            "matrix is not positive definite (min eigenvalue {lo:.3e})"
        )));
    }
    Ok(herm_function(x, |l| 1.0 / l.sqrt()))
}

pub fn pd_sqrt(x: &CMat) -> Result<CMat> {
    let lo = min_eig(x);
    if lo <= 0.0 || !lo.is_finite() {
        return Err(Error::Numerical(format!(
            "matrix is not positive definite (min eigenvalue {lo:.3e})"
        )));
    }
    Ok(herm_function(x, f64::sqrt))
}

/// Orthonormal basis of the range of a PSD matrix and the retained eigenvalues.
pub struct RangeSplit {
    /// `d × r`, orthonormal columns.
    pub basis: CMat,
    pub values: Vec<f64>,
    pub clip: f64,
}

impl RangeSplit {
    pub fn rank(&self) -> usize {
        self.values.len()
    }
}

pub fn psd_range(x: &CMat, clip_rel: f64) -> RangeSplit {
    let eig = herm_eigen(x);
    let d = eig.values.len();
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let clip = clip_rel * scale;
    // Descending order so the dominant direction comes first.
    let keep: Vec<usize> = (0..d).rev().filter(|&j| eig.values[j] > clip).collect();
    let mut basis = CMat::zeros(d, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &eig.vectors.column(src));
    }
    RangeSplit {
        basis,
        values: keep.iter().map(|&j| eig.values[j]).collect(),
        clip,
    }
}

pub fn inverse(x: &CMat) -> Result<CMat> {
    x.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Column-stacking vectorization.
pub fn vec_col(x: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvec_col(v: &DVector<Complex64>, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Coordinates of the Hermitian part of `x` in the orthonormal basis
/// `{E_jj} ∪ {(E_jk + E_kj)/√2} ∪ {i(E_jk − E_kj)/√2}` (j < k) of Hermitian matrices.
pub fn herm_to_real(x: &CMat) -> DVector<f64> {
    let d = x.nrows();
    let mut out = DVector::zeros(d * d);
    let s2 = std::f64::consts::SQRT_2;
    let mut idx = 0;
    for j in 0..d {
        out[idx] = x[(j, j)].re;
        idx += 1;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let z = (x[(j, k)] + x[(k, j)].conj()) * 0.5;
            out[idx] = s2 * z.re;
            out[idx + 1] = s2 * z.im;
            idx += 2;
        }
    }
    out
}

pub fn real_to_herm(v: &DVector<f64>, d: usize) -> CMat {
    let mut x = CMat::zeros(d, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = 0;
    for j in 0..d {
        x[(j, j)] = c64(v[idx], 0.0);
        idx += 1;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let z = c64(v[idx] * h, v[idx + 1] * h);
            x[(j, k)] = z;
            x[(k, j)] = z.conj();
            idx += 2;
        }
    }
    x
}

/// Spectral radius of a real square matrix.
pub fn spectral_radius_real(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    // The unbounded QR loop behind `complex_eigenvalues` can stall on unimodular spectra.
    match nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 20_000) {
        Some(s) => s.complex_eigenvalues().iter().fold(0.0_f64, |acc, z| acc.max(z.norm())),
        None => gelfand_radius(m),
    }
}

/// `lim ||M^{2^j}||^{1/2^j}` by normalized repeated squaring.
fn gelfand_radius(m: &RMat) -> f64 {
    let mut p = m.clone();
    let mut log_scale = 0.0_f64;
    let mut prev = f64::NAN;
    for j in 0..60 {
        let n = p.norm();
        if n == 0.0 {
            return 0.0;
        }
        let est = ((n.ln() + log_scale) / 2f64.powi(j)).exp();
        if (est - prev).abs() <= 1e-12 * est {
            return est;
        }
        prev = est;
        p /= n;
        log_scale += n.ln();
        p = &p * &p;
        log_scale *= 2.0;
    }
    prev
}

/// Spectral radius of a complex square matrix via its real `2d × 2d` embedding.
pub fn spectral_radius(c: &CMat) -> f64 {
    let d = c.nrows();
    let mut m = RMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = c[(i, j)];
            m[(i, j)] = z.re;
            m[(i, j + d)] = -z.im;
            m[(i + d, j)] = z.im;
            m[(i + d, j + d)] = z.re;
        }
    }
    spectral_radius_real(&m)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| c64(v, 0.0))
}

/// Row-major `[[ [re, im], … ], …]` form used in JSON.
pub fn to_rows(x: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..x.nrows())
        .map(|r| (0..x.ncols()).map(|c| [x[(r, c)].re, x[(r, c)].im]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("matrix entries must be finite".into()));
    }
    Ok(CMat::from_fn(n, m, |r, c| c64(rows[r][c][0], rows[r][c][1])))
}

/// `#[serde(with = "…")]` adapter for [`CMat`] fields.
pub mod cmat_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Same adapter for `Option<CMat>`.
pub mod opt_cmat_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        x.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMat>, D::Error> {
        let rows = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        rows.map(|r| from_rows(&r)).transpose().map_err(serde::de::Error::custom)
    }
}
