//! Small dense helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn diag(d: &[f64]) -> CMat {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { C64::new(0.0, 0.0) })
}

/// Matrix unit E_ab.
pub fn unit(n: usize, a: usize, b: usize) -> CMat {
    let mut m = zeros(n, n);
    m[(a, b)] = c(1.0, 0.0);
    m
}

pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Spectral norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn bracket(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Inverse, `None` when numerically singular.
pub fn inv(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Principal square root by the Denman-Beavers iteration.
pub fn sqrtm(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = eye(n);
    for _ in 0..100 {
        let yi = inv(&y)?;
        let zi = inv(&z)?;
        let y1 = (&y + &zi) * c(0.5, 0.0);
        let z1 = (&z + &yi) * c(0.5, 0.0);
        let step = fro(&(&y1 - &y));
        y = y1;
        z = z1;
        if step <= 1e-15 * fro(&y).max(1.0) {
            return Some(y);
        }
    }
    let r = fro(&(&y * &y - a));
    if r < 1e-10 * fro(a).max(1.0) {
        Some(y)
    } else {
        None
    }
}

/// Column-major flattening.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn mat_of(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Columns stacked side by side.
pub fn hstack(cols: &[CVec]) -> CMat {
    let rows = cols.first().map_or(0, |v| v.len());
    let mut m = zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Orthonormal basis of the column span; singular values below `rtol * s_max` are dropped.
pub fn orth(a: &CMat, rtol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rtol * smax)
        .collect();
    let mut q = zeros(a.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        q.set_column(j, &u.column(i));
    }
    q
}

/// Orthogonal projector onto the span of the columns of `q` (assumed orthonormal).
pub fn projector(q: &CMat) -> CMat {
    q * q.adjoint()
}

/// Orthogonal projector onto the span of a list of matrices viewed as vectors.
pub fn span_projector(mats: &[CMat], rtol: f64) -> CMat {
    let n2 = mats.first().map_or(0, |m| m.len());
    if mats.is_empty() {
        return zeros(n2, n2);
    }
    let cols: Vec<CVec> = mats.iter().map(vec_of).collect();
    projector(&orth(&hstack(&cols), rtol))
}

/// Least-squares solution of `a x = b` through the SVD.
pub fn lstsq(a: &CMat, b: &CMat, rtol: f64) -> CMat {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, rtol * smax).expect("svd factors were requested")
}

/// Smallest and largest singular values.
pub fn sv_range(a: &CMat) -> (f64, f64) {
    let s = a.clone().singular_values();
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s.iter().cloned().fold(0.0, f64::max);
    (lo, hi)
}

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let h = (a + a.adjoint()) * c(0.5, 0.0);
    let e = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = zeros(a.nrows(), a.ncols());
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    match a.clone().schur().eigenvalues() {
        Some(v) => v.iter().cloned().collect(),
        None => {
            let (_, t) = a.clone().schur().unpack();
            (0..t.nrows()).map(|i| t[(i, i)]).collect()
        }
    }
}

pub fn frob_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrtm_squares_back() {
        let a = CMat::from_row_slice(2, 2, &[c(4.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(9.0, 0.0)]);
        let s = sqrtm(&a).unwrap();
        assert!(fro(&(&s * &s - &a)) < 1e-12);
        assert!((s[(0, 0)] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn orth_drops_dependent_columns() {
        let a = CMat::from_row_slice(3, 3, &[
            c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0),
        ]);
        assert_eq!(orth(&a, 1e-12).ncols(), 2);
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let r = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut ev: Vec<f64> = eigenvalues(&r).iter().map(|z| z.im).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }
}
