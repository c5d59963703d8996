//! Matrix-valued Laurent polynomials in the loop parameter and rational functions of z.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::linalg::{c, eigenvalues, eye, max_abs, sv_range, zeros, CMat, C64};

/// Finitely supported Fourier series `sum_k a_k lambda^k` with square matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix {
    dim: usize,
    coeffs: BTreeMap<i32, CMat>,
}

impl LaurentMatrix {
    pub fn zero(dim: usize) -> Self {
        LaurentMatrix { dim, coeffs: BTreeMap::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(eye(dim))
    }

    pub fn constant(m: CMat) -> Self {
        Self::monomial(0, m)
    }

    pub fn monomial(k: i32, m: CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "coefficients must be square");
        let dim = m.nrows();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k, m);
        LaurentMatrix { dim, coeffs }
    }

    pub fn from_coeffs<I: IntoIterator<Item = (i32, CMat)>>(dim: usize, it: I) -> Result<Self> {
        let mut out = Self::zero(dim);
        for (k, m) in it {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(dim, m.nrows().max(m.ncols())));
            }
            out.add_at(k, &m);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `[k_min, k_max]` of the stored coefficients, `None` for the zero loop.
    pub fn support(&self) -> Option<(i32, i32)> {
        let lo = *self.coeffs.keys().next()?;
        let hi = *self.coeffs.keys().next_back()?;
        Some((lo, hi))
    }

    pub fn coeff(&self, k: i32) -> CMat {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| zeros(self.dim, self.dim))
    }

    pub fn coeff_ref(&self, k: i32) -> Option<&CMat> {
        self.coeffs.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &CMat)> {
        self.coeffs.iter().map(|(k, m)| (*k, m))
    }

    pub fn set(&mut self, k: i32, m: CMat) {
        assert_eq!(m.nrows(), self.dim);
        self.coeffs.insert(k, m);
    }

    pub fn add_at(&mut self, k: i32, m: &CMat) {
        match self.coeffs.get_mut(&k) {
            Some(x) => *x += m,
            None => {
                self.coeffs.insert(k, m.clone());
            }
        }
    }

    /// Drops coefficients whose largest entry is at most `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, m)| max_abs(m) > tol)
            .map(|(k, m)| (*k, m.clone()))
            .collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    /// Keeps only exponents in `[lo, hi]`.
    pub fn truncated(&self, lo: i32, hi: i32) -> Self {
        let coeffs = self.coeffs.range(lo..=hi).map(|(k, m)| (*k, m.clone())).collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    /// Largest entry among coefficients with exponent outside `[lo, hi]`.
    pub fn max_outside(&self, lo: i32, hi: i32) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| **k < lo || **k > hi)
            .map(|(_, m)| max_abs(m))
            .fold(0.0, f64::max)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.values().map(max_abs).fold(0.0, f64::max)
    }

    pub fn eval(&self, lambda: C64) -> CMat {
        let mut out = zeros(self.dim, self.dim);
        for (k, m) in &self.coeffs {
            out += m * lambda.powi(*k);
        }
        out
    }

    pub fn map<F: Fn(&CMat) -> CMat>(&self, f: F) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, m)| (*k, f(m))).collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|m| m * s)
    }

    /// The loop `lambda -> a(-lambda)`.
    pub fn neg_lambda(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, m)| (*k, if k.rem_euclid(2) == 1 { -m } else { m.clone() }))
            .collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    /// Pointwise conjugate transpose on the unit circle: coefficient k becomes `a_{-k}^*`.
    pub fn star(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, m)| (-*k, m.adjoint())).collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| m.transpose())
    }

    /// `p a q` with constant matrices.
    pub fn sandwich(&self, p: &CMat, q: &CMat) -> Self {
        self.map(|m| p * m * q)
    }

    /// Multiplies by `lambda^s`.
    pub fn shift(&self, s: i32) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, m)| (*k + s, m.clone())).collect();
        LaurentMatrix { dim: self.dim, coeffs }
    }

    /// Largest pointwise distance to `other` over `n` circle samples.
    pub fn circle_distance(&self, other: &LaurentMatrix, n: usize) -> f64 {
        circle_points(n, 0.5)
            .into_iter()
            .map(|l| max_abs(&(self.eval(l) - other.eval(l))))
            .fold(0.0, f64::max)
    }
}

impl Add<&LaurentMatrix> for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn add(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (k, m) in &rhs.coeffs {
            out.add_at(*k, m);
        }
        out
    }
}

impl Sub<&LaurentMatrix> for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn sub(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (k, m) in &rhs.coeffs {
            out.add_at(*k, &(-m));
        }
        out
    }
}

/// Panics on dimension mismatch; use [`lmul`] for the checked form.
impl Mul<&LaurentMatrix> for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn mul(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        lmul(self, rhs).expect("dimension mismatch in Laurent product")
    }
}

/// Cauchy product.
pub fn lmul(a: &LaurentMatrix, b: &LaurentMatrix) -> Result<LaurentMatrix> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    let mut out = LaurentMatrix::zero(a.dim);
    for (i, x) in &a.coeffs {
        for (j, y) in &b.coeffs {
            out.add_at(i + j, &(x * y));
        }
    }
    Ok(out)
}

pub fn leval(a: &LaurentMatrix, lambda: C64) -> CMat {
    a.eval(lambda)
}

/// `n` equispaced points on the unit circle, rotated by `offset` grid steps.
pub fn circle_points(n: usize, offset: f64) -> Vec<C64> {
    (0..n)
        .map(|m| C64::from_polar(1.0, 2.0 * PI * (m as f64 + offset) / n as f64))
        .collect()
}

/// Inverse by sampling on the circle and discrete Fourier inversion, truncated to
/// `[-max_deg, max_deg]` and checked at 32 off-grid circle points.
pub fn linv_truncated(a: &LaurentMatrix, max_deg: i32, tol: f64) -> Result<LaurentMatrix> {
    let n = a.dim;
    let span = a.support().map_or(0, |(lo, hi)| (hi - lo) as usize);
    let need = (4 * (2 * max_deg.max(0) as usize + 1)).max(4 * (span + 1)).max(8);
    let nsamp = need.next_power_of_two();
    let pts = circle_points(nsamp, 0.0);
    let scale: f64 = a.iter().map(|(_, m)| crate::linalg::op_norm(m)).sum();
    let mut invs = Vec::with_capacity(nsamp);
    for l in &pts {
        let v = a.eval(*l);
        let (lo, hi) = sv_range(&v);
        if hi == 0.0 || lo < 1e-13 * scale {
            return Err(Error::SingularLoop(lo));
        }
        invs.push(v.try_inverse().ok_or(Error::SingularLoop(lo))?);
    }
    let mut out = LaurentMatrix::zero(n);
    for k in -max_deg..=max_deg {
        let mut acc = zeros(n, n);
        for (l, m) in pts.iter().zip(&invs) {
            acc += m * l.powi(-k);
        }
        out.set(k, acc / c(nsamp as f64, 0.0));
    }
    let out = out.trimmed(1e-15 * out.max_coeff().max(1.0));
    let residual = circle_points(32, 0.37)
        .into_iter()
        .map(|l| max_abs(&(a.eval(l) * out.eval(l) - eye(n))))
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::TruncationOverflow { residual, tol });
    }
    Ok(out)
}

/// Which half of the loop algebra a series inverse lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Power-series inverse of a loop supported on one side with invertible constant term,
/// truncated at `max_deg` powers.
pub fn series_inverse(a: &LaurentMatrix, side: Side, max_deg: i32) -> Result<LaurentMatrix> {
    let n = a.dim;
    let sgn = if side == Side::Minus { -1 } else { 1 };
    if let Some((lo, hi)) = a.support() {
        let bad = match side {
            Side::Minus => hi > 0,
            Side::Plus => lo < 0,
        };
        if bad {
            return Err(Error::Invalid("series inverse needs a one-sided loop".into()));
        }
    }
    let a0 = a.coeff(0);
    let (lo, hi) = sv_range(&a0);
    if hi == 0.0 || lo < 1e-14 * hi {
        return Err(Error::SingularLoop(lo));
    }
    let a0i = a0.try_inverse().ok_or(Error::SingularLoop(lo))?;
    let mut b: Vec<CMat> = vec![a0i.clone()];
    for k in 1..=max_deg {
        let mut acc = zeros(n, n);
        for j in 1..=k {
            if let Some(aj) = a.coeff_ref(sgn * j) {
                acc += aj * &b[(k - j) as usize];
            }
        }
        b.push(-(&a0i * acc));
    }
    LaurentMatrix::from_coeffs(n, b.into_iter().enumerate().map(|(k, m)| (sgn * k as i32, m)))
}

/// `exp(x)` for a loop whose values are nilpotent, summed until the powers vanish.
pub fn exp_nilpotent(x: &LaurentMatrix) -> Result<LaurentMatrix> {
    let n = x.dim;
    let mut out = LaurentMatrix::identity(n);
    let mut term = LaurentMatrix::identity(n);
    for k in 1..=n {
        term = (&term * x).scale(c(1.0 / k as f64, 0.0));
        if term.max_coeff() == 0.0 {
            return Ok(out);
        }
        out = &out + &term;
    }
    let size = (&term * x).max_coeff();
    if size > 1e-12 * out.max_coeff() {
        return Err(Error::Invalid(format!("loop is not nilpotent (term of size {size:e})")));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Polynomials and rational functions of z.

fn trim(mut p: Vec<C64>) -> Vec<C64> {
    while p.len() > 1 && *p.last().unwrap() == c(0.0, 0.0) {
        p.pop();
    }
    if p.is_empty() {
        p.push(c(0.0, 0.0));
    }
    p
}

fn poly_eval(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * z + a)
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    trim(out)
}

fn is_zero_poly(p: &[C64]) -> bool {
    p.iter().all(|x| *x == c(0.0, 0.0))
}

/// Roots through the eigenvalues of the companion matrix.
pub fn poly_roots(p: &[C64]) -> Vec<C64> {
    let p = trim(p.to_vec());
    let d = p.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = p[d];
    let mut comp = zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..d {
        comp[(i, d - 1)] = -p[i] / lead;
    }
    eigenvalues(&comp)
}

fn poly_from_roots(lead: C64, roots: &[C64]) -> Vec<C64> {
    roots.iter().fold(vec![lead], |acc, r| poly_mul(&acc, &[-r, c(1.0, 0.0)]))
}

const ROOT_CLUSTER: f64 = 1e-9;

/// Quotient of two complex polynomials in z, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn {
    num: Vec<C64>,
    den: Vec<C64>,
}

impl RationalFn {
    /// Builds `num / den` in reduced form: common roots closer than 1e-9 cancel and
    /// the denominator is made monic.
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        let num = trim(num);
        let den = trim(den);
        if is_zero_poly(&den) {
            return Err(Error::Invalid("denominator is identically zero".into()));
        }
        if is_zero_poly(&num) {
            return Ok(Self::zero());
        }
        let (num, den) = if den.len() > 1 && num.len() > 1 {
            let mut nr = poly_roots(&num);
            let dr = poly_roots(&den);
            let mut kept = Vec::new();
            let mut cancelled = false;
            for r in dr {
                let tol = ROOT_CLUSTER * (1.0 + r.norm());
                match nr.iter().position(|q| (q - r).norm() < tol) {
                    Some(i) => {
                        nr.remove(i);
                        cancelled = true;
                    }
                    None => kept.push(r),
                }
            }
            if cancelled {
                (poly_from_roots(*num.last().unwrap(), &nr), poly_from_roots(*den.last().unwrap(), &kept))
            } else {
                (num, den)
            }
        } else {
            (num, den)
        };
        let lead = *den.last().unwrap();
        Ok(RationalFn {
            num: trim(num.iter().map(|x| x / lead).collect()),
            den: trim(den.iter().map(|x| x / lead).collect()),
        })
    }

    pub fn poly(coeffs: Vec<C64>) -> Self {
        RationalFn { num: trim(coeffs), den: vec![c(1.0, 0.0)] }
    }

    pub fn constant(a: C64) -> Self {
        Self::poly(vec![a])
    }

    pub fn zero() -> Self {
        Self::constant(c(0.0, 0.0))
    }

    /// The coordinate function z.
    pub fn z() -> Self {
        Self::poly(vec![c(0.0, 0.0), c(1.0, 0.0)])
    }

    pub fn num(&self) -> &[C64] {
        &self.num
    }

    pub fn den(&self) -> &[C64] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        is_zero_poly(&self.num)
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.len() == 1
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let d = poly_eval(&self.den, z);
        if d.norm() <= 1e-14 * self.den.iter().map(|x| x.norm()).fold(0.0, f64::max) {
            return Err(Error::EvaluationAtPole(z));
        }
        Ok(poly_eval(&self.num, z) / d)
    }

    pub fn poles(&self) -> Vec<C64> {
        poly_roots(&self.den)
    }

    pub fn add(&self, o: &RationalFn) -> RationalFn {
        if self.den == o.den {
            return RationalFn::new(poly_add(&self.num, &o.num), self.den.clone()).expect("nonzero denominator");
        }
        let num = poly_add(&poly_mul(&self.num, &o.den), &poly_mul(&o.num, &self.den));
        RationalFn::new(num, poly_mul(&self.den, &o.den)).expect("nonzero denominator")
    }

    pub fn mul(&self, o: &RationalFn) -> RationalFn {
        RationalFn::new(poly_mul(&self.num, &o.num), poly_mul(&self.den, &o.den)).expect("nonzero denominator")
    }

    pub fn scale(&self, s: C64) -> RationalFn {
        RationalFn::new(self.num.iter().map(|x| x * s).collect(), self.den.clone()).expect("nonzero denominator")
    }

    pub fn neg(&self) -> RationalFn {
        self.scale(c(-1.0, 0.0))
    }

    pub fn derivative(&self) -> RationalFn {
        let d = |p: &[C64]| -> Vec<C64> {
            if p.len() <= 1 {
                vec![c(0.0, 0.0)]
            } else {
                p.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect()
            }
        };
        let num = poly_add(&poly_mul(&d(&self.num), &self.den), &poly_mul(&self.num, &d(&self.den)).iter().map(|x| -x).collect::<Vec<_>>());
        RationalFn::new(num, poly_mul(&self.den, &self.den)).expect("nonzero denominator")
    }

    /// Antiderivative vanishing at 0, defined for polynomials only.
    pub fn integral(&self) -> Option<RationalFn> {
        if !self.is_polynomial() {
            return None;
        }
        let mut out = vec![c(0.0, 0.0)];
        out.extend(self.num.iter().enumerate().map(|(i, a)| a / (i as f64 + 1.0)));
        Some(RationalFn::poly(out))
    }
}

pub fn ratfn_eval(f: &RationalFn, z: C64) -> Result<C64> {
    f.eval(z)
}

/// Denominator roots, merged when closer than the clustering tolerance.
pub fn pole_set(f: &RationalFn) -> Vec<C64> {
    cluster(f.poles())
}

fn cluster(pts: Vec<C64>) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::new();
    for p in pts {
        if !out.iter().any(|q| (q - p).norm() < ROOT_CLUSTER * (1.0 + p.norm())) {
            out.push(p);
        }
    }
    out
}

/// Rectangular matrix of rational functions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFn>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, entries: vec![RationalFn::zero(); rows * cols] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> RationalFn>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        RatMatrix { rows, cols, entries }
    }

    /// Constant matrix.
    pub fn constant(m: &CMat) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| RationalFn::constant(m[(i, j)]))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFn {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: RationalFn) {
        self.entries[i * self.cols + j] = f;
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        let mut m = zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).eval(z)?;
            }
        }
        Ok(m)
    }

    pub fn poles(&self) -> Vec<C64> {
        cluster(self.entries.iter().flat_map(|f| f.poles()).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|f| f.is_zero())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, o: &RatMatrix) -> Self {
        assert_eq!(self.shape(), o.shape());
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add(o.get(i, j)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).scale(s))
    }

    pub fn mul(&self, o: &RatMatrix) -> Self {
        assert_eq!(self.cols, o.rows);
        Self::from_fn(self.rows, o.cols, |i, j| {
            (0..self.cols).fold(RationalFn::zero(), |acc, k| {
                let (a, b) = (self.get(i, k), o.get(k, j));
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    acc.add(&a.mul(b))
                }
            })
        })
    }

    pub fn map<F: Fn(&RationalFn) -> RationalFn>(&self, f: F) -> Self {
        RatMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    /// Entrywise antiderivative from 0; `None` unless every entry is a polynomial.
    pub fn integral(&self) -> Option<Self> {
        let entries = self.entries.iter().map(|f| f.integral()).collect::<Option<Vec<_>>>()?;
        Some(RatMatrix { rows: self.rows, cols: self.cols, entries })
    }

    /// Largest polynomial coefficient; `None` when some entry has a denominator.
    pub fn max_poly_coeff(&self) -> Option<f64> {
        let mut m = 0.0f64;
        for f in &self.entries {
            if !f.is_polynomial() {
                return None;
            }
            for a in f.num() {
                m = m.max(a.norm());
            }
        }
        Some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    fn m2(a: [C64; 4]) -> CMat {
        CMat::from_row_slice(2, 2, &a)
    }

    #[test]
    fn identity_times_a_is_a() {
        let a = LaurentMatrix::from_coeffs(2, [(-1, m2([c(1.0, 0.0), I, c(0.0, 0.0), c(2.0, 0.0)])), (2, eye(2))]).unwrap();
        assert_eq!(lmul(&LaurentMatrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn exponents_cancel() {
        let a = m2([c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let b = m2([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let p = lmul(&LaurentMatrix::monomial(-1, a.clone()), &LaurentMatrix::monomial(1, b.clone())).unwrap();
        assert_eq!(p.support(), Some((0, 0)));
        assert_eq!(p.coeff(0), a * b);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = lmul(&LaurentMatrix::identity(2), &LaurentMatrix::identity(3)).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch(2, 3));
    }

    #[test]
    fn evaluation_basics() {
        assert_eq!(leval(&LaurentMatrix::identity(3), I), eye(3));
        let a = m2([c(2.0, 0.0), c(4.0, 0.0), c(6.0, 0.0), c(8.0, 0.0)]);
        let v = leval(&LaurentMatrix::monomial(-1, a.clone()), c(2.0, 0.0));
        assert!((v - a / c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_of_constants_and_unipotents() {
        let inv = linv_truncated(&LaurentMatrix::identity(2), 3, 1e-12).unwrap();
        assert!(inv.circle_distance(&LaurentMatrix::identity(2), 16) < 1e-14);
        let m = m2([c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let inv = linv_truncated(&LaurentMatrix::constant(m.clone()), 2, 1e-12).unwrap();
        assert_eq!(inv.support(), Some((0, 0)));
        assert!((inv.coeff(0) - m.try_inverse().unwrap()).norm() < 1e-14);
        let nil = m2([c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let mut u = LaurentMatrix::identity(2);
        u.set(-1, nil.clone());
        let inv = linv_truncated(&u, 4, 1e-12).unwrap();
        assert_eq!(inv.support(), Some((-1, 0)));
        assert!((inv.coeff(-1) + nil).norm() < 1e-14);
        let s = series_inverse(&u, Side::Minus, 4).unwrap().trimmed(0.0);
        assert_eq!(s.support(), Some((-1, 0)));
    }

    #[test]
    fn singular_loop_is_rejected() {
        let mut a = LaurentMatrix::identity(1);
        a.set(1, eye(1));
        // 1 + lambda vanishes at lambda = -1, which is a sample point.
        assert!(matches!(linv_truncated(&a, 4, 1e-10), Err(Error::SingularLoop(_))));
    }

    #[test]
    fn truncation_overflow_is_reported() {
        let mut a = LaurentMatrix::identity(1);
        a.set(1, eye(1) * c(0.5, 0.0));
        assert!(matches!(linv_truncated(&a, 2, 1e-12), Err(Error::TruncationOverflow { .. })));
        assert!(linv_truncated(&a, 60, 1e-12).is_ok());
    }

    #[test]
    fn rational_examples() {
        let z2 = RationalFn::poly(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((ratfn_eval(&z2, c(1.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        let inv_z = RationalFn::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let p = pole_set(&inv_z);
        assert_eq!(p.len(), 1);
        assert!(p[0].norm() < 1e-15);
        assert!(matches!(inv_z.eval(c(0.0, 0.0)), Err(Error::EvaluationAtPole(_))));
        let f = RationalFn::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], vec![c(-2.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((f.eval(c(0.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn common_roots_cancel() {
        // (z^2 - 1) / (z - 1) = z + 1
        let f = RationalFn::new(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], vec![c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(f.is_polynomial());
        assert!(pole_set(&f).is_empty());
        assert!((f.eval(c(3.0, 0.0)).unwrap() - c(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn derivative_and_integral() {
        let f = RationalFn::poly(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let g = f.integral().unwrap().derivative();
        for z in [c(0.3, 0.1), c(-1.0, 2.0)] {
            assert!((g.eval(z).unwrap() - f.eval(z).unwrap()).norm() < 1e-12);
        }
        let r = RationalFn::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let z = c(0.7, -0.2);
        assert!((r.derivative().eval(z).unwrap() + 1.0 / (z * z)).norm() < 1e-12);
    }
}
