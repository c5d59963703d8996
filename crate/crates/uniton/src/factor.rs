//! Birkhoff and Iwasawa splittings of loops, and the pointwise PR.Q split.
//!
//! Normalizations:
//! - Birkhoff: the minus factor has constant term `e`.
//! - Iwasawa: `plus(0) = q r` with `r` upper triangular with positive diagonal and `q` in
//!   the real form. For the unitary family `q = e`. For the orthogonal families `q` is the
//!   principal square root of `theta(q0)^-1 q0`, where `q0` is the unitary part of the plain
//!   Gram-Schmidt split, so that `theta(q) = q^-1`.

use crate::error::{Error, Result};
use crate::laurent::{circle_points, series_inverse, LaurentMatrix, Side};
use crate::liectx::GroupContext;
use crate::linalg::{c, eye, hstack, inv, max_abs, orth, sqrtm, sv_range, zeros, CMat, CVec, C64, I};
use crate::roots::{subspace_distance, CanonicalElement};

#[derive(Clone, Debug)]
pub struct BirkhoffResult {
    pub minus: LaurentMatrix,
    pub plus: LaurentMatrix,
    pub in_big_cell: bool,
    /// Largest entry of `minus * plus - g` at 64 circle points.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct IwasawaResult {
    pub unitary: LaurentMatrix,
    pub plus: LaurentMatrix,
    pub singular: bool,
    pub residual: f64,
}

/// `2 * span + 4`.
pub fn default_trunc(g: &LaurentMatrix) -> usize {
    let span = g.support().map_or(0, |(lo, hi)| (hi - lo) as usize);
    2 * span + 4
}

/// Largest entry of `a * b - g` over 64 circle points.
pub fn reconstruction_residual(a: &LaurentMatrix, b: &LaurentMatrix, g: &LaurentMatrix) -> f64 {
    circle_points(64, 0.5)
        .into_iter()
        .map(|l| max_abs(&(a.eval(l) * b.eval(l) - g.eval(l))))
        .fold(0.0, f64::max)
}

fn check_dim(g: &LaurentMatrix, ctx: &GroupContext) -> Result<()> {
    if g.dim() != ctx.dim {
        return Err(Error::DimensionMismatch(ctx.dim, g.dim()));
    }
    Ok(())
}

fn noise_floor(g: &LaurentMatrix) -> f64 {
    1e-14 * g.max_coeff().max(1.0)
}

/// `g = minus * plus` with `minus(infinity) = e`.
///
/// Solves the block-Toeplitz system for the coefficients `q_0..q_trunc` of `plus^-1`:
/// `(g q)_k = 0` for `k > 0` and `(g q)_0 = e`. The real form of `ctx` plays no role.
pub fn birkhoff(g: &LaurentMatrix, ctx: &GroupContext, trunc: usize, tol: f64) -> Result<BirkhoffResult> {
    check_dim(g, ctx)?;
    let n = g.dim();
    let (lo, hi) = g.support().ok_or(Error::SingularLoop(0.0))?;
    let k_max = trunc as i32;
    let rows = (k_max + hi.max(0) + 1) as usize;
    let cols = (k_max + 1) as usize;
    let mut t = zeros(rows * n, cols * n);
    for k in 0..rows {
        for j in 0..cols {
            if let Some(m) = g.coeff_ref(k as i32 - j as i32) {
                t.view_mut((k * n, j * n), (n, n)).copy_from(m);
            }
        }
    }
    let mut rhs = zeros(rows * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&eye(n));

    let sv = t.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin < 1e-10 * smax {
        return Err(Error::OutsideBigCell(smin / smax.max(f64::MIN_POSITIVE)));
    }
    // Householder least squares; the SVD's singular vectors can lose several digits here.
    let qr = t.clone().qr();
    let sol = qr.r().solve_upper_triangular(&(qr.q().adjoint() * &rhs)).ok_or(Error::OutsideBigCell(0.0))?;
    let lsq = max_abs(&(&t * &sol - &rhs));
    if lsq > tol {
        return Err(Error::TruncationOverflow { residual: lsq, tol });
    }

    let q = LaurentMatrix::from_coeffs(n, (0..cols).map(|j| (j as i32, sol.view((j * n, 0), (n, n)).into_owned())))?;
    let mut minus = (g * &q).truncated(lo.min(0), 0).trimmed(noise_floor(g));
    minus.set(0, eye(n));
    let plus_deg = k_max + (hi - lo).max(0);
    let plus = series_inverse(&q, Side::Plus, plus_deg)?.trimmed(noise_floor(g));

    let residual = reconstruction_residual(&minus, &plus, g);
    if residual > tol * g.max_coeff().max(1.0) {
        return Err(Error::TruncationOverflow { residual, tol });
    }
    Ok(BirkhoffResult { minus, plus, in_big_cell: true, residual })
}

/// Global split for a compact real form.
pub fn iwasawa_compact(g: &LaurentMatrix, ctx_u: &GroupContext, trunc: usize, tol: f64) -> Result<IwasawaResult> {
    if !ctx_u.compact {
        return Err(Error::Invalid(format!("{} is not compact", ctx_u.name)));
    }
    iwasawa(g, ctx_u, trunc, tol)
}

/// Local split for a non-compact real form; fails on the boundary of the open cell.
pub fn iwasawa_noncompact(g: &LaurentMatrix, ctx_g: &GroupContext, trunc: usize, tol: f64) -> Result<IwasawaResult> {
    if ctx_g.compact {
        return Err(Error::Invalid(format!("{} is compact", ctx_g.name)));
    }
    iwasawa(g, ctx_g, trunc, tol)
}

/// Dispatches on the compactness of `ctx`.
pub fn iwasawa(g: &LaurentMatrix, ctx: &GroupContext, trunc: usize, tol: f64) -> Result<IwasawaResult> {
    check_dim(g, ctx)?;
    let hd = hermitian_diag(ctx)?;
    let (u, p) = gl_iwasawa(g, &hd, trunc, tol)?;
    let (unitary, plus) = match &ctx.form {
        Some(_) => theta_correct(ctx, u, p, tol)?,
        None => (u, p),
    };
    let residual = reconstruction_residual(&unitary, &plus, g);
    if residual > tol * g.max_coeff().max(1.0) {
        return Err(Error::TruncationOverflow { residual, tol });
    }
    Ok(IwasawaResult { unitary, plus, singular: false, residual })
}

fn hermitian_diag(ctx: &GroupContext) -> Result<Vec<f64>> {
    let h = &ctx.hermitian;
    let off = max_abs(&(h - CMat::from_diagonal(&h.diagonal())));
    if off > 0.0 {
        return Err(Error::Invalid("hermitian form must be diagonal".into()));
    }
    Ok((0..ctx.dim).map(|i| h[(i, i)].re).collect())
}

fn form_inner(x: &CVec, jd: &[f64], y: &CVec) -> C64 {
    x.iter().zip(jd).zip(y.iter()).map(|((a, w), b)| a.conj() * *w * b).sum()
}

/// Split in the loop group of `U(H)` with `plus(0)` upper triangular, positive diagonal.
///
/// The columns of the unitary factor are the `H`-orthonormalization of `g e_i` modulo the
/// span of `lambda^s g e_j`, `1 <= s <= trunc`. This is exact when `plus^-1` has degree at
/// most `trunc` and the unitary factor has no modes above `trunc + max(hi, 0)`.
fn gl_iwasawa(g: &LaurentMatrix, hd: &[f64], trunc: usize, tol: f64) -> Result<(LaurentMatrix, LaurentMatrix)> {
    let n = g.dim();
    let (lo, hi) = g.support().ok_or(Error::SingularLoop(0.0))?;
    let a = lo.min(0);
    let shifts = trunc.max(1) as i32;
    let top = (shifts + hi.max(0)).max(-a);
    let modes = (top - a + 1) as usize;
    let len = modes * n;
    let jd: Vec<f64> = (0..len).map(|r| hd[r % n]).collect();

    let column = |shift: i32, col: usize| -> CVec {
        let mut v = CVec::zeros(len);
        for (k, m) in g.iter() {
            let mode = k + shift;
            if mode >= a && mode <= top {
                let base = (mode - a) as usize * n;
                for r in 0..n {
                    v[base + r] = m[(r, col)];
                }
            }
        }
        v
    };

    let shifted: Vec<CVec> = (1..=shifts).flat_map(|s| (0..n).map(move |i| (s, i))).map(|(s, i)| column(s, i)).collect();
    let s = orth(&hstack(&shifted), 1e-10);
    let mut js = s.clone();
    for (r, w) in jd.iter().enumerate() {
        js.row_mut(r).scale_mut(*w);
    }
    let gram = s.adjoint() * &js;
    let (glo, ghi) = if gram.nrows() == 0 { (1.0, 1.0) } else { sv_range(&gram) };
    if glo < 1e-10 * ghi {
        return Err(Error::IwasawaCellBoundary(format!("degenerate form on the shifted span ({glo:e})")));
    }
    let gram_inv = inv(&gram).ok_or_else(|| Error::IwasawaCellBoundary("singular Gram matrix".into()))?;
    let w = hstack(&(0..n).map(|i| column(0, i)).collect::<Vec<_>>());
    let w = &w - &s * (&gram_inv * (js.adjoint() * &w));

    let mut basis: Vec<CVec> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: CVec = w.column(i).into_owned();
        let scale = v.norm_squared();
        for _pass in 0..2 {
            for (l, b) in basis.iter().enumerate() {
                let coef = form_inner(b, &jd, &v) * hd[l];
                v -= b * coef;
            }
        }
        let nrm = form_inner(&v, &jd, &v).re;
        if nrm * hd[i] <= 1e-12 * scale {
            return Err(Error::IwasawaCellBoundary(format!("pivot {i} has norm {nrm:e} against sign {}", hd[i])));
        }
        let d = nrm.abs().sqrt();
        basis.push(v / c(d, 0.0));
    }

    let mut u = LaurentMatrix::zero(n);
    for m in 0..modes {
        let block = CMat::from_fn(n, n, |row, col| basis[col][m * n + row]);
        if max_abs(&block) > 0.0 {
            u.set(a + m as i32, block);
        }
    }
    let u = u.trimmed(noise_floor(g));
    let hm = CMat::from_diagonal(&CVec::from_iterator(n, hd.iter().map(|x| c(*x, 0.0))));
    let uinv = u.star().sandwich(&hm, &hm);
    let p = &uinv * g;
    let neg = p.max_outside(0, i32::MAX);
    if neg > tol * g.max_coeff().max(1.0) {
        return Err(Error::TruncationOverflow { residual: neg, tol });
    }
    let mut p = p.truncated(0, i32::MAX).trimmed(noise_floor(g));
    p.set(0, upper_part(&p.coeff(0)));
    Ok((u, p))
}

/// Clears the rounding noise below the diagonal of `p0`.
fn upper_part(p0: &CMat) -> CMat {
    CMat::from_fn(p0.nrows(), p0.ncols(), |i, j| if i > j { c(0.0, 0.0) } else { p0[(i, j)] })
}

/// Moves a `U(H)`-valued split into the orthogonal group: `Q = theta(u)^-1 u` is constant,
/// and `u k^-1`, `k p` with `k = Q^(1/2)` are fixed by `theta`.
fn theta_correct(ctx: &GroupContext, u: LaurentMatrix, p: LaurentMatrix, tol: f64) -> Result<(LaurentMatrix, LaurentMatrix)> {
    let defect = |l: C64| -> Result<CMat> {
        let m = u.eval(l);
        let t = ctx.theta(&m).ok_or_else(|| Error::IwasawaCellBoundary("singular unitary factor".into()))?;
        inv(&t).map(|ti| ti * m).ok_or_else(|| Error::IwasawaCellBoundary("singular unitary factor".into()))
    };
    let q = defect(c(1.0, 0.0))?;
    let drift = [I, C64::from_polar(1.0, 0.7), c(-1.0, 0.0)]
        .iter()
        .map(|l| defect(*l).map(|m| max_abs(&(m - &q))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if drift > tol {
        return Err(Error::TruncationOverflow { residual: drift, tol });
    }
    let k = sqrtm(&q).ok_or_else(|| Error::IwasawaCellBoundary("orthogonality defect has no principal square root".into()))?;
    let ki = inv(&k).ok_or_else(|| Error::IwasawaCellBoundary("singular square root".into()))?;
    Ok((u.map(|m| m * &ki), p.map(|m| &k * m)))
}

/// `V = R Q` with `R` in the parabolic subgroup of grades `>= 0` and `Q` unipotent in the
/// grades `< 0`; only the generic cell is handled.
pub fn prq_split(v: &CMat, ce: &CanonicalElement) -> Result<(CMat, CMat)> {
    let n = v.nrows();
    let xi = &ce.xi;
    if max_abs(&(xi + xi.adjoint())) > 1e-10 * max_abs(xi).max(1.0) {
        return Err(Error::Invalid("canonical element must be anti-hermitian".into()));
    }
    let (vals, vecs) = crate::linalg::herm_eig(&(xi * c(0.0, -1.0)));
    let order: Vec<usize> = (0..n).rev().collect();
    let p = CMat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    let mu: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || (mu[i] - mu[start]).abs() > 1e-8 {
            blocks.push((start, i - start));
            start = i;
        }
    }

    let vp = p.adjoint() * v * &p;
    let mut a = inv(&vp).ok_or(Error::SingularLoop(0.0))?;
    let mut l = eye(n);
    let scale = max_abs(&a).max(1.0);
    for (bk, &(s, w)) in blocks.iter().enumerate() {
        let piv = a.view((s, s), (w, w)).into_owned();
        let (plo, _) = sv_range(&piv);
        if plo < 1e-10 * scale {
            return Err(Error::NonGenericCell(plo));
        }
        let pinv = inv(&piv).ok_or(Error::NonGenericCell(plo))?;
        for &(t, x) in &blocks[bk + 1..] {
            let f = a.view((t, s), (x, w)) * &pinv;
            let row = a.view((s, 0), (w, n)).into_owned();
            let mut target = a.view_mut((t, 0), (x, n));
            target -= &f * row;
            l.view_mut((t, s), (x, w)).copy_from(&f);
        }
    }
    for &(s, w) in &blocks {
        for &(t, x) in &blocks {
            if t > s {
                a.view_mut((t, s), (x, w)).fill(c(0.0, 0.0));
            }
        }
    }
    let qp = inv(&l).ok_or(Error::NonGenericCell(0.0))?;
    let rp = inv(&a).ok_or(Error::NonGenericCell(0.0))?;
    Ok((&p * rp * p.adjoint(), &p * qp * p.adjoint()))
}

/// Basis of the intersection of the grades `>= 0` with the `-1` eigenspace of the involution.
pub fn pr_cap_p(ce: &CanonicalElement, ctx: &GroupContext) -> Vec<CMat> {
    let n = ctx.dim;
    let b = ce.grades_where(|j| j >= 0);
    if b.is_empty() {
        return Vec::new();
    }
    let mut m = zeros(n * n, b.len());
    for (k, x) in b.iter().enumerate() {
        let y = x + ctx.sigma(x);
        for (i, z) in y.iter().enumerate() {
            m[(i, k)] = *z;
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    // n^2 rows exceed the number of columns, so the thin SVD returns every right vector.
    let mut out = Vec::new();
    for row in 0..vt.nrows() {
        if svd.singular_values[row] <= 1e-10 * smax {
            let coeffs = vt.row(row).adjoint();
            out.push(b.iter().zip(coeffs.iter()).fold(zeros(n, n), |acc, (x, w)| acc + x * *w));
        }
    }
    out
}

/// Distance between `pr ∩ p` and the sum of the odd grades `1, 3, 5, ...`.
pub fn pr_cap_p_residual(ce: &CanonicalElement, ctx: &GroupContext) -> f64 {
    let odd = ce.grades_where(|j| j > 0 && j % 2 == 1);
    subspace_distance(&pr_cap_p(ce, ctx), &odd, ctx.dim)
}
