//! Oracles shared by the integration tests.
#![allow(dead_code)]

use uniton::laurent::LaurentMatrix;
use uniton::liectx::GroupContext;
use uniton::linalg::{c, CMat, CVec, C64};

pub fn willmore_ctx() -> GroupContext {
    GroupContext::lorentz(8, &[-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0]).unwrap()
}

pub fn su4() -> GroupContext {
    GroupContext::unitary(4, &[1.0, 1.0, -1.0, -1.0]).unwrap()
}

/// Gram-Schmidt of the columns of `a` against `diag(hd)`: `a = q r`.
pub fn indefinite_qr(a: &CMat, hd: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let ip = |x: &CVec, y: &CVec| -> C64 { (0..n).map(|i| x[i].conj() * hd[i] * y[i]).sum() };
    let mut q = CMat::zeros(n, n);
    let mut r = CMat::zeros(n, n);
    for i in 0..n {
        let mut v: CVec = a.column(i).into_owned();
        for l in 0..i {
            let ql: CVec = q.column(l).into_owned();
            let coef = ip(&ql, &v) * hd[l];
            v -= &ql * coef;
            r[(l, i)] = coef;
        }
        let nrm = ip(&v, &v).re;
        assert!(nrm * hd[i] > 0.0);
        r[(i, i)] = c(nrm.abs().sqrt(), 0.0);
        q.set_column(i, &(v / r[(i, i)]));
    }
    (q, r)
}

/// Principal square root through the Schur form.
pub fn schur_sqrt(m: &CMat) -> CMat {
    let n = m.nrows();
    let schur = m.clone().schur();
    let (v, t) = schur.unpack();
    let mut s = CMat::zeros(n, n);
    for j in 0..n {
        s[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut acc = t[(i, j)];
            for k in i + 1..j {
                acc -= s[(i, k)] * s[(k, j)];
            }
            s[(i, j)] = acc / (s[(i, i)] + s[(j, j)]);
        }
    }
    &v * s * v.adjoint()
}

/// Expected normalized factors of `u * p`.
pub fn expected(ctx: &GroupContext, u: &LaurentMatrix, p: &LaurentMatrix) -> (LaurentMatrix, LaurentMatrix) {
    let hd: Vec<f64> = (0..ctx.dim).map(|i| ctx.hermitian[(i, i)].re).collect();
    let (q, _) = indefinite_qr(&p.coeff(0), &hd);
    let k = match &ctx.form {
        Some(_) => schur_sqrt(&(ctx.theta(&q).unwrap().try_inverse().unwrap() * &q)),
        None => CMat::identity(ctx.dim, ctx.dim),
    };
    let qk = &q * k.clone().try_inverse().unwrap();
    let kq = &k * q.try_inverse().unwrap();
    (u.map(|m| m * &qk), p.map(|m| &kq * m))
}

