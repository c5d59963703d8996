//! Residual checks for frame fields and extended solutions.
//!
//! Every check records its largest residual, where it occurred and the tolerance it is
//! held to. Derivatives are central second-order differences on the field's own grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dpw::{CartanField, ExtendedField, FrameField};
use crate::error::{Error, Result};
use crate::laurent::{circle_points, linv_truncated, LaurentMatrix, RatMatrix};
use crate::liectx::{check_twisted, GroupContext};
use crate::linalg::{c, diag, eye, max_abs, CMat, C64, I};

/// Bound for finite-difference residuals at spacing `1e-3`.
pub const FD_TOL: f64 = 5e-6;
/// Bound for pointwise algebraic identities.
pub const EXACT_TOL: f64 = 1e-9;
/// Fourier coefficients below this are treated as zero by [`uniton_number`].
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Check {
    pub residual: f64,
    pub location: Option<C64>,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub checks: BTreeMap<String, Check>,
    /// Assumptions that were not checked.
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// NaN residuals are stored as infinite so that they fail.
    pub fn record(&mut self, name: &str, residual: f64, location: Option<C64>, tol: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual.abs() };
        self.checks.insert(name.to_string(), Check { residual, location, tol, pass: residual < tol });
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.get(name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let width = self.checks.keys().map(|k| k.len()).max().unwrap_or(0);
        for (name, ch) in &self.checks {
            let at = ch.location.map_or_else(|| "-".to_string(), |z| format!("{:.14e}{:+.14e}i", z.re, z.im));
            let verdict = if ch.pass { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{name:width$}  {verdict}  residual {:.14e}  tol {:.14e}  at {at}", ch.residual, ch.tol);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    /// One `name.field=value` line per datum.
    pub fn render_kv(&self) -> String {
        let mut s = String::new();
        for (name, ch) in &self.checks {
            let _ = writeln!(s, "{name}.residual={:.14e}", ch.residual);
            let _ = writeln!(s, "{name}.tol={:.14e}", ch.tol);
            let _ = writeln!(s, "{name}.pass={}", ch.pass);
            if let Some(z) = ch.location {
                let _ = writeln!(s, "{name}.at={:.14e},{:.14e}", z.re, z.im);
            }
        }
        let _ = writeln!(s, "all_pass={}", self.all_pass());
        s
    }
}

fn worst(items: impl Iterator<Item = (f64, C64)>) -> (f64, Option<C64>) {
    let (r, at) = items.fold((-1.0, None), |(r, at), (v, z)| if v > r || v.is_nan() { (v, Some(z)) } else { (r, at) });
    (r.max(0.0), at)
}

fn split_kp(ctx: &GroupContext, x: &CMat) -> (CMat, CMat) {
    let s = ctx.sigma(x);
    ((x + &s) * c(0.5, 0.0), (x - s) * c(0.5, 0.0))
}

struct Stencil<'a> {
    field: &'a FrameField,
    stride: i32,
    h: f64,
}

impl<'a> Stencil<'a> {
    fn new(field: &'a FrameField, stride: i32) -> Self {
        Stencil { field, stride, h: field.grid.spacing * stride as f64 }
    }

    fn frame(&self, i: i32, j: i32) -> Option<&'a LaurentMatrix> {
        self.field.frame(i, j)
    }

    /// `(d_x F, d_y F)` at `(i, j)`.
    fn gradient(&self, i: i32, j: i32) -> Option<(LaurentMatrix, LaurentMatrix)> {
        let s = self.stride;
        let inv2h = c(0.5 / self.h, 0.0);
        let dx = (self.frame(i + s, j)? - self.frame(i - s, j)?).scale(inv2h);
        let dy = (self.frame(i, j + s)? - self.frame(i, j - s)?).scale(inv2h);
        Some((dx, dy))
    }

    /// `(alpha_x, alpha_y)` of `F^-1 dF` at `lambda = 1`, at the center of the cell with lower
    /// left corner `(i, j)`.
    fn cell_alpha(&self, i: i32, j: i32) -> Option<(CMat, CMat)> {
        let s = self.stride;
        let one = c(1.0, 0.0);
        let f00 = self.frame(i, j)?.eval(one);
        let f10 = self.frame(i + s, j)?.eval(one);
        let f01 = self.frame(i, j + s)?.eval(one);
        let f11 = self.frame(i + s, j + s)?.eval(one);
        let fc = (&f00 + &f10 + &f01 + &f11) * c(0.25, 0.0);
        let fi = fc.try_inverse()?;
        let inv2h = c(0.5 / self.h, 0.0);
        let dx = (&f10 + &f11 - &f00 - &f01) * inv2h;
        let dy = (&f01 + &f11 - &f00 - &f10) * inv2h;
        Some((&fi * dx, &fi * dy))
    }

    /// `(A_x, A_y)` of `alpha_lambda = lambda^-1 a' dz + a_k + lambda a'' dzbar` at a cell
    /// center, rebuilt from the `lambda = 1` form.
    fn cell_alpha_lambda(&self, i: i32, j: i32, lambda: C64) -> Option<(CMat, CMat)> {
        let (ax, ay) = self.cell_alpha(i, j)?;
        let az = (&ax - &ay * I) * c(0.5, 0.0);
        let azb = (&ax + &ay * I) * c(0.5, 0.0);
        let (kz, pz) = split_kp(&self.field.ctx, &az);
        let (kzb, pzb) = split_kp(&self.field.ctx, &azb);
        let dz_part = &pz / lambda + &kz;
        let dzb_part = &pzb * lambda + &kzb;
        Some((&dz_part + &dzb_part, (dz_part - dzb_part) * I))
    }
}

/// Pieces of `F^-1 d_z F` outside `{lambda^-1 p, lambda^0 k}` and of `F^-1 d_zbar F` outside
/// `{lambda^0 k, lambda p}`.
fn structure_at(st: &Stencil, i: i32, j: i32) -> Option<f64> {
    let ctx = &st.field.ctx;
    let f = st.frame(i, j)?;
    let fi = ctx.real_inverse(f);
    let (dx, dy) = st.gradient(i, j)?;
    let half = c(0.5, 0.0);
    let az = &fi * &(&dx - &dy.scale(I)).scale(half);
    let azb = &fi * &(&dx + &dy.scale(I)).scale(half);
    let mut r = 0.0f64;
    for (form, p_power) in [(az, -1), (azb, 1)] {
        for (k, m) in form.iter() {
            if k == 0 {
                r = r.max(max_abs(&split_kp(ctx, m).1));
            } else if k == p_power {
                r = r.max(max_abs(&split_kp(ctx, m).0));
            } else {
                r = r.max(max_abs(m));
            }
        }
    }
    Some(r)
}

/// Discrete curvature `d_x A_y - d_y A_x + [A_x, A_y]` at the node `(i, j)` from the four
/// adjacent cells.
fn curvature_at(st: &Stencil, i: i32, j: i32, lambda: C64) -> Option<CMat> {
    let s = st.stride;
    let inv2h = c(0.5 / st.h, 0.0);
    let quarter = c(0.25, 0.0);
    let (xne, yne) = st.cell_alpha_lambda(i, j, lambda)?;
    let (xnw, ynw) = st.cell_alpha_lambda(i - s, j, lambda)?;
    let (xse, yse) = st.cell_alpha_lambda(i, j - s, lambda)?;
    let (xsw, ysw) = st.cell_alpha_lambda(i - s, j - s, lambda)?;
    let dx_ay = (&yne + &yse - &ynw - &ysw) * inv2h;
    let dy_ax = (&xne + &xnw - &xse - &xsw) * inv2h;
    let ax = (xne + xnw + xse + xsw) * quarter;
    let ay = (yne + ynw + yse + ysw) * quarter;
    Some(dx_ay - dy_ax + &ax * &ay - &ay * &ax)
}

/// Flatness of `alpha_lambda`, maximized over `lambdas`.
fn flatness_at(st: &Stencil, i: i32, j: i32, lambdas: &[C64]) -> Option<f64> {
    let mut r = 0.0f64;
    for &l in lambdas {
        r = r.max(max_abs(&curvature_at(st, i, j, l)?));
    }
    Some(r)
}

/// Flatness from the Richardson combination `(4 K_h - K_2h) / 3` of the curvatures at
/// strides `s` and `2 s`, which cancels the leading truncation term.
fn extrapolated_flatness_at(fine: &Stencil, coarse: &Stencil, i: i32, j: i32, lambdas: &[C64]) -> Option<f64> {
    let mut r = 0.0f64;
    for &l in lambdas {
        let k = (curvature_at(fine, i, j, l)? * c(4.0, 0.0) - curvature_at(coarse, i, j, l)?) * c(1.0 / 3.0, 0.0);
        r = r.max(max_abs(&k));
    }
    Some(r)
}

/// Pohlmeyer's criterion on a frame field: the lambda-structure of `F^-1 dF` and flatness
/// of `alpha_lambda` at every sample of `lambdas`, both at tolerance [`FD_TOL`].
pub fn harmonicity_residual(field: &FrameField, lambdas: &[C64]) -> Result<VerificationReport> {
    harmonicity_residual_with(field, lambdas, 1, FD_TOL)
}

/// As [`harmonicity_residual`], differencing over every `stride`-th grid point. Flatness is
/// extrapolated from strides `stride` and `2 stride` wherever both stencils fit.
pub fn harmonicity_residual_with(field: &FrameField, lambdas: &[C64], stride: i32, tol: f64) -> Result<VerificationReport> {
    let (structure, _) = harmonicity_raw(field, lambdas, stride)?;
    let fine = Stencil::new(field, stride);
    let coarse = Stencil::new(field, 2 * stride);
    let flatness = worst_over(field, |i, j| extrapolated_flatness_at(&fine, &coarse, i, j, lambdas));
    if flatness.1.is_none() {
        return Err(Error::GridTooCoarse(format!("no point has a full stencil at stride {}", 2 * stride)));
    }
    let mut report = VerificationReport::new();
    report.record("harmonic_structure", structure.0, structure.1, tol);
    report.record("harmonic_flatness", flatness.0, flatness.1, tol);
    report.notes.push("fullness of the harmonic map is assumed, not checked".into());
    Ok(report)
}

type Worst = (f64, Option<C64>);

fn worst_over(field: &FrameField, f: impl Fn(i32, i32) -> Option<f64> + Sync) -> Worst {
    let per_point: Vec<(Option<f64>, C64)> = field.grid.points.par_iter().map(|pt| (f(pt.idx.0, pt.idx.1), pt.z)).collect();
    worst(per_point.into_iter().filter_map(|(v, z)| v.map(|v| (v, z))))
}

/// Unextrapolated structure and flatness residuals at one stride.
fn harmonicity_raw(field: &FrameField, lambdas: &[C64], stride: i32) -> Result<(Worst, Worst)> {
    let st = Stencil::new(field, stride);
    let structure = worst_over(field, |i, j| structure_at(&st, i, j));
    let flatness = worst_over(field, |i, j| flatness_at(&st, i, j, lambdas));
    if structure.1.is_none() || flatness.1.is_none() {
        return Err(Error::GridTooCoarse(format!("no point has a full stencil at stride {stride}")));
    }
    Ok((structure, flatness))
}

/// Unextrapolated residuals at stride 1 and 2 and their ratios; second-order differences give ratios near 4.
#[derive(Clone, Copy, Debug)]
pub struct Richardson {
    pub fine: (f64, f64),
    pub coarse: (f64, f64),
    pub structure_ratio: f64,
    pub flatness_ratio: f64,
}

impl Richardson {
    /// Whether both ratios indicate order-two decay, or the fine residual is at the `floor`.
    pub fn confirms_order_two(&self, floor: f64) -> bool {
        let ok = |ratio: f64, fine: f64| fine < floor || (3.0..=5.0).contains(&ratio);
        ok(self.structure_ratio, self.fine.0) && ok(self.flatness_ratio, self.fine.1)
    }
}

pub fn richardson(field: &FrameField, lambdas: &[C64]) -> Result<Richardson> {
    let (fs, ff) = harmonicity_raw(field, lambdas, 1)?;
    let (cs, cf) = harmonicity_raw(field, lambdas, 2)?;
    Ok(Richardson { fine: (fs.0, ff.0), coarse: (cs.0, cf.0), structure_ratio: cs.0 / fs.0, flatness_ratio: cf.0 / ff.0 })
}

/// Twisting, reality and the exact basepoint value of a frame field.
pub fn frame_checks(field: &FrameField) -> VerificationReport {
    let ctx = &field.ctx;
    let pts = &field.grid.points;
    let twist = worst(field.frames.par_iter().zip(pts).filter_map(|(f, p)| f.as_ref().map(|f| (check_twisted(f, ctx), p.z))).collect::<Vec<_>>().into_iter());
    let real = worst(field.frames.par_iter().zip(pts).filter_map(|(f, p)| f.as_ref().map(|f| (ctx.reality_residual(f), p.z))).collect::<Vec<_>>().into_iter());
    let mut report = VerificationReport::new();
    report.record("twisting", twist.0, twist.1, EXACT_TOL);
    report.record("reality", real.0, real.1, EXACT_TOL);
    if field.basepoint_index.is_some() {
        let id = LaurentMatrix::identity(ctx.dim);
        let base = field.basepoint_index.and_then(|k| field.frames[k].as_ref()).map_or(f64::INFINITY, |f| if *f == id { 0.0 } else { f.circle_distance(&id, 16).max(f64::MIN_POSITIVE) });
        report.record("basepoint_identity", base, Some(field.basepoint), f64::EPSILON);
    } else {
        report.notes.push("basepoint is not a grid point; its value is not checked".into());
    }
    report.record("failed_points", field.failure_count() as f64, None, 0.5);
    report
}

/// `F^2 = e` over the field and `F(z0) = h` exactly.
pub fn cartan_checks(field: &FrameField, cartan: &CartanField) -> VerificationReport {
    let mut report = VerificationReport::new();
    report.record("cartan_square", cartan.square_residual, None, EXACT_TOL);
    if field.basepoint_index.is_some() {
        let base = if cartan.basepoint_is_h == Some(true) { 0.0 } else { f64::INFINITY };
        report.record("cartan_basepoint_h", base, Some(field.basepoint), f64::EPSILON);
    }
    report
}

fn loop_inverse(phi: &LaurentMatrix, ctx: &GroupContext) -> Result<LaurentMatrix> {
    let inv = ctx.real_inverse(phi);
    let n = phi.dim();
    let ok = circle_points(8, 0.3).into_iter().all(|l| max_abs(&(phi.eval(l) * inv.eval(l) - eye(n))) < 1e-10);
    if ok {
        return Ok(inv);
    }
    let span = phi.support().map_or(0, |(lo, hi)| hi - lo);
    linv_truncated(phi, 4 * span.max(1) + 4, 1e-10)
}

/// Largest `|k|` among the Fourier modes of `Ad(phi)` on `basis`.
pub fn adjoint_support(phi: &LaurentMatrix, basis: &[CMat], ctx: &GroupContext) -> Result<usize> {
    let inv = loop_inverse(phi, ctx)?;
    let mut k = 0usize;
    for x in basis {
        let ad = &phi.map(|m| m * x) * &inv;
        for (j, m) in ad.iter() {
            if max_abs(m) > SUPPORT_TOL {
                k = k.max(j.unsigned_abs() as usize);
            }
        }
    }
    Ok(k)
}

/// The uniton number `r(Phi)` of an extended solution: the largest adjoint Fourier degree
/// over all points. This is the number of the constructed `Phi`, not a minimum over its
/// dressing orbit.
pub fn uniton_number(ext: &ExtendedField, ctx: &GroupContext) -> Result<usize> {
    let basis = ctx.algebra_basis();
    let ks: Vec<Result<usize>> = ext.phis.par_iter().flatten().map(|phi| adjoint_support(&phi.to_laurent(), &basis, ctx)).collect();
    let mut k = 0;
    for r in ks {
        k = k.max(r?);
    }
    Ok(k)
}

/// `diag(-1, 1, 1, 1)`.
pub fn i13() -> CMat {
    diag(&[-1.0, 1.0, 1.0, 1.0])
}

/// `B^t I_{1,3} B`, entrywise.
pub fn isotropy_form(b1: &RatMatrix) -> RatMatrix {
    b1.transpose().mul(&RatMatrix::constant(&i13())).mul(b1)
}

/// Largest coefficient of the polynomial matrix `B^t I_{1,3} B`; for rational entries, the
/// largest value over a few sample points.
pub fn isotropy_check(b1: &RatMatrix) -> f64 {
    assert_eq!(b1.shape().0, 4, "isotropy needs four rows");
    let form = isotropy_form(b1);
    form.max_poly_coeff().unwrap_or_else(|| {
        [c(0.3, 0.1), c(-0.7, 0.4), c(0.2, -0.9), c(1.3, 0.6)]
            .iter()
            .filter_map(|z| form.eval(*z).ok())
            .map(|m| max_abs(&m))
            .fold(0.0, f64::max)
    })
}

/// Uhlenbeck's laws for `Phi` against the harmonic map `Fh = F(1) h F(1)^-1`:
/// `Phi(1) = e`, `Phi(-1) = L Fh` for one left constant `L`, and
/// `d_z Phi = (1 - lambda^-1) Phi A^(1,0)`, `d_zbar Phi = (1 - lambda) Phi A^(0,1)` with
/// `A = Fh^-1 dFh / 2`.
pub fn extended_solution_laws(field: &FrameField, ext: &ExtendedField, cartan: &CartanField, lambdas: &[C64]) -> Result<VerificationReport> {
    let n = field.ctx.dim;
    let one = c(1.0, 0.0);
    let grid = &field.grid;
    let h = grid.spacing;
    let mut report = VerificationReport::new();

    let at_one = worst(ext.phis.iter().zip(&grid.points).filter_map(|(p, pt)| p.as_ref().map(|p| (max_abs(&(p.eval(one) - eye(n))), pt.z))));
    report.record("phi_at_one", at_one.0, at_one.1, f64::EPSILON);

    let fh = |k: usize| cartan.maps[k].as_ref().map(|m| m.eval(one));
    let phi = |k: usize| ext.phis[k].as_ref();
    let anchor = field.basepoint_index.into_iter().chain(0..grid.len()).find(|&k| phi(k).is_some() && fh(k).is_some());
    let Some(anchor) = anchor else {
        return Err(Error::GridTooCoarse("no point carries both Phi and the Cartan map".into()));
    };
    let left = phi(anchor).unwrap().eval(-one) * fh(anchor).unwrap().try_inverse().ok_or(Error::SingularLoop(0.0))?;
    let at_minus = worst((0..grid.len()).filter_map(|k| Some((max_abs(&(phi(k)?.eval(-one) - &left * fh(k)?)), grid.points[k].z))));
    report.record("phi_at_minus_one", at_minus.0, at_minus.1, EXACT_TOL);

    let inv2h = c(0.5 / h, 0.0);
    let half = c(0.5, 0.0);
    let per_point: Vec<Option<(f64, f64, C64)>> = grid
        .points
        .par_iter()
        .map(|pt| {
            let (i, j) = pt.idx;
            let idx = |a: i32, b: i32| grid.lookup(a, b);
            let k = idx(i, j)?;
            let (e, w, nn, s) = (idx(i + 1, j)?, idx(i - 1, j)?, idx(i, j + 1)?, idx(i, j - 1)?);
            let f0 = fh(k)?;
            let fdx = (fh(e)? - fh(w)?) * inv2h;
            let fdy = (fh(nn)? - fh(s)?) * inv2h;
            let f0i = f0.try_inverse()?;
            let a10 = &f0i * (&fdx - &fdy * I) * half * half;
            let a01 = &f0i * (&fdx + &fdy * I) * half * half;
            let (pk, pe, pw, pn, ps) = (phi(k)?, phi(e)?, phi(w)?, phi(nn)?, phi(s)?);
            let (mut rz, mut rzb) = (0.0f64, 0.0f64);
            for &l in lambdas {
                let pdx = (pe.eval(l) - pw.eval(l)) * inv2h;
                let pdy = (pn.eval(l) - ps.eval(l)) * inv2h;
                let dz = (&pdx - &pdy * I) * half;
                let dzb = (&pdx + &pdy * I) * half;
                let p0 = pk.eval(l);
                rz = rz.max(max_abs(&(dz - &p0 * &a10 * (one - one / l))));
                rzb = rzb.max(max_abs(&(dzb - &p0 * &a01 * (one - l))));
            }
            Some((rz, rzb, pt.z))
        })
        .collect();
    let rz = worst(per_point.iter().flatten().map(|(a, _, z)| (*a, *z)));
    let rzb = worst(per_point.iter().flatten().map(|(_, b, z)| (*b, *z)));
    if rz.1.is_none() {
        return Err(Error::GridTooCoarse("no point has a full stencil".into()));
    }
    report.record("uhlenbeck_z", rz.0, rz.1, FD_TOL);
    report.record("uhlenbeck_zbar", rzb.0, rzb.1, FD_TOL);
    Ok(report)
}

/// Default loop samples for the checks: `1, i, -1` and one generic point.
pub fn default_lambdas() -> Vec<C64> {
    vec![c(1.0, 0.0), I, c(-1.0, 0.0), C64::from_polar(1.0, 0.7)]
}
