//! From a nilpotent potential to extended frames, the Cartan-embedded harmonic map and
//! the extended solution.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::{birkhoff, default_trunc, iwasawa};
use crate::laurent::{exp_nilpotent, LaurentMatrix, RatMatrix, RationalFn};
use crate::liectx::{compact_dual, GroupContext};
use crate::linalg::{c, eye, herm_eig, lstsq, max_abs, zeros, CMat, C64};
use crate::roots::{exp_pi_check, gamma_xi_loop, CanonicalElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `eta = lambda^-1 sum_j A'_j dz`, only even `j` in the symmetric-space case.
    Normalized,
    /// The ladder `(exp C)^-1 d exp C = sum_j lambda^j A'_j dz`; any `j`.
    ExtendedSolution,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Normalized => "normalized",
            Mode::ExtendedSolution => "extended",
        }
    }
}

/// A holomorphic potential with coefficients `A'_j(z)` valued in grade `j + 1` of `ce`.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub ctx: GroupContext,
    pub ce: Option<CanonicalElement>,
    pub basepoint: C64,
    pub coefficients: Vec<(usize, RatMatrix)>,
    pub mode: Mode,
    /// `F_-(z0)`.
    pub initial: LaurentMatrix,
    /// Optional `C(z)` as a lambda-ladder, `F_- = gamma^-1 exp(C) gamma`.
    pub closed_c: Option<Vec<(i32, RatMatrix)>>,
}

impl PotentialSpec {
    pub fn new(ctx: GroupContext, ce: Option<CanonicalElement>, basepoint: C64, coefficients: Vec<(usize, RatMatrix)>, mode: Mode) -> Self {
        let n = ctx.dim;
        PotentialSpec { ctx, ce, basepoint, coefficients, mode, initial: LaurentMatrix::identity(n), closed_c: None }
    }

    pub fn zero(ctx: GroupContext, basepoint: C64) -> Self {
        Self::new(ctx, None, basepoint, Vec::new(), Mode::Normalized)
    }

    pub fn with_closed_c(mut self, c: Vec<(i32, RatMatrix)>) -> Self {
        self.closed_c = Some(c);
        self
    }

    /// `A(z) = sum_j A'_j(z)`, so that `eta = lambda^-1 A dz`.
    pub fn total(&self) -> RatMatrix {
        let n = self.ctx.dim;
        self.coefficients.iter().fold(RatMatrix::zeros(n, n), |acc, (_, m)| acc.add(m))
    }

    pub fn eval_total(&self, z: C64) -> Result<CMat> {
        let n = self.ctx.dim;
        let mut out = zeros(n, n);
        for (_, m) in &self.coefficients {
            out += m.eval(z)?;
        }
        Ok(out)
    }

    pub fn poles(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for (_, m) in &self.coefficients {
            for p in m.poles() {
                if out.iter().all(|q| (q - p).norm() > 1e-9) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Largest lambda^-1 power of `F_-` as a matrix: the spread of the eigenvalues of `xi`,
    /// or `dim - 1` by nilpotency. `Ad(F_-)` obeys the height of `ce`, which can be smaller
    /// (for `xi` with weights `1, 0, -1` the height is 1 but `A^2` need not vanish).
    pub fn degree_bound(&self) -> usize {
        match &self.ce {
            Some(ce) => {
                let (vals, _) = herm_eig(&(&ce.xi * c(0.0, -1.0)));
                let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
                (spread.round().max(0.0) as usize).max(ce.height.max(0) as usize)
            }
            None => self.ctx.dim - 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialReport {
    /// Per coefficient, the largest distance from its declared grade over the sample points.
    pub grading: Vec<f64>,
    /// Smallest `k` with `A(z)^k = 0` at every sample point.
    pub nilpotency_index: usize,
    pub poles: Vec<C64>,
}

fn sample_points(p: &PotentialSpec) -> Vec<C64> {
    let poles = p.poles();
    [c(0.0, 0.0), c(0.31, 0.0), c(0.0, 0.47), c(-0.62, 0.23), c(0.83, -0.41), c(-0.2, -0.9)]
        .iter()
        .map(|d| p.basepoint + d)
        .filter(|z| poles.iter().all(|q| (q - z).norm() > 1e-3))
        .collect()
}

pub fn validate_potential(p: &PotentialSpec) -> Result<PotentialReport> {
    let zs = sample_points(p);
    let mut grading = Vec::with_capacity(p.coefficients.len());
    for (index, (j, m)) in p.coefficients.iter().enumerate() {
        if p.mode == Mode::Normalized && p.ce.is_some() && j % 2 == 1 {
            let size = zs.iter().filter_map(|z| m.eval(*z).ok()).map(|v| max_abs(&v)).fold(0.0, f64::max);
            if size > 0.0 {
                return Err(Error::ParityViolation { index, residual: size });
            }
        }
        let mut worst = 0.0f64;
        if let Some(ce) = &p.ce {
            let grade = *j as i32 + 1;
            for z in &zs {
                let v = m.eval(*z)?;
                let scale = max_abs(&v).max(1.0);
                worst = worst.max(ce.residual_outside(&v, |k| k == grade) / scale);
            }
            if worst > 1e-10 {
                return Err(Error::GradingViolation { index, residual: worst });
            }
        }
        grading.push(worst);
    }
    let n = p.ctx.dim;
    let mut nilpotency_index = 1;
    for z in &zs {
        let a = p.eval_total(*z)?;
        let scale = max_abs(&a).max(1.0);
        let mut pw = eye(n);
        let mut k = 0;
        while max_abs(&pw) > 1e-12 * scale.powi(k as i32) {
            if k > n {
                return Err(Error::Invalid(format!("potential is not nilpotent at z = {z}")));
            }
            pw = &pw * &a;
            k += 1;
        }
        nilpotency_index = nilpotency_index.max(k);
    }
    Ok(PotentialReport { grading, nilpotency_index, poles: p.poles() })
}

// ---------------------------------------------------------------------------
// Meromorphic frame.

const GBS_SEQUENCE: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
const GBS_TOL: f64 = 1e-14;
const POLE_CLEARANCE: f64 = 1e-2;

/// Derivative in the segment parameter of `(Y_1, ..., Y_m)`, `Y_k' = Y_{k-1} A(z) dz`.
fn ladder_rhs(p: &PotentialSpec, z: C64, dz: C64, ys: &[CMat]) -> Result<Vec<CMat>> {
    let a = p.eval_total(z)? * dz;
    let n = p.ctx.dim;
    let mut out = Vec::with_capacity(ys.len());
    out.push(a.clone());
    for k in 1..ys.len() {
        out.push(&ys[k - 1] * &a);
    }
    debug_assert_eq!(out[0].nrows(), n);
    Ok(out)
}

fn axpy(a: &[CMat], s: C64, b: &[CMat]) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

fn modified_midpoint(p: &PotentialSpec, za: C64, dz: C64, t0: f64, big_h: f64, y0: &[CMat], steps: usize) -> Result<Vec<CMat>> {
    let h = big_h / steps as f64;
    let at = |t: f64| za + dz * t;
    let mut prev = y0.to_vec();
    let mut cur = axpy(y0, c(h, 0.0), &ladder_rhs(p, at(t0), dz, y0)?);
    for i in 1..steps {
        let f = ladder_rhs(p, at(t0 + i as f64 * h), dz, &cur)?;
        let next = axpy(&prev, c(2.0 * h, 0.0), &f);
        prev = cur;
        cur = next;
    }
    let f = ladder_rhs(p, at(t0 + big_h), dz, &cur)?;
    let end = axpy(&cur, c(h, 0.0), &f);
    Ok(end.iter().zip(&prev).map(|(a, b)| (a + b) * c(0.5, 0.0)).collect())
}

fn ladder_diff(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_abs(&(x - y))).fold(0.0, f64::max)
}

/// Gragg-Bulirsch-Stoer along the straight segment `za -> zb`.
fn integrate_segment(p: &PotentialSpec, za: C64, zb: C64, y: Vec<CMat>) -> Result<Vec<CMat>> {
    let dz = zb - za;
    let mut y = y;
    let mut t = 0.0;
    let mut big_h = 1.0f64;
    while t < 1.0 {
        big_h = big_h.min(1.0 - t);
        let mut table: Vec<Vec<Vec<CMat>>> = Vec::new();
        let mut accepted: Option<(usize, Vec<CMat>)> = None;
        for (i, &ni) in GBS_SEQUENCE.iter().enumerate() {
            let mut row = vec![modified_midpoint(p, za, dz, t, big_h, &y, ni)?];
            for k in 1..=i {
                let ratio = (ni as f64 / GBS_SEQUENCE[i - k] as f64).powi(2) - 1.0;
                let prev_row = &table[i - 1];
                let ext: Vec<CMat> = row[k - 1].iter().zip(&prev_row[k - 1]).map(|(a, b)| a + (a - b) / c(ratio, 0.0)).collect();
                row.push(ext);
            }
            if i > 0 {
                let err = ladder_diff(&row[i], &row[i - 1]);
                let scale = row[i].iter().map(max_abs).fold(1.0, f64::max);
                if err <= GBS_TOL * scale {
                    accepted = Some((i, row[i].clone()));
                    break;
                }
            }
            table.push(row);
        }
        match accepted {
            Some((col, v)) => {
                y = v;
                t += big_h;
                big_h *= if col <= 3 { 2.0 } else if col >= 6 { 0.7 } else { 1.0 };
            }
            None => {
                big_h *= 0.25;
                if big_h < 1e-9 {
                    return Err(Error::PathThroughPole(za + dz * t));
                }
            }
        }
    }
    Ok(y)
}

fn segment_distance(a: C64, b: C64, q: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = (((q - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - q).norm()
}

/// Straight path from the basepoint, or one detour around the nearest obstructing pole.
pub fn plan_path(p: &PotentialSpec, z: C64) -> Result<Vec<C64>> {
    let z0 = p.basepoint;
    let poles = p.poles();
    let clear = |a: C64, b: C64| poles.iter().all(|q| segment_distance(a, b, *q) > POLE_CLEARANCE);
    if poles.iter().any(|q| (q - z).norm() <= POLE_CLEARANCE) {
        return Err(Error::PathThroughPole(z));
    }
    if clear(z0, z) {
        return Ok(vec![z0, z]);
    }
    let blocker = poles.iter().cloned().min_by(|a, b| segment_distance(z0, z, *a).total_cmp(&segment_distance(z0, z, *b))).expect("some pole blocks");
    let d = z - z0;
    let normal = if d.norm() > 0.0 { d * c(0.0, 1.0) / d.norm() } else { c(0.0, 1.0) };
    for scale in [1.0, 2.0, 4.0, 8.0] {
        let rho = (4.0 * POLE_CLEARANCE).max(0.25 * d.norm()) * scale;
        for s in [1.0, -1.0] {
            let w = blocker + normal * (s * rho);
            if clear(z0, w) && clear(w, z) {
                return Ok(vec![z0, w, z]);
            }
        }
    }
    Err(Error::PathThroughPole(blocker))
}

/// `F_-(z)` by integrating `dF_- = F_- eta` from the basepoint along `path` (planned when
/// `None`). The result is checked against the degree bound of the grading.
pub fn solve_meromorphic_frame(p: &PotentialSpec, z: C64, path: Option<&[C64]>) -> Result<LaurentMatrix> {
    let n = p.ctx.dim;
    let planned;
    let path = match path {
        Some(w) => w,
        None => {
            planned = plan_path(p, z)?;
            &planned
        }
    };
    let r = p.degree_bound();
    let depth = r + 1;
    let mut ys: Vec<CMat> = vec![zeros(n, n); depth];
    if !p.coefficients.is_empty() {
        for seg in path.windows(2) {
            ys = integrate_segment(p, seg[0], seg[1], ys)?;
        }
    }
    let overflow = max_abs(&ys[depth - 1]);
    if overflow > 1e-11 {
        return Err(Error::SupportOverflow { degree: -(depth as i32), size: overflow });
    }
    let mut f = LaurentMatrix::identity(n);
    for (k, y) in ys.iter().take(r).enumerate() {
        if max_abs(y) > 0.0 {
            f.set(-(k as i32 + 1), y.clone());
        }
    }
    Ok(&p.initial * &f)
}

/// `gamma^-1 exp(C(z)) gamma`, when a closed `C` and a canonical element are supplied.
pub fn exact_meromorphic_frame(p: &PotentialSpec, z: C64) -> Option<Result<LaurentMatrix>> {
    let cc = p.closed_c.as_ref()?;
    let ce = p.ce.as_ref()?;
    Some((|| {
        let gamma = gamma_xi_loop(&ce.xi)?;
        let cz = ladder_at(cc, p.ctx.dim, z)?;
        let e = exp_nilpotent(&cz)?;
        Ok(&p.initial * &(&(&gamma.inverse() * &e) * &gamma.lp).trimmed(1e-15))
    })())
}

fn ladder_at(ladder: &[(i32, RatMatrix)], n: usize, z: C64) -> Result<LaurentMatrix> {
    let mut out = LaurentMatrix::zero(n);
    for (j, m) in ladder {
        out.add_at(*j, &m.eval(z)?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct McReport {
    pub residual: f64,
    /// Per sample point, the lambda-coefficients of `(exp C)^-1 d(exp C) / dz`.
    pub extracted: Vec<(C64, Vec<(i32, CMat)>)>,
}

/// Fourth-order finite-difference Maurer-Cartan form of `exp C`, compared with the ladder
/// `sum_j lambda^j A'_j`.
pub fn mc_form_check(cc: &[(i32, RatMatrix)], ladder: &[(usize, RatMatrix)], n: usize, zs: &[C64], h: f64) -> Result<McReport> {
    let mut residual = 0.0f64;
    let mut extracted = Vec::new();
    for &z in zs {
        let e = |w: C64| -> Result<LaurentMatrix> { exp_nilpotent(&ladder_at(cc, n, w)?) };
        let mut d = &e(z + c(-2.0 * h, 0.0))? - &e(z + c(2.0 * h, 0.0))?;
        d = &d + &(&e(z + c(h, 0.0))? - &e(z + c(-h, 0.0))?).scale(c(8.0, 0.0));
        let d = d.scale(c(1.0 / (12.0 * h), 0.0));
        let inv = exp_nilpotent(&ladder_at(cc, n, z)?.scale(c(-1.0, 0.0)))?;
        let form = (&inv * &d).trimmed(0.0);
        let mut declared = LaurentMatrix::zero(n);
        for (j, m) in ladder {
            declared.add_at(*j as i32, &m.eval(z)?);
        }
        let lo = form.support().map_or(0, |s| s.0).min(declared.support().map_or(0, |s| s.0));
        let hi = form.support().map_or(0, |s| s.1).max(declared.support().map_or(0, |s| s.1));
        for k in lo..=hi {
            residual = residual.max(max_abs(&(form.coeff(k) - declared.coeff(k))));
        }
        extracted.push((z, form.iter().map(|(k, m)| (k, m.clone())).collect()));
    }
    Ok(McReport { residual, extracted })
}

// ---------------------------------------------------------------------------
// Grids and frame fields.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub idx: (i32, i32),
    pub z: C64,
}

/// Points `center + spacing (i + i j)` of a square lattice.
#[derive(Clone, Debug)]
pub struct Grid {
    pub center: C64,
    pub spacing: f64,
    pub points: Vec<GridPoint>,
    index: HashMap<(i32, i32), usize>,
}

impl Grid {
    pub fn from_indices(center: C64, spacing: f64, idxs: impl IntoIterator<Item = (i32, i32)>) -> Self {
        let points: Vec<GridPoint> = idxs
            .into_iter()
            .map(|(i, j)| GridPoint { idx: (i, j), z: center + c(spacing * i as f64, spacing * j as f64) })
            .collect();
        let index = points.iter().enumerate().map(|(k, p)| (p.idx, k)).collect();
        Grid { center, spacing, points, index }
    }

    /// Lattice points within `radius` of the center.
    pub fn disc(center: C64, radius: f64, spacing: f64) -> Self {
        let m = (radius / spacing).floor() as i32;
        let r2 = (radius / spacing) * (radius / spacing) * (1.0 + 1e-12);
        let idxs = (-m..=m).flat_map(|j| (-m..=m).map(move |i| (i, j))).filter(|(i, j)| (i * i + j * j) as f64 <= r2);
        Self::from_indices(center, spacing, idxs.collect::<Vec<_>>())
    }

    /// The `(2 half + 1)^2` square patch.
    pub fn square(center: C64, half: i32, spacing: f64) -> Self {
        Self::from_indices(center, spacing, (-half..=half).flat_map(|j| (-half..=half).map(move |i| (i, j))).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lookup(&self, i: i32, j: i32) -> Option<usize> {
        self.index.get(&(i, j)).copied()
    }

    /// Index of the point nearest to `z`, when it coincides with `z` up to rounding.
    pub fn find(&self, z: C64) -> Option<usize> {
        let w = (z - self.center) / self.spacing;
        let k = self.lookup(w.re.round() as i32, w.im.round() as i32)?;
        ((self.points[k].z - z).norm() < 1e-12 * self.spacing.max(1.0)).then_some(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Compact,
    Noncompact,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Compact => "compact",
            Which::Noncompact => "noncompact",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Iwasawa truncation; `None` picks the default from the loop's support.
    pub trunc: Option<usize>,
    pub tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { trunc: None, tol: 1e-9 }
    }
}

/// Extended frames on a grid; failed points carry a reason instead of a frame.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: Grid,
    pub ctx: GroupContext,
    pub which: Which,
    pub basepoint: C64,
    pub basepoint_index: Option<usize>,
    pub minus: Vec<Option<LaurentMatrix>>,
    pub frames: Vec<Option<LaurentMatrix>>,
    pub failures: Vec<Option<String>>,
    pub tol: f64,
}

impl FrameField {
    pub fn frame(&self, i: i32, j: i32) -> Option<&LaurentMatrix> {
        self.grid.lookup(i, j).and_then(|k| self.frames[k].as_ref())
    }

    pub fn failure_count(&self) -> usize {
        self.failures.iter().filter(|f| f.is_some()).count()
    }
}

/// The context the split runs in.
pub fn build_context(ctx: &GroupContext, which: Which) -> Result<GroupContext> {
    match (which, ctx.compact) {
        (Which::Compact, true) | (Which::Noncompact, false) => Ok(ctx.clone()),
        (Which::Compact, false) => compact_dual(ctx),
        (Which::Noncompact, true) => match ctx.noncompact_partner() {
            Some(g) => Ok(g.clone()),
            None => Err(Error::Invalid(format!("{} has no non-compact partner", ctx.name))),
        },
    }
}

/// `F_-` at every grid point, then the Iwasawa split in the chosen real form. Frames are
/// gauged so that the frame at the basepoint is `e`.
pub fn build_frame(p: &PotentialSpec, grid: &Grid, which: Which) -> Result<FrameField> {
    build_frame_with(p, grid, which, BuildOptions::default())
}

pub fn build_frame_with(p: &PotentialSpec, grid: &Grid, which: Which, opts: BuildOptions) -> Result<FrameField> {
    let ctx = build_context(&p.ctx, which)?;
    let base = iwasawa(&p.initial, &ctx, opts.trunc.unwrap_or_else(|| default_trunc(&p.initial)), opts.tol)?.unitary;
    let gauge = (max_abs(&(base.coeff(0) - eye(ctx.dim))) > 0.0 || base.support() != Some((0, 0))).then(|| ctx.real_inverse(&base));

    let results: Vec<Result<(LaurentMatrix, LaurentMatrix)>> = grid
        .points
        .par_iter()
        .map(|pt| {
            let fm = solve_meromorphic_frame(p, pt.z, None)?;
            let trunc = opts.trunc.unwrap_or_else(|| default_trunc(&fm));
            let split = iwasawa(&fm, &ctx, trunc, opts.tol)?;
            let f = match &gauge {
                Some(g) => g * &split.unitary,
                None => split.unitary,
            };
            Ok((fm, f))
        })
        .collect();

    let basepoint_index = grid.find(p.basepoint);
    let mut minus = Vec::with_capacity(grid.len());
    let mut frames = Vec::with_capacity(grid.len());
    let mut failures = Vec::with_capacity(grid.len());
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok((fm, f)) => {
                minus.push(Some(fm));
                frames.push(Some(if Some(k) == basepoint_index { LaurentMatrix::identity(ctx.dim) } else { f }));
                failures.push(None);
            }
            Err(e) => {
                minus.push(None);
                frames.push(None);
                failures.push(Some(e.to_string()));
            }
        }
    }
    Ok(FrameField { grid: grid.clone(), ctx, which, basepoint: p.basepoint, basepoint_index, minus, frames, failures, tol: opts.tol })
}

// ---------------------------------------------------------------------------
// Cartan embedding and extended solutions.

#[derive(Clone, Debug)]
pub struct CartanField {
    pub maps: Vec<Option<LaurentMatrix>>,
    /// Largest `|F^2 - e|` over points and 16 circle samples.
    pub square_residual: f64,
    /// Whether the basepoint value equals `h` exactly.
    pub basepoint_is_h: Option<bool>,
}

/// `F h F^-1` at every point.
pub fn cartan_embed(field: &FrameField, h: &CMat) -> CartanField {
    let n = field.ctx.dim;
    let hl = LaurentMatrix::constant(h.clone());
    let maps: Vec<Option<LaurentMatrix>> = field
        .frames
        .par_iter()
        .map(|f| f.as_ref().map(|f| &(f * &hl) * &field.ctx.real_inverse(f)))
        .collect();
    let square_residual = maps
        .par_iter()
        .flatten()
        .map(|m| {
            crate::laurent::circle_points(16, 0.25)
                .into_iter()
                .map(|l| {
                    let v = m.eval(l);
                    max_abs(&(&v * &v - eye(n)))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let basepoint_is_h = field.basepoint_index.and_then(|k| maps[k].as_ref()).map(|m| m.support() == Some((0, 0)) && m.coeff(0) == *h);
    CartanField { maps, square_residual, basepoint_is_h }
}

/// `e + sum_{k != 0} (lambda^k - 1) B_k`: a loop with value exactly `e` at `lambda = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasedLoop {
    dim: usize,
    b: BTreeMap<i32, CMat>,
}

impl BasedLoop {
    /// Keeps the non-constant coefficients of `g`; exact when `g(1) = e`.
    pub fn from_laurent(g: &LaurentMatrix) -> Self {
        let b = g.iter().filter(|(k, _)| *k != 0).map(|(k, m)| (k, m.clone())).collect();
        BasedLoop { dim: g.dim(), b }
    }

    pub fn identity(dim: usize) -> Self {
        BasedLoop { dim, b: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, lambda: C64) -> CMat {
        let mut out = eye(self.dim);
        for (k, m) in &self.b {
            out += m * (lambda.powi(*k) - c(1.0, 0.0));
        }
        out
    }

    pub fn to_laurent(&self) -> LaurentMatrix {
        let mut out = LaurentMatrix::identity(self.dim);
        for (k, m) in &self.b {
            out.set(*k, m.clone());
            out.add_at(0, &(-m));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ExtendedField {
    pub xi: CMat,
    pub phis: Vec<Option<BasedLoop>>,
}

/// `Phi = gamma_xi(lambda) F(lambda) F(1)^-1`, needing `exp(pi xi) = h` up to the center.
pub fn extended_solution(field: &FrameField, xi: &CMat) -> Result<ExtendedField> {
    let report = exp_pi_check(xi, &field.ctx.h);
    if report.modulo_center > 1e-10 {
        return Err(Error::Invalid(format!("exp(pi xi) differs from h by {:e}", report.modulo_center)));
    }
    let gamma = gamma_xi_loop(xi)?;
    if gamma.half {
        return Err(Error::HalfIntegerConvention);
    }
    let one = c(1.0, 0.0);
    let phis = field
        .frames
        .par_iter()
        .map(|f| {
            f.as_ref().map(|f| {
                let f1 = f.eval(one);
                let f1_inv = field.ctx.hermitian.clone().try_inverse().expect("invertible form") * f1.adjoint() * &field.ctx.hermitian;
                BasedLoop::from_laurent(&(&gamma.lp * f).map(|m| m * &f1_inv))
            })
        })
        .collect();
    Ok(ExtendedField { xi: xi.clone(), phis })
}

/// Largest `|Phi(-lambda) Phi(-1)^-1 - Phi(lambda)|` over 16 circle samples.
pub fn t_invariance_residual(phi: &BasedLoop) -> f64 {
    let m1 = phi.eval(c(-1.0, 0.0));
    let Some(m1i) = m1.try_inverse() else { return f64::INFINITY };
    crate::laurent::circle_points(16, 0.25)
        .into_iter()
        .map(|l| max_abs(&(phi.eval(-l) * &m1i - phi.eval(l))))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Normalized potential from frames.

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub max_num_degree: usize,
    pub max_den_degree: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_num_degree: 8, max_den_degree: 2, tol: 1e-7 }
    }
}

/// Least-squares `N(z) / (1 + d_1 z + ...)` through the samples, lowest degrees first.
pub fn fit_rational(zs: &[C64], fs: &[C64], opts: FitOptions) -> Result<RationalFn> {
    let scale = fs.iter().map(|f| f.norm()).fold(0.0, f64::max);
    if scale <= opts.tol {
        return Ok(RationalFn::zero());
    }
    for dn in 0..=opts.max_num_degree {
        for dd in 0..=opts.max_den_degree {
            let unknowns = dn + 1 + dd;
            if unknowns > zs.len() {
                continue;
            }
            let mut a = zeros(zs.len(), unknowns);
            let mut b = zeros(zs.len(), 1);
            for (r, (z, f)) in zs.iter().zip(fs).enumerate() {
                for k in 0..=dn {
                    a[(r, k)] = z.powi(k as i32);
                }
                for k in 1..=dd {
                    a[(r, dn + k)] = -f * z.powi(k as i32);
                }
                b[(r, 0)] = *f;
            }
            let x = lstsq(&a, &b, 1e-14);
            let num: Vec<C64> = (0..=dn).map(|k| x[(k, 0)]).collect();
            let mut den = vec![c(1.0, 0.0)];
            den.extend((1..=dd).map(|k| x[(dn + k, 0)]));
            let Ok(fit) = RationalFn::new(num, den) else { continue };
            let worst = zs
                .iter()
                .zip(fs)
                .map(|(z, f)| fit.eval(*z).map_or(f64::INFINITY, |v| (v - f).norm()))
                .fold(0.0, f64::max);
            if worst <= opts.tol * scale.max(1.0) {
                return Ok(fit);
            }
        }
    }
    Err(Error::FitDegreeExceeded(opts.max_num_degree))
}

/// Birkhoff-splits every frame, differentiates the `lambda^-1` coefficient of the minus
/// factor in x, and fits the result entrywise. With `ce` the samples are split by grade
/// first, giving one coefficient per grade.
pub fn normalized_potential_of(field: &FrameField, ce: Option<&CanonicalElement>, opts: FitOptions) -> Result<PotentialSpec> {
    let n = field.ctx.dim;
    let minus: Vec<Option<CMat>> = field
        .frames
        .par_iter()
        .map(|f| {
            f.as_ref().and_then(|f| birkhoff(f, &field.ctx, default_trunc(f), field.tol).ok()).map(|b| b.minus.coeff(-1))
        })
        .collect();
    let h = field.grid.spacing;
    let mut zs = Vec::new();
    let mut samples: Vec<CMat> = Vec::new();
    for (k, pt) in field.grid.points.iter().enumerate() {
        let (i, j) = pt.idx;
        let at = |di: i32| field.grid.lookup(i + di, j).and_then(|q| minus[q].clone());
        let d = match (at(-2), at(-1), at(1), at(2)) {
            (Some(m2), Some(m1), Some(p1), Some(p2)) => (m2 - p2 + (p1 - m1) * c(8.0, 0.0)) / c(12.0 * h, 0.0),
            (_, Some(m1), Some(p1), _) if minus[k].is_some() => (p1 - m1) / c(2.0 * h, 0.0),
            _ => continue,
        };
        zs.push(pt.z);
        samples.push(d);
    }
    if zs.len() < 3 {
        return Err(Error::GridTooCoarse(format!("only {} differentiable points", zs.len())));
    }
    let pieces: Vec<(usize, Vec<CMat>)> = match ce {
        Some(ce) => (1..=ce.height)
            .map(|g| ((g - 1) as usize, samples.iter().map(|s| ce.component(s, g)).collect()))
            .collect(),
        None => vec![(0, samples)],
    };
    let mut coefficients = Vec::new();
    for (j, vals) in pieces {
        let mut m = RatMatrix::zeros(n, n);
        for r in 0..n {
            for col in 0..n {
                let fs: Vec<C64> = vals.iter().map(|v| v[(r, col)]).collect();
                m.set(r, col, fit_rational(&zs, &fs, opts)?);
            }
        }
        if !m.is_zero() {
            coefficients.push((j, m));
        }
    }
    let ctx = field.ctx.noncompact_partner().cloned().unwrap_or_else(|| field.ctx.clone());
    Ok(PotentialSpec::new(ctx, ce.cloned(), field.basepoint, coefficients, Mode::Normalized))
}
