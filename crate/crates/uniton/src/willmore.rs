//! The totally isotropic Willmore two-sphere in `S^6`: its normalized potential, the closed
//! form of the associated family `x_lambda`, and the comparison between the conformal Gauss
//! planes of the closed form and of the frames the pipeline builds.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dpw::{build_frame_with, BuildOptions, FrameField, Grid, Mode, PotentialSpec, Which};
use crate::error::{Error, Result};
use crate::laurent::{RatMatrix, RationalFn};
use crate::liectx::GroupContext;
use crate::linalg::{c, diag, max_abs, op_norm, unit, zeros, CMat, C64, I};
use crate::roots::{cartan_data, grading, CanonicalElement};
use crate::verify::i13;

/// `h = D = diag(-I_4, I_4)`.
pub fn willmore_context() -> GroupContext {
    GroupContext::lorentz(8, &[-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0]).expect("valid context")
}

/// `R_45 + R_67` (zero-based indices), a height-2 element with `exp(pi xi) = -h`.
pub fn willmore_xi() -> CMat {
    unit(8, 4, 5) - unit(8, 5, 4) + unit(8, 6, 7) - unit(8, 7, 6)
}

pub fn willmore_grading() -> Result<CanonicalElement> {
    grading(&willmore_xi(), &cartan_data(&willmore_context())?)
}

fn poly(coeffs: &[(f64, f64)]) -> RationalFn {
    RationalFn::poly(coeffs.iter().map(|&(re, im)| c(re, im)).collect())
}

/// The `4 x 4` block of the example, entries polynomial in `z`.
pub fn b_hat() -> RatMatrix {
    let rows: [[&[(f64, f64)]; 4]; 4] = [
        [&[(0.0, 0.0), (0.0, 1.0)], &[(0.0, 0.0), (-1.0, 0.0)], &[(0.0, -0.5)], &[(0.5, 0.0)]],
        [&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 0.0), (1.0, 0.0)], &[(0.0, -0.5)], &[(0.5, 0.0)]],
        [&[(-1.0, 0.0)], &[(0.0, -1.0)], &[(0.0, 0.0), (-0.5, 0.0)], &[(0.0, 0.0), (0.0, -0.5)]],
        [&[(0.0, 1.0)], &[(-1.0, 0.0)], &[(0.0, 0.0), (0.0, -0.5)], &[(0.0, 0.0), (0.5, 0.0)]],
    ];
    RatMatrix::from_fn(4, 4, |i, j| poly(rows[i][j]))
}

/// `(0, B; -B^t I_{1,3}, 0)` for a `4 x (n - 4)` block `B`.
pub fn potential_matrix(b1: &RatMatrix) -> RatMatrix {
    let (rows, cols) = b1.shape();
    assert_eq!(rows, 4);
    let n = cols + 4;
    let lower = b1.transpose().mul(&RatMatrix::constant(&i13())).scale(c(-1.0, 0.0));
    RatMatrix::from_fn(n, n, |i, j| match (i < 4, j < 4) {
        (true, false) => b1.get(i, j - 4).clone(),
        (false, true) => lower.get(i - 4, j).clone(),
        _ => RationalFn::zero(),
    })
}

/// `C = C_1 + C_2` with `C_1 = int A` and `C_2 = int C_1 A - C_1^2 / 2`, so that
/// `(exp C)^-1 d exp C = A dz` when `A` lies in grade 1 of a height-2 element.
pub fn closed_c(a: &RatMatrix) -> Option<RatMatrix> {
    let c1 = a.integral()?;
    let c2 = c1.mul(a).integral()?.add(&c1.mul(&c1).scale(c(-0.5, 0.0)));
    Some(c1.add(&c2))
}

/// The normalized potential `lambda^-1 (0, B; -B^t I_{1,3}, 0) dz` of a polynomial block,
/// based at 0 in the Willmore context.
pub fn potential_from_b1(b1: &RatMatrix) -> Result<PotentialSpec> {
    let ctx = willmore_context();
    let ce = willmore_grading()?;
    let a = potential_matrix(b1);
    let mut p = PotentialSpec::new(ctx, Some(ce), c(0.0, 0.0), vec![(0, a.clone())], Mode::Normalized);
    if let Some(cc) = closed_c(&a) {
        p = p.with_closed_c(vec![(0, cc)]);
    }
    Ok(p)
}

pub fn example_potential() -> Result<PotentialSpec> {
    potential_from_b1(&b_hat())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WillmoreSample {
    pub z: C64,
    pub lambda: C64,
    pub x: [f64; 7],
}

/// `x_lambda(z)` of the associated family.
pub fn closed_form_x(z: C64, lambda: C64) -> WillmoreSample {
    let r2 = z.norm_sqr();
    let zb = z.conj();
    let li = lambda.inv();
    let den = 1.0 + r2 + 1.25 * r2 * r2 + 4.0 * r2.powi(3) / 9.0 + r2.powi(4) / 36.0;
    let a = 1.0 + r2.powi(3) / 9.0;
    let b = 1.0 - r2 * r2 / 12.0;
    let d = 0.5 * r2 * (1.0 + 4.0 * r2 / 3.0);
    let comps: [C64; 7] = [
        c(1.0 - r2 - 0.75 * r2 * r2 + 4.0 * r2.powi(3) / 9.0 - r2.powi(4) / 36.0, 0.0),
        -I * (z - zb) * a,
        (z + zb) * a,
        -I * (li * z * z - lambda * zb * zb) * b,
        (li * z * z + lambda * zb * zb) * b,
        -I * (li * z - lambda * zb) * d,
        (li * z + lambda * zb) * d,
    ];
    let mut x = [0.0; 7];
    for (k, v) in comps.iter().enumerate() {
        x[k] = v.re / den;
    }
    WillmoreSample { z, lambda, x }
}

/// The light-cone lift `Y = (1, x)` in `R^{1,7}`.
pub fn lift(x: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(x.iter().cloned()).collect()
}

/// Projector onto the conformal Gauss plane of a surface in `S^n` at `z`, orthogonal for
/// `I_{1,n+1}`. The plane is spanned by `Y, Y_u, Y_v` and `Y_uu + Y_vv`, which together
/// span the mean-curvature sphere; derivatives are fourth-order differences with step `h`.
pub fn conformal_gauss_4plane<S: Fn(C64) -> Vec<f64>>(surface: S, z: C64, h: f64) -> Result<CMat> {
    let y = |w: C64| lift(&surface(w));
    let y0 = y(z);
    let m = y0.len();
    let at = |d: C64, k: usize| -> [f64; 5] {
        let v = |s: f64| y(z + d * s)[k];
        [v(-2.0 * h), v(-h), v(0.0), v(h), v(2.0 * h)]
    };
    let first = |s: [f64; 5]| (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / (12.0 * h);
    let second = |s: [f64; 5]| (-s[0] + 16.0 * s[1] - 30.0 * s[2] + 16.0 * s[3] - s[4]) / (12.0 * h * h);
    let mut b = zeros(m, 4);
    for k in 0..m {
        let su = at(c(1.0, 0.0), k);
        let sv = at(I, k);
        b[(k, 0)] = c(y0[k], 0.0);
        b[(k, 1)] = c(first(su), 0.0);
        b[(k, 2)] = c(first(sv), 0.0);
        b[(k, 3)] = c(second(su) + second(sv), 0.0);
    }
    let mut lor = vec![1.0; m];
    lor[0] = -1.0;
    let j = diag(&lor);
    let gram = b.transpose() * &j * &b;
    let scale = max_abs(&gram).max(f64::MIN_POSITIVE);
    let det = gram.determinant().norm();
    if det < 1e-12 * scale.powi(4) {
        return Err(Error::BranchPoint(z));
    }
    let gi = gram.try_inverse().ok_or(Error::BranchPoint(z))?;
    Ok(&b * gi * b.transpose() * j)
}

/// Projector onto the span of the first four columns of a frame value `f`.
pub fn pipeline_plane(f: &CMat) -> Result<CMat> {
    let n = f.nrows();
    let mut e = zeros(n, n);
    for k in 0..4 {
        e[(k, k)] = c(1.0, 0.0);
    }
    let fi = f.clone().try_inverse().ok_or(Error::SingularLoop(0.0))?;
    Ok(f * e * fi)
}

pub fn plane_deviation(a: &CMat, b: &CMat) -> f64 {
    op_norm(&(a - b))
}

/// Oracle plane of the closed-form surface.
pub fn oracle_plane(z: C64, lambda: C64) -> Result<CMat> {
    conformal_gauss_4plane(|w| closed_form_x(w, lambda).x.to_vec(), z, 1e-3)
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub max_deviation: f64,
    /// `(z, lambda)` of the largest deviation.
    pub at: Option<(C64, C64)>,
    pub compared: usize,
    /// Grid points where the split or the oracle failed, with the reason.
    pub skipped: Vec<(C64, String)>,
    pub field: FrameField,
}

/// Builds the non-compact frame field of `p` on `grid` and compares its Gauss planes with
/// those of the closed form at each `lambda`.
pub fn compare_with(p: &PotentialSpec, grid: &Grid, lambdas: &[C64], opts: BuildOptions) -> Result<Comparison> {
    let field = build_frame_with(p, grid, Which::Noncompact, opts)?;
    let per_point: Vec<std::result::Result<Vec<(f64, C64)>, String>> = field
        .frames
        .par_iter()
        .zip(&field.failures)
        .zip(&grid.points)
        .map(|((f, fail), pt)| {
            let f = f.as_ref().ok_or_else(|| fail.clone().unwrap_or_default())?;
            lambdas
                .iter()
                .map(|&l| {
                    let pp = pipeline_plane(&f.eval(l)).map_err(|e| e.to_string())?;
                    let po = oracle_plane(pt.z, l).map_err(|e| e.to_string())?;
                    Ok((plane_deviation(&pp, &po), l))
                })
                .collect()
        })
        .collect();
    let mut max_deviation = 0.0f64;
    let mut at = None;
    let mut compared = 0;
    let mut skipped = Vec::new();
    for (r, pt) in per_point.into_iter().zip(&grid.points) {
        match r {
            Ok(devs) => {
                compared += 1;
                for (d, l) in devs {
                    if d > max_deviation || d.is_nan() {
                        max_deviation = d;
                        at = Some((pt.z, l));
                    }
                }
            }
            Err(e) => skipped.push((pt.z, e)),
        }
    }
    Ok(Comparison { max_deviation, at, compared, skipped, field })
}

pub fn compare_pipeline_vs_oracle(grid: &Grid, lambdas: &[C64]) -> Result<Comparison> {
    compare_with(&example_potential()?, grid, lambdas, BuildOptions::default())
}

// ---------------------------------------------------------------------------
// Shapes of isotropic blocks.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairType {
    /// `v = (h1, h1, h3, i h3)` and likewise `v-hat`.
    I,
    /// `v-hat = i v`.
    II,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialShape {
    pub m: usize,
    pub pair_types: Vec<PairType>,
    /// `1 + #type-II pairs`, once the type-II pairs are moved to the front.
    pub shape_index: usize,
    /// Signed row permutation applied before matching, as `(row, sign)` per target row.
    pub rows: [(usize, i8); 4],
}

const SHAPE_POINTS: [C64; 3] = [C64::new(0.37, 0.21), C64::new(-0.53, 0.8), C64::new(1.1, -0.4)];

fn column_values(b: &RatMatrix, col: usize) -> Result<Vec<[C64; 4]>> {
    SHAPE_POINTS
        .iter()
        .map(|z| {
            let mut v = [C64::new(0.0, 0.0); 4];
            for (r, slot) in v.iter_mut().enumerate() {
                *slot = b.get(r, col).eval(*z)?;
            }
            Ok(v)
        })
        .collect()
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-10 * scale.max(1.0)
}

fn is_type_ii(v: &[[C64; 4]], w: &[[C64; 4]], scale: f64) -> bool {
    [I, -I].iter().any(|s| v.iter().zip(w).all(|(a, b)| (0..4).all(|r| close(b[r], a[r] * s, scale))))
}

fn is_type_i(v: &[[C64; 4]], rows: &[(usize, i8); 4], scale: f64) -> bool {
    v.iter().all(|a| {
        let g = |k: usize| a[rows[k].0] * rows[k].1 as f64;
        close(g(0), g(1), scale) && close(g(3), g(2) * I, scale)
    })
}

fn row_transforms() -> Vec<[(usize, i8); 4]> {
    let perms = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
    let mut out = Vec::new();
    for p in perms {
        for signs in 0..16u8 {
            let s = |k: u8| if signs >> k & 1 == 1 { -1 } else { 1 };
            out.push([(0, s(0)), (p[0], s(1)), (p[1], s(2)), (p[2], s(3))]);
        }
    }
    out
}

/// Matches every column pair of a `4 x (2m - 4)` block against the two forms, after a
/// signed permutation of the rows that preserves `I_{1,3}`. A nonzero pair matching the
/// second form is reported as type II; zero pairs count as type I.
pub fn classify_shape(b1: &RatMatrix) -> Result<PotentialShape> {
    let (rows, cols) = b1.shape();
    if rows != 4 || cols % 2 == 1 || cols == 0 {
        return Err(Error::Invalid(format!("expected a 4 x (2m - 4) block, got {rows} x {cols}")));
    }
    let m = (cols + 4) / 2;
    let values: Vec<Vec<[C64; 4]>> = (0..cols).map(|k| column_values(b1, k)).collect::<Result<_>>()?;
    let scale = values.iter().flatten().flat_map(|v| v.iter()).map(|a| a.norm()).fold(0.0, f64::max);
    let nonzero = |k: usize| values[k].iter().any(|v| v.iter().any(|a| a.norm() > 1e-12 * scale.max(1.0)));
    for t in row_transforms() {
        let mut types = Vec::with_capacity(cols / 2);
        for pair in 0..cols / 2 {
            let (v, w) = (&values[2 * pair], &values[2 * pair + 1]);
            if (nonzero(2 * pair) || nonzero(2 * pair + 1)) && is_type_ii(v, w, scale) {
                types.push(PairType::II);
            } else if is_type_i(v, &t, scale) && is_type_i(w, &t, scale) {
                types.push(PairType::I);
            } else {
                break;
            }
        }
        if types.len() == cols / 2 {
            let shape_index = 1 + types.iter().filter(|t| **t == PairType::II).count();
            return Ok(PotentialShape { m, pair_types: types, shape_index, rows: t });
        }
    }
    Err(Error::NoMatch)
}

// ---------------------------------------------------------------------------
// Export.

pub fn surface_samples(grid: &Grid, lambdas: &[C64]) -> Vec<WillmoreSample> {
    grid.points.iter().flat_map(|pt| lambdas.iter().map(move |&l| closed_form_x(pt.z, l))).collect()
}

/// `z_re,z_im,lambda_arg,x1..x7`, with `lambda_arg` in degrees.
pub fn write_csv<W: Write>(mut w: W, samples: &[WillmoreSample]) -> io::Result<()> {
    writeln!(w, "z_re,z_im,lambda_arg,x1,x2,x3,x4,x5,x6,x7")?;
    for s in samples {
        write!(w, "{:.14e},{:.14e},{:.14e}", s.z.re, s.z.im, s.lambda.arg().to_degrees())?;
        for x in s.x {
            write!(w, ",{x:.14e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Stereographic projection from `(-1, 0, ..., 0)` followed by a choice of three of the six
/// resulting coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjProjection {
    pub axes: [usize; 3],
}

impl Default for ObjProjection {
    fn default() -> Self {
        ObjProjection { axes: [0, 1, 2] }
    }
}

impl ObjProjection {
    pub fn project(&self, x: &[f64; 7]) -> [f64; 3] {
        let d = 1.0 + x[0];
        self.axes.map(|a| x[a + 1] / d)
    }
}

/// Triangulated mesh of the `lambda = 1` surface over the grid cells whose four corners are
/// present.
pub fn write_obj<W: Write>(mut w: W, grid: &Grid, proj: ObjProjection) -> io::Result<()> {
    writeln!(w, "# x_1 over the grid, stereographic from (-1,0,...,0), axes {:?} of R^6", proj.axes.map(|a| a + 1))?;
    for pt in &grid.points {
        let p = proj.project(&closed_form_x(pt.z, c(1.0, 0.0)).x);
        writeln!(w, "v {:.14e} {:.14e} {:.14e}", p[0], p[1], p[2])?;
    }
    for pt in &grid.points {
        let (i, j) = pt.idx;
        let corners = [grid.lookup(i, j), grid.lookup(i + 1, j), grid.lookup(i + 1, j + 1), grid.lookup(i, j + 1)];
        if let [Some(a), Some(b), Some(cc), Some(d)] = corners {
            writeln!(w, "f {} {} {}", a + 1, b + 1, cc + 1)?;
            writeln!(w, "f {} {} {}", a + 1, cc + 1, d + 1)?;
        }
    }
    Ok(())
}
