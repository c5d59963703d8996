//! Roots, simple roots and their dual basis, canonical elements and ad-gradings.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::laurent::LaurentMatrix;
use crate::liectx::GroupContext;
use crate::linalg::{bracket, c, expm, frob_inner, herm_eig, max_abs, op_norm, span_projector, zeros, CMat, C64, I};

/// A root with its values `theta(T_k) / i` on the torus basis.
#[derive(Clone, Debug)]
pub struct Root {
    pub values: Vec<f64>,
    pub vector: CMat,
    pub positive: bool,
}

#[derive(Clone, Debug)]
pub struct CartanData {
    pub torus: Vec<CMat>,
    /// Orthonormal basis of the complex Lie algebra.
    pub basis: Vec<CMat>,
    pub roots: Vec<Root>,
    /// Indices into `roots`.
    pub simple: Vec<usize>,
    /// `xi_k` with `theta_j(xi_k) = i delta_jk`.
    pub dual: Vec<CMat>,
}

const VALUE_TOL: f64 = 1e-8;

fn ad_matrix(x: &CMat, basis: &[CMat]) -> CMat {
    let d = basis.len();
    let mut a = zeros(d, d);
    for (l, b) in basis.iter().enumerate() {
        let v = bracket(x, b);
        for (k, bk) in basis.iter().enumerate() {
            a[(k, l)] = frob_inner(bk, &v);
        }
    }
    a
}

fn combine(coeffs: &CMat, col: usize, basis: &[CMat]) -> CMat {
    let n = basis[0].nrows();
    basis.iter().enumerate().fold(zeros(n, n), |acc, (k, b)| acc + b * coeffs[(k, col)])
}

fn lex_positive(v: &[f64]) -> bool {
    v.iter().find(|x| x.abs() > VALUE_TOL).is_some_and(|x| *x > 0.0)
}

/// Roots from simultaneous diagonalization of ad on the context's maximal torus.
pub fn cartan_data(ctx: &GroupContext) -> Result<CartanData> {
    let torus = ctx.compact_torus().to_vec();
    let basis = ctx.algebra_basis();
    let l = torus.len();
    // generic element of the torus: its ad-eigenspaces are the root spaces.
    let generic = torus
        .iter()
        .enumerate()
        .fold(zeros(ctx.dim, ctx.dim), |acc, (k, t)| acc + t * c(1.0 / (k as f64 + 2f64.sqrt()) + 0.1 * (k as f64).sqrt(), 0.0));
    let ad = ad_matrix(&generic, &basis);
    let (vals, vecs) = herm_eig(&(ad * c(0.0, -1.0)));
    let mut roots = Vec::new();
    let mut zero_count = 0;
    for (col, v) in vals.iter().enumerate() {
        if v.abs() < VALUE_TOL {
            zero_count += 1;
            continue;
        }
        let vector = combine(&vecs, col, &basis);
        let values: Vec<f64> = torus.iter().map(|t| (frob_inner(&vector, &bracket(t, &vector)) * c(0.0, -1.0)).re).collect();
        let positive = lex_positive(&values);
        roots.push(Root { values, vector, positive });
    }
    if zero_count != l {
        return Err(Error::Invalid(format!("torus of dimension {l} has a centralizer of dimension {zero_count}")));
    }
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < VALUE_TOL);
    let pos: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].positive).collect();
    let simple: Vec<usize> = pos
        .iter()
        .cloned()
        .filter(|&i| {
            !pos.iter().any(|&a| {
                pos.iter().any(|&b| {
                    let s: Vec<f64> = roots[a].values.iter().zip(&roots[b].values).map(|(x, y)| x + y).collect();
                    close(&s, &roots[i].values)
                })
            })
        })
        .collect();
    if simple.len() != l {
        return Err(Error::Invalid(format!("found {} simple roots for rank {l}", simple.len())));
    }
    let m = DMatrix::<f64>::from_fn(l, l, |j, k| roots[simple[j]].values[k]);
    let minv = m.try_inverse().ok_or_else(|| Error::Invalid("simple roots are dependent".into()))?;
    let dual = (0..l)
        .map(|k| torus.iter().enumerate().fold(zeros(ctx.dim, ctx.dim), |acc, (t, tm)| acc + tm * c(minv[(t, k)], 0.0)))
        .collect();
    Ok(CartanData { torus, basis, roots, simple, dual })
}

impl CartanData {
    pub fn rank(&self) -> usize {
        self.torus.len()
    }

    /// `theta(xi) / i` for the root with index `r`.
    pub fn root_value(&self, r: usize, xi: &CMat) -> f64 {
        let v = &self.roots[r].vector;
        (frob_inner(v, &bracket(xi, v)) / frob_inner(v, v) * c(0.0, -1.0)).re
    }

    /// Values of the simple roots on `xi`, divided by i.
    pub fn simple_values(&self, xi: &CMat) -> Vec<f64> {
        self.simple.iter().map(|&r| self.root_value(r, xi)).collect()
    }

    /// `sum_{k in set} xi_k`, indices zero-based.
    pub fn subset_sum(&self, set: &[usize]) -> CMat {
        let n = self.torus[0].nrows();
        set.iter().fold(zeros(n, n), |acc, &k| acc + &self.dual[k])
    }

    /// The canonical element with the same zero pattern on the simple roots.
    pub fn canonical_reduction(&self, xi: &CMat) -> Result<CMat> {
        let vals = self.simple_values(xi);
        if vals.iter().any(|v| *v < -VALUE_TOL) {
            return Err(Error::Invalid("element is outside the closed fundamental chamber".into()));
        }
        let set: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > VALUE_TOL).collect();
        Ok(self.subset_sum(&set))
    }
}

/// An element of the torus together with its integer ad-grading.
#[derive(Clone, Debug)]
pub struct CanonicalElement {
    pub xi: CMat,
    /// Zero-based indices of the dual-basis elements summed into `xi` (canonical case).
    pub index_set: Vec<usize>,
    /// Orthonormal bases of the eigenspaces `ad xi = i j`.
    pub grading: BTreeMap<i32, Vec<CMat>>,
    pub height: i32,
    pub is_canonical: bool,
}

impl CanonicalElement {
    pub fn grade(&self, j: i32) -> &[CMat] {
        self.grading.get(&j).map_or(&[], |v| v.as_slice())
    }

    pub fn grade_dim(&self, j: i32) -> usize {
        self.grade(j).len()
    }

    /// Union of bases of the grades selected by `pred`.
    pub fn grades_where<F: Fn(i32) -> bool>(&self, pred: F) -> Vec<CMat> {
        self.grading.iter().filter(|(j, _)| pred(**j)).flat_map(|(_, v)| v.iter().cloned()).collect()
    }

    /// Orthogonal projector (on flattened matrices) onto the grades selected by `pred`.
    pub fn projector<F: Fn(i32) -> bool>(&self, pred: F) -> CMat {
        let n = self.xi.nrows();
        let b = self.grades_where(pred);
        if b.is_empty() {
            return zeros(n * n, n * n);
        }
        span_projector(&b, 1e-12)
    }

    /// Component of `x` in grade `j`.
    pub fn component(&self, x: &CMat, j: i32) -> CMat {
        let n = self.xi.nrows();
        self.grade(j).iter().fold(zeros(n, n), |acc, b| acc + b * frob_inner(b, x))
    }

    /// Distance of `x` from the span of the grades selected by `pred`.
    pub fn residual_outside<F: Fn(i32) -> bool>(&self, x: &CMat, pred: F) -> f64 {
        let mut r = x.clone();
        for (j, _) in self.grading.iter().filter(|(j, _)| pred(**j)) {
            r -= self.component(x, *j);
        }
        max_abs(&r)
    }
}

/// Integer grading of the algebra by the eigenvalues of `ad xi`.
pub fn grading(xi: &CMat, cd: &CartanData) -> Result<CanonicalElement> {
    let ad = ad_matrix(xi, &cd.basis);
    let (vals, vecs) = herm_eig(&(ad * c(0.0, -1.0)));
    let mut grading: BTreeMap<i32, Vec<CMat>> = BTreeMap::new();
    for (col, v) in vals.iter().enumerate() {
        let j = v.round();
        if (v - j).abs() > VALUE_TOL {
            return Err(Error::NonIntegralElement((v - j).abs()));
        }
        grading.entry(j as i32).or_default().push(combine(&vecs, col, &cd.basis));
    }
    let height = grading.keys().cloned().max().unwrap_or(0).max(0);
    let sv = cd.simple_values(xi);
    let is_canonical = sv.iter().all(|v| v.abs() < VALUE_TOL || (v - 1.0).abs() < VALUE_TOL) && sv.iter().any(|v| v.abs() > VALUE_TOL);
    let index_set = if is_canonical { (0..sv.len()).filter(|&k| sv[k] > 0.5).collect() } else { Vec::new() };
    Ok(CanonicalElement { xi: xi.clone(), index_set, grading, height, is_canonical })
}

/// All `2^l - 1` nonzero subset sums of the dual basis, graded.
pub fn enumerate_canonical(cd: &CartanData) -> Result<Vec<CanonicalElement>> {
    let l = cd.rank();
    (1u32..(1 << l))
        .map(|mask| {
            let set: Vec<usize> = (0..l).filter(|k| mask & (1 << k) != 0).collect();
            grading(&cd.subset_sum(&set), cd)
        })
        .collect()
}

/// The lambda-graded spaces: at power j the sum of grades `j < k <= r`; the twisted version
/// keeps even powers only.
pub type LambdaGraded = BTreeMap<i32, Vec<CMat>>;

pub fn u0_spaces(ce: &CanonicalElement) -> (LambdaGraded, LambdaGraded) {
    let r = ce.height;
    let mut full = BTreeMap::new();
    for j in 0..r {
        let b = ce.grades_where(|k| k > j && k <= r);
        if !b.is_empty() {
            full.insert(j, b);
        }
    }
    let twisted = full.iter().filter(|(j, _)| *j % 2 == 0).map(|(j, b)| (*j, b.clone())).collect();
    (full, twisted)
}

pub fn lambda_graded_dim(g: &LambdaGraded) -> usize {
    g.values().map(|b| b.len()).sum()
}

/// `gamma_xi(e^{it}) = exp(t xi)` as a Laurent loop. For spectra in `i(Z + 1/2)` the stored
/// loop is `lambda^{-1/2} gamma_xi`, which has the same adjoint action.
#[derive(Clone, Debug)]
pub struct GammaLoop {
    pub lp: LaurentMatrix,
    pub half: bool,
}

impl GammaLoop {
    /// `gamma_xi(e^{it})`, using `lambda^{1/2} = e^{it/2}` when the spectrum is half-integral.
    pub fn eval_at_angle(&self, t: f64) -> CMat {
        let l = C64::from_polar(1.0, t);
        let m = self.lp.eval(l);
        if self.half {
            m * C64::from_polar(1.0, t / 2.0)
        } else {
            m
        }
    }

    pub fn inverse(&self) -> LaurentMatrix {
        self.lp.star()
    }
}

pub fn gamma_xi_loop(xi: &CMat) -> Result<GammaLoop> {
    let n = xi.nrows();
    if max_abs(&(xi + xi.adjoint())) > 1e-10 * max_abs(xi).max(1.0) {
        return Err(Error::Invalid("xi must be anti-hermitian".into()));
    }
    let (vals, vecs) = herm_eig(&(xi * c(0.0, -1.0)));
    let half = vals.first().is_some_and(|v| ((v - 0.5) - (v - 0.5).round()).abs() < VALUE_TOL);
    let mut lp = LaurentMatrix::zero(n);
    for (col, v) in vals.iter().enumerate() {
        let shifted = if half { v - 0.5 } else { *v };
        let j = shifted.round();
        if (shifted - j).abs() > VALUE_TOL {
            return Err(Error::NonQuantizedSpectrum((shifted - j).abs()));
        }
        let u = vecs.column(col);
        lp.add_at(j as i32, &(u * u.adjoint()));
    }
    Ok(GammaLoop { lp, half })
}

/// Distances of `exp(pi xi)` from `h`: exactly, up to a central scalar, and up to
/// conjugacy (sorted spectra).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpPiReport {
    pub exact: f64,
    pub modulo_center: f64,
    pub spectral: f64,
}

pub fn exp_pi_check(xi: &CMat, h: &CMat) -> ExpPiReport {
    let e = expm(&(xi * c(PI, 0.0)));
    let exact = max_abs(&(&e - h));
    let modulo_center = [c(1.0, 0.0), c(-1.0, 0.0), I, -I].iter().map(|s| max_abs(&(&e - h * *s))).fold(f64::INFINITY, f64::min);
    let key = |z: &C64| ((z.re * 1e8).round() as i64, (z.im * 1e8).round() as i64);
    let mut a = crate::linalg::eigenvalues(&e);
    let mut b = crate::linalg::eigenvalues(h);
    a.sort_by_key(key);
    b.sort_by_key(key);
    let spectral = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    ExpPiReport { exact, modulo_center, spectral }
}

/// Largest distance of `[g_i, g_j]` from `g_{i+j}` over basis pairs.
pub fn bracket_law_residual(ce: &CanonicalElement) -> f64 {
    let mut worst = 0.0f64;
    for (i, bi) in &ce.grading {
        for (j, bj) in &ce.grading {
            for x in bi {
                for y in bj {
                    let z = bracket(x, y);
                    worst = worst.max(ce.residual_outside(&z, |k| k == i + j));
                }
            }
        }
    }
    worst
}

/// Spectral-norm distance between the orthogonal projectors onto two spans.
pub fn subspace_distance(a: &[CMat], b: &[CMat], n: usize) -> f64 {
    let pa = if a.is_empty() { zeros(n * n, n * n) } else { span_projector(a, 1e-12) };
    let pb = if b.is_empty() { zeros(n * n, n * n) } else { span_projector(b, 1e-12) };
    op_norm(&(pa - pb))
}
