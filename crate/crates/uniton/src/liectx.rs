//! Matrix realizations of the groups, their real forms, the inner involution and the
//! compact-dual switch.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::laurent::{circle_points, LaurentMatrix};
use crate::linalg::{c, diag, eye, fro, max_abs, unit, zeros, CMat, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// SO(n) with the euclidean form.
    Orthogonal,
    /// SO+(1, n-1) with the form diag(-1, 1, ..., 1).
    Lorentz,
    /// SU(n) inside SL(n, C).
    Unitary,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Orthogonal => "so",
            Family::Lorentz => "lorentz",
            Family::Unitary => "su",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "so" | "orthogonal" => Some(Family::Orthogonal),
            "lorentz" | "so1" => Some(Family::Lorentz),
            "su" | "sl" | "unitary" => Some(Family::Unitary),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reality {
    RealEntries,
    UnitaryType,
}

/// A matrix group G^C with a real form and an inner involution `X -> h X h^-1`.
///
/// G^C is `{A : A^t J A = J, det A = 1}` (or SL(n, C) when there is no form) and the real
/// form is `{A in G^C : A^* H A = H}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupContext {
    pub name: String,
    pub family: Family,
    pub dim: usize,
    pub form: Option<CMat>,
    pub hermitian: CMat,
    pub reality: Reality,
    pub compact: bool,
    pub h: CMat,
    pub tol: f64,
    torus: Vec<CMat>,
    partner: Option<Box<GroupContext>>,
}

fn check_involution(h_diag: &[f64]) -> Result<CMat> {
    if h_diag.iter().any(|x| (x.abs() - 1.0).abs() > 0.0) {
        return Err(Error::Invalid("involution entries must be +1 or -1".into()));
    }
    Ok(diag(h_diag))
}

fn orthogonal_torus(j: &CMat) -> Vec<CMat> {
    let n = j.nrows();
    (1..=n / 2)
        .map(|k| {
            let (a, b) = (n - 2 * k, n - 2 * k + 1);
            let s = (j[(a, a)] * j[(b, b)]).re;
            if s > 0.0 {
                unit(n, a, b) - unit(n, b, a)
            } else {
                (unit(n, a, b) + unit(n, b, a)) * I
            }
        })
        .collect()
}

impl GroupContext {
    /// Compact SO(n), `h = diag(h_diag)`.
    pub fn orthogonal(n: usize, h_diag: &[f64]) -> Result<Self> {
        Self::build(Family::Orthogonal, n, h_diag)
    }

    /// SO+(1, n-1) with `J = H = diag(-1, 1, ..., 1)`.
    pub fn lorentz(n: usize, h_diag: &[f64]) -> Result<Self> {
        Self::build(Family::Lorentz, n, h_diag)
    }

    /// SU(n) with complexification SL(n, C).
    pub fn unitary(n: usize, h_diag: &[f64]) -> Result<Self> {
        Self::build(Family::Unitary, n, h_diag)
    }

    pub fn new(family: Family, n: usize, h_diag: &[f64]) -> Result<Self> {
        Self::build(family, n, h_diag)
    }

    fn build(family: Family, n: usize, h_diag: &[f64]) -> Result<Self> {
        if h_diag.len() != n {
            return Err(Error::DimensionMismatch(n, h_diag.len()));
        }
        if n < 2 || (family == Family::Lorentz && n < 3) {
            return Err(Error::Invalid(format!("dimension {n} too small for {}", family.name())));
        }
        let h = check_involution(h_diag)?;
        let mut lor = vec![1.0; n];
        lor[0] = -1.0;
        let (form, hermitian, compact, reality) = match family {
            Family::Orthogonal => (Some(eye(n)), eye(n), true, Reality::RealEntries),
            Family::Lorentz => (Some(diag(&lor)), diag(&lor), false, Reality::RealEntries),
            Family::Unitary => (None, eye(n), true, Reality::UnitaryType),
        };
        let torus = match &form {
            Some(j) => orthogonal_torus(j),
            None => (0..n - 1).map(|k| (unit(n, k, k) - unit(n, k + 1, k + 1)) * I).collect(),
        };
        let name = match family {
            Family::Orthogonal => format!("SO({n})"),
            Family::Lorentz => format!("SO+(1,{})", n - 1),
            Family::Unitary => format!("SU({n})"),
        };
        Ok(GroupContext { name, family, dim: n, form, hermitian, reality, compact, h, tol: 1e-10, torus, partner: None })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Replaces the maximal torus (commuting anti-hermitian elements of the compact form).
    pub fn with_torus(mut self, torus: Vec<CMat>) -> Self {
        self.torus = torus;
        self
    }

    pub fn h_diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.h[(i, i)].re).collect()
    }

    /// Maximal torus of the compact real form of G^C.
    pub fn compact_torus(&self) -> &[CMat] {
        &self.torus
    }

    /// The non-compact context this one was dualized from.
    pub fn noncompact_partner(&self) -> Option<&GroupContext> {
        self.partner.as_deref()
    }

    pub fn sigma(&self, x: &CMat) -> CMat {
        &self.h * x * &self.h
    }

    /// Orthonormal (Frobenius) basis of the complex Lie algebra.
    pub fn algebra_basis(&self) -> Vec<CMat> {
        let n = self.dim;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match &self.form {
            Some(j) => {
                let mut out = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        let sign = j[(a, a)] * j[(b, b)];
                        out.push((unit(n, a, b) - unit(n, b, a) * sign) * c(s, 0.0));
                    }
                }
                out
            }
            None => {
                let mut out = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        if a != b {
                            out.push(unit(n, a, b));
                        }
                    }
                }
                for k in 1..n {
                    let mut m = zeros(n, n);
                    for i in 0..k {
                        m[(i, i)] = c(1.0, 0.0);
                    }
                    m[(k, k)] = c(-(k as f64), 0.0);
                    let norm = ((k * (k + 1)) as f64).sqrt();
                    out.push(m / c(norm, 0.0));
                }
                out
            }
        }
    }

    /// Distance of `x` from the complex Lie algebra.
    pub fn algebra_residual(&self, x: &CMat) -> f64 {
        match &self.form {
            Some(j) => fro(&(x.transpose() * j + j * x)),
            None => x.trace().norm(),
        }
    }

    fn tau(&self, x: &CMat) -> CMat {
        let hi = self.hermitian.clone().try_inverse().expect("hermitian form is invertible");
        -(hi * x.adjoint() * &self.hermitian)
    }

    /// Distance of `x` from the real form of the Lie algebra.
    pub fn real_algebra_residual(&self, x: &CMat) -> f64 {
        fro(&(x - self.tau(x))) + self.algebra_residual(x)
    }

    /// Basis of the real form, orthonormal for the real part of the Frobenius product.
    pub fn real_form_basis(&self) -> Vec<CMat> {
        let mut cands = Vec::new();
        for x in self.algebra_basis() {
            for y in [x.clone(), x * I] {
                cands.push((&y + self.tau(&y)) * c(0.5, 0.0));
            }
        }
        real_orth(&cands)
    }

    /// Real bases of the fixed and anti-fixed parts of the real form under the involution.
    pub fn kp_bases(&self) -> (Vec<CMat>, Vec<CMat>) {
        let rb = self.real_form_basis();
        let k: Vec<CMat> = rb.iter().map(|x| (x + self.sigma(x)) * c(0.5, 0.0)).collect();
        let p: Vec<CMat> = rb.iter().map(|x| (x - self.sigma(x)) * c(0.5, 0.0)).collect();
        (real_orth(&k), real_orth(&p))
    }

    /// `theta(A) = J^-1 A^-t J`, whose fixed points in GL form the orthogonal group.
    pub fn theta(&self, a: &CMat) -> Option<CMat> {
        let j = self.form.as_ref()?;
        let ai = a.clone().try_inverse()?;
        Some(j.clone().try_inverse()? * ai.transpose() * j)
    }

    /// Pointwise inverse of a loop with values in the real form: `H^-1 g^* H`.
    pub fn real_inverse(&self, g: &LaurentMatrix) -> LaurentMatrix {
        let hi = self.hermitian.clone().try_inverse().expect("hermitian form is invertible");
        g.star().sandwich(&hi, &self.hermitian)
    }

    /// Largest `|A^* H A - H|` over circle samples.
    pub fn reality_residual(&self, g: &LaurentMatrix) -> f64 {
        circle_points(32, 0.25)
            .into_iter()
            .map(|l| {
                let m = g.eval(l);
                max_abs(&(m.adjoint() * &self.hermitian * &m - &self.hermitian))
            })
            .fold(0.0, f64::max)
    }

    pub fn cartan_pair(&self) -> CartanPair {
        let n = self.dim;
        let n2 = n * n;
        let mut kp = zeros(n2, n2);
        for col in 0..n2 {
            let mut e = zeros(n, n);
            e[(col % n, col / n)] = c(1.0, 0.0);
            let v = (&e + self.sigma(&e)) * c(0.5, 0.0);
            for row in 0..n2 {
                kp[(row, col)] = v[(row % n, row / n)];
            }
        }
        let pp = eye(n2) - &kp;
        let (k_basis, p_basis) = self.kp_bases();
        CartanPair { k_projector: kp, p_projector: pp, k_basis, p_basis }
    }
}

/// Projectors onto the fixed and anti-fixed parts of gl(n) under the involution (acting on
/// column-major flattened matrices) and real bases of k and p.
#[derive(Clone, Debug)]
pub struct CartanPair {
    pub k_projector: CMat,
    pub p_projector: CMat,
    pub k_basis: Vec<CMat>,
    pub p_basis: Vec<CMat>,
}

fn real_orth(mats: &[CMat]) -> Vec<CMat> {
    if mats.is_empty() {
        return Vec::new();
    }
    let (r, cc) = (mats[0].nrows(), mats[0].ncols());
    let len = 2 * r * cc;
    let mut a = DMatrix::<f64>::zeros(len, mats.len());
    for (j, m) in mats.iter().enumerate() {
        for (i, z) in m.iter().enumerate() {
            a[(2 * i, j)] = z.re;
            a[(2 * i + 1, j)] = z.im;
        }
    }
    let svd = a.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > 1e-10 * smax)
        .map(|k| {
            let col = u.column(k);
            CMat::from_fn(r, cc, |i, j| {
                let idx = i + j * r;
                c(col[2 * idx], col[2 * idx + 1])
            })
        })
        .collect()
}

/// Splits `x` into its h-commuting and h-anticommuting parts.
pub fn project_kp(x: &CMat, ctx: &GroupContext) -> Result<(CMat, CMat)> {
    let r = ctx.algebra_residual(x);
    if r > ctx.tol * fro(x).max(1.0) {
        return Err(Error::NotInAlgebra(r));
    }
    let s = ctx.sigma(x);
    Ok(((x + &s) * c(0.5, 0.0), (x - &s) * c(0.5, 0.0)))
}

/// Diagnostic residuals of group membership.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupResidual {
    pub form: f64,
    pub det: f64,
    pub reality: f64,
    /// For SO+(1, n-1): whether the time-time entry is positive.
    pub identity_component: Option<bool>,
}

impl GroupResidual {
    pub fn max(&self) -> f64 {
        self.form.max(self.det).max(self.reality)
    }
}

pub fn in_group(m: &CMat, ctx: &GroupContext) -> GroupResidual {
    let form = match &ctx.form {
        Some(j) => max_abs(&(m.transpose() * j * m - j)),
        None => 0.0,
    };
    let det = (m.determinant() - c(1.0, 0.0)).norm();
    let reality = max_abs(&(m.adjoint() * &ctx.hermitian * m - &ctx.hermitian));
    let identity_component = match ctx.family {
        Family::Lorentz if !ctx.compact => Some(m[(0, 0)].re > 0.0),
        _ => None,
    };
    GroupResidual { form, det, reality, identity_component }
}

/// The compact real form inside the same complex group, with the same involution.
pub fn compact_dual(ctx: &GroupContext) -> Result<GroupContext> {
    if ctx.compact {
        return Err(Error::AlreadyCompact);
    }
    let mut dual = ctx.clone();
    dual.name = format!("compact dual of {}", ctx.name);
    dual.hermitian = eye(ctx.dim);
    dual.reality = Reality::UnitaryType;
    dual.compact = true;
    dual.partner = Some(Box::new(ctx.clone()));
    Ok(dual)
}

/// Largest `|h g(-lambda) h^-1 - g(lambda)|` over circle samples.
pub fn check_twisted(g: &LaurentMatrix, ctx: &GroupContext) -> f64 {
    let gn = g.neg_lambda();
    circle_points(32, 0.25)
        .into_iter()
        .map(|l| max_abs(&(ctx.sigma(&gn.eval(l)) - g.eval(l))))
        .fold(0.0, f64::max)
}

pub fn dot(a: &CMat, b: &CMat) -> C64 {
    crate::linalg::frob_inner(a, b)
}
