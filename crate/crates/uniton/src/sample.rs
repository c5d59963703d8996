//! Seeded random twisted loops, used by the roundtrip tests and `factor --random`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::laurent::{exp_nilpotent, LaurentMatrix};
use crate::liectx::GroupContext;
use crate::linalg::{c, expm, zeros, CMat};
use crate::roots::{cartan_data, exp_pi_check, gamma_xi_loop, grading, CanonicalElement, GammaLoop};

/// A torus element `nu` of the real form with `Ad exp(pi nu) = Ad h`, smallest first.
///
/// Searches coefficient vectors in `{0, 1/2, 1}` over the context's torus basis.
pub fn twisting_element(ctx: &GroupContext) -> Option<CMat> {
    let torus = ctx.compact_torus();
    let l = torus.len();
    let n = ctx.dim;
    let mut best: Option<(usize, CMat)> = None;
    for code in 0..3usize.pow(l as u32) {
        let mut x = zeros(n, n);
        let mut weight = 0;
        let mut rest = code;
        for t in torus {
            let w = rest % 3;
            rest /= 3;
            weight += w;
            x += t * c(w as f64 / 2.0, 0.0);
        }
        if best.as_ref().is_some_and(|(b, _)| *b <= weight) {
            continue;
        }
        if ctx.real_algebra_residual(&x) > 1e-12 || exp_pi_check(&x, &ctx.h).modulo_center > 1e-12 {
            continue;
        }
        if gamma_xi_loop(&x).is_err() {
            continue;
        }
        best = Some((weight, x));
    }
    best.map(|(_, x)| x)
}

/// Random generator of twisted loops in the complex group, its real form and the two halves.
pub struct LoopSampler {
    pub ctx: GroupContext,
    pub nu: CanonicalElement,
    gamma: GammaLoop,
    real_basis: Vec<CMat>,
    k_basis: Vec<CMat>,
    rng: ChaCha8Rng,
}

impl LoopSampler {
    pub fn new(ctx: &GroupContext, seed: u64) -> Result<Self> {
        let nu = twisting_element(ctx).ok_or_else(|| Error::Invalid(format!("no twisting torus element for {}", ctx.name)))?;
        Self::with_nu(ctx, &nu, seed)
    }

    pub fn with_nu(ctx: &GroupContext, nu: &CMat, seed: u64) -> Result<Self> {
        let cd = cartan_data(ctx)?;
        let nu = grading(nu, &cd)?;
        let gamma = gamma_xi_loop(&nu.xi)?;
        let (k_basis, _) = ctx.kp_bases();
        Ok(LoopSampler { ctx: ctx.clone(), nu, gamma, real_basis: ctx.real_form_basis(), k_basis, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn real_combination(&mut self, basis: &[CMat], scale: f64) -> CMat {
        let n = self.ctx.dim;
        let mut x = zeros(n, n);
        for b in basis {
            x += b * c(scale * self.rng.gen_range(-1.0..1.0), 0.0);
        }
        x
    }

    fn complex_combination(&mut self, basis: &[CMat], scale: f64) -> CMat {
        let n = self.ctx.dim;
        let mut x = zeros(n, n);
        for b in basis {
            x += b * c(scale * self.rng.gen_range(-1.0..1.0), scale * self.rng.gen_range(-1.0..1.0));
        }
        x
    }

    /// Random element of the real form's Lie algebra.
    pub fn real_algebra_element(&mut self, scale: f64) -> CMat {
        let basis = self.real_basis.clone();
        self.real_combination(&basis, scale)
    }

    /// Random complex element of the grades selected by `pred`.
    pub fn graded_element<F: Fn(i32) -> bool>(&mut self, ce: &CanonicalElement, pred: F, scale: f64) -> CMat {
        let basis = ce.grades_where(pred);
        self.complex_combination(&basis, scale)
    }

    /// `gamma exp(X) gamma^-1 exp(Y)` with `X` in the real form and `Y` in its fixed algebra.
    pub fn real_form_loop(&mut self, scale: f64) -> LaurentMatrix {
        let x = self.real_algebra_element(scale);
        let kb = self.k_basis.clone();
        let y = self.real_combination(&kb, scale);
        let conj = &(&self.gamma.lp * &LaurentMatrix::constant(expm(&x))) * &self.gamma.inverse();
        (&conj * &LaurentMatrix::constant(expm(&y))).trimmed(1e-15)
    }

    /// `c0 exp(sum_{j=1..degree} lambda^j M_j)` with `M_j` in grade `-j` of `nu` and `c0` in
    /// the complexified fixed group.
    pub fn plus_loop(&mut self, scale: f64, degree: i32) -> LaurentMatrix {
        let n = self.ctx.dim;
        let mut x = LaurentMatrix::zero(n);
        let nu = self.nu.clone();
        for j in 1..=degree {
            x.set(j, self.graded_element(&nu, |k| k == -j, scale));
        }
        let kb = self.k_basis.clone();
        let c0 = expm(&self.complex_combination(&kb, scale));
        let e = exp_nilpotent(&x).expect("graded loops are nilpotent");
        (&LaurentMatrix::constant(c0) * &e).trimmed(1e-15)
    }

    /// `exp(sum_{j=1..degree} lambda^-j N_j)` with `N_j` in grade `j` of `nu`.
    pub fn minus_loop(&mut self, scale: f64, degree: i32) -> LaurentMatrix {
        let n = self.ctx.dim;
        let mut x = LaurentMatrix::zero(n);
        let nu = self.nu.clone();
        for j in 1..=degree {
            x.set(-j, self.graded_element(&nu, |k| k == j, scale));
        }
        exp_nilpotent(&x).expect("graded loops are nilpotent").trimmed(1e-15)
    }
}
