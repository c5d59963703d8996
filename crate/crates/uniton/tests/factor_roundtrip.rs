mod common;

use uniton::factor::{birkhoff, default_trunc, iwasawa, prq_split, reconstruction_residual};
use uniton::laurent::LaurentMatrix;
use uniton::liectx::{check_twisted, compact_dual, GroupContext};
use uniton::linalg::{c, expm, max_abs, CMat};
use uniton::roots::{cartan_data, enumerate_canonical};
use uniton::sample::LoopSampler;

use common::{expected, su4, willmore_ctx};

fn check_iwasawa(ctx: &GroupContext, sampler: &mut LoopSampler) {
    let u = sampler.real_form_loop(0.5);
    let p = sampler.plus_loop(0.5, 2);
    let g = &u * &p;
    let r = iwasawa(&g, ctx, default_trunc(&g), 1e-9).unwrap();
    assert!(reconstruction_residual(&r.unitary, &r.plus, &g) < 1e-9);
    let (ue, pe) = expected(ctx, &u, &p);
    assert!(r.unitary.circle_distance(&ue, 64) < 1e-9, "unitary {}", r.unitary.circle_distance(&ue, 64));
    assert!(r.plus.circle_distance(&pe, 64) < 1e-9);
    assert!(check_twisted(&r.unitary, ctx) < 1e-9 && check_twisted(&r.plus, ctx) < 1e-9);
    assert!(ctx.reality_residual(&r.unitary) < 1e-9);
    let g2 = &r.unitary * &r.plus;
    let r2 = iwasawa(&g2, ctx, default_trunc(&g2), 1e-9).unwrap();
    assert!(r2.unitary.circle_distance(&r.unitary, 64) < 1e-9);
}

#[test]
fn iwasawa_roundtrips() {
    let lor = willmore_ctx();
    let dual = compact_dual(&lor).unwrap();
    let so8 = GroupContext::orthogonal(8, &[-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    for ctx in [lor, dual, so8, su4()] {
        let mut s = LoopSampler::new(&ctx, 11).unwrap();
        for _ in 0..5 {
            check_iwasawa(&ctx, &mut s);
        }
    }
}

#[test]
fn birkhoff_roundtrips() {
    for ctx in [willmore_ctx(), su4()] {
        let mut s = LoopSampler::new(&ctx, 3).unwrap();
        for _ in 0..5 {
            let m = s.minus_loop(0.6, 2);
            let p = s.plus_loop(0.6, 2);
            let g = &m * &p;
            let r = birkhoff(&g, &ctx, default_trunc(&g), 1e-9).unwrap();
            assert!(r.minus.circle_distance(&m, 64) < 1e-9);
            assert!(r.plus.circle_distance(&p, 64) < 1e-9);
            assert_eq!(r.minus.coeff(0), CMat::identity(ctx.dim, ctx.dim));
        }
    }
}

#[test]
fn birkhoff_ignores_the_real_form() {
    let ctx = willmore_ctx();
    let dual = compact_dual(&ctx).unwrap();
    let mut s = LoopSampler::new(&ctx, 5).unwrap();
    let g = &s.minus_loop(0.5, 2) * &s.plus_loop(0.5, 2);
    let a = birkhoff(&g, &ctx, 8, 1e-9).unwrap();
    let b = birkhoff(&g, &dual, 8, 1e-9).unwrap();
    assert_eq!(a.minus, b.minus);
    assert_eq!(a.plus, b.plus);
}

#[test]
fn noncompact_constant_matches_pointwise_oracle() {
    let ctx = willmore_ctx();
    let (_, p) = ctx.kp_bases();
    let b = p.iter().enumerate().fold(CMat::zeros(8, 8), |acc, (i, x)| acc + x * c(0.05 * (i as f64 + 1.0).sin(), 0.0));
    let g = LaurentMatrix::constant(expm(&b));
    let r = iwasawa(&g, &ctx, 4, 1e-10).unwrap();
    let (ue, pe) = expected(&ctx, &LaurentMatrix::identity(8), &g);
    assert!(r.unitary.circle_distance(&ue, 16) < 1e-10);
    assert!(r.plus.circle_distance(&pe, 16) < 1e-10);
}

#[test]
fn upper_triangular_constant_is_already_split() {
    let ctx = su4();
    let mut rmat = CMat::identity(4, 4);
    rmat[(0, 0)] = c(2.0, 0.0);
    rmat[(1, 1)] = c(0.5, 0.0);
    rmat[(0, 3)] = c(0.3, 0.1);
    let g = LaurentMatrix::constant(rmat.clone());
    let r = iwasawa(&g, &ctx, 4, 1e-10).unwrap();
    assert!(r.unitary.circle_distance(&LaurentMatrix::identity(4), 16) < 1e-12);
    assert!(max_abs(&(r.plus.coeff(0) - rmat)) < 1e-12);
}

#[test]
fn prq_roundtrips_on_every_so8_canonical_element() {
    let ctx = GroupContext::orthogonal(8, &[1.0; 8]).unwrap();
    let cd = cartan_data(&ctx).unwrap();
    let mut s = LoopSampler::with_nu(&ctx, &CMat::zeros(8, 8), 9).unwrap();
    for ce in enumerate_canonical(&cd).unwrap() {
        let rp = expm(&s.graded_element(&ce, |j| j >= 0, 0.4));
        let q = expm(&s.graded_element(&ce, |j| j < 0, 0.4));
        let (r2, q2) = prq_split(&(&rp * &q), &ce).unwrap();
        assert!(max_abs(&(r2 - &rp)) < 1e-10 && max_abs(&(q2 - &q)) < 1e-10);
    }
}
