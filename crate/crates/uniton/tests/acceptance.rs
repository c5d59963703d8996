//! End-to-end acceptance run: one pass/fail line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uniton::dpw::{build_frame, cartan_embed, extended_solution, solve_meromorphic_frame, FrameField, Grid, Mode, PotentialSpec, Which};
use uniton::factor::{birkhoff, default_trunc, iwasawa_compact, iwasawa_noncompact, prq_split, reconstruction_residual};
use uniton::laurent::{exp_nilpotent, LaurentMatrix, RatMatrix, RationalFn};
use uniton::liectx::{compact_dual, GroupContext};
use uniton::linalg::{bracket, c, expm, eye, herm_eig, max_abs, vec_of, zeros, CMat, I};
use uniton::roots::{bracket_law_residual, cartan_data, enumerate_canonical, grading, CanonicalElement, CartanData};
use uniton::factor::pr_cap_p_residual;
use uniton::sample::LoopSampler;
use uniton::verify::{default_lambdas, extended_solution_laws, harmonicity_residual, richardson, uniton_number};
use uniton::willmore::{compare_pipeline_vs_oracle, example_potential, willmore_context, willmore_grading, willmore_xi, Comparison};
use uniton::Result;

use common::{expected, su4};

const ROUNDTRIPS: usize = 200;

/// A potential together with its frame fields on a small patch around the basepoint.
struct Patch {
    label: String,
    spec: PotentialSpec,
    compact: FrameField,
    noncompact: FrameField,
}

struct Fixtures {
    demo: Comparison,
    patches: Vec<Patch>,
}

/// `A_0 + z A_1` with both coefficients random in grade 1 of the Willmore element.
fn random_potential(seed: u64) -> Result<PotentialSpec> {
    let ctx = willmore_context();
    let ce = willmore_grading()?;
    let mut sampler = LoopSampler::with_nu(&ctx, &zeros(8, 8), seed)?;
    let a0 = sampler.graded_element(&ce, |j| j == 1, 0.5);
    let a1 = sampler.graded_element(&ce, |j| j == 1, 0.5);
    let a = RatMatrix::from_fn(8, 8, |i, j| RationalFn::poly(vec![a0[(i, j)], a1[(i, j)]]));
    Ok(PotentialSpec::new(ctx, Some(ce), c(0.0, 0.0), vec![(0, a)], Mode::Normalized))
}

fn patch(label: String, spec: PotentialSpec) -> Result<Patch> {
    let grid = Grid::disc(spec.basepoint, 0.004, 1e-3);
    let compact = build_frame(&spec, &grid, Which::Compact)?;
    let noncompact = build_frame(&spec, &grid, Which::Noncompact)?;
    Ok(Patch { label, spec, compact, noncompact })
}

fn fixtures() -> Result<Fixtures> {
    let demo = compare_pipeline_vs_oracle(&Grid::disc(c(0.0, 0.0), 1.0, 0.05), &[c(1.0, 0.0), I, c(-1.0, 0.0)])?;
    let mut patches = vec![patch("example".into(), example_potential()?)?];
    for k in 0..5 {
        patches.push(patch(format!("random{k}"), random_potential(20 + k)?)?);
    }
    Ok(Fixtures { demo, patches })
}

fn fields(fx: &Fixtures) -> impl Iterator<Item = (String, &FrameField)> {
    let demo = std::iter::once(("demo".to_string(), &fx.demo.field));
    demo.chain(fx.patches.iter().flat_map(|p| [(format!("{}/compact", p.label), &p.compact), (format!("{}/noncompact", p.label), &p.noncompact)]))
}

type Verdict = (bool, String);
type Criterion<'a> = Box<dyn Fn() -> Result<Verdict> + 'a>;

fn willmore_planes(fx: &Fixtures) -> Result<Verdict> {
    let d = &fx.demo;
    let pass = d.max_deviation < 1e-5 && d.compared > 0;
    Ok((pass, format!("max_deviation={:.3e} compared={} skipped={}", d.max_deviation, d.compared, d.skipped.len())))
}

fn uniton_number_is_two(fx: &Fixtures) -> Result<Verdict> {
    let field = &fx.demo.field;
    let r = uniton_number(&extended_solution(field, &willmore_xi())?, &field.ctx)?;
    Ok((r == 2, format!("uniton_number={r}")))
}

fn duality(fx: &Fixtures) -> Result<Verdict> {
    let lambdas = default_lambdas();
    let mut pass = true;
    let (mut gap, mut harm) = (0.0f64, 0.0f64);
    let mut ratios = Vec::new();
    for p in &fx.patches {
        for (a, b) in p.compact.minus.iter().zip(&p.noncompact.minus) {
            match (a, b) {
                (Some(a), Some(b)) => gap = gap.max(a.circle_distance(b, 16)),
                _ => pass = false,
            }
        }
        for f in [&p.compact, &p.noncompact] {
            let r = harmonicity_residual(f, &lambdas)?;
            pass &= r.all_pass();
            harm = r.checks.values().map(|ch| ch.residual).fold(harm, f64::max);
            let rich = richardson(f, &lambdas)?;
            pass &= rich.confirms_order_two(1e-9);
            ratios.push(rich.flatness_ratio);
        }
    }
    pass &= gap < 1e-10;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    Ok((pass, format!("minus_gap={gap:.3e} harmonicity={harm:.3e} flatness_ratio=[{lo:.2},{hi:.2}] potentials={}", fx.patches.len())))
}

fn roundtrips() -> Result<Verdict> {
    let lorentz = willmore_context();
    let dual = compact_dual(&lorentz)?;
    let so8 = GroupContext::orthogonal(8, &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0])?;
    let su4 = su4();
    let lorentz4 = GroupContext::lorentz(4, &[-1.0, -1.0, 1.0, 1.0])?;
    let mut worst = [0.0f64; 4];

    let birkhoff_ctxs = [&lorentz, &dual, &so8, &su4];
    let mut samplers: Vec<LoopSampler> = birkhoff_ctxs.iter().map(|ctx| LoopSampler::new(ctx, 101)).collect::<Result<_>>()?;
    for k in 0..ROUNDTRIPS {
        let i = k % birkhoff_ctxs.len();
        let m = samplers[i].minus_loop(0.6, 2);
        let p = samplers[i].plus_loop(0.6, 2);
        let g = &m * &p;
        let r = birkhoff(&g, birkhoff_ctxs[i], default_trunc(&g), 1e-9)?;
        let err = reconstruction_residual(&r.minus, &r.plus, &g).max(r.minus.circle_distance(&m, 64)).max(r.plus.circle_distance(&p, 64));
        worst[0] = worst[0].max(err);
    }

    let mut iw = |slot: usize, ctxs: &[&GroupContext], seed: u64| -> Result<()> {
        let mut samplers: Vec<LoopSampler> = ctxs.iter().map(|ctx| LoopSampler::new(ctx, seed)).collect::<Result<_>>()?;
        for k in 0..ROUNDTRIPS {
            let i = k % ctxs.len();
            let u = samplers[i].real_form_loop(0.5);
            let p = samplers[i].plus_loop(0.5, 2);
            let g = &u * &p;
            let split = if ctxs[i].compact { iwasawa_compact } else { iwasawa_noncompact };
            let r = split(&g, ctxs[i], default_trunc(&g), 1e-9)?;
            let (ue, pe) = expected(ctxs[i], &u, &p);
            let err = reconstruction_residual(&r.unitary, &r.plus, &g).max(r.unitary.circle_distance(&ue, 64)).max(r.plus.circle_distance(&pe, 64));
            worst[slot] = worst[slot].max(err);
        }
        Ok(())
    };
    iw(1, &[&dual, &so8, &su4], 202)?;
    iw(2, &[&lorentz, &lorentz4], 303)?;

    let mut elements: Vec<(GroupContext, CanonicalElement)> = Vec::new();
    for ctx in [so8.clone(), su4.clone()] {
        for ce in enumerate_canonical(&cartan_data(&ctx)?)? {
            elements.push((ctx.clone(), ce));
        }
    }
    let mut samplers: Vec<LoopSampler> = elements.iter().map(|(ctx, _)| LoopSampler::with_nu(ctx, &zeros(ctx.dim, ctx.dim), 404)).collect::<Result<_>>()?;
    for k in 0..ROUNDTRIPS {
        let i = k % elements.len();
        let ce = &elements[i].1;
        let rp = expm(&samplers[i].graded_element(ce, |j| j >= 0, 0.4));
        let q = expm(&samplers[i].graded_element(ce, |j| j < 0, 0.4));
        let v = &rp * &q;
        let (r2, q2) = prq_split(&v, ce)?;
        let err = max_abs(&(&r2 * &q2 - &v)).max(max_abs(&(r2 - &rp))).max(max_abs(&(q2 - &q)));
        worst[3] = worst[3].max(err);
    }

    let pass = worst.iter().all(|w| *w < 1e-9);
    Ok((pass, format!("birkhoff={:.3e} iwasawa_compact={:.3e} iwasawa_noncompact={:.3e} prq={:.3e} count={ROUNDTRIPS}", worst[0], worst[1], worst[2], worst[3])))
}

/// `Ad(p)` on flattened `n x n` matrices.
fn ad_matrix(p: &CMat) -> CMat {
    let n = p.nrows();
    let pi = p.clone().try_inverse().expect("invertible");
    let mut m = zeros(n * n, n * n);
    for k in 0..n * n {
        let mut e = zeros(n, n);
        e[(k % n, k / n)] = c(1.0, 0.0);
        let v = vec_of(&(p * e * &pi));
        m.set_column(k, &v);
    }
    m
}

/// Orthogonal projector onto the intersection of the ranges of two orthogonal projectors.
fn intersection(a: &CMat, b: &CMat) -> CMat {
    let (vals, vecs) = herm_eig(&(a * b * a));
    let n = a.nrows();
    let mut out = zeros(n, n);
    for (k, v) in vals.iter().enumerate() {
        if *v > 1.0 - 1e-8 {
            let col = vecs.column(k);
            out += col * col.adjoint();
        }
    }
    out
}

fn grading_laws() -> Result<Verdict> {
    let (mut brk, mut brk_oracle, mut lemma, mut prp, mut prp_oracle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for ctx in [GroupContext::orthogonal(8, &[1.0; 8])?, GroupContext::unitary(4, &[1.0; 4])?] {
        let cd = cartan_data(&ctx)?;
        for ce in enumerate_canonical(&cd)? {
            count += 1;
            brk = brk.max(bracket_law_residual(&ce));
            for (i, xs) in &ce.grading {
                for (j, ys) in &ce.grading {
                    for x in xs {
                        for y in ys {
                            // [xi, [x, y]] = i (i + j) [x, y]
                            let z = bracket(x, y);
                            brk_oracle = brk_oracle.max(max_abs(&(bracket(&ce.xi, &z) - &z * c(0.0, (i + j) as f64))));
                        }
                    }
                }
            }
            lemma = lemma.max(lemma_identities(&cd, &ce)?);

            let mut with_h = ctx.clone();
            // exp(pi xi) squares to a central scalar; rescale it to an involution.
            let p = expm(&(&ce.xi * c(std::f64::consts::PI, 0.0)));
            let square = (&p * &p)[(0, 0)];
            with_h.h = p / square.sqrt();
            prp = prp.max(pr_cap_p_residual(&ce, &with_h));
            let n2 = ctx.dim * ctx.dim;
            let minus_one = (eye(n2) - ad_matrix(&with_h.h)) * c(0.5, 0.0);
            let cap = intersection(&ce.projector(|j| j >= 0), &minus_one);
            prp_oracle = prp_oracle.max(max_abs(&(cap - ce.projector(|j| j > 0 && j % 2 == 1))));
        }
    }
    let pass = [brk, brk_oracle, lemma, prp, prp_oracle].iter().all(|r| *r < 1e-10);
    Ok((pass, format!("bracket={brk:.3e} bracket_oracle={brk_oracle:.3e} reduction={lemma:.3e} pr_cap_p={prp:.3e} pr_cap_p_oracle={prp_oracle:.3e} elements={count}")))
}

/// Integer multiples of the dual-basis elements of `ce` reduce to `ce` and share its grade-0
/// and positive parts.
fn lemma_identities(cd: &CartanData, ce: &CanonicalElement) -> Result<f64> {
    let mut worst = 0.0f64;
    for pattern in [[2, 2, 2, 2], [1, 3, 2, 5], [4, 1, 1, 3]] {
        let n = ce.xi.nrows();
        let xi = ce.index_set.iter().enumerate().fold(zeros(n, n), |acc, (k, &s)| acc + &cd.dual[s] * c(pattern[k % 4] as f64, 0.0));
        let big = grading(&xi, cd)?;
        worst = worst.max(max_abs(&(cd.canonical_reduction(&xi)? - &ce.xi)));
        worst = worst.max(max_abs(&(big.projector(|j| j == 0) - ce.projector(|j| j == 0))));
        worst = worst.max(max_abs(&(big.projector(|j| j > 0) - ce.projector(|j| j > 0))));
    }
    Ok(worst)
}

fn cartan_involution(fx: &Fixtures) -> Result<Verdict> {
    let (mut sq, mut exact, mut count) = (0.0f64, true, 0);
    for (_, f) in fields(fx) {
        let cartan = cartan_embed(f, &f.ctx.h);
        sq = sq.max(cartan.square_residual);
        exact &= cartan.basepoint_is_h == Some(true);
        count += 1;
    }
    Ok((sq < 1e-9 && exact, format!("square={sq:.3e} basepoint_exact={exact} fields={count}")))
}

/// Largest spread between eigenvalues of `xi` in the defining representation.
fn spread(xi: &CMat) -> i32 {
    let (vals, _) = herm_eig(&(xi * c(0.0, -1.0)));
    (vals[vals.len() - 1] - vals[0]).round() as i32
}

fn degree_bound(fx: &Fixtures) -> Result<Verdict> {
    let mut excess = 0.0f64;
    let mut count = 0;
    let mut check = |g: &LaurentMatrix, r: i32| {
        excess = excess.max(g.max_outside(-r, 0));
        count += 1;
    };
    // The Willmore element has height 2.
    for (_, f) in fields(fx) {
        f.minus.iter().flatten().for_each(|g| check(g, 2));
    }

    // Grade-one potentials for every canonical element, with constant ones against
    // exp(z A / lambda). As matrices the bound is the eigenvalue spread of xi, which exceeds
    // the height when xi has eigenvalues -1, 0, 1 but height 1.
    let mut agree = 0.0f64;
    let mut wider = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for ctx in [GroupContext::orthogonal(8, &[1.0; 8])?, GroupContext::unitary(4, &[1.0; 4])?] {
        for ce in enumerate_canonical(&cartan_data(&ctx)?)? {
            let n = ctx.dim;
            let mut sampler = LoopSampler::with_nu(&ctx, &zeros(n, n), rng.gen())?;
            let a0 = sampler.graded_element(&ce, |j| j == 1, 0.5);
            let a1 = sampler.graded_element(&ce, |j| j == 1, 0.5);
            let bound = ce.height.max(spread(&ce.xi));
            wider += usize::from(bound > ce.height);
            let linear = RatMatrix::from_fn(n, n, |i, j| RationalFn::poly(vec![a0[(i, j)], a1[(i, j)]]));
            let spec = PotentialSpec::new(ctx.clone(), Some(ce.clone()), c(0.0, 0.0), vec![(0, linear)], Mode::Normalized);
            let constant = PotentialSpec::new(ctx.clone(), Some(ce.clone()), c(0.0, 0.0), vec![(0, RatMatrix::constant(&a0))], Mode::Normalized);
            for z in [c(0.4, -0.3), c(-0.8, 0.5), c(1.1, 0.9)] {
                check(&solve_meromorphic_frame(&spec, z, None)?, bound);
                let ode = solve_meromorphic_frame(&constant, z, None)?;
                let exact = exp_nilpotent(&LaurentMatrix::monomial(-1, &a0 * z))?;
                check(&exact, bound);
                agree = agree.max(ode.circle_distance(&exact, 32));
            }
        }
    }
    let pass = excess < 1e-11 && agree < 1e-9;
    Ok((pass, format!("excess={excess:.3e} ode_vs_exp={agree:.3e} loops={count} spread_above_height={wider}")))
}

fn extended_laws(fx: &Fixtures) -> Result<Verdict> {
    let lambdas = default_lambdas();
    let (mut at_one, mut z, mut zbar) = (0.0f64, 0.0f64, 0.0f64);
    for p in &fx.patches {
        let xi = p.spec.ce.as_ref().map_or_else(willmore_xi, |ce| ce.xi.clone());
        for f in [&p.compact, &p.noncompact] {
            let ext = extended_solution(f, &xi)?;
            let laws = extended_solution_laws(f, &ext, &cartan_embed(f, &f.ctx.h), &lambdas)?;
            let get = |name: &str| laws.get(name).map_or(f64::INFINITY, |ch| ch.residual);
            at_one = at_one.max(get("phi_at_one"));
            z = z.max(get("uhlenbeck_z"));
            zbar = zbar.max(get("uhlenbeck_zbar"));
        }
    }
    let pass = at_one == 0.0 && z < 5e-6 && zbar < 5e-6;
    Ok((pass, format!("phi_at_one={at_one:.3e} uhlenbeck_z={z:.3e} uhlenbeck_zbar={zbar:.3e}")))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let fx = match fixtures() {
        Ok(fx) => fx,
        Err(e) => {
            println!("FAIL fixtures: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("fixtures built in {:.1}s", start.elapsed().as_secs_f64());

    let criteria: [(&str, Criterion); 8] = [
        ("willmore_gauss_planes", Box::new(|| willmore_planes(&fx))),
        ("uniton_number", Box::new(|| uniton_number_is_two(&fx))),
        ("duality", Box::new(|| duality(&fx))),
        ("factorization_roundtrips", Box::new(roundtrips)),
        ("grading_laws", Box::new(grading_laws)),
        ("cartan_involution", Box::new(|| cartan_involution(&fx))),
        ("degree_bound", Box::new(|| degree_bound(&fx))),
        ("extended_solution_laws", Box::new(|| extended_laws(&fx))),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!pass);
        println!("{} criterion {} {name}: {detail} ({:.1}s)", if pass { "PASS" } else { "FAIL" }, k + 1, t.elapsed().as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
