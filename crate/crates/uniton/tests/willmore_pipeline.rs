use uniton::dpw::{
    build_frame, exact_meromorphic_frame, extended_solution, mc_form_check, normalized_potential_of, solve_meromorphic_frame, t_invariance_residual, BuildOptions, FitOptions, Grid,
    Which,
};
use uniton::laurent::{RatMatrix, RationalFn};
use uniton::linalg::{c, max_abs, C64};
use uniton::verify::{default_lambdas, harmonicity_residual, richardson};
use uniton::willmore::{b_hat, closed_c, compare_with, example_potential, potential_from_b1, potential_matrix, willmore_grading, willmore_xi};

fn origin() -> C64 {
    c(0.0, 0.0)
}

#[test]
fn closed_form_and_integrated_frames_agree() {
    let p = example_potential().unwrap();
    for z in [c(1.0, 0.0), c(-0.3, 0.8), c(0.0, -1.2)] {
        let exact = exact_meromorphic_frame(&p, z).expect("closed form attached").unwrap();
        let ode = solve_meromorphic_frame(&p, z, None).unwrap();
        assert!(exact.circle_distance(&ode, 32) < 1e-11, "at {z}: {}", exact.circle_distance(&ode, 32));
    }
}

#[test]
fn closed_c_has_the_declared_maurer_cartan_form() {
    let a = potential_matrix(&b_hat());
    let cc = closed_c(&a).unwrap();
    let zs = [c(0.2, 0.1), c(-0.5, 0.4), c(0.9, -0.7)];
    let report = mc_form_check(&[(0, cc)], &[(0, a)], 8, &zs, 1e-3).unwrap();
    assert!(report.residual < 1e-8, "{}", report.residual);
}

#[test]
fn normalized_potential_is_recovered_from_frames() {
    let p = example_potential().unwrap();
    let field = build_frame(&p, &Grid::square(origin(), 5, 0.05), Which::Noncompact).unwrap();
    let ce = willmore_grading().unwrap();
    let back = normalized_potential_of(&field, Some(&ce), FitOptions::default()).unwrap();
    assert_eq!(back.coefficients.len(), 1);
    let (j, a) = &back.coefficients[0];
    assert_eq!(*j, 0);
    let want = b_hat();
    for z in [c(0.1, 0.0), c(-0.2, 0.15), c(0.05, -0.2)] {
        let got = a.eval(z).unwrap();
        let b = want.eval(z).unwrap();
        let block = got.view((0, 4), (4, 4)).into_owned();
        assert!(max_abs(&(block - b)) < 1e-6, "at {z}");
    }
}

#[test]
fn perturbed_potential_moves_the_gauss_planes() {
    let grid = Grid::disc(origin(), 0.6, 0.2);
    let ok = compare_with(&example_potential().unwrap(), &grid, &[c(1.0, 0.0)], BuildOptions::default()).unwrap();
    assert!(ok.max_deviation < 1e-5);

    // Scaling keeps the block isotropic, so frames exist and only the planes move.
    let scaled = potential_from_b1(&b_hat().scale(c(1.2, 0.0))).unwrap();
    let cmp = compare_with(&scaled, &grid, &[c(1.0, 0.0)], BuildOptions::default()).unwrap();
    assert!(cmp.skipped.is_empty());
    assert!(cmp.max_deviation > 1e-2, "{}", cmp.max_deviation);

    // A non-isotropic block leaves grade one and its frames overflow the degree bound.
    let mut b = b_hat();
    b.set(0, 2, RationalFn::poly(vec![c(0.0, -0.5), c(0.3, 0.0)]));
    let broken = compare_with(&potential_from_b1(&b).unwrap(), &grid, &[c(1.0, 0.0)], BuildOptions::default()).unwrap();
    assert!(broken.skipped.len() + 1 >= grid.len());
    assert!(broken.skipped.iter().all(|(_, why)| why.contains("degree bound")), "{:?}", broken.skipped[0]);
}

#[test]
fn corrupted_frame_is_located_by_the_flatness_check() {
    let p = example_potential().unwrap();
    let mut field = build_frame(&p, &Grid::disc(c(0.3, 0.2), 0.008, 1e-3), Which::Noncompact).unwrap();
    let lambdas = default_lambdas();
    assert!(harmonicity_residual(&field, &lambdas).unwrap().all_pass());

    let k = field.grid.lookup(2, -1).unwrap();
    let target = field.grid.points[k].z;
    let f = field.frames[k].as_mut().unwrap();
    let mut m = f.coeff(0);
    m[(1, 2)] += c(1e-4, 0.0);
    f.set(0, m);

    let report = harmonicity_residual(&field, &lambdas).unwrap();
    let flat = report.get("harmonic_flatness").unwrap();
    assert!(!flat.pass);
    let at = flat.location.unwrap();
    let d = (at - target) / field.grid.spacing;
    assert!(d.re.abs().max(d.im.abs()) <= 2.0 + 1e-9, "worst point {at} far from {target}");
}

#[test]
fn example_decays_at_second_order() {
    let p = example_potential().unwrap();
    let field = build_frame(&p, &Grid::disc(c(-0.4, 0.5), 0.006, 1e-3), Which::Compact).unwrap();
    let r = richardson(&field, &default_lambdas()).unwrap();
    assert!(r.confirms_order_two(1e-10), "{r:?}");
    assert!((r.flatness_ratio - 4.0).abs() < 0.5);
}

#[test]
fn extended_solution_is_invariant_under_the_twist() {
    let p = example_potential().unwrap();
    let field = build_frame(&p, &Grid::disc(c(0.5, -0.5), 0.1, 0.05), Which::Noncompact).unwrap();
    let ext = extended_solution(&field, &willmore_xi()).unwrap();
    for phi in ext.phis.iter().flatten() {
        assert!(t_invariance_residual(phi) < 1e-9);
    }
}

#[test]
fn grading_accepts_the_example_and_rejects_a_non_isotropic_block() {
    let report = uniton::dpw::validate_potential(&example_potential().unwrap()).unwrap();
    assert!(report.grading.iter().all(|g| *g < 1e-12));
    let b = RatMatrix::from_fn(4, 4, |i, j| if i == j { RationalFn::constant(c(1.0, 0.0)) } else { RationalFn::zero() });
    let err = uniton::dpw::validate_potential(&potential_from_b1(&b).unwrap()).unwrap_err();
    assert!(matches!(err, uniton::Error::GradingViolation { index: 0, .. }), "{err}");
}
