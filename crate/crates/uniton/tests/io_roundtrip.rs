use uniton::dpw::{build_frame, solve_meromorphic_frame, Grid, Which};
use uniton::io::{parse_frame_field, parse_potential, write_frame_field, write_potential, GridSpec, PotentialFile};
use uniton::linalg::c;
use uniton::verify::{default_lambdas, frame_checks, harmonicity_residual};
use uniton::willmore::example_potential;

#[test]
fn example_potential_survives_a_roundtrip() {
    let spec = example_potential().unwrap();
    let file = PotentialFile { spec: spec.clone(), grid: Some(GridSpec { center: c(0.0, 0.0), radius: 1.0, spacing: 0.05 }), lambdas: vec![0.0, 90.0, 180.0] };
    let text = write_potential(&file);
    let back = parse_potential(&text).unwrap();
    assert_eq!(back.grid, file.grid);
    assert_eq!(back.lambdas, file.lambdas);
    assert_eq!(back.spec.ctx, spec.ctx);
    assert_eq!(back.spec.ce.as_ref().map(|ce| ce.height), Some(2));
    for z in [c(0.3, -0.4), c(-1.0, 0.2)] {
        let a = solve_meromorphic_frame(&spec, z, None).unwrap();
        let b = solve_meromorphic_frame(&back.spec, z, None).unwrap();
        assert!(a.circle_distance(&b, 16) < 1e-13);
    }
    assert_eq!(write_potential(&back), text);
}

#[test]
fn frame_field_survives_a_roundtrip() {
    let spec = example_potential().unwrap();
    let field = build_frame(&spec, &Grid::disc(c(0.0, 0.0), 0.004, 1e-3), Which::Compact).unwrap();
    let text = write_frame_field(&field, &["origin test".into()]);
    let back = parse_frame_field(&text).unwrap();
    assert_eq!(back.which, Which::Compact);
    assert_eq!(back.grid.len(), field.grid.len());
    assert!(back.minus.iter().all(Option::is_none));
    for (a, b) in field.frames.iter().zip(&back.frames) {
        assert!(a.as_ref().unwrap().circle_distance(b.as_ref().unwrap(), 16) < 1e-13);
    }
    assert!(frame_checks(&back).all_pass());
    assert!(harmonicity_residual(&back, &default_lambdas()).unwrap().all_pass());
    assert_eq!(write_frame_field(&back, &["origin test".into()]), text);
}
