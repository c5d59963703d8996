use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("uniton-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn uniton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniton")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_potential_exits_2_with_location() {
    let o = uniton(&["build", data("bad.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4, column 9"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_flags_exit_2() {
    assert_eq!(uniton(&["verify", "/nonexistent/frames.txt"]).status.code(), Some(2));
    assert_eq!(uniton(&["build", data("zero.txt").to_str().unwrap(), "--grid-center", "1;2"]).status.code(), Some(2));
    assert_eq!(uniton(&["build", data("zero.txt").to_str().unwrap(), "--which", "both"]).status.code(), Some(2));
    assert_eq!(uniton(&["factor"]).status.code(), Some(2));
    assert_eq!(uniton(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn zero_potential_builds_constant_frames() {
    let dir = scratch("zero");
    let o = uniton(&["build", data("zero.txt").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("all_pass=true"));
    assert!(out.contains("compact.harmonic_flatness.residual=0.00000000000000e0"));
    assert!(out.contains("tol.finite_difference=5.00000000000000e-6"));
    let frames = fs::read_to_string(dir.join("frames-compact.txt")).unwrap();
    assert_eq!(frames.matches("\nloop 0 0\n").count(), 49);
    let v = uniton(&["verify", dir.join("frames-compact.txt").to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn willmore_patch_builds_both_real_forms() {
    let dir = scratch("patch");
    let potential = data("willmore.txt");
    let args = ["build", potential.to_str().unwrap(), "--which", "both", "--grid-center", "0.3,0.2", "--grid-radius", "0.004", "--grid-spacing", "0.001", "--out", dir.to_str().unwrap()];
    let o = uniton(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("duality_minus_factor.pass=true"));
    assert!(out.contains("note: noncompact: uniton_number=2"));
    assert!(out.contains("noncompact.uhlenbeck_z.pass=true"));

    let first = fs::read(dir.join("frames-noncompact.txt")).unwrap();
    let again = uniton(&args);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(first, fs::read(dir.join("frames-noncompact.txt")).unwrap(), "output is not deterministic");

    let v = uniton(&["verify", dir.join("frames-noncompact.txt").to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).contains("harmonic_flatness.pass=true"));
}

#[test]
fn corrupted_frame_fails_verification() {
    let dir = scratch("corrupt");
    let o = uniton(&["build", data("willmore.txt").to_str().unwrap(), "--grid-center", "0.3,0.2", "--grid-radius", "0.004", "--grid-spacing", "0.001", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.join("frames-noncompact.txt");
    let text = fs::read_to_string(&path).unwrap();
    // Perturb one entry of the frame at the patch center.
    let marker = "point 0 0\n";
    let at = text.find(marker).unwrap();
    let row = at + text[at..].find("coeff 0\nrow ").unwrap() + "coeff 0\nrow ".len();
    let end = row + text[row..].find(' ').unwrap();
    let value: f64 = text[row..end].parse().unwrap();
    let corrupted = format!("{}{:.14e}{}", &text[..row], value + 1e-4, &text[end..]);
    fs::write(&path, corrupted).unwrap();
    let v = uniton(&["verify", path.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1), "{}", stdout(&v));
    assert!(stdout(&v).contains("all_pass=false"));
}

#[test]
fn factor_loop_file() {
    let o = uniton(&["factor", data("loop_su2.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("# factor minus\nfamily su"));
    let dir = scratch("factor");
    let o = uniton(&["factor", data("loop_su2.txt").to_str().unwrap(), "--mode", "iwasawa", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("reality.pass=true"));
    assert!(dir.join("real.txt").exists() && dir.join("plus.txt").exists());
}

#[test]
fn randomized_roundtrips_are_seeded() {
    let a = uniton(&["factor", "--random", "lorentz8", "--mode", "iwasawa", "--seed", "11", "--count", "4"]);
    let b = uniton(&["factor", "--random", "lorentz8", "--mode", "iwasawa", "--seed", "11", "--count", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = uniton(&["factor", "--random", "su4", "--seed", "2", "--count", "4"]);
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
}

#[test]
fn canonical_table_lists_every_subset() {
    let o = uniton(&["canonical", "su", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<String> = stdout(&o).lines().filter(|l| !l.starts_with('#')).map(String::from).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.contains(&"{0,1,2} 3 3,3,2,1".to_string()), "{rows:?}");
}

#[test]
fn willmore_demo_default_run() {
    let dir = scratch("demo");
    let o = uniton(&["willmore-demo", "--out", dir.to_str().unwrap(), "--obj"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("max_plane_deviation < 1e-5"));
    assert!(out.contains("compared_points=1257 skipped_points=0"));
    let csv = fs::read_to_string(dir.join("surface.csv")).unwrap();
    assert!(csv.starts_with("z_re,z_im,lambda_arg,x1,x2,x3,x4,x5,x6,x7\n"));
    assert_eq!(csv.lines().count(), 1 + 1257 * 3);
    assert!(fs::read_to_string(dir.join("surface.obj")).unwrap().starts_with("# "));
    let pot = uniton(&["build", dir.join("potential.txt").to_str().unwrap(), "--grid-radius", "0.003", "--grid-spacing", "0.001"]);
    assert_eq!(pot.status.code(), Some(0), "{}", stdout(&pot));
}

#[test]
fn tight_tolerance_reports_failure() {
    let o = uniton(&["willmore-demo", "--grid-radius", "0.2", "--tol", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("tol.plane_deviation=1.00000000000000e-15"));
    assert!(stdout(&o).contains("max_plane_deviation = "));
}
