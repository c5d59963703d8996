use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;

use uniton::dpw::{build_frame_with, cartan_embed, extended_solution, validate_potential, BuildOptions, FrameField, Grid, Which};
use uniton::factor::{birkhoff, default_trunc, iwasawa, reconstruction_residual};
use uniton::io::{num, parse_frame_field, parse_loop, parse_potential, write_frame_field, write_loop, write_potential, GridSpec, PotentialFile};
use uniton::liectx::{Family, GroupContext};
use uniton::linalg::{max_abs, CMat};
use uniton::roots::{cartan_data, enumerate_canonical};
use uniton::sample::LoopSampler;
use uniton::verify::{cartan_checks, default_lambdas, extended_solution_laws, frame_checks, harmonicity_residual_with, uniton_number, VerificationReport, EXACT_TOL, FD_TOL};
use uniton::willmore::{compare_with, example_potential, surface_samples, write_csv, write_obj, ObjProjection};
use uniton::Error;

/// Spacing at which the finite-difference tolerances are stated.
const FD_REFERENCE_SPACING: f64 = 1e-3;
const PLANE_TOL: f64 = 1e-5;
const DUALITY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "uniton", version, about = "Harmonic maps of finite uniton type via loop-group factorizations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WhichArg {
    Compact,
    Noncompact,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FactorMode {
    Birkhoff,
    Iwasawa,
}

#[derive(clap::Args, Clone, Debug, Default)]
struct GridArgs {
    /// Grid center as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    grid_center: Option<String>,
    #[arg(long)]
    grid_radius: Option<f64>,
    #[arg(long)]
    grid_spacing: Option<f64>,
    /// Spectral parameters as angles in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Canonical elements of a group and the dimensions of their gradings.
    Canonical {
        family: String,
        dim: usize,
        /// Involution as a comma list of +1/-1 (default: all +1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h: Vec<f64>,
    },
    /// Build frame fields from a potential file and verify them.
    Build {
        file: PathBuf,
        /// Real form of the split (default: the potential's own).
        #[arg(long, value_enum)]
        which: Option<WhichArg>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        trunc: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the frame and harmonic-map checks on a saved frame field.
    Verify {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Vec<f64>,
    },
    /// Birkhoff or Iwasawa split of a loop file, or of seeded random loops.
    Factor {
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "birkhoff")]
        mode: FactorMode,
        /// Real form for the Iwasawa split (default: the file's, else the context's own).
        #[arg(long, value_enum)]
        which: Option<WhichArg>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        trunc: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Group such as `so8`, `lorentz8` or `su4` for randomized roundtrips.
        #[arg(long)]
        random: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Compare the example Willmore surface with its DPW reconstruction.
    WillmoreDemo {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        trunc: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a mesh of the lambda = 1 surface.
        #[arg(long)]
        obj: bool,
    },
}

/// Exit status 1: a check failed. Status 2: input or configuration error.
enum Failure {
    Check,
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Canonical { family, dim, h } => cmd_canonical(&family, dim, &h),
        Cmd::Build { file, which, grid, tol, trunc, out } => cmd_build(&file, which, &grid, tol, trunc, out.as_deref()),
        Cmd::Verify { file, tol, lambda } => cmd_verify(&file, tol, &lambda),
        Cmd::Factor { file, mode, which, tol, trunc, out, random, seed, count } => match (file, random) {
            (Some(f), None) => cmd_factor(&f, mode, which, tol, trunc, out.as_deref()),
            (None, Some(g)) => cmd_factor_random(&g, mode, seed, count, tol),
            _ => Err(config("give either a loop file or --random")),
        },
        Cmd::WillmoreDemo { grid, tol, trunc, out, obj } => cmd_willmore_demo(&grid, tol, trunc, out.as_deref(), obj),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> Failure {
    config(format!("{}: {e}", path.display()))
}

fn lambdas_of(degrees: &[f64]) -> Vec<C64> {
    degrees.iter().map(|d| C64::from_polar(1.0, d.to_radians())).collect()
}

fn parse_center(s: &str) -> Result<C64, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || config(format!("--grid-center expects `re,im`, found `{s}`"));
    match parts.as_slice() {
        [re, im] => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// Flags override the file's grid block, which overrides `default`.
fn resolve_grid(args: &GridArgs, file: Option<GridSpec>, default: GridSpec) -> Result<GridSpec, Failure> {
    let mut g = file.unwrap_or(default);
    if let Some(c) = &args.grid_center {
        g.center = parse_center(c)?;
    }
    if let Some(r) = args.grid_radius {
        g.radius = r;
    }
    if let Some(s) = args.grid_spacing {
        g.spacing = s;
    }
    if g.spacing.is_nan() || g.spacing <= 0.0 || g.radius.is_nan() || g.radius < 0.0 {
        return Err(config("grid spacing must be positive and radius non-negative"));
    }
    Ok(g)
}

/// Finite-difference tolerance: an explicit `--tol`, else the reference bound scaled
/// quadratically with the spacing.
fn fd_tol(tol: Option<f64>, spacing: f64) -> f64 {
    tol.unwrap_or(FD_TOL * (spacing / FD_REFERENCE_SPACING).powi(2).max(1.0))
}

fn finish(report: &VerificationReport) -> Outcome {
    print!("{}", report.render_text());
    print!("{}", report.render_kv());
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

// ---------------------------------------------------------------------------

fn parse_group(family: &str, dim: usize, h: &[f64]) -> Result<GroupContext, Failure> {
    let fam = Family::parse(family).ok_or_else(|| config(format!("unknown family `{family}`")))?;
    let h = if h.is_empty() { vec![1.0; dim] } else { h.to_vec() };
    Ok(GroupContext::new(fam, dim, &h)?)
}

fn cmd_canonical(family: &str, dim: usize, h: &[f64]) -> Outcome {
    let ctx = parse_group(family, dim, h)?;
    let cd = cartan_data(&ctx)?;
    println!("# {} rank {}", ctx.name, cd.rank());
    println!("# index_set height grade_dims(0..height)");
    for ce in enumerate_canonical(&cd)? {
        let set: Vec<String> = ce.index_set.iter().map(|k| k.to_string()).collect();
        let dims: Vec<String> = (0..=ce.height).map(|j| ce.grade_dim(j).to_string()).collect();
        println!("{{{}}} {} {}", set.join(","), ce.height, dims.join(","));
    }
    Ok(())
}

fn builds(which: Option<WhichArg>, ctx: &GroupContext) -> Vec<Which> {
    let own = if ctx.compact { WhichArg::Compact } else { WhichArg::Noncompact };
    match which.unwrap_or(own) {
        WhichArg::Compact => vec![Which::Compact],
        WhichArg::Noncompact => vec![Which::Noncompact],
        WhichArg::Both => vec![Which::Compact, Which::Noncompact],
    }
}

/// All checks that make sense for one frame field.
fn field_report(field: &FrameField, lambdas: &[C64], fd: f64, xi: Option<&CMat>) -> Result<VerificationReport, Failure> {
    let mut report = frame_checks(field);
    let cartan = cartan_embed(field, &field.ctx.h);
    report.merge(cartan_checks(field, &cartan));
    match harmonicity_residual_with(field, lambdas, 1, fd) {
        Ok(r) => report.merge(r),
        Err(Error::GridTooCoarse(msg)) => report.notes.push(format!("harmonicity not checked: {msg}")),
        Err(e) => return Err(e.into()),
    }
    if let Some(xi) = xi {
        let ext = extended_solution(field, xi)?;
        match extended_solution_laws(field, &ext, &cartan, lambdas) {
            Ok(mut r) => {
                for check in r.checks.values_mut() {
                    if check.tol == FD_TOL {
                        check.tol = fd;
                        check.pass = check.residual <= fd;
                    }
                }
                report.merge(r);
            }
            Err(Error::GridTooCoarse(msg)) => report.notes.push(format!("extended-solution laws not checked: {msg}")),
            Err(e) => return Err(e.into()),
        }
        match uniton_number(&ext, &field.ctx) {
            Ok(r) => report.notes.push(format!("uniton_number={r}")),
            Err(e) => report.notes.push(format!("uniton number not computed: {e}")),
        }
    }
    Ok(report)
}

fn cmd_build(path: &Path, which: Option<WhichArg>, args: &GridArgs, tol: Option<f64>, trunc: Option<usize>, out: Option<&Path>) -> Outcome {
    let file = parse_potential(&read(path)?).map_err(|e| with_path(path, e))?;
    let default = GridSpec { center: file.spec.basepoint, radius: 0.1, spacing: 0.02 };
    let gs = resolve_grid(args, file.grid, default)?;
    let grid = gs.grid();
    let degrees = if !args.lambda.is_empty() { args.lambda.clone() } else { file.lambdas.clone() };
    let lambdas = if degrees.is_empty() { default_lambdas() } else { lambdas_of(&degrees) };
    let opts = BuildOptions { trunc, tol: tol.unwrap_or(BuildOptions::default().tol) };
    let fd = fd_tol(tol, gs.spacing);

    println!("# potential {}", path.display());
    println!("# grid center={} {} radius={} spacing={} points={}", num(gs.center.re), num(gs.center.im), num(gs.radius), num(gs.spacing), grid.len());
    println!("# tol.factorization={} tol.finite_difference={} tol.exact={} trunc={}", num(opts.tol), num(fd), num(EXACT_TOL), trunc.map_or("auto".into(), |t| t.to_string()));

    let pr = validate_potential(&file.spec)?;
    let mut report = VerificationReport::new();
    let grading = pr.grading.iter().cloned().fold(0.0, f64::max);
    report.record("potential_grading", grading, None, EXACT_TOL);
    report.notes.push(format!("nilpotency_index={}", pr.nilpotency_index));

    let xi = file.spec.ce.as_ref().map(|ce| ce.xi.clone());
    let mut fields = Vec::new();
    for w in builds(which, &file.spec.ctx) {
        let field = build_frame_with(&file.spec, &grid, w, opts)?;
        let mut r = field_report(&field, &lambdas, fd, xi.as_ref())?;
        r.notes.push(format!("failed_points={}", field.failure_count()));
        for (name, check) in r.checks {
            report.checks.insert(format!("{}.{name}", w.name()), check);
        }
        report.notes.extend(r.notes.into_iter().map(|n| format!("{}: {n}", w.name())));
        if let Some(dir) = out {
            let header = [format!("potential {}", path.display()), format!("tol.factorization={}", num(opts.tol))];
            write(dir, &format!("frames-{}.txt", w.name()), &write_frame_field(&field, &header))?;
            write(dir, &format!("map-{}.txt", w.name()), &map_samples(&field, &lambdas))?;
        }
        fields.push(field);
    }
    if let [a, b] = fields.as_slice() {
        let mut worst = 0.0f64;
        let mut at = None;
        for (k, pt) in a.grid.points.iter().enumerate() {
            if let (Some(x), Some(y)) = (&a.minus[k], &b.minus[k]) {
                let d = x.circle_distance(y, 16);
                if d > worst || at.is_none() {
                    worst = d;
                    at = Some(pt.z);
                }
            }
        }
        report.record("duality_minus_factor", worst, at, DUALITY_TOL);
    }
    if let Some(dir) = out {
        write(dir, "summary.txt", &report.render_kv())?;
        write(dir, "potential.txt", &write_potential(&PotentialFile { grid: Some(gs), lambdas: degrees, ..file }))?;
    }
    finish(&report)
}

/// Cartan embedding `F h F^-1` at each point and spectral sample.
fn map_samples(field: &FrameField, lambdas: &[C64]) -> String {
    let cartan = cartan_embed(field, &field.ctx.h);
    let mut out = String::from("# Cartan embedding samples: point i j, lambda angle in degrees, rows of re im pairs\n");
    for (k, pt) in field.grid.points.iter().enumerate() {
        let Some(m) = &cartan.maps[k] else { continue };
        for &l in lambdas {
            out += &format!("point {} {} lambda {}\n", pt.idx.0, pt.idx.1, num(l.arg().to_degrees()));
            let v = m.eval(l);
            for r in 0..v.nrows() {
                let row: Vec<String> = (0..v.ncols()).map(|c| format!("{} {}", num(v[(r, c)].re), num(v[(r, c)].im))).collect();
                out += &format!("row {}\n", row.join(" "));
            }
        }
    }
    out
}

fn cmd_verify(path: &Path, tol: Option<f64>, lambda: &[f64]) -> Outcome {
    let field = parse_frame_field(&read(path)?).map_err(|e| with_path(path, e))?;
    let lambdas = if lambda.is_empty() { default_lambdas() } else { lambdas_of(lambda) };
    let fd = fd_tol(tol, field.grid.spacing);
    println!("# frame field {} ({}, {} points)", path.display(), field.which.name(), field.grid.len());
    println!("# tol.finite_difference={} tol.exact={}", num(fd), num(EXACT_TOL));
    let report = field_report(&field, &lambdas, fd, None)?;
    finish(&report)
}

fn factor_context(ctx: &GroupContext, which: Option<Which>) -> Result<GroupContext, Failure> {
    match which {
        None => Ok(ctx.clone()),
        Some(w) => Ok(uniton::dpw::build_context(ctx, w)?),
    }
}

fn cmd_factor(path: &Path, mode: FactorMode, which: Option<WhichArg>, tol: Option<f64>, trunc: Option<usize>, out: Option<&Path>) -> Outcome {
    let lf = parse_loop(&read(path)?).map_err(|e| with_path(path, e))?;
    let w = match which {
        Some(WhichArg::Compact) => Some(Which::Compact),
        Some(WhichArg::Noncompact) => Some(Which::Noncompact),
        Some(WhichArg::Both) => return Err(config("factor takes a single real form")),
        None => lf.which,
    };
    let ctx = factor_context(&lf.ctx, w)?;
    let tol = tol.unwrap_or(1e-9);
    let trunc = trunc.unwrap_or_else(|| default_trunc(&lf.g));
    println!("# loop {} in {}", path.display(), ctx.name);
    println!("# mode={:?} tol={} trunc={trunc}", mode, num(tol));
    let mut report = VerificationReport::new();
    let (left, right, names) = match mode {
        FactorMode::Birkhoff => {
            let r = birkhoff(&lf.g, &ctx, trunc, tol)?;
            (r.minus, r.plus, ["minus", "plus"])
        }
        FactorMode::Iwasawa => {
            let r = iwasawa(&lf.g, &ctx, trunc, tol)?;
            report.record("reality", ctx.reality_residual(&r.unitary), None, tol);
            (r.unitary, r.plus, ["real", "plus"])
        }
    };
    report.record("reconstruction", reconstruction_residual(&left, &right, &lf.g), None, tol);
    for (name, g) in names.iter().zip([&left, &right]) {
        let text = write_loop(&ctx, None, g);
        match out {
            Some(dir) => write(dir, &format!("{name}.txt"), &text)?,
            None => print!("# factor {name}\n{text}"),
        }
    }
    finish(&report)
}

/// Group names like `so8`, `lorentz8`, `su4`; the involution splits the dimension in half.
fn random_context(spec: &str) -> Result<GroupContext, Failure> {
    let split = spec.find(|ch: char| ch.is_ascii_digit()).ok_or_else(|| config(format!("group `{spec}` lacks a dimension")))?;
    let dim: usize = spec[split..].parse().map_err(|_| config(format!("bad dimension in `{spec}`")))?;
    let h: Vec<f64> = (0..dim).map(|k| if k < dim / 2 { -1.0 } else { 1.0 }).collect();
    parse_group(&spec[..split], dim, &h)
}

fn cmd_factor_random(spec: &str, mode: FactorMode, seed: u64, count: usize, tol: Option<f64>) -> Outcome {
    let ctx = random_context(spec)?;
    let tol = tol.unwrap_or(1e-9);
    let mut sampler = LoopSampler::new(&ctx, seed)?;
    println!("# {count} random {:?} roundtrips in {} (seed {seed}), tol={}", mode, ctx.name, num(tol));
    let mut report = VerificationReport::new();
    let mut worst_rec = 0.0f64;
    let mut worst_factor = 0.0f64;
    for _ in 0..count {
        let (a, b) = match mode {
            FactorMode::Birkhoff => (sampler.minus_loop(0.5, 2), sampler.plus_loop(0.5, 2)),
            FactorMode::Iwasawa => (sampler.real_form_loop(0.5), sampler.plus_loop(0.5, 2)),
        };
        let g = &a * &b;
        let trunc = default_trunc(&g);
        let (x, y) = match mode {
            FactorMode::Birkhoff => {
                let r = birkhoff(&g, &ctx, trunc, tol)?;
                (r.minus, r.plus)
            }
            FactorMode::Iwasawa => {
                let r = iwasawa(&g, &ctx, trunc, tol)?;
                (r.unitary, r.plus)
            }
        };
        worst_rec = worst_rec.max(reconstruction_residual(&x, &y, &g));
        // Birkhoff factors are unique. Iwasawa factors are unique up to the constant fixed
        // by the normalization of `plus(0)`, so `a^-1 x` must be constant.
        let off = match mode {
            FactorMode::Birkhoff => x.circle_distance(&a, 16).max(y.circle_distance(&b, 16)),
            FactorMode::Iwasawa => {
                let q = &ctx.real_inverse(&a) * &x;
                let (lo, hi) = q.support().unwrap_or((0, 0));
                (lo..=hi).filter(|&k| k != 0).map(|k| max_abs(&q.coeff(k))).fold(0.0, f64::max)
            }
        };
        worst_factor = worst_factor.max(off);
    }
    report.record("reconstruction", worst_rec, None, tol);
    report.record("factor_uniqueness", worst_factor, None, tol);
    finish(&report)
}

fn cmd_willmore_demo(args: &GridArgs, tol: Option<f64>, trunc: Option<usize>, out: Option<&Path>, obj: bool) -> Outcome {
    let default = GridSpec { center: C64::new(0.0, 0.0), radius: 1.0, spacing: 0.05 };
    let gs = resolve_grid(args, None, default)?;
    let grid: Grid = gs.grid();
    let degrees = if args.lambda.is_empty() { vec![0.0, 90.0, 180.0] } else { args.lambda.clone() };
    let lambdas = lambdas_of(&degrees);
    let plane_tol = tol.unwrap_or(PLANE_TOL);
    let p = example_potential()?;
    let opts = BuildOptions { trunc, ..BuildOptions::default() };

    println!("# willmore example, grid center={} {} radius={} spacing={} points={}", num(gs.center.re), num(gs.center.im), num(gs.radius), num(gs.spacing), grid.len());
    println!("# lambda degrees={}", degrees.iter().map(|d| num(*d)).collect::<Vec<_>>().join(","));
    println!("# tol.plane_deviation={} tol.factorization={}", num(plane_tol), num(opts.tol));
    let cmp = compare_with(&p, &grid, &lambdas, opts)?;
    for (z, why) in &cmp.skipped {
        println!("# skipped z={} {}: {why}", num(z.re), num(z.im));
    }
    let mut report = VerificationReport::new();
    report.record("plane_deviation", cmp.max_deviation, cmp.at.map(|a| a.0), plane_tol);
    report.notes.push(format!("compared_points={} skipped_points={}", cmp.compared, cmp.skipped.len()));

    if let Some(dir) = out {
        let mut csv = Vec::new();
        write_csv(&mut csv, &surface_samples(&grid, &lambdas)).map_err(|e| config(e.to_string()))?;
        write(dir, "surface.csv", &String::from_utf8_lossy(&csv))?;
        if obj {
            let mut mesh = Vec::new();
            write_obj(&mut mesh, &grid, ObjProjection::default()).map_err(|e| config(e.to_string()))?;
            write(dir, "surface.obj", &String::from_utf8_lossy(&mesh))?;
        }
        write(dir, "potential.txt", &write_potential(&PotentialFile { spec: p, grid: Some(gs), lambdas: degrees }))?;
    }
    let res = finish(&report);
    if res.is_ok() {
        println!("max_plane_deviation < {plane_tol:e}");
    } else {
        println!("max_plane_deviation = {} >= {plane_tol:e}", num(cmp.max_deviation));
    }
    res
}
