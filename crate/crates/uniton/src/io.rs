//! Line-oriented text formats for potentials, frame fields and loops.
//!
//! Every line is `key value...`; `#` starts a comment. Numbers are written with 15
//! significant digits. Complex scalars in potential entries use `a`, `bi` or `a+bi`; matrix
//! rows in frame and loop files list `re im` pairs.

use std::fmt::Write as _;

use crate::dpw::{FrameField, Grid, Mode, PotentialSpec, Which};
use crate::error::{Error, Result};
use crate::laurent::{LaurentMatrix, RatMatrix, RationalFn};
use crate::liectx::{Family, GroupContext};
use crate::linalg::{c, zeros, CMat, C64};
use crate::roots::{cartan_data, grading};

/// Real number with 15 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", num(z.re), sign, num(z.im.abs()))
}

#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

impl Tok<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn f64(&self) -> Result<f64> {
        self.text.parse().map_err(|_| self.err(format!("expected a number, found `{}`", self.text)))
    }

    fn usize(&self) -> Result<usize> {
        self.text.parse().map_err(|_| self.err(format!("expected a non-negative integer, found `{}`", self.text)))
    }

    fn i32(&self) -> Result<i32> {
        self.text.parse().map_err(|_| self.err(format!("expected an integer, found `{}`", self.text)))
    }

    fn complex(&self) -> Result<C64> {
        parse_complex(self.text).ok_or_else(|| self.err(format!("expected a complex number, found `{}`", self.text)))
    }

    /// Comma-separated complex list.
    fn complex_list(&self) -> Result<Vec<C64>> {
        let mut out = Vec::new();
        let mut col = self.col;
        for part in self.text.split(',') {
            let t = Tok { text: part, line: self.line, col };
            out.push(t.complex()?);
            col += part.len() + 1;
        }
        Ok(out)
    }
}

/// `a`, `bi`, `i`, `-i`, `a+bi`, `a-bi`, exponents allowed.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| c(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => t.parse::<f64>().ok(),
    };
    match split {
        Some(k) => Some(c(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(c(0.0, imag(body)?)),
    }
}

struct Line<'a> {
    no: usize,
    toks: Vec<Tok<'a>>,
}

impl<'a> Line<'a> {
    fn key(&self) -> &'a str {
        self.toks[0].text
    }

    fn args(&self) -> &[Tok<'a>] {
        &self.toks[1..]
    }

    fn end_col(&self) -> usize {
        self.toks.last().map_or(1, |t| t.col + t.text.len())
    }

    fn exact(&self, n: usize) -> Result<&[Tok<'a>]> {
        if self.args().len() != n {
            let col = self.toks.get(n + 1).map_or(self.end_col(), |t| t.col);
            return Err(Error::Parse { line: self.no, col, msg: format!("`{}` takes {} argument(s), found {}", self.key(), n, self.args().len()) });
        }
        Ok(self.args())
    }
}

fn lines(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (pos, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(pos),
                (true, Some(s)) => {
                    toks.push(Tok { text: &content[s..pos], line: k + 1, col: s + 1 });
                    start = None;
                }
                _ => {}
            }
        }
        if !toks.is_empty() {
            out.push(Line { no: k + 1, toks });
        }
    }
    out
}

fn missing(key: &str, text: &str) -> Error {
    Error::Parse { line: text.lines().count().max(1), col: 1, msg: format!("missing `{key}`") }
}

// ---------------------------------------------------------------------------
// Group header shared by all formats.

struct Header {
    family: Option<(Family, usize)>,
    dim: Option<usize>,
    h: Option<Vec<f64>>,
}

impl Header {
    fn new() -> Self {
        Header { family: None, dim: None, h: None }
    }

    /// Consumes `family`, `dim` and `h` lines; returns whether the line was one of them.
    fn take(&mut self, l: &Line) -> Result<bool> {
        match l.key() {
            "family" => {
                let t = l.exact(1)?[0];
                let f = Family::parse(t.text).ok_or_else(|| t.err(format!("unknown family `{}`", t.text)))?;
                self.family = Some((f, l.no));
            }
            "dim" => self.dim = Some(l.exact(1)?[0].usize()?),
            "h" => self.h = Some(l.args().iter().map(|t| t.f64()).collect::<Result<_>>()?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn context(&self, text: &str) -> Result<GroupContext> {
        let (family, line) = self.family.ok_or_else(|| missing("family", text))?;
        let n = self.dim.ok_or_else(|| missing("dim", text))?;
        let h = self.h.clone().unwrap_or_else(|| vec![1.0; n]);
        GroupContext::new(family, n, &h).map_err(|e| Error::Parse { line, col: 1, msg: e.to_string() })
    }
}

fn write_header(out: &mut String, ctx: &GroupContext) {
    let _ = writeln!(out, "family {}", ctx.family.name());
    let _ = writeln!(out, "dim {}", ctx.dim);
    let h: Vec<String> = ctx.h_diag().iter().map(|x| format!("{x}")).collect();
    let _ = writeln!(out, "h {}", h.join(" "));
}

// ---------------------------------------------------------------------------
// Potential files.

/// Lattice disc of the form `center + spacing (i + i j)`, `|i + i j| spacing <= radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub center: C64,
    pub radius: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn grid(&self) -> Grid {
        Grid::disc(self.center, self.radius, self.spacing)
    }
}

#[derive(Clone, Debug)]
pub struct PotentialFile {
    pub spec: PotentialSpec,
    pub grid: Option<GridSpec>,
    /// Spectral samples as angles in degrees.
    pub lambdas: Vec<f64>,
}

/// `entry row col numerator [denominator]`, kept as tokens for error positions.
type EntryLine<'a> = (Tok<'a>, Tok<'a>, Tok<'a>, Option<Tok<'a>>);

/// Parses a potential file.
///
/// ```text
/// family lorentz
/// dim 8
/// h -1 -1 -1 -1 1 1 1 1
/// basepoint 0 0
/// xi-torus 1 1 0 0          # or: canonical 0 2
/// mode normalized
/// coefficient 0
/// entry 0 4 0,1i 2          # row col numerator denominator, ascending powers of z
/// grid 0 0 1 0.05           # center re, center im, radius, spacing
/// lambda 0 90 180
/// ```
pub fn parse_potential(text: &str) -> Result<PotentialFile> {
    let mut header = Header::new();
    let mut basepoint = c(0.0, 0.0);
    let mut mode = Mode::Normalized;
    let mut grid = None;
    let mut lambdas = Vec::new();
    let mut xi_line: Option<(Vec<f64>, bool, usize)> = None;
    let mut blocks: Vec<(usize, Vec<EntryLine>)> = Vec::new();
    let all = lines(text);
    for l in &all {
        if header.take(l)? {
            continue;
        }
        match l.key() {
            "basepoint" => {
                let a = l.exact(2)?;
                basepoint = c(a[0].f64()?, a[1].f64()?);
            }
            "mode" => {
                let t = l.exact(1)?[0];
                mode = match t.text {
                    "normalized" => Mode::Normalized,
                    "extended" => Mode::ExtendedSolution,
                    other => return Err(t.err(format!("unknown mode `{other}`"))),
                };
            }
            "canonical" => xi_line = Some((l.args().iter().map(|t| t.usize().map(|k| k as f64)).collect::<Result<_>>()?, true, l.no)),
            "xi-torus" => xi_line = Some((l.args().iter().map(|t| t.f64()).collect::<Result<_>>()?, false, l.no)),
            "coefficient" => blocks.push((l.exact(1)?[0].usize()?, Vec::new())),
            "entry" => {
                let a = l.args();
                if !(3..=4).contains(&a.len()) {
                    return Err(Error::Parse { line: l.no, col: l.toks[0].col, msg: format!("`entry` takes row, col, numerator and optional denominator, found {} argument(s)", a.len()) });
                }
                let Some(block) = blocks.last_mut() else {
                    return Err(l.toks[0].err("`entry` before any `coefficient` line"));
                };
                block.1.push((a[0], a[1], a[2], a.get(3).copied()));
            }
            "grid" => {
                let a = l.exact(4)?;
                let spacing = a[3].f64()?;
                if spacing <= 0.0 {
                    return Err(a[3].err("spacing must be positive"));
                }
                grid = Some(GridSpec { center: c(a[0].f64()?, a[1].f64()?), radius: a[2].f64()?, spacing });
            }
            "lambda" => lambdas = l.args().iter().map(|t| t.f64()).collect::<Result<_>>()?,
            other => return Err(l.toks[0].err(format!("unknown key `{other}`"))),
        }
    }

    let ctx = header.context(text)?;
    let n = ctx.dim;
    let ce = match xi_line {
        None => None,
        Some((vals, is_set, line)) => {
            let bad = |msg: String| Error::Parse { line, col: 1, msg };
            let cd = cartan_data(&ctx).map_err(|e| bad(e.to_string()))?;
            let xi = if is_set {
                let set: Vec<usize> = vals.iter().map(|v| *v as usize).collect();
                if let Some(k) = set.iter().find(|&&k| k >= cd.rank()) {
                    return Err(bad(format!("index {k} exceeds the rank {}", cd.rank())));
                }
                cd.subset_sum(&set)
            } else {
                let torus = ctx.compact_torus();
                if vals.len() != torus.len() {
                    return Err(bad(format!("`xi-torus` needs {} coordinates, found {}", torus.len(), vals.len())));
                }
                vals.iter().zip(torus).fold(zeros(n, n), |acc, (t, x)| acc + x * c(*t, 0.0))
            };
            Some(grading(&xi, &cd).map_err(|e| bad(e.to_string()))?)
        }
    };

    let mut coefficients = Vec::new();
    for (j, entries) in blocks {
        let mut m = RatMatrix::zeros(n, n);
        for (rt, ct, nt, dt) in entries {
            let (r, col) = (rt.usize()?, ct.usize()?);
            if r >= n {
                return Err(rt.err(format!("row {r} out of range for dimension {n}")));
            }
            if col >= n {
                return Err(ct.err(format!("column {col} out of range for dimension {n}")));
            }
            let den = match dt {
                Some(t) => t.complex_list()?,
                None => vec![c(1.0, 0.0)],
            };
            let f = RationalFn::new(nt.complex_list()?, den).map_err(|e| nt.err(e.to_string()))?;
            m.set(r, col, f);
        }
        coefficients.push((j, m));
    }
    let spec = PotentialSpec::new(ctx, ce, basepoint, coefficients, mode);
    Ok(PotentialFile { spec, grid, lambdas })
}

pub fn write_potential(file: &PotentialFile) -> String {
    let p = &file.spec;
    let mut out = String::new();
    write_header(&mut out, &p.ctx);
    let _ = writeln!(out, "basepoint {} {}", num(p.basepoint.re), num(p.basepoint.im));
    if let Some(ce) = &p.ce {
        if ce.is_canonical {
            let set: Vec<String> = ce.index_set.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "canonical {}", set.join(" "));
        } else if let Some(coords) = torus_coordinates(&p.ctx, &ce.xi) {
            let s: Vec<String> = coords.iter().map(|x| num(*x)).collect();
            let _ = writeln!(out, "xi-torus {}", s.join(" "));
        }
    }
    let _ = writeln!(out, "mode {}", p.mode.name());
    for (j, m) in &p.coefficients {
        let _ = writeln!(out, "coefficient {j}");
        let (rows, cols) = m.shape();
        for r in 0..rows {
            for col in 0..cols {
                let f = m.get(r, col);
                if f.is_zero() {
                    continue;
                }
                let list = |v: &[C64]| v.iter().map(|z| complex(*z)).collect::<Vec<_>>().join(",");
                let _ = writeln!(out, "entry {r} {col} {} {}", list(f.num()), list(f.den()));
            }
        }
    }
    if let Some(g) = &file.grid {
        let _ = writeln!(out, "grid {} {} {} {}", num(g.center.re), num(g.center.im), num(g.radius), num(g.spacing));
    }
    if !file.lambdas.is_empty() {
        let s: Vec<String> = file.lambdas.iter().map(|x| num(*x)).collect();
        let _ = writeln!(out, "lambda {}", s.join(" "));
    }
    out
}

/// Coordinates of `xi` in the context's torus basis, when it lies in its span.
fn torus_coordinates(ctx: &GroupContext, xi: &CMat) -> Option<Vec<f64>> {
    let torus = ctx.compact_torus();
    let coords: Vec<f64> = torus.iter().map(|t| (t.dot(xi) / t.dot(t)).re).collect();
    let back = coords.iter().zip(torus).fold(zeros(ctx.dim, ctx.dim), |acc, (x, t)| acc + t * c(*x, 0.0));
    ((back - xi).norm() < 1e-9).then_some(coords)
}

// ---------------------------------------------------------------------------
// Loops and frame fields.

fn write_loop_block(out: &mut String, g: &LaurentMatrix) {
    let (lo, hi) = g.support().unwrap_or((0, 0));
    let _ = writeln!(out, "loop {lo} {hi}");
    for k in lo..=hi {
        let m = g.coeff(k);
        let _ = writeln!(out, "coeff {k}");
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|col| format!("{} {}", num(m[(r, col)].re), num(m[(r, col)].im))).collect();
            let _ = writeln!(out, "row {}", row.join(" "));
        }
    }
}

/// Reads the `loop lo hi` block starting at `all[*at]`.
fn read_loop_block(all: &[Line], at: &mut usize, n: usize) -> Result<LaurentMatrix> {
    let head = &all[*at];
    let a = head.exact(2)?;
    let (lo, hi) = (a[0].i32()?, a[1].i32()?);
    if hi < lo {
        return Err(a[1].err("upper degree below lower degree"));
    }
    *at += 1;
    let mut coeffs = Vec::new();
    for k in lo..=hi {
        let l = all.get(*at).ok_or_else(|| Error::Parse { line: head.no, col: 1, msg: format!("loop block ends before coefficient {k}") })?;
        if l.key() != "coeff" || l.exact(1)?[0].i32()? != k {
            return Err(l.toks[0].err(format!("expected `coeff {k}`")));
        }
        *at += 1;
        let mut m = zeros(n, n);
        for r in 0..n {
            let l = all.get(*at).ok_or_else(|| Error::Parse { line: head.no, col: 1, msg: format!("coefficient {k} ends before row {r}") })?;
            if l.key() != "row" {
                return Err(l.toks[0].err(format!("expected `row`, found `{}`", l.key())));
            }
            let v = l.exact(2 * n)?;
            for col in 0..n {
                m[(r, col)] = c(v[2 * col].f64()?, v[2 * col + 1].f64()?);
            }
            *at += 1;
        }
        coeffs.push((k, m));
    }
    LaurentMatrix::from_coeffs(n, coeffs)
}

#[derive(Clone, Debug)]
pub struct LoopFile {
    pub ctx: GroupContext,
    pub which: Option<Which>,
    pub g: LaurentMatrix,
}

pub fn write_loop(ctx: &GroupContext, which: Option<Which>, g: &LaurentMatrix) -> String {
    let mut out = String::new();
    write_header(&mut out, ctx);
    if let Some(w) = which {
        let _ = writeln!(out, "which {}", w.name());
    }
    write_loop_block(&mut out, g);
    out
}

fn parse_which(t: &Tok) -> Result<Which> {
    match t.text {
        "compact" => Ok(Which::Compact),
        "noncompact" => Ok(Which::Noncompact),
        other => Err(t.err(format!("unknown real form `{other}`"))),
    }
}

/// Parses a loop file: group header, optional `which`, one loop block.
pub fn parse_loop(text: &str) -> Result<LoopFile> {
    let all = lines(text);
    let mut header = Header::new();
    let mut which = None;
    let mut g = None;
    let mut at = 0;
    while at < all.len() {
        let l = &all[at];
        if header.take(l)? {
            at += 1;
            continue;
        }
        match l.key() {
            "which" => {
                which = Some(parse_which(&l.exact(1)?[0])?);
                at += 1;
            }
            "loop" => {
                let n = header.dim.ok_or_else(|| l.toks[0].err("`loop` before `dim`"))?;
                g = Some(read_loop_block(&all, &mut at, n)?);
            }
            other => return Err(l.toks[0].err(format!("unknown key `{other}`"))),
        }
    }
    let ctx = header.context(text)?;
    let g = g.ok_or_else(|| missing("loop", text))?;
    Ok(LoopFile { ctx, which, g })
}

/// Frame field with its grid; `extra` lines go into the comment header.
pub fn write_frame_field(field: &FrameField, extra: &[String]) -> String {
    let mut out = String::new();
    for e in extra {
        let _ = writeln!(out, "# {e}");
    }
    let ctx = if field.ctx.compact { field.ctx.noncompact_partner().unwrap_or(&field.ctx) } else { &field.ctx };
    write_header(&mut out, ctx);
    let _ = writeln!(out, "which {}", field.which.name());
    let _ = writeln!(out, "basepoint {} {}", num(field.basepoint.re), num(field.basepoint.im));
    let _ = writeln!(out, "grid-center {} {}", num(field.grid.center.re), num(field.grid.center.im));
    let _ = writeln!(out, "grid-spacing {}", num(field.grid.spacing));
    let _ = writeln!(out, "tol {}", num(field.tol));
    for (k, pt) in field.grid.points.iter().enumerate() {
        let _ = writeln!(out, "point {} {}", pt.idx.0, pt.idx.1);
        match (&field.frames[k], &field.failures[k]) {
            (Some(f), _) => write_loop_block(&mut out, f),
            (None, reason) => {
                let _ = writeln!(out, "failed {}", reason.as_deref().unwrap_or("unknown").replace('\n', " "));
            }
        }
    }
    out
}

/// Parses a frame field. Minus factors are not stored and come back empty.
pub fn parse_frame_field(text: &str) -> Result<FrameField> {
    let all = lines(text);
    let mut header = Header::new();
    let mut which = None;
    let mut basepoint = c(0.0, 0.0);
    let mut center = c(0.0, 0.0);
    let mut spacing = None;
    let mut tol = 1e-9;
    let mut idxs = Vec::new();
    let mut frames = Vec::new();
    let mut failures = Vec::new();
    let mut at = 0;
    while at < all.len() {
        let l = &all[at];
        if header.take(l)? {
            at += 1;
            continue;
        }
        match l.key() {
            "which" => which = Some(parse_which(&l.exact(1)?[0])?),
            "basepoint" | "grid-center" => {
                let a = l.exact(2)?;
                let z = c(a[0].f64()?, a[1].f64()?);
                if l.key() == "basepoint" {
                    basepoint = z;
                } else {
                    center = z;
                }
            }
            "grid-spacing" => spacing = Some(l.exact(1)?[0].f64()?),
            "tol" => tol = l.exact(1)?[0].f64()?,
            "point" => {
                let a = l.exact(2)?;
                idxs.push((a[0].i32()?, a[1].i32()?));
                let n = header.dim.ok_or_else(|| l.toks[0].err("`point` before `dim`"))?;
                at += 1;
                let next = all.get(at).ok_or_else(|| Error::Parse { line: l.no, col: 1, msg: "point without frame".into() })?;
                match next.key() {
                    "loop" => {
                        frames.push(Some(read_loop_block(&all, &mut at, n)?));
                        failures.push(None);
                    }
                    "failed" => {
                        let reason: Vec<&str> = next.args().iter().map(|t| t.text).collect();
                        frames.push(None);
                        failures.push(Some(reason.join(" ")));
                        at += 1;
                    }
                    other => return Err(next.toks[0].err(format!("expected `loop` or `failed`, found `{other}`"))),
                }
                continue;
            }
            other => return Err(l.toks[0].err(format!("unknown key `{other}`"))),
        }
        at += 1;
    }
    let base_ctx = header.context(text)?;
    let which = which.ok_or_else(|| missing("which", text))?;
    let spacing = spacing.ok_or_else(|| missing("grid-spacing", text))?;
    let ctx = crate::dpw::build_context(&base_ctx, which).map_err(|e| Error::Parse { line: 1, col: 1, msg: e.to_string() })?;
    let grid = Grid::from_indices(center, spacing, idxs);
    let basepoint_index = grid.find(basepoint);
    let minus = vec![None; grid.len()];
    Ok(FrameField { grid, ctx, which, basepoint, basepoint_index, minus, frames, failures, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("2"), Some(c(2.0, 0.0)));
        assert_eq!(parse_complex("-i"), Some(c(0.0, -1.0)));
        assert_eq!(parse_complex("3.5i"), Some(c(0.0, 3.5)));
        assert_eq!(parse_complex("1e-3-2e+2i"), Some(c(1e-3, -200.0)));
        assert_eq!(parse_complex("-1.5+i"), Some(c(-1.5, 1.0)));
        assert_eq!(parse_complex("x"), None);
        let z = c(-0.123456789012345, 6.02e23);
        assert_eq!(parse_complex(&complex(z)), Some(z));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_potential("family so\ndim 4\nentry 0 0 1\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, col: 1, msg: "`entry` before any `coefficient` line".into() });
        match parse_potential("family so\ndim 4\ncoefficient 0\nentry 0 1 2+q\n").unwrap_err() {
            Error::Parse { line, col, .. } => assert_eq!((line, col), (4, 11)),
            e => panic!("{e}"),
        }
        match parse_potential("family so\ndim 4\nmode  sideways\n").unwrap_err() {
            Error::Parse { line, col, .. } => assert_eq!((line, col), (3, 7)),
            e => panic!("{e}"),
        }
        assert!(matches!(parse_potential("dim 4\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn loop_roundtrip() {
        let ctx = GroupContext::unitary(2, &[1.0, -1.0]).unwrap();
        let mut m = zeros(2, 2);
        m[(0, 1)] = c(0.25, -1.0 / 3.0);
        let g = LaurentMatrix::from_coeffs(2, [(0, crate::linalg::eye(2)), (-1, m)]).unwrap();
        let back = parse_loop(&write_loop(&ctx, Some(Which::Compact), &g)).unwrap();
        assert_eq!(back.ctx, ctx);
        assert_eq!(back.which, Some(Which::Compact));
        assert!(back.g.circle_distance(&g, 8) < 1e-15);
    }
}
