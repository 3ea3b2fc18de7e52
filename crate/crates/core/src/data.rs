//! Gridded elevation meshes: a plain-text file format and a synthetic
//! generator built on the closed-form linear solution.
//!
//! File layout:
//!
//! ```text
//! rows cols spacing_x spacing_y origin_x origin_y
//! z(0,0) z(0,1) ... z(0,cols-1)
//! ...
//! ```
//!
//! Row `j` holds the points with `y = origin_y + j * spacing_y`, column `i`
//! the points with `x = origin_x + i * spacing_x`. Values are written with 17
//! significant digits so a write/read cycle is bit-exact, and invalid points
//! are the literal token `nan`.
//!
//! Synthetic noise is reproducible across implementations. Point `k`
//! (row-major, `k = j * cols + i`) draws two outputs of a SplitMix64 stream
//! whose state starts at `seed + 2k * 0x9E3779B97F4A7C15` (wrapping), that
//! is `x1 = mix(seed + (2k+1) G)` and `x2 = mix(seed + (2k+2) G)`. Each is
//! mapped to `u = (x >> 11) * 2^-53` and combined by Box–Muller,
//! `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`.

use std::fmt::Write as _;
use std::path::Path;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::fit::{elliptical_radius, DomainEllipse};
use crate::kernel::ModelParams;
use crate::solver::h0_value;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Elevation samples on a regular grid, in mm.
///
/// Equality compares geometry, the validity mask and the valid values.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    n_x: usize,
    n_y: usize,
    spacing_x: f64,
    spacing_y: f64,
    origin_x: f64,
    origin_y: f64,
    /// Row-major, `NaN` where invalid.
    z: Vec<f64>,
    valid: Vec<bool>,
}

impl SurfaceMesh {
    /// Build a mesh from row-major elevations. Non-finite values mark
    /// invalid points.
    pub fn new(
        n_x: usize,
        n_y: usize,
        spacing: (f64, f64),
        origin: (f64, f64),
        z: Vec<f64>,
    ) -> Result<Self> {
        if n_x < 3 || n_y < 3 {
            return Err(Error::DimensionMismatch(format!("mesh is {n_x}x{n_y}, need at least 3x3")));
        }
        if z.len() != n_x * n_y {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_x}x{n_y} mesh",
                z.len()
            )));
        }
        let (sx, sy) = spacing;
        if !(sx.is_finite() && sx > 0.0 && sy.is_finite() && sy > 0.0) {
            return Err(Error::domain("SurfaceMesh", format!("spacing ({sx}, {sy}) must be positive")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::domain("SurfaceMesh", "origin must be finite"));
        }
        let valid: Vec<bool> = z.iter().map(|v| v.is_finite()).collect();
        let z = z.into_iter().map(|v| if v.is_finite() { v } else { f64::NAN }).collect();
        let mesh = Self {
            n_x,
            n_y,
            spacing_x: sx,
            spacing_y: sy,
            origin_x: origin.0,
            origin_y: origin.1,
            z,
            valid,
        };
        let interior = (1..n_y - 1).any(|j| (1..n_x - 1).any(|i| mesh.is_valid(i, j)));
        if !interior {
            return Err(Error::DimensionMismatch("mesh has no valid interior point".into()));
        }
        Ok(mesh)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.spacing_x, self.spacing_y)
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin_x + i as f64 * self.spacing_x
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin_y + j as f64 * self.spacing_y
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_x + i
    }

    /// Elevation at column `i`, row `j`; `NaN` when invalid.
    #[inline]
    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z[self.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.index(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// A mesh on the same grid with new values.
    pub fn with_values(&self, z: Vec<f64>) -> Result<Self> {
        Self::new(self.n_x, self.n_y, self.spacing(), self.origin(), z)
    }

    /// Multiply every length (coordinates and elevations) by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.n_x,
            self.n_y,
            (self.spacing_x * factor, self.spacing_y * factor),
            (self.origin_x * factor, self.origin_y * factor),
            self.z.iter().map(|v| v * factor).collect(),
        )
    }
}

impl PartialEq for SurfaceMesh {
    fn eq(&self, other: &Self) -> bool {
        self.n_x == other.n_x
            && self.n_y == other.n_y
            && self.spacing() == other.spacing()
            && self.origin() == other.origin()
            && self.valid == other.valid
            && self
                .z
                .iter()
                .zip(&other.z)
                .zip(&self.valid)
                .all(|((p, q), &ok)| !ok || p == q)
    }
}

fn fmt_value(out: &mut String, v: f64) {
    if v.is_finite() {
        let _ = write!(out, "{v:.16e}");
    } else {
        out.push_str("nan");
    }
}

/// Serialize a mesh in the text format.
pub fn format_mesh(mesh: &SurfaceMesh) -> String {
    let mut out = String::with_capacity(mesh.z.len() * 24 + 128);
    let _ = write!(out, "{} {} ", mesh.n_y, mesh.n_x);
    for (k, v) in [mesh.spacing_x, mesh.spacing_y, mesh.origin_x, mesh.origin_y].into_iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        fmt_value(&mut out, v);
    }
    out.push('\n');
    for row in mesh.z.chunks(mesh.n_x) {
        for (i, &v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            fmt_value(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn write_mesh(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

/// Tokens of a line with their 1-based starting columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let column = offset + start + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((column, tok))
    })
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_value(line: usize, column: usize, tok: &str) -> Result<f64> {
    if tok.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, column, format!("invalid number {tok:?}"))),
    }
}

/// Parse the text format.
pub fn parse_mesh(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let htoks: Vec<(usize, &str)> = tokens(header).collect();
    if htoks.len() != 6 {
        let col = htoks.get(6).map_or(header.len() + 1, |t| t.0);
        return Err(parse_err(hline, col, format!("header needs 6 fields, found {}", htoks.len())));
    }
    let mut dims = [0usize; 2];
    for (k, &(col, tok)) in htoks[..2].iter().enumerate() {
        dims[k] = tok
            .parse()
            .map_err(|_| parse_err(hline, col, format!("invalid count {tok:?}")))?;
    }
    let [rows, cols] = dims;
    let mut geom = [0.0; 4];
    for (k, &(col, tok)) in htoks[2..].iter().enumerate() {
        geom[k] = parse_value(hline, col, tok)?;
        if geom[k].is_nan() {
            return Err(parse_err(hline, col, "header value must be a number"));
        }
    }

    let mut z = Vec::with_capacity(rows * cols);
    let mut n_rows = 0;
    for (lno, line) in lines {
        let mut n = 0;
        for (col, tok) in tokens(line) {
            if n == cols {
                return Err(parse_err(lno, col, format!("row has more than {cols} values")));
            }
            z.push(parse_value(lno, col, tok)?);
            n += 1;
        }
        if n < cols {
            return Err(parse_err(lno, line.len() + 1, format!("row has {n} values, expected {cols}")));
        }
        n_rows += 1;
    }
    if n_rows != rows {
        return Err(Error::DimensionMismatch(format!("header declares {rows} rows, file has {n_rows}")));
    }
    SurfaceMesh::new(cols, rows, (geom[0], geom[1]), (geom[2], geom[3]), z)
}

/// Recipe for a synthetic mesh sampled from the linear model on an
/// elliptical footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub params: ModelParams,
    /// mm
    pub scale_radius: f64,
    pub ellipse: DomainEllipse,
    /// mm
    pub noise_sigma: f64,
    pub seed: u64,
    pub n_x: usize,
    pub n_y: usize,
}

impl SynthSpec {
    /// Noiseless 123x123 mesh on a circular footprint.
    pub fn new(params: ModelParams, scale_radius: f64) -> Self {
        Self {
            params,
            scale_radius,
            ellipse: DomainEllipse::circle(),
            noise_sigma: 0.0,
            seed: 0,
            n_x: 123,
            n_y: 123,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale_radius.is_finite() && self.scale_radius > 0.0) {
            return Err(Error::domain("SynthSpec", "scale_radius must be positive"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::domain("SynthSpec", "noise_sigma must be >= 0"));
        }
        if self.n_x < 3 || self.n_y < 3 {
            return Err(Error::DimensionMismatch(format!(
                "synthetic mesh {}x{} is smaller than 3x3",
                self.n_x, self.n_y
            )));
        }
        Ok(())
    }
}

/// Standard normal deviate for point `k` of the stream.
pub fn gaussian_noise(seed: u64, k: u64) -> f64 {
    let state = seed.wrapping_add(k.wrapping_mul(2).wrapping_mul(GOLDEN_GAMMA));
    let mut rng = SplitMix64::from_seed(state.to_le_bytes());
    let u1 = unit_interval(rng.next_u64());
    let u2 = unit_interval(rng.next_u64());
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_interval(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sample `scale * h0(elliptical radius)` plus noise on an apex-centered
/// grid covering the footprint with a 5% margin. Points outside the
/// footprint are invalid.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SurfaceMesh> {
    spec.validate()?;
    let s = spec.scale_radius;
    let e = &spec.ellipse;
    let half = 1.05 * s * e.semi_axis_x.max(e.semi_axis_y);
    let dx = 2.0 * half / (spec.n_x - 1) as f64;
    let dy = 2.0 * half / (spec.n_y - 1) as f64;
    let mut z = Vec::with_capacity(spec.n_x * spec.n_y);
    for j in 0..spec.n_y {
        let y = -half + j as f64 * dy;
        for i in 0..spec.n_x {
            let x = -half + i as f64 * dx;
            let r = elliptical_radius(x / s, y / s, e);
            if r > 1.0 {
                z.push(f64::NAN);
                continue;
            }
            let mut v = s * h0_value(&spec.params, r);
            if spec.noise_sigma > 0.0 {
                v += spec.noise_sigma * gaussian_noise(spec.seed, (j * spec.n_x + i) as u64);
            }
            z.push(v);
        }
    }
    SurfaceMesh::new(spec.n_x, spec.n_y, (dx, dy), (-half, -half), z)
}
