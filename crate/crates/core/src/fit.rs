//! Calibration of `(a, b)` from apex measurements, elliptical footprints,
//! fitting of the linear model to elevation meshes, and axial-distance maps.
//!
//! Fitting pipeline for a mesh:
//!
//! 1. the apex node is the valid point of maximum elevation;
//! 2. the footprint edge is located by extrapolating elevations to zero
//!    across the valid/invalid boundary along grid lines, an axis-aligned
//!    ellipse is fitted to those points, and the scale radius is the
//!    geometric mean of its semi-axes;
//! 3. apex height, position and curvature come from a least-squares
//!    polynomial (quadratic plus even quartic and sextic terms) in a disk
//!    around the apex node;
//! 4. the domain ellipse is fitted to the level curve at a fraction of the
//!    apex height;
//! 5. `a` and `b` are calibrated from the apex height and radius;
//! 6. the model `S h0(r_e)` is compared to the data.

use nalgebra::{DMatrix, DVector};

use crate::data::SurfaceMesh;
use crate::error::{Error, Result};
use crate::kernel::ModelParams;
use crate::solver::{h0_slope, h0_value};
use crate::special::{i0, i0_minus_one, i1};

pub const DEFAULT_LEVEL_FRACTION: f64 = 0.5;
pub const DEFAULT_APEX_WINDOW: f64 = 0.6;
pub const DEFAULT_GRADIENT_FLOOR: f64 = 1e-8;
pub const DEFAULT_APEX_EXCLUSION: f64 = 0.05;

/// Search bracket for the calibration root.
pub const A_SEARCH_MIN: f64 = 1e-8;
pub const A_SEARCH_MAX: f64 = 100.0;

const CALIBRATION_TOL: f64 = 1e-12;
const MIN_LEVEL_POINTS: usize = 8;

/// Dimensional apex measurements, in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApexMeasurements {
    pub max_deflection: f64,
    pub central_radius: f64,
    pub scale_radius: f64,
}

impl ApexMeasurements {
    pub fn new(max_deflection: f64, central_radius: f64, scale_radius: f64) -> Result<Self> {
        for (name, v) in [
            ("max_deflection", max_deflection),
            ("central_radius", central_radius),
            ("scale_radius", scale_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain("ApexMeasurements", format!("{name} = {v} must be positive")));
            }
        }
        if max_deflection >= scale_radius {
            return Err(Error::domain(
                "ApexMeasurements",
                format!("max_deflection {max_deflection} must be below scale_radius {scale_radius}"),
            ));
        }
        Ok(Self {
            max_deflection,
            central_radius,
            scale_radius,
        })
    }

    /// Apex measurements implied by a model on a given scale.
    pub fn from_model(params: &ModelParams, scale_radius: f64) -> Result<Self> {
        let (h00, rho0) = forward_apex(params)?;
        Self::new(h00 * scale_radius, rho0 * scale_radius, scale_radius)
    }

    pub fn calibrate(&self) -> Result<ModelParams> {
        let h00 = self.max_deflection / self.scale_radius;
        let rho0 = self.central_radius / self.scale_radius;
        let a = calibrate_a(h00, rho0)?;
        ModelParams::new(a, calibrate_b(a, rho0)?)
    }
}

/// Axis-aligned footprint ellipse in nondimensional units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainEllipse {
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
    /// `1 - (min/max)^2`, negative when the y axis is the longer one.
    pub signed_ecc_sq: f64,
}

impl DomainEllipse {
    pub fn new(semi_axis_x: f64, semi_axis_y: f64) -> Result<Self> {
        if !(semi_axis_x.is_finite() && semi_axis_x > 0.0 && semi_axis_y.is_finite() && semi_axis_y > 0.0) {
            return Err(Error::domain(
                "DomainEllipse",
                format!("semi-axes ({semi_axis_x}, {semi_axis_y}) must be positive"),
            ));
        }
        let (lo, hi) = if semi_axis_x < semi_axis_y {
            (semi_axis_x, semi_axis_y)
        } else {
            (semi_axis_y, semi_axis_x)
        };
        let e = 1.0 - (lo / hi).powi(2);
        Ok(Self {
            semi_axis_x,
            semi_axis_y,
            signed_ecc_sq: if semi_axis_y > semi_axis_x { -e } else { e },
        })
    }

    pub fn circle() -> Self {
        Self {
            semi_axis_x: 1.0,
            semi_axis_y: 1.0,
            signed_ecc_sq: 0.0,
        }
    }

    /// The ellipse with unit geometric-mean semi-axis and the given signed
    /// squared eccentricity.
    pub fn from_signed_ecc_sq(signed_ecc_sq: f64) -> Result<Self> {
        if !(signed_ecc_sq.is_finite() && signed_ecc_sq.abs() < 1.0) {
            return Err(Error::domain(
                "DomainEllipse",
                format!("signed squared eccentricity {signed_ecc_sq} must lie in (-1, 1)"),
            ));
        }
        let q = (1.0 - signed_ecc_sq.abs()).sqrt();
        let (long, short) = (q.powf(-0.5), q.sqrt());
        let (rx, ry) = if signed_ecc_sq < 0.0 { (short, long) } else { (long, short) };
        Ok(Self {
            semi_axis_x: rx,
            semi_axis_y: ry,
            signed_ecc_sq,
        })
    }

    /// Rescale so the geometric mean of the semi-axes is 1.
    pub fn normalized(&self) -> Self {
        let g = (self.semi_axis_x * self.semi_axis_y).sqrt();
        Self {
            semi_axis_x: self.semi_axis_x / g,
            semi_axis_y: self.semi_axis_y / g,
            signed_ecc_sq: self.signed_ecc_sq,
        }
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.semi_axis_x * self.semi_axis_y).sqrt()
    }
}

/// `sqrt(x^2 / R1^2 + y^2 / R2^2)`.
pub fn elliptical_radius(x: f64, y: f64, ellipse: &DomainEllipse) -> f64 {
    let u = x / ellipse.semi_axis_x;
    let v = y / ellipse.semi_axis_y;
    u.hypot(v)
}

/// Nondimensional apex height `h0(0)` and central radius `rho(0)` of the
/// linear model.
pub fn forward_apex(params: &ModelParams) -> Result<(f64, f64)> {
    if params.b() <= 0.0 {
        return Err(Error::domain("forward_apex", "b must be positive"));
    }
    Ok((h0_value(params, 0.0), 2.0 * i0(params.sqrt_a()) / params.b()))
}

/// `b = 2 I0(sqrt a) / rho0`.
pub fn calibrate_b(a: f64, rho0_nondim: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain("calibrate_b", format!("a = {a} must be positive")));
    }
    if !(rho0_nondim.is_finite() && rho0_nondim > 0.0) {
        return Err(Error::domain("calibrate_b", format!("rho0 = {rho0_nondim} must be positive")));
    }
    Ok(2.0 * i0(a.sqrt()) / rho0_nondim)
}

/// Smallest positive root of `g(a) = h00 rho0 a / 2 - I0(sqrt a) + 1`.
pub fn calibrate_a(h00_nondim: f64, rho0_nondim: f64) -> Result<f64> {
    for (name, v) in [("h00", h00_nondim), ("rho0", rho0_nondim)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain("calibrate_a", format!("{name} = {v} must be positive")));
        }
    }
    let slope = 0.5 * h00_nondim * rho0_nondim;
    let g = |a: f64| slope * a - i0_minus_one(a.sqrt());
    let dg = |a: f64| {
        let s = a.sqrt();
        slope - 0.5 * i1(s) / s
    };

    // g(0) = 0, so the trivial root is skipped by scanning from the lower
    // end of the bracket for the first sign change.
    const SCAN: usize = 400;
    let ratio = (A_SEARCH_MAX / A_SEARCH_MIN).powf(1.0 / SCAN as f64);
    let mut lo = A_SEARCH_MIN;
    let mut g_lo = g(lo);
    let mut hi = f64::NAN;
    for k in 1..=SCAN {
        let a = if k == SCAN { A_SEARCH_MAX } else { A_SEARCH_MIN * ratio.powi(k as i32) };
        let ga = g(a);
        if ga == 0.0 {
            return Ok(a);
        }
        if ga.signum() != g_lo.signum() {
            hi = a;
            break;
        }
        lo = a;
        g_lo = ga;
    }
    if hi.is_nan() {
        return Err(Error::NoRoot {
            lo: A_SEARCH_MIN,
            hi: A_SEARCH_MAX,
            detail: format!("h0(0) rho(0) = {} admits no positive a", h00_nondim * rho0_nondim),
        });
    }

    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ga = g(a);
        if ga.abs() <= CALIBRATION_TOL {
            return Ok(a);
        }
        if ga.signum() == g_lo.signum() {
            lo = a;
        } else {
            hi = a;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(a);
        }
        let newton = a - ga / dg(a);
        a = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::NoConvergence {
        method: "calibrate_a",
        iterations: 200,
        last_change: hi - lo,
    })
}

fn least_squares(rows: usize, cols: usize, design: Vec<f64>, rhs: Vec<f64>) -> Option<Vec<f64>> {
    if rows < cols {
        return None;
    }
    let m = DMatrix::from_row_slice(rows, cols, &design);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= 1e-12 * smax {
        return None;
    }
    svd.solve(&DVector::from_vec(rhs), 0.0).ok().map(|x| x.as_slice().to_vec())
}

/// Least-squares `u X^2 + v Y^2 = 1` through points relative to `center`.
fn fit_centered_ellipse(points: &[(f64, f64)], center: (f64, f64)) -> Result<(f64, f64)> {
    if points.len() < MIN_LEVEL_POINTS {
        return Err(Error::DegenerateLevelSet(format!(
            "{} contour points, need at least {MIN_LEVEL_POINTS}",
            points.len()
        )));
    }
    let mut design = Vec::with_capacity(2 * points.len());
    for &(x, y) in points {
        let (dx, dy) = (x - center.0, y - center.1);
        design.push(dx * dx);
        design.push(dy * dy);
    }
    let uv = least_squares(points.len(), 2, design, vec![1.0; points.len()])
        .ok_or_else(|| Error::DegenerateLevelSet("contour points do not determine an ellipse".into()))?;
    if !(uv[0] > 0.0 && uv[1] > 0.0) {
        return Err(Error::DegenerateLevelSet(format!(
            "fitted conic coefficients ({}, {}) are not an ellipse",
            uv[0], uv[1]
        )));
    }
    Ok((uv[0].sqrt().recip(), uv[1].sqrt().recip()))
}

/// Points where the mesh crosses `level`, by linear interpolation along
/// grid edges joining two valid points.
pub fn level_curve_points(mesh: &SurfaceMesh, level: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let mut edge = |z0: f64, z1: f64, p0: (f64, f64), p1: (f64, f64)| {
        let (d0, d1) = (z0 - level, z1 - level);
        if d0 == 0.0 {
            pts.push(p0);
        } else if d0 * d1 < 0.0 {
            let t = d0 / (d0 - d1);
            pts.push((p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1)));
        }
    };
    for j in 0..mesh.n_y() {
        for i in 0..mesh.n_x() {
            if !mesh.is_valid(i, j) {
                continue;
            }
            let p = (mesh.x(i), mesh.y(j));
            if i + 1 < mesh.n_x() && mesh.is_valid(i + 1, j) {
                edge(mesh.z(i, j), mesh.z(i + 1, j), p, (mesh.x(i + 1), p.1));
            }
            if j + 1 < mesh.n_y() && mesh.is_valid(i, j + 1) {
                edge(mesh.z(i, j), mesh.z(i, j + 1), p, (p.0, mesh.y(j + 1)));
            }
        }
    }
    pts
}

/// Fit the domain ellipse to the level curve at `level_fraction` of the
/// maximum elevation, centered on the maximum-elevation node.
pub fn estimate_ellipse(mesh: &SurfaceMesh, level_fraction: f64) -> Result<DomainEllipse> {
    let (i, j) = apex_node(mesh)?;
    ellipse_at_level(mesh, level_fraction * mesh.z(i, j), (mesh.x(i), mesh.y(j)), level_fraction)
}

fn ellipse_at_level(mesh: &SurfaceMesh, level: f64, center: (f64, f64), fraction: f64) -> Result<DomainEllipse> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain("estimate_ellipse", format!("level fraction {fraction} not in (0, 1)")));
    }
    let pts = level_curve_points(mesh, level);
    let (rx, ry) = fit_centered_ellipse(&pts, center)?;
    Ok(DomainEllipse::new(rx, ry)?.normalized())
}

/// Root of the parabola through three samples at offsets 0, 1, 2 cells
/// inward from an edge node, as a distance outward from that node in cells.
fn edge_crossing(z0: f64, z1: f64, z2: f64) -> Option<f64> {
    // p(t) = z0 + s t + c t^2 with t measured outward.
    let c = 0.5 * (z2 - 2.0 * z1 + z0);
    let s = z0 - z1 + c;
    if !(z0 >= 0.0 && s < 0.0) {
        return None;
    }
    let disc = s * s - 4.0 * c * z0;
    let t = if disc >= 0.0 { 2.0 * z0 / (disc.sqrt() - s) } else { -z0 / s };
    Some(t.clamp(0.0, 1.0))
}

/// Estimated zero crossings of the elevation just outside the valid
/// footprint.
pub fn footprint_edge_points(mesh: &SurfaceMesh) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let (dx, dy) = mesh.spacing();
    let (nx, ny) = (mesh.n_x() as isize, mesh.n_y() as isize);
    let valid = |i: isize, j: isize| i >= 0 && j >= 0 && i < nx && j < ny && mesh.is_valid(i as usize, j as usize);
    let z = |i: isize, j: isize| mesh.z(i as usize, j as usize);
    for j in 0..ny {
        for i in 0..nx {
            if !valid(i, j) {
                continue;
            }
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (oi, oj) = (i + di, j + dj);
                if oi < 0 || oj < 0 || oi >= nx || oj >= ny || valid(oi, oj) {
                    continue;
                }
                if !(valid(i - di, j - dj) && valid(i - 2 * di, j - 2 * dj)) {
                    continue;
                }
                if let Some(t) = edge_crossing(z(i, j), z(i - di, j - dj), z(i - 2 * di, j - 2 * dj)) {
                    let x = mesh.x(i as usize) + t * di as f64 * dx;
                    let y = mesh.y(j as usize) + t * dj as f64 * dy;
                    pts.push((x, y));
                }
            }
        }
    }
    pts
}

/// Valid node of maximum elevation, required to be positive and surrounded
/// by valid points.
pub fn apex_node(mesh: &SurfaceMesh) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut lowest = f64::INFINITY;
    for j in 0..mesh.n_y() {
        for i in 0..mesh.n_x() {
            if !mesh.is_valid(i, j) {
                continue;
            }
            let z = mesh.z(i, j);
            lowest = lowest.min(z);
            if best.is_none_or(|b| z > b.2) {
                best = Some((i, j, z));
            }
        }
    }
    let (i, j, zmax) = best.ok_or_else(|| Error::ApexNotFound("mesh has no valid points".into()))?;
    if !(zmax > 0.0) || zmax - lowest <= 1e-12 * zmax.abs() {
        return Err(Error::ApexNotFound(format!("mesh is flat or nonpositive (max elevation {zmax})")));
    }
    let interior = i > 0
        && j > 0
        && i + 1 < mesh.n_x()
        && j + 1 < mesh.n_y()
        && (j - 1..=j + 1).all(|jj| (i - 1..=i + 1).all(|ii| mesh.is_valid(ii, jj)));
    if !interior {
        return Err(Error::ApexNotFound(format!(
            "maximum elevation at ({}, {}) lies on the footprint boundary",
            mesh.x(i),
            mesh.y(j)
        )));
    }
    Ok((i, j))
}

/// Local polynomial fit around the apex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApexFit {
    /// Position of the stationary point, mm.
    pub x: f64,
    pub y: f64,
    /// Height at the stationary point, mm.
    pub height: f64,
    /// Second-order coefficients of `z` in `X^2`, `Y^2`, `XY`.
    pub cxx: f64,
    pub cyy: f64,
    pub cxy: f64,
    pub n_points: usize,
}

impl ApexFit {
    /// Reciprocal mean curvature, mm.
    pub fn mean_radius(&self) -> f64 {
        -1.0 / (self.cxx + self.cyy)
    }
}

/// Fit `c0 + cx X + cy Y + cxx X^2 + cxy XY + cyy Y^2` plus all even quartic
/// and sextic monomials in `X`, `Y` to the valid points within `radius` of
/// the apex node.
pub fn fit_apex(mesh: &SurfaceMesh, node: (usize, usize), radius: f64) -> Result<ApexFit> {
    const NC: usize = 13;
    let (x0, y0) = (mesh.x(node.0), mesh.y(node.1));
    let mut design = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..mesh.n_y() {
        let v = (mesh.y(j) - y0) / radius;
        if v.abs() > 1.0 {
            continue;
        }
        for i in 0..mesh.n_x() {
            let u = (mesh.x(i) - x0) / radius;
            if u * u + v * v > 1.0 || !mesh.is_valid(i, j) {
                continue;
            }
            let (uu, vv) = (u * u, v * v);
            design.extend_from_slice(&[
                1.0,
                u,
                v,
                uu,
                u * v,
                vv,
                uu * uu,
                uu * vv,
                vv * vv,
                uu * uu * uu,
                uu * uu * vv,
                uu * vv * vv,
                vv * vv * vv,
            ]);
            rhs.push(mesh.z(i, j));
        }
    }
    let n = rhs.len();
    let c = least_squares(n, NC, design, rhs).ok_or_else(|| {
        Error::ApexNotFound(format!("{n} points within {radius} mm of the apex cannot fix a local fit"))
    })?;
    let w2 = radius * radius;
    let (cx, cy) = (c[1] / radius, c[2] / radius);
    let (cxx, cxy, cyy) = (c[3] / w2, c[4] / w2, c[5] / w2);
    // Stationary point of the quadratic part.
    let det = 4.0 * cxx * cyy - cxy * cxy;
    if !(cxx < 0.0 && cyy < 0.0 && det > 0.0) {
        return Err(Error::ApexNotFound("elevation is not locally concave at the maximum".into()));
    }
    let ox = (-2.0 * cyy * cx + cxy * cy) / det;
    let oy = (cxy * cx - 2.0 * cxx * cy) / det;
    if ox.hypot(oy) > 0.5 * radius {
        return Err(Error::ApexNotFound(format!(
            "fitted apex is ({ox}, {oy}) mm away from the highest node"
        )));
    }
    Ok(ApexFit {
        x: x0 + ox,
        y: y0 + oy,
        height: c[0] + 0.5 * (cx * ox + cy * oy),
        cxx,
        cyy,
        cxy,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fraction of the apex height whose level curve fixes the ellipse.
    pub level_fraction: f64,
    /// Radius of the apex fit window, as a fraction of the scale radius.
    pub apex_window: f64,
    /// Gradient norm below which axial distance is undefined.
    pub gradient_floor: f64,
    /// Radius around the apex excluded from axial-distance errors, as a
    /// fraction of the scale radius.
    pub apex_exclusion: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            level_fraction: DEFAULT_LEVEL_FRACTION,
            apex_window: DEFAULT_APEX_WINDOW,
            gradient_floor: DEFAULT_GRADIENT_FLOOR,
            apex_exclusion: DEFAULT_APEX_EXCLUSION,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        let checks = [
            ("level_fraction", self.level_fraction, self.level_fraction > 0.0 && self.level_fraction < 1.0),
            ("apex_window", self.apex_window, self.apex_window > 0.0 && self.apex_window <= 1.0),
            ("gradient_floor", self.gradient_floor, self.gradient_floor >= 0.0),
            ("apex_exclusion", self.apex_exclusion, self.apex_exclusion >= 0.0 && self.apex_exclusion < 1.0),
        ];
        for (name, v, ok) in checks {
            if !(ok && v.is_finite()) {
                return Err(Error::domain("FitOptions", format!("{name} = {v} out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub ellipse: DomainEllipse,
    /// mm
    pub scale_radius: f64,
    /// Fitted apex position, mm.
    pub apex_x: f64,
    pub apex_y: f64,
    pub measurements: ApexMeasurements,
    pub mean_abs_error_mm: f64,
    /// Mean absolute error over the measured apex height.
    pub mean_rel_error: f64,
    pub axial_mean_abs_error_mm: f64,
    /// Mean absolute axial error over the mean measured axial distance.
    pub axial_mean_rel_error: f64,
    pub n_points_used: usize,
    pub axial_points_used: usize,
}

impl FitResult {
    /// Model elevation at mesh coordinates, mm.
    pub fn model_elevation(&self, x: f64, y: f64) -> f64 {
        let s = self.scale_radius;
        let r = elliptical_radius((x - self.apex_x) / s, (y - self.apex_y) / s, &self.ellipse);
        s * h0_value(&self.params, r)
    }

    pub fn model_source(&self) -> SurfaceSource<'static> {
        SurfaceSource::Model {
            params: self.params,
            scale_radius: self.scale_radius,
            center: (self.apex_x, self.apex_y),
        }
    }
}

/// Fit the linear model to an elevation mesh.
pub fn fit_mesh(mesh: &SurfaceMesh, options: &FitOptions) -> Result<FitResult> {
    options.validate()?;
    let node = apex_node(mesh)?;
    let edge = footprint_edge_points(mesh);
    let (fx, fy) = fit_centered_ellipse(&edge, (mesh.x(node.0), mesh.y(node.1)))?;
    let first_scale = (fx * fy).sqrt();

    let apex = fit_apex(mesh, node, options.apex_window * first_scale)?;
    let center = (apex.x, apex.y);
    let (fx, fy) = fit_centered_ellipse(&edge, center)?;
    let scale_radius = (fx * fy).sqrt();

    let ellipse = ellipse_at_level(
        mesh,
        options.level_fraction * apex.height,
        center,
        options.level_fraction,
    )?;
    // For h0(r_e), cxx + cyy = h0''(0) (1/R1^2 + 1/R2^2) / 2.
    let stretch = 0.5 * (ellipse.semi_axis_x.powi(-2) + ellipse.semi_axis_y.powi(-2));
    let measurements = ApexMeasurements::new(apex.height, stretch * apex.mean_radius(), scale_radius)?;
    let params = measurements.calibrate()?;

    let mut fit = FitResult {
        params,
        ellipse,
        scale_radius,
        apex_x: apex.x,
        apex_y: apex.y,
        measurements,
        mean_abs_error_mm: 0.0,
        mean_rel_error: 0.0,
        axial_mean_abs_error_mm: 0.0,
        axial_mean_rel_error: 0.0,
        n_points_used: 0,
        axial_points_used: 0,
    };

    let errors = fit_error_values(mesh, &fit);
    let (sum, n) = errors
        .iter()
        .filter(|e| e.is_finite())
        .fold((0.0, 0usize), |(s, n), e| (s + e, n + 1));
    fit.n_points_used = n;
    fit.mean_abs_error_mm = sum / n as f64;
    fit.mean_rel_error = fit.mean_abs_error_mm / apex.height;

    let data = axial_distance_map(&SurfaceSource::Mesh(mesh), &ellipse, mesh, options.gradient_floor);
    let model = axial_distance_map(&fit.model_source(), &ellipse, mesh, options.gradient_floor);
    let stats = axial_errors(mesh, &data, &model, center, options.apex_exclusion * scale_radius);
    fit.axial_mean_abs_error_mm = stats.mean_abs;
    fit.axial_mean_rel_error = stats.mean_rel;
    fit.axial_points_used = stats.n_points;
    Ok(fit)
}

/// `|z - model|` per point, `NaN` where the mesh is invalid.
pub fn fit_error_values(mesh: &SurfaceMesh, fit: &FitResult) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.n_x() * mesh.n_y());
    for j in 0..mesh.n_y() {
        for i in 0..mesh.n_x() {
            out.push(if mesh.is_valid(i, j) {
                (mesh.z(i, j) - fit.model_elevation(mesh.x(i), mesh.y(j))).abs()
            } else {
                f64::NAN
            });
        }
    }
    out
}

/// Per-point absolute fitting error on the mesh grid.
pub fn fit_error_grid(mesh: &SurfaceMesh, fit: &FitResult) -> Result<SurfaceMesh> {
    mesh.with_values(fit_error_values(mesh, fit))
}

/// Surface whose axial distance is mapped.
#[derive(Debug, Clone, Copy)]
pub enum SurfaceSource<'a> {
    /// Measured elevations, differentiated numerically. The apex is taken
    /// at the grid origin of coordinates `(0, 0)` unless a fit says
    /// otherwise; see [`SurfaceSource::MeshAt`].
    Mesh(&'a SurfaceMesh),
    /// Measured elevations with an explicit apex position, mm.
    MeshAt(&'a SurfaceMesh, (f64, f64)),
    /// The fitted model `S h0(r_e)`, differentiated analytically.
    Model {
        params: ModelParams,
        scale_radius: f64,
        center: (f64, f64),
    },
}

/// Axial distance per grid point, mm; `NaN` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialMap {
    pub n_x: usize,
    pub n_y: usize,
    pub values: Vec<f64>,
}

impl AxialMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_x + i]
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    /// The map as a mesh on the given grid.
    pub fn to_mesh(&self, grid: &SurfaceMesh) -> Result<SurfaceMesh> {
        grid.with_values(self.values.clone())
    }
}

// Five-point first-derivative weights (times 12) for the derivative at
// stencil position p = 0..4.
const FIVE_POINT: [[f64; 5]; 5] = [
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
    [1.0, -8.0, 0.0, 8.0, -1.0],
    [-1.0, 6.0, -18.0, 10.0, 3.0],
    [3.0, -16.0, 36.0, -48.0, 25.0],
];

/// Derivative along a grid line at index `i`, using the most central
/// five-point stencil that fits inside the valid run, else three points.
fn line_derivative(value: impl Fn(isize) -> Option<f64>, i: isize, h: f64) -> Option<f64> {
    let window = |start: isize, len: isize| -> Option<Vec<f64>> { (start..start + len).map(&value).collect() };
    for p in [2, 1, 3, 0, 4] {
        if let Some(w) = window(i - p, 5) {
            let s: f64 = FIVE_POINT[p as usize].iter().zip(&w).map(|(c, z)| c * z).sum();
            return Some(s / (12.0 * h));
        }
    }
    if let Some(w) = window(i - 1, 3) {
        return Some((w[2] - w[0]) / (2.0 * h));
    }
    if let Some(w) = window(i, 3) {
        return Some((-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h));
    }
    if let Some(w) = window(i - 2, 3) {
        return Some((w[0] - 4.0 * w[1] + 3.0 * w[2]) / (2.0 * h));
    }
    None
}

fn axial_from_gradient(x: f64, y: f64, gx: f64, gy: f64, floor: f64) -> f64 {
    let g2 = gx * gx + gy * gy;
    if !(g2.sqrt() >= floor) || g2 == 0.0 {
        return f64::NAN;
    }
    x.hypot(y) * (1.0 + 1.0 / g2).sqrt()
}

/// `d = sqrt(X^2 + Y^2) sqrt(1 + 1/|grad h|^2)` at every valid point of
/// `grid`, with `(X, Y)` measured from the apex. Points whose gradient
/// norm is below `gradient_floor` are undefined. The ellipse is used only by
/// model sources.
pub fn axial_distance_map(
    source: &SurfaceSource<'_>,
    ellipse: &DomainEllipse,
    grid: &SurfaceMesh,
    gradient_floor: f64,
) -> AxialMap {
    let (nx, ny) = (grid.n_x(), grid.n_y());
    let mut values = vec![f64::NAN; nx * ny];
    match *source {
        SurfaceSource::Mesh(mesh) | SurfaceSource::MeshAt(mesh, _) => {
            let center = match *source {
                SurfaceSource::MeshAt(_, c) => c,
                _ => (0.0, 0.0),
            };
            let (dx, dy) = mesh.spacing();
            let at = |i: isize, j: isize| -> Option<f64> {
                let inside = i >= 0 && j >= 0 && (i as usize) < mesh.n_x() && (j as usize) < mesh.n_y();
                (inside && mesh.is_valid(i as usize, j as usize)).then(|| mesh.z(i as usize, j as usize))
            };
            for j in 0..mesh.n_y().min(ny) {
                for i in 0..mesh.n_x().min(nx) {
                    if !mesh.is_valid(i, j) {
                        continue;
                    }
                    let (ii, jj) = (i as isize, j as isize);
                    let gx = line_derivative(|k| at(k, jj), ii, dx);
                    let gy = line_derivative(|k| at(ii, k), jj, dy);
                    if let (Some(gx), Some(gy)) = (gx, gy) {
                        values[j * nx + i] =
                            axial_from_gradient(mesh.x(i) - center.0, mesh.y(j) - center.1, gx, gy, gradient_floor);
                    }
                }
            }
        }
        SurfaceSource::Model {
            params,
            scale_radius,
            center,
        } => {
            let s = scale_radius;
            let (r1, r2) = (ellipse.semi_axis_x, ellipse.semi_axis_y);
            for j in 0..ny {
                for i in 0..nx {
                    if !grid.is_valid(i, j) {
                        continue;
                    }
                    let (x, y) = (grid.x(i) - center.0, grid.y(j) - center.1);
                    let re = elliptical_radius(x / s, y / s, ellipse);
                    if re == 0.0 {
                        continue;
                    }
                    let d = h0_slope(&params, re) / (s * re);
                    let (gx, gy) = (d * x / (r1 * r1), d * y / (r2 * r2));
                    values[j * nx + i] = axial_from_gradient(x, y, gx, gy, gradient_floor);
                }
            }
        }
    }
    AxialMap { n_x: nx, n_y: ny, values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialErrorStats {
    pub mean_abs: f64,
    pub mean_rel: f64,
    pub n_points: usize,
}

/// Mean `|d_data - d_model|` over points defined in both maps and farther
/// than `exclusion_radius` (mm) from `center`.
pub fn axial_errors(
    grid: &SurfaceMesh,
    data: &AxialMap,
    model: &AxialMap,
    center: (f64, f64),
    exclusion_radius: f64,
) -> AxialErrorStats {
    let (mut abs, mut total, mut n) = (0.0, 0.0, 0usize);
    for j in 0..grid.n_y() {
        for i in 0..grid.n_x() {
            let (d, m) = (data.get(i, j), model.get(i, j));
            if !(d.is_finite() && m.is_finite()) {
                continue;
            }
            if (grid.x(i) - center.0).hypot(grid.y(j) - center.1) <= exclusion_radius {
                continue;
            }
            abs += (d - m).abs();
            total += d;
            n += 1;
        }
    }
    if n == 0 {
        return AxialErrorStats {
            mean_abs: f64::NAN,
            mean_rel: f64::NAN,
            n_points: 0,
        };
    }
    AxialErrorStats {
        mean_abs: abs / n as f64,
        mean_rel: abs / total,
        n_points: n,
    }
}

/// `|d_data - d_model|` per grid point, `NaN` where either is undefined.
pub fn axial_error_values(data: &AxialMap, model: &AxialMap) -> Vec<f64> {
    data.values
        .iter()
        .zip(&model.values)
        .map(|(d, m)| if d.is_finite() && m.is_finite() { (d - m).abs() } else { f64::NAN })
        .collect()
}
