//! Radial boundary value problem
//!
//! ```text
//! -(1/r) (r h')' + a h = b / sqrt(1 + h'^2),   0 <= r <= 1,
//! h'(0) = 0,  h(1) = 0,
//! ```
//!
//! solved by Picard iteration on its Green's-function integral form, started
//! from the closed-form solution `h0` of the problem with unit forcing.
//!
//! Both integrals of a Picard step are evaluated for every node at once with
//! cumulative prefix and suffix sums of a product trapezoidal rule on the
//! uniform grid, so a step costs O(n). An independent finite-difference discretization solved by
//! damped Newton ([`fd_oracle`]) is provided for cross-checking.

use crate::error::{Error, Result};
use crate::kernel::{admissibility, AdmissibilityReport, Kernel, ModelParams};
use crate::special::{i0_minus_one, i1};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_NODES: usize = 401;

/// Slack allowed for quadrature error when checking the envelope.
pub const ENVELOPE_SLACK: f64 = 1e-9;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 30;

/// `P(x) = 1 / sqrt(1 + x^2)`, the vertical projection of the unit normal.
#[inline]
pub fn normal_projection(slope: f64) -> f64 {
    1.0 / (1.0 + slope * slope).sqrt()
}

/// Uniform grid `0 = r_0 < r_1 < ... < r_{n-1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::domain("RadialGrid", format!("need at least 3 nodes, got {n_nodes}")));
        }
        let last = (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 / last).collect();
        nodes[n_nodes - 1] = 1.0;
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.nodes.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Elevation `h` and slope `h'` sampled on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
}

impl RadialProfile {
    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            grid: grid.clone(),
            h: vec![0.0; grid.len()],
            dh: vec![0.0; grid.len()],
        }
    }

    pub fn sup_diff(&self, other: &RadialProfile) -> f64 {
        sup_abs_diff(&self.h, &other.h)
    }

    pub fn sup_diff_slope(&self, other: &RadialProfile) -> f64 {
        sup_abs_diff(&self.dh, &other.dh)
    }

    pub fn sup_norm(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn sup_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once `||h_n - h_{n-1}||_inf <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Refuse parameters outside the contraction region instead of iterating
    /// anyway.
    pub enforce_bound: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            enforce_bound: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub profile: RadialProfile,
    /// First Picard iterate `h_1`, the lower envelope's shape.
    pub first_iterate: RadialProfile,
    pub iterations: usize,
    /// `||h_n - h_{n-1}||_inf` of the last step.
    pub final_sup_diff: f64,
    /// `||h_k - h_{k-1}||_inf` for k = 1..=iterations.
    pub sup_diff_history: Vec<f64>,
    pub residual_sup: f64,
    /// `None` when `b` is outside the envelope hypothesis.
    pub envelope_ok: Option<bool>,
    pub envelope_constant_a: f64,
    pub admissibility: AdmissibilityReport,
}

/// Closed-form zeroth iterate `h0(r) = (b/a)(1 - I0(sqrt(a) r) / I0(sqrt a))`
/// with `h0'(r) = -(b / sqrt a) I1(sqrt(a) r) / I0(sqrt a)`.
pub fn h0_profile(params: &ModelParams, grid: &RadialGrid) -> RadialProfile {
    let n = grid.len();
    let mut h = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for &r in grid.nodes() {
        h.push(h0_value(params, r));
        dh.push(h0_slope(params, r));
    }
    h[n - 1] = 0.0;
    dh[0] = 0.0;
    RadialProfile {
        grid: grid.clone(),
        h,
        dh,
    }
}

/// `h0` at any `r >= 0`; negative beyond `r = 1`.
pub fn h0_value(params: &ModelParams, r: f64) -> f64 {
    let s = params.sqrt_a();
    let top = i0_minus_one(s);
    params.b() / params.a() * (top - i0_minus_one(s * r)) / (1.0 + top)
}

pub fn h0_slope(params: &ModelParams, r: f64) -> f64 {
    let s = params.sqrt_a();
    -params.b() / s * i1(s * r) / (1.0 + i0_minus_one(s))
}

/// The Picard map on a fixed grid, with kernel values cached per node.
#[derive(Debug, Clone)]
pub struct PicardOperator {
    grid: RadialGrid,
    params: ModelParams,
    /// `b / I0(sqrt a)`.
    scale: f64,
    v0: Vec<f64>,
    v1: Vec<f64>,
    dv0: Vec<f64>,
    dv1: Vec<f64>,
    /// `int t v0(t) dt` over cell `[r_j, r_{j+1}]`.
    v0_moments: Vec<f64>,
    /// `int t v1(t) dt` over cell `[r_j, r_{j+1}]`.
    v1_moments: Vec<f64>,
}

impl PicardOperator {
    pub fn new(params: &ModelParams, grid: &RadialGrid) -> Self {
        let kernel = Kernel::new(params.a());
        let n = grid.len();
        let mut v0 = Vec::with_capacity(n);
        let mut v1 = Vec::with_capacity(n);
        let mut dv0 = Vec::with_capacity(n);
        let mut dv1 = Vec::with_capacity(n);
        for (i, &r) in grid.nodes().iter().enumerate() {
            v0.push(kernel.v0(r));
            dv0.push(kernel.dv0(r));
            if i == 0 {
                // Singular at the origin; every use is multiplied by a factor
                // that vanishes faster.
                v1.push(0.0);
                dv1.push(0.0);
            } else {
                v1.push(kernel.v1(r));
                dv1.push(kernel.dv1(r));
            }
        }
        // Antiderivatives t v'(t) / a; at the origin t v0'(t) = 0 and
        // t v1'(t) -> -I0(sqrt a).
        let a = params.a();
        let anti0: Vec<f64> = grid.nodes().iter().zip(&dv0).map(|(r, d)| r * d / a).collect();
        let anti1: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&dv1)
            .enumerate()
            .map(|(i, (r, d))| if i == 0 { -kernel.i0_at_1 / a } else { r * d / a })
            .collect();
        let v0_moments = anti0.windows(2).map(|w| w[1] - w[0]).collect();
        let v1_moments = anti1.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            grid: grid.clone(),
            params: *params,
            scale: params.b() / kernel.i0_at_1,
            v0,
            v1,
            dv0,
            dv1,
            v0_moments,
            v1_moments,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Apply the integral operator to a forcing sampled at the nodes.
    pub fn apply_forcing(&self, forcing: &[f64]) -> Result<RadialProfile> {
        let n = self.grid.len();
        debug_assert_eq!(forcing.len(), n);
        if let Some(i) = forcing.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                op: "picard_step",
                detail: format!("non-finite forcing at node {i}"),
            });
        }
        let (inner, outer) = self.cumulative_integrals(forcing);

        let c = self.scale;
        let mut h = vec![0.0; n];
        let mut dh = vec![0.0; n];
        h[0] = c * self.v0[0] * outer[0];
        for i in 1..n - 1 {
            h[i] = c * (self.v0[i] * outer[i] + self.v1[i] * inner[i]);
            dh[i] = c * (self.dv0[i] * outer[i] + self.dv1[i] * inner[i]);
        }
        dh[n - 1] = c * self.dv1[n - 1] * inner[n - 1];
        Ok(RadialProfile {
            grid: self.grid.clone(),
            h,
            dh,
        })
    }

    /// `inner[i] = int_0^{r_i} t v0(t) p(t) dt` and
    /// `outer[i] = int_{r_i}^1 t v1(t) p(t) dt`, with `p` the forcing.
    ///
    /// Product trapezoidal rule: on each cell the kernel factor is integrated
    /// exactly, using `int t v(t) dt = t v'(t) / a` for both kernels, and the
    /// forcing is replaced by its two-node average. This keeps the
    /// logarithmic singularity of `v1` out of the quadrature error.
    fn cumulative_integrals(&self, forcing: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let mut inner = vec![0.0; n];
        for i in 1..n {
            let avg = 0.5 * (forcing[i - 1] + forcing[i]);
            inner[i] = inner[i - 1] + self.v0_moments[i - 1] * avg;
        }
        let mut outer = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let avg = 0.5 * (forcing[i] + forcing[i + 1]);
            outer[i] = outer[i + 1] + self.v1_moments[i] * avg;
        }
        (inner, outer)
    }

    /// One Picard step: forcing `P(h'_{n-1})`.
    pub fn step(&self, prev: &RadialProfile) -> Result<RadialProfile> {
        let forcing: Vec<f64> = prev.dh.iter().map(|&s| normal_projection(s)).collect();
        self.apply_forcing(&forcing)
    }

    /// Quadrature of `int_0^1 |F(r_i, t)| dt` and `int_0^1 |G(r_i, t)| dt` at
    /// every node.
    pub fn kernel_masses(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        // With unit forcing both parts of F are nonnegative, and the two
        // parts of G have opposite signs.
        let (inner, outer) = self.cumulative_integrals(&vec![1.0; n]);
        let f_mass = (0..n)
            .map(|i| self.scale * (self.v0[i] * outer[i] + self.v1[i] * inner[i]))
            .collect();
        let g_mass = (0..n)
            .map(|i| self.scale * (self.dv0[i] * outer[i] - self.dv1[i] * inner[i]))
            .collect();
        (f_mass, g_mass)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

pub fn picard_step(params: &ModelParams, prev: &RadialProfile) -> Result<RadialProfile> {
    PicardOperator::new(params, &prev.grid).step(prev)
}

pub fn solve(params: &ModelParams, grid: &RadialGrid, options: &SolveOptions) -> Result<SolveReport> {
    if !(options.tol > 0.0) {
        return Err(Error::domain("solve", format!("tol = {} must be > 0", options.tol)));
    }
    let adm = admissibility(params);
    if options.enforce_bound && !adm.theorem1_ok {
        return Err(Error::BoundViolation {
            a: params.a(),
            b: params.b(),
            b_max: adm.theorem1_b_max,
        });
    }

    let op = PicardOperator::new(params, grid);
    let mut current = h0_profile(params, grid);
    let mut first_iterate = None;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        let next = op.step(&current)?;
        let diff = next.sup_diff(&current);
        history.push(diff);
        if first_iterate.is_none() {
            first_iterate = Some(next.clone());
        }
        current = next;
        if diff <= options.tol {
            converged = true;
            break;
        }
    }
    let final_sup_diff = history.last().copied().unwrap_or(f64::INFINITY);
    if !converged {
        return Err(Error::NoConvergence {
            method: "picard",
            iterations: history.len(),
            last_change: final_sup_diff,
        });
    }
    let first_iterate = first_iterate.expect("at least one iteration");

    let envelope_constant_a = envelope_constant(params);
    let envelope_ok = adm
        .lemma_ok
        .then(|| envelope_holds(params, &current, &first_iterate, envelope_constant_a));

    Ok(SolveReport {
        residual_sup: residual_sup(params, &current),
        profile: current,
        first_iterate,
        iterations: history.len(),
        final_sup_diff,
        sup_diff_history: history,
        envelope_ok,
        envelope_constant_a,
        admissibility: adm,
    })
}

/// Largest absolute residual of the differential equation over the nodes,
/// with derivatives of `h` taken by centered differences. The origin uses
/// the limit `-2 h''(0) + a h(0) = b`; the boundary node `r = 1` is skipped.
pub fn residual_sup(params: &ModelParams, profile: &RadialProfile) -> f64 {
    let h = &profile.h;
    let n = h.len();
    let dr = profile.grid.spacing();
    let dr2 = dr * dr;
    let (a, b) = (params.a(), params.b());
    // Mirror symmetry h(-dr) = h(dr) at the origin.
    let mut worst = (-4.0 * (h[1] - h[0]) / dr2 + a * h[0] - b).abs();
    for i in 1..n - 1 {
        let r = profile.grid.nodes()[i];
        let second = (h[i + 1] - 2.0 * h[i] + h[i - 1]) / dr2;
        let first = (h[i + 1] - h[i - 1]) / (2.0 * dr);
        let res = -second - first / r + a * h[i] - b * normal_projection(first);
        worst = worst.max(res.abs());
    }
    worst
}

/// `A = (1 + h0'(1)^2) / (1 + (2 - 1/I0(sqrt a)) h0'(1)^2)`.
pub fn envelope_constant(params: &ModelParams) -> f64 {
    let s = h0_slope(params, 1.0);
    let s2 = s * s;
    (1.0 + s2) / (1.0 + slope_factor(params) * s2)
}

/// `2 - 1/I0(sqrt a)`.
fn slope_factor(params: &ModelParams) -> f64 {
    2.0 - 1.0 / (1.0 + i0_minus_one(params.sqrt_a()))
}

/// Check `A h1 <= h <= h0`, `h >= 0`, and
/// `(2 - 1/I0(sqrt a)) h0' <= h' <= 0` pointwise, with [`ENVELOPE_SLACK`].
/// Returns the verdict and `A`.
pub fn envelope_check(params: &ModelParams, profile: &RadialProfile) -> Result<(bool, f64)> {
    let adm = admissibility(params);
    if !adm.lemma_ok {
        return Err(Error::HypothesisViolation {
            a: params.a(),
            b: params.b(),
            b_max: adm.lemma_b_max,
        });
    }
    let op = PicardOperator::new(params, &profile.grid);
    let h1 = op.step(&h0_profile(params, &profile.grid))?;
    let a = envelope_constant(params);
    Ok((envelope_holds(params, profile, &h1, a), a))
}

fn envelope_holds(params: &ModelParams, h: &RadialProfile, h1: &RadialProfile, a_const: f64) -> bool {
    let factor = slope_factor(params);
    let eps = ENVELOPE_SLACK;
    h.grid.nodes().iter().enumerate().all(|(i, &r)| {
        let upper = h0_value(params, r);
        let slope0 = h0_slope(params, r);
        let hi = h.h[i];
        let si = h.dh[i];
        a_const * h1.h[i] - eps <= hi
            && hi <= upper + eps
            && hi >= -eps
            && si <= eps
            && factor * slope0 - eps <= si
    })
}

/// How the pressure load is projected onto the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forcing {
    /// Pressure normal to the surface: `b / sqrt(1 + h'^2)`.
    Normal,
    /// Pressure acting vertically: `b`. Its exact solution is `h0`.
    Vertical,
}

/// Solve the finite-difference discretization of the differential equation by
/// damped Newton iteration, independently of the integral formulation.
pub fn fd_oracle(params: &ModelParams, grid: &RadialGrid, tol: f64) -> Result<RadialProfile> {
    fd_solve(params, grid, tol, Forcing::Normal)
}

pub fn fd_solve(params: &ModelParams, grid: &RadialGrid, tol: f64, forcing: Forcing) -> Result<RadialProfile> {
    let n = grid.len();
    let m = n - 1; // unknowns h_0 .. h_{n-2}; h_{n-1} = 0
    let mut h = vec![0.0; n];
    let mut res = fd_residual(params, grid, &h, forcing);
    let mut res_norm = norm2(&res);
    for iter in 0..NEWTON_MAX_ITER {
        let (lower, diag, upper) = fd_jacobian(params, grid, &h, forcing);
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let step = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let step_size = step.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut trial = h.clone();
            for j in 0..m {
                trial[j] += lambda * step[j];
            }
            let trial_res = fd_residual(params, grid, &trial, forcing);
            let trial_norm = norm2(&trial_res);
            if trial_norm < res_norm || trial_norm == 0.0 {
                accepted = Some((trial, trial_res, trial_norm));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, trial_res, trial_norm)) => {
                h = trial;
                res = trial_res;
                res_norm = trial_norm;
            }
            // No decrease possible: either already at the floating-point
            // floor or stagnated.
            None if step_size <= tol => break,
            None => {
                return Err(Error::NoConvergence {
                    method: "fd newton",
                    iterations: iter + 1,
                    last_change: step_size,
                })
            }
        }
        if lambda * step_size <= tol || res_norm == 0.0 {
            return Ok(fd_profile(grid, h));
        }
    }
    if res_norm.is_finite() && res_norm < 1e-6 {
        return Ok(fd_profile(grid, h));
    }
    Err(Error::NoConvergence {
        method: "fd newton",
        iterations: NEWTON_MAX_ITER,
        last_change: res_norm,
    })
}

fn fd_profile(grid: &RadialGrid, h: Vec<f64>) -> RadialProfile {
    let n = h.len();
    let dr = grid.spacing();
    let mut dh = vec![0.0; n];
    for i in 1..n - 1 {
        dh[i] = (h[i + 1] - h[i - 1]) / (2.0 * dr);
    }
    dh[n - 1] = (3.0 * h[n - 1] - 4.0 * h[n - 2] + h[n - 3]) / (2.0 * dr);
    RadialProfile {
        grid: grid.clone(),
        h,
        dh,
    }
}

fn load(params: &ModelParams, slope: f64, forcing: Forcing) -> f64 {
    match forcing {
        Forcing::Normal => params.b() * normal_projection(slope),
        Forcing::Vertical => params.b(),
    }
}

fn load_derivative(params: &ModelParams, slope: f64, forcing: Forcing) -> f64 {
    match forcing {
        Forcing::Normal => -params.b() * slope / (1.0 + slope * slope).powf(1.5),
        Forcing::Vertical => 0.0,
    }
}

fn fd_residual(params: &ModelParams, grid: &RadialGrid, h: &[f64], forcing: Forcing) -> Vec<f64> {
    let n = h.len();
    let dr = grid.spacing();
    let dr2 = dr * dr;
    let a = params.a();
    let mut out = Vec::with_capacity(n - 1);
    out.push(-4.0 * (h[1] - h[0]) / dr2 + a * h[0] - load(params, 0.0, forcing));
    for i in 1..n - 1 {
        let r = grid.nodes()[i];
        let slope = (h[i + 1] - h[i - 1]) / (2.0 * dr);
        let second = (h[i + 1] - 2.0 * h[i] + h[i - 1]) / dr2;
        out.push(-second - slope / r + a * h[i] - load(params, slope, forcing));
    }
    out
}

fn fd_jacobian(params: &ModelParams, grid: &RadialGrid, h: &[f64], forcing: Forcing) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = h.len();
    let m = n - 1;
    let dr = grid.spacing();
    let dr2 = dr * dr;
    let a = params.a();
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    diag[0] = 4.0 / dr2 + a;
    upper[0] = -4.0 / dr2;
    for i in 1..m {
        let r = grid.nodes()[i];
        let slope = (h[i + 1] - h[i - 1]) / (2.0 * dr);
        let dload = load_derivative(params, slope, forcing);
        lower[i] = -1.0 / dr2 + 1.0 / (2.0 * dr * r) + dload / (2.0 * dr);
        diag[i] = 2.0 / dr2 + a;
        // h_{n-1} is fixed at zero, so the last row has no upper entry.
        if i + 1 < m {
            upper[i] = -1.0 / dr2 - 1.0 / (2.0 * dr * r) - dload / (2.0 * dr);
        }
    }
    (lower, diag, upper)
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::Numerical {
            op: "fd newton",
            detail: "singular jacobian".into(),
        });
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Numerical {
                op: "fd newton",
                detail: format!("singular jacobian at row {i}"),
            });
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
