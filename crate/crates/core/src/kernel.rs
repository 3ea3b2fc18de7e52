//! Green's-function ingredients of the radial operator
//! `-(1/r)(r h')' + a h` on `[0, 1]` with `h'(0) = 0`, `h(1) = 0`, and the
//! constants that control convergence of the fixed-point iteration.
//!
//! ```text
//! v0(r) = I0(sqrt(a) r)
//! v1(r) = I0(sqrt(a)) K0(sqrt(a) r) - I0(sqrt(a) r) K0(sqrt(a))
//! ```
//!
//! `v0` is regular at the origin and `v1` vanishes at `r = 1`; `v1` has a
//! logarithmic singularity at `r = 0`, so every function involving it refuses
//! `r = 0`. The solver evaluates the origin through limit forms instead.

use crate::error::{Error, Result};
use crate::special::{i0, i0_minus_one, i1, k0, k1};

/// Lipschitz constant of `P(x) = 1/sqrt(1 + x^2)`, attained at `x^2 = 1/2`.
pub const LIPSCHITZ_M: f64 = 0.384_900_179_459_750_5; // 2 / (3 sqrt 3)

/// Nondimensional model parameters: `a = k R^2 / T` (stiffness) and
/// `b = P R / T` (pressure).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    b: f64,
}

impl ModelParams {
    /// `a` must be strictly positive. `b = 0` is accepted as the unforced
    /// limit whose solution is identically zero.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain("ModelParams", format!("a = {a} must be finite and > 0")));
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::domain("ModelParams", format!("b = {b} must be finite and >= 0")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn sqrt_a(&self) -> f64 {
        self.a.sqrt()
    }

    /// Same stiffness, different pressure.
    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.a, b)
    }
}

/// Physical membrane constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalParams {
    /// Membrane tension `T`, N/m.
    pub tension: f64,
    /// Restoring stiffness `k`, N/m^3.
    pub stiffness: f64,
    /// Intraocular pressure `P`, N/m^2.
    pub pressure: f64,
    /// Length scale `R`, m.
    pub scale_radius: f64,
}

impl DimensionalParams {
    pub fn new(tension: f64, stiffness: f64, pressure: f64, scale_radius: f64) -> Result<Self> {
        for (name, v) in [
            ("tension", tension),
            ("stiffness", stiffness),
            ("pressure", pressure),
            ("scale_radius", scale_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain("DimensionalParams", format!("{name} = {v} must be finite and > 0")));
            }
        }
        Ok(Self {
            tension,
            stiffness,
            pressure,
            scale_radius,
        })
    }

    /// `a = k R^2 / T`, `b = P R / T`.
    pub fn nondimensionalize(&self) -> ModelParams {
        ModelParams {
            a: self.stiffness * self.scale_radius * self.scale_radius / self.tension,
            b: self.pressure * self.scale_radius / self.tension,
        }
    }
}

/// Kernel mass bounds from the existence proof.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    /// Bound on `sup_r int_0^1 |F(r, t)| dt`.
    pub q_bound: f64,
    /// Bound on `sup_r int_0^1 |G(r, t)| dt`.
    pub r_bound: f64,
    pub lipschitz_m: f64,
    /// `lipschitz_m * r_bound`; below one the iteration is a contraction.
    pub contraction: f64,
}

/// Where `(a, b)` sits relative to the existence and envelope hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub params: ModelParams,
    pub theorem1_b_max: f64,
    pub lemma_b_max: f64,
    /// `b < theorem1_b_max` (strict).
    pub theorem1_ok: bool,
    /// `b <= lemma_b_max`.
    pub lemma_ok: bool,
}

fn check_r(op: &'static str, r: f64, allow_zero: bool) -> Result<()> {
    let ok = r.is_finite() && r <= 1.0 && if allow_zero { r >= 0.0 } else { r > 0.0 };
    if ok {
        Ok(())
    } else {
        let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
        Err(Error::domain(op, format!("r = {r} outside {range}")))
    }
}

fn check_a(op: &'static str, a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("a = {a} must be finite and > 0")))
    }
}

pub fn v0(r: f64, a: f64) -> Result<f64> {
    check_r("v0", r, true)?;
    check_a("v0", a)?;
    Ok(i0(a.sqrt() * r))
}

pub fn v1(r: f64, a: f64) -> Result<f64> {
    check_r("v1", r, false)?;
    check_a("v1", a)?;
    Ok(Kernel::new(a).v1(r))
}

pub fn dv0(r: f64, a: f64) -> Result<f64> {
    check_r("dv0", r, true)?;
    check_a("dv0", a)?;
    Ok(Kernel::new(a).dv0(r))
}

pub fn dv1(r: f64, a: f64) -> Result<f64> {
    check_r("dv1", r, false)?;
    check_a("dv1", a)?;
    Ok(Kernel::new(a).dv1(r))
}

/// Unchecked kernel evaluation with the `r`-independent Bessel values cached.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub sqrt_a: f64,
    pub i0_at_1: f64,
    pub k0_at_1: f64,
}

impl Kernel {
    pub fn new(a: f64) -> Self {
        let s = a.sqrt();
        Self {
            sqrt_a: s,
            i0_at_1: i0(s),
            k0_at_1: k0(s),
        }
    }

    pub fn v0(&self, r: f64) -> f64 {
        i0(self.sqrt_a * r)
    }

    pub fn v1(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let z = self.sqrt_a * r;
        self.i0_at_1 * k0(z) - i0(z) * self.k0_at_1
    }

    pub fn dv0(&self, r: f64) -> f64 {
        self.sqrt_a * i1(self.sqrt_a * r)
    }

    pub fn dv1(&self, r: f64) -> f64 {
        let z = self.sqrt_a * r;
        -self.sqrt_a * (self.i0_at_1 * k1(z) + i1(z) * self.k0_at_1)
    }
}

/// Closed forms `Q = (b/a)(1 - 1/I0(sqrt a))` and
/// `R = (b/sqrt a)(I1(sqrt a)/I0(sqrt a))(2 I0(sqrt a) - 1)`.
pub fn bound_constants(params: &ModelParams) -> KernelBounds {
    let s = params.sqrt_a();
    let i0s = i0(s);
    let i1s = i1(s);
    let q_bound = params.b / params.a * (i0_minus_one(s) / i0s);
    let r_bound = params.b / s * (i1s / i0s) * (2.0 * i0s - 1.0);
    KernelBounds {
        q_bound,
        r_bound,
        lipschitz_m: LIPSCHITZ_M,
        contraction: LIPSCHITZ_M * r_bound,
    }
}

/// Largest `b` (exclusive) for which the fixed-point map is a contraction:
/// `(3 sqrt 3 / 2) sqrt(a) I0(sqrt a) / (I1(sqrt a) (2 I0(sqrt a) - 1))`.
pub fn theorem1_b_max(a: f64) -> Result<f64> {
    check_a("theorem1_b_max", a)?;
    let s = a.sqrt();
    let i0s = i0(s);
    let i1s = i1(s);
    Ok(s * i0s / (LIPSCHITZ_M * i1s * (2.0 * i0s - 1.0)))
}

/// Largest `b` (inclusive) for which the derivative estimates and the
/// solution envelope hold: `(sqrt a / I1(sqrt a)) sqrt(2 I0 - 1) / (I0 - 1)`.
pub fn lemma_b_max(a: f64) -> Result<f64> {
    check_a("lemma_b_max", a)?;
    let s = a.sqrt();
    let i0s = i0(s);
    Ok(s / i1(s) * (2.0 * i0s - 1.0).sqrt() / i0_minus_one(s))
}

pub fn admissibility(params: &ModelParams) -> AdmissibilityReport {
    // `a > 0` is a type invariant, so neither bound can fail.
    let theorem1_b_max = theorem1_b_max(params.a).expect("a > 0");
    let lemma_b_max = lemma_b_max(params.a).expect("a > 0");
    AdmissibilityReport {
        params: *params,
        theorem1_b_max,
        lemma_b_max,
        theorem1_ok: params.b < theorem1_b_max,
        lemma_ok: params.b <= lemma_b_max,
    }
}
