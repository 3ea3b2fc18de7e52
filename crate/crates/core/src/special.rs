//! Modified Bessel functions of the first kind (orders 0, 1, 2) and second
//! kind (orders 0, 1) for real nonnegative arguments.
//!
//! Evaluation regimes:
//!
//! - `I_nu`: ascending power series up to `z = 25`, Hankel asymptotic
//!   expansion beyond. The series has only positive terms so it loses no
//!   precision to cancellation; the asymptotic tail is below `1e-20` past the
//!   crossover.
//! - `K_0`, `K_1`: logarithmic ascending series for `z <= 2`, and Steed's
//!   continued fraction (the Thompson–Barnett form) for `z > 2`. The series
//!   cancels roughly `e^{2z}` so it is only used where that costs under two
//!   digits.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;

const I_SERIES_MAX: f64 = 25.0;
const K_SERIES_MAX: f64 = 2.0;
const EPS: f64 = 1e-17;
const MAX_TERMS: usize = 500;

/// Order of a modified Bessel function. Only the orders used by the model
/// exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselOrder {
    Zero,
    One,
    /// Needed only for the curvature identity `2 I_1' = I_0 + I_2`.
    Two,
}

impl BesselOrder {
    pub fn nu(self) -> u32 {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
            BesselOrder::Two => 2,
        }
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(nu: u32) -> Result<Self> {
        match nu {
            0 => Ok(BesselOrder::Zero),
            1 => Ok(BesselOrder::One),
            2 => Ok(BesselOrder::Two),
            _ => Err(Error::domain("BesselOrder", format!("order {nu} not in {{0, 1, 2}}"))),
        }
    }
}

/// Modified Bessel function of the first kind, `I_nu(z)`, for `z >= 0`.
pub fn bessel_i(order: BesselOrder, z: f64) -> Result<f64> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain("bessel_i", format!("argument {z} must be finite and >= 0")));
    }
    Ok(i_nu(order.nu(), z))
}

/// Modified Bessel function of the second kind, `K_nu(z)`, for `z > 0` and
/// `nu` in {0, 1}.
pub fn bessel_k(order: BesselOrder, z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain("bessel_k", format!("argument {z} must be finite and > 0")));
    }
    match order {
        BesselOrder::Zero => Ok(k0(z)),
        BesselOrder::One => Ok(k1(z)),
        BesselOrder::Two => Err(Error::domain("bessel_k", "order 2 is not supported")),
    }
}

/// `I_0(z) K_1(z) + I_1(z) K_0(z) - 1/z`, which vanishes identically.
pub fn wronskian_defect(z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain("wronskian_defect", format!("argument {z} must be finite and > 0")));
    }
    Ok(i0(z) * k1(z) + i1(z) * k0(z) - 1.0 / z)
}

#[inline]
pub(crate) fn i0(z: f64) -> f64 {
    i_nu(0, z)
}

#[inline]
pub(crate) fn i1(z: f64) -> f64 {
    i_nu(1, z)
}

/// `I_0(z) - 1` without cancellation for small `z`.
pub(crate) fn i0_minus_one(z: f64) -> f64 {
    if z > I_SERIES_MAX {
        return i0(z) - 1.0;
    }
    let q = 0.25 * z * z;
    let mut term = q;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        sum += term;
        if term <= EPS * sum {
            break;
        }
        let kp = (k + 1) as f64;
        term *= q / (kp * kp);
    }
    sum
}

fn i_nu(nu: u32, z: f64) -> f64 {
    if z <= I_SERIES_MAX {
        i_series(nu, z)
    } else {
        i_asymptotic(nu, z)
    }
}

fn i_series(nu: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut term = match nu {
        0 => 1.0,
        1 => half,
        _ => 0.5 * half * half,
    };
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let nu = nu as f64;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        sum += term;
        if term <= EPS * sum {
            break;
        }
        let kp = (k + 1) as f64;
        term *= q / (kp * (kp + nu));
    }
    sum
}

fn i_asymptotic(nu: u32, z: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev_abs = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * z);
        let abs = term.abs();
        if abs > prev_abs {
            break;
        }
        sum += term;
        if abs <= EPS * sum.abs() {
            break;
        }
        prev_abs = abs;
    }
    // Split the exponential so moderately large arguments do not overflow
    // before the prefactor is applied.
    let e = (0.5 * z).exp();
    e * (e / (2.0 * std::f64::consts::PI * z).sqrt()) * sum
}

pub(crate) fn k0(z: f64) -> f64 {
    if z <= K_SERIES_MAX {
        k0_series(z)
    } else {
        k_continued_fraction(z).0
    }
}

pub(crate) fn k1(z: f64) -> f64 {
    if z <= K_SERIES_MAX {
        k1_series(z)
    } else {
        k_continued_fraction(z).1
    }
}

fn k0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let lead = -((0.5 * z).ln() + EULER_GAMMA) * i0(z);
    let mut power = 1.0; // q^k / (k!)^2
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        power *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let term = power * harmonic;
        sum += term;
        if term <= EPS * sum {
            break;
        }
    }
    lead + sum
}

fn k1_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut power = 1.0; // q^k / (k! (k+1)!)
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        if k > 0 {
            let kf = k as f64;
            power *= q / (kf * (kf + 1.0));
            h_k += 1.0 / kf;
            h_k1 += 1.0 / (kf + 1.0);
        }
        let term = power * (h_k + h_k1 - 2.0 * EULER_GAMMA);
        sum += term;
        if k > 0 && term.abs() <= EPS * sum.abs() {
            break;
        }
    }
    1.0 / z + (0.5 * z).ln() * i1(z) - 0.25 * z * sum
}

/// Steed's continued fraction for `(K_0(z), K_1(z))`, valid for `z >~ 2`.
fn k_continued_fraction(z: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}
