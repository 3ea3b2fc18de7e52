//! Independent numerical oracles shared by the integration tests. Nothing in
//! here calls into the library's evaluation paths.
#![allow(dead_code)]

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `I_0` from the first 30 terms of its power series.
pub fn i0_series_30(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 0..30 {
        if k > 0 {
            fact *= k as f64;
        }
        sum += (0.5 * z).powi(2 * k) / (fact * fact);
    }
    sum
}

/// `I_nu(z) = (1/pi) * int_0^pi exp(z cos t) cos(nu t) dt` for integer `nu`.
pub fn bessel_i_quadrature(nu: u32, z: f64) -> f64 {
    let f = |t: f64| (z * t.cos()).exp() * (nu as f64 * t).cos();
    composite_gauss(&f, 0.0, std::f64::consts::PI, 64, 32) / std::f64::consts::PI
}

/// `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`.
pub fn bessel_k_quadrature(nu: u32, z: f64) -> f64 {
    // Cut the tail where the integrand is below e^-60 relative to its peak.
    let upper = ((60.0 + z) / z).acosh();
    let f = |t: f64| (-z * t.cosh()).exp() * (nu as f64 * t).cosh();
    composite_gauss(&f, 0.0, upper, 64, 32)
}

/// Composite Gauss–Legendre rule with `panels` equal panels of `order` nodes.
pub fn composite_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut panel = 0.0;
        for (xi, wi) in x.iter().zip(w.iter()) {
            panel += wi * f(mid + 0.5 * h * xi);
        }
        sum += 0.5 * h * panel;
    }
    sum
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            let pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
                break;
            }
        }
    }
    (x, w)
}
