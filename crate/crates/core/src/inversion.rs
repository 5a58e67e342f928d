//! Numerical inversion of Laplace transforms.
//!
//! Two unified-framework algorithms are provided: the fixed Talbot contour
//! and the Euler-accelerated Bromwich (Fourier series) sum. Both evaluate the
//! transform at complex abscissae only; the transform must be analytic to the
//! right of its singularities, which callers arrange by shifting poles to
//! the origin before inverting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Inversion algorithm and its single accuracy parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InversionMethod {
    /// Fixed Talbot contour with `nodes` abscissae.
    FixedTalbot { nodes: usize },
    /// Euler summation of the Bromwich integral with `2·terms + 1` abscissae.
    Euler { terms: usize },
}

impl InversionMethod {
    pub fn invert<F: Fn(Complex64) -> Complex64>(&self, transform: F, t: f64) -> f64 {
        match *self {
            InversionMethod::FixedTalbot { nodes } => fixed_talbot(transform, t, nodes),
            InversionMethod::Euler { terms } => euler(transform, t, terms),
        }
    }
}

impl Default for InversionMethod {
    fn default() -> Self {
        InversionMethod::FixedTalbot { nodes: 32 }
    }
}

/// Fixed Talbot inversion of `transform` at `t > 0`.
pub fn fixed_talbot<F: Fn(Complex64) -> Complex64>(transform: F, t: f64, nodes: usize) -> f64 {
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * (transform(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..nodes {
        let theta = k as f64 * std::f64::consts::PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * transform(s) * Complex64::new(1.0, sigma);
        if term.re.is_finite() {
            sum += term.re;
        }
    }
    r / m * sum
}

/// Euler-summed Bromwich inversion of `transform` at `t > 0`.
pub fn euler<F: Fn(Complex64) -> Complex64>(transform: F, t: f64, terms: usize) -> f64 {
    let m = terms;
    let ln10 = std::f64::consts::LN_10;
    let a = m as f64 * ln10 / 3.0;

    // Binomial-tail weights xi_k.
    let mut xi = vec![0.0; 2 * m + 1];
    xi[0] = 0.5;
    for x in xi.iter_mut().take(m + 1).skip(1) {
        *x = 1.0;
    }
    let two_m = 2f64.powi(-(m as i32));
    xi[2 * m] = two_m;
    let mut binom = 1.0; // C(m, k)
    for k in 1..m {
        binom *= (m - k + 1) as f64 / k as f64;
        xi[2 * m - k] = xi[2 * m - k + 1] + two_m * binom;
    }

    let mut sum = 0.0;
    for (k, &w) in xi.iter().enumerate() {
        let beta = Complex64::new(a, std::f64::consts::PI * k as f64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let v = transform(beta / t).re;
        if v.is_finite() {
            sum += sign * w * v;
        }
    }
    10f64.powf(m as f64 / 3.0) / t * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(method: InversionMethod, tol: f64) {
        // 1/(s(s+1)) <-> 1 - e^{-t}
        for &t in &[0.01, 0.5, 1.0, 5.0, 30.0] {
            let v = method.invert(|s| 1.0 / (s * (s + 1.0)), t);
            assert!((v - (1.0 - (-t).exp())).abs() < tol, "{method:?} t={t} v={v}");
        }
        // 1/(s+2)^2 <-> t e^{-2t}
        for &t in &[0.1, 1.0, 3.0] {
            let v = method.invert(|s| 1.0 / ((s + 2.0) * (s + 2.0)), t);
            assert!((v - t * (-2.0 * t).exp()).abs() < tol);
        }
    }

    #[test]
    fn talbot_recovers_rational_transforms() {
        check(InversionMethod::FixedTalbot { nodes: 32 }, 1e-10);
    }

    #[test]
    fn euler_recovers_rational_transforms() {
        check(InversionMethod::Euler { terms: 18 }, 1e-7);
    }
}
