//! Spectrally negative Lévy models with finite jump activity.
//!
//! Models use the insurance parametrization
//! `X(t) = x + c·t + σ·B(t) − Σ_{j ≤ N(t)} C_j`, with Laplace exponent
//!
//! ```text
//! φ(α) = c·α + σ²α²/2 + λ·(p̂(α) − 1),     p̂(α) = E e^{−α C}.
//! ```
//!
//! A pure Brownian model is the same formula with `λ = 0`. The Lévy measure
//! has density `π(−u) = λ·p(u)` for `u > 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::roots::{bisect, newton_bisect};

/// Relative tolerance of the right-inverse root finder.
pub const TOL_ROOT: f64 = 1e-12;

/// Piecewise-linear claim density on `[x_0, x_n]`, optionally multiplied by
/// an exponential factor `e^{−κu}` (which is how tilting acts on claims).
/// The stored table is normalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDensity {
    xs: Vec<f64>,
    ps: Vec<f64>,
    kappa: f64,
    norm: f64,
}

/// `∫_0^h u^k e^{−s u} du` for `k ∈ {0, 1, 2}`.
fn local_moments(s: Complex64, h: f64) -> [Complex64; 3] {
    let sh = s * h;
    if sh.norm() < 1.0 {
        // Σ_n (−s)^n h^{n+k+1} / (n! (n+k+1))
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0); // (−sh)^n / n!
        for n in 0..30 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += term * h.powi(k as i32 + 1) / (n + k + 1) as f64;
            }
            term *= -sh / (n + 1) as f64;
        }
        out
    } else {
        let e = (-sh).exp();
        let m0 = (1.0 - e) / s;
        let m1 = (1.0 - e * (1.0 + sh)) / (s * s);
        let m2 = (2.0 - e * (sh * sh + 2.0 * sh + 2.0)) / (s * s * s);
        [m0, m1, m2]
    }
}

impl TabulatedDensity {
    /// Builds a density from knots `xs` (strictly increasing, `xs[0] >= 0`)
    /// and non-negative values `ps`. The table is renormalized to unit mass.
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ps.len() {
            return Err(Error::InvalidModel(
                "tabulated density needs at least two knots and matching value count".into(),
            ));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel(
                "tabulated density knots must be non-negative and strictly increasing".into(),
            ));
        }
        if ps.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidModel(
                "tabulated density values must be finite and >= 0".into(),
            ));
        }
        let mut d = TabulatedDensity {
            xs,
            ps,
            kappa: 0.0,
            norm: 1.0,
        };
        let mass = d.raw_moments(Complex64::new(0.0, 0.0), 0.0, 0.0)[0].re;
        if !(mass > 0.0) {
            return Err(Error::InvalidModel("tabulated density has zero mass".into()));
        }
        d.norm = mass;
        Ok(d)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ps)
    }

    /// Rate `κ` of the `e^{−κu}` factor introduced by tilting (0 untilted).
    pub fn damping(&self) -> f64 {
        self.kappa
    }

    fn linear(&self, u: f64) -> f64 {
        let n = self.xs.len();
        if u < self.xs[0] || u > self.xs[n - 1] {
            return 0.0;
        }
        let i = match self.xs.binary_search_by(|x| x.total_cmp(&u)) {
            Ok(i) => return self.ps[i],
            Err(i) => i - 1,
        };
        let w = (u - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ps[i] + w * (self.ps[i + 1] - self.ps[i])
    }

    /// `[∫_{from}^∞ e^{−s(v−origin)} lin(v) dv, ∫ v·(…) dv]` over the table,
    /// without the `e^{−κv}` factor or normalization.
    fn raw_moments(&self, s: Complex64, from: f64, origin: f64) -> [Complex64; 2] {
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for i in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            if b <= from {
                continue;
            }
            let slope = (self.ps[i + 1] - self.ps[i]) / (b - a);
            let start = a.max(from);
            let p_start = self.ps[i] + slope * (start - a);
            let h = b - start;
            let [e0, e1, e2] = local_moments(s, h);
            let shift = (-s * (start - origin)).exp();
            // v = start + u, lin(v) = p_start + slope·u
            m0 += shift * (p_start * e0 + slope * e1);
            m1 += shift * (start * p_start * e0 + (start * slope + p_start) * e1 + slope * e2);
        }
        [m0, m1]
    }

    pub fn density(&self, u: f64) -> f64 {
        (-self.kappa * u).exp() * self.linear(u) / self.norm
    }

    pub fn tail(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        self.raw_moments(Complex64::new(self.kappa, 0.0), y, 0.0)[0].re / self.norm
    }

    pub fn mean(&self) -> f64 {
        self.raw_moments(Complex64::new(self.kappa, 0.0), 0.0, 0.0)[1].re / self.norm
    }

    pub fn laplace(&self, s: Complex64) -> Complex64 {
        self.raw_moments(s + self.kappa, 0.0, 0.0)[0] / self.norm
    }

    pub fn laplace_derivative(&self, s: Complex64) -> Complex64 {
        -self.raw_moments(s + self.kappa, 0.0, 0.0)[1] / self.norm
    }

    /// `∫_y^∞ p(v) e^{−s(v−y)} dv`
    pub fn discounted_tail(&self, y: f64, s: f64) -> f64 {
        let y = y.max(0.0);
        // e^{−κv} = e^{−κy} e^{−κ(v−y)}
        (-self.kappa * y).exp() * self.raw_moments(Complex64::new(s + self.kappa, 0.0), y, y)[0].re / self.norm
    }

    pub fn support_end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Density proportional to `e^{−c u} p(u)`.
    pub fn tilted(&self, c: f64) -> TabulatedDensity {
        let mut out = self.clone();
        out.kappa = self.kappa + c;
        out.norm = self.raw_moments(Complex64::new(out.kappa, 0.0), 0.0, 0.0)[0].re;
        out
    }
}

/// Negative-jump part of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpSpec {
    NoJumps,
    /// Claims with density `Σ w_i η_i e^{−η_i u}`; weights may be signed.
    MixedExponential {
        rate: f64,
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    /// Claims with a general (tabulated) density.
    CompoundPoisson {
        rate: f64,
        density: TabulatedDensity,
    },
}

impl JumpSpec {
    pub fn exponential(rate: f64, claim_rate: f64) -> JumpSpec {
        JumpSpec::MixedExponential {
            rate,
            weights: vec![1.0],
            rates: vec![claim_rate],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            JumpSpec::NoJumps => Ok(()),
            JumpSpec::MixedExponential { rate, weights, rates } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidModel("jump rate must be > 0".into()));
                }
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::InvalidModel(
                        "mixed exponential needs matching, non-empty weights and rates".into(),
                    ));
                }
                if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err(Error::InvalidModel("exponential rates must be > 0".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "mixed exponential weights must sum to 1 (got {total})"
                    )));
                }
                let slowest = rates.iter().cloned().fold(f64::INFINITY, f64::min);
                let horizon = 50.0 / slowest;
                for i in 0..=2000 {
                    let u = horizon * i as f64 / 2000.0;
                    if self.claim_density(u) < -1e-12 {
                        return Err(Error::InvalidModel(format!(
                            "mixed exponential density is negative at u = {u}"
                        )));
                    }
                }
                Ok(())
            }
            JumpSpec::CompoundPoisson { rate, .. } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidModel("jump rate must be > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Poisson intensity λ (0 without jumps).
    pub fn rate(&self) -> f64 {
        match self {
            JumpSpec::NoJumps => 0.0,
            JumpSpec::MixedExponential { rate, .. } | JumpSpec::CompoundPoisson { rate, .. } => *rate,
        }
    }

    pub fn claim_density(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self {
            JumpSpec::NoJumps => 0.0,
            JumpSpec::MixedExponential { weights, rates, .. } => {
                weights.iter().zip(rates).map(|(w, e)| w * e * (-e * u).exp()).sum()
            }
            JumpSpec::CompoundPoisson { density, .. } => density.density(u),
        }
    }

    /// `P̄(y) = P(C > y)`
    pub fn claim_tail(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return if matches!(self, JumpSpec::NoJumps) { 0.0 } else { 1.0 };
        }
        match self {
            JumpSpec::NoJumps => 0.0,
            JumpSpec::MixedExponential { weights, rates, .. } => {
                weights.iter().zip(rates).map(|(w, e)| w * (-e * y).exp()).sum()
            }
            JumpSpec::CompoundPoisson { density, .. } => density.tail(y),
        }
    }

    pub fn claim_mean(&self) -> f64 {
        match self {
            JumpSpec::NoJumps => 0.0,
            JumpSpec::MixedExponential { weights, rates, .. } => weights.iter().zip(rates).map(|(w, e)| w / e).sum(),
            JumpSpec::CompoundPoisson { density, .. } => density.mean(),
        }
    }

    /// `p̂(s) = E e^{−sC}`, analytically continued where needed.
    pub fn claim_laplace(&self, s: Complex64) -> Complex64 {
        match self {
            JumpSpec::NoJumps => Complex64::new(0.0, 0.0),
            JumpSpec::MixedExponential { weights, rates, .. } => {
                weights.iter().zip(rates).map(|(w, e)| w * e / (e + s)).sum()
            }
            JumpSpec::CompoundPoisson { density, .. } => density.laplace(s),
        }
    }

    pub fn claim_laplace_derivative(&self, s: Complex64) -> Complex64 {
        match self {
            JumpSpec::NoJumps => Complex64::new(0.0, 0.0),
            JumpSpec::MixedExponential { weights, rates, .. } => weights
                .iter()
                .zip(rates)
                .map(|(w, e)| -w * e / ((e + s) * (e + s)))
                .sum(),
            JumpSpec::CompoundPoisson { density, .. } => density.laplace_derivative(s),
        }
    }

    /// Lévy density `π(−u) = λ p(u)` for `u > 0`.
    pub fn levy_density(&self, u: f64) -> f64 {
        self.rate() * self.claim_density(u)
    }

    /// `Π(−∞, −y) = λ P̄(y)`
    pub fn tail_mass(&self, y: f64) -> f64 {
        self.rate() * self.claim_tail(y)
    }

    /// `∫_0^∞ π(−y−z) e^{−s z} dz`
    pub fn discounted_tail(&self, y: f64, s: f64) -> f64 {
        match self {
            JumpSpec::NoJumps => 0.0,
            JumpSpec::MixedExponential { rate, weights, rates } => {
                rate * weights
                    .iter()
                    .zip(rates)
                    .map(|(w, e)| w * e * (-e * y).exp() / (e + s))
                    .sum::<f64>()
            }
            JumpSpec::CompoundPoisson { rate, density } => rate * density.discounted_tail(y, s),
        }
    }

    /// Infimum of the real abscissae where `p̂` is finite.
    pub fn abscissa(&self) -> f64 {
        match self {
            JumpSpec::MixedExponential { rates, .. } => -rates.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => f64::NEG_INFINITY,
        }
    }

    fn tilted(&self, c: f64) -> JumpSpec {
        match self {
            JumpSpec::NoJumps => JumpSpec::NoJumps,
            JumpSpec::MixedExponential { rate, weights, rates } => {
                let lt: f64 = weights.iter().zip(rates).map(|(w, e)| w * e / (e + c)).sum();
                JumpSpec::MixedExponential {
                    rate: rate * lt,
                    weights: weights.iter().zip(rates).map(|(w, e)| w * e / (e + c) / lt).collect(),
                    rates: rates.iter().map(|e| e + c).collect(),
                }
            }
            JumpSpec::CompoundPoisson { rate, density } => JumpSpec::CompoundPoisson {
                rate: rate * density.laplace(Complex64::new(c, 0.0)).re,
                density: density.tilted(c),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variation {
    BoundedVariation,
    UnboundedVariation,
}

/// A spectrally negative Lévy process `c·t + σB(t) − compound Poisson`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    drift: f64,
    sigma: f64,
    jumps: JumpSpec,
}

impl LevyModel {
    pub fn new(drift: f64, sigma: f64, jumps: JumpSpec) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::InvalidModel("drift must be finite".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidModel(format!("sigma must be >= 0 (got {sigma})")));
        }
        jumps.validate()?;
        if sigma == 0.0 {
            if matches!(jumps, JumpSpec::NoJumps) {
                return Err(Error::InvalidModel(
                    "pure drift without jumps or Gaussian part has monotone paths".into(),
                ));
            }
            if drift <= 0.0 {
                return Err(Error::InvalidModel(
                    "sigma = 0 with drift <= 0 gives non-increasing paths".into(),
                ));
            }
        }
        Ok(Self { drift, sigma, jumps })
    }

    /// Brownian motion with drift `mu` and volatility `sigma`.
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, JumpSpec::NoJumps)
    }

    /// Cramér–Lundberg (σ = 0) or jump-diffusion model with Exp(`claim_rate`) claims.
    pub fn exponential_claims(premium: f64, sigma: f64, rate: f64, claim_rate: f64) -> Result<Self> {
        Self::new(premium, sigma, JumpSpec::exponential(rate, claim_rate))
    }

    /// Premium rate `c` (drift of the Brownian part for jump-free models).
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    /// True when `φ(α) − q` is a rational function of `α`.
    pub fn has_rational_exponent(&self) -> bool {
        matches!(self.jumps, JumpSpec::NoJumps | JumpSpec::MixedExponential { .. })
    }

    /// Laplace exponent `φ(α) = log E e^{α X(1)}` for `α >= 0`.
    pub fn laplace_exponent(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 0.0) {
            return Err(domain("laplace_exponent", "alpha >= 0"));
        }
        Ok(self.exponent(alpha))
    }

    /// `φ` at any real point of its domain (`+∞` left of the abscissa).
    pub fn exponent(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            return 0.0;
        }
        if alpha <= self.jumps.abscissa() {
            return f64::INFINITY;
        }
        let lambda = self.jumps.rate();
        let lt = self.jumps.claim_laplace(Complex64::new(alpha, 0.0)).re;
        self.drift * alpha + 0.5 * self.sigma * self.sigma * alpha * alpha + lambda * (lt - 1.0)
    }

    /// `φ'` at any real point of its domain.
    pub fn exponent_derivative(&self, alpha: f64) -> f64 {
        if alpha <= self.jumps.abscissa() {
            return f64::NEG_INFINITY;
        }
        let lambda = self.jumps.rate();
        self.drift
            + self.sigma * self.sigma * alpha
            + lambda * self.jumps.claim_laplace_derivative(Complex64::new(alpha, 0.0)).re
    }

    /// `φ(s)` for complex `s` (analytic continuation).
    pub fn exponent_complex(&self, s: Complex64) -> Complex64 {
        let lambda = self.jumps.rate();
        self.drift * s + 0.5 * self.sigma * self.sigma * s * s + lambda * (self.jumps.claim_laplace(s) - 1.0)
    }

    pub fn exponent_derivative_complex(&self, s: Complex64) -> Complex64 {
        let lambda = self.jumps.rate();
        self.drift + self.sigma * self.sigma * s + lambda * self.jumps.claim_laplace_derivative(s)
    }

    /// `φ'(0+) = E X(1)`.
    pub fn mean_drift(&self) -> f64 {
        let mean = self.jumps.claim_mean();
        if !mean.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.drift - self.jumps.rate() * mean
    }

    pub fn variation_class(&self) -> Variation {
        if self.sigma == 0.0 {
            Variation::BoundedVariation
        } else {
            Variation::UnboundedVariation
        }
    }

    pub fn is_bounded_variation(&self) -> bool {
        self.variation_class() == Variation::BoundedVariation
    }

    /// Drift `b` of a bounded-variation model (the premium rate here).
    pub fn drift_coefficient_b(&self) -> Result<f64> {
        if !self.is_bounded_variation() {
            return Err(domain("drift_coefficient_b", "a bounded-variation model (sigma = 0)"));
        }
        Ok(self.drift)
    }

    /// `W^{(q)}(0+)`: `1/b` for bounded variation, 0 otherwise.
    pub fn scale_at_zero(&self) -> f64 {
        if self.is_bounded_variation() {
            1.0 / self.drift
        } else {
            0.0
        }
    }

    /// `W^{(q)\prime}(0+)` for finite-activity models.
    pub fn scale_derivative_at_zero(&self, q: f64) -> f64 {
        if self.is_bounded_variation() {
            (self.jumps.rate() + q) / (self.drift * self.drift)
        } else {
            2.0 / (self.sigma * self.sigma)
        }
    }

    /// Exponentially tilted model with exponent `φ(·+c) − φ(c)`.
    pub fn tilt(&self, c: f64) -> Result<LevyModel> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(domain("tilt", "c >= 0"));
        }
        self.tilt_unchecked(c)
    }

    /// Tilting by any `c` inside the domain of `φ` (negative values allowed).
    pub(crate) fn tilt_unchecked(&self, c: f64) -> Result<LevyModel> {
        if c == 0.0 {
            return Ok(self.clone());
        }
        if c <= self.jumps.abscissa() {
            return Err(domain("tilt", "c inside the domain of the Laplace exponent"));
        }
        Ok(LevyModel {
            drift: self.drift + self.sigma * self.sigma * c,
            sigma: self.sigma,
            jumps: self.jumps.tilted(c),
        })
    }

    /// Right inverse `Φ(q) = sup{α >= 0 : φ(α) = q}`.
    pub fn phi_inverse(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) {
            return Err(domain("phi_inverse", "q >= 0"));
        }
        self.largest_root(q)
    }

    /// `Φ'(q) = 1/φ'(Φ(q))`.
    pub fn phi_inverse_derivative(&self, q: f64) -> Result<f64> {
        let root = self.phi_inverse(q)?;
        Ok(1.0 / self.exponent_derivative(root))
    }

    /// Point where `φ'` vanishes, or `None` when `φ` is increasing on its
    /// whole domain.
    fn exponent_minimizer(&self) -> Option<f64> {
        let d0 = self.exponent_derivative(0.0);
        if d0 == 0.0 {
            return Some(0.0);
        }
        let dphi = |a: f64| self.exponent_derivative(a);
        if d0 < 0.0 {
            let mut hi = 1.0;
            while dphi(hi) <= 0.0 {
                hi *= 2.0;
            }
            Some(bisect(dphi, 0.0, hi, 1e-15 * hi))
        } else {
            let floor = self.jumps.abscissa();
            let mut lo = if floor.is_finite() { floor } else { -1.0 };
            if !floor.is_finite() {
                while dphi(lo) >= 0.0 {
                    lo *= 2.0;
                    if lo < -1e12 {
                        return None;
                    }
                }
            }
            Some(bisect(dphi, lo, 0.0, 1e-15 * lo.abs().max(1.0)))
        }
    }

    /// Largest real root of `φ(θ) = q`, for any real `q` above the minimum
    /// of `φ`. Negative `q` arises for scale functions of tilted models.
    pub(crate) fn largest_root(&self, q: f64) -> Result<f64> {
        let d0 = self.exponent_derivative(0.0);
        if q == 0.0 && d0 >= 0.0 {
            return Ok(0.0);
        }
        let lo = if q >= 0.0 && d0 >= 0.0 {
            0.0
        } else {
            let m = self
                .exponent_minimizer()
                .ok_or_else(|| domain("largest_root", "q above the minimum of the Laplace exponent"))?;
            let fmin = self.exponent(m);
            if fmin > q {
                return Err(domain("largest_root", format!("q >= min φ = {fmin}")));
            }
            if fmin == q {
                return Ok(m);
            }
            m
        };
        let mut hi = lo.max(0.0) + 1.0;
        while self.exponent(hi) <= q {
            hi = 2.0 * hi + 1.0;
            if hi > 1e15 {
                return Err(Error::RootNotConverged { iterations: 0, lo, hi });
            }
        }
        newton_bisect(
            |a| (self.exponent(a) - q, self.exponent_derivative(a)),
            lo,
            hi,
            TOL_ROOT,
            200,
        )
    }
}

/// On-disk model description.
///
/// ```toml
/// [model]
/// drift = 1.2
/// sigma = 0.0
///
/// [model.jump]
/// kind = "compound_poisson_exp"
/// rate = 1.0
/// claim_rate = 1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub jump: JumpConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    #[default]
    None,
    CompoundPoissonExp {
        rate: f64,
        claim_rate: f64,
    },
    CompoundPoissonMixedexp {
        rate: f64,
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    CompoundPoissonTable {
        rate: f64,
        x: Vec<f64>,
        density: Vec<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<LevyModel> {
        let jumps = match &self.jump {
            JumpConfig::None => JumpSpec::NoJumps,
            JumpConfig::CompoundPoissonExp { rate, claim_rate } => JumpSpec::exponential(*rate, *claim_rate),
            JumpConfig::CompoundPoissonMixedexp { rate, weights, rates } => JumpSpec::MixedExponential {
                rate: *rate,
                weights: weights.clone(),
                rates: rates.clone(),
            },
            JumpConfig::CompoundPoissonTable { rate, x, density } => JumpSpec::CompoundPoisson {
                rate: *rate,
                density: TabulatedDensity::new(x.clone(), density.clone())?,
            },
        };
        LevyModel::new(self.drift, self.sigma, jumps)
    }
}
