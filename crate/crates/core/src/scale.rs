//! q-scale functions `W^{(q)}` and `Z^{(q)}`.
//!
//! `W^{(q)}` vanishes on `(−∞, 0)` and has Laplace transform
//! `1/(φ(α) − q)` for `α > Φ(q)`; `Z^{(q)}(x) = 1 + q∫_0^x W^{(q)}`.
//!
//! Rational exponents (Brownian and mixed-exponential claims) use the
//! partial-fraction form `W^{(q)}(x) = Σ_j e^{θ_j x}/φ'(θ_j)` over the roots
//! of `φ(θ) = q`. Everything else goes through transform inversion after
//! the pole at `Φ(q)` has been shifted to the origin.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::inversion::InversionMethod;
use crate::levy_model::{JumpSpec, LevyModel};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::roots::Poly;

/// Requested evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Closed form when the exponent is rational, inversion otherwise.
    #[default]
    Auto,
    ClosedForm,
    TransformInversion,
}

/// Backend choice plus inversion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleOptions {
    #[serde(default)]
    pub backend: Backend,
    /// Inversion algorithm; `None` picks fixed Talbot for rational
    /// exponents and Euler summation for tabulated claim densities.
    #[serde(default)]
    pub inversion: Option<InversionMethod>,
}

impl ScaleOptions {
    pub fn closed_form() -> Self {
        Self {
            backend: Backend::ClosedForm,
            inversion: None,
        }
    }

    pub fn inversion() -> Self {
        Self {
            backend: Backend::TransformInversion,
            inversion: None,
        }
    }
}

/// `W(x) = Σ_j c_j e^{θ_j x}` with complex roots and residues.
#[derive(Debug, Clone)]
struct ExpSum {
    roots: Vec<Complex64>,
    coefs: Vec<Complex64>,
}

/// `(e^{z} − 1)/z`
fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - 1.0) / z
    }
}

impl ExpSum {
    fn build(model: &LevyModel, q: f64, phi_q: f64) -> Result<ExpSum> {
        let s2 = 0.5 * model.sigma() * model.sigma();
        let c = model.drift();
        let (lambda, weights, rates): (f64, &[f64], &[f64]) = match model.jumps() {
            JumpSpec::NoJumps => (0.0, &[], &[]),
            JumpSpec::MixedExponential { rate, weights, rates } => (*rate, weights, rates),
            JumpSpec::CompoundPoisson { .. } => {
                return Err(Error::ClosedForm("claim density is not mixed exponential".into()))
            }
        };
        // Numerator of φ(α) − q over the common denominator Π(η_i + α).
        let mut denom = Poly::constant(1.0);
        for &e in rates {
            denom = denom.mul(&Poly::linear(e, 1.0));
        }
        let mut num = Poly(vec![-lambda - q, c, s2]).mul(&denom);
        for (i, (&w, &e)) in weights.iter().zip(rates).enumerate() {
            let mut part = Poly::constant(lambda * w * e);
            for (j, &f) in rates.iter().enumerate() {
                if j != i {
                    part = part.mul(&Poly::linear(f, 1.0));
                }
            }
            num = num.add(&part);
        }
        let mut roots = num.trimmed().roots()?;
        let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));

        for r in roots.iter_mut() {
            // Newton polish on φ − q itself (better conditioned than N).
            for _ in 0..8 {
                let f = model.exponent_complex(*r) - q;
                let df = model.exponent_derivative_complex(*r);
                let step = f / df;
                if !step.is_finite() {
                    break;
                }
                *r -= step;
                if step.norm() <= 1e-16 * scale {
                    break;
                }
            }
            if r.im.abs() <= 1e-10 * scale {
                r.im = 0.0;
            }
        }
        // Pin the dominant root to the independently computed Φ(q).
        if let Some(k) =
            (0..roots.len()).min_by(|&i, &j| (roots[i] - phi_q).norm().total_cmp(&(roots[j] - phi_q).norm()))
        {
            if (roots[k] - phi_q).norm() > 1e-8 * scale {
                return Err(Error::ClosedForm(format!(
                    "no root near Φ(q) = {phi_q} (closest {})",
                    roots[k]
                )));
            }
            roots[k] = Complex64::new(phi_q, 0.0);
        }
        for i in 0..roots.len() {
            for j in 0..i {
                if (roots[i] - roots[j]).norm() < 1e-7 * scale {
                    return Err(Error::ClosedForm(format!(
                        "repeated root near {} of φ(θ) = {q}",
                        roots[i]
                    )));
                }
            }
        }
        let coefs: Vec<Complex64> = roots
            .iter()
            .map(|&r| 1.0 / model.exponent_derivative_complex(r))
            .collect();
        let residue: Complex64 = coefs.iter().sum();
        if residue.im.abs() > 1e-12 * coefs.iter().fold(1.0f64, |m, c| m.max(c.norm())) {
            return Err(Error::ClosedForm(format!(
                "imaginary residue {} in partial fractions",
                residue.im
            )));
        }
        Ok(ExpSum { roots, coefs })
    }

    /// `Re(c·e^{θx})` with the real growth factor kept out of complex
    /// arithmetic, so that overflow gives `±∞` rather than NaN.
    fn term(c: Complex64, theta: Complex64, x: f64) -> f64 {
        let phase = Complex64::from_polar(1.0, theta.im * x);
        let v = (c * phase).re;
        if v == 0.0 {
            0.0
        } else {
            v * (theta.re * x).exp()
        }
    }

    fn eval(&self, x: f64, order: i32) -> f64 {
        self.roots
            .iter()
            .zip(&self.coefs)
            .map(|(&r, &c)| Self::term(c * r.powi(order), r, x))
            .sum()
    }

    /// `∫_0^x W`
    fn integral(&self, x: f64) -> f64 {
        self.roots
            .iter()
            .zip(&self.coefs)
            .map(|(&r, &c)| {
                let z = r * x;
                if z.norm() < 1.0 {
                    (c * x * exprel(z)).re
                } else {
                    Self::term(c / r, r, x) - (c / r).re
                }
            })
            .sum()
    }

    /// `∫_0^∞ e^{−s u} W(x+u) du` for `s` beyond every root.
    fn shifted_laplace(&self, x: f64, s: f64) -> f64 {
        self.roots
            .iter()
            .zip(&self.coefs)
            .map(|(&r, &c)| Self::term(c / (s - r), r, x))
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Closed(ExpSum),
    Inversion(InversionMethod),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Quantity {
    W,
    W1,
    W2,
    Z,
}

/// Which route an evaluator uses after construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActiveBackend {
    ClosedForm,
    TransformInversion,
}

/// Evaluator of `W^{(q)}`, `Z^{(q)}` and derivatives for one `(model, q)`.
pub struct ScaleEvaluator {
    model: LevyModel,
    q: f64,
    phi_q: f64,
    repr: Repr,
    cache: RwLock<HashMap<(Quantity, u64), f64>>,
}

impl fmt::Debug for ScaleEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleEvaluator")
            .field("model", &self.model)
            .field("q", &self.q)
            .field("phi_q", &self.phi_q)
            .field("repr", &self.repr)
            .finish()
    }
}

impl Clone for ScaleEvaluator {
    fn clone(&self) -> Self {
        Self {
            model: self.model.clone(),
            q: self.q,
            phi_q: self.phi_q,
            repr: self.repr.clone(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl ScaleEvaluator {
    /// Evaluator with the default (automatic) backend.
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        Self::with_options(model, q, ScaleOptions::default())
    }

    pub fn with_options(model: &LevyModel, q: f64, options: ScaleOptions) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(domain("ScaleEvaluator", "q >= 0"));
        }
        Self::build(model, q, options)
    }

    /// Like [`ScaleEvaluator::with_options`] but accepts any real `q` for
    /// which `Φ(q)` exists (needed for tilted scale functions).
    pub(crate) fn build(model: &LevyModel, q: f64, options: ScaleOptions) -> Result<Self> {
        if !q.is_finite() {
            return Err(domain("ScaleEvaluator", "finite q"));
        }
        let phi_q = model.largest_root(q)?;
        let default_method = if model.has_rational_exponent() {
            InversionMethod::default()
        } else {
            InversionMethod::Euler { terms: 20 }
        };
        let method = options.inversion.unwrap_or(default_method);
        let repr = match options.backend {
            Backend::ClosedForm => {
                if !model.has_rational_exponent() {
                    return Err(Error::Unsupported {
                        op: "closed-form scale function",
                        reason: "claim density is not mixed exponential".into(),
                    });
                }
                Repr::Closed(ExpSum::build(model, q, phi_q)?)
            }
            Backend::TransformInversion => Repr::Inversion(method),
            Backend::Auto => {
                if model.has_rational_exponent() {
                    match ExpSum::build(model, q, phi_q) {
                        Ok(sum) => Repr::Closed(sum),
                        Err(_) => Repr::Inversion(method),
                    }
                } else {
                    Repr::Inversion(method)
                }
            }
        };
        Ok(Self {
            model: model.clone(),
            q,
            phi_q,
            repr,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Scale functions of the model tilted by `beta`, at level `p`
    /// (`W_β^{(p)}`, `Z_β^{(p)}`). `p` may be negative as long as
    /// `Φ_β(p)` exists.
    pub fn tilted(model: &LevyModel, beta: f64, p: f64, options: ScaleOptions) -> Result<Self> {
        let tilted = model.tilt_unchecked(beta)?;
        Self::build(&tilted, p, options).map_err(|e| match e {
            Error::Domain { .. } => domain(
                "tilted scale function",
                format!("p = {p} above the minimum of the tilted exponent"),
            ),
            other => other,
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Φ(q)`
    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn backend(&self) -> ActiveBackend {
        match self.repr {
            Repr::Closed(_) => ActiveBackend::ClosedForm,
            Repr::Inversion(_) => ActiveBackend::TransformInversion,
        }
    }

    /// `q/Φ(q)`, with the limit at `q = 0` taken as `φ'(0+)` when the
    /// process drifts up and 0 otherwise.
    pub fn q_over_phi(&self) -> f64 {
        if self.q.abs() < 1e-10 {
            let slope = self.model.mean_drift();
            if slope > 0.0 {
                // Φ(q) ≈ q/φ'(0+)
                return slope;
            }
            return 0.0;
        }
        self.q / self.phi_q
    }

    fn cached(&self, kind: Quantity, x: f64, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let key = (kind, x.to_bits());
        if let Some(v) = self.cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(v);
        }
        let v = compute()?;
        if let Ok(mut c) = self.cache.write() {
            c.insert(key, v);
        }
        Ok(v)
    }

    fn invert(&self, method: &InversionMethod, x: f64, transform: impl Fn(Complex64) -> Complex64) -> Result<f64> {
        let v = method.invert(transform, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Inversion {
                x,
                error_estimate: f64::INFINITY,
            })
        }
    }

    /// `e^{−Φx}·W^{(k)}(x)` by inversion of the shifted transform.
    fn invert_w(&self, method: &InversionMethod, x: f64, order: u8) -> Result<f64> {
        let phi = self.phi_q;
        let q = self.q;
        let w0 = self.model.scale_at_zero();
        let w1 = self.model.scale_derivative_at_zero(q);
        let m = &self.model;
        let v = self.invert(method, x, |s| {
            let sig = s + phi;
            let lw = 1.0 / (m.exponent_complex(sig) - q);
            match order {
                0 => lw,
                1 => sig * lw - w0,
                _ => sig * sig * lw - sig * w0 - w1,
            }
        })?;
        Ok((phi * x).exp() * v)
    }

    /// `W^{(q)}(x)`; zero for `x < 0` and `W(0+)` at `x = 0`.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(domain("W", "x not NaN"));
        }
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.model.scale_at_zero());
        }
        match &self.repr {
            Repr::Closed(sum) => Ok(sum.eval(x, 0)),
            Repr::Inversion(method) => self.cached(Quantity::W, x, || self.invert_w(method, x, 0)),
        }
    }

    /// `d^k W^{(q)}/dx^k` for `k ∈ {1, 2}` and `x > 0`; the first
    /// derivative also at `x = 0` as `W'(0+)`.
    pub fn w_deriv(&self, x: f64, order: u8) -> Result<f64> {
        if x == 0.0 && order == 1 {
            return Ok(self.model.scale_derivative_at_zero(self.q));
        }
        if !(x > 0.0) {
            return Err(domain("W derivative", "x > 0"));
        }
        if !(order == 1 || order == 2) {
            return Err(domain("W derivative", "order 1 or 2"));
        }
        match &self.repr {
            Repr::Closed(sum) => Ok(sum.eval(x, order as i32)),
            Repr::Inversion(method) => {
                let kind = if order == 1 { Quantity::W1 } else { Quantity::W2 };
                self.cached(kind, x, || self.invert_w(method, x, order))
            }
        }
    }

    pub fn w_prime(&self, x: f64) -> Result<f64> {
        self.w_deriv(x, 1)
    }

    pub fn w_second(&self, x: f64) -> Result<f64> {
        self.w_deriv(x, 2)
    }

    /// `Z^{(q)}(x)`; equal to 1 for `x <= 0`.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(domain("Z", "x not NaN"));
        }
        if x <= 0.0 || self.q == 0.0 {
            return Ok(1.0);
        }
        match &self.repr {
            Repr::Closed(sum) => Ok(1.0 + self.q * sum.integral(x)),
            Repr::Inversion(method) => self.cached(Quantity::Z, x, || {
                let q = self.q;
                let s0 = self.phi_q.max(0.0);
                let m = &self.model;
                let v = self.invert(method, x, |s| {
                    let sig = s + s0;
                    1.0 / sig + q / (sig * (m.exponent_complex(sig) - q))
                })?;
                Ok((s0 * x).exp() * v)
            }),
        }
    }

    /// `∫_0^x W^{(q)}(y) dy`
    pub fn w_integral(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match &self.repr {
            Repr::Closed(sum) => Ok(sum.integral(x)),
            Repr::Inversion(_) if self.q != 0.0 => Ok((self.z(x)? - 1.0) / self.q),
            Repr::Inversion(_) => {
                let mut err = None;
                let r = integrate(
                    |y| match self.w(y) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    0.0,
                    x,
                    Tolerance::new(1e-12, 1e-10),
                );
                if let Some(e) = err {
                    return Err(e);
                }
                r.checked()
            }
        }
    }

    /// `∫_0^∞ e^{−s u} W^{(q)}(x+u) du = e^{sx}∫_x^∞ e^{−sy} W^{(q)}(y) dy`
    /// for `s > Φ(q)`.
    pub fn shifted_laplace(&self, x: f64, s: f64) -> Result<f64> {
        if !(s > self.phi_q) {
            return Err(domain("shifted Laplace transform of W", "s > Φ(q)"));
        }
        let x = x.max(0.0);
        match &self.repr {
            Repr::Closed(sum) => Ok(sum.shifted_laplace(x, s)),
            Repr::Inversion(_) => {
                let mut err = None;
                let r = integrate_to_infinity(
                    |u| match self.w(x + u) {
                        Ok(v) => (-s * u).exp() * v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    0.0,
                    1.0 / (s - self.phi_q),
                    Tolerance::new(1e-13, 1e-10),
                );
                if let Some(e) = err {
                    return Err(e);
                }
                r.checked()
            }
        }
    }
}

/// `W_β^{(p)}(x)`: the `p`-scale function of the model tilted by `beta`.
pub fn w_tilted(model: &LevyModel, beta: f64, p: f64, x: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("W tilted", "beta >= 0"));
    }
    ScaleEvaluator::tilted(model, beta, p, ScaleOptions::default())?.w(x)
}

/// `Z_β^{(p)}(x)`
pub fn z_tilted(model: &LevyModel, beta: f64, p: f64, x: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("Z tilted", "beta >= 0"));
    }
    ScaleEvaluator::tilted(model, beta, p, ScaleOptions::default())?.z(x)
}

/// `P_x(I_∞ >= 0) = φ'(0+)·W(x)` for models drifting to `+∞`.
pub fn survival_probability(model: &LevyModel, x: f64) -> Result<f64> {
    let slope = model.mean_drift();
    if !(slope > 0.0) {
        return Err(domain("survival_probability", "φ'(0+) > 0"));
    }
    if !(x >= 0.0) {
        return Err(domain("survival_probability", "x >= 0"));
    }
    let ev = ScaleEvaluator::new(model, 0.0)?;
    Ok((slope * ev.w(x)?).clamp(0.0, 1.0))
}
