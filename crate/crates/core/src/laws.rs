//! Exact fluctuation identities at ruin.
//!
//! All densities are with respect to Lebesgue measure in their declared
//! coordinates. Atoms (creeping) have their own functions. Domain
//! constraints are checked strictly; limits such as `a → ∞` or `b → 0` have
//! dedicated functions instead of clamping.
//!
//! Notation: `T` is the ruin time, `T₀` the first return to 0 after `T`,
//! `l` the last time below 0, `D` the total time below 0; `S` and `I` are
//! the running supremum and infimum.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::levy_model::{JumpSpec, LevyModel};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::scale::{ScaleEvaluator, ScaleOptions};

fn require(ok: bool, op: &'static str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(domain(op, constraint))
    }
}

fn law_tolerance() -> Tolerance {
    Tolerance::new(1e-13, 1e-11)
}

/// `∫_from^∞ f`, truncated at the end of a tabulated claim support.
pub(crate) fn integrate_claim_tail<F: FnMut(f64) -> Result<f64>>(
    jumps: &JumpSpec,
    mut f: F,
    from: f64,
    decay: f64,
    tol: Tolerance,
) -> Result<f64> {
    let mut err = None;
    let mut g = |y: f64| match f(y) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let r = match jumps {
        JumpSpec::NoJumps => return Ok(0.0),
        JumpSpec::CompoundPoisson { density, .. } => {
            let end = density.support_end();
            if end <= from {
                return Ok(0.0);
            }
            integrate(&mut g, from, end, tol)
        }
        JumpSpec::MixedExponential { .. } => integrate_to_infinity(&mut g, from, decay, tol),
    };
    if let Some(e) = err {
        return Err(e);
    }
    r.checked()
}

/// `E_x[e^{−αT_y⁻ + βX(T_y⁻)}; T_y⁻ < ∞]` for `x > y`:
/// `e^{βx}(Z_β^{(p)}(x−y) − (p/Φ_β(p))W_β^{(p)}(x−y))` with `p = α − φ(β)`.
pub fn emery_transform(model: &LevyModel, x: f64, y_level: f64, alpha: f64, beta: f64) -> Result<f64> {
    emery_with(model, x, y_level, alpha, beta, ScaleOptions::default())
}

fn emery_with(model: &LevyModel, x: f64, y_level: f64, alpha: f64, beta: f64, opts: ScaleOptions) -> Result<f64> {
    require(x > y_level, "emery_transform", "x > y")?;
    require(alpha >= 0.0, "emery_transform", "alpha >= 0")?;
    require(beta >= 0.0, "emery_transform", "beta >= 0")?;
    let p = alpha - model.exponent(beta);
    let ev = ScaleEvaluator::tilted(model, beta, p, opts)?;
    let h = x - y_level;
    Ok((beta * x).exp() * (ev.z(h)? - ev.q_over_phi() * ev.w(h)?))
}

/// Shared scale-function evaluators for one `(model, q, β)`.
#[derive(Debug)]
pub struct LawContext {
    model: LevyModel,
    q: f64,
    beta: f64,
    options: ScaleOptions,
    wq: ScaleEvaluator,
    wbeta: OnceLock<Result<ScaleEvaluator>>,
    w0: OnceLock<Result<ScaleEvaluator>>,
    recovery: OnceLock<Result<ScaleEvaluator>>,
}

fn get(
    cell: &OnceLock<Result<ScaleEvaluator>>,
    init: impl FnOnce() -> Result<ScaleEvaluator>,
) -> Result<&ScaleEvaluator> {
    cell.get_or_init(init).as_ref().map_err(Clone::clone)
}

impl LawContext {
    pub fn new(model: &LevyModel, q: f64, beta: f64) -> Result<Self> {
        Self::with_options(model, q, beta, ScaleOptions::default())
    }

    pub fn with_options(model: &LevyModel, q: f64, beta: f64, options: ScaleOptions) -> Result<Self> {
        require(q >= 0.0 && q.is_finite(), "LawContext", "q >= 0")?;
        require(beta >= 0.0 && beta.is_finite(), "LawContext", "beta >= 0")?;
        Ok(Self {
            model: model.clone(),
            q,
            beta,
            options,
            wq: ScaleEvaluator::with_options(model, q, options)?,
            wbeta: OnceLock::new(),
            w0: OnceLock::new(),
            recovery: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `W^{(q)}`
    pub fn scale_q(&self) -> &ScaleEvaluator {
        &self.wq
    }

    /// `W^{(β)}`
    pub fn scale_beta(&self) -> Result<&ScaleEvaluator> {
        get(&self.wbeta, || {
            ScaleEvaluator::with_options(&self.model, self.beta, self.options)
        })
    }

    /// `W = W^{(0)}`
    pub fn scale_zero(&self) -> Result<&ScaleEvaluator> {
        get(&self.w0, || {
            ScaleEvaluator::with_options(&self.model, 0.0, self.options)
        })
    }

    /// `W_{Φ(β)}^{(q−β)}`, the evaluator behind the recovery transforms.
    fn scale_recovery(&self) -> Result<&ScaleEvaluator> {
        get(&self.recovery, || {
            let phi_b = self.scale_beta()?.phi_q();
            ScaleEvaluator::tilted(&self.model, phi_b, self.q - self.beta, self.options)
        })
    }

    /// `Φ(β)`
    pub fn phi_beta(&self) -> Result<f64> {
        Ok(self.scale_beta()?.phi_q())
    }

    /// `Φ'(β) = 1/φ'(Φ(β))`
    pub fn phi_beta_derivative(&self) -> Result<f64> {
        Ok(1.0 / self.model.exponent_derivative(self.phi_beta()?))
    }

    fn pi(&self, u: f64) -> f64 {
        self.model.jumps().levy_density(u)
    }

    fn w(&self, x: f64) -> Result<f64> {
        self.wq.w(x)
    }

    fn drift_up(&self, op: &'static str) -> Result<f64> {
        let slope = self.model.mean_drift();
        if slope > 0.0 {
            Ok(slope)
        } else {
            Err(domain(op, "a model drifting to +∞ (φ'(0+) > 0)"))
        }
    }

    /// Potential density `u^{(q)}(x,y) = W^{(q)}(x)e^{−Φ(q)y} − W^{(q)}(x−y)`.
    pub fn potential_density(&self, x: f64, y: f64) -> Result<f64> {
        require(x >= 0.0 && y >= 0.0, "potential_density", "x >= 0 and y >= 0")?;
        Ok(self.w(x)? * (-self.wq.phi_q() * y).exp() - self.w(x - y)?)
    }

    /// `f_q(y,z|x) = u^{(q)}(x,y) π(−z−y)`, density of
    /// `(e^{−qT}; X(T−) ∈ dy, |X(T)| ∈ dz)`.
    pub fn triple_density(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        require(
            x >= 0.0 && y > 0.0 && z > 0.0,
            "triple_law_density",
            "x >= 0, y > 0, z > 0",
        )?;
        Ok(self.potential_density(x, y)? * self.pi(z + y))
    }

    /// `f_q(y|x) = Π(−∞,−y) u^{(q)}(x,y)`, density of `(e^{−qT}; X(T−) ∈ dy)`
    /// on ruin by a jump.
    pub fn triple_marginal(&self, x: f64, y: f64) -> Result<f64> {
        require(x >= 0.0 && y > 0.0, "triple_marginal", "x >= 0, y > 0")?;
        Ok(self.model.jumps().tail_mass(y) * self.potential_density(x, y)?)
    }

    /// `f_q(y,z|x)/f_q(y,z|0)` for bounded variation.
    pub fn triple_ratio(&self, x: f64, y: f64) -> Result<f64> {
        let b = self
            .model
            .drift_coefficient_b()
            .map_err(|_| domain("triple_law_ratio", "a bounded-variation model (sigma = 0)"))?;
        require(x >= 0.0 && y > 0.0, "triple_law_ratio", "x >= 0, y > 0")?;
        if x < y {
            Ok(b * self.w(x)?)
        } else {
            Ok(b * (self.w(x)? - (self.wq.phi_q() * y).exp() * self.w(x - y)?))
        }
    }

    /// Density of `(e^{−qT}; X(T−) ∈ dy, |X(T)| ∈ dz, I_{T−} > b, S_{T−} <= a)`:
    /// `π(−z−y)[W(x−b)W(a−y)/W(a−b) − W(x−y)]`.
    pub fn quintuple_density(&self, x: f64, y: f64, z: f64, a: f64, b: f64) -> Result<f64> {
        require(
            b > 0.0 && b < a.min(x).min(y) && a > x && a > y && z > 0.0,
            "quintuple_density",
            "0 < b < a∧x∧y, a > x, a > y, z > 0",
        )?;
        let bracket = self.w(x - b)? * self.w(a - y)? / self.w(a - b)? - self.w(x - y)?;
        Ok(self.pi(z + y) * bracket)
    }

    /// `a → ∞` limit: `π(−z−y)[W(x−b)e^{−(y−b)Φ(q)} − W(x−y)]`.
    pub fn quintuple_a_infinity(&self, x: f64, y: f64, z: f64, b: f64) -> Result<f64> {
        require(
            b >= 0.0 && b <= x && b < y && z > 0.0,
            "quintuple_a_infinity",
            "0 <= b <= x, b < y, z > 0",
        )?;
        let phi = self.wq.phi_q();
        Ok(self.pi(z + y) * (self.w(x - b)? * (-(y - b) * phi).exp() - self.w(x - y)?))
    }

    /// `b → 0` limit: `K_x(y,z,a) = π(−z−y)[W(x)W(a−y)/W(a) − W(x−y)]`.
    pub fn quintuple_b_zero(&self, x: f64, y: f64, z: f64, a: f64) -> Result<f64> {
        require(
            x >= 0.0 && y > 0.0 && z > 0.0 && a > x && a > y,
            "quintuple_b_zero",
            "x >= 0, y > 0, z > 0, a > x, a > y",
        )?;
        Ok(self.pi(z + y) * (self.w(x)? * self.w(a - y)? / self.w(a)? - self.w(x - y)?))
    }

    /// Density in `(y, z, b)` with `I_{T−} ∈ db`:
    /// `π(−z−y)e^{−Φ(q)(y−b)}(W'(x−b) − Φ(q)W(x−b))`.
    pub fn infimum_density(&self, x: f64, y: f64, z: f64, b: f64) -> Result<f64> {
        require(
            b > 0.0 && b < x.min(y) && z > 0.0,
            "infimum_density",
            "0 < b < x∧y, z > 0",
        )?;
        let phi = self.wq.phi_q();
        let h = x - b;
        Ok(self.pi(z + y) * (-(y - b) * phi).exp() * (self.wq.w_prime(h)? - phi * self.w(h)?))
    }

    /// Density of `(e^{−qT−β(T₀−T)}; X(T−) ∈ dy, |X(T)| ∈ dz, S_{T−} <= a,
    /// I_{T₀} > −b, T₀ < ∞)`: `K_x(y,z,a)·W^{(β)}(b−z)/W^{(β)}(b)`.
    pub fn recovery_joint(&self, x: f64, y: f64, z: f64, a: f64, b: f64) -> Result<f64> {
        require(
            z > 0.0 && z < b && b <= a.min(x).min(y) && a > x && a > y,
            "recovery_joint",
            "0 < z < b <= a∧x∧y, a > x, a > y",
        )?;
        let wb = self.scale_beta()?;
        Ok(self.quintuple_b_zero(x, y, z, a)? * wb.w(b - z)? / wb.w(b)?)
    }

    /// `a, b → ∞` limit: `π(−z−y)e^{−Φ(β)z}u^{(q)}(x,y)`.
    pub fn recovery_density(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        Ok(self.triple_density(x, y, z)? * (-self.phi_beta()? * z).exp())
    }

    /// `E_x[e^{−qT−β(T₀−T)}; T₀ < ∞]`.
    pub fn recovery_transform(&self, x: f64) -> Result<f64> {
        require(x >= 0.0, "recovery_transform", "x >= 0")?;
        let ev = self.scale_recovery()?;
        let phi_b = self.phi_beta()?;
        Ok((phi_b * x).exp() * (ev.z(x)? - ev.q_over_phi() * ev.w(x)?))
    }

    /// `∬ π(−z−y)e^{−Φ(β)z}u^{(q)}(x,y) dy dz`: the jump part of the
    /// recovery transform.
    pub fn jump_recovery_mass(&self, x: f64) -> Result<f64> {
        require(x >= 0.0, "jump_recovery_mass", "x >= 0")?;
        let phi_b = self.phi_beta()?;
        let jumps = self.model.jumps();
        let inner = |y: f64| jumps.discounted_tail(y, phi_b);
        let tol = law_tolerance();
        let below = if x > 0.0 {
            let mut err = None;
            let r = integrate(
                |y| match self.potential_density(x, y) {
                    Ok(u) => u * inner(y),
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                x,
                tol,
            );
            if let Some(e) = err {
                return Err(e);
            }
            r.checked()?
        } else {
            0.0
        };
        let phi_q = self.wq.phi_q();
        let wx = self.w(x)?;
        let decay = 1.0 / (phi_q + 1.0 / jumps.claim_mean().max(1e-12));
        let above = integrate_claim_tail(jumps, |y| Ok((-phi_q * y).exp() * inner(y)), x, decay, tol)?;
        Ok(below + wx * above)
    }

    /// `E_x[e^{−qT−β(T₀−T)}; X(T−) = X(T) = 0, T₀ < ∞]` (ruin by creeping),
    /// for `σ > 0`.
    pub fn creeping_recovery(&self, x: f64) -> Result<f64> {
        if self.model.sigma() == 0.0 {
            return Err(domain("creeping_recovery", "sigma > 0 (no creeping otherwise)"));
        }
        Ok(self.recovery_transform(x)? - self.jump_recovery_mass(x)?)
    }

    /// `E_x[e^{−qT}; X(T) = 0] = (σ²/2)(W'(x) − Φ(q)W(x))`, used as an
    /// independent check of the creeping identities.
    pub fn creeping_probability(&self, x: f64) -> Result<f64> {
        let s2 = 0.5 * self.model.sigma().powi(2);
        if s2 == 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        Ok(s2 * (self.wq.w_prime(x)? - self.wq.phi_q() * self.w(x)?))
    }

    /// `R(z,a,b) = E_{−z}(e^{−βl}; l < T_a⁺, T_{−b}⁻ = ∞)
    ///          = φ'(0+) W^{(β)}(b−z) W^{(β)}(a) / W^{(β)}(a+b)`.
    pub fn last_passage_factor(&self, z: f64, a: f64, b: f64) -> Result<f64> {
        let slope = self.drift_up("last_passage_factor")?;
        require(z > 0.0 && z < b && a > 0.0, "last_passage_factor", "0 < z < b, a > 0")?;
        let wb = self.scale_beta()?;
        Ok(slope * wb.w(b - z)? * wb.w(a)? / wb.w(a + b)?)
    }

    /// `R(z,a,b)` without the two-sided exit constraint on the passage
    /// to `a`; kept for comparison only.
    pub fn last_passage_factor_uncorrected(&self, z: f64, a: f64, b: f64) -> Result<f64> {
        let slope = self.drift_up("last_passage_factor_uncorrected")?;
        require(
            z > 0.0 && z < b && a > 0.0,
            "last_passage_factor_uncorrected",
            "0 < z < b, a > 0",
        )?;
        let wb = self.scale_beta()?;
        let phi = wb.phi_q();
        let dphi = self.phi_beta_derivative()?;
        Ok(slope * (-phi * (b - z)).exp() * wb.w(b - z)? - slope * dphi
            + slope * (-(a + z) * phi).exp() * (wb.w(a)? + dphi - (-(a + b) * phi).exp() * wb.w(a + b)?))
    }

    /// Density of `(e^{−qT−β(l−T)}; X(T−) ∈ dy, |X(T)| ∈ dz, I_l > −b,
    /// S_l <= a)`: `K_x(y,z,a)·R(z,a,b)`.
    pub fn last_passage_joint(&self, x: f64, y: f64, z: f64, a: f64, b: f64) -> Result<f64> {
        self.drift_up("last_passage_joint")?;
        require(
            z > 0.0 && z < b && b <= a.min(x).min(y) && a > x && a > y,
            "last_passage_joint",
            "0 < z < b <= a∧x∧y, a > x, a > y",
        )?;
        Ok(self.quintuple_b_zero(x, y, z, a)? * self.last_passage_factor(z, a, b)?)
    }

    /// The same law with [`LawContext::last_passage_factor_uncorrected`].
    pub fn last_passage_joint_uncorrected(&self, x: f64, y: f64, z: f64, a: f64, b: f64) -> Result<f64> {
        self.drift_up("last_passage_joint")?;
        require(
            z > 0.0 && z < b && b <= a.min(x).min(y) && a > x && a > y,
            "last_passage_joint",
            "0 < z < b <= a∧x∧y, a > x, a > y",
        )?;
        Ok(self.quintuple_b_zero(x, y, z, a)? * self.last_passage_factor_uncorrected(z, a, b)?)
    }

    /// `a, b → ∞` limit: `φ'(0+)Φ'(β)e^{−zΦ(β)}u^{(q)}(x,y)π(−z−y)`.
    pub fn last_passage_density(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let slope = self.drift_up("last_passage_density")?;
        Ok(slope * self.phi_beta_derivative()? * self.recovery_density(x, y, z)?)
    }

    /// `E_x[e^{−qT−β(l−T)}; T < ∞] = φ'(0+)Φ'(β)·E_x[e^{−qT−β(T₀−T)}; T₀ < ∞]`.
    pub fn last_passage_transform(&self, x: f64) -> Result<f64> {
        let slope = self.drift_up("last_passage_transform")?;
        Ok(slope * self.phi_beta_derivative()? * self.recovery_transform(x)?)
    }

    /// Creeping analogue: `E_x[e^{−qT−β(l−T)}; X(T−) = X(T) = 0, T < ∞]`.
    pub fn creeping_last_passage(&self, x: f64) -> Result<f64> {
        let slope = self.drift_up("creeping_last_passage")?;
        Ok(slope * self.phi_beta_derivative()? * self.creeping_recovery(x)?)
    }

    /// `E_x e^{−βD} = φ'(0+)Φ(β)e^{Φ(β)x}∫_x^∞ e^{−Φ(β)y}W(y)dy`.
    pub fn duration_transform(&self, x: f64) -> Result<f64> {
        let slope = self.drift_up("duration_transform")?;
        require(self.beta > 0.0, "duration_transform", "beta > 0")?;
        require(x >= 0.0, "duration_transform", "x >= 0")?;
        let phi_b = self.phi_beta()?;
        Ok(slope * phi_b * self.scale_zero()?.shifted_laplace(x, phi_b)?)
    }

    /// `E_x[e^{−αT_y⁻ + βX(T_y⁻)}]` with this context's scale options.
    pub fn emery(&self, x: f64, y_level: f64, alpha: f64, beta: f64) -> Result<f64> {
        emery_with(&self.model, x, y_level, alpha, beta, self.options)
    }
}

macro_rules! wrapper {
    ($(#[$m:meta])* $name:ident, $method:ident, ($($arg:ident),*), beta) => {
        $(#[$m])*
        pub fn $name(model: &LevyModel, q: f64, beta: f64, $($arg: f64),*) -> Result<f64> {
            LawContext::new(model, q, beta)?.$method($($arg),*)
        }
    };
    ($(#[$m:meta])* $name:ident, $method:ident, ($($arg:ident),*)) => {
        $(#[$m])*
        pub fn $name(model: &LevyModel, q: f64, $($arg: f64),*) -> Result<f64> {
            LawContext::new(model, q, 0.0)?.$method($($arg),*)
        }
    };
}

wrapper!(
    /// See [`LawContext::potential_density`].
    potential_density_u, potential_density, (x, y));
wrapper!(
    /// See [`LawContext::triple_density`].
    triple_law_density, triple_density, (x, y, z));
wrapper!(
    /// See [`LawContext::triple_ratio`].
    triple_law_ratio, triple_ratio, (x, y));
wrapper!(
    /// See [`LawContext::quintuple_density`].
    quintuple_density, quintuple_density, (x, y, z, a, b));
wrapper!(
    /// See [`LawContext::infimum_density`].
    infimum_density, infimum_density, (x, y, z, b));
wrapper!(
    /// See [`LawContext::recovery_joint`].
    recovery_joint, recovery_joint, (x, y, z, a, b), beta);
wrapper!(
    /// See [`LawContext::recovery_transform`].
    recovery_transform, recovery_transform, (x), beta);
wrapper!(
    /// See [`LawContext::creeping_recovery`].
    creeping_recovery, creeping_recovery, (x), beta);
wrapper!(
    /// See [`LawContext::last_passage_joint`].
    last_passage_joint, last_passage_joint, (x, y, z, a, b), beta);
wrapper!(
    /// See [`LawContext::last_passage_transform`].
    last_passage_transform, last_passage_transform, (x), beta);

/// `E_x e^{−βD}`; see [`LawContext::duration_transform`].
pub fn duration_transform(model: &LevyModel, beta: f64, x: f64) -> Result<f64> {
    LawContext::new(model, 0.0, beta)?.duration_transform(x)
}

/// Named laws for batch evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    PotentialDensity,
    TripleDensity,
    TripleMarginal,
    TripleRatio,
    /// Uses `q` as `α`, `beta` as `β` and `y` as the level.
    EmeryTransform,
    QuintupleDensity,
    QuintupleAInfinity,
    QuintupleBZero,
    InfimumDensity,
    RecoveryJoint,
    RecoveryDensity,
    RecoveryTransform,
    CreepingRecovery,
    LastPassageJoint,
    LastPassageJointUncorrected,
    LastPassageDensity,
    LastPassageTransform,
    CreepingLastPassage,
    DurationTransform,
}

impl Law {
    pub const ALL: [Law; 19] = [
        Law::PotentialDensity,
        Law::TripleDensity,
        Law::TripleMarginal,
        Law::TripleRatio,
        Law::EmeryTransform,
        Law::QuintupleDensity,
        Law::QuintupleAInfinity,
        Law::QuintupleBZero,
        Law::InfimumDensity,
        Law::RecoveryJoint,
        Law::RecoveryDensity,
        Law::RecoveryTransform,
        Law::CreepingRecovery,
        Law::LastPassageJoint,
        Law::LastPassageJointUncorrected,
        Law::LastPassageDensity,
        Law::LastPassageTransform,
        Law::CreepingLastPassage,
        Law::DurationTransform,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Law::PotentialDensity => "potential_density",
            Law::TripleDensity => "triple_density",
            Law::TripleMarginal => "triple_marginal",
            Law::TripleRatio => "triple_ratio",
            Law::EmeryTransform => "emery_transform",
            Law::QuintupleDensity => "quintuple_density",
            Law::QuintupleAInfinity => "quintuple_a_infinity",
            Law::QuintupleBZero => "quintuple_b_zero",
            Law::InfimumDensity => "infimum_density",
            Law::RecoveryJoint => "recovery_joint",
            Law::RecoveryDensity => "recovery_density",
            Law::RecoveryTransform => "recovery_transform",
            Law::CreepingRecovery => "creeping_recovery",
            Law::LastPassageJoint => "last_passage_joint",
            Law::LastPassageJointUncorrected => "last_passage_joint_uncorrected",
            Law::LastPassageDensity => "last_passage_density",
            Law::LastPassageTransform => "last_passage_transform",
            Law::CreepingLastPassage => "creeping_last_passage",
            Law::DurationTransform => "duration_transform",
        }
    }

    /// Coordinates in which the value is a density; empty for transforms
    /// and ratios.
    pub fn density_coordinates(&self) -> &'static [&'static str] {
        match self {
            Law::PotentialDensity | Law::TripleMarginal => &["y"],
            Law::TripleDensity
            | Law::QuintupleDensity
            | Law::QuintupleAInfinity
            | Law::QuintupleBZero
            | Law::RecoveryJoint
            | Law::RecoveryDensity
            | Law::LastPassageJoint
            | Law::LastPassageJointUncorrected
            | Law::LastPassageDensity => &["y", "z"],
            Law::InfimumDensity => &["y", "z", "b"],
            _ => &[],
        }
    }
}

impl std::str::FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Law> {
        Law::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| domain("law", format!("a known law name, got '{s}'")))
    }
}

/// Arguments of a law evaluation. Unused coordinates are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawQuery {
    pub x: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

/// A law value with its coordinate signature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawDensity {
    pub law: Law,
    pub value: f64,
    pub density_coordinates: &'static [&'static str],
}

impl LawContext {
    /// Evaluates `law` at `query` (whose `q` and `beta` must match the
    /// context unless the law is [`Law::EmeryTransform`]).
    pub fn evaluate(&self, law: Law, query: &LawQuery) -> Result<LawDensity> {
        let LawQuery { x, y, z, a, b, .. } = *query;
        let value = match law {
            Law::PotentialDensity => self.potential_density(x, y)?,
            Law::TripleDensity => self.triple_density(x, y, z)?,
            Law::TripleMarginal => self.triple_marginal(x, y)?,
            Law::TripleRatio => self.triple_ratio(x, y)?,
            Law::EmeryTransform => self.emery(x, y, query.q, query.beta)?,
            Law::QuintupleDensity => self.quintuple_density(x, y, z, a, b)?,
            Law::QuintupleAInfinity => self.quintuple_a_infinity(x, y, z, b)?,
            Law::QuintupleBZero => self.quintuple_b_zero(x, y, z, a)?,
            Law::InfimumDensity => self.infimum_density(x, y, z, b)?,
            Law::RecoveryJoint => self.recovery_joint(x, y, z, a, b)?,
            Law::RecoveryDensity => self.recovery_density(x, y, z)?,
            Law::RecoveryTransform => self.recovery_transform(x)?,
            Law::CreepingRecovery => self.creeping_recovery(x)?,
            Law::LastPassageJoint => self.last_passage_joint(x, y, z, a, b)?,
            Law::LastPassageJointUncorrected => self.last_passage_joint_uncorrected(x, y, z, a, b)?,
            Law::LastPassageDensity => self.last_passage_density(x, y, z)?,
            Law::LastPassageTransform => self.last_passage_transform(x)?,
            Law::CreepingLastPassage => self.creeping_last_passage(x)?,
            Law::DurationTransform => self.duration_transform(x)?,
        };
        Ok(LawDensity {
            law,
            value,
            density_coordinates: law.density_coordinates(),
        })
    }
}

/// One-shot evaluation of a named law.
pub fn evaluate(model: &LevyModel, law: Law, query: &LawQuery) -> Result<LawDensity> {
    LawContext::new(model, query.q, query.beta)?.evaluate(law, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cl() -> LevyModel {
        LevyModel::exponential_claims(1.2, 0.0, 1.0, 1.0).unwrap()
    }

    fn jd() -> LevyModel {
        LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap()
    }

    fn bm() -> LevyModel {
        LevyModel::brownian(1.0, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn integrate2(f: impl Fn(f64, f64) -> f64, y: (f64, f64), z: (f64, f64)) -> f64 {
        let tol = Tolerance::new(1e-12, 1e-10);
        integrate(|yy| integrate(|zz| f(yy, zz), z.0, z.1, tol).value, y.0, y.1, tol).value
    }

    #[test]
    fn potential_density_branches() {
        let ctx = LawContext::new(&cl(), 0.1, 0.0).unwrap();
        let phi = ctx.scale_q().phi_q();
        let v = ctx.potential_density(1.0, 1.5).unwrap();
        assert!(close(v, ctx.scale_q().w(1.0).unwrap() * (-phi * 1.5).exp(), 1e-14));
        let ubv = LawContext::new(&jd(), 0.1, 0.0).unwrap();
        assert_eq!(ubv.potential_density(0.0, 0.7).unwrap(), 0.0);
        assert!(ctx.potential_density(-1.0, 0.5).is_err());
    }

    #[test]
    fn triple_law_marginal_and_ruin_mass() {
        let model = cl();
        let ctx = LawContext::new(&model, 0.0, 0.0).unwrap();
        for &(x, y) in &[(1.0, 0.5), (0.5, 2.0), (0.0, 1.0)] {
            let marg = integrate_to_infinity(
                |z| ctx.triple_density(x, y, z).unwrap(),
                0.0,
                1.0,
                Tolerance::new(1e-14, 1e-12),
            )
            .value;
            assert!(close(marg, ctx.triple_marginal(x, y).unwrap(), 1e-10));
        }
        // Zero start, bounded variation: b⁻¹ e^{−Φy} π(−z−y).
        let q_ctx = LawContext::new(&model, 0.3, 0.0).unwrap();
        let phi = q_ctx.scale_q().phi_q();
        let v = q_ctx.triple_density(0.0, 0.7, 0.4).unwrap();
        assert!(close(v, (-phi * 0.7).exp() * (-1.1f64).exp() / 1.2, 1e-12));
        // Total mass is ψ(x).
        for &x in &[0.0, 1.0, 3.0] {
            let mass = ctx.jump_recovery_mass(x).unwrap();
            let psi = (1.0 / 1.2) * (-(1.0 - 1.0 / 1.2) * x).exp();
            assert!(close(mass, psi, 1e-9), "x={x} {mass} {psi}");
        }
    }

    #[test]
    fn triple_ratio_branches() {
        let ctx = LawContext::new(&cl(), 0.2, 0.0).unwrap();
        assert!(close(ctx.triple_ratio(0.0, 0.5).unwrap(), 1.0, 1e-14));
        for &(x, y) in &[(0.5, 1.0), (2.0, 1.0), (1.0, 0.3)] {
            let direct = ctx.triple_density(x, y, 0.4).unwrap() / ctx.triple_density(0.0, y, 0.4).unwrap();
            assert!(close(ctx.triple_ratio(x, y).unwrap(), direct, 1e-10));
        }
        assert!(LawContext::new(&jd(), 0.2, 0.0)
            .unwrap()
            .triple_ratio(1.0, 0.5)
            .is_err());
    }

    #[test]
    fn emery_specializations() {
        let model = cl();
        let alpha = 0.1;
        let ev = ScaleEvaluator::new(&model, alpha).unwrap();
        let expected = ev.z(1.0).unwrap() - alpha / ev.phi_q() * ev.w(1.0).unwrap();
        assert!(close(
            emery_transform(&model, 1.0, 0.0, alpha, 0.0).unwrap(),
            expected,
            1e-12
        ));
        // α = β = 0 with positive drift: ruin probability below level y.
        let psi = |x: f64| (1.0 / 1.2) * (-(1.0 - 1.0 / 1.2) * x).exp();
        assert!(close(
            emery_transform(&model, 2.0, 0.5, 0.0, 0.0).unwrap(),
            psi(1.5),
            1e-10
        ));
        // Exponential claims: X(T) is −Exp(1) independent of T, so
        // E[e^{βX(T)}; T < ∞] = ψ(x)/(1+β).
        assert!(close(
            emery_transform(&model, 1.0, 0.0, 0.0, 0.5).unwrap(),
            psi(1.0) / 1.5,
            1e-10
        ));
        // x = y+ for bounded variation.
        let beta = 0.3;
        let tilted =
            ScaleEvaluator::tilted(&model, beta, alpha - model.exponent(beta), ScaleOptions::default()).unwrap();
        let at_zero = 1.0 - tilted.q_over_phi() * tilted.w(0.0).unwrap();
        let near = emery_transform(&model, 1e-9, 0.0, alpha, beta).unwrap();
        assert!(close(near, at_zero, 1e-7));
        assert!(emery_transform(&model, 1.0, 1.0, alpha, beta).is_err());
    }

    #[test]
    fn quintuple_degenerations() {
        let ctx = LawContext::new(&cl(), 0.1, 0.0).unwrap();
        let (x, z) = (1.0, 0.5);
        for &y in &[0.3, 0.8, 1.7] {
            // a → ∞
            let far = ctx.quintuple_density(x, y, z, 60.0, 0.1).unwrap();
            assert!(close(far, ctx.quintuple_a_infinity(x, y, z, 0.1).unwrap(), 1e-6));
            // b → 0
            let low = ctx.quintuple_density(x, y, z, 3.0, 1e-9).unwrap();
            assert!(close(low, ctx.quintuple_b_zero(x, y, z, 3.0).unwrap(), 1e-6));
            // both: triple law
            assert!(close(
                ctx.quintuple_a_infinity(x, y, z, 0.0).unwrap(),
                ctx.triple_density(x, y, z).unwrap(),
                1e-12
            ));
        }
        assert!(ctx.quintuple_density(1.0, 0.5, 0.5, 0.9, 0.1).is_err());
        assert!(ctx.quintuple_density(1.0, 0.5, 0.5, 3.0, 0.6).is_err());
    }

    #[test]
    fn infimum_density_is_derivative_in_b() {
        for model in [cl(), jd()] {
            for &q in &[0.0, 0.2] {
                let ctx = LawContext::new(&model, q, 0.0).unwrap();
                let (x, y, z) = (1.0f64, 1.4f64, 0.3);
                let b0 = 0.2;
                let int = integrate(
                    |b| ctx.infimum_density(x, y, z, b).unwrap(),
                    b0,
                    x.min(y),
                    Tolerance::new(1e-13, 1e-11),
                )
                .value;
                let diff = ctx.quintuple_a_infinity(x, y, z, b0).unwrap()
                    - ctx.quintuple_a_infinity(x, y, z, x.min(y)).unwrap();
                assert!(close(int, diff, 1e-8));
            }
        }
    }

    #[test]
    fn recovery_factorization_and_limits() {
        let model = jd();
        let ctx = LawContext::new(&model, 0.1, 0.2).unwrap();
        let (x, y, z, a, b) = (2.0, 2.2, 0.5, 3.0, 1.5);
        let wb = ctx.scale_beta().unwrap();
        let expected = ctx.quintuple_b_zero(x, y, z, a).unwrap() * wb.w(b - z).unwrap() / wb.w(b).unwrap();
        assert_eq!(ctx.recovery_joint(x, y, z, a, b).unwrap(), expected);
        // a, b → ∞ limit.
        let big = ctx.recovery_joint(40.0, 40.5, z, 80.0, 40.0).unwrap();
        let lim = ctx.recovery_density(40.0, 40.5, z).unwrap();
        assert!(close(big / lim, 1.0, 1e-6));
        // β = 0, b → ∞ with positive drift: the factor tends to 1.
        let c0 = LawContext::new(&model, 0.1, 0.0).unwrap();
        let wb0 = c0.scale_beta().unwrap();
        assert!(close(wb0.w(400.0 - z).unwrap() / wb0.w(400.0).unwrap(), 1.0, 1e-12));
        assert!(ctx.recovery_joint(x, y, 1.6, a, b).is_err());
    }

    #[test]
    fn recovery_transform_cases() {
        // q = β: continuity through p = 0.
        let model = jd();
        let v = LawContext::new(&model, 0.3, 0.3)
            .unwrap()
            .recovery_transform(1.0)
            .unwrap();
        let lo = LawContext::new(&model, 0.3 - 1e-6, 0.3)
            .unwrap()
            .recovery_transform(1.0)
            .unwrap();
        let hi = LawContext::new(&model, 0.3 + 1e-6, 0.3)
            .unwrap()
            .recovery_transform(1.0)
            .unwrap();
        assert!(close(v, 0.5 * (lo + hi), 1e-7));
        // β = 0 is the Emery specialization.
        let c = LawContext::new(&model, 0.2, 0.0).unwrap();
        assert!(close(
            c.recovery_transform(1.3).unwrap(),
            emery_transform(&model, 1.3, 0.0, 0.2, 0.0).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn creeping_identities() {
        let model = jd();
        for &(q, beta) in &[(0.1, 0.2), (0.0, 0.5), (0.4, 0.0)] {
            let ctx = LawContext::new(&model, q, beta).unwrap();
            assert!(close(ctx.creeping_recovery(0.0).unwrap(), 1.0, 1e-8));
            for &x in &[0.3, 1.0, 2.5] {
                assert!(close(
                    ctx.creeping_recovery(x).unwrap(),
                    ctx.creeping_probability(x).unwrap(),
                    1e-8
                ));
            }
            if beta > 0.0 {
                let target = model.mean_drift() * ctx.phi_beta_derivative().unwrap();
                assert!(close(ctx.creeping_last_passage(0.0).unwrap(), target, 1e-8));
            }
        }
        // Pure Brownian motion: every ruin creeps.
        let ctx = LawContext::new(&bm(), 0.1, 0.3).unwrap();
        assert!(close(
            ctx.creeping_recovery(1.0).unwrap(),
            ctx.recovery_transform(1.0).unwrap(),
            1e-14
        ));
        assert!(LawContext::new(&cl(), 0.1, 0.3)
            .unwrap()
            .creeping_recovery(1.0)
            .is_err());
    }

    #[test]
    fn last_passage_limits() {
        let model = cl();
        let ctx = LawContext::new(&model, 0.1, 0.3).unwrap();
        let (x, y, z) = (40.0, 40.5, 0.4);
        let lim = ctx.last_passage_density(x, y, z).unwrap();
        let joint = ctx.last_passage_joint(x, y, z, 90.0, 40.0).unwrap();
        assert!(close(joint / lim, 1.0, 1e-6));
        let uncorrected = ctx.last_passage_joint_uncorrected(x, y, z, 90.0, 40.0).unwrap();
        assert!(close(uncorrected / lim, 1.0, 1e-6));
        // β → 0: φ'(0+)Φ'(0) = 1, so the a, b → ∞ density is the triple law.
        let c0 = LawContext::new(&model, 0.1, 0.0).unwrap();
        assert!(close(
            c0.last_passage_density(1.0, 0.5, z).unwrap(),
            c0.triple_density(1.0, 0.5, z).unwrap(),
            1e-12
        ));
        // β = 0, q = 0: transform is ψ(x).
        let c00 = LawContext::new(&model, 0.0, 0.0).unwrap();
        let psi = (1.0 / 1.2) * (-(1.0 - 1.0 / 1.2) * 1.0f64).exp();
        assert!(close(c00.last_passage_transform(1.0).unwrap(), psi, 1e-10));
        // Corrected R at β = 0: P_{−z}(T_a⁺ < T_{−b}⁻)·P_a(T = ∞).
        let r = c0.last_passage_factor(0.5, 3.0, 1.0).unwrap();
        assert!(close(r, 0.2017, 1e-3), "{r}");
        let r_uncorrected = c0.last_passage_factor_uncorrected(0.5, 3.0, 1.0).unwrap();
        assert!(close(r_uncorrected, 0.1557, 1e-3), "{r_uncorrected}");
        let down = LevyModel::exponential_claims(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(LawContext::new(&down, 0.1, 0.3)
            .unwrap()
            .last_passage_transform(1.0)
            .is_err());
    }

    #[test]
    fn duration_transform_values() {
        let model = cl();
        for &beta in &[0.2, 0.5, 1.0] {
            let ctx = LawContext::new(&model, 0.0, beta).unwrap();
            let phi_b = ctx.phi_beta().unwrap();
            assert!(close(ctx.duration_transform(0.0).unwrap(), 0.2 * phi_b / beta, 1e-10));
            let x1 = ctx.duration_transform(1.0).unwrap();
            assert!(x1 > ctx.duration_transform(0.0).unwrap() && x1 < 1.0);
            assert!(close(ctx.duration_transform(200.0).unwrap(), 1.0, 1e-8));
        }
        let tiny = LawContext::new(&model, 0.0, 1e-7)
            .unwrap()
            .duration_transform(0.0)
            .unwrap();
        assert!(close(tiny, 1.0, 1e-5));
        // Both backends agree, including the semi-infinite quadrature route.
        let inv = LawContext::with_options(&jd(), 0.0, 0.5, ScaleOptions::inversion()).unwrap();
        let cf = LawContext::with_options(&jd(), 0.0, 0.5, ScaleOptions::closed_form()).unwrap();
        assert!(close(
            inv.duration_transform(1.0).unwrap(),
            cf.duration_transform(1.0).unwrap(),
            1e-8
        ));
    }

    #[test]
    fn quintuple_box_mass_is_a_probability() {
        let ctx = LawContext::new(&cl(), 0.0, 0.0).unwrap();
        let mass = integrate2(
            |y, z| ctx.quintuple_density(1.0, y, z, 3.0, 0.1).unwrap(),
            (0.2, 1.0),
            (0.2, 1.0),
        );
        assert!(mass > 0.0 && mass < 1.0);
    }

    #[test]
    fn dispatcher_matches_methods() {
        let model = jd();
        let q = LawQuery {
            x: 2.0,
            q: 0.1,
            beta: 0.2,
            y: 2.2,
            z: 0.5,
            a: 3.0,
            b: 1.5,
        };
        let d = evaluate(&model, Law::RecoveryJoint, &q).unwrap();
        assert_eq!(
            d.value,
            recovery_joint(&model, 0.1, 0.2, 2.0, 2.2, 0.5, 3.0, 1.5).unwrap()
        );
        assert_eq!(d.density_coordinates, &["y", "z"]);
        for law in Law::ALL {
            assert_eq!(law.name().parse::<Law>().unwrap(), law);
        }
        assert!("nope".parse::<Law>().is_err());
    }

    proptest! {
        #[test]
        fn densities_are_non_negative(y in 0.05f64..4.0, z in 0.05f64..4.0, q in 0.0f64..1.0) {
            for model in [cl(), jd()] {
                let ctx = LawContext::new(&model, q, 0.3).unwrap();
                let x = 1.0;
                prop_assert!(ctx.triple_density(x, y, z).unwrap() >= -1e-10);
                let a = x.max(y) + 1.0;
                let b = 0.5 * x.min(y);
                prop_assert!(ctx.quintuple_density(x, y, z, a, b).unwrap() >= -1e-10);
                prop_assert!(ctx.infimum_density(x, y, z, b).unwrap() >= -1e-10);
                // Monotone in a and b.
                prop_assert!(ctx.quintuple_density(x, y, z, a + 0.5, b).unwrap() >= ctx.quintuple_density(x, y, z, a, b).unwrap() - 1e-12);
                prop_assert!(ctx.quintuple_density(x, y, z, a, 0.8 * b).unwrap() >= ctx.quintuple_density(x, y, z, a, b).unwrap() - 1e-12);
            }
        }
    }
}
