//! Ruin probabilities, Dickson densities and the generalized Gerber–Shiu
//! function
//!
//! ```text
//! φ(x; q, w) = E_x[e^{−qT} w(X(T−), |X(T)|, S_{T−}, I_{T−}); T < ∞].
//! ```
//!
//! On ruin by a jump, `(X(T−), |X(T)|, S_{T−}, I_{T−})` has density
//! `π(−z−y)·Σ K_i` on `{0 < b < x∧y, a > x∨y}`, the mixed partial
//! `−∂_a∂_b` of `G(a,b) = W(x−b)W(a−y)/W(a−b) − W(x−y)`. For bounded
//! variation `W(0+) > 0` and `(S, I)` also charges the lines `I = x∧y`,
//! `S = x∨y` and their corner; those pieces are added to the jump part.
//! On ruin by creeping `X(T−) = X(T) = I_{T−} = 0` and `S_{T−}` has law
//! `d/da[(σ²/2)(W'(x) − W(x)W'(a)/W(a))]` on `a > x`.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laws::{integrate_claim_tail, LawContext};
use crate::levy_model::{JumpSpec, LevyModel};
use crate::quadrature::{integrate, integrate_to_infinity, Integral, Rule, Tolerance};
use crate::roots::bisect;
use crate::scale::{survival_probability, ScaleEvaluator, ScaleOptions};

/// Penalty function `w(y, z, a, b)`.
#[derive(Clone)]
pub enum Penalty {
    Unit,
    /// `z^k`
    DeficitPower(f64),
    /// `1(y1 <= y <= y2, z1 <= z <= z2)`
    Band {
        y1: f64,
        y2: f64,
        z1: f64,
        z2: f64,
    },
    /// `e^{−s z}`
    ExpDeficit(f64),
    /// Arbitrary bounded non-negative function of `(y, z, a, b)`.
    Custom(Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Unit => write!(f, "unit"),
            Penalty::DeficitPower(k) => write!(f, "deficit_power {k}"),
            Penalty::Band { y1, y2, z1, z2 } => write!(f, "band {y1} {y2} {z1} {z2}"),
            Penalty::ExpDeficit(s) => write!(f, "exp_deficit {s}"),
            Penalty::Custom(_) => write!(f, "custom"),
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Penalty {
    type Err = Error;

    /// Parses `unit`, `deficit_power k`, `band y1 y2 z1 z2` or `exp_deficit s`.
    fn from_str(s: &str) -> Result<Penalty> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let nums: Vec<f64> = parts
            .iter()
            .skip(1)
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| domain("penalty", format!("numeric arguments in '{s}'")))?;
        let bad = || {
            domain(
                "penalty",
                format!("unit | deficit_power k | band y1 y2 z1 z2 | exp_deficit s, got '{s}'"),
            )
        };
        let p = match (parts.first().copied(), nums.as_slice()) {
            (Some("unit"), []) => Penalty::Unit,
            (Some("deficit_power"), [k]) => Penalty::DeficitPower(*k),
            (Some("band"), [y1, y2, z1, z2]) => Penalty::Band {
                y1: *y1,
                y2: *y2,
                z1: *z1,
                z2: *z2,
            },
            (Some("exp_deficit"), [s]) => Penalty::ExpDeficit(*s),
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }
}

impl Penalty {
    fn validate(&self) -> Result<()> {
        match *self {
            Penalty::DeficitPower(k) if !(k >= 0.0) => Err(domain("deficit_power", "k >= 0")),
            Penalty::ExpDeficit(s) if !(s >= 0.0) => Err(domain("exp_deficit", "s >= 0")),
            Penalty::Band { y1, y2, z1, z2 } if !(0.0 <= y1 && y1 <= y2 && 0.0 <= z1 && z1 <= z2) => {
                Err(domain("band", "0 <= y1 <= y2 and 0 <= z1 <= z2"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: f64, z: f64, a: f64, b: f64) -> f64 {
        match self {
            Penalty::Unit => 1.0,
            Penalty::DeficitPower(k) => z.powf(*k),
            Penalty::Band { y1, y2, z1, z2 } => {
                if (*y1..=*y2).contains(&y) && (*z1..=*z2).contains(&z) {
                    1.0
                } else {
                    0.0
                }
            }
            Penalty::ExpDeficit(s) => (-s * z).exp(),
            Penalty::Custom(f) => f(y, z, a, b),
        }
    }

    /// True when the penalty ignores `(a, b)`.
    pub fn depends_on_yz_only(&self) -> bool {
        !matches!(self, Penalty::Custom(_))
    }
}

/// Penalty plus integration domain and accuracy target.
#[derive(Debug, Clone)]
pub struct PenaltySpec {
    pub penalty: Penalty,
    /// Support of `w` in `y`; discontinuities of `w` must lie on the
    /// boundary of this range.
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    /// Truncation of the supremum integral.
    pub a_max: f64,
    /// Relative accuracy target of the outer integral.
    pub rel_tol: f64,
    /// Declares that a custom penalty ignores `(a, b)`.
    pub yz_only: bool,
}

impl PenaltySpec {
    pub fn new(penalty: Penalty) -> Self {
        let (y_range, z_range) = match penalty {
            Penalty::Band { y1, y2, z1, z2 } => ((y1, y2), (z1, z2)),
            _ => ((0.0, f64::INFINITY), (0.0, f64::INFINITY)),
        };
        let yz_only = penalty.depends_on_yz_only();
        Self {
            penalty,
            y_range,
            z_range,
            a_max: f64::INFINITY,
            rel_tol: 1e-4,
            yz_only,
        }
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Which fifth kernel term to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `K5 = 2W(x−b)W(a−y)W'(a−b)²/W(a−b)³`, the exact mixed partial.
    #[default]
    MixedPartial,
    /// `K5 = 2W'(a−b)W(a−y)W'(a−b)/W(a−b)³`, without the `W(x−b)` factor;
    /// kept for comparison only.
    Uncorrected,
}

/// Gerber–Shiu value split into ruin by a jump and ruin by creeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSResult {
    pub value: f64,
    pub jump_part: f64,
    pub creeping_part: f64,
    pub error_estimate: f64,
}

/// Collects the first evaluation error raised inside a quadrature closure.
struct Guard(RefCell<Option<Error>>);

impl Guard {
    fn new() -> Self {
        Guard(RefCell::new(None))
    }

    fn ok(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check(&self, r: Integral) -> Result<Integral> {
        if let Some(e) = self.0.borrow_mut().take() {
            return Err(e);
        }
        if r.converged {
            Ok(r)
        } else {
            Err(Error::Quadrature {
                value: r.value,
                error_estimate: r.error,
            })
        }
    }
}

fn integrate_range<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, scale: f64, tol: Tolerance) -> Integral {
    if hi <= lo {
        return Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    if hi.is_finite() {
        integrate(f, lo, hi, tol)
    } else {
        integrate_to_infinity(f, lo, scale, tol)
    }
}

/// Cuts `[lo, hi]` at interior breakpoints.
fn pieces(lo: f64, hi: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = vec![lo];
    for &c in cuts {
        if c > lo && c < hi {
            pts.push(c);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// The five kernel terms `K_1..K_5` at `(y, a, b)` (without `π(−z−y)`).
pub fn kernel_terms(ev: &ScaleEvaluator, x: f64, y: f64, a: f64, b: f64, variant: KernelVariant) -> Result<[f64; 5]> {
    let (wxb, dwxb) = (ev.w(x - b)?, ev.w_prime(x - b)?);
    let (way, dway) = (ev.w(a - y)?, ev.w_prime(a - y)?);
    let (wab, dwab, d2wab) = (ev.w(a - b)?, ev.w_prime(a - b)?, ev.w_second(a - b)?);
    let k1 = dwxb * dway / wab;
    let k2 = -dwxb * way * dwab / (wab * wab);
    let k3 = -wxb * d2wab * way / (wab * wab);
    let k4 = -wxb * dwab * dway / (wab * wab);
    let k5 = match variant {
        KernelVariant::MixedPartial => 2.0 * wxb * way * dwab * dwab / (wab * wab * wab),
        KernelVariant::Uncorrected => 2.0 * dwab * way * dwab / (wab * wab * wab),
    };
    Ok([k1, k2, k3, k4, k5])
}

/// `G(a,b) = W(x−b)W(a−y)/W(a−b) − W(x−y)`
fn g_fn(ev: &ScaleEvaluator, x: f64, y: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ev.w(x - b)? * ev.w(a - y)? / ev.w(a - b)? - ev.w(x - y)?)
}

/// Comparison of the kernel against a finite-difference mixed partial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K5Report {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
    /// `−∂_a∂_b G(a,b)` by central differences.
    pub finite_difference: f64,
    pub kernel_mixed_partial: f64,
    pub kernel_uncorrected: f64,
    pub k5_mixed_partial: f64,
    pub k5_uncorrected: f64,
}

/// Evaluates both kernel variants against `−∂_a∂_b G` at one point.
pub fn k5_report(model: &LevyModel, q: f64, x: f64, y: f64, a: f64, b: f64) -> Result<K5Report> {
    if !(b > 0.0 && b < x.min(y) && a > x.max(y)) {
        return Err(domain("k5_report", "0 < b < x∧y and a > x∨y"));
    }
    let ev = ScaleEvaluator::new(model, q)?;
    let h = 1e-4 * (1.0 + a.min(b));
    let g = |aa: f64, bb: f64| g_fn(&ev, x, y, aa, bb);
    let fd = -(g(a + h, b + h)? - g(a + h, b - h)? - g(a - h, b + h)? + g(a - h, b - h)?) / (4.0 * h * h);
    let mp = kernel_terms(&ev, x, y, a, b, KernelVariant::MixedPartial)?;
    let ap = kernel_terms(&ev, x, y, a, b, KernelVariant::Uncorrected)?;
    Ok(K5Report {
        x,
        y,
        a,
        b,
        finite_difference: fd,
        kernel_mixed_partial: mp.iter().sum(),
        kernel_uncorrected: ap.iter().sum(),
        k5_mixed_partial: mp[4],
        k5_uncorrected: ap[4],
    })
}

/// Decay rate in `a` of the kernel bracket: the gap between `Φ(q)` and the
/// next real root of `φ(θ) = q`.
fn kernel_decay_rate(model: &LevyModel, q: f64, phi: f64) -> f64 {
    let f = |s: f64| model.exponent(phi + s) - q;
    let mut hi = -1e-3;
    if !(f(hi) < 0.0) {
        return 1.0;
    }
    for _ in 0..60 {
        let lo = 2.0 * hi;
        if !(f(lo) < 0.0) {
            return -bisect(|s| -f(s), lo, hi, 1e-6 * hi.abs());
        }
        hi = lo;
    }
    1.0
}

fn check_gs_model(model: &LevyModel, op: &'static str) -> Result<()> {
    if !(model.mean_drift() > 0.0) {
        return Err(domain(op, "a model drifting to +∞ (φ'(0+) > 0)"));
    }
    if model.is_bounded_variation() && !model.has_rational_exponent() {
        return Err(Error::Unsupported {
            op,
            reason: "W^(q) is not certified C² for tabulated claims without a Gaussian part".into(),
        });
    }
    Ok(())
}

/// `K6 = Z(x) − qW(x)/Φ(q) − ∫_0^∞ u^{(q)}(x,y)Π(−∞,−y) dy`, the total
/// mass of ruin by creeping.
pub fn creeping_weight(model: &LevyModel, q: f64, x: f64) -> Result<f64> {
    let ctx = LawContext::new(model, q, 0.0)?;
    creeping_weight_ctx(&ctx, x)
}

fn creeping_weight_ctx(ctx: &LawContext, x: f64) -> Result<f64> {
    let ev = ctx.scale_q();
    let jumps = ctx.model().jumps();
    let tol = Tolerance::new(1e-13, 1e-11);
    let below = if x > 0.0 {
        let guard = Guard::new();
        let r = integrate(
            |y| guard.ok(ctx.potential_density(x, y)) * jumps.tail_mass(y),
            0.0,
            x,
            tol,
        );
        guard.check(r)?.value
    } else {
        0.0
    };
    let phi = ev.phi_q();
    let decay = 1.0 / (phi + 1.0 / jumps.claim_mean().max(1e-12));
    let above = ev.w(x)? * integrate_claim_tail(jumps, |y| Ok((-phi * y).exp() * jumps.tail_mass(y)), x, decay, tol)?;
    Ok(ev.z(x)? - ev.q_over_phi() * ev.w(x)? - below - above)
}

/// Generalized Gerber–Shiu function by iterated quadrature (order
/// `b → a → z → y`).
pub fn gerber_shiu(model: &LevyModel, q: f64, x: f64, spec: &PenaltySpec) -> Result<GSResult> {
    gerber_shiu_with(model, q, x, spec, KernelVariant::default(), ScaleOptions::default())
}

pub fn gerber_shiu_with(
    model: &LevyModel,
    q: f64,
    x: f64,
    spec: &PenaltySpec,
    variant: KernelVariant,
    options: ScaleOptions,
) -> Result<GSResult> {
    check_gs_model(model, "gerber_shiu")?;
    if !(x >= 0.0) {
        return Err(domain("gerber_shiu", "x >= 0"));
    }
    let ctx = LawContext::with_options(model, q, 0.0, options)?;
    let ev = ctx.scale_q();
    let phi = ev.phi_q();
    // W(x) = e^{Φ(q)x}V(x); the kernel is homogeneous, so it is evaluated on
    // V, whose derivatives decay, with the factor e^{Φ(q)(x−y)} pulled out.
    let v = ScaleEvaluator::tilted(model, phi, 0.0, options)?;
    let v = &v;
    let jumps = model.jumps();
    let w = &spec.penalty;
    let guard = Guard::new();
    let bv = model.is_bounded_variation();

    let outer = Tolerance::new(1e-3 * spec.rel_tol, spec.rel_tol);
    let inner = Tolerance::new(1e-4 * spec.rel_tol, 0.1 * spec.rel_tol).with_rule(Rule::Gk15);
    let claim_scale = jumps.claim_mean().max(1e-6);
    let a_scale = 1.0 / kernel_decay_rate(model, q, phi).clamp(1e-3, 1e3);
    let a_max = spec.a_max;

    // Inner (a, b) mass for fixed (y, z), including the boundary pieces.
    let ab_mass = |y: f64, z: f64| -> f64 {
        let (m, big_m) = (x.min(y), x.max(y));
        let scale = (phi * (x - y)).exp();
        let mut total = 0.0;
        if m > 0.0 {
            let r = integrate_range(
                |a| {
                    integrate(
                        |b| {
                            let k = guard.ok(kernel_terms(v, x, y, a, b, variant).map(|k| k.iter().sum::<f64>()));
                            w.eval(y, z, a, b) * k
                        },
                        0.0,
                        m,
                        inner,
                    )
                    .value
                },
                big_m,
                a_max,
                a_scale,
                inner,
            );
            total += r.value;
        }
        if bv {
            // Line I = m, a > M: density ∂_a G(a, m−).
            let r = integrate_range(
                |a| {
                    let d = guard.ok((|| {
                        let vam = v.w(a - m)?;
                        Ok(v.w(x - m)? * (v.w_prime(a - y)? * vam - v.w(a - y)? * v.w_prime(a - m)?) / (vam * vam))
                    })());
                    w.eval(y, z, a, m) * d
                },
                big_m,
                a_max,
                a_scale,
                inner,
            );
            total += r.value;
            if m > 0.0 {
                // Line S = M, 0 < b < m: density −∂_b G(M, b).
                let r = integrate(
                    |b| {
                        let d = guard.ok((|| {
                            let vmb = v.w(big_m - b)?;
                            let vmy = v.w(big_m - y)?;
                            Ok(v.w_prime(x - b)? * vmy / vmb - v.w(x - b)? * vmy * v.w_prime(big_m - b)? / (vmb * vmb))
                        })());
                        w.eval(y, z, big_m, b) * d
                    },
                    0.0,
                    m,
                    inner,
                );
                total += r.value;
            }
            // Corner (M, m).
            let corner = guard.ok(g_fn(ev, x, y, big_m, m));
            total += w.eval(y, z, big_m, m) * corner / scale;
        }
        scale * total
    };

    let (ylo, yhi) = (spec.y_range.0.max(0.0), spec.y_range.1);
    let (zlo, zhi) = (spec.z_range.0.max(0.0), spec.z_range.1);
    let jump_cuts: Vec<f64> = match jumps {
        JumpSpec::CompoundPoisson { density, .. } => vec![density.support_end()],
        _ => vec![],
    };
    let mut jump_part = 0.0;
    let mut error = 0.0;
    if !matches!(jumps, JumpSpec::NoJumps) {
        for (y0, y1) in pieces(ylo, yhi, &[x]) {
            let r = integrate_range(
                |y| {
                    let mut sum = 0.0;
                    for (z0, z1) in pieces(zlo, zhi, &jump_cuts.iter().map(|c| c - y).collect::<Vec<_>>()) {
                        sum += integrate_range(
                            |z| {
                                let pi = jumps.levy_density(z + y);
                                if pi == 0.0 {
                                    0.0
                                } else {
                                    pi * ab_mass(y, z)
                                }
                            },
                            z0,
                            z1,
                            claim_scale,
                            inner,
                        )
                        .value;
                    }
                    sum
                },
                y0,
                y1,
                claim_scale,
                outer,
            );
            let r = guard.check(r)?;
            jump_part += r.value;
            error += r.error;
        }
    }

    let creeping_part = if model.sigma() > 0.0 {
        let (in_y, in_z) = (ylo <= 0.0, zlo <= 0.0);
        if !(in_y && in_z) {
            0.0
        } else if spec.yz_only {
            w.eval(0.0, 0.0, x, 0.0) * creeping_weight_ctx(&ctx, x)?
        } else {
            // S_{T−} law on creeping: (σ²/2)W(x)(V'(a)² − V(a)V''(a))/V(a)² on a > x.
            let s2 = 0.5 * model.sigma().powi(2);
            let wx = ev.w(x)?;
            if x == 0.0 {
                w.eval(0.0, 0.0, 0.0, 0.0)
            } else {
                let r = integrate_range(
                    |a| {
                        let d = guard.ok((|| {
                            let va = v.w(a)?;
                            let dva = v.w_prime(a)?;
                            Ok(s2 * wx * (dva * dva - va * v.w_second(a)?) / (va * va))
                        })());
                        w.eval(0.0, 0.0, a, 0.0) * d
                    },
                    x,
                    a_max,
                    a_scale,
                    outer,
                );
                let r = guard.check(r)?;
                error += r.error;
                r.value
            }
        }
    } else {
        0.0
    };

    Ok(GSResult {
        value: jump_part + creeping_part,
        jump_part,
        creeping_part,
        error_estimate: error,
    })
}

/// Gerber–Shiu function for penalties of `(y, z)` only, integrating the
/// triple law `f_q(y,z|x)` directly.
pub fn gerber_shiu_2d(model: &LevyModel, q: f64, x: f64, spec: &PenaltySpec) -> Result<GSResult> {
    if !spec.yz_only {
        return Err(domain("gerber_shiu_2d", "a penalty depending on (y, z) only"));
    }
    if !(x >= 0.0) {
        return Err(domain("gerber_shiu_2d", "x >= 0"));
    }
    let ctx = LawContext::new(model, q, 0.0)?;
    let jumps = model.jumps();
    let w = &spec.penalty;
    let guard = Guard::new();
    let tol = Tolerance::new(1e-13, spec.rel_tol.min(1e-8));
    let claim_scale = jumps.claim_mean().max(1e-6);
    let (ylo, yhi) = (spec.y_range.0.max(0.0), spec.y_range.1);
    let (zlo, zhi) = (spec.z_range.0.max(0.0), spec.z_range.1);
    let jump_cuts: Vec<f64> = match jumps {
        JumpSpec::CompoundPoisson { density, .. } => vec![density.support_end()],
        _ => vec![],
    };
    let mut jump_part = 0.0;
    let mut error = 0.0;
    if !matches!(jumps, JumpSpec::NoJumps) {
        for (y0, y1) in pieces(ylo, yhi, &[x]) {
            let r = integrate_range(
                |y| {
                    let u = guard.ok(ctx.potential_density(x, y));
                    let mut sum = 0.0;
                    for (z0, z1) in pieces(zlo, zhi, &jump_cuts.iter().map(|c| c - y).collect::<Vec<_>>()) {
                        sum += integrate_range(
                            |z| w.eval(y, z, 0.0, 0.0) * jumps.levy_density(z + y),
                            z0,
                            z1,
                            claim_scale,
                            tol,
                        )
                        .value;
                    }
                    u * sum
                },
                y0,
                y1,
                claim_scale,
                tol,
            );
            let r = guard.check(r)?;
            jump_part += r.value;
            error += r.error;
        }
    }
    let creeping_part = if model.sigma() > 0.0 && ylo <= 0.0 && zlo <= 0.0 {
        w.eval(0.0, 0.0, x, 0.0) * ctx.creeping_probability(x)?
    } else {
        0.0
    };
    Ok(GSResult {
        value: jump_part + creeping_part,
        jump_part,
        creeping_part,
        error_estimate: error,
    })
}

/// `ψ(x) = 1 − φ'(0+)W(x)`.
pub fn ruin_probability(model: &LevyModel, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - survival_probability(model, x)?)
}

/// `P_x^{(c)}(T = ∞)`: non-ruin probability under the measure tilted by `c`.
pub fn tilted_nonruin(model: &LevyModel, c: f64, x: f64) -> Result<f64> {
    let tilted = model.tilt(c)?;
    if !(tilted.mean_drift() > 0.0) {
        return Err(domain("tilted_nonruin", "φ'(c) > 0"));
    }
    survival_probability(&tilted, x)
}

/// Dickson density `f_q(y|x)` of the surplus prior to ruin, through
/// non-ruin probabilities under the measure tilted by `Φ(q)`:
/// `λP̄(y) e^{Φ(q)(x−y)}/φ'(Φ(q)) · (P^{Φ}_x(T=∞) − 1(y <= x) P^{Φ}_{x−y}(T=∞))`.
pub fn dickson_density(model: &LevyModel, q: f64, x: f64, y: f64) -> Result<f64> {
    DicksonEvaluator::new(model, q)?.density(x, y)
}

/// Reusable evaluator behind [`dickson_density`].
#[derive(Debug)]
pub struct DicksonEvaluator {
    model: LevyModel,
    phi_q: f64,
    slope: f64,
    tilted: ScaleEvaluator,
}

impl DicksonEvaluator {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        if matches!(model.jumps(), JumpSpec::NoJumps) {
            return Err(domain("dickson_density", "a model with compound Poisson claims"));
        }
        if !(q >= 0.0) {
            return Err(domain("dickson_density", "q >= 0"));
        }
        let phi_q = model.phi_inverse(q)?;
        let tilted_model = model.tilt(phi_q)?;
        let slope = tilted_model.mean_drift();
        if !(slope > 0.0) {
            return Err(domain("dickson_density", "φ'(Φ(q)) > 0"));
        }
        Ok(Self {
            model: model.clone(),
            phi_q,
            slope,
            tilted: ScaleEvaluator::new(&tilted_model, 0.0)?,
        })
    }

    fn nonruin(&self, x: f64) -> Result<f64> {
        Ok(self.slope * self.tilted.w(x)?)
    }

    pub fn density(&self, x: f64, y: f64) -> Result<f64> {
        if !(x >= 0.0 && y > 0.0) {
            return Err(domain("dickson_density", "x >= 0, y > 0"));
        }
        let mut diff = self.nonruin(x)?;
        if y <= x {
            diff -= self.nonruin(x - y)?;
        }
        Ok(self.model.jumps().tail_mass(y) * (self.phi_q * (x - y)).exp() / self.slope * diff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl() -> LevyModel {
        LevyModel::exponential_claims(1.2, 0.0, 1.0, 1.0).unwrap()
    }

    fn jd() -> LevyModel {
        LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-12)
    }

    #[test]
    fn penalty_parsing() {
        assert!(matches!("unit".parse::<Penalty>().unwrap(), Penalty::Unit));
        assert!(matches!("deficit_power 2".parse::<Penalty>().unwrap(), Penalty::DeficitPower(k) if k == 2.0));
        assert!(matches!(
            "band 0 1 0.5 2".parse::<Penalty>().unwrap(),
            Penalty::Band { .. }
        ));
        assert!(matches!(
            "exp_deficit 0.5".parse::<Penalty>().unwrap(),
            Penalty::ExpDeficit(_)
        ));
        assert!("band 1 0 0 1".parse::<Penalty>().is_err());
        assert!("cubic".parse::<Penalty>().is_err());
        assert!("unit 3".parse::<Penalty>().is_err());
    }

    #[test]
    fn ruin_probability_values() {
        assert!(close(ruin_probability(&cl(), 0.0).unwrap(), 1.0 / 1.2, 1e-12));
        assert!(ruin_probability(&cl(), 300.0).unwrap() < 1e-12);
        let down = LevyModel::exponential_claims(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(ruin_probability(&down, 1.0).is_err());
        let m = cl();
        let q = 0.3;
        let ev = ScaleEvaluator::new(&m, q).unwrap();
        let phi = ev.phi_q();
        for &x in &[0.0, 0.5, 2.0] {
            let direct = m.exponent_derivative(phi) * (-phi * x).exp() * ev.w(x).unwrap();
            assert!(close(tilted_nonruin(&m, phi, x).unwrap(), direct, 1e-10));
        }
    }

    #[test]
    fn dickson_equals_triple_marginal() {
        for model in [cl(), jd()] {
            for &q in &[0.05, 0.5] {
                let d = DicksonEvaluator::new(&model, q).unwrap();
                let ctx = LawContext::new(&model, q, 0.0).unwrap();
                for i in 0..8 {
                    for j in 1..8 {
                        let (x, y) = (i as f64 * 0.4, j as f64 * 0.35);
                        let a = d.density(x, y).unwrap();
                        let b = ctx.triple_marginal(x, y).unwrap();
                        assert!((a - b).abs() < 1e-8, "x={x} y={y} {a} {b}");
                    }
                }
            }
        }
        // Zero start, bounded variation.
        let q = 0.2;
        let phi = cl().phi_inverse(q).unwrap();
        let v = dickson_density(&cl(), q, 0.0, 0.8).unwrap();
        assert!(close(v, (-phi * 0.8).exp() * (-0.8f64).exp() / 1.2, 1e-10));
        // No safety loading needed for q > 0.
        let down = LevyModel::exponential_claims(1.0, 0.0, 2.0, 1.0).unwrap();
        let dd = DicksonEvaluator::new(&down, 0.1).unwrap();
        let ctx = LawContext::new(&down, 0.1, 0.0).unwrap();
        assert!((dd.density(1.0, 0.4).unwrap() - ctx.triple_marginal(1.0, 0.4).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn k5_report_prefers_mixed_partial() {
        let r = k5_report(&cl(), 0.1, 1.0, 1.5, 3.0, 0.4).unwrap();
        assert!(close(r.kernel_mixed_partial, r.finite_difference, 1e-5), "{r:?}");
        assert!(!close(r.kernel_uncorrected, r.finite_difference, 1e-3));
    }

    #[test]
    fn unit_penalty_matches_emery() {
        let model = cl();
        let q = 0.1;
        let ev = ScaleEvaluator::new(&model, q).unwrap();
        let x = 1.0;
        let exact = ev.z(x).unwrap() - q / ev.phi_q() * ev.w(x).unwrap();
        let spec = PenaltySpec::new(Penalty::Unit);
        let gs = gerber_shiu(&model, q, x, &spec).unwrap();
        assert!(close(gs.value, exact, 1e-4), "{gs:?} vs {exact}");
        assert_eq!(gs.creeping_part, 0.0);
        let gs2 = gerber_shiu_2d(&model, q, x, &spec).unwrap();
        assert!(close(gs2.value, exact, 1e-8), "{gs2:?} vs {exact}");
    }

    #[test]
    fn creeping_weight_cross_check() {
        let model = jd();
        for &q in &[0.0, 0.2] {
            let ctx = LawContext::new(&model, q, 0.0).unwrap();
            for &x in &[0.0, 0.5, 2.0] {
                let k6 = creeping_weight(&model, q, x).unwrap();
                assert!(close(k6, ctx.creeping_probability(x).unwrap(), 1e-8), "q={q} x={x}");
            }
        }
    }

    #[test]
    fn rejects_unsupported_models() {
        let down = LevyModel::exponential_claims(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(gerber_shiu(&down, 0.1, 1.0, &PenaltySpec::new(Penalty::Unit)).is_err());
        let bm = LevyModel::brownian(1.0, 1.0).unwrap();
        assert!(dickson_density(&bm, 0.1, 1.0, 0.5).is_err());
    }
}
