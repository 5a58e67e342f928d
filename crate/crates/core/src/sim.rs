//! Monte Carlo simulation of model paths and estimation of weighted path
//! functionals.
//!
//! Without a Gaussian part paths are simulated exactly, event by event:
//! between claims the surplus rises linearly, so ruin, recovery and the
//! running extremes are resolved at claim epochs or by linear
//! interpolation. With `σ > 0` the diffusion is advanced on a grid that
//! ends at every claim epoch. Its step is `h` near zero. With the bridge
//! correction on, the step widens far from zero as long as a crossing
//! stays below ~1e−12 in probability, and the running extremes and
//! crossings come from Brownian-bridge extremes sampled given the step
//! endpoints. With the correction off it is a plain Euler grid of step
//! `h` on which only grid values count.
//!
//! Each path draws from its own ChaCha8 stream (`seed`, stream = path
//! index), and estimates are reduced over fixed chunks in index order, so
//! results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::levy_model::{JumpSpec, LevyModel};
use crate::scale::ScaleEvaluator;

const CHUNK: u64 = 1024;
/// Upper bound on a single diffusion step.
const MAX_STEP: f64 = 5.0;

/// When to stop a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Horizon {
    /// Stop at `t_max`; unresolved functionals are censored.
    Fixed { t_max: f64 },
    /// Stop once the surplus reaches `level`, chosen by default so that
    /// `ψ(level) < tail`; `t_max` caps the run.
    Escape {
        #[serde(default)]
        level: Option<f64>,
        #[serde(default = "default_tail")]
        tail: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
    },
}

fn default_tail() -> f64 {
    1e-4
}

fn default_t_max() -> f64 {
    1e4
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Escape {
            level: None,
            tail: default_tail(),
            t_max: default_t_max(),
        }
    }
}

/// Simulation plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimPlan {
    pub n_paths: u64,
    pub seed: u64,
    pub horizon: Horizon,
    /// Diffusion step near zero.
    pub step: f64,
    pub bridge: bool,
    /// Keep simulating after recovery to resolve `l` and `D`.
    pub track_last_passage: bool,
}

impl Default for SimPlan {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            seed: 0,
            horizon: Horizon::default(),
            step: 1e-3,
            bridge: true,
            track_last_passage: true,
        }
    }
}

impl SimPlan {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(domain("simulation plan", "n_paths >= 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(domain("simulation plan", "step > 0"));
        }
        let t_max = match self.horizon {
            Horizon::Fixed { t_max } => t_max,
            Horizon::Escape { level, tail, t_max } => {
                if let Some(l) = level {
                    if !(l > 0.0) {
                        return Err(domain("simulation plan", "escape level > 0"));
                    }
                }
                if !(tail > 0.0 && tail < 1.0) {
                    return Err(domain("simulation plan", "0 < tail < 1"));
                }
                t_max
            }
        };
        if !(t_max > 0.0) {
            return Err(domain("simulation plan", "t_max > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The surplus reached the escape level.
    Escaped,
    /// Ruin and recovery resolved (only without last-passage tracking).
    Recovered,
    /// The time cap was reached.
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuinCause {
    Jump,
    Creeping,
}

/// Quantities fixed at the ruin time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ruin {
    pub time: f64,
    /// `X(T−)`
    pub pre_surplus: f64,
    /// `|X(T)|`, zero when creeping.
    pub deficit: f64,
    /// `S_{T−}`
    pub sup: f64,
    /// `I_{T−}`
    pub inf: f64,
    pub cause: RuinCause,
}

/// First return to zero after ruin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    /// `T₀`
    pub time: f64,
    /// Infimum over `[T, T₀]`.
    pub inf: f64,
}

/// Last time below zero seen so far, with the running extremes at that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LastPassage {
    /// `l`
    pub time: f64,
    /// `S_l`
    pub sup: f64,
    /// `I_l`
    pub inf: f64,
}

/// One path's record. `recovery`, `last_passage` and `duration` are final
/// only when `stop` is [`StopReason::Escaped`] (`recovery` also on
/// [`StopReason::Recovered`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub start: f64,
    pub ruin: Option<Ruin>,
    pub recovery: Option<Recovery>,
    pub last_passage: Option<LastPassage>,
    /// `D`, time spent below zero.
    pub duration: f64,
    pub end_time: f64,
    pub stop: StopReason,
}

enum ClaimSampler {
    None,
    Mixed {
        cum: Vec<f64>,
        rates: Vec<f64>,
    },
    Table {
        xs: Vec<f64>,
        ps: Vec<f64>,
        cum: Vec<f64>,
        damping: f64,
    },
}

impl ClaimSampler {
    fn new(jumps: &JumpSpec) -> Result<Self> {
        match jumps {
            JumpSpec::NoJumps => Ok(ClaimSampler::None),
            JumpSpec::MixedExponential { weights, rates, .. } => {
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(Error::Unsupported {
                        op: "simulate",
                        reason: "claim mixtures with negative weights".into(),
                    });
                }
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                let cum = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                Ok(ClaimSampler::Mixed {
                    cum,
                    rates: rates.clone(),
                })
            }
            JumpSpec::CompoundPoisson { density, .. } => {
                let (xs, ps) = density.knots();
                let mut acc = 0.0;
                let mut cum = Vec::with_capacity(xs.len() - 1);
                for i in 0..xs.len() - 1 {
                    acc += 0.5 * (ps[i] + ps[i + 1]) * (xs[i + 1] - xs[i]);
                    cum.push(acc);
                }
                Ok(ClaimSampler::Table {
                    xs: xs.to_vec(),
                    ps: ps.to_vec(),
                    cum,
                    damping: density.damping(),
                })
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ClaimSampler::None => 0.0,
            ClaimSampler::Mixed { cum, rates } => {
                let u: f64 = rng.random();
                let i = cum.iter().position(|c| u < *c).unwrap_or(rates.len() - 1);
                let e: f64 = rng.sample(Exp1);
                e / rates[i]
            }
            ClaimSampler::Table { xs, ps, cum, damping } => loop {
                let total = cum[cum.len() - 1];
                let target = rng.random::<f64>() * total;
                let i = cum.partition_point(|c| *c <= target).min(cum.len() - 1);
                let below = if i == 0 { 0.0 } else { cum[i - 1] };
                let r = target - below;
                let h = xs[i + 1] - xs[i];
                let slope = (ps[i + 1] - ps[i]) / h;
                // Solve p_i s + slope s²/2 = r on [0, h].
                let disc = (ps[i] * ps[i] + 2.0 * slope * r).max(0.0);
                let denom = ps[i] + disc.sqrt();
                let s = if denom > 0.0 {
                    (2.0 * r / denom).clamp(0.0, h)
                } else {
                    0.5 * h
                };
                let u = xs[i] + s;
                if *damping == 0.0 || rng.random::<f64>() < (-damping * u).exp() {
                    break u;
                }
            },
        }
    }
}

/// Running state of one path.
struct State {
    t: f64,
    x: f64,
    sup: f64,
    inf: f64,
    ruin: Option<Ruin>,
    recovery: Option<Recovery>,
    inf_since_ruin: f64,
    last: Option<LastPassage>,
    duration: f64,
}

impl State {
    fn new(x: f64) -> Self {
        State {
            t: 0.0,
            x,
            sup: x,
            inf: x,
            ruin: None,
            recovery: None,
            inf_since_ruin: f64::INFINITY,
            last: None,
            duration: 0.0,
        }
    }

    fn below_at(&mut self, t: f64) {
        self.last = Some(LastPassage {
            time: t,
            sup: self.sup,
            inf: self.inf,
        });
    }

    fn recover(&mut self, t: f64, inf: f64) {
        if self.ruin.is_some() && self.recovery.is_none() {
            self.recovery = Some(Recovery {
                time: t,
                inf: self.inf_since_ruin.min(inf),
            });
        }
    }

    fn finish(self, start: f64, stop: StopReason) -> PathFunctionals {
        PathFunctionals {
            start,
            ruin: self.ruin,
            recovery: self.recovery,
            last_passage: self.last,
            duration: self.duration,
            end_time: self.t,
            stop,
        }
    }
}

/// Model-specific simulation engine.
struct Engine {
    drift: f64,
    sigma: f64,
    lambda: f64,
    claims: ClaimSampler,
    step: f64,
    bridge: bool,
    escape: Option<f64>,
    t_max: f64,
    track_last: bool,
    plan: SimPlan,
    truncation_bound: f64,
}

/// Smallest level `L` with `ψ(L) < tail`, and `ψ(L)`.
pub fn escape_level(model: &LevyModel, tail: f64) -> Result<(f64, f64)> {
    if !(model.mean_drift() > 0.0) {
        return Err(domain("escape horizon", "φ'(0+) > 0; use a fixed horizon"));
    }
    let ev = ScaleEvaluator::new(model, 0.0)?;
    let slope = model.mean_drift();
    let psi = |l: f64| -> Result<f64> { Ok((1.0 - slope * ev.w(l)?).max(0.0)) };
    let mut hi = 1.0;
    while psi(hi)? >= tail {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Simulation("escape level above 1e6".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if psi(mid)? >= tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((hi, psi(hi)?))
}

impl Engine {
    fn new(model: &LevyModel, plan: &SimPlan) -> Result<Self> {
        plan.validate()?;
        let (escape, t_max, truncation_bound) = match plan.horizon {
            Horizon::Fixed { t_max } => (None, t_max, 0.0),
            Horizon::Escape { level, tail, t_max } => {
                let (l, bound) = match level {
                    Some(l) => {
                        let ev = ScaleEvaluator::new(model, 0.0)?;
                        if !(model.mean_drift() > 0.0) {
                            return Err(domain("escape horizon", "φ'(0+) > 0; use a fixed horizon"));
                        }
                        (l, (1.0 - model.mean_drift() * ev.w(l)?).max(0.0))
                    }
                    None => escape_level(model, tail)?,
                };
                (Some(l), t_max, bound)
            }
        };
        Ok(Engine {
            drift: model.drift(),
            sigma: model.sigma(),
            lambda: model.jumps().rate(),
            claims: ClaimSampler::new(model.jumps())?,
            step: plan.step,
            bridge: plan.bridge,
            escape,
            t_max,
            track_last: plan.track_last_passage,
            plan: *plan,
            truncation_bound,
        })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed);
        rng.set_stream(stream);
        rng
    }

    fn next_wait(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lambda > 0.0 {
            rng.sample::<f64, _>(Exp1) / self.lambda
        } else {
            f64::INFINITY
        }
    }

    fn run(&self, x: f64, stream: u64) -> PathFunctionals {
        let mut rng = self.rng(stream);
        if self.sigma == 0.0 {
            self.run_exact(x, &mut rng)
        } else {
            self.run_diffusion(x, &mut rng)
        }
    }

    fn run_exact(&self, x0: f64, rng: &mut ChaCha8Rng) -> PathFunctionals {
        let c = self.drift;
        let mut st = State::new(x0);
        loop {
            let w = self.next_wait(rng);
            if st.x >= 0.0 {
                if let Some(l) = self.escape {
                    if st.x >= l {
                        return st.finish(x0, StopReason::Escaped);
                    }
                    let te = st.t + (l - st.x) / c;
                    if st.x + c * w >= l && te <= self.t_max {
                        st.t = te;
                        st.x = l;
                        st.sup = st.sup.max(l);
                        return st.finish(x0, StopReason::Escaped);
                    }
                }
                if st.t + w >= self.t_max {
                    st.x += c * (self.t_max - st.t);
                    st.sup = st.sup.max(st.x);
                    st.t = self.t_max;
                    return st.finish(x0, StopReason::Horizon);
                }
                st.t += w;
                st.x += c * w;
                st.sup = st.sup.max(st.x);
                let pre = st.x;
                st.x -= self.claims.sample(rng);
                if st.x < 0.0 && st.ruin.is_none() {
                    st.ruin = Some(Ruin {
                        time: st.t,
                        pre_surplus: pre,
                        deficit: -st.x,
                        sup: st.sup,
                        inf: st.inf,
                        cause: RuinCause::Jump,
                    });
                    st.inf_since_ruin = st.x;
                }
                st.inf = st.inf.min(st.x);
            } else {
                let climb = -st.x / c;
                if w >= climb {
                    if st.t + climb > self.t_max {
                        st.duration += self.t_max - st.t;
                        st.t = self.t_max;
                        st.below_at(st.t);
                        return st.finish(x0, StopReason::Horizon);
                    }
                    st.duration += climb;
                    st.t += climb;
                    st.x = 0.0;
                    st.below_at(st.t);
                    st.recover(st.t, f64::INFINITY);
                    if !self.track_last && st.recovery.is_some() {
                        return st.finish(x0, StopReason::Recovered);
                    }
                    // The residual wait is again exponential.
                    continue;
                }
                if st.t + w >= self.t_max {
                    st.duration += self.t_max - st.t;
                    st.t = self.t_max;
                    st.below_at(st.t);
                    return st.finish(x0, StopReason::Horizon);
                }
                st.duration += w;
                st.t += w;
                st.x += c * w - self.claims.sample(rng);
                st.inf = st.inf.min(st.x);
                if st.recovery.is_none() {
                    st.inf_since_ruin = st.inf_since_ruin.min(st.x);
                }
            }
        }
    }

    fn run_diffusion(&self, x0: f64, rng: &mut ChaCha8Rng) -> PathFunctionals {
        let (mu, sigma) = (self.drift, self.sigma);
        let s2 = sigma * sigma;
        let mut st = State::new(x0);
        if x0 == 0.0 {
            // Zero is regular for (−∞, 0): ruin by creeping at once.
            st.ruin = Some(Ruin {
                time: 0.0,
                pre_surplus: 0.0,
                deficit: 0.0,
                sup: 0.0,
                inf: 0.0,
                cause: RuinCause::Creeping,
            });
            st.inf_since_ruin = 0.0;
            st.recover(0.0, 0.0);
            st.below_at(0.0);
            if !self.track_last {
                return st.finish(x0, StopReason::Recovered);
            }
        }
        let mut next_jump = self.next_wait(rng);
        loop {
            if let Some(l) = self.escape {
                if st.x >= l {
                    return st.finish(x0, StopReason::Escaped);
                }
            }
            if st.t >= self.t_max {
                if st.x < 0.0 {
                    st.below_at(st.t);
                }
                return st.finish(x0, StopReason::Horizon);
            }
            let mut dt = self.step;
            if self.bridge {
                let dist = st.x.abs();
                let far = (dist / (8.0 * sigma)).powi(2).min(dist / (8.0 * mu.abs() + 1e-300));
                dt = far.clamp(self.step, MAX_STEP);
            }
            let to_jump = next_jump - st.t;
            let jumps_now = to_jump <= dt;
            if jumps_now {
                dt = to_jump;
            }
            dt = dt.min(self.t_max - st.t);
            let u = st.x;
            let z: f64 = rng.sample(StandardNormal);
            let v = u + mu * dt + sigma * dt.sqrt() * z;
            let (lo, hi) = if self.bridge {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                let d2 = (u - v) * (u - v);
                (
                    0.5 * (u + v - (d2 + 2.0 * s2 * dt * e1).sqrt()),
                    0.5 * (u + v + (d2 + 2.0 * s2 * dt * e2).sqrt()),
                )
            } else {
                (u.min(v), u.max(v))
            };
            if u >= 0.0 {
                if lo < 0.0 {
                    let frac = u / (u + v.abs());
                    let tc = st.t + frac * dt;
                    if st.ruin.is_none() {
                        st.ruin = Some(Ruin {
                            time: tc,
                            pre_surplus: 0.0,
                            deficit: 0.0,
                            sup: st.sup.max(u),
                            inf: 0.0,
                            cause: RuinCause::Creeping,
                        });
                        st.inf_since_ruin = 0.0;
                        st.recover(tc, 0.0);
                    }
                    if v < 0.0 {
                        st.duration += (1.0 - frac) * dt;
                    }
                    st.sup = st.sup.max(hi);
                    st.inf = st.inf.min(lo);
                    st.below_at(if v < 0.0 { st.t + dt } else { tc });
                } else {
                    st.sup = st.sup.max(hi);
                    st.inf = st.inf.min(lo);
                }
            } else {
                st.sup = st.sup.max(hi);
                st.inf = st.inf.min(lo);
                if st.recovery.is_none() {
                    st.inf_since_ruin = st.inf_since_ruin.min(lo);
                }
                if hi >= 0.0 {
                    let frac = -u / (v.abs() - u);
                    let tu = st.t + frac * dt;
                    if v >= 0.0 {
                        st.duration += frac * dt;
                        st.below_at(tu);
                    } else {
                        st.duration += dt;
                        st.below_at(st.t + dt);
                    }
                    st.recover(tu, lo);
                } else {
                    st.duration += dt;
                    st.below_at(st.t + dt);
                }
            }
            st.t += dt;
            st.x = v;
            if !self.track_last && st.recovery.is_some() {
                return st.finish(x0, StopReason::Recovered);
            }
            if jumps_now {
                let pre = st.x;
                st.x -= self.claims.sample(rng);
                if st.x < 0.0 {
                    if pre >= 0.0 && st.ruin.is_none() {
                        st.ruin = Some(Ruin {
                            time: st.t,
                            pre_surplus: pre,
                            deficit: -st.x,
                            sup: st.sup,
                            inf: st.inf,
                            cause: RuinCause::Jump,
                        });
                        st.inf_since_ruin = st.x;
                    }
                    if st.recovery.is_none() {
                        st.inf_since_ruin = st.inf_since_ruin.min(st.x);
                    }
                    st.below_at(st.t);
                }
                st.inf = st.inf.min(st.x);
                next_jump = st.t + self.next_wait(rng);
            }
        }
    }
}

/// Simulates path `stream` of the plan's seed.
pub fn simulate_path(model: &LevyModel, x: f64, plan: &SimPlan, stream: u64) -> Result<PathFunctionals> {
    check_start(x)?;
    Ok(Engine::new(model, plan)?.run(x, stream))
}

/// Simulates `plan.n_paths` paths in index order.
pub fn simulate(model: &LevyModel, x: f64, plan: &SimPlan) -> Result<Vec<PathFunctionals>> {
    check_start(x)?;
    let engine = Engine::new(model, plan)?;
    Ok((0..plan.n_paths).into_par_iter().map(|i| engine.run(x, i)).collect())
}

fn check_start(x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain("simulate", "x >= 0"));
    }
    Ok(())
}

/// Restrictions on the path defining an event. Unset fields are ignored;
/// boxes are closed intervals, `sup_*` fields are upper bounds (`<=`) and
/// `inf_*` fields strict lower bounds (`>`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Event {
    /// `X(T−)`
    pub y: Option<[f64; 2]>,
    /// `|X(T)|`
    pub z: Option<[f64; 2]>,
    /// `S_{T−} <= a`
    pub sup_before_ruin: Option<f64>,
    /// `I_{T−} > b`
    pub inf_before_ruin: Option<f64>,
    /// `inf_{[T,T₀]} X > −b`, given as `−b`.
    pub inf_to_recovery: Option<f64>,
    /// `S_l <= a`
    pub sup_to_last: Option<f64>,
    /// `I_l > −b`, given as `−b`.
    pub inf_to_last: Option<f64>,
    pub cause: Option<RuinCause>,
}

fn within(v: f64, b: Option<[f64; 2]>) -> bool {
    b.is_none_or(|[lo, hi]| v >= lo && v <= hi)
}

impl Event {
    fn ruin_part(&self, r: &Ruin) -> bool {
        within(r.pre_surplus, self.y)
            && within(r.deficit, self.z)
            && self.sup_before_ruin.is_none_or(|a| r.sup <= a)
            && self.inf_before_ruin.is_none_or(|b| r.inf > b)
            && self.cause.is_none_or(|c| c == r.cause)
    }

    fn needs_recovery(&self) -> bool {
        self.inf_to_recovery.is_some()
    }

    fn needs_last(&self) -> bool {
        self.sup_to_last.is_some() || self.inf_to_last.is_some()
    }

    /// `None` when a needed functional is unresolved.
    fn holds(&self, p: &PathFunctionals, r: &Ruin) -> Option<bool> {
        if !self.ruin_part(r) {
            return Some(false);
        }
        if self.needs_recovery() {
            let rec = p.recovery?;
            if !self.inf_to_recovery.is_none_or(|m| rec.inf > m) {
                return Some(false);
            }
        }
        if self.needs_last() {
            if p.stop != StopReason::Escaped {
                return None;
            }
            let last = p.last_passage?;
            if !(self.sup_to_last.is_none_or(|a| last.sup <= a) && self.inf_to_last.is_none_or(|m| last.inf > m)) {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Path weight whose mean is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `e^{−qT}·1(T < ∞, event)`
    Ruin {
        #[serde(default)]
        q: f64,
        #[serde(default)]
        event: Event,
    },
    /// `e^{−qT−β(T₀−T)}·1(T₀ < ∞, event)`
    Recovery {
        #[serde(default)]
        q: f64,
        beta: f64,
        #[serde(default)]
        event: Event,
    },
    /// `e^{−qT−β(l−T)}·1(T < ∞, event)`
    LastPassage {
        #[serde(default)]
        q: f64,
        beta: f64,
        #[serde(default)]
        event: Event,
    },
    /// `e^{−βD}`
    Duration { beta: f64 },
}

/// A weight's value on one path; `Censored(bound)` when the path stopped
/// before the weight was determined and `bound` caps the missing value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Value(f64),
    Censored(f64),
}

impl Weight {
    fn needs_last(&self) -> bool {
        match self {
            Weight::Ruin { event, .. } | Weight::Recovery { event, .. } => event.needs_last(),
            Weight::LastPassage { .. } | Weight::Duration { .. } => true,
        }
    }

    fn validate(&self) -> Result<()> {
        let (q, beta) = match *self {
            Weight::Ruin { q, .. } => (q, 0.0),
            Weight::Recovery { q, beta, .. } | Weight::LastPassage { q, beta, .. } => (q, beta),
            Weight::Duration { beta } => (0.0, beta),
        };
        if !(q >= 0.0 && beta >= 0.0) {
            return Err(domain("weight", "q >= 0 and beta >= 0"));
        }
        Ok(())
    }

    pub fn sample(&self, p: &PathFunctionals) -> Sample {
        let unresolved_no_ruin = |q: f64| {
            if p.stop == StopReason::Horizon {
                Sample::Censored((-q * p.end_time).exp())
            } else {
                Sample::Value(0.0)
            }
        };
        match *self {
            Weight::Ruin { q, event } => match p.ruin {
                None => unresolved_no_ruin(q),
                Some(r) => {
                    let w = (-q * r.time).exp();
                    match event.holds(p, &r) {
                        Some(true) => Sample::Value(w),
                        Some(false) => Sample::Value(0.0),
                        None => Sample::Censored(w),
                    }
                }
            },
            Weight::Recovery { q, beta, event } => match p.ruin {
                None => unresolved_no_ruin(q),
                Some(r) => match p.recovery {
                    None => Sample::Censored((-q * r.time - beta * (p.end_time - r.time)).exp()),
                    Some(rec) => {
                        let w = (-q * r.time - beta * (rec.time - r.time)).exp();
                        match event.holds(p, &r) {
                            Some(true) => Sample::Value(w),
                            Some(false) => Sample::Value(0.0),
                            None => Sample::Censored(w),
                        }
                    }
                },
            },
            Weight::LastPassage { q, beta, event } => match p.ruin {
                None => unresolved_no_ruin(q),
                Some(r) => {
                    let l = p.last_passage.map_or(r.time, |l| l.time);
                    let w = (-q * r.time - beta * (l - r.time)).exp();
                    if p.stop != StopReason::Escaped {
                        return Sample::Censored(w);
                    }
                    match event.holds(p, &r) {
                        Some(true) => Sample::Value(w),
                        Some(false) => Sample::Value(0.0),
                        None => Sample::Censored(w),
                    }
                }
            },
            Weight::Duration { beta } => {
                let w = (-beta * p.duration).exp();
                if p.stop == StopReason::Escaped {
                    Sample::Value(w)
                } else {
                    Sample::Censored(w)
                }
            }
        }
    }
}

/// Monte Carlo estimate. Censored paths contribute zero; their weights are
/// at most `censoring_bound` in total (as a mean). `truncation_bound`
/// bounds the effect of stopping at the escape level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// Paths with a nonzero weight.
    pub n_effective: u64,
    pub n_censored: u64,
    pub censoring_bound: f64,
    pub truncation_bound: f64,
}

impl Estimate {
    /// `(mean − target)/std_error`
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }

    /// `|mean − target| <= k·std_error + censoring_bound + truncation_bound`
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + self.censoring_bound + self.truncation_bound
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: u64,
    sum: f64,
    sum_sq: f64,
    effective: u64,
    censored: u64,
    bound: f64,
}

impl Acc {
    fn push(&mut self, s: Sample) {
        self.n += 1;
        match s {
            Sample::Value(v) => {
                self.sum += v;
                self.sum_sq += v * v;
                if v != 0.0 {
                    self.effective += 1;
                }
            }
            Sample::Censored(b) => {
                self.censored += 1;
                self.bound += b;
            }
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.effective += o.effective;
        self.censored += o.censored;
        self.bound += o.bound;
    }

    fn finish(&self, truncation_bound: f64) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            n_paths: self.n,
            n_effective: self.effective,
            n_censored: self.censored,
            censoring_bound: self.bound / n,
            truncation_bound,
        }
    }
}

/// Estimates the mean of each weight over the same simulated paths.
pub fn estimate(model: &LevyModel, x: f64, plan: &SimPlan, weights: &[Weight]) -> Result<Vec<Estimate>> {
    check_start(x)?;
    for w in weights {
        w.validate()?;
        if w.needs_last() && !plan.track_last_passage {
            return Err(domain("estimate", "last-passage tracking for weights involving l or D"));
        }
    }
    let engine = Engine::new(model, plan)?;
    let n_chunks = plan.n_paths.div_ceil(CHUNK);
    let partial: Vec<Vec<Acc>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Acc::default(); weights.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(plan.n_paths) {
                let p = engine.run(x, i);
                for (a, w) in acc.iter_mut().zip(weights) {
                    a.push(w.sample(&p));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Acc::default(); weights.len()];
    for chunk in &partial {
        for (t, a) in total.iter_mut().zip(chunk) {
            t.merge(a);
        }
    }
    let mut out = Vec::with_capacity(weights.len());
    for (acc, w) in total.iter().zip(weights) {
        if acc.effective == 0 {
            return Err(Error::Simulation(format!("no path contributes to {w:?}")));
        }
        out.push(acc.finish(engine.truncation_bound));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl() -> LevyModel {
        LevyModel::exponential_claims(1.2, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn seed_replay_is_bitwise() {
        let jd = LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap();
        for model in [cl(), jd] {
            let plan = SimPlan::new(64, 7);
            let a = simulate(&model, 1.0, &plan).unwrap();
            let b = simulate(&model, 1.0, &plan).unwrap();
            assert_eq!(a, b);
            assert_eq!(simulate_path(&model, 1.0, &plan, 5).unwrap(), a[5]);
        }
    }

    #[test]
    fn path_invariants() {
        let jd = LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap();
        for model in [cl(), jd] {
            let paths = simulate(&model, 1.0, &SimPlan::new(500, 3)).unwrap();
            for p in &paths {
                if let Some(r) = p.ruin {
                    assert!(r.inf <= 1.0 && r.sup >= 1.0);
                    assert!(r.pre_surplus >= 0.0 && r.deficit >= 0.0);
                    assert!(r.inf <= r.pre_surplus + 1e-12);
                    let rec = p.recovery.unwrap();
                    assert!(rec.time >= r.time);
                    assert!(rec.inf <= -r.deficit + 1e-12);
                    let l = p.last_passage.unwrap();
                    assert!(l.time >= r.time);
                    assert!(p.duration >= rec.time - r.time - 1e-9);
                    assert_eq!(r.cause == RuinCause::Creeping, r.deficit == 0.0);
                } else {
                    assert_eq!(p.duration, 0.0);
                }
                assert_eq!(p.stop, StopReason::Escaped);
            }
        }
    }

    #[test]
    fn escape_level_meets_tail() {
        let (l, psi) = escape_level(&cl(), 1e-4).unwrap();
        let exact = |x: f64| (-x / 6.0).exp() / 1.2;
        assert!(exact(l) < 1e-4 && exact(0.99 * l) > 0.99e-4);
        assert!((psi - exact(l)).abs() < 1e-10);
        let down = LevyModel::exponential_claims(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(escape_level(&down, 1e-4).is_err());
    }

    #[test]
    fn fixed_horizon_censors() {
        let plan = SimPlan {
            n_paths: 2000,
            horizon: Horizon::Fixed { t_max: 1.0 },
            ..SimPlan::default()
        };
        let e = estimate(
            &cl(),
            1.0,
            &plan,
            &[Weight::Ruin {
                q: 0.0,
                event: Event::default(),
            }],
        )
        .unwrap();
        assert!(e[0].n_censored > 0 && e[0].censoring_bound > 0.0);
        assert_eq!(e[0].truncation_bound, 0.0);
    }

    #[test]
    fn tabulated_claims_sample_the_density() {
        // Triangular density on [0, 2] with mean 2/3.
        let model = LevyModel::new(
            1.0,
            0.0,
            JumpSpec::CompoundPoisson {
                rate: 1.0,
                density: crate::levy_model::TabulatedDensity::new(vec![0.0, 2.0], vec![1.0, 0.0]).unwrap(),
            },
        )
        .unwrap();
        let sampler = ClaimSampler::new(model.jumps()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mean = (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 5e-3);
    }

    #[test]
    fn plan_and_weight_validation() {
        let plan = SimPlan {
            track_last_passage: false,
            ..SimPlan::new(10, 0)
        };
        assert!(estimate(&cl(), 1.0, &plan, &[Weight::Duration { beta: 0.5 }]).is_err());
        assert!(simulate(&cl(), -1.0, &plan).is_err());
        assert!(simulate(&cl(), 1.0, &SimPlan::new(0, 0)).is_err());
        let plan: SimPlan =
            serde_json::from_str(r#"{"n_paths": 5, "horizon": {"rule": "fixed", "t_max": 3}}"#).unwrap();
        assert_eq!(plan.horizon, Horizon::Fixed { t_max: 3.0 });
        assert!(serde_json::from_str::<SimPlan>(r#"{"paths": 5}"#).is_err());
    }
}
