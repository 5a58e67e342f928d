//! Analytic-versus-simulation checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::LawContext;
use crate::levy_model::{JumpSpec, LevyModel};
use crate::quadrature::{integrate, Tolerance};
use crate::risk::ruin_probability;
use crate::sim::{estimate, Estimate, Event, RuinCause, SimPlan, Weight};

/// One row of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_name: String,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `|mc − analytic| <= k·se` plus the estimate's censoring
    /// and truncation bounds.
    pub fn new(name: impl Into<String>, analytic: f64, e: &Estimate, k: f64) -> Self {
        let diff = e.mean - analytic;
        Check {
            check_name: name.into(),
            analytic,
            mc_mean: e.mean,
            mc_se: e.std_error,
            z_score: if diff == 0.0 { 0.0 } else { diff / e.std_error },
            pass: e.agrees_with(analytic, k),
        }
    }
}

/// `∫∫ f(y, z)` over a box, to high accuracy.
pub fn box_integral<F: Fn(f64, f64) -> Result<f64>>(f: F, y: [f64; 2], z: [f64; 2]) -> Result<f64> {
    let tol = Tolerance::new(1e-12, 1e-10);
    let mut err = None;
    let r = integrate(
        |yy| {
            let inner = integrate(
                |zz| match f(yy, zz) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                z[0],
                z[1],
                tol,
            );
            inner.value
        },
        y[0],
        y[1],
        tol,
    );
    if let Some(e) = err {
        return Err(e);
    }
    r.checked()
}

/// Parameters of the standard suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    pub x: f64,
    pub q: f64,
    pub beta: f64,
    /// Start for the joint recovery and last-passage boxes.
    pub x_box: f64,
    /// Multiple of the standard error allowed.
    pub k: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            x: 1.0,
            q: 0.1,
            beta: 0.3,
            x_box: 2.0,
            k: 3.0,
        }
    }
}

/// Runs the standard checks for `model` (which must drift to `+∞`).
pub fn run_suite(model: &LevyModel, plan: &SimPlan, p: &SuiteParams) -> Result<Vec<Check>> {
    let has_jumps = !matches!(model.jumps(), JumpSpec::NoJumps);
    let creeps = model.sigma() > 0.0;
    let ctx = LawContext::new(model, p.q, p.beta)?;
    let ctx0 = LawContext::new(model, 0.0, p.beta)?;
    let x = p.x;
    let mut checks = Vec::new();

    // Ruin-time functionals from x.
    let mut names = vec!["ruin_probability".to_string(), format!("ruin_transform_q{}", p.q)];
    let mut analytic = vec![ruin_probability(model, x)?, {
        let ev = ctx.scale_q();
        ev.z(x)? - ev.q_over_phi() * ev.w(x)?
    }];
    let mut weights = vec![
        Weight::Ruin {
            q: 0.0,
            event: Event::default(),
        },
        Weight::Ruin {
            q: p.q,
            event: Event::default(),
        },
    ];
    if creeps {
        names.push(format!("creeping_transform_q{}", p.q));
        analytic.push(ctx.creeping_probability(x)?);
        weights.push(Weight::Ruin {
            q: p.q,
            event: Event {
                cause: Some(RuinCause::Creeping),
                ..Event::default()
            },
        });
    }
    if has_jumps {
        let (y, z, a, b) = ([0.2, x.max(0.3)], [0.2, 1.0], 3.0 * x.max(1.0), 0.1);
        names.push("quintuple_box".into());
        analytic.push(box_integral(|yy, zz| ctx0.quintuple_density(x, yy, zz, a, b), y, z)?);
        weights.push(Weight::Ruin {
            q: 0.0,
            event: Event {
                y: Some(y),
                z: Some(z),
                sup_before_ruin: Some(a),
                inf_before_ruin: Some(b),
                ..Event::default()
            },
        });
    }
    names.push(format!("recovery_transform_q{}_b{}", p.q, p.beta));
    analytic.push(ctx.recovery_transform(x)?);
    weights.push(Weight::Recovery {
        q: p.q,
        beta: p.beta,
        event: Event::default(),
    });
    names.push(format!("last_passage_transform_q{}_b{}", p.q, p.beta));
    analytic.push(ctx.last_passage_transform(x)?);
    weights.push(Weight::LastPassage {
        q: p.q,
        beta: p.beta,
        event: Event::default(),
    });
    names.push(format!("duration_transform_b{}", p.beta));
    analytic.push(ctx.duration_transform(x)?);
    weights.push(Weight::Duration { beta: p.beta });
    push_checks(
        &mut checks,
        &names,
        &analytic,
        &estimate(model, x, plan, &weights)?,
        p.k,
    );

    // Duration from zero: φ'(0+)Φ(β)/β.
    let e = estimate(model, 0.0, plan, &[Weight::Duration { beta: p.beta }])?;
    let target = model.mean_drift() * ctx.phi_beta()? / p.beta;
    checks.push(Check::new(
        format!("duration_from_zero_b{}", p.beta),
        target,
        &e[0],
        p.k,
    ));

    // Joint laws with post-ruin restrictions.
    if has_jumps {
        let xb = p.x_box;
        let (y, z, a, b) = ([0.8 * xb, 1.25 * xb], [0.1 * xb, 0.6 * xb], 1.5 * xb, 0.75 * xb);
        let rec = box_integral(|yy, zz| ctx.recovery_joint(xb, yy, zz, a, b), y, z)?;
        let last = box_integral(|yy, zz| ctx.last_passage_joint(xb, yy, zz, a, b), y, z)?;
        let base = Event {
            y: Some(y),
            z: Some(z),
            ..Event::default()
        };
        let weights = [
            Weight::Recovery {
                q: p.q,
                beta: p.beta,
                event: Event {
                    sup_before_ruin: Some(a),
                    inf_to_recovery: Some(-b),
                    ..base
                },
            },
            Weight::LastPassage {
                q: p.q,
                beta: p.beta,
                event: Event {
                    sup_to_last: Some(a),
                    inf_to_last: Some(-b),
                    ..base
                },
            },
        ];
        let e = estimate(model, xb, plan, &weights)?;
        push_checks(
            &mut checks,
            &["recovery_joint_box".into(), "last_passage_joint_box".into()],
            &[rec, last],
            &e,
            p.k,
        );
    }
    Ok(checks)
}

fn push_checks(out: &mut Vec<Check>, names: &[String], analytic: &[f64], est: &[Estimate], k: f64) {
    for ((n, a), e) in names.iter().zip(analytic).zip(est) {
        out.push(Check::new(n.clone(), *a, e, k));
    }
}

/// Error for a failed suite, listing the failing checks.
pub fn failures(checks: &[Check]) -> Option<Error> {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.check_name.as_str())
        .collect();
    if failed.is_empty() {
        None
    } else {
        Some(Error::Simulation(format!("validation failed: {}", failed.join(", "))))
    }
}
