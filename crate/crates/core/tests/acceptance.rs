//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines appear in `cargo test` output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use snlevy::laws::LawContext;
use snlevy::levy_model::LevyModel;
use snlevy::quadrature::{integrate_to_infinity, Tolerance};
use snlevy::risk::{creeping_weight, dickson_density, gerber_shiu, gerber_shiu_2d, k5_report, Penalty, PenaltySpec};
use snlevy::scale::{ScaleEvaluator, ScaleOptions};
use snlevy::sim::{estimate, Estimate, Event, SimPlan, Weight};
use snlevy::validation::box_integral;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

const MC_PATHS: u64 = 1_000_000;
const K: f64 = 3.0;

fn cl() -> LevyModel {
    LevyModel::exponential_claims(1.2, 0.0, 1.0, 1.0).unwrap()
}

fn jd() -> LevyModel {
    LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap()
}

fn bm() -> LevyModel {
    LevyModel::brownian(1.0, 1.0).unwrap()
}

fn plan(n: u64, seed: u64, track_last_passage: bool) -> SimPlan {
    SimPlan {
        track_last_passage,
        ..SimPlan::new(n, seed)
    }
}

fn mc_line(label: &str, target: f64, e: &Estimate) -> (bool, String) {
    let ok = e.agrees_with(target, K);
    (
        ok,
        format!(
            "{label}: analytic {target:.6} mc {:.6} se {:.2e} z {:+.2}",
            e.mean,
            e.std_error,
            e.z_score(target)
        ),
    )
}

fn join(parts: Vec<(bool, String)>) -> (bool, String) {
    let ok = parts.iter().all(|p| p.0);
    let text = parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; ");
    (ok, text)
}

fn laplace_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for model in [cl(), jd(), bm()] {
        for q in [0.0, 0.05, 0.5] {
            let ev = ScaleEvaluator::new(&model, q)?;
            let phi = ev.phi_q();
            for shift in [0.5, 1.0, 3.0] {
                let alpha = phi + shift;
                let integral = integrate_to_infinity(
                    |x| (-alpha * x).exp() * ev.w(x).unwrap(),
                    0.0,
                    1.0 / shift,
                    Tolerance::new(1e-14, 1e-11),
                )
                .checked()?;
                let target = 1.0 / (model.exponent(alpha) - q);
                worst = worst.max(((integral - target) / target).abs());
            }
        }
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.2e} (tol 1e-6)")))
}

fn backends_agree() -> Outcome {
    let mut worst: f64 = 0.0;
    for model in [bm(), cl()] {
        for q in [0.0, 0.1, 0.5] {
            let closed = ScaleEvaluator::with_options(&model, q, ScaleOptions::closed_form())?;
            let inv = ScaleEvaluator::with_options(&model, q, ScaleOptions::inversion())?;
            for i in 0..200 {
                let x = 0.01 + (10.0 - 0.01) * i as f64 / 199.0;
                let (a, b) = (closed.w(x)?, inv.w(x)?);
                worst = worst.max(((a - b) / a).abs());
            }
        }
    }
    Ok((worst < 1e-6, format!("max relative discrepancy {worst:.2e} (tol 1e-6)")))
}

fn duration() -> Outcome {
    let model = cl();
    let betas = [0.2, 0.5, 1.0];
    let weights: Vec<Weight> = betas.iter().map(|&beta| Weight::Duration { beta }).collect();
    let est = estimate(&model, 0.0, &plan(MC_PATHS, 31, true), &weights)?;
    let mut parts = Vec::new();
    for (beta, e) in betas.iter().zip(&est) {
        let target = model.mean_drift() * model.phi_inverse(*beta)? / beta;
        parts.push(mc_line(&format!("x=0 beta={beta}"), target, e));
    }
    let e = estimate(
        &model,
        1.0,
        &plan(MC_PATHS, 32, true),
        &[Weight::Duration { beta: 0.5 }],
    )?;
    let target = snlevy::laws::duration_transform(&model, 0.5, 1.0)?;
    parts.push(mc_line("x=1 beta=0.5", target, &e[0]));
    Ok(join(parts))
}

fn quintuple_box() -> Outcome {
    let model = cl();
    let (x, y, z, a, b) = (1.0, [0.2, 1.0], [0.2, 1.0], 3.0, 0.1);
    let qs = [0.0, 0.1];
    let event = Event {
        y: Some(y),
        z: Some(z),
        sup_before_ruin: Some(a),
        inf_before_ruin: Some(b),
        ..Event::default()
    };
    let weights: Vec<Weight> = qs.iter().map(|&q| Weight::Ruin { q, event }).collect();
    let est = estimate(&model, x, &plan(MC_PATHS, 41, false), &weights)?;
    let mut parts = Vec::new();
    for (q, e) in qs.iter().zip(&est) {
        let ctx = LawContext::new(&model, *q, 0.0)?;
        let target = box_integral(|yy, zz| ctx.quintuple_density(x, yy, zz, a, b), y, z)?;
        parts.push(mc_line(&format!("q={q}"), target, e));
    }
    Ok(join(parts))
}

fn joint_box_event() -> (f64, [f64; 2], [f64; 2], f64, f64) {
    (2.0, [1.6, 2.5], [0.2, 1.2], 3.0, 1.5)
}

fn recovery_box() -> Outcome {
    let model = jd();
    let (q, beta) = (0.1, 0.2);
    let (x, y, z, a, b) = joint_box_event();
    let ctx = LawContext::new(&model, q, beta)?;
    let target = box_integral(|yy, zz| ctx.recovery_joint(x, yy, zz, a, b), y, z)?;
    let w = Weight::Recovery {
        q,
        beta,
        event: Event {
            y: Some(y),
            z: Some(z),
            sup_before_ruin: Some(a),
            inf_to_recovery: Some(-b),
            ..Event::default()
        },
    };
    let e = estimate(&model, x, &plan(MC_PATHS, 51, false), &[w])?;
    Ok(mc_line("jump-diffusion q=0.1 beta=0.2", target, &e[0]))
}

fn last_passage_box() -> Outcome {
    let model = cl();
    let (q, beta) = (0.1, 0.3);
    let (x, y, z, a, b) = joint_box_event();
    let ctx = LawContext::new(&model, q, beta)?;
    let target = box_integral(|yy, zz| ctx.last_passage_joint(x, yy, zz, a, b), y, z)?;
    let w = Weight::LastPassage {
        q,
        beta,
        event: Event {
            y: Some(y),
            z: Some(z),
            sup_to_last: Some(a),
            inf_to_last: Some(-b),
            ..Event::default()
        },
    };
    let e = estimate(&model, x, &plan(MC_PATHS, 61, true), &[w])?[0];
    let uncorrected = box_integral(|yy, zz| ctx.last_passage_joint_uncorrected(x, yy, zz, a, b), y, z)?;
    let (ok, text) = mc_line("q=0.1 beta=0.3", target, &e);
    Ok((
        ok,
        format!(
            "{text} censored {} (bound {:.1e}) truncation bound {:.1e}; uncorrected R {uncorrected:.6} (z {:+.1})",
            e.n_censored,
            e.censoring_bound,
            e.truncation_bound,
            e.z_score(uncorrected)
        ),
    ))
}

fn creeping_normalizations() -> Outcome {
    let model = jd();
    let beta = 0.3;
    let mut parts = Vec::new();
    for q in [0.0, 0.1] {
        let ctx = LawContext::new(&model, q, beta)?;
        let rec = ctx.creeping_recovery(0.0)?;
        let last = ctx.creeping_last_passage(0.0)?;
        let phi_b = model.phi_inverse(beta)?;
        let target = model.mean_drift() / model.exponent_derivative(phi_b);
        parts.push((
            (rec - 1.0).abs() < 1e-4 && (last - target).abs() < 1e-4,
            format!("q={q}: recovery {rec:.8} vs 1, last passage {last:.8} vs {target:.8}"),
        ));
    }
    let k6 = creeping_weight(&model, 0.0, 0.0)?;
    parts.push(((k6 - 1.0).abs() < 1e-4, format!("K6(x=0) {k6:.8} vs 1")));
    Ok(join(parts))
}

fn dickson() -> Outcome {
    let drift_down = LevyModel::exponential_claims(0.8, 0.0, 1.0, 1.0)?;
    let runs = [(cl(), 0.05), (cl(), 0.5), (jd(), 0.05), (jd(), 0.5), (drift_down, 0.1)];
    let mut worst: f64 = 0.0;
    for (model, q) in runs {
        let ctx = LawContext::new(&model, q, 0.0)?;
        for i in 0..20 {
            let x = 5.0 * i as f64 / 19.0;
            for j in 0..20 {
                let y = 0.05 + 4.95 * j as f64 / 19.0;
                let d = dickson_density(&model, q, x, y)?;
                let f = ctx.triple_marginal(x, y)?;
                worst = worst.max((d - f).abs() / f.abs().max(1.0));
            }
        }
    }
    Ok((
        worst < 1e-8,
        format!("max discrepancy {worst:.2e} over 5 grids (tol 1e-8)"),
    ))
}

fn gerber_shiu_sanity() -> Outcome {
    let q = 0.1;
    let model = cl();
    let ev = ScaleEvaluator::new(&model, q)?;
    let mut parts = Vec::new();
    for x in [0.5, 1.0, 2.0] {
        let gs = gerber_shiu(&model, q, x, &PenaltySpec::new(Penalty::Unit))?;
        let target = ev.z(x)? - ev.q_over_phi() * ev.w(x)?;
        let rel = ((gs.value - target) / target).abs();
        parts.push((rel < 1e-3, format!("unit x={x} rel {rel:.1e}")));
    }
    let penalties = [
        (
            cl(),
            Penalty::Band {
                y1: 0.2,
                y2: 1.0,
                z1: 0.2,
                z2: 1.0,
            },
        ),
        (cl(), Penalty::DeficitPower(2.0)),
        (cl(), Penalty::ExpDeficit(0.5)),
        (
            jd(),
            Penalty::Band {
                y1: 0.2,
                y2: 1.0,
                z1: 0.2,
                z2: 1.0,
            },
        ),
    ];
    for (model, penalty) in penalties {
        let label = format!("{penalty}");
        let spec = PenaltySpec::new(penalty);
        let four = gerber_shiu(&model, q, 1.0, &spec)?.value;
        let two = gerber_shiu_2d(&model, q, 1.0, &spec)?.value;
        let rel = ((four - two) / two).abs();
        parts.push((
            rel < 1e-4,
            format!("{label} sigma={} 4d/2d rel {rel:.1e}", model.sigma()),
        ));
    }
    let report = k5_report(&cl(), q, 1.0, 1.2, 3.0, 0.1)?;
    println!("  K5 cross-check (informational): {report:?}");
    Ok(join(parts))
}

fn oracle_calibration() -> Outcome {
    let model = cl();
    let ruin = Weight::Ruin {
        q: 0.0,
        event: Event::default(),
    };
    let e = estimate(&model, 0.0, &plan(MC_PATHS, 101, false), &[ruin])?;
    let a = mc_line("CL psi(0)", 1.0 / 1.2, &e[0]);
    let bm = bm();
    let target = 1.0 - bm.mean_drift() * ScaleEvaluator::new(&bm, 0.0)?.w(1.0)?;
    let e = estimate(&bm, 1.0, &plan(200_000, 102, false), &[ruin])?;
    let b = mc_line("BM ruin x=1 (bridge on)", target, &e[0]);
    Ok(join(vec![a, b]))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("scale-function Laplace identity", laplace_identity),
        ("closed form vs transform inversion", backends_agree),
        ("occupation time below zero", duration),
        ("quintuple law box", quintuple_box),
        ("recovery joint law box", recovery_box),
        ("last-passage joint law box", last_passage_box),
        ("creeping normalizations", creeping_normalizations),
        ("Dickson equivalence", dickson),
        ("Gerber-Shiu sanity", gerber_shiu_sanity),
        ("oracle self-calibration", oracle_calibration),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let secs = start.elapsed().as_secs_f64();
        if !outcome.0 {
            failed += 1;
        }
        let verdict = if outcome.0 { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} [{secs:.1}s]: {}", i + 1, outcome.1);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
