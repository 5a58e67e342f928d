use snlevy::laws::LawContext;
use snlevy::levy_model::LevyModel;
use snlevy::risk::{dickson_density, ruin_probability};
use snlevy::sim::*;
use snlevy::validation::box_integral;

fn cl() -> LevyModel {
    LevyModel::exponential_claims(1.2, 0.0, 1.0, 1.0).unwrap()
}

fn jd() -> LevyModel {
    LevyModel::exponential_claims(1.2, 0.4, 1.0, 1.0).unwrap()
}

fn ruin() -> Weight {
    Weight::Ruin {
        q: 0.0,
        event: Event::default(),
    }
}

#[test]
fn exact_simulation_matches_first_ruin_histogram_from_zero() {
    // f_q(y|0) = λc⁻¹e^{−Φ(q)y}P̄(y) and the (y, z) law at q = 0.
    let model = cl();
    let plan = SimPlan {
        track_last_passage: false,
        ..SimPlan::new(200_000, 21)
    };
    let q = 0.2;
    let ctx = LawContext::new(&model, 0.0, 0.0).unwrap();
    let edges = [0.0, 0.25, 0.5, 1.0, 2.0];
    let mut weights = Vec::new();
    let mut targets = Vec::new();
    for w in edges.windows(2) {
        let y = [w[0], w[1]];
        weights.push(Weight::Ruin {
            q,
            event: Event {
                y: Some(y),
                ..Event::default()
            },
        });
        targets.push(
            snlevy::quadrature::integrate(
                |v| dickson_density(&model, q, 0.0, v).unwrap(),
                w[0].max(1e-12),
                w[1],
                Default::default(),
            )
            .value,
        );
        for z in [[0.0, 0.5], [0.5, 2.0]] {
            weights.push(Weight::Ruin {
                q: 0.0,
                event: Event {
                    y: Some(y),
                    z: Some(z),
                    ..Event::default()
                },
            });
            targets.push(box_integral(|yy, zz| ctx.triple_density(0.0, yy, zz), [w[0].max(1e-12), w[1]], z).unwrap());
        }
    }
    let est = estimate(&model, 0.0, &plan, &weights).unwrap();
    for (e, t) in est.iter().zip(&targets) {
        assert!(e.agrees_with(*t, 3.5), "{e:?} vs {t}");
    }
}

#[test]
fn bridge_correction_reduces_brownian_bias() {
    let bm = LevyModel::brownian(1.0, 1.0).unwrap();
    let exact = ruin_probability(&bm, 1.0).unwrap();
    let run = |bridge: bool| {
        let plan = SimPlan {
            bridge,
            step: 1e-2,
            track_last_passage: false,
            ..SimPlan::new(40_000, 4)
        };
        estimate(&bm, 1.0, &plan, &[ruin()]).unwrap()[0]
    };
    let (with, without) = (run(true), run(false));
    assert!(with.agrees_with(exact, 3.0), "{with:?}");
    assert!((with.mean - exact).abs() < (without.mean - exact).abs());
}

#[test]
fn halving_the_step_moves_the_estimate_less_than_one_se() {
    let model = jd();
    let est = |step: f64| {
        let plan = SimPlan {
            step,
            track_last_passage: false,
            ..SimPlan::new(50_000, 8)
        };
        estimate(&model, 1.0, &plan, &[ruin()]).unwrap()[0]
    };
    let (a, b) = (est(1e-3), est(5e-4));
    assert!((a.mean - b.mean).abs() < a.std_error, "{a:?} {b:?}");
    assert!(a.agrees_with(ruin_probability(&model, 1.0).unwrap(), 3.0));
}

#[test]
fn ruin_cause_split_matches_creeping_law() {
    let model = jd();
    let ctx = LawContext::new(&model, 0.0, 0.0).unwrap();
    let plan = SimPlan {
        track_last_passage: false,
        ..SimPlan::new(50_000, 2)
    };
    let creeping = Weight::Ruin {
        q: 0.0,
        event: Event {
            cause: Some(RuinCause::Creeping),
            ..Event::default()
        },
    };
    let jump = Weight::Ruin {
        q: 0.0,
        event: Event {
            cause: Some(RuinCause::Jump),
            ..Event::default()
        },
    };
    let e = estimate(&model, 0.5, &plan, &[creeping, jump]).unwrap();
    let c = ctx.creeping_probability(0.5).unwrap();
    assert!(e[0].agrees_with(c, 3.0), "{:?} vs {c}", e[0]);
    assert!(e[1].agrees_with(ruin_probability(&model, 0.5).unwrap() - c, 3.0));
}

#[test]
fn escape_rule_resolves_last_passage() {
    for model in [cl(), jd()] {
        let paths = simulate(&model, 1.0, &SimPlan::new(5_000, 13)).unwrap();
        let unresolved = paths.iter().filter(|p| p.stop != StopReason::Escaped).count();
        assert!((unresolved as f64) < 1e-3 * paths.len() as f64);
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let plan = SimPlan::new(5_000, 99);
    let weights = [ruin(), Weight::Duration { beta: 0.5 }];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&jd(), 1.0, &plan, &weights).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn rare_ruin_at_large_start_is_small() {
    let plan = SimPlan {
        track_last_passage: false,
        ..SimPlan::new(20_000, 6)
    };
    let e = estimate(&cl(), 20.0, &plan, &[ruin()]).unwrap()[0];
    assert!(e.agrees_with(ruin_probability(&cl(), 20.0).unwrap(), 3.0));
    assert!(e.mean < 0.1);
}
