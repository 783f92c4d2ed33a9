use drake_core::counting_stats::{
    lower_limit, p_second_given_first, scale_limit_to_galaxy, LimitResult, LimitScope,
};
use drake_core::mc_engine::{
    run, Histogram, HistogramSpec, QuantilePoint, RunSummary, ThresholdCounts, Thresholds,
};
use drake_core::reporting::{emit_curve, emit_summary, Spacing, SummaryDocument};
use drake_core::DrakeScenario;
use proptest::prelude::*;

fn any_fraction() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
}

fn any_log10() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(f64::NEG_INFINITY),
        Just(f64::INFINITY),
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |x| x.is_finite())
    ]
}

fn summary_strategy() -> impl Strategy<Value = RunSummary> {
    let hist = (1usize..40, -200.0f64..0.0, 0.1f64..100.0).prop_flat_map(|(bins, lo, w)| {
        (
            prop::collection::vec(0u64..1_000_000, bins),
            0u64..1000,
            0u64..1000,
        )
            .prop_map(move |(counts, underflow, overflow)| Histogram {
                spec: HistogramSpec {
                    log10_min: lo,
                    log10_max: lo + w,
                    n_bins: bins,
                },
                counts,
                underflow,
                overflow,
            })
    });
    let fractions = prop::collection::vec(any_fraction(), 5);
    let quantiles = prop::collection::vec((0.0f64..=1.0, any_log10()), 0..10);
    let limit = (1e-6f64..0.999999, any::<bool>(), 1e-12f64..1.0);
    let counts = prop::collection::vec(any::<u64>(), 5);
    (
        hist,
        fractions,
        quantiles,
        limit,
        counts,
        any::<u64>(),
        -20.0f64..0.0,
    )
        .prop_map(|(histogram, f, q, (c, galaxy, ratio), k, seed, thr)| {
            let n_samples = histogram.total();
            RunSummary {
                n_samples,
                seed,
                histogram,
                thresholds: Thresholds {
                    alone_galaxy_log10: 0.0,
                    alone_universe_log10: thr,
                    limit_log10: thr - 1.3,
                },
                limit: LimitResult {
                    confidence: c,
                    n_lower: -c.ln() * ratio,
                    scope: if galaxy {
                        LimitScope::Galaxy
                    } else {
                        LimitScope::Custom
                    },
                    star_ratio: ratio,
                },
                counts: ThresholdCounts {
                    alone_galaxy: k[0],
                    alone_universe: k[1],
                    below_limit: k[2],
                    alone_galaxy_above_limit: k[3],
                    alone_universe_above_limit: k[4],
                },
                frac_alone_galaxy: f[0],
                frac_alone_universe: f[1],
                frac_below_limit: f[2],
                frac_alone_galaxy_truncated: f[3],
                frac_alone_universe_truncated: f[4],
                quantiles: q
                    .into_iter()
                    .map(|(q, log10_n_g)| QuantilePoint { q, log10_n_g })
                    .collect(),
            }
        })
}

proptest! {
    #[test]
    fn summary_round_trips(summary in summary_strategy(), with_scenario in any::<bool>()) {
        let scenario = DrakeScenario::table1(summary.n_samples.max(1), summary.seed);
        let limits = vec![lower_limit(0.95).unwrap()];
        let doc = emit_summary(&summary, &limits, with_scenario.then_some(&scenario));
        let back = SummaryDocument::from_json(&doc.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn curve_points_follow_closed_form(lo in 0.0f64..10.0, w in 1e-6f64..100.0, n in 2usize..300, log in any::<bool>()) {
        let spacing = if log { Spacing::Log } else { Spacing::Linear };
        let lo = if log { lo.max(1e-6) } else { lo };
        let pts = emit_curve(lo, lo + w, n, spacing).unwrap();
        prop_assert_eq!(pts.len(), n);
        prop_assert_eq!(pts[0].n_civ, lo);
        prop_assert_eq!(pts[n - 1].n_civ, lo + w);
        for p in &pts {
            prop_assert!((p.p_second - p_second_given_first(p.n_civ).unwrap()).abs() <= 1e-12);
        }
    }
}

#[test]
fn table1_document_carries_run_fractions_exactly() {
    let sc = DrakeScenario::table1(50_000, 42);
    let s = run(&sc).unwrap();
    let u = lower_limit(0.95).unwrap();
    let limits = vec![
        u,
        scale_limit_to_galaxy(u, sc.stars_galaxy, sc.stars_universe).unwrap(),
    ];
    let json = emit_summary(&s, &limits, Some(&sc)).to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let field = |k: &str| v["summary"][k].as_f64().unwrap();
    assert_eq!(field("frac_alone_galaxy"), s.frac_alone_galaxy);
    assert_eq!(field("frac_alone_universe"), s.frac_alone_universe);
    assert_eq!(
        field("frac_alone_galaxy_truncated"),
        s.frac_alone_galaxy_truncated
    );
    assert_eq!(
        field("frac_alone_universe_truncated"),
        s.frac_alone_universe_truncated
    );
    assert_eq!(v["limits"].as_array().unwrap().len(), 2);
    assert_eq!(v["limits"][1]["scope"], "galaxy");
    assert_eq!(v["tool"], "drake");
    assert!(v["generated_at"].is_u64());
    assert_eq!(v["scenario"]["factors"][3]["prior"]["kind"], "life_rate");
}
