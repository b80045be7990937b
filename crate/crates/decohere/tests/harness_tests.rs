//! Sweep orchestration, decay-rate fits, ordering checks, CSV and
//! config round trips.

use decohere::harness::csvio::{
    fmt_f64, rates_from_csv, rates_to_csv, sweep_from_csv, sweep_to_csv,
};
use decohere::harness::{
    asymptote_record, config::parse_config_text, fit_decay, fit_decay_semilog, run_sweep,
    saturation_thickness, verify_ordering, DecayFit, GridSpec, SweepConfig, SweepRow, TargetSpec,
    FIT_QUANTITIES,
};
use decohere::measures::{MeasureRecord, MeasureUncertainties, Quantity};
use decohere::ree::ReeOptions;
use decohere::states::NamedState;
use decohere::Error;

/// Rows where every quantity follows Q(l) = q_inf + amp * exp(-gamma l^2).
fn synthetic_rows(amp: f64, gamma: f64, q_inf: f64, ells: &[f64]) -> Vec<SweepRow> {
    ells.iter()
        .map(|&ell| {
            let q = q_inf + amp * (-gamma * ell * ell).exp();
            SweepRow {
                ell,
                ell_sq: ell * ell,
                record: MeasureRecord {
                    e: q,
                    c: q,
                    c_g: q,
                    c_l: q,
                    t: q,
                    k: q_inf,
                    m: q,
                    uncertainties: None,
                },
                ree_converged: true,
            }
        })
        .collect()
}

fn grid(stop: f64, count: usize) -> Vec<f64> {
    GridSpec::new(0.0, stop, count).unwrap().points()
}

#[test]
fn fit_decay_recovers_rate_without_asymptote() {
    let gamma = 3e-5;
    let rows = synthetic_rows(0.5, gamma, 0.0, &grid(200.0, 12));
    let fit = fit_decay(&rows, Quantity::E, 0.0).unwrap();
    assert!(
        ((fit.gamma_fit - gamma) / gamma).abs() < 1e-8,
        "gamma_fit = {}",
        fit.gamma_fit
    );
    assert!((fit.intercept - 0.5f64.ln()).abs() < 1e-8);
    assert!(fit.residual_rms < 1e-10);
    assert_eq!(fit.points_used, 12);
}

#[test]
fn fit_decay_recovers_rate_above_nonzero_asymptote() {
    let gamma = 2e-5;
    let q_inf = 0.3;
    let rows = synthetic_rows(0.4, gamma, q_inf, &grid(300.0, 15));
    let fit = fit_decay(&rows, Quantity::T, q_inf).unwrap();
    assert!(((fit.gamma_fit - gamma) / gamma).abs() < 1e-8);
    assert!((fit.asymptote - q_inf).abs() < 1e-15);
}

#[test]
fn fit_decay_semilog_recovers_rate_for_vanishing_asymptote() {
    let gamma = 2.21e-5;
    let rows = synthetic_rows(0.8, gamma, 0.0, &grid(250.0, 20));
    let fit = fit_decay_semilog(&rows, Quantity::C, 0.0).unwrap();
    assert!(((fit.gamma_fit - gamma) / gamma).abs() < 1e-8);
}

#[test]
fn fit_decay_semilog_excludes_saturated_tail() {
    // With a nonzero floor, ln Q flattens at large l; the exact asymptote
    // must push those points out of the fit window.
    let gamma = 1e-4;
    let q_inf = 0.2;
    let ells = grid(1000.0, 30);
    let rows = synthetic_rows(0.5, gamma, q_inf, &ells);
    let fit = fit_decay_semilog(&rows, Quantity::C, q_inf).unwrap();
    assert!(fit.points_used < 30, "tail points must be excluded");
    // A nonzero floor flattens ln Q, so the rate is biased below gamma but
    // must stay positive; with the asymptote subtracted it is exact.
    assert!(fit.gamma_fit > 0.0 && fit.gamma_fit < gamma);
    let exact = fit_decay(&rows, Quantity::C, q_inf).unwrap();
    assert!(((exact.gamma_fit - gamma) / gamma).abs() < 1e-8);
}

#[test]
fn fit_rejects_too_few_usable_points() {
    // All rows at the asymptote: nothing to fit.
    let rows = synthetic_rows(0.0, 1e-5, 0.25, &grid(100.0, 10));
    match fit_decay(&rows, Quantity::E, 0.25) {
        Err(Error::InsufficientFitPoints { have, need }) => {
            assert_eq!(have, 0);
            assert_eq!(need, 3);
        }
        other => panic!("expected InsufficientFitPoints, got {other:?}"),
    }
    assert!(fit_decay(&[], Quantity::E, 0.0).is_err());
}

fn fit_with_rate(quantity: Quantity, gamma_fit: f64) -> DecayFit {
    DecayFit {
        quantity,
        gamma_fit,
        intercept: 0.0,
        asymptote: 0.0,
        points_used: 10,
        residual_rms: 0.0,
    }
}

#[test]
fn ordering_passes_on_a_strict_hierarchy() {
    let fits: Vec<DecayFit> = FIT_QUANTITIES
        .iter()
        .zip([5.0, 4.0, 3.0, 2.0, 1.0])
        .map(|(&q, r)| fit_with_rate(q, r * 1e-5))
        .collect();
    let report = verify_ordering(&fits).unwrap();
    assert!(report.pass, "{}", report.summary());
    assert_eq!(report.ranked[0].0, Quantity::E);
    assert_eq!(report.ranked[5].0, Quantity::K);
    assert_eq!(report.ranked[5].1, 0.0);
    assert!(report.summary().starts_with("ordering PASS"));
}

#[test]
fn ordering_names_the_violating_pair() {
    // Swap the C and CG rates so CG !> C.
    let fits: Vec<DecayFit> = FIT_QUANTITIES
        .iter()
        .zip([5.0, 3.0, 4.0, 2.0, 1.0])
        .map(|(&q, r)| fit_with_rate(q, r * 1e-5))
        .collect();
    let report = verify_ordering(&fits).unwrap();
    assert!(!report.pass);
    assert_eq!(report.violations, vec![(Quantity::Cg, Quantity::C)]);
    assert!(report.summary().contains("CG !> C"));
}

#[test]
fn ordering_requires_all_five_fits() {
    let fits = vec![fit_with_rate(Quantity::E, 1e-5)];
    assert!(verify_ordering(&fits).is_err());
}

#[test]
fn grid_spec_parsing_and_points() {
    let g = GridSpec::parse("0:2500:26").unwrap();
    assert_eq!(g.count, 26);
    let pts = g.points();
    assert_eq!(pts.len(), 26);
    assert_eq!(pts[0], 0.0);
    assert_eq!(pts[25], 2500.0);
    assert!((pts[1] - 100.0).abs() < 1e-9);

    assert!(GridSpec::parse("0:100:3").is_err(), "count below 4");
    assert!(GridSpec::parse("100:0:10").is_err(), "stop <= start");
    assert!(GridSpec::parse("-5:100:10").is_err(), "negative start");
    assert!(GridSpec::parse("0:100").is_err(), "missing field");
    assert!(GridSpec::parse("a:b:c").is_err());
}

#[test]
fn target_spec_parsing() {
    assert_eq!(TargetSpec::parse("all").unwrap(), TargetSpec::All);
    assert_eq!(TargetSpec::parse("ALL").unwrap(), TargetSpec::All);
    assert_eq!(TargetSpec::parse("a").unwrap(), TargetSpec::Single(0));
    assert_eq!(TargetSpec::parse("c").unwrap(), TargetSpec::Single(2));
    assert_eq!(TargetSpec::parse("1").unwrap(), TargetSpec::Single(1));
    assert!(TargetSpec::parse("xyz").is_err());
    assert!(TargetSpec::Single(5).to_qubit_set(3).is_err());
}

#[test]
fn saturation_thickness_saturates_the_exponential() {
    let gamma = 2.06e-5;
    let ell = saturation_thickness(gamma);
    assert!((-gamma * ell * ell).exp() < 1e-17);
}

#[test]
fn fmt_f64_round_trips_every_bit() {
    for &x in &[
        0.0,
        1.0,
        -1.0,
        std::f64::consts::PI,
        2.06e-5,
        1.0 / 3.0,
        6.0f64.ln(),
        f64::MIN_POSITIVE,
    ] {
        let back: f64 = fmt_f64(x).parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits(), "{x} mangled by formatting");
    }
}

#[test]
fn sweep_csv_round_trip_is_bit_exact() {
    let mut rows = synthetic_rows(0.7, 3e-5, 0.05, &grid(150.0, 6));
    rows[2].record.uncertainties = Some(MeasureUncertainties {
        e: 1e-3,
        c: 2e-3,
        c_g: 3e-3,
        c_l: 4e-3,
        t: 5e-3,
        k: 6e-3,
        m: 7e-3,
    });
    let text = sweep_to_csv(&rows);
    let back = sweep_from_csv(&text).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.ell.to_bits(), b.ell.to_bits());
        assert_eq!(a.ell_sq.to_bits(), b.ell_sq.to_bits());
        for q in [
            Quantity::E,
            Quantity::C,
            Quantity::Cg,
            Quantity::Cl,
            Quantity::T,
            Quantity::K,
            Quantity::M,
        ] {
            assert_eq!(a.record.get(q).to_bits(), b.record.get(q).to_bits());
        }
    }
    let u = back[2].record.uncertainties.unwrap();
    assert_eq!(u.c_l.to_bits(), (4e-3f64).to_bits());
}

#[test]
fn sweep_csv_rejects_malformed_input() {
    assert!(sweep_from_csv("").is_err());
    assert!(sweep_from_csv("wrong,header\n").is_err());
    assert!(sweep_from_csv("ell,ell_sq,E,C,CG,CL,T,K,M\n1,2,3\n").is_err());
}

#[test]
fn rates_csv_round_trip_is_bit_exact() {
    let fits: Vec<DecayFit> = FIT_QUANTITIES
        .iter()
        .enumerate()
        .map(|(i, &q)| DecayFit {
            quantity: q,
            gamma_fit: (i as f64 + 1.0) * 1.000000000000317e-5,
            intercept: -0.3 + i as f64,
            asymptote: 0.01 * i as f64,
            points_used: 20 + i,
            residual_rms: 1e-6 / (i as f64 + 1.0),
        })
        .collect();
    let text = rates_to_csv(&fits);
    let back = rates_from_csv(&text).unwrap();
    assert_eq!(back.len(), fits.len());
    for (a, b) in fits.iter().zip(&back) {
        assert_eq!(a.quantity, b.quantity);
        assert_eq!(a.gamma_fit.to_bits(), b.gamma_fit.to_bits());
        assert_eq!(a.intercept.to_bits(), b.intercept.to_bits());
        assert_eq!(a.asymptote.to_bits(), b.asymptote.to_bits());
        assert_eq!(a.points_used, b.points_used);
        assert_eq!(a.residual_rms.to_bits(), b.residual_rms.to_bits());
    }
    assert!(rates_from_csv("bad header\n").is_err());
}

#[test]
fn config_parsing_handles_comments_and_whitespace() {
    let text = "\
# a comment line
state = wwbar   # trailing comment
gamma=2.21e-5

 grid = 0:2500:26
";
    let map = parse_config_text(text).unwrap();
    assert_eq!(map["state"], "wwbar");
    assert_eq!(map["gamma"], "2.21e-5");
    assert_eq!(map["grid"], "0:2500:26");
    assert_eq!(map.len(), 3);

    assert!(parse_config_text("no equals sign here\n").is_err());
}

fn quick_ree(seed: u64) -> ReeOptions {
    ReeOptions {
        restarts: 3,
        max_iters: 400,
        ..ReeOptions::with_seed(seed)
    }
}

#[test]
fn run_sweep_produces_monotone_coherence_rows() {
    let config = SweepConfig {
        state: NamedState::Star,
        gamma: 2.06e-5,
        targets: TargetSpec::All,
        ell: GridSpec::new(0.0, 400.0, 5).unwrap(),
        ree: quick_ree(4),
        tomo: None,
        out: None,
    };
    let rows = run_sweep(&config).unwrap();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert!((row.ell_sq - row.ell * row.ell).abs() < 1e-12);
    }
    assert!((rows[0].record.c - 4.0f64.ln()).abs() < 1e-9);
    for pair in rows.windows(2) {
        assert!(
            pair[1].record.c < pair[0].record.c,
            "total coherence must decay along the sweep"
        );
        assert!((pair[1].record.k - pair[0].record.k).abs() < 1e-9, "K stays constant");
    }
}

#[test]
fn run_sweep_rejects_negative_gamma() {
    let config = SweepConfig {
        state: NamedState::Star,
        gamma: -1.0,
        targets: TargetSpec::All,
        ell: GridSpec::new(0.0, 100.0, 4).unwrap(),
        ree: quick_ree(1),
        tomo: None,
        out: None,
    };
    assert!(run_sweep(&config).is_err());
}

#[test]
fn asymptote_record_matches_full_dephasing_closed_forms() {
    let rec = asymptote_record(NamedState::WWbar, TargetSpec::All, &quick_ree(7)).unwrap();
    assert!(rec.c.abs() < 1e-9, "no coherence survives p = 1/2");
    assert!(rec.c_g.abs() < 1e-9);
    assert!(rec.c_l.abs() < 1e-9);
    assert!(rec.e.abs() < 1e-6, "diagonal states are separable");
    assert!((rec.t - rec.k).abs() < 1e-9, "T collapses onto K");
    assert!((rec.k - (4.0f64 / 3.0).ln()).abs() < 1e-9);
}
