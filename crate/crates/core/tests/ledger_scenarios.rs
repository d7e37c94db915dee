//! Golden determinacy tables for the built-in scenarios, grammar
//! round-trips, and the delayed-choice invariance of the offer record.

use slitsim::ledger::{
    analyze, builtin_scenario, format_timeline, parse_timeline, render, reports_from_json,
    reports_to_json, BUILTIN_SCENARIOS,
};

/// Expected `(determinate, determinate_state)` per interval, in order.
fn golden(name: &str) -> Vec<Option<&'static str>> {
    match name {
        // Polarization bench: prepare H, post-select R.
        "fig2a" => vec![None, None, None],
        // A confirming linear measurement between them certifies H only
        // while both endpoints agree on it.
        "fig2b" => vec![None, Some("H"), None, None],
        // A circular measurement matching the post-selection certifies R
        // from the measurement all the way into the detector.
        "fig2c" => vec![None, None, Some("R"), Some("R")],
        // Slit bench: prepare the symmetric superposition, post-select
        // the upper slit.
        "fig3a" => vec![None, None, None],
        "fig3b" => vec![None, Some("S"), None, None],
        "fig3c" => vec![None, None, Some("U"), Some("U")],
        // No post-selection at all: only the segment between preparation
        // and a confirming measurement is determinate.
        "delayed-interference" => vec![None, Some("S"), None],
        "delayed-whichway" => vec![None, None, None],
        other => panic!("no golden table for {other}"),
    }
}

#[test]
fn builtin_scenarios_match_their_golden_tables() {
    for name in BUILTIN_SCENARIOS {
        let reports = analyze(&builtin_scenario(name).unwrap()).unwrap();
        let expected = golden(name);
        assert_eq!(
            reports.len(),
            expected.len(),
            "{name}: wrong interval count"
        );
        for (i, (report, want)) in reports.iter().zip(&expected).enumerate() {
            assert_eq!(
                report.determinate,
                want.is_some(),
                "{name} interval {i} ({} -> {}): determinate flag",
                report.from_tag,
                report.to_tag
            );
            assert_eq!(
                report.determinate_state.as_deref(),
                *want,
                "{name} interval {i}: certified state"
            );
        }
    }
}

#[test]
fn determinacy_requires_matching_offer_and_confirmation() {
    for name in BUILTIN_SCENARIOS {
        let reports = analyze(&builtin_scenario(name).unwrap()).unwrap();
        for report in &reports {
            if report.determinate {
                let offer = report.offer.as_ref().expect("determinate needs an offer");
                let confirmation = report
                    .confirmation
                    .as_ref()
                    .expect("determinate needs a confirmation");
                let overlap = offer.ket.overlap_modulus(&confirmation.ket);
                assert!(
                    overlap > 1.0 - 1e-9,
                    "{name}: determinate interval with overlap {overlap}"
                );
                assert_eq!(
                    report.determinate_state.as_deref(),
                    Some(offer.label.as_str())
                );
            } else {
                assert!(report.determinate_state.is_none());
            }
        }
    }
}

#[test]
fn the_delayed_choice_cannot_rewrite_the_past_offer() {
    // Same source, same preparation; the downstream choice flips between
    // an interference-type and a which-way-type measurement. Every
    // interval before that choice carries a bit-identical offer.
    let interference = analyze(&builtin_scenario("delayed-interference").unwrap()).unwrap();
    let whichway = analyze(&builtin_scenario("delayed-whichway").unwrap()).unwrap();
    for i in 0..2 {
        assert_eq!(
            interference[i].offer, whichway[i].offer,
            "offer differs before the choice at interval {i}"
        );
    }
    // Only after the choice do the records diverge.
    assert_ne!(interference[2].offer, whichway[2].offer);
}

#[test]
fn a_confirming_measurement_is_transparent_to_what_follows() {
    // fig2b vs fig2a: inserting a measurement that re-finds the prepared
    // state must leave every later verdict unchanged.
    let bare = analyze(&builtin_scenario("fig2a").unwrap()).unwrap();
    let confirmed = analyze(&builtin_scenario("fig2b").unwrap()).unwrap();
    // Last two intervals of each: (last event before post) -> post -> D.
    for back in 1..=2 {
        let a = &bare[bare.len() - back];
        let b = &confirmed[confirmed.len() - back];
        assert_eq!(a.determinate, b.determinate);
        assert_eq!(a.determinate_state, b.determinate_state);
        assert_eq!(a.to_tag, b.to_tag);
    }
}

#[test]
fn grammar_and_builtins_agree() {
    for name in BUILTIN_SCENARIOS {
        let timeline = builtin_scenario(name).unwrap();
        let text = format_timeline(&timeline);
        let reparsed = parse_timeline(&text).unwrap();
        assert_eq!(
            analyze(&timeline).unwrap(),
            analyze(&reparsed).unwrap(),
            "{name}: grammar round-trip changed the analysis"
        );
    }

    let custom = parse_timeline("E; prep S @t0; meas O=U @t1; post U @t2; D").unwrap();
    let reports = analyze(&custom).unwrap();
    assert_eq!(
        reports,
        analyze(&builtin_scenario("fig3c").unwrap()).unwrap()
    );
}

#[test]
fn reports_survive_json_and_render_marks_certified_segments() {
    for name in BUILTIN_SCENARIOS {
        let reports = analyze(&builtin_scenario(name).unwrap()).unwrap();
        let json = reports_to_json(&reports);
        assert_eq!(reports_from_json(&json).unwrap(), reports);

        let table = render(&reports);
        for report in &reports {
            assert!(table.contains(&report.from_tag));
            if let Some(state) = &report.determinate_state {
                assert!(
                    table.contains(&format!("determinate {state}")),
                    "{name}: rendered table misses a certified segment"
                );
            }
        }
    }
}
