//! Offer/confirmation determinacy analysis of measurement timelines.
//!
//! A timeline is an ordered list of events from one emission to one
//! detection. Between consecutive events, the forward-going *offer* state
//! is whatever the most recent preparation or realized measurement
//! outcome fixed; the backward-going *confirmation* state is the state
//! selected by the event that ends the interval. An interval is
//! *determinate* exactly when both states exist and agree up to a global
//! phase (overlap modulus above `1 - 1e-9`). The segment before the first
//! preparation carries no offer state and is never determinate.
//!
//! Realized outcomes are inputs here; sampling them belongs to
//! [`crate::twostate::run_chain`].

use serde::{Deserialize, Serialize};

use crate::twostate::{spin_map, Basis2, Ket2};
use crate::{Error, Result};

/// Overlap modulus above which offer and confirmation count as the same
/// ray ("agreement up to phase").
pub const DETERMINACY_TOLERANCE: f64 = 1e-9;

/// A state together with the label it is known by in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledKet {
    pub label: String,
    pub ket: Ket2,
}

impl LabeledKet {
    pub fn new(label: impl Into<String>, ket: Ket2) -> Self {
        LabeledKet {
            label: label.into(),
            ket,
        }
    }
}

/// What happens at one timeline event.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Source fires; no state is fixed yet.
    Emission,
    /// The state is filtered into a known ray.
    Preparation(LabeledKet),
    /// An intermediate measurement with its realized outcome index.
    /// `None` marks a grammar-level measurement lacking an outcome and is
    /// rejected by validation.
    Measurement {
        basis: Basis2,
        outcome: Option<usize>,
    },
    /// Final selection onto a ray; trials failing it are discarded.
    PostSelection(LabeledKet),
    /// Absorption at the detector.
    Detection,
}

/// A tagged event. Tags order the timeline and name interval endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub tag: String,
    pub kind: EventKind,
}

impl Event {
    pub fn new(tag: impl Into<String>, kind: EventKind) -> Self {
        Event {
            tag: tag.into(),
            kind,
        }
    }
}

/// A validated event sequence: exactly one emission first, one detection
/// last, unique tags, at most one post-selection, and realized outcomes
/// on every measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    events: Vec<Event>,
}

impl Timeline {
    pub fn new(events: Vec<Event>) -> Result<Timeline> {
        if events.len() < 2 {
            return Err(Error::IncompleteTimeline(
                "a timeline needs at least an emission and a detection".into(),
            ));
        }
        if !matches!(events.first().map(|e| &e.kind), Some(EventKind::Emission)) {
            return Err(Error::IncompleteTimeline(
                "the first event must be the emission".into(),
            ));
        }
        if !matches!(events.last().map(|e| &e.kind), Some(EventKind::Detection)) {
            return Err(Error::IncompleteTimeline(
                "the last event must be the detection".into(),
            ));
        }
        let mut post_selections = 0usize;
        for (i, event) in events.iter().enumerate() {
            if event.tag.is_empty() {
                return Err(Error::IncompleteTimeline(format!(
                    "event {i} has an empty tag"
                )));
            }
            if events[..i].iter().any(|e| e.tag == event.tag) {
                return Err(Error::IncompleteTimeline(format!(
                    "duplicate tag {:?}; event times must strictly increase",
                    event.tag
                )));
            }
            match &event.kind {
                EventKind::Emission if i != 0 => {
                    return Err(Error::IncompleteTimeline(
                        "emission may only open the timeline".into(),
                    ));
                }
                EventKind::Detection if i + 1 != events.len() => {
                    return Err(Error::IncompleteTimeline(
                        "detection may only close the timeline".into(),
                    ));
                }
                EventKind::Measurement { basis, outcome } => match outcome {
                    None => {
                        return Err(Error::IncompleteTimeline(format!(
                            "measurement at {:?} has no realized outcome",
                            event.tag
                        )));
                    }
                    Some(k) if *k >= 2 => {
                        return Err(Error::IncompleteTimeline(format!(
                            "measurement at {:?} has outcome index {k} out of range for {}",
                            event.tag,
                            basis.name()
                        )));
                    }
                    Some(_) => {}
                },
                EventKind::PostSelection(_) => {
                    post_selections += 1;
                    if post_selections > 1 {
                        return Err(Error::IncompleteTimeline(
                            "at most one post-selection is allowed".into(),
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(Timeline { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}

/// One inter-event interval with its offer/confirmation verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub from_tag: String,
    pub to_tag: String,
    pub offer: Option<LabeledKet>,
    pub confirmation: Option<LabeledKet>,
    pub determinate: bool,
    pub determinate_state: Option<String>,
}

fn outcome_state(basis: &Basis2, outcome: usize) -> LabeledKet {
    LabeledKet::new(basis.label(outcome), basis.state(outcome).clone())
}

/// Analyzes a timeline into one report per consecutive event pair.
///
/// The offer of an interval is the state fixed by the most recent
/// preparation or measurement outcome at or before the interval start;
/// post-selections do not alter it. The confirmation is the state of the
/// event ending the interval; a plain detection returns none unless it
/// directly follows a post-selection, in which case the detector confirms
/// that selected state.
pub fn analyze(timeline: &Timeline) -> Result<Vec<IntervalReport>> {
    let events = &timeline.events;
    let mut offer: Option<LabeledKet> = None;
    let mut reports = Vec::with_capacity(events.len() - 1);

    for i in 0..events.len() - 1 {
        match &events[i].kind {
            EventKind::Preparation(lk) => offer = Some(lk.clone()),
            EventKind::Measurement {
                basis,
                outcome: Some(k),
            } => offer = Some(outcome_state(basis, *k)),
            _ => {}
        }

        let confirmation = match &events[i + 1].kind {
            EventKind::Preparation(lk) => Some(lk.clone()),
            EventKind::Measurement {
                basis,
                outcome: Some(k),
            } => Some(outcome_state(basis, *k)),
            EventKind::Measurement { outcome: None, .. } => {
                return Err(Error::IncompleteTimeline(
                    "measurement has no realized outcome".into(),
                ));
            }
            EventKind::PostSelection(lk) => Some(lk.clone()),
            EventKind::Detection => match &events[i].kind {
                EventKind::PostSelection(lk) => Some(lk.clone()),
                _ => None,
            },
            EventKind::Emission => {
                return Err(Error::IncompleteTimeline(
                    "emission may only open the timeline".into(),
                ));
            }
        };

        let determinate = match (&offer, &confirmation) {
            (Some(o), Some(c)) => o.ket.overlap_modulus(&c.ket) > 1.0 - DETERMINACY_TOLERANCE,
            _ => false,
        };
        let determinate_state = if determinate {
            offer.as_ref().map(|o| o.label.clone())
        } else {
            None
        };
        reports.push(IntervalReport {
            from_tag: events[i].tag.clone(),
            to_tag: events[i + 1].tag.clone(),
            offer: offer.clone(),
            confirmation,
            determinate,
            determinate_state,
        });
    }
    Ok(reports)
}

fn prep(label: &str, tag: &str) -> Event {
    Event::new(
        tag,
        EventKind::Preparation(LabeledKet::new(
            label,
            spin_map(label).expect("builtin label"),
        )),
    )
}

fn meas(basis: Basis2, outcome: usize, tag: &str) -> Event {
    Event::new(
        tag,
        EventKind::Measurement {
            basis,
            outcome: Some(outcome),
        },
    )
}

fn post(label: &str, tag: &str) -> Event {
    Event::new(
        tag,
        EventKind::PostSelection(LabeledKet::new(
            label,
            spin_map(label).expect("builtin label"),
        )),
    )
}

/// Builtin timelines.
///
/// Polarization set (`fig2a`..`fig2c`): prepare `H`, post-select `R`,
/// with no intervening measurement, an `HV` confirmation, or an `RL`
/// measurement. Slit set (`fig3a`..`fig3c`): prepare `S`, post-select
/// `U`, with no intervening measurement, an `S`-basis confirmation, or a
/// which-slit measurement realizing `U`. The `delayed-interference` /
/// `delayed-whichway` pair shares its prefix and differs only in the
/// intermediate choice, with no post-selection.
pub fn builtin_scenario(name: &str) -> Result<Timeline> {
    let emission = Event::new("E", EventKind::Emission);
    let detection = Event::new("D", EventKind::Detection);
    let events = match name {
        "fig2a" => vec![emission, prep("H", "t0"), post("R", "t2"), detection],
        "fig2b" => vec![
            emission,
            prep("H", "t0"),
            meas(Basis2::linear(), 0, "t1"),
            post("R", "t2"),
            detection,
        ],
        "fig2c" => vec![
            emission,
            prep("H", "t0"),
            meas(Basis2::circular(), 0, "t1"),
            post("R", "t2"),
            detection,
        ],
        "fig3a" => vec![emission, prep("S", "t0"), post("U", "t2"), detection],
        "fig3b" => vec![
            emission,
            prep("S", "t0"),
            meas(Basis2::superposition(), 0, "t1"),
            post("U", "t2"),
            detection,
        ],
        "fig3c" => vec![
            emission,
            prep("S", "t0"),
            meas(Basis2::slit(), 0, "t1"),
            post("U", "t2"),
            detection,
        ],
        "delayed-interference" => vec![
            emission,
            prep("S", "t0"),
            meas(Basis2::superposition(), 0, "t1"),
            detection,
        ],
        "delayed-whichway" => vec![
            emission,
            prep("S", "t0"),
            meas(Basis2::slit(), 0, "t1"),
            detection,
        ],
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Timeline::new(events)
}

/// Names accepted by [`builtin_scenario`].
pub const BUILTIN_SCENARIOS: [&str; 8] = [
    "fig2a",
    "fig2b",
    "fig2c",
    "fig3a",
    "fig3b",
    "fig3c",
    "delayed-interference",
    "delayed-whichway",
];

/// Parses the timeline grammar, e.g.
/// `E; prep S @t0; meas O=U @t1; post U @t2; D`.
///
/// Segments are `;`-separated. The first must be `E` and the last `D`.
/// Middle segments are `prep <state> @<tag>`, `meas <basis>=<outcome>
/// @<tag>`, or `post <state> @<tag>`, with states from the label
/// dictionary and bases from the basis names. Errors report the 1-based
/// segment position.
pub fn parse_timeline(text: &str) -> Result<Timeline> {
    let segments: Vec<&str> = text.split(';').map(str::trim).collect();
    if segments.len() < 2 {
        return Err(Error::parse(1, "expected at least `E; ...; D`".to_string()));
    }
    let mut events = Vec::with_capacity(segments.len());
    for (idx, segment) in segments.iter().enumerate() {
        let at = idx + 1;
        if segment.is_empty() {
            return Err(Error::parse(at, "empty segment".to_string()));
        }
        if idx == 0 {
            if *segment != "E" {
                return Err(Error::parse(at, format!("expected `E`, got {segment:?}")));
            }
            events.push(Event::new("E", EventKind::Emission));
            continue;
        }
        if idx == segments.len() - 1 {
            if *segment != "D" {
                return Err(Error::parse(at, format!("expected `D`, got {segment:?}")));
            }
            events.push(Event::new("D", EventKind::Detection));
            continue;
        }

        let mut parts = segment.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        let spec = parts
            .next()
            .ok_or_else(|| Error::parse(at, format!("{keyword}: missing operand")))?;
        let tag_part = parts
            .next()
            .ok_or_else(|| Error::parse(at, format!("{keyword}: missing @<tag>")))?;
        if parts.next().is_some() {
            return Err(Error::parse(at, format!("trailing input in {segment:?}")));
        }
        let tag = tag_part
            .strip_prefix('@')
            .ok_or_else(|| Error::parse(at, format!("expected @<tag>, got {tag_part:?}")))?;
        if tag.is_empty() {
            return Err(Error::parse(at, "empty tag after @".to_string()));
        }

        let kind = match keyword {
            "prep" | "post" => {
                let ket = spin_map(spec)
                    .map_err(|_| Error::parse(at, format!("unknown state label {spec:?}")))?;
                let lk = LabeledKet::new(spec, ket);
                if keyword == "prep" {
                    EventKind::Preparation(lk)
                } else {
                    EventKind::PostSelection(lk)
                }
            }
            "meas" => match spec.split_once('=') {
                None => {
                    // Basis without a realized outcome: structurally valid
                    // grammar, rejected by timeline validation.
                    let basis = Basis2::by_name(spec)
                        .map_err(|_| Error::parse(at, format!("unknown basis name {spec:?}")))?;
                    EventKind::Measurement {
                        basis,
                        outcome: None,
                    }
                }
                Some((bname, oname)) => {
                    let basis = Basis2::by_name(bname)
                        .map_err(|_| Error::parse(at, format!("unknown basis name {bname:?}")))?;
                    let outcome = basis.outcome_index(oname).ok_or_else(|| {
                        Error::parse(
                            at,
                            format!("basis {bname} has no outcome labeled {oname:?}"),
                        )
                    })?;
                    EventKind::Measurement {
                        basis,
                        outcome: Some(outcome),
                    }
                }
            },
            other => {
                return Err(Error::parse(
                    at,
                    format!("expected prep/meas/post, got {other:?}"),
                ));
            }
        };
        events.push(Event::new(tag, kind));
    }
    Timeline::new(events)
}

/// Formats a timeline back into the grammar accepted by
/// [`parse_timeline`].
pub fn format_timeline(timeline: &Timeline) -> String {
    let mut parts = Vec::with_capacity(timeline.events.len());
    for event in &timeline.events {
        let part = match &event.kind {
            EventKind::Emission => "E".to_string(),
            EventKind::Detection => "D".to_string(),
            EventKind::Preparation(lk) => format!("prep {} @{}", lk.label, event.tag),
            EventKind::PostSelection(lk) => format!("post {} @{}", lk.label, event.tag),
            EventKind::Measurement { basis, outcome } => match outcome {
                Some(k) => format!("meas {}={} @{}", basis.name(), basis.label(*k), event.tag),
                None => format!("meas {} @{}", basis.name(), event.tag),
            },
        };
        parts.push(part);
    }
    parts.join("; ")
}

/// Renders interval reports as a fixed-width text diagram. Determinate
/// intervals are flagged with `*` and their state label.
pub fn render(reports: &[IntervalReport]) -> String {
    let mut out = String::new();
    let tags: Vec<&str> = reports
        .iter()
        .map(|r| r.from_tag.as_str())
        .chain(reports.last().map(|r| r.to_tag.as_str()))
        .collect();
    out.push_str("timeline  ");
    out.push_str(&tags.join(" -> "));
    out.push('\n');
    out.push_str(&format!(
        "{:<12} {:<8} {:<8} {}\n",
        "interval", "offer", "confirm", "status"
    ));
    for r in reports {
        let offer = r.offer.as_ref().map(|o| o.label.as_str()).unwrap_or("-");
        let confirm = r
            .confirmation
            .as_ref()
            .map(|c| c.label.as_str())
            .unwrap_or("-");
        let status = match &r.determinate_state {
            Some(s) => format!("* determinate {s}"),
            None => ".".to_string(),
        };
        out.push_str(&format!(
            "{:<12} {:<8} {:<8} {}\n",
            format!("{} -> {}", r.from_tag, r.to_tag),
            offer,
            confirm,
            status
        ));
    }
    out
}

/// Serializes reports to their machine-readable JSON form.
pub fn reports_to_json(reports: &[IntervalReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize infallibly")
}

/// Parses reports back from JSON, validating embedded states.
pub fn reports_from_json(text: &str) -> Result<Vec<IntervalReport>> {
    let reports: Vec<IntervalReport> =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line().max(1), e.to_string()))?;
    for r in &reports {
        for lk in [&r.offer, &r.confirmation].into_iter().flatten() {
            let [a, b] = lk.ket.amplitudes();
            let norm_sqr = a.norm_sqr() + b.norm_sqr();
            if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > crate::twostate::STATE_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "state {:?} in records is not normalized",
                    lk.label
                )));
            }
        }
    }
    Ok(reports)
}
