//! Study records and annotation-driven cohort grouping.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::signal::{MultichannelSignal, StageAnnotation};

/// Cohort membership of one study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Apnea,
    NoApnea,
    Unassigned,
}

impl Group {
    pub fn name(&self) -> &'static str {
        match self {
            Group::Apnea => "Apnea",
            Group::NoApnea => "NoApnea",
            Group::Unassigned => "Unassigned",
        }
    }

    pub fn parse(name: &str) -> Option<Group> {
        match name {
            "Apnea" => Some(Group::Apnea),
            "NoApnea" => Some(Group::NoApnea),
            "Unassigned" => Some(Group::Unassigned),
            _ => None,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One scored event with its free-text label as recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct EventAnnotation {
    pub onset_s: f64,
    pub duration_s: f64,
    pub label: String,
}

/// One overnight study: the recording plus its stage and event annotations.
/// `group` stays [`Group::Unassigned`] until [`assign_group`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub study_id: String,
    pub signal: MultichannelSignal,
    pub stage_annotations: Vec<StageAnnotation>,
    pub event_annotations: Vec<EventAnnotation>,
    pub group: Group,
}

/// Default apnea event lexicon. Matching is any-occurrence, case-insensitive
/// substring, so a bare "apnea" pattern would also capture hypopnea labels;
/// the default list spells out full event names instead and lists hypopnea
/// explicitly as its own entry.
pub const DEFAULT_APNEA_PATTERNS: [&str; 4] = [
    "obstructive apnea",
    "central apnea",
    "mixed apnea",
    "hypopnea",
];

/// A study joins the Apnea cohort when any event label contains any pattern
/// (case-insensitive substring) at any time in the study; otherwise NoApnea.
/// The result is independent of annotation order.
pub fn assign_group(mut study: StudyRecord, patterns: &[&str]) -> StudyRecord {
    study.group = classify_events(&study.event_annotations, patterns);
    study
}

pub fn classify_events(events: &[EventAnnotation], patterns: &[&str]) -> Group {
    let lowered: Vec<String> = patterns.iter().map(|p| lower(p)).collect();
    let hit = events.iter().any(|event| {
        let label = lower(&event.label);
        lowered.iter().any(|p| !p.is_empty() && label.contains(p.as_str()))
    });
    if hit {
        Group::Apnea
    } else {
        Group::NoApnea
    }
}

fn lower(s: &str) -> String {
    s.chars().flat_map(|c| c.to_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn event(label: &str) -> EventAnnotation {
        EventAnnotation {
            onset_s: 100.0,
            duration_s: 10.0,
            label: label.to_string(),
        }
    }

    #[test]
    fn obstructive_apnea_event_joins_the_apnea_group() {
        let events = vec![event("Obstructive Apnea")];
        assert_eq!(classify_events(&events, &["apnea"]), Group::Apnea);
        assert_eq!(
            classify_events(&events, &DEFAULT_APNEA_PATTERNS),
            Group::Apnea
        );
    }

    #[test]
    fn no_events_means_no_apnea() {
        assert_eq!(classify_events(&[], &DEFAULT_APNEA_PATTERNS), Group::NoApnea);
    }

    #[test]
    fn substring_matching_truth_table() {
        // Substring pitfalls: a bare "apnea" pattern silently captures
        // compound labels, and a "pnea" pattern would also hit hypopnea.
        // The default lexicon therefore names events explicitly, with
        // hypopnea as its own deliberate entry.
        assert_eq!(
            classify_events(&[event("Apnea Hypopnea Index high")], &["apnea"]),
            Group::Apnea
        );
        assert_eq!(
            classify_events(&[event("Hypopnea x3")], &["pnea"]),
            Group::Apnea
        );
        // "hypopnea" does not literally contain "apnea"
        assert_eq!(
            classify_events(&[event("Hypopnea x3")], &["apnea"]),
            Group::NoApnea
        );
        assert_eq!(
            classify_events(&[event("Hypopnea x3")], &DEFAULT_APNEA_PATTERNS),
            Group::Apnea
        );
        assert_eq!(
            classify_events(&[event("Hypopnea x3")], &["obstructive apnea"]),
            Group::NoApnea
        );
        assert_eq!(
            classify_events(&[event("OBSTRUCTIVE APNEA")], &["obstructive apnea"]),
            Group::Apnea
        );
        assert_eq!(
            classify_events(&[event("Snore"), event("Central Apnea")], &DEFAULT_APNEA_PATTERNS),
            Group::Apnea
        );
        assert_eq!(
            classify_events(&[event("Snore")], &DEFAULT_APNEA_PATTERNS),
            Group::NoApnea
        );
    }

    #[test]
    fn grouping_is_order_independent() {
        let a = vec![event("Snore"), event("Mixed Apnea"), event("Arousal")];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(
            classify_events(&a, &DEFAULT_APNEA_PATTERNS),
            classify_events(&b, &DEFAULT_APNEA_PATTERNS)
        );
    }
}
