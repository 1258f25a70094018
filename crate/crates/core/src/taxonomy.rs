//! The inappropriateness taxonomy and the rules an annotation must follow.
//!
//! Fourteen dimensions form a three-level tree: the root `IN`
//! (inappropriateness, rated on an ordinal 1..=3 scale), four core
//! dimensions and nine sub-dimensions (all binary). Dimension codes are the
//! stable vocabulary of every file format and wire message in this
//! workspace.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the 14 taxonomy dimensions, in canonical table order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Dimension {
    IN,
    TE,
    EI,
    ED,
    MC,
    MS,
    MO,
    MI,
    UM,
    MR,
    CR,
    OR,
    DO,
    RU,
}

/// Depth of a dimension in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Root,
    Core,
    Sub,
}

/// Rating scale used for a dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScaleKind {
    /// 1 = fully inappropriate, 2 = partially (in)appropriate, 3 = fully appropriate.
    #[serde(rename = "ordinal-3")]
    Ordinal3,
    #[serde(rename = "binary")]
    Binary,
}

/// One row of the fixed hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DimensionInfo {
    pub dimension: Dimension,
    pub parent: Option<Dimension>,
    pub scale: ScaleKind,
    pub level: Level,
}

impl Dimension {
    pub const COUNT: usize = 14;

    pub const ALL: [Dimension; 14] = [
        Dimension::IN,
        Dimension::TE,
        Dimension::EI,
        Dimension::ED,
        Dimension::MC,
        Dimension::MS,
        Dimension::MO,
        Dimension::MI,
        Dimension::UM,
        Dimension::MR,
        Dimension::CR,
        Dimension::OR,
        Dimension::DO,
        Dimension::RU,
    ];

    /// The 13 binary dimensions (everything except the root).
    pub const FLAGS: [Dimension; 13] = [
        Dimension::TE,
        Dimension::EI,
        Dimension::ED,
        Dimension::MC,
        Dimension::MS,
        Dimension::MO,
        Dimension::MI,
        Dimension::UM,
        Dimension::MR,
        Dimension::CR,
        Dimension::OR,
        Dimension::DO,
        Dimension::RU,
    ];

    pub const CORE: [Dimension; 4] = [Dimension::TE, Dimension::MC, Dimension::MI, Dimension::OR];

    /// Position in canonical order (0 for `IN`).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Dimension> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            Dimension::IN => "IN",
            Dimension::TE => "TE",
            Dimension::EI => "EI",
            Dimension::ED => "ED",
            Dimension::MC => "MC",
            Dimension::MS => "MS",
            Dimension::MO => "MO",
            Dimension::MI => "MI",
            Dimension::UM => "UM",
            Dimension::MR => "MR",
            Dimension::CR => "CR",
            Dimension::OR => "OR",
            Dimension::DO => "DO",
            Dimension::RU => "RU",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::IN => "Inappropriateness",
            Dimension::TE => "Toxic Emotions",
            Dimension::EI => "Excessive Intensity",
            Dimension::ED => "Emotional Deception",
            Dimension::MC => "Missing Commitment",
            Dimension::MS => "Missing Seriousness",
            Dimension::MO => "Missing Openness",
            Dimension::MI => "Missing Intelligibility",
            Dimension::UM => "Unclear Meaning",
            Dimension::MR => "Missing Relevance",
            Dimension::CR => "Confusing Reasoning",
            Dimension::OR => "Other Reasons",
            Dimension::DO => "Detrimental Orthography",
            Dimension::RU => "Reason Unclassified",
        }
    }

    /// Guideline definition shown to annotators.
    pub fn definition(self) -> &'static str {
        match self {
            Dimension::IN => "Whether the argument is inappropriate in light of its discussion context.",
            Dimension::TE => "The emotions appealed to are deceptive or too intense to leave room for critical evaluation of the issue.",
            Dimension::EI => "The emotions appealed to are unnecessarily strong for the discussed issue.",
            Dimension::ED => "The emotions appealed to are used as deceptive tricks to win, derail, or end the discussion.",
            Dimension::MC => "The issue is not taken seriously or openness to other arguments is absent.",
            Dimension::MS => "The argument trolls others or does not contribute meaningfully to the discussion.",
            Dimension::MO => "The argument rejects opposing viewpoints out of hand instead of assessing them on their merits.",
            Dimension::MI => "The meaning is unclear or irrelevant to the issue, or the reasoning is not understandable.",
            Dimension::UM => "The content is vague, ambiguous, or implicit, so it remains unclear what is said about the issue.",
            Dimension::MR => "The argument does not discuss the issue but derails towards a related or different issue.",
            Dimension::CR => "The claims and premises of the argument seem not to be connected logically.",
            Dimension::OR => "Severe orthographic errors or reasons not covered by any other dimension.",
            Dimension::DO => "Serious spelling and/or grammatical errors negatively affect readability.",
            Dimension::RU => "Any other reason why the argument should be considered inappropriate.",
        }
    }

    pub fn parent(self) -> Option<Dimension> {
        use Dimension::*;
        match self {
            IN => None,
            TE | MC | MI | OR => Some(IN),
            EI | ED => Some(TE),
            MS | MO => Some(MC),
            UM | MR | CR => Some(MI),
            DO | RU => Some(OR),
        }
    }

    pub fn level(self) -> Level {
        match self.parent() {
            None => Level::Root,
            Some(Dimension::IN) => Level::Core,
            Some(_) => Level::Sub,
        }
    }

    pub fn scale(self) -> ScaleKind {
        if self == Dimension::IN {
            ScaleKind::Ordinal3
        } else {
            ScaleKind::Binary
        }
    }

    pub fn children(self) -> impl Iterator<Item = Dimension> {
        Self::ALL.into_iter().filter(move |d| d.parent() == Some(self))
    }

    pub fn info(self) -> DimensionInfo {
        DimensionInfo {
            dimension: self,
            parent: self.parent(),
            scale: self.scale(),
            level: self.level(),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Dimension {
    type Err = crate::Error;

    /// Accepts the two-letter code or the full name, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Dimension::ALL
            .into_iter()
            .find(|d| d.code().eq_ignore_ascii_case(t) || d.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| crate::Error::UnknownDimension(s.to_string()))
    }
}

/// The fixed hierarchy in canonical order.
pub fn dimensions() -> Vec<DimensionInfo> {
    Dimension::ALL.into_iter().map(Dimension::info).collect()
}

/// One annotator's judgment of one argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub argument_id: String,
    pub annotator_id: String,
    /// Ordinal rating of the root dimension, 1..=3.
    pub in_rating: u8,
    /// Yes/no for each of the 13 non-root dimensions.
    pub flags: BTreeMap<Dimension, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ru_free_text: Option<String>,
    #[serde(default)]
    pub batch_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<DateTime<Utc>>,
}

impl AnnotationRecord {
    /// A fully appropriate record: rating 3, every flag `no`.
    pub fn appropriate(argument_id: impl Into<String>, annotator_id: impl Into<String>) -> Self {
        AnnotationRecord {
            argument_id: argument_id.into(),
            annotator_id: annotator_id.into(),
            in_rating: 3,
            flags: Dimension::FLAGS.into_iter().map(|d| (d, false)).collect(),
            ru_free_text: None,
            batch_id: String::new(),
            submitted_at: None,
        }
    }

    /// Sets `dimension` to yes; returns `self` for chaining in tests and fixtures.
    pub fn with(mut self, dimension: Dimension, value: bool) -> Self {
        if dimension == Dimension::IN {
            self.in_rating = if value { 2 } else { 3 };
        } else {
            self.flags.insert(dimension, value);
        }
        self
    }

    pub fn with_rating(mut self, rating: u8) -> Self {
        self.in_rating = rating;
        self
    }

    pub fn flag(&self, dimension: Dimension) -> bool {
        if dimension == Dimension::IN {
            return self.in_rating < 3;
        }
        self.flags.get(&dimension).copied().unwrap_or(false)
    }

    /// The binarized view of all 14 dimensions (IN yes for ratings 1 and 2).
    pub fn binary_labels(&self) -> [bool; 14] {
        let mut out = [false; 14];
        for d in Dimension::ALL {
            out[d.index()] = self.flag(d);
        }
        out
    }

    fn free_text(&self) -> Option<&str> {
        self.ru_free_text
            .as_deref()
            .map(str::trim)
            .filter(|t| !t.is_empty())
    }

    /// Checks that the record is complete and in range.
    pub fn check_structure(&self) -> Result<(), StructuralError> {
        if self.argument_id.trim().is_empty() {
            return Err(StructuralError::EmptyId("argument_id"));
        }
        if self.annotator_id.trim().is_empty() {
            return Err(StructuralError::EmptyId("annotator_id"));
        }
        if !(1..=3).contains(&self.in_rating) {
            return Err(StructuralError::RatingOutOfRange(self.in_rating));
        }
        if self.flags.contains_key(&Dimension::IN) {
            return Err(StructuralError::RootFlag);
        }
        let missing: Vec<Dimension> = Dimension::FLAGS
            .into_iter()
            .filter(|d| !self.flags.contains_key(d))
            .collect();
        if !missing.is_empty() {
            return Err(StructuralError::MissingFlags(missing));
        }
        Ok(())
    }
}

/// Structural problems that make a record unusable, as opposed to
/// hierarchy rule violations.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuralError {
    #[error("missing flags for {0:?}")]
    MissingFlags(Vec<Dimension>),
    #[error("IN rating {0} is outside 1..=3")]
    RatingOutOfRange(u8),
    #[error("IN must be given as in_rating, not as a flag")]
    RootFlag,
    #[error("empty {0}")]
    EmptyId(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// All hierarchy rules; used by the live annotation service.
    Strict,
    /// Only "sub-dimension yes implies parent yes"; used for imports.
    #[default]
    Lenient,
}

impl FromStr for ValidationMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(ValidationMode::Strict),
            "lenient" => Ok(ValidationMode::Lenient),
            other => Err(crate::Error::InvalidInput(format!("unknown validation mode `{other}`"))),
        }
    }
}

/// A broken hierarchy rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    /// A sub-dimension is yes while its core parent is no.
    SubWithoutParent { dimension: Dimension, parent: Dimension },
    /// A core dimension is yes while the argument is rated fully appropriate.
    CoreWithoutInappropriateness { dimension: Dimension },
    /// Rated (partially) inappropriate without any core reason.
    MissingReason { in_rating: u8 },
    /// Free text given for RU while RU is no.
    FreeTextWithoutUnclassified,
}

impl Violation {
    /// The dimension the UI should attach this violation to.
    pub fn dimension(&self) -> Dimension {
        match self {
            Violation::SubWithoutParent { dimension, .. } => *dimension,
            Violation::CoreWithoutInappropriateness { dimension } => *dimension,
            Violation::MissingReason { .. } => Dimension::IN,
            Violation::FreeTextWithoutUnclassified => Dimension::RU,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SubWithoutParent { dimension, parent } => {
                write!(f, "{dimension} is yes but its parent {parent} is no")
            }
            Violation::CoreWithoutInappropriateness { dimension } => {
                write!(f, "{dimension} is yes but the argument is rated fully appropriate")
            }
            Violation::MissingReason { in_rating } => {
                write!(f, "rating {in_rating} requires at least one core reason")
            }
            Violation::FreeTextWithoutUnclassified => {
                write!(f, "free text is only allowed when RU is yes")
            }
        }
    }
}

/// Non-blocking observations (never reject a record).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    /// A core dimension is yes without any of its sub-dimensions.
    CoreWithoutSub { dimension: Dimension },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Validates `record` against the hierarchy rules of `mode`.
///
/// Structural problems (missing flags, out-of-range rating) are returned as
/// `Err` and are never mixed with rule violations.
pub fn validate(
    record: &AnnotationRecord,
    mode: ValidationMode,
) -> Result<ValidationReport, StructuralError> {
    record.check_structure()?;
    let mut report = ValidationReport::default();

    for d in Dimension::FLAGS {
        if d.level() == Level::Sub && record.flag(d) {
            let parent = d.parent().expect("sub-dimension has a parent");
            if !record.flag(parent) {
                report.violations.push(Violation::SubWithoutParent {
                    dimension: d,
                    parent,
                });
            }
        }
    }

    if mode == ValidationMode::Strict {
        let any_core = Dimension::CORE.into_iter().any(|c| record.flag(c));
        if record.in_rating == 3 {
            for c in Dimension::CORE {
                if record.flag(c) {
                    report
                        .violations
                        .push(Violation::CoreWithoutInappropriateness { dimension: c });
                }
            }
        } else if !any_core {
            report.violations.push(Violation::MissingReason {
                in_rating: record.in_rating,
            });
        }
        if record.free_text().is_some() && !record.flag(Dimension::RU) {
            report.violations.push(Violation::FreeTextWithoutUnclassified);
        }
    }

    for c in Dimension::CORE {
        if record.flag(c) && !c.children().any(|s| record.flag(s)) {
            report.warnings.push(Warning::CoreWithoutSub { dimension: c });
        }
    }
    Ok(report)
}

/// Upward closure: every yes is propagated to its ancestors.
///
/// Sub yes forces its core parent to yes, and any core yes on a record
/// rated 3 lowers the rating to 2. Never turns a yes into a no; idempotent.
pub fn close(record: &AnnotationRecord) -> AnnotationRecord {
    let mut out = record.clone();
    for d in Dimension::FLAGS {
        if d.level() == Level::Sub && out.flag(d) {
            let parent = d.parent().expect("sub-dimension has a parent");
            out.flags.insert(parent, true);
        }
    }
    if out.in_rating == 3 && Dimension::CORE.into_iter().any(|c| out.flag(c)) {
        out.in_rating = 2;
    }
    out
}

/// Closure on a binarized 14-label row.
pub fn close_labels(labels: &mut [bool; 14]) {
    for d in Dimension::FLAGS {
        if d.level() == Level::Sub && labels[d.index()] {
            labels[d.parent().unwrap().index()] = true;
        }
    }
    if Dimension::CORE.into_iter().any(|c| labels[c.index()]) {
        labels[Dimension::IN.index()] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Dimension::*;

    #[test]
    fn hierarchy_shape() {
        let dims = dimensions();
        assert_eq!(dims.len(), 14);
        assert_eq!(dims[0].dimension, IN);
        assert_eq!(dims[0].parent, None);
        assert_eq!(dims[0].scale, ScaleKind::Ordinal3);
        assert_eq!(dims[0].level, Level::Root);
        assert_eq!(ED.parent(), Some(TE));
        assert_eq!(dims.iter().filter(|d| d.level == Level::Sub).count(), 9);
        assert_eq!(dims.iter().filter(|d| d.level == Level::Core).count(), 4);
        assert!(dims[1..].iter().all(|d| d.scale == ScaleKind::Binary));
        assert_eq!(MI.children().collect::<Vec<_>>(), vec![UM, MR, CR]);
    }

    #[test]
    fn parse_codes_and_names() {
        assert_eq!("ed".parse::<Dimension>().unwrap(), ED);
        assert_eq!("Missing Openness".parse::<Dimension>().unwrap(), MO);
        assert!("XX".parse::<Dimension>().is_err());
    }

    #[test]
    fn appropriate_record_is_valid() {
        let r = AnnotationRecord::appropriate("a1", "x");
        assert!(validate(&r, ValidationMode::Strict).unwrap().is_ok());
    }

    #[test]
    fn sub_without_parent() {
        let r = AnnotationRecord::appropriate("a1", "x").with(ED, true).with_rating(2);
        let rep = validate(&r, ValidationMode::Lenient).unwrap();
        assert_eq!(
            rep.violations,
            vec![Violation::SubWithoutParent { dimension: ED, parent: TE }]
        );
    }

    #[test]
    fn rating_without_reason_strict_only() {
        let r = AnnotationRecord::appropriate("a1", "x").with_rating(2);
        let strict = validate(&r, ValidationMode::Strict).unwrap();
        assert_eq!(strict.violations, vec![Violation::MissingReason { in_rating: 2 }]);
        assert!(validate(&r, ValidationMode::Lenient).unwrap().is_ok());
    }

    #[test]
    fn core_on_appropriate_rating() {
        let r = AnnotationRecord::appropriate("a1", "x").with(OR, true).with(DO, true);
        let strict = validate(&r, ValidationMode::Strict).unwrap();
        assert_eq!(
            strict.violations,
            vec![Violation::CoreWithoutInappropriateness { dimension: OR }]
        );
    }

    #[test]
    fn free_text_requires_ru() {
        let mut r = AnnotationRecord::appropriate("a1", "x")
            .with_rating(1)
            .with(OR, true);
        r.ru_free_text = Some("off-putting tone".into());
        let rep = validate(&r, ValidationMode::Strict).unwrap();
        assert_eq!(rep.violations, vec![Violation::FreeTextWithoutUnclassified]);
        let r = r.with(RU, true);
        assert!(validate(&r, ValidationMode::Strict).unwrap().is_ok());
    }

    #[test]
    fn core_without_sub_is_only_a_warning() {
        let r = AnnotationRecord::appropriate("a1", "x").with_rating(1).with(TE, true);
        let rep = validate(&r, ValidationMode::Strict).unwrap();
        assert!(rep.is_ok());
        assert_eq!(rep.warnings, vec![Warning::CoreWithoutSub { dimension: TE }]);
    }

    #[test]
    fn structural_errors_are_distinct() {
        let mut r = AnnotationRecord::appropriate("a1", "x");
        r.flags.remove(&MS);
        assert_eq!(
            validate(&r, ValidationMode::Lenient),
            Err(StructuralError::MissingFlags(vec![MS]))
        );
        let r = AnnotationRecord::appropriate("a1", "x").with_rating(4);
        assert_eq!(
            validate(&r, ValidationMode::Strict),
            Err(StructuralError::RatingOutOfRange(4))
        );
    }

    #[test]
    fn closure_examples() {
        let r = AnnotationRecord::appropriate("a", "x").with(UM, true);
        let c = close(&r);
        assert!(c.flag(UM) && c.flag(MI));
        assert_eq!(c.in_rating, 2);

        let r = AnnotationRecord::appropriate("a", "x")
            .with_rating(1)
            .with(MS, true)
            .with(MO, true);
        assert!(close(&r).flag(MC));

        let valid = AnnotationRecord::appropriate("a", "x")
            .with_rating(1)
            .with(TE, true)
            .with(EI, true);
        assert_eq!(close(&valid), valid);
    }

    #[test]
    fn record_json_shape() {
        let r = AnnotationRecord::appropriate("a", "x").with_rating(2).with(MI, true);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["flags"]["MI"], true);
        assert_eq!(json["in_rating"], 2);
        let back: AnnotationRecord = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }

    fn arb_record() -> impl Strategy<Value = AnnotationRecord> {
        (1u8..=3, proptest::collection::vec(any::<bool>(), 13)).prop_map(|(rating, bits)| {
            let mut r = AnnotationRecord::appropriate("a", "x").with_rating(rating);
            for (d, b) in Dimension::FLAGS.into_iter().zip(bits) {
                r.flags.insert(d, b);
            }
            r
        })
    }

    proptest! {
        #[test]
        fn close_is_idempotent(r in arb_record()) {
            let once = close(&r);
            prop_assert_eq!(close(&once), once);
        }

        #[test]
        fn closed_records_satisfy_upward_rules(r in arb_record()) {
            let rep = validate(&close(&r), ValidationMode::Strict).unwrap();
            for v in rep.violations {
                let upward = matches!(
                    v,
                    Violation::SubWithoutParent { .. } | Violation::CoreWithoutInappropriateness { .. }
                );
                prop_assert!(!upward, "{:?}", v);
            }
        }

        #[test]
        fn close_never_removes_yes(r in arb_record()) {
            let c = close(&r);
            for d in Dimension::ALL {
                prop_assert!(!r.flag(d) || c.flag(d));
            }
        }

        #[test]
        fn validation_ignores_flag_insertion_order(r in arb_record(), rot in 0usize..13) {
            let mut entries: Vec<(Dimension, bool)> = r.flags.iter().map(|(d, b)| (*d, *b)).collect();
            entries.rotate_left(rot);
            entries.reverse();
            let mut shuffled = r.clone();
            shuffled.flags = entries.into_iter().collect();
            prop_assert_eq!(
                validate(&r, ValidationMode::Strict),
                validate(&shuffled, ValidationMode::Strict)
            );
        }

        #[test]
        fn close_labels_matches_record_closure(r in arb_record()) {
            let mut labels = r.binary_labels();
            close_labels(&mut labels);
            prop_assert_eq!(labels, close(&r).binary_labels());
        }
    }
}
