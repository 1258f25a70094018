//! Arguments, annotations, external quality ratings and pair reasons.

mod adapter;
mod io;
mod stats;
mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{AnnotationRecord, Violation};
use crate::{Error, Result};

pub use adapter::{import_released_annotations, import_released_gold, ReleasedGold};
pub use io::{parse_annotations, write_annotations, Format, Lines};
pub use stats::{corpus_stats, count_sentences, CorpusStats, GroupBy, GroupStats};
pub use store::{CorpusDir, StoreWriter};

/// Source corpus an argument was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "dagstuhl")]
    Dagstuhl,
    #[serde(rename = "ukpconvarg2")]
    UkpConvArg2,
    #[serde(rename = "gaq-debates")]
    GaqDebates,
    #[serde(rename = "gaq-qa")]
    GaqQa,
    #[serde(rename = "gaq-reviews")]
    GaqReviews,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Dagstuhl,
        Source::UkpConvArg2,
        Source::GaqDebates,
        Source::GaqQa,
        Source::GaqReviews,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Source::Dagstuhl => "dagstuhl",
            Source::UkpConvArg2 => "ukpconvarg2",
            Source::GaqDebates => "gaq-debates",
            Source::GaqQa => "gaq-qa",
            Source::GaqReviews => "gaq-reviews",
        }
    }

    pub fn genre(self) -> Genre {
        match self {
            Source::Dagstuhl | Source::UkpConvArg2 | Source::GaqDebates => Genre::Debate,
            Source::GaqQa => Genre::QaForum,
            Source::GaqReviews => Genre::Review,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.tag() == s.trim())
            .ok_or_else(|| Error::UnknownSource(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Genre {
    Debate,
    QaForum,
    Review,
}

impl Genre {
    pub const ALL: [Genre; 3] = [Genre::Debate, Genre::QaForum, Genre::Review];

    pub fn tag(self) -> &'static str {
        match self {
            Genre::Debate => "debate",
            Genre::QaForum => "qa-forum",
            Genre::Review => "review",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub argument_id: String,
    pub source: Source,
    pub issue: String,
    pub text: String,
}

impl Argument {
    pub fn genre(&self) -> Genre {
        self.source.genre()
    }
}

/// One rater's score of one argument on an external quality dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityRating {
    pub argument_id: String,
    /// Free key such as `appropriateness` or `global-acceptability`.
    pub dimension: String,
    pub rater_id: String,
    /// Ordinal 1..=3.
    pub score: u8,
}

/// Reasons given for why argument `a` of a pair is more convincing than `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReasonCode {
    AttackingAbusive,
    LanguageIssues,
    Unclear,
    NoCredibleEvidence,
    InsufficientReasoning,
    IrrelevantReasons,
    OnlyOpinion,
    Nonsense,
    OffTopic,
    WeakVague,
    MoreDetailed,
    Objective,
    MoreCredible,
    ClearWellWritten,
    OnTopic,
    MakesYouThink,
    WellThoughtThrough,
    Overall,
}

impl ReasonCode {
    pub const ALL: [ReasonCode; 18] = [
        ReasonCode::AttackingAbusive,
        ReasonCode::LanguageIssues,
        ReasonCode::Unclear,
        ReasonCode::NoCredibleEvidence,
        ReasonCode::InsufficientReasoning,
        ReasonCode::IrrelevantReasons,
        ReasonCode::OnlyOpinion,
        ReasonCode::Nonsense,
        ReasonCode::OffTopic,
        ReasonCode::WeakVague,
        ReasonCode::MoreDetailed,
        ReasonCode::Objective,
        ReasonCode::MoreCredible,
        ReasonCode::ClearWellWritten,
        ReasonCode::OnTopic,
        ReasonCode::MakesYouThink,
        ReasonCode::WellThoughtThrough,
        ReasonCode::Overall,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ReasonCode::AttackingAbusive => "attacking-abusive",
            ReasonCode::LanguageIssues => "language-issues",
            ReasonCode::Unclear => "unclear",
            ReasonCode::NoCredibleEvidence => "no-credible-evidence",
            ReasonCode::InsufficientReasoning => "insufficient-reasoning",
            ReasonCode::IrrelevantReasons => "irrelevant-reasons",
            ReasonCode::OnlyOpinion => "only-opinion",
            ReasonCode::Nonsense => "nonsense",
            ReasonCode::OffTopic => "off-topic",
            ReasonCode::WeakVague => "weak-vague",
            ReasonCode::MoreDetailed => "more-detailed",
            ReasonCode::Objective => "objective",
            ReasonCode::MoreCredible => "more-credible",
            ReasonCode::ClearWellWritten => "clear-well-written",
            ReasonCode::OnTopic => "on-topic",
            ReasonCode::MakesYouThink => "makes-you-think",
            ReasonCode::WellThoughtThrough => "well-thought-through",
            ReasonCode::Overall => "overall",
        }
    }

    /// Label shown in report tables.
    pub fn description(self) -> &'static str {
        match self {
            ReasonCode::AttackingAbusive => "b is attacking / abusive",
            ReasonCode::LanguageIssues => "b has language issues / humour / sarcasm",
            ReasonCode::Unclear => "b is unclear / hard to follow",
            ReasonCode::NoCredibleEvidence => "b has no credible evidence / no facts",
            ReasonCode::InsufficientReasoning => "b has less or insufficient reasoning",
            ReasonCode::IrrelevantReasons => "b uses irrelevant reasons",
            ReasonCode::OnlyOpinion => "b is only an opinion / a rant",
            ReasonCode::Nonsense => "b is non-sense / confusing",
            ReasonCode::OffTopic => "b does not address the topic",
            ReasonCode::WeakVague => "b is generally weak / vague",
            ReasonCode::MoreDetailed => "a is more detailed / better reasoned / deeper",
            ReasonCode::Objective => "a is objective / discusses other views",
            ReasonCode::MoreCredible => "a is more credible / confident",
            ReasonCode::ClearWellWritten => "a is clear / crisp / well-written",
            ReasonCode::OnTopic => "a sticks to the topic",
            ReasonCode::MakesYouThink => "a makes you think",
            ReasonCode::WellThoughtThrough => "a is well thought through / smart",
            ReasonCode::Overall => "a is more convincing than b",
        }
    }

    /// Label codes of the original pair-reason annotation scheme.
    fn legacy_code(self) -> Option<&'static str> {
        Some(match self {
            ReasonCode::AttackingAbusive => "o5_1",
            ReasonCode::LanguageIssues => "o5_2",
            ReasonCode::Unclear => "o5_3",
            ReasonCode::NoCredibleEvidence => "o6_1",
            ReasonCode::InsufficientReasoning => "o6_2",
            ReasonCode::IrrelevantReasons => "o6_3",
            ReasonCode::OnlyOpinion => "o7_1",
            ReasonCode::Nonsense => "o7_2",
            ReasonCode::OffTopic => "o7_3",
            ReasonCode::WeakVague => "o7_4",
            ReasonCode::MoreDetailed => "o8_1",
            ReasonCode::Objective => "o8_4",
            ReasonCode::MoreCredible => "o8_5",
            ReasonCode::ClearWellWritten => "o9_1",
            ReasonCode::OnTopic => "o9_2",
            ReasonCode::MakesYouThink => "o9_3",
            ReasonCode::WellThoughtThrough => "o9_4",
            ReasonCode::Overall => return None,
        })
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ReasonCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        ReasonCode::ALL
            .into_iter()
            .find(|r| r.tag() == t || r.legacy_code() == Some(t.as_str()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown reason code `{s}`")))
    }
}

/// A reason attached to a convincingness pair (a more convincing than b).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReason {
    pub pair_id: String,
    pub more_convincing_id: String,
    pub less_convincing_id: String,
    pub reason: ReasonCode,
}

/// What to do when an ingested item collides with an existing key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    SkipWithWarning,
}

/// A line that was not ingested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

/// A record that lenient ingestion repaired by closure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repair {
    pub line: usize,
    pub argument_id: String,
    pub annotator_id: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub skipped: Vec<LineIssue>,
    pub rejected: Vec<LineIssue>,
    pub repairs: Vec<Repair>,
}

/// Audit trail entry for one ingestion call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub kind: String,
    pub count: usize,
    pub at: chrono::DateTime<chrono::Utc>,
}

/// In-memory corpus with referential integrity on every collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    arguments: Vec<Argument>,
    argument_index: HashMap<String, usize>,
    annotations: Vec<AnnotationRecord>,
    annotation_index: HashMap<(String, String), usize>,
    ratings: Vec<QualityRating>,
    rating_index: HashMap<(String, String, String), usize>,
    pairs: Vec<PairReason>,
    roster: Option<BTreeSet<String>>,
    audit: Vec<AuditEvent>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn argument(&self, id: &str) -> Option<&Argument> {
        self.argument_index.get(id).map(|&i| &self.arguments[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.argument_index.contains_key(id)
    }

    pub fn annotations(&self) -> &[AnnotationRecord] {
        &self.annotations
    }

    pub fn ratings(&self) -> &[QualityRating] {
        &self.ratings
    }

    pub fn pairs(&self) -> &[PairReason] {
        &self.pairs
    }

    pub fn audit(&self) -> &[AuditEvent] {
        &self.audit
    }

    /// Declares the annotator set expected for the campaign.
    pub fn declare_roster<I, S>(&mut self, annotators: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.roster = Some(annotators.into_iter().map(Into::into).collect());
    }

    pub fn annotators(&self) -> BTreeSet<String> {
        self.annotations.iter().map(|r| r.annotator_id.clone()).collect()
    }

    /// Checks that exactly the declared annotators appear in the annotations.
    pub fn check_roster(&self) -> Result<()> {
        let Some(roster) = &self.roster else {
            return Ok(());
        };
        let seen = self.annotators();
        if &seen != roster {
            let missing: Vec<_> = roster.difference(&seen).cloned().collect();
            let extra: Vec<_> = seen.difference(roster).cloned().collect();
            return Err(Error::Mismatch(format!(
                "annotator roster differs: missing {missing:?}, undeclared {extra:?}"
            )));
        }
        Ok(())
    }

    /// Records grouped by argument, in argument insertion order.
    pub fn records_by_argument(&self) -> Vec<(&Argument, Vec<&AnnotationRecord>)> {
        let mut groups: Vec<Vec<&AnnotationRecord>> = vec![Vec::new(); self.arguments.len()];
        for r in &self.annotations {
            if let Some(&i) = self.argument_index.get(&r.argument_id) {
                groups[i].push(r);
            }
        }
        self.arguments.iter().zip(groups).collect()
    }

    pub fn add_argument(&mut self, argument: Argument, duplicates: DuplicatePolicy) -> Result<bool> {
        if argument.text.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "argument `{}` has empty text",
                argument.argument_id
            )));
        }
        if self.argument_index.contains_key(&argument.argument_id) {
            return match duplicates {
                DuplicatePolicy::Reject => Err(Error::DuplicateId(argument.argument_id)),
                DuplicatePolicy::SkipWithWarning => {
                    log::warn!("skipping duplicate argument `{}`", argument.argument_id);
                    Ok(false)
                }
            };
        }
        self.argument_index
            .insert(argument.argument_id.clone(), self.arguments.len());
        self.arguments.push(argument);
        Ok(true)
    }

    /// Inserts a structurally valid record. `replace` overwrites an earlier
    /// record of the same (argument, annotator).
    pub fn add_annotation(
        &mut self,
        record: AnnotationRecord,
        duplicates: DuplicatePolicy,
        replace: bool,
    ) -> Result<bool> {
        record.check_structure()?;
        if !self.contains(&record.argument_id) {
            return Err(Error::UnknownArgument(record.argument_id));
        }
        let key = (record.argument_id.clone(), record.annotator_id.clone());
        if let Some(&i) = self.annotation_index.get(&key) {
            if replace {
                self.annotations[i] = record;
                return Ok(true);
            }
            return match duplicates {
                DuplicatePolicy::Reject => Err(Error::DuplicateId(format!("{}/{}", key.0, key.1))),
                DuplicatePolicy::SkipWithWarning => Ok(false),
            };
        }
        self.annotation_index.insert(key, self.annotations.len());
        self.annotations.push(record);
        Ok(true)
    }

    pub fn add_rating(&mut self, rating: QualityRating, duplicates: DuplicatePolicy) -> Result<bool> {
        if !(1..=3).contains(&rating.score) {
            return Err(Error::RatingOutOfRange(rating.score.into()));
        }
        if !self.contains(&rating.argument_id) {
            return Err(Error::UnknownArgument(rating.argument_id));
        }
        let key = (
            rating.argument_id.clone(),
            rating.dimension.clone(),
            rating.rater_id.clone(),
        );
        if self.rating_index.contains_key(&key) {
            return match duplicates {
                DuplicatePolicy::Reject => Err(Error::DuplicateId(format!(
                    "{}/{}/{}",
                    key.0, key.1, key.2
                ))),
                DuplicatePolicy::SkipWithWarning => Ok(false),
            };
        }
        self.rating_index.insert(key, self.ratings.len());
        self.ratings.push(rating);
        Ok(true)
    }

    pub fn add_pair(&mut self, pair: PairReason) -> Result<bool> {
        if pair.more_convincing_id == pair.less_convincing_id {
            return Err(Error::InvalidInput(format!(
                "pair `{}` compares an argument with itself",
                pair.pair_id
            )));
        }
        for id in [&pair.more_convincing_id, &pair.less_convincing_id] {
            if !self.contains(id) {
                return Err(Error::UnknownArgument(id.clone()));
            }
        }
        if self.pairs.contains(&pair) {
            return Ok(false);
        }
        self.pairs.push(pair);
        Ok(true)
    }

    pub(crate) fn log(&mut self, kind: &str, count: usize) {
        self.audit.push(AuditEvent {
            kind: kind.to_string(),
            count,
            at: chrono::Utc::now(),
        });
    }

    /// Mean rating per (argument, quality dimension), averaged over raters.
    pub fn quality_means(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
        for r in &self.ratings {
            let e = sums
                .entry(r.dimension.clone())
                .or_default()
                .entry(r.argument_id.clone())
                .or_insert((0.0, 0));
            e.0 += f64::from(r.score);
            e.1 += 1;
        }
        sums.into_iter()
            .map(|(dim, per_arg)| {
                let means = per_arg
                    .into_iter()
                    .map(|(arg, (s, n))| (arg, s / n as f64))
                    .collect();
                (dim, means)
            })
            .collect()
    }

    /// Restricts the corpus to arguments accepted by `keep`, with their
    /// annotations, ratings and pairs.
    pub fn filtered(&self, keep: impl Fn(&Argument) -> bool) -> Corpus {
        let mut out = Corpus::new();
        out.roster = self.roster.clone();
        for a in self.arguments.iter().filter(|a| keep(a)) {
            out.add_argument(a.clone(), DuplicatePolicy::Reject)
                .expect("ids are unique in the source corpus");
        }
        for r in &self.annotations {
            if out.contains(&r.argument_id) {
                out.add_annotation(r.clone(), DuplicatePolicy::Reject, false)
                    .expect("record already validated");
            }
        }
        for q in &self.ratings {
            if out.contains(&q.argument_id) {
                out.add_rating(q.clone(), DuplicatePolicy::Reject)
                    .expect("rating already validated");
            }
        }
        for p in &self.pairs {
            if out.contains(&p.more_convincing_id) && out.contains(&p.less_convincing_id) {
                let _ = out.add_pair(p.clone());
            }
        }
        out
    }
}
