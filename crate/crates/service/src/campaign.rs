//! Campaign state and protocol rules, independent of HTTP and storage.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use appropriateness::corpus::Argument;
use appropriateness::taxonomy::{self, AnnotationRecord, ValidationMode};

use crate::plan::{plan_batches, BatchPlan};
use crate::{Result, ServiceError};

pub const DEFAULT_BATCH_SIZE: usize = 150;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub annotator_id: String,
    pub token: String,
}

/// Body of `POST /campaigns`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub campaign_id: String,
    pub arguments: Vec<Argument>,
    pub roster: Vec<RosterEntry>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the server's pacing window for this campaign.
    #[serde(default)]
    pub pacing_window_secs: Option<i64>,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

/// Everything fixed at creation time; stored as `campaign.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub campaign_id: String,
    pub created_at: DateTime<Utc>,
    pub arguments: Vec<Argument>,
    pub roster: Vec<RosterEntry>,
    pub batch_size: usize,
    pub seed: u64,
    pub pacing_window_secs: i64,
    pub plan: BatchPlan,
}

impl CampaignMeta {
    pub fn from_spec(spec: CampaignSpec, default_window: Duration, now: DateTime<Utc>) -> Result<Self> {
        check_id(&spec.campaign_id)?;
        if spec.roster.is_empty() {
            return Err(ServiceError::BadRequest("roster is empty".into()));
        }
        let mut annotators = HashSet::new();
        let mut tokens = HashSet::new();
        for r in &spec.roster {
            if r.annotator_id.trim().is_empty() || r.token.trim().is_empty() {
                return Err(ServiceError::BadRequest("roster entries need an id and a token".into()));
            }
            if !annotators.insert(&r.annotator_id) {
                return Err(ServiceError::BadRequest(format!("annotator `{}` listed twice", r.annotator_id)));
            }
            if !tokens.insert(&r.token) {
                return Err(ServiceError::BadRequest("two roster entries share a token".into()));
            }
        }
        for a in &spec.arguments {
            if a.text.trim().is_empty() {
                return Err(ServiceError::BadRequest(format!("argument `{}` has empty text", a.argument_id)));
            }
        }
        let window = spec.pacing_window_secs.unwrap_or(default_window.num_seconds());
        if window < 0 {
            return Err(ServiceError::BadRequest("pacing window must not be negative".into()));
        }
        let ids: Vec<String> = spec.arguments.iter().map(|a| a.argument_id.clone()).collect();
        let plan = plan_batches(&ids, spec.batch_size, spec.seed)?;
        Ok(CampaignMeta {
            campaign_id: spec.campaign_id,
            created_at: now,
            arguments: spec.arguments,
            roster: spec.roster,
            batch_size: spec.batch_size,
            seed: spec.seed,
            pacing_window_secs: window,
            plan,
        })
    }
}

/// Campaign ids double as directory names.
pub fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && !id.starts_with('-');
    if ok {
        Ok(())
    } else {
        Err(ServiceError::BadRequest(format!(
            "campaign id `{id}` must be 1-64 characters of [A-Za-z0-9_-]"
        )))
    }
}

/// One accepted submission, as stored in the journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub record: AnnotationRecord,
    #[serde(default)]
    pub overwrites: bool,
}

/// An overwritten record, kept for the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Revision {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub previous: AnnotationRecord,
}

#[derive(Debug, Clone)]
struct Stored {
    record: AnnotationRecord,
    first_at: DateTime<Utc>,
}

/// What an annotator should do next.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Next {
    Item {
        /// 1-based batch number.
        batch: usize,
        batch_id: String,
        /// 1-based position within the batch.
        position: usize,
        batch_size: usize,
        argument: Argument,
    },
    Blocked {
        until: DateTime<Utc>,
        completed_batches: usize,
    },
    Done {
        completed_batches: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ack {
    pub status: &'static str,
    pub seq: u64,
    pub argument_id: String,
    pub batch_id: String,
    pub overwritten: bool,
    pub batch_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorProgress {
    pub annotator_id: String,
    pub answered: usize,
    pub total: usize,
    pub completed_batches: usize,
    /// 1-based; absent when every batch is done.
    pub current_batch: Option<usize>,
    pub current_batch_answered: usize,
    pub blocked_until: Option<DateTime<Utc>>,
    pub revisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Progress {
    pub campaign_id: String,
    pub arguments: usize,
    pub batch_sizes: Vec<usize>,
    pub pacing_window_secs: i64,
    pub records: usize,
    pub annotators: Vec<AnnotatorProgress>,
}

pub struct Campaign {
    meta: CampaignMeta,
    arguments: HashMap<String, usize>,
    location: HashMap<String, (usize, usize)>,
    tokens: HashMap<String, String>,
    /// Keyed by (annotator, argument).
    records: BTreeMap<(String, String), Stored>,
    revisions: BTreeMap<String, Vec<Revision>>,
    seq: u64,
}

impl Campaign {
    pub fn new(meta: CampaignMeta) -> Self {
        let arguments = meta
            .arguments
            .iter()
            .enumerate()
            .map(|(i, a)| (a.argument_id.clone(), i))
            .collect();
        let mut location = HashMap::new();
        for (b, batch) in meta.plan.batches.iter().enumerate() {
            for (p, id) in batch.iter().enumerate() {
                location.insert(id.clone(), (b, p));
            }
        }
        let tokens = meta
            .roster
            .iter()
            .map(|r| (r.token.clone(), r.annotator_id.clone()))
            .collect();
        Campaign {
            meta,
            arguments,
            location,
            tokens,
            records: BTreeMap::new(),
            revisions: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn meta(&self) -> &CampaignMeta {
        &self.meta
    }

    pub fn window(&self) -> Duration {
        Duration::seconds(self.meta.pacing_window_secs)
    }

    pub fn annotator_for_token(&self, token: &str) -> Option<&str> {
        self.tokens.get(token).map(String::as_str)
    }

    pub fn on_roster(&self, annotator: &str) -> bool {
        self.meta.roster.iter().any(|r| r.annotator_id == annotator)
    }

    fn require_roster(&self, annotator: &str) -> Result<()> {
        if self.on_roster(annotator) {
            Ok(())
        } else {
            Err(ServiceError::UnknownAnnotator(annotator.to_string()))
        }
    }

    fn answered(&self, annotator: &str, argument: &str) -> bool {
        self.records
            .contains_key(&(annotator.to_string(), argument.to_string()))
    }

    fn answered_in(&self, annotator: &str, batch: usize) -> usize {
        self.meta.plan.batches[batch]
            .iter()
            .filter(|a| self.answered(annotator, a))
            .count()
    }

    /// First batch the annotator has not finished.
    fn current_batch(&self, annotator: &str) -> Option<usize> {
        (0..self.meta.plan.len()).find(|&b| self.answered_in(annotator, b) < self.meta.plan.batches[b].len())
    }

    /// When the batch was finished: the latest first submission among its items.
    fn completed_at(&self, annotator: &str, batch: usize) -> Option<DateTime<Utc>> {
        let mut latest: Option<DateTime<Utc>> = None;
        for a in &self.meta.plan.batches[batch] {
            let s = self.records.get(&(annotator.to_string(), a.clone()))?;
            latest = Some(latest.map_or(s.first_at, |l| l.max(s.first_at)));
        }
        latest
    }

    pub fn completion_times(&self, annotator: &str) -> Vec<DateTime<Utc>> {
        let mut times: Vec<DateTime<Utc>> = (0..self.meta.plan.len())
            .filter_map(|b| self.completed_at(annotator, b))
            .collect();
        times.sort();
        times
    }

    /// Set when the annotator may not start a new batch before this time.
    fn pacing_block(&self, annotator: &str, now: DateTime<Utc>) -> Option<DateTime<Utc>> {
        let last = self.completion_times(annotator).into_iter().max()?;
        let until = last + self.window();
        (until > now).then_some(until)
    }

    pub fn next(&self, annotator: &str, now: DateTime<Utc>) -> Result<Next> {
        self.require_roster(annotator)?;
        let completed = self.completion_times(annotator).len();
        let Some(b) = self.current_batch(annotator) else {
            return Ok(Next::Done {
                completed_batches: completed,
            });
        };
        let batch = &self.meta.plan.batches[b];
        if self.answered_in(annotator, b) == 0 {
            if let Some(until) = self.pacing_block(annotator, now) {
                return Ok(Next::Blocked {
                    until,
                    completed_batches: completed,
                });
            }
        }
        let (position, id) = batch
            .iter()
            .enumerate()
            .find(|(_, a)| !self.answered(annotator, a))
            .expect("current batch has an unanswered item");
        let argument = self.meta.arguments[self.arguments[id]].clone();
        Ok(Next::Item {
            batch: b + 1,
            batch_id: BatchPlan::batch_id(b),
            position: position + 1,
            batch_size: batch.len(),
            argument,
        })
    }

    /// Checks a submission against the protocol and returns the journal
    /// entry to persist. Does not change any state.
    ///
    /// A new record is accepted only for an item of the annotator's current
    /// batch, and only once that batch may be started; earlier answers may
    /// be revised at any time.
    pub fn prepare(&self, annotator: &str, mut record: AnnotationRecord, now: DateTime<Utc>) -> Result<JournalEntry> {
        self.require_roster(annotator)?;
        if record.annotator_id.is_empty() {
            record.annotator_id = annotator.to_string();
        } else if record.annotator_id != annotator {
            return Err(ServiceError::Forbidden(record.annotator_id));
        }
        let Some(&(batch, _)) = self.location.get(&record.argument_id) else {
            return Err(ServiceError::Stale(record.argument_id));
        };
        let overwrites = self.answered(annotator, &record.argument_id);
        if !overwrites {
            let current = self.current_batch(annotator);
            let startable =
                self.answered_in(annotator, batch) > 0 || self.pacing_block(annotator, now).is_none();
            if current != Some(batch) || !startable {
                return Err(ServiceError::Stale(record.argument_id));
            }
        }
        let report = taxonomy::validate(&record, ValidationMode::Strict)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        if !report.is_ok() {
            return Err(ServiceError::Rejected(report.violations));
        }
        record.batch_id = BatchPlan::batch_id(batch);
        record.submitted_at = Some(now);
        Ok(JournalEntry {
            seq: self.seq + 1,
            at: now,
            record,
            overwrites,
        })
    }

    /// Applies a persisted entry. Used both live and on journal replay.
    pub fn apply(&mut self, entry: JournalEntry) -> Ack {
        let annotator = entry.record.annotator_id.clone();
        let argument = entry.record.argument_id.clone();
        let batch_id = entry.record.batch_id.clone();
        let key = (annotator.clone(), argument.clone());
        let overwritten = match self.records.get_mut(&key) {
            Some(old) => {
                let previous = std::mem::replace(&mut old.record, entry.record);
                self.revisions.entry(annotator.clone()).or_default().push(Revision {
                    seq: entry.seq,
                    at: entry.at,
                    previous,
                });
                true
            }
            None => {
                self.records.insert(
                    key,
                    Stored {
                        record: entry.record,
                        first_at: entry.at,
                    },
                );
                false
            }
        };
        self.seq = self.seq.max(entry.seq);
        let batch_complete = self
            .location
            .get(&argument)
            .is_some_and(|&(b, _)| self.answered_in(&annotator, b) == self.meta.plan.batches[b].len());
        Ack {
            status: "accepted",
            seq: entry.seq,
            argument_id: argument,
            batch_id,
            overwritten,
            batch_complete,
        }
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    /// Current records ordered by argument, then annotator.
    pub fn records(&self) -> Vec<AnnotationRecord> {
        let mut out: Vec<AnnotationRecord> = self.records.values().map(|s| s.record.clone()).collect();
        out.sort_by(|a, b| {
            (&a.argument_id, &a.annotator_id).cmp(&(&b.argument_id, &b.annotator_id))
        });
        out
    }

    /// Records of arguments that every roster annotator has answered.
    pub fn complete_records(&self) -> Vec<AnnotationRecord> {
        let n = self.meta.roster.len();
        let mut per_argument: HashMap<&str, usize> = HashMap::new();
        for (_, argument) in self.records.keys() {
            *per_argument.entry(argument).or_default() += 1;
        }
        self.records()
            .into_iter()
            .filter(|r| per_argument.get(r.argument_id.as_str()) == Some(&n))
            .collect()
    }

    pub fn revisions(&self, annotator: &str) -> &[Revision] {
        self.revisions.get(annotator).map_or(&[], Vec::as_slice)
    }

    pub fn progress(&self, now: DateTime<Utc>) -> Progress {
        let total = self.meta.arguments.len();
        let annotators = self
            .meta
            .roster
            .iter()
            .map(|r| {
                let a = r.annotator_id.as_str();
                let current = self.current_batch(a);
                let current_answered = current.map_or(0, |b| self.answered_in(a, b));
                AnnotatorProgress {
                    annotator_id: a.to_string(),
                    answered: self.records.range((a.to_string(), String::new())..).take_while(|(k, _)| k.0 == a).count(),
                    total,
                    completed_batches: self.completion_times(a).len(),
                    current_batch: current.map(|b| b + 1),
                    current_batch_answered: current_answered,
                    blocked_until: if current.is_some() && current_answered == 0 {
                        self.pacing_block(a, now)
                    } else {
                        None
                    },
                    revisions: self.revisions(a).len(),
                }
            })
            .collect();
        Progress {
            campaign_id: self.meta.campaign_id.clone(),
            arguments: total,
            batch_sizes: self.meta.plan.sizes(),
            pacing_window_secs: self.meta.pacing_window_secs,
            records: self.records.len(),
            annotators,
        }
    }
}
