use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;

use super::{Argument, Corpus, Genre};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    None,
    Source,
    Genre,
}

impl FromStr for GroupBy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "" => Ok(GroupBy::None),
            "source" => Ok(GroupBy::Source),
            "genre" => Ok(GroupBy::Genre),
            other => Err(Error::InvalidInput(format!("unknown grouping `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupStats {
    pub arguments: usize,
    pub issues: usize,
    pub sentences: usize,
    pub genres: BTreeMap<Genre, usize>,
    pub mean_sentences: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total: GroupStats,
    /// Empty when ungrouped; keyed by source or genre tag otherwise.
    pub groups: BTreeMap<String, GroupStats>,
}

/// Counts sentences as maximal runs ending in `.`, `!` or `?` followed by
/// whitespace or end of text. Trailing text without a terminator counts
/// as one more sentence.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut pending = false;
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
            if boundary && pending {
                count += 1;
                pending = false;
            }
        } else if !c.is_whitespace() {
            pending = true;
        }
    }
    if pending {
        count += 1;
    }
    count
}

fn normalize_issue(issue: &str) -> String {
    issue.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn summarize<'a>(args: impl Iterator<Item = &'a Argument>) -> GroupStats {
    let mut out = GroupStats::default();
    let mut issues = BTreeSet::new();
    for a in args {
        out.arguments += 1;
        out.sentences += count_sentences(&a.text);
        *out.genres.entry(a.genre()).or_default() += 1;
        issues.insert(normalize_issue(&a.issue));
    }
    out.issues = issues.len();
    if out.arguments > 0 {
        out.mean_sentences = out.sentences as f64 / out.arguments as f64;
    }
    out
}

/// Argument, issue, genre and sentence counts, optionally per group.
/// Issues are compared after whitespace normalization and lowercasing.
pub fn corpus_stats(corpus: &Corpus, group_by: GroupBy) -> CorpusStats {
    let args = corpus.arguments();
    let total = summarize(args.iter());
    let mut groups: BTreeMap<String, Vec<&Argument>> = BTreeMap::new();
    for a in args {
        let key = match group_by {
            GroupBy::None => continue,
            GroupBy::Source => a.source.tag().to_string(),
            GroupBy::Genre => a.genre().tag().to_string(),
        };
        groups.entry(key).or_default().push(a);
    }
    let groups = groups
        .into_iter()
        .map(|(k, v)| (k, summarize(v.into_iter())))
        .collect();
    CorpusStats { total, groups }
}
