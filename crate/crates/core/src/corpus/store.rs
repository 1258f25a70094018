//! On-disk corpus: a directory of append-only JSONL files.
//!
//! Readers load immutable snapshots at any time. Writers must hold the
//! advisory `.lock` file, created exclusively and removed on drop.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Argument, Corpus, DuplicatePolicy, PairReason, QualityRating};
use crate::taxonomy::AnnotationRecord;
use crate::{Error, Result};

const ARGUMENTS: &str = "arguments.jsonl";
const ANNOTATIONS: &str = "annotations.jsonl";
const RATINGS: &str = "ratings.jsonl";
const PAIRS: &str = "pairs.jsonl";
const ROSTER: &str = "roster.json";
const LOCK: &str = ".lock";

#[derive(Debug, Clone)]
pub struct CorpusDir {
    root: PathBuf,
}

impl CorpusDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CorpusDir { root: root.into() }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Rebuilds the in-memory corpus from the files. Missing files are
    /// empty collections; later annotation lines overwrite earlier ones for
    /// the same (argument, annotator).
    pub fn load(&self) -> Result<Corpus> {
        let mut corpus = Corpus::new();
        if let Ok(text) = fs::read_to_string(self.root.join(ROSTER)) {
            let roster: Vec<String> = serde_json::from_str(&text)?;
            corpus.declare_roster(roster);
        }
        for a in read_lines::<Argument>(&self.root.join(ARGUMENTS))? {
            corpus.add_argument(a, DuplicatePolicy::Reject)?;
        }
        for r in read_lines::<AnnotationRecord>(&self.root.join(ANNOTATIONS))? {
            corpus.add_annotation(r, DuplicatePolicy::Reject, true)?;
        }
        for q in read_lines::<QualityRating>(&self.root.join(RATINGS))? {
            corpus.add_rating(q, DuplicatePolicy::Reject)?;
        }
        for p in read_lines::<PairReason>(&self.root.join(PAIRS))? {
            corpus.add_pair(p)?;
        }
        Ok(corpus)
    }

    /// Takes the single-writer lock, creating the directory if needed.
    pub fn lock(&self) -> Result<StoreWriter> {
        fs::create_dir_all(&self.root)?;
        let lock = self.root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(StoreWriter {
                    root: self.root.clone(),
                    lock,
                })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(lock.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Exclusive appender for a [`CorpusDir`].
#[derive(Debug)]
pub struct StoreWriter {
    root: PathBuf,
    lock: PathBuf,
}

impl StoreWriter {
    pub fn append_arguments(&mut self, items: &[Argument]) -> Result<()> {
        append(&self.root.join(ARGUMENTS), items)
    }

    pub fn append_annotations(&mut self, items: &[AnnotationRecord]) -> Result<()> {
        append(&self.root.join(ANNOTATIONS), items)
    }

    pub fn append_ratings(&mut self, items: &[QualityRating]) -> Result<()> {
        append(&self.root.join(RATINGS), items)
    }

    pub fn append_pairs(&mut self, items: &[PairReason]) -> Result<()> {
        append(&self.root.join(PAIRS), items)
    }

    pub fn write_roster(&mut self, annotators: &[String]) -> Result<()> {
        let tmp = self.root.join(format!("{ROSTER}.tmp"));
        fs::write(&tmp, serde_json::to_vec(annotators)?)?;
        fs::rename(tmp, self.root.join(ROSTER))?;
        Ok(())
    }

    /// Appends whatever `corpus` holds beyond the current on-disk snapshot.
    /// Returns the number of lines written.
    pub fn commit(&mut self, corpus: &Corpus) -> Result<usize> {
        let stored = CorpusDir::new(&self.root).load()?;
        let args: Vec<Argument> = corpus
            .arguments()
            .iter()
            .filter(|a| !stored.contains(&a.argument_id))
            .cloned()
            .collect();
        let stored_anns: std::collections::HashMap<(&str, &str), &AnnotationRecord> = stored
            .annotations()
            .iter()
            .map(|r| ((r.argument_id.as_str(), r.annotator_id.as_str()), r))
            .collect();
        let anns: Vec<AnnotationRecord> = corpus
            .annotations()
            .iter()
            .filter(|r| stored_anns.get(&(r.argument_id.as_str(), r.annotator_id.as_str())) != Some(r))
            .cloned()
            .collect();
        let ratings: Vec<QualityRating> = corpus
            .ratings()
            .iter()
            .filter(|q| !stored.ratings().contains(q))
            .cloned()
            .collect();
        let pairs: Vec<PairReason> = corpus
            .pairs()
            .iter()
            .filter(|p| !stored.pairs().contains(p))
            .cloned()
            .collect();
        self.append_arguments(&args)?;
        self.append_annotations(&anns)?;
        self.append_ratings(&ratings)?;
        self.append_pairs(&pairs)?;
        Ok(args.len() + anns.len() + ratings.len() + pairs.len())
    }
}

impl Drop for StoreWriter {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

fn append<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(&buf)?;
    f.sync_data()?;
    Ok(())
}

/// Reads one value per line. A torn final line (no trailing newline, left by
/// an interrupted append) is dropped with a warning; any other bad line is
/// an error.
fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        number += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(_) if !line.ends_with('\n') => {
                log::warn!("{}: ignoring torn final line {number}", path.display());
            }
            Err(e) => {
                return Err(Error::parse(number, format!("{}: {e}", path.display())));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::taxonomy::Dimension;

    fn arg(id: &str) -> Argument {
        Argument {
            argument_id: id.into(),
            source: Source::GaqDebates,
            issue: "i".into(),
            text: "t".into(),
        }
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusDir::new(dir.path());
        let w = store.lock().unwrap();
        assert!(matches!(store.lock(), Err(Error::Locked(_))));
        drop(w);
        store.lock().unwrap();
    }

    #[test]
    fn commit_appends_delta_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusDir::new(dir.path());
        let mut c = Corpus::new();
        c.add_argument(arg("a"), DuplicatePolicy::Reject).unwrap();
        c.add_annotation(AnnotationRecord::appropriate("a", "x"), DuplicatePolicy::Reject, false)
            .unwrap();
        let mut w = store.lock().unwrap();
        assert_eq!(w.commit(&c).unwrap(), 2);
        assert_eq!(w.commit(&c).unwrap(), 0);

        let revised = AnnotationRecord::appropriate("a", "x").with(Dimension::TE, true);
        c.add_annotation(revised.clone(), DuplicatePolicy::Reject, true).unwrap();
        assert_eq!(w.commit(&c).unwrap(), 1);
        drop(w);

        let loaded = store.load().unwrap();
        assert_eq!(loaded.arguments(), c.arguments());
        assert_eq!(loaded.annotations(), &[revised]);
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusDir::new(dir.path());
        let mut w = store.lock().unwrap();
        w.append_arguments(&[arg("a")]).unwrap();
        drop(w);
        let mut f = OpenOptions::new()
            .append(true)
            .open(dir.path().join(ARGUMENTS))
            .unwrap();
        f.write_all(b"{\"argument_id\":\"b\",\"sou").unwrap();
        assert_eq!(store.load().unwrap().arguments().len(), 1);
    }
}
