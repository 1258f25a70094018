//! On-disk campaigns and their single writers.
//!
//! Layout under the data directory: `<campaign_id>/campaign.json` (fixed
//! at creation) and `<campaign_id>/journal.jsonl` (one line per accepted
//! submission). Every campaign has one writer thread that owns the journal;
//! submissions queue on its channel, are checked against the current
//! state, synced to disk, and only then applied and acknowledged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc, RwLock, RwLockReadGuard};

use chrono::Duration;
use tokio::sync::oneshot;

use appropriateness::AnnotationRecord;

use crate::campaign::{Ack, Campaign, CampaignMeta, CampaignSpec, JournalEntry};
use crate::journal::{write_atomic, Journal};
use crate::{Clock, Result, ServiceError};

const META_FILE: &str = "campaign.json";
const JOURNAL_FILE: &str = "journal.jsonl";

struct WriteRequest {
    annotator: String,
    record: AnnotationRecord,
    reply: oneshot::Sender<Result<Ack>>,
}

pub struct CampaignHandle {
    state: Arc<RwLock<Campaign>>,
    writer: mpsc::Sender<WriteRequest>,
}

impl CampaignHandle {
    fn start(campaign: Campaign, journal: Journal, clock: Arc<dyn Clock>) -> Self {
        let state = Arc::new(RwLock::new(campaign));
        let (tx, rx) = mpsc::channel::<WriteRequest>();
        let shared = Arc::clone(&state);
        let name = format!("writer-{}", shared.read().expect("fresh lock").meta().campaign_id);
        std::thread::Builder::new()
            .name(name)
            .spawn(move || writer_loop(shared, journal, clock, rx))
            .expect("spawning campaign writer");
        CampaignHandle { state, writer: tx }
    }

    /// A consistent snapshot for reads. Writers hold the lock only while
    /// applying an already persisted entry.
    pub fn read(&self) -> RwLockReadGuard<'_, Campaign> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Queues a submission and waits until it is durable (or refused).
    pub async fn submit(&self, annotator: &str, record: AnnotationRecord) -> Result<Ack> {
        let (reply, rx) = oneshot::channel();
        self.writer
            .send(WriteRequest {
                annotator: annotator.to_string(),
                record,
                reply,
            })
            .map_err(|_| ServiceError::WriterGone)?;
        rx.await.map_err(|_| ServiceError::WriterGone)?
    }
}

fn writer_loop(
    state: Arc<RwLock<Campaign>>,
    mut journal: Journal,
    clock: Arc<dyn Clock>,
    requests: mpsc::Receiver<WriteRequest>,
) {
    for req in requests {
        let now = clock.now();
        // Only this thread mutates the campaign, so the state cannot move
        // between the check and the apply below.
        let prepared = state
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .prepare(&req.annotator, req.record, now);
        let outcome = prepared.and_then(|entry| {
            journal.append(&entry)?;
            Ok(state.write().unwrap_or_else(|e| e.into_inner()).apply(entry))
        });
        if let Err(e) = &outcome {
            if e.status().is_server_error() {
                log::error!("{}: {e}", journal.path().display());
            }
        }
        let _ = req.reply.send(outcome);
    }
}

/// All campaigns under one data directory.
pub struct Registry {
    root: PathBuf,
    clock: Arc<dyn Clock>,
    default_window: Duration,
    campaigns: RwLock<BTreeMap<String, Arc<CampaignHandle>>>,
}

impl Registry {
    /// Loads every campaign found under `root`, replaying its journal.
    pub fn open(root: impl Into<PathBuf>, clock: Arc<dyn Clock>, default_window: Duration) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let mut campaigns = BTreeMap::new();
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(META_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let handle = load(&dir, Arc::clone(&clock))?;
            let id = handle.read().meta().campaign_id.clone();
            log::info!("loaded campaign `{id}` ({} records)", handle.read().records().len());
            campaigns.insert(id, Arc::new(handle));
        }
        Ok(Registry {
            root,
            clock,
            default_window,
            campaigns: RwLock::new(campaigns),
        })
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ids(&self) -> Vec<String> {
        self.campaigns.read().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Result<Arc<CampaignHandle>> {
        self.campaigns
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownCampaign(id.to_string()))
    }

    /// Plans and persists a new campaign.
    pub fn create(&self, spec: CampaignSpec) -> Result<Arc<CampaignHandle>> {
        let meta = CampaignMeta::from_spec(spec, self.default_window, self.clock.now())?;
        let mut campaigns = self.campaigns.write().unwrap_or_else(|e| e.into_inner());
        let dir = self.root.join(&meta.campaign_id);
        if campaigns.contains_key(&meta.campaign_id) || dir.exists() {
            return Err(ServiceError::CampaignExists(meta.campaign_id));
        }
        std::fs::create_dir_all(&dir)?;
        write_atomic(&dir.join(META_FILE), &serde_json::to_vec_pretty(&meta)?)?;
        let (journal, _) = Journal::open::<JournalEntry>(&dir.join(JOURNAL_FILE))?;
        let id = meta.campaign_id.clone();
        let handle = Arc::new(CampaignHandle::start(Campaign::new(meta), journal, Arc::clone(&self.clock)));
        campaigns.insert(id, Arc::clone(&handle));
        Ok(handle)
    }
}

fn load(dir: &Path, clock: Arc<dyn Clock>) -> Result<CampaignHandle> {
    let meta: CampaignMeta = serde_json::from_slice(&std::fs::read(dir.join(META_FILE))?)?;
    let (journal, entries) = Journal::open::<JournalEntry>(&dir.join(JOURNAL_FILE))?;
    let mut campaign = Campaign::new(meta);
    for entry in entries {
        campaign.apply(entry);
    }
    Ok(CampaignHandle::start(campaign, journal, clock))
}
