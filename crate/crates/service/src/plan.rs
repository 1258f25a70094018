use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use appropriateness::rng;

use crate::{Result, ServiceError};

/// Ordered batches of argument ids. Batches partition the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batches: Vec<Vec<String>>,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.batches.iter().map(Vec::len).collect()
    }

    /// Index of the batch holding `argument_id`.
    pub fn batch_of(&self, argument_id: &str) -> Option<usize> {
        self.batches.iter().position(|b| b.iter().any(|a| a == argument_id))
    }

    /// Stable batch identifier stored on records, 1-based.
    pub fn batch_id(index: usize) -> String {
        format!("batch-{:02}", index + 1)
    }
}

/// Shuffles the ids under `seed` and cuts them into `ceil(n / batch_size)`
/// contiguous slices whose sizes differ by at most one. The input order
/// does not matter: ids are sorted before shuffling.
pub fn plan_batches(argument_ids: &[String], batch_size: usize, seed: u64) -> Result<BatchPlan> {
    if batch_size < 1 {
        return Err(ServiceError::BadRequest("batch size must be at least 1".into()));
    }
    if argument_ids.is_empty() {
        return Err(ServiceError::BadRequest("cannot plan batches for an empty corpus".into()));
    }
    let mut ids = argument_ids.to_vec();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(ServiceError::BadRequest("argument ids are not unique".into()));
    }
    ids.shuffle(&mut rng::stream(seed, rng::stream_id(&[31])));

    let n = ids.len();
    let count = n.div_ceil(batch_size);
    let (base, extra) = (n / count, n % count);
    let mut batches = Vec::with_capacity(count);
    let mut rest = ids.as_slice();
    for b in 0..count {
        let (head, tail) = rest.split_at(base + usize::from(b < extra));
        batches.push(head.to_vec());
        rest = tail;
    }
    Ok(BatchPlan { batches })
}
