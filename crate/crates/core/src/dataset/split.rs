use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetRecord};

/// Train/validation partition at map granularity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    pub train_records: usize,
    pub validation_records: usize,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
}

/// Shuffle maps by `seed`, then greedily send each to train while that
/// brings the train record count closer to `train_fraction` of the total.
/// Both sides always get at least one map.
pub fn split(records: &[DatasetRecord], train_fraction: f64, seed: u64) -> Result<SplitManifest, DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Split(format!("train fraction {train_fraction} must be in (0, 1)")));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.map_id.as_str()).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(DatasetError::Split(format!("need at least 2 maps, found {}", counts.len())));
    }
    let mut maps: Vec<(&str, usize)> = counts.into_iter().collect();
    maps.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let target = train_fraction * records.len() as f64;
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut train_count = 0usize;
    for (id, c) in maps {
        // Adding c moves closer to the target iff train + c/2 < target.
        if (train_count as f64) + (c as f64) / 2.0 < target {
            train.push((id, c));
            train_count += c;
        } else {
            validation.push((id, c));
        }
    }
    if validation.is_empty() {
        let m = train.pop().expect("at least two maps");
        train_count -= m.1;
        validation.push(m);
    }
    if train.is_empty() {
        let m = validation.remove(0);
        train_count += m.1;
        train.push(m);
    }
    let mut train_ids: Vec<String> = train.iter().map(|(id, _)| id.to_string()).collect();
    let mut validation_ids: Vec<String> = validation.iter().map(|(id, _)| id.to_string()).collect();
    train_ids.sort();
    validation_ids.sort();
    Ok(SplitManifest {
        seed,
        train_fraction,
        train_records: train_count,
        validation_records: records.len() - train_count,
        train_ids,
        validation_ids,
    })
}
