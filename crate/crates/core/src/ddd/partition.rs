use serde::Serialize;

use super::histogram::CorrectCounts;
use crate::consistency::{kappa_from_counts, KappaResult};
use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Trivial,
    Impossible,
    Inconclusive,
}

/// Trivial / impossible / inconclusive labelling of every image under a
/// tolerance `t`: trivial means at least M − t models are right, impossible
/// means at most t are.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DifficultyPartition {
    pub tolerance: u32,
    pub models: usize,
    pub image_ids: Vec<String>,
    pub counts: Vec<u32>,
    pub labels: Vec<Difficulty>,
}

pub fn classify_difficulty(counts: &CorrectCounts, tolerance: u32) -> Result<DifficultyPartition> {
    let m = counts.models;
    if 2 * tolerance as usize >= m {
        return Err(Error::InvalidTolerance { tolerance, models: m });
    }
    let t = tolerance;
    let labels = counts
        .counts
        .iter()
        .map(|&c| {
            if c as usize + t as usize >= m {
                Difficulty::Trivial
            } else if c <= t {
                Difficulty::Impossible
            } else {
                Difficulty::Inconclusive
            }
        })
        .collect();
    Ok(DifficultyPartition {
        tolerance,
        models: m,
        image_ids: counts.image_ids.clone(),
        counts: counts.counts.clone(),
        labels,
    })
}

impl DifficultyPartition {
    pub fn total(&self) -> usize {
        self.labels.len()
    }

    pub fn ids_of(&self, kind: Difficulty) -> Vec<&str> {
        self.labels
            .iter()
            .zip(&self.image_ids)
            .filter(|(l, _)| **l == kind)
            .map(|(_, id)| id.as_str())
            .collect()
    }

    pub fn count_of(&self, kind: Difficulty) -> usize {
        self.labels.iter().filter(|l| **l == kind).count()
    }

    pub fn trivial(&self) -> Vec<&str> {
        self.ids_of(Difficulty::Trivial)
    }

    pub fn impossible(&self) -> Vec<&str> {
        self.ids_of(Difficulty::Impossible)
    }

    pub fn inconclusive(&self) -> Vec<&str> {
        self.ids_of(Difficulty::Inconclusive)
    }

    /// Fraction of images that are trivial or impossible.
    pub fn ddd_index(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let extreme = self.total() - self.count_of(Difficulty::Inconclusive);
        extreme as f64 / self.total() as f64
    }
}

/// Which images to keep when exporting a subsample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Keep {
    #[default]
    Inconclusive,
    /// Images whose correct-count lies in `min..=max`.
    Band { min: u32, max: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subsample {
    pub ids: Vec<String>,
    pub warning: Option<String>,
}

impl Subsample {
    /// One id per line, LF-terminated.
    pub fn to_text(&self) -> String {
        self.ids.iter().map(|id| format!("{id}\n")).collect()
    }
}

pub fn subsample_export(partition: &DifficultyPartition, keep: Keep) -> Subsample {
    let ids: Vec<String> = partition
        .image_ids
        .iter()
        .zip(partition.labels.iter().zip(&partition.counts))
        .filter(|(_, (label, &count))| match keep {
            Keep::Inconclusive => **label == Difficulty::Inconclusive,
            Keep::Band { min, max } => (min..=max).contains(&count),
        })
        .map(|(id, _)| id.clone())
        .collect();
    let warning = ids.is_empty().then(|| "subsample is empty".to_string());
    Subsample { ids, warning }
}

/// κ between two models computed on a subset of images only; marginals are
/// recomputed on the subset.
pub fn restricted_kappa<S: AsRef<str>>(
    cube: &DecisionCube,
    epoch: u32,
    model_a: &str,
    model_b: &str,
    subset: &[S],
) -> Result<KappaResult> {
    if subset.is_empty() {
        return Err(Error::InvalidInput("subset is empty".into()));
    }
    let e = cube.epoch_index(epoch)?;
    let a = cube.plane(cube.model_index(model_a)?, e);
    let b = cube.plane(cube.model_index(model_b)?, e);
    let idx = cube.image_indices(subset)?;
    let (mut ca, mut cb, mut agree) = (0, 0, 0);
    for &i in &idx {
        let (x, y) = (a.get(i), b.get(i));
        ca += usize::from(x);
        cb += usize::from(y);
        agree += usize::from(x == y);
    }
    kappa_from_counts(idx.len(), ca, cb, agree)
}
