use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ddd::DifficultyPartition;
use crate::error::{Error, Result};
use crate::seed;

/// Where the impossible image of a trial is shown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    ImpossibleLeft,
    ImpossibleRight,
}

/// An observer's answer: the image they consider harder for a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub impossible: String,
    pub trivial: String,
    pub side: Side,
}

impl Trial {
    pub fn left(&self) -> &str {
        match self.side {
            Side::ImpossibleLeft => &self.impossible,
            Side::ImpossibleRight => &self.trivial,
        }
    }

    pub fn right(&self) -> &str {
        match self.side {
            Side::ImpossibleLeft => &self.trivial,
            Side::ImpossibleRight => &self.impossible,
        }
    }

    pub fn is_correct(&self, choice: Choice) -> bool {
        matches!(
            (self.side, choice),
            (Side::ImpossibleLeft, Choice::Left) | (Side::ImpossibleRight, Choice::Right)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub manifest_id: String,
    pub seed: u64,
    pub n_trials: usize,
    pub trials: Vec<Trial>,
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let m: ExperimentManifest = serde_json::from_slice(&fs::read(path)?)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials.len() != self.n_trials || self.n_trials == 0 {
            return Err(Error::InvalidInput("manifest trial count mismatch".into()));
        }
        let mut used = HashSet::new();
        for (i, t) in self.trials.iter().enumerate() {
            if t.index != i {
                return Err(Error::InvalidInput(format!("trial {i} has index {}", t.index)));
            }
            for id in [&t.impossible, &t.trivial] {
                if !used.insert(id.as_str()) {
                    return Err(Error::InvalidInput(format!("image {id:?} used twice")));
                }
            }
        }
        Ok(())
    }
}

fn manifest_id(seed: u64, trials: &[Trial]) -> String {
    let body = serde_json::to_vec(&(seed, trials)).expect("trials serialize");
    format!("{:016x}", seed::fnv1a(&body))
}

/// Samples `n_trials` (impossible, trivial) pairs without replacement and
/// assigns each trial a side, all from `seed`.
pub fn build_manifest(
    partition: &DifficultyPartition,
    n_trials: usize,
    seed: u64,
    exclusions: &[String],
) -> Result<ExperimentManifest> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("manifest needs at least one trial".into()));
    }
    let excluded: HashSet<&str> = exclusions.iter().map(String::as_str).collect();
    let pool = |ids: Vec<&str>| -> Vec<String> {
        ids.into_iter().filter(|id| !excluded.contains(id)).map(str::to_string).collect()
    };
    let trivial = pool(partition.trivial());
    let impossible = pool(partition.impossible());
    for (kind, have) in [("trivial", trivial.len()), ("impossible", impossible.len())] {
        if have < n_trials {
            return Err(Error::Capacity { kind, needed: n_trials, available: have });
        }
    }
    let pick = |ids: &[String], stream: u64| -> Vec<String> {
        let mut rng = seed::rng_for(seed, &[stream]);
        sample(&mut rng, ids.len(), n_trials).into_iter().map(|i| ids[i].clone()).collect()
    };
    let imp = pick(&impossible, 1);
    let triv = pick(&trivial, 2);
    let mut side_rng = seed::rng_for(seed, &[3]);
    let trials: Vec<Trial> = imp
        .into_iter()
        .zip(triv)
        .enumerate()
        .map(|(index, (impossible, trivial))| Trial {
            index,
            impossible,
            trivial,
            side: if side_rng.random::<bool>() { Side::ImpossibleLeft } else { Side::ImpossibleRight },
        })
        .collect();
    Ok(ExperimentManifest {
        manifest_id: manifest_id(seed, &trials),
        seed,
        n_trials,
        trials,
    })
}
