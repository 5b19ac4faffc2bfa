use std::collections::BTreeMap;

use serde::Serialize;

use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassStat {
    pub label: u32,
    pub images: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassAccuracy {
    /// Sorted by label.
    pub classes: Vec<ClassStat>,
    /// Best classes first; ties by smaller label.
    pub top: Vec<u32>,
    /// Worst classes first; ties by smaller label.
    pub bottom: Vec<u32>,
    pub warning: Option<String>,
}

/// Per-class accuracy pooled over the selected models at one epoch.
pub fn class_accuracy(
    cube: &DecisionCube,
    epoch: u32,
    models: Option<&[String]>,
    k: usize,
) -> Result<ClassAccuracy> {
    let e = cube.epoch_index(epoch)?;
    let selected: Vec<usize> = match models {
        None => (0..cube.n_models()).collect(),
        Some([]) => return Err(Error::InvalidInput("model subset is empty".into())),
        Some(ids) => ids.iter().map(|id| cube.model_index(id)).collect::<Result<_>>()?,
    };
    let mut tally: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (i, im) in cube.images().iter().enumerate() {
        let hits = selected.iter().filter(|&&m| cube.is_correct(m, e, i)).count();
        let entry = tally.entry(im.true_label).or_default();
        entry.0 += 1;
        entry.1 += hits;
    }
    let classes: Vec<ClassStat> = tally
        .into_iter()
        .map(|(label, (images, hits))| ClassStat {
            label,
            images,
            accuracy: hits as f64 / (images * selected.len()) as f64,
        })
        .collect();
    let (k, warning) = if k > classes.len() {
        (
            classes.len(),
            Some(format!("k = {k} exceeds {} classes; clamped", classes.len())),
        )
    } else {
        (k, None)
    };
    let mut desc: Vec<&ClassStat> = classes.iter().collect();
    desc.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy).then(a.label.cmp(&b.label)));
    let mut asc: Vec<&ClassStat> = classes.iter().collect();
    asc.sort_by(|a, b| a.accuracy.total_cmp(&b.accuracy).then(a.label.cmp(&b.label)));
    Ok(ClassAccuracy {
        top: desc.iter().take(k).map(|c| c.label).collect(),
        bottom: asc.iter().take(k).map(|c| c.label).collect(),
        classes,
        warning,
    })
}
