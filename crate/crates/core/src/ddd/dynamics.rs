use serde::Serialize;

use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};

/// Change between one logged epoch and the next.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochStep {
    pub from: u32,
    pub to: u32,
    /// `None` when the cube stores no predicted labels.
    pub label_swap_rate: Option<f64>,
    pub correctness_flip_rate: f64,
    pub accuracy_delta: f64,
}

fn step_indices(cube: &DecisionCube, model: &str, epoch: u32) -> Result<(usize, usize, usize)> {
    let m = cube.model_index(model)?;
    let e = cube.epoch_index(epoch)?;
    if e + 1 >= cube.n_epochs() {
        return Err(Error::lookup("epoch following", epoch));
    }
    Ok((m, e, e + 1))
}

/// Fraction of images whose predicted label differs between `epoch` and the
/// next logged epoch.
pub fn label_swap_rate(cube: &DecisionCube, model: &str, epoch: u32) -> Result<f64> {
    let (m, e0, e1) = step_indices(cube, model, epoch)?;
    let (a, b) = match (cube.predictions(m, e0), cube.predictions(m, e1)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingPredictions("label_swap_rate")),
    };
    let swaps = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(swaps as f64 / cube.n_images() as f64)
}

/// Fraction of images whose correctness differs between `epoch` and the next
/// logged epoch.
pub fn correctness_flip_rate(cube: &DecisionCube, model: &str, epoch: u32) -> Result<f64> {
    let (m, e0, e1) = step_indices(cube, model, epoch)?;
    let a = cube.plane(m, e0);
    let b = cube.plane(m, e1);
    Ok((a.len() - a.count_agreements(b)) as f64 / a.len() as f64)
}

pub fn epoch_dynamics(cube: &DecisionCube, model: &str) -> Result<Vec<EpochStep>> {
    let m = cube.model_index(model)?;
    let n = cube.n_images() as f64;
    let epochs = cube.epochs();
    epochs
        .windows(2)
        .enumerate()
        .map(|(e, w)| {
            let acc0 = cube.plane(m, e).count_ones() as f64 / n;
            let acc1 = cube.plane(m, e + 1).count_ones() as f64 / n;
            let label_swap_rate = match label_swap_rate(cube, model, w[0]) {
                Ok(r) => Some(r),
                Err(Error::MissingPredictions(_)) => None,
                Err(err) => return Err(err),
            };
            Ok(EpochStep {
                from: w[0],
                to: w[1],
                label_swap_rate,
                correctness_flip_rate: correctness_flip_rate(cube, model, w[0])?,
                accuracy_delta: acc1 - acc0,
            })
        })
        .collect()
}
