//! Synthetic decision cubes with controlled per-image difficulty.
//!
//! Each image gets a success probability `q` drawn once per cube and shared by
//! every simulated model; models then succeed independently with that
//! probability. Shared `q` is what produces agreement beyond chance.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitPlane;
use crate::decision_log::{DecisionCube, ImageInfo, ModelInfo};
use crate::error::{Error, Result};
use crate::seed;

pub const SIM_CONDITION: &str = "sim";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DifficultyRegime {
    /// Every image has success probability `p`.
    Uniform { p: f64 },
    /// A fraction `trivial` of images always succeeds, `impossible` never
    /// does, the rest succeed with probability `p_mid`.
    Dichotomous { trivial: f64, impossible: f64, p_mid: f64 },
    /// Explicit per-image success probabilities.
    Custom { q: Vec<f64> },
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside [0, 1]")))
    }
}

impl DifficultyRegime {
    pub fn validate(&self) -> Result<()> {
        match self {
            DifficultyRegime::Uniform { p } => check_prob("p", *p),
            DifficultyRegime::Dichotomous { trivial, impossible, p_mid } => {
                check_prob("trivial", *trivial)?;
                check_prob("impossible", *impossible)?;
                check_prob("p_mid", *p_mid)?;
                if trivial + impossible > 1.0 + 1e-12 {
                    return Err(Error::Domain(format!(
                        "trivial + impossible = {} exceeds 1",
                        trivial + impossible
                    )));
                }
                Ok(())
            }
            DifficultyRegime::Custom { q } => {
                if q.is_empty() {
                    return Err(Error::Domain("custom regime has no images".into()));
                }
                q.iter().try_for_each(|&v| check_prob("q", v))
            }
        }
    }

    /// (trivial, impossible, p_mid) for the closed-form regimes.
    fn masses(&self) -> Option<(f64, f64, f64)> {
        match *self {
            DifficultyRegime::Uniform { p } => Some((0.0, 0.0, p)),
            DifficultyRegime::Dichotomous { trivial, impossible, p_mid } => {
                Some((trivial, impossible, p_mid))
            }
            DifficultyRegime::Custom { .. } => None,
        }
    }

    /// Draws the success probability of image `j`.
    fn draw_q<R: Rng>(&self, j: usize, rng: &mut R) -> f64 {
        match self {
            DifficultyRegime::Uniform { p } => *p,
            DifficultyRegime::Dichotomous { trivial, impossible, p_mid } => {
                let u: f64 = rng.random();
                if u < *trivial {
                    1.0
                } else if u < trivial + impossible {
                    0.0
                } else {
                    *p_mid
                }
            }
            DifficultyRegime::Custom { q } => q[j],
        }
    }
}

/// Simulates one epoch (epoch 0) of `models` decision makers on `images`
/// images. Ground truth is label 0; a wrong decision predicts label 1.
pub fn simulate_cube(
    regime: &DifficultyRegime,
    models: usize,
    images: usize,
    seed: u64,
) -> Result<DecisionCube> {
    regime.validate()?;
    if models == 0 || images == 0 {
        return Err(Error::Domain("need at least one model and one image".into()));
    }
    if let DifficultyRegime::Custom { q } = regime {
        if q.len() != images {
            return Err(Error::Domain(format!(
                "custom regime lists {} images, asked for {images}",
                q.len()
            )));
        }
    }
    let columns: Vec<Vec<bool>> = (0..images)
        .into_par_iter()
        .map(|j| {
            let mut rng = seed::rng_for(seed, &[j as u64]);
            let q = regime.draw_q(j, &mut rng);
            (0..models).map(|_| rng.random::<f64>() < q).collect()
        })
        .collect();
    let mut planes = vec![BitPlane::zeros(images); models];
    let mut predictions = vec![1u32; models * images];
    for (j, col) in columns.iter().enumerate() {
        for (m, &ok) in col.iter().enumerate() {
            if ok {
                planes[m].set(j, true);
                predictions[m * images + j] = 0;
            }
        }
    }
    DecisionCube::from_parts(
        (0..models)
            .map(|m| ModelInfo { id: format!("sim{m:02}"), condition: SIM_CONDITION.into() })
            .collect(),
        vec![0],
        (0..images)
            .map(|j| ImageInfo { id: format!("img{j:06}"), true_label: 0 })
            .collect(),
        planes,
        Some(predictions),
    )
}

/// Closed-form population κ between two models of the regime.
pub fn expected_kappa(regime: &DifficultyRegime) -> Result<f64> {
    regime.validate()?;
    let (a, b, pm) = regime
        .masses()
        .ok_or_else(|| Error::Domain("expected kappa needs a uniform or dichotomous regime".into()))?;
    let mid = 1.0 - a - b;
    let p = a + mid * pm;
    let c_obs = a + b + mid * (pm * pm + (1.0 - pm) * (1.0 - pm));
    let c_exp = p * p + (1.0 - p) * (1.0 - p);
    if (1.0 - c_exp).abs() < 1e-15 {
        return Err(Error::UndefinedKappa { c_obs });
    }
    Ok((c_obs - c_exp) / (1.0 - c_exp))
}

/// Population fraction of images that all or none of `models` get right.
pub fn expected_ddd_index(regime: &DifficultyRegime, models: u32) -> Result<f64> {
    regime.validate()?;
    let (a, b, pm) = regime
        .masses()
        .ok_or_else(|| Error::Domain("needs a uniform or dichotomous regime".into()))?;
    let m = models as i32;
    Ok(a + b + (1.0 - a - b) * (pm.powi(m) + (1.0 - pm).powi(m)))
}
