use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::record::DecisionRecord;
use crate::bits::BitPlane;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModelInfo {
    pub id: String,
    pub condition: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImageInfo {
    pub id: String,
    pub true_label: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelAccuracy {
    pub model_id: String,
    pub epoch: u32,
    pub accuracy: f64,
}

/// Dense model × epoch × image correctness, with optional predicted labels.
///
/// Immutable once built. Planes are stored model-major then epoch, each plane
/// holding one bit per image in image order.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionCube {
    models: Vec<ModelInfo>,
    epochs: Vec<u32>,
    images: Vec<ImageInfo>,
    planes: Vec<BitPlane>,
    predictions: Option<Vec<u32>>,
}

impl DecisionCube {
    /// Builds a cube from already-dense parts. `planes` is indexed
    /// `model * epochs.len() + epoch`; `predictions`, when given, is indexed
    /// `(model * epochs.len() + epoch) * images.len() + image`.
    pub fn from_parts(
        models: Vec<ModelInfo>,
        epochs: Vec<u32>,
        images: Vec<ImageInfo>,
        planes: Vec<BitPlane>,
        predictions: Option<Vec<u32>>,
    ) -> Result<Self> {
        if models.is_empty() || epochs.is_empty() || images.is_empty() {
            return Err(Error::InvalidInput(
                "cube needs at least one model, epoch and image".into(),
            ));
        }
        if epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("epochs must be strictly increasing".into()));
        }
        let mut ids = HashSet::new();
        if let Some(m) = models.iter().find(|m| !ids.insert(m.id.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate model id {:?}", m.id)));
        }
        let mut ids = HashSet::new();
        if let Some(im) = images.iter().find(|im| !ids.insert(im.id.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate image id {:?}", im.id)));
        }
        let n_planes = models.len() * epochs.len();
        if planes.len() != n_planes || planes.iter().any(|p| p.len() != images.len()) {
            return Err(Error::InvalidInput("plane dimensions do not match index lists".into()));
        }
        if let Some(pred) = &predictions {
            if pred.len() != n_planes * images.len() {
                return Err(Error::InvalidInput("prediction array has wrong length".into()));
            }
            for (p, plane) in planes.iter().enumerate() {
                let row = &pred[p * images.len()..(p + 1) * images.len()];
                for (i, im) in images.iter().enumerate() {
                    if plane.get(i) != (row[i] == im.true_label) {
                        return Err(Error::Inconsistent(format!(
                            "correctness bit disagrees with prediction for image {:?}",
                            im.id
                        )));
                    }
                }
            }
        }
        Ok(DecisionCube {
            models,
            epochs,
            images,
            planes,
            predictions,
        })
    }

    pub fn models(&self) -> &[ModelInfo] {
        &self.models
    }

    pub fn epochs(&self) -> &[u32] {
        &self.epochs
    }

    pub fn images(&self) -> &[ImageInfo] {
        &self.images
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn n_images(&self) -> usize {
        self.images.len()
    }

    pub fn last_epoch(&self) -> u32 {
        *self.epochs.last().expect("cube has at least one epoch")
    }

    pub fn has_predictions(&self) -> bool {
        self.predictions.is_some()
    }

    pub fn model_index(&self, id: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::lookup("model", id))
    }

    pub fn epoch_index(&self, epoch: u32) -> Result<usize> {
        self.epochs
            .binary_search(&epoch)
            .map_err(|_| Error::lookup("epoch", epoch))
    }

    pub fn image_index_map(&self) -> HashMap<&str, usize> {
        self.images
            .iter()
            .enumerate()
            .map(|(i, im)| (im.id.as_str(), i))
            .collect()
    }

    /// Resolves image ids to indices, failing on the first unknown id.
    pub fn image_indices<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        let map = self.image_index_map();
        ids.iter()
            .map(|id| {
                map.get(id.as_ref())
                    .copied()
                    .ok_or_else(|| Error::lookup("image", id.as_ref()))
            })
            .collect()
    }

    /// Correctness plane by model and epoch index.
    pub fn plane(&self, model: usize, epoch: usize) -> &BitPlane {
        &self.planes[model * self.epochs.len() + epoch]
    }

    pub fn planes(&self) -> &[BitPlane] {
        &self.planes
    }

    pub fn is_correct(&self, model: usize, epoch: usize, image: usize) -> bool {
        self.plane(model, epoch).get(image)
    }

    /// Predicted labels for one (model, epoch) plane, if stored.
    pub fn predictions(&self, model: usize, epoch: usize) -> Option<&[u32]> {
        let n = self.images.len();
        let p = model * self.epochs.len() + epoch;
        self.predictions.as_ref().map(|v| &v[p * n..(p + 1) * n])
    }

    pub fn raw_predictions(&self) -> Option<&[u32]> {
        self.predictions.as_deref()
    }

    pub fn accuracy_of(&self, model_id: &str, epoch: u32) -> Result<ModelAccuracy> {
        let m = self.model_index(model_id)?;
        let e = self.epoch_index(epoch)?;
        Ok(ModelAccuracy {
            model_id: model_id.to_string(),
            epoch,
            accuracy: self.plane(m, e).count_ones() as f64 / self.n_images() as f64,
        })
    }

    /// Expands the cube back into records. Needs stored predictions.
    pub fn to_records(&self) -> Result<Vec<DecisionRecord>> {
        if self.predictions.is_none() {
            return Err(Error::MissingPredictions("record export"));
        }
        let mut out = Vec::with_capacity(self.planes.len() * self.images.len());
        for (m, model) in self.models.iter().enumerate() {
            for (e, &epoch) in self.epochs.iter().enumerate() {
                let preds = self.predictions(m, e).expect("checked above");
                for (im, &pred) in self.images.iter().zip(preds) {
                    out.push(DecisionRecord {
                        model_id: model.id.clone(),
                        condition: model.condition.clone(),
                        epoch,
                        image_id: im.id.clone(),
                        true_label: im.true_label,
                        predicted_label: pred,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Assembles a dense cube from a full (model, epoch, image) grid of records.
///
/// Models and images keep first-appearance order; epochs are sorted.
pub fn assemble_cube(records: &[DecisionRecord]) -> Result<DecisionCube> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records".into()));
    }
    let mut models: Vec<ModelInfo> = Vec::new();
    let mut model_idx: HashMap<&str, usize> = HashMap::new();
    let mut images: Vec<ImageInfo> = Vec::new();
    let mut image_idx: HashMap<&str, usize> = HashMap::new();
    let mut epochs: Vec<u32> = Vec::new();

    for r in records {
        match model_idx.get(r.model_id.as_str()) {
            Some(&m) if models[m].condition != r.condition => {
                return Err(Error::Inconsistent(format!(
                    "model {:?} logged under conditions {:?} and {:?}",
                    r.model_id, models[m].condition, r.condition
                )));
            }
            Some(_) => {}
            None => {
                model_idx.insert(&r.model_id, models.len());
                models.push(ModelInfo {
                    id: r.model_id.clone(),
                    condition: r.condition.clone(),
                });
            }
        }
        match image_idx.get(r.image_id.as_str()) {
            Some(&i) if images[i].true_label != r.true_label => {
                return Err(Error::Inconsistent(format!(
                    "image {:?} has true labels {} and {}",
                    r.image_id, images[i].true_label, r.true_label
                )));
            }
            Some(_) => {}
            None => {
                image_idx.insert(&r.image_id, images.len());
                images.push(ImageInfo {
                    id: r.image_id.clone(),
                    true_label: r.true_label,
                });
            }
        }
        epochs.push(r.epoch);
    }
    epochs.sort_unstable();
    epochs.dedup();

    let (nm, ne, ni) = (models.len(), epochs.len(), images.len());
    const UNSET: u32 = u32::MAX;
    let mut preds = vec![UNSET; nm * ne * ni];
    let mut filled = vec![false; nm * ne * ni];
    for r in records {
        let m = model_idx[r.model_id.as_str()];
        let e = epochs.binary_search(&r.epoch).expect("epoch collected");
        let i = image_idx[r.image_id.as_str()];
        let at = (m * ne + e) * ni + i;
        if filled[at] {
            return Err(Error::Duplicate {
                line: 0,
                model_id: r.model_id.clone(),
                epoch: r.epoch,
                image_id: r.image_id.clone(),
            });
        }
        filled[at] = true;
        preds[at] = r.predicted_label;
    }
    if let Some(at) = filled.iter().position(|f| !f) {
        let (p, i) = (at / ni, at % ni);
        let (m, e) = (p / ne, p % ne);
        return Err(Error::Incomplete {
            model_id: models[m].id.clone(),
            epoch: epochs[e],
            image_id: images[i].id.clone(),
        });
    }
    let planes = (0..nm * ne)
        .map(|p| {
            let mut plane = BitPlane::zeros(ni);
            for (i, im) in images.iter().enumerate() {
                if preds[p * ni + i] == im.true_label {
                    plane.set(i, true);
                }
            }
            plane
        })
        .collect();
    DecisionCube::from_parts(models, epochs, images, planes, Some(preds))
}
