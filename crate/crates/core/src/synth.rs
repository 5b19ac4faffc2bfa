//! Synthetic Gaussian-noise classification data with a known difficulty
//! gradient.
//!
//! Class `i` (1-based) draws every pixel of every channel independently from
//! N(128, i²), rounded and clamped to `0..=255`. Neighbouring classes grow
//! harder to tell apart as `i` increases, and the KL divergence between
//! neighbours predicts per-class accuracy.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision_log::DecisionRecord;
use crate::error::{Error, Result};
use crate::seed;

pub const PIXEL_MEAN: f64 = 128.0;
pub const ORACLE_MODEL_ID: &str = "oracle";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub channels: u32,
    pub height: u32,
    pub width: u32,
}

impl ImageShape {
    pub const DESK: ImageShape = ImageShape { channels: 3, height: 32, width: 32 };

    pub fn pixels(&self) -> usize {
        self.channels as usize * self.height as usize * self.width as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn code(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

/// One class of the dataset: index `i ≥ 1` with standard deviation `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianClassSpec {
    pub index: u32,
    pub sigma: f64,
}

impl GaussianClassSpec {
    pub fn new(index: u32) -> Self {
        GaussianClassSpec { index, sigma: f64::from(index) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub classes: u32,
    pub train_per_class: u32,
    pub test_per_class: u32,
    pub shape: ImageShape,
    pub seed: u64,
}

impl GaussianSpec {
    /// Desk-scale defaults: 100 classes, 3×32×32, 500 test images per class.
    pub fn desk(seed: u64) -> Self {
        GaussianSpec {
            classes: 100,
            train_per_class: 20,
            test_per_class: 500,
            shape: ImageShape::DESK,
            seed,
        }
    }

    /// 100 classes, 20,000 train and 50 test images per class at 3×224×224.
    pub fn paper_scale(seed: u64) -> Self {
        GaussianSpec {
            classes: 100,
            train_per_class: 20_000,
            test_per_class: 50,
            shape: ImageShape { channels: 3, height: 224, width: 224 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::InvalidInput("need at least one class".into()));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::InvalidInput("per-class counts must be at least 1".into()));
        }
        if self.shape.pixels() == 0 {
            return Err(Error::InvalidInput("image shape has a zero dimension".into()));
        }
        Ok(())
    }

    pub fn class_table(&self) -> Vec<GaussianClassSpec> {
        (1..=self.classes).map(GaussianClassSpec::new).collect()
    }

    fn count(&self, split: Split) -> u32 {
        match split {
            Split::Train => self.train_per_class,
            Split::Test => self.test_per_class,
        }
    }

    /// Unclamped, unrounded draws for one image.
    pub fn raw_pixels(&self, split: Split, class: u32, index: u32) -> Vec<f64> {
        let mut rng = seed::rng_for(self.seed, &[split.code(), u64::from(class), u64::from(index)]);
        let sigma = f64::from(class);
        (0..self.shape.pixels())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                PIXEL_MEAN + sigma * z
            })
            .collect()
    }

    pub fn image(&self, split: Split, class: u32, index: u32) -> SynthImage {
        let pixels = self
            .raw_pixels(split, class, index)
            .into_iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        SynthImage { class, split, index, pixels }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthImage {
    pub class: u32,
    pub split: Split,
    pub index: u32,
    /// Channel-major (CHW) bytes.
    pub pixels: Vec<u8>,
}

impl SynthImage {
    pub fn id(&self) -> String {
        image_id(self.split, self.class, self.index)
    }
}

pub fn image_id(split: Split, class: u32, index: u32) -> String {
    let s = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    format!("c{class:03}_{s}_{index:05}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: GaussianSpec,
    pub mean: f64,
    pub sigma: Vec<f64>,
    /// One file per class holding its train images then its test images,
    /// each `shape.pixels()` bytes in CHW order.
    pub files: Vec<String>,
}

fn class_file(class: u32) -> String {
    format!("class_{class:03}.bin")
}

/// Writes one raw file per class plus `manifest.json` into `dir`.
pub fn generate_dataset(spec: &GaussianSpec, dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    fs::create_dir_all(dir)?;
    let files: Vec<String> = (1..=spec.classes).map(class_file).collect();
    (1..=spec.classes).into_par_iter().try_for_each(|class| -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(dir.join(class_file(class)))?);
        for split in [Split::Train, Split::Test] {
            for index in 0..spec.count(split) {
                w.write_all(&spec.image(split, class, index).pixels)?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let manifest = DatasetManifest {
        spec: *spec,
        mean: PIXEL_MEAN,
        sigma: spec.class_table().iter().map(|c| c.sigma).collect(),
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// KL(N(0, σ_a²) ‖ N(0, σ_b²)) = ln(σ_b/σ_a) + σ_a²/(2σ_b²) − 1/2.
pub fn kl_gaussian(sigma_a: f64, sigma_b: f64) -> Result<f64> {
    if !(sigma_a > 0.0 && sigma_b > 0.0) {
        return Err(Error::Domain(format!(
            "standard deviations must be positive, got {sigma_a} and {sigma_b}"
        )));
    }
    let r = sigma_a / sigma_b;
    Ok((sigma_b / sigma_a).ln() + r * r / 2.0 - 0.5)
}

/// KL divergence between class `i` and class `i + 1`.
pub fn kl_adjacent(class: u32) -> f64 {
    kl_gaussian(f64::from(class), f64::from(class) + 1.0).expect("class index is at least 1")
}

/// Bayes rule from the sufficient statistic: `n` pixels with
/// `sum_sq = Σ (x − 128)²`. Ties go to the earlier (smaller σ) class.
pub fn oracle_classify_stat(n: usize, sum_sq: f64, classes: &[GaussianClassSpec]) -> u32 {
    let n = n as f64;
    let mut best = classes[0].index;
    let mut best_ll = f64::NEG_INFINITY;
    for c in classes {
        let ll = -n * c.sigma.ln() - sum_sq / (2.0 * c.sigma * c.sigma);
        if ll > best_ll {
            best_ll = ll;
            best = c.index;
        }
    }
    best
}

pub fn oracle_classify(pixels: &[u8], classes: &[GaussianClassSpec]) -> u32 {
    assert!(!classes.is_empty(), "oracle needs at least one class");
    let s: u64 = pixels
        .iter()
        .map(|&p| {
            let d = i64::from(p) - 128;
            (d * d) as u64
        })
        .sum();
    oracle_classify_stat(pixels.len(), s as f64, classes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleEvaluation {
    pub records: Vec<DecisionRecord>,
    /// (class index, accuracy), ascending class.
    pub class_accuracy: Vec<(u32, f64)>,
}

fn oracle_record(class: u32, index: u32, predicted: u32) -> DecisionRecord {
    DecisionRecord {
        model_id: ORACLE_MODEL_ID.into(),
        condition: ORACLE_MODEL_ID.into(),
        epoch: 0,
        image_id: image_id(Split::Test, class, index),
        true_label: class,
        predicted_label: predicted,
    }
}

fn summarize(spec: &GaussianSpec, predictions: Vec<u32>) -> OracleEvaluation {
    let per = spec.test_per_class as usize;
    let mut records = Vec::with_capacity(predictions.len());
    let mut class_accuracy = Vec::with_capacity(spec.classes as usize);
    for (c, chunk) in predictions.chunks(per).enumerate() {
        let class = c as u32 + 1;
        let hits = chunk.iter().filter(|&&p| p == class).count();
        class_accuracy.push((class, hits as f64 / per as f64));
        for (i, &p) in chunk.iter().enumerate() {
            records.push(oracle_record(class, i as u32, p));
        }
    }
    OracleEvaluation { records, class_accuracy }
}

/// Generates the test split in memory and classifies it with the oracle.
pub fn evaluate_oracle(spec: &GaussianSpec) -> Result<OracleEvaluation> {
    spec.validate()?;
    let table = spec.class_table();
    let per = spec.test_per_class;
    let predictions: Vec<u32> = (0..spec.classes * per)
        .into_par_iter()
        .map(|k| {
            let img = spec.image(Split::Test, k / per + 1, k % per);
            oracle_classify(&img.pixels, &table)
        })
        .collect();
    Ok(summarize(spec, predictions))
}

/// Classifies the test split of a dataset written by [`generate_dataset`].
pub fn evaluate_oracle_dir(dir: &Path) -> Result<OracleEvaluation> {
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let spec = manifest.spec;
    spec.validate()?;
    if manifest.files.len() != spec.classes as usize {
        return Err(Error::InvalidInput("manifest file list does not match class count".into()));
    }
    let table = spec.class_table();
    let px = spec.shape.pixels();
    let mut predictions = Vec::with_capacity((spec.classes * spec.test_per_class) as usize);
    for file in &manifest.files {
        let bytes = fs::read(dir.join(file))?;
        let expected = px * (spec.train_per_class + spec.test_per_class) as usize;
        if bytes.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{file}: {} bytes, expected {expected} for the manifest shape",
                bytes.len()
            )));
        }
        let test = &bytes[px * spec.train_per_class as usize..];
        let preds: Vec<u32> = test.par_chunks(px).map(|img| oracle_classify(img, &table)).collect();
        predictions.extend(preds);
    }
    Ok(summarize(&spec, predictions))
}
