use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::binomial_pmf;

/// Per-image number of correct models within a (epoch, model subset) slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectCounts {
    pub models: usize,
    pub image_ids: Vec<String>,
    pub counts: Vec<u32>,
}

impl CorrectCounts {
    pub fn histogram(&self) -> DifficultyHistogram {
        let mut counts = vec![0u64; self.models + 1];
        for &c in &self.counts {
            counts[c as usize] += 1;
        }
        DifficultyHistogram { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Counts correct models per image at `epoch`. `models = None` uses every model.
pub fn correct_counts(
    cube: &DecisionCube,
    epoch: u32,
    models: Option<&[String]>,
) -> Result<CorrectCounts> {
    let e = cube.epoch_index(epoch)?;
    let selected: Vec<usize> = match models {
        None => (0..cube.n_models()).collect(),
        Some(ids) if ids.is_empty() => {
            return Err(Error::InvalidInput("model subset is empty".into()))
        }
        Some(ids) => ids.iter().map(|id| cube.model_index(id)).collect::<Result<_>>()?,
    };
    let mut counts = vec![0u32; cube.n_images()];
    for &m in &selected {
        for (c, bit) in counts.iter_mut().zip(cube.plane(m, e).iter()) {
            *c += u32::from(bit);
        }
    }
    Ok(CorrectCounts {
        models: selected.len(),
        image_ids: cube.images().iter().map(|im| im.id.clone()).collect(),
        counts,
    })
}

/// `counts[k]` is the number of images answered correctly by exactly k models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DifficultyHistogram {
    pub counts: Vec<u64>,
}

impl DifficultyHistogram {
    pub fn models(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fractions(&self) -> Vec<f64> {
        let t = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Axis label for bin k: "None", "All", or the count itself.
    pub fn bin_label(&self, k: usize) -> String {
        match k {
            0 => "None".into(),
            k if k == self.models() => "All".into(),
            k => k.to_string(),
        }
    }
}

pub fn correct_count_histogram(
    cube: &DecisionCube,
    epoch: u32,
    models: Option<&[String]>,
) -> Result<DifficultyHistogram> {
    Ok(correct_counts(cube, epoch, models)?.histogram())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMode {
    /// pmf scaled to the given total.
    Exact { total: u64 },
    /// Correct-counts of `images` independent images.
    Sampled { images: u64, seed: u64 },
}

/// Binomial baseline over bins 0..=M (expected or sampled image counts).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Baseline {
    pub counts: Vec<f64>,
}

impl Baseline {
    pub fn normalized(&self) -> Vec<f64> {
        let s: f64 = self.counts.iter().sum();
        self.counts.iter().map(|c| c / s).collect()
    }
}

/// Histogram expected if `models` independent classifiers each succeeded with
/// probability `p` on every image.
pub fn binomial_baseline(models: usize, p: f64, mode: BaselineMode) -> Result<Baseline> {
    if models == 0 {
        return Err(Error::Domain("baseline needs at least one model".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let counts = match mode {
        BaselineMode::Exact { total } => (0..=models as u64)
            .map(|k| binomial_pmf(k, models as u64, p) * total as f64)
            .collect(),
        BaselineMode::Sampled { images, seed } => {
            let draws: Vec<usize> = (0..images)
                .into_par_iter()
                .map(|j| {
                    let mut rng = seed::rng_for(seed, &[j]);
                    (0..models).filter(|_| rng.random::<f64>() < p).count()
                })
                .collect();
            let mut counts = vec![0.0; models + 1];
            for k in draws {
                counts[k] += 1.0;
            }
            counts
        }
    };
    Ok(Baseline { counts })
}

/// Histogram restricted to the listed images.
pub fn overlay_histogram<S: AsRef<str>>(
    counts: &CorrectCounts,
    subset: &[S],
) -> Result<DifficultyHistogram> {
    let index: std::collections::HashMap<&str, usize> = counts
        .image_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut hist = vec![0u64; counts.models + 1];
    for id in subset {
        let i = index
            .get(id.as_ref())
            .ok_or_else(|| Error::lookup("image", id.as_ref()))?;
        hist[counts.counts[*i] as usize] += 1;
    }
    Ok(DifficultyHistogram { counts: hist })
}

/// CSV with columns `k,count,baseline_count` and, with an overlay,
/// `overlay_count`.
pub fn histogram_csv(
    hist: &DifficultyHistogram,
    baseline: &Baseline,
    overlay: Option<&DifficultyHistogram>,
) -> String {
    let mut out = String::from("k,count,baseline_count");
    if overlay.is_some() {
        out.push_str(",overlay_count");
    }
    out.push('\n');
    for (k, &c) in hist.counts.iter().enumerate() {
        let b = baseline.counts.get(k).copied().unwrap_or(0.0);
        write!(out, "{k},{c},{b:.6}").expect("string write");
        if let Some(o) = overlay {
            write!(out, ",{}", o.counts.get(k).copied().unwrap_or(0)).expect("string write");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::total_variation;
    use crate::testutil::cube;

    #[test]
    fn all_correct() {
        let c = cube(&[vec![true; 5], vec![true; 5], vec![true; 5]]);
        assert_eq!(correct_count_histogram(&c, 0, None).unwrap().counts, vec![0, 0, 0, 5]);
    }

    #[test]
    fn one_right_one_wrong() {
        let c = cube(&[vec![true; 4], vec![false; 4]]);
        let h = correct_count_histogram(&c, 0, None).unwrap();
        assert_eq!(h.counts, vec![0, 4, 0]);
        assert_eq!(h.bin_label(0), "None");
        assert_eq!(h.bin_label(1), "1");
        assert_eq!(h.bin_label(2), "All");
    }

    #[test]
    fn model_subset() {
        let c = cube(&[vec![true; 4], vec![false; 4]]);
        let h = correct_count_histogram(&c, 0, Some(&["m1".to_string()])).unwrap();
        assert_eq!(h.counts, vec![4, 0]);
        assert!(correct_count_histogram(&c, 0, Some(&[])).is_err());
        assert!(correct_count_histogram(&c, 0, Some(&["nope".to_string()])).is_err());
    }

    #[test]
    fn exact_baseline() {
        let b = binomial_baseline(13, 0.6905, BaselineMode::Exact { total: 1 }).unwrap();
        assert!((b.counts[13] - 0.00811).abs() < 5e-6);
        let s: f64 = b.counts.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let b = binomial_baseline(13, 1.0, BaselineMode::Exact { total: 100 }).unwrap();
        assert_eq!(b.counts[13], 100.0);
        assert_eq!(b.counts[..13].iter().sum::<f64>(), 0.0);
        let b = binomial_baseline(2, 0.5, BaselineMode::Exact { total: 4 }).unwrap();
        assert_eq!(b.counts, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn sampled_baseline_converges_and_is_deterministic() {
        let mode = BaselineMode::Sampled { images: 50_000, seed: 3 };
        let s = binomial_baseline(13, 0.69, mode).unwrap();
        assert_eq!(s, binomial_baseline(13, 0.69, mode).unwrap());
        let e = binomial_baseline(13, 0.69, BaselineMode::Exact { total: 1 }).unwrap();
        assert!(total_variation(&s.counts, &e.counts) <= 0.02);
        assert_eq!(s.counts.iter().sum::<f64>(), 50_000.0);
    }

    #[test]
    fn bad_baseline_parameters() {
        assert!(binomial_baseline(0, 0.5, BaselineMode::Exact { total: 1 }).is_err());
        assert!(binomial_baseline(3, 1.5, BaselineMode::Exact { total: 1 }).is_err());
    }

    #[test]
    fn overlay_subsets() {
        let c = cube(&[
            vec![true, true, false, false],
            vec![true, false, false, true],
        ]);
        let counts = correct_counts(&c, 0, None).unwrap();
        let full = counts.histogram();
        let all: Vec<String> = counts.image_ids.clone();
        assert_eq!(overlay_histogram(&counts, &all).unwrap(), full);
        assert_eq!(overlay_histogram(&counts, &["i0"]).unwrap().counts, vec![0, 0, 1]);
        assert!(matches!(
            overlay_histogram(&counts, &["zz"]),
            Err(Error::Lookup { .. })
        ));
    }

    #[test]
    fn csv_columns() {
        let h = DifficultyHistogram { counts: vec![1, 2, 3] };
        let b = Baseline { counts: vec![1.5, 3.0, 1.5] };
        assert_eq!(
            histogram_csv(&h, &b, None),
            "k,count,baseline_count\n0,1,1.500000\n1,2,3.000000\n2,3,1.500000\n"
        );
        let o = DifficultyHistogram { counts: vec![0, 1, 0] };
        assert!(histogram_csv(&h, &b, Some(&o)).starts_with("k,count,baseline_count,overlay_count\n0,1,1.500000,0\n"));
    }
}
