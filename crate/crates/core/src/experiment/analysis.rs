use rand::Rng;
use serde::Serialize;

use super::manifest::{Choice, ExperimentManifest};
use crate::bits::BitPlane;
use crate::consistency::KappaMatrix;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats;

/// One observer's per-trial correctness, indexed by manifest trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectResponses {
    pub session_id: String,
    pub observer_id: String,
    pub manifest_id: String,
    pub complete: bool,
    pub correct: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubjectStat {
    pub session_id: String,
    pub observer_id: String,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// One-sided P(X ≥ correct) under chance (p = 0.5).
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub mean: f64,
    /// Sample standard deviation of subject accuracies.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubjectStatistics {
    pub subjects: Vec<SubjectStat>,
    pub group: Option<GroupStats>,
    pub warnings: Vec<String>,
}

/// Accuracy and chance-level p-value per complete session, plus the group
/// summary. Incomplete sessions are skipped with a warning.
pub fn subject_statistics(all: &[SubjectResponses]) -> SubjectStatistics {
    let mut warnings = Vec::new();
    let mut subjects = Vec::new();
    for s in all {
        if !s.complete {
            warnings.push(format!(
                "session {} ({}) is incomplete and was excluded",
                s.session_id, s.observer_id
            ));
            continue;
        }
        let n = s.correct.len();
        let k = s.correct.iter().filter(|&&c| c).count();
        subjects.push(SubjectStat {
            session_id: s.session_id.clone(),
            observer_id: s.observer_id.clone(),
            trials: n,
            correct: k,
            accuracy: k as f64 / n as f64,
            p_value: stats::binomial_tail(k as u64, n as u64, 0.5).expect("k ≤ n"),
        });
    }
    let accs: Vec<f64> = subjects.iter().map(|s| s.accuracy).collect();
    let group = (!accs.is_empty()).then(|| GroupStats {
        mean: stats::mean(&accs),
        sd: stats::sample_sd(&accs),
        min: accs.iter().copied().fold(f64::INFINITY, f64::min),
        max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    if group.is_none() {
        warnings.push("no complete sessions".into());
    }
    SubjectStatistics { subjects, group, warnings }
}

/// Pairwise error consistency between observers who saw the same manifest.
pub fn inter_subject_kappa(subjects: &[SubjectResponses]) -> Result<(KappaMatrix, Option<f64>)> {
    if subjects.len() < 2 {
        return Err(Error::InvalidInput("need at least two subjects".into()));
    }
    let first = &subjects[0];
    if let Some(other) = subjects
        .iter()
        .find(|s| s.manifest_id != first.manifest_id || s.correct.len() != first.correct.len())
    {
        return Err(Error::Incompatible(format!(
            "sessions {} and {} used different manifests",
            first.session_id, other.session_id
        )));
    }
    let planes: Vec<BitPlane> = subjects.iter().map(|s| BitPlane::from_bools(&s.correct)).collect();
    let refs: Vec<&BitPlane> = planes.iter().collect();
    let m = KappaMatrix::from_planes(subjects.iter().map(|s| s.observer_id.clone()).collect(), &refs);
    let mean = m.mean_off_diagonal();
    Ok((m, mean))
}

/// Choices of a simulated observer who picks the impossible image with
/// probability `accuracy`, independently per trial.
pub fn simulated_choices(manifest: &ExperimentManifest, accuracy: f64, seed: u64) -> Vec<Choice> {
    let mut rng = seed::rng_for(seed, &[0x5eed]);
    manifest
        .trials
        .iter()
        .map(|t| {
            let right = t.is_correct(Choice::Right);
            let hit = rng.random::<f64>() < accuracy;
            if hit == right { Choice::Right } else { Choice::Left }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subject(id: &str, correct: Vec<bool>) -> SubjectResponses {
        SubjectResponses {
            session_id: format!("s-{id}"),
            observer_id: id.into(),
            manifest_id: "m".into(),
            complete: true,
            correct,
        }
    }

    fn k_of_n(k: usize, n: usize) -> Vec<bool> {
        (0..n).map(|i| i < k).collect()
    }

    #[test]
    fn single_subject_accuracy() {
        let s = subject_statistics(&[subject("a", k_of_n(121, 149))]);
        assert!((s.subjects[0].accuracy - 0.8121).abs() < 5e-5);
        let g = s.group.unwrap();
        assert_eq!(g.sd, 0.0);
        assert!(s.subjects[0].p_value < 1e-10);
    }

    #[test]
    fn two_subjects_summary() {
        let s = subject_statistics(&[subject("a", k_of_n(8, 10)), subject("b", k_of_n(9, 10))]);
        let g = s.group.unwrap();
        assert!((g.mean - 0.85).abs() < 1e-12);
        assert_eq!((g.min, g.max), (0.8, 0.9));
    }

    #[test]
    fn identical_subjects_zero_sd() {
        let s = subject_statistics(&[subject("a", k_of_n(7, 10)), subject("b", k_of_n(7, 10))]);
        assert_eq!(s.group.unwrap().sd, 0.0);
    }

    #[test]
    fn incomplete_excluded() {
        let mut inc = subject("b", k_of_n(3, 10));
        inc.complete = false;
        let s = subject_statistics(&[subject("a", k_of_n(7, 10)), inc]);
        assert_eq!(s.subjects.len(), 1);
        assert_eq!(s.warnings.len(), 1);
        let none = subject_statistics(&[]);
        assert!(none.group.is_none());
    }

    #[test]
    fn kappa_identical_and_complement() {
        let v = k_of_n(5, 10);
        let (m, mean) = inter_subject_kappa(&[subject("a", v.clone()), subject("b", v.clone())]).unwrap();
        assert_eq!(mean, Some(1.0));
        assert_eq!(m.labels, vec!["a", "b"]);
        let c: Vec<bool> = v.iter().map(|x| !x).collect();
        let (_, mean) = inter_subject_kappa(&[subject("a", v), subject("b", c)]).unwrap();
        assert_eq!(mean, Some(-1.0));
    }

    #[test]
    fn mismatched_manifests() {
        let mut b = subject("b", k_of_n(5, 10));
        b.manifest_id = "other".into();
        assert!(matches!(
            inter_subject_kappa(&[subject("a", k_of_n(5, 10)), b]),
            Err(Error::Incompatible(_))
        ));
    }
}
