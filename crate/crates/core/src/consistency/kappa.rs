use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitPlane;
use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};

/// κ together with the quantities it is built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaResult {
    /// Fraction of items where both are correct or both are wrong.
    pub c_obs: f64,
    /// Agreement expected from the marginal accuracies alone.
    pub c_exp: f64,
    pub kappa: f64,
    pub p_i: f64,
    pub p_j: f64,
}

/// κ from raw counts: `n` items, `correct_i`/`correct_j` successes of each
/// decision maker and `agreements` positions with equal outcome.
pub fn kappa_from_counts(
    n: usize,
    correct_i: usize,
    correct_j: usize,
    agreements: usize,
) -> Result<KappaResult> {
    if n == 0 {
        return Err(Error::InvalidInput("kappa needs at least one item".into()));
    }
    let nf = n as f64;
    let p_i = correct_i as f64 / nf;
    let p_j = correct_j as f64 / nf;
    let c_obs = agreements as f64 / nf;
    // Integer numerator of c_exp·n² so the degenerate case is detected exactly.
    let exp_num = (correct_i * correct_j + (n - correct_i) * (n - correct_j)) as u128;
    if exp_num == (n as u128) * (n as u128) {
        return Err(Error::UndefinedKappa { c_obs });
    }
    // Integer numerators, one rounding each: hand examples come out exact.
    let nn = (n as u128) * (n as u128);
    let c_exp = exp_num as f64 / nn as f64;
    let kappa = (agreements as i128 * n as i128 - exp_num as i128) as f64
        / (nn - exp_num) as f64;
    Ok(KappaResult {
        c_obs,
        c_exp,
        kappa,
        p_i,
        p_j,
    })
}

/// Error consistency between two binary correctness vectors.
pub fn error_consistency(a: &[bool], b: &[bool]) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "correctness vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let ca = a.iter().filter(|&&x| x).count();
    let cb = b.iter().filter(|&&x| x).count();
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    kappa_from_counts(a.len(), ca, cb, agree)
}

pub fn kappa_planes(a: &BitPlane, b: &BitPlane) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("plane length mismatch".into()));
    }
    kappa_from_counts(a.len(), a.count_ones(), b.count_ones(), a.count_agreements(b))
}

/// Symmetric κ matrix; `None` marks pairs whose κ is undefined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl KappaMatrix {
    /// Builds the matrix from per-item correctness rows. Diagonal is 1.
    pub fn from_planes(labels: Vec<String>, planes: &[&BitPlane]) -> KappaMatrix {
        let n = planes.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let cells: Vec<Option<f64>> = pairs
            .par_iter()
            .map(|&(i, j)| kappa_planes(planes[i], planes[j]).ok().map(|k| k.kappa))
            .collect();
        let mut values = vec![vec![None; n]; n];
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = Some(1.0);
        }
        for (&(i, j), v) in pairs.iter().zip(cells) {
            values[i][j] = v;
            values[j][i] = v;
        }
        KappaMatrix { labels, values }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Mean over defined strictly-upper-triangle cells.
    pub fn mean_off_diagonal(&self) -> Option<f64> {
        let vals: Vec<f64> = (0..self.len())
            .flat_map(|i| (i + 1..self.len()).filter_map(move |j| self.values[i][j]))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// CSV with id headers, six decimals, `NA` for undefined cells.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.labels, |i, j| self.values[i][j])
    }
}

pub(crate) fn matrix_csv(labels: &[String], cell: impl Fn(usize, usize) -> Option<f64>) -> String {
    let mut out = String::from("id");
    for l in labels {
        out.push(',');
        out.push_str(&csv_field(l));
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&csv_field(l));
        for j in 0..labels.len() {
            match cell(i, j) {
                Some(v) => write!(out, ",{v:.6}").expect("string write"),
                None => out.push_str(",NA"),
            }
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Pairwise κ between all models at one epoch.
pub fn pairwise_kappa_matrix(cube: &DecisionCube, epoch: u32) -> Result<KappaMatrix> {
    let e = cube.epoch_index(epoch)?;
    if cube.n_models() < 2 {
        return Err(Error::InvalidInput("need at least two models".into()));
    }
    let planes: Vec<&BitPlane> = (0..cube.n_models()).map(|m| cube.plane(m, e)).collect();
    let labels = cube.models().iter().map(|m| m.id.clone()).collect();
    Ok(KappaMatrix::from_planes(labels, &planes))
}

/// Mean κ over all pairs of models sharing `condition`. A single-model group
/// reports 1. Undefined pairs are skipped.
pub fn within_condition_consistency(
    cube: &DecisionCube,
    epoch: u32,
    condition: &str,
) -> Result<f64> {
    let e = cube.epoch_index(epoch)?;
    let members: Vec<usize> = cube
        .models()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.condition == condition)
        .map(|(i, _)| i)
        .collect();
    match members.len() {
        0 => Err(Error::lookup("condition", condition)),
        1 => Ok(1.0),
        _ => {
            let mut sum = 0.0;
            let mut n = 0usize;
            let mut last_undefined = None;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    match kappa_planes(cube.plane(i, e), cube.plane(j, e)) {
                        Ok(k) => {
                            sum += k.kappa;
                            n += 1;
                        }
                        Err(err @ Error::UndefinedKappa { .. }) => last_undefined = Some(err),
                        Err(err) => return Err(err),
                    }
                }
            }
            match (n, last_undefined) {
                (0, Some(err)) => Err(err),
                _ => Ok(sum / n as f64),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision_log::{ImageInfo, ModelInfo};

    fn bools(ones: &[usize], n: usize) -> Vec<bool> {
        (1..=n).map(|i| ones.contains(&i)).collect()
    }

    #[test]
    fn hand_enumerated_example() {
        // a right on 1..8, b right on 1..6, 9, 10: agreements are items 1..6.
        let a = bools(&[1, 2, 3, 4, 5, 6, 7, 8], 10);
        let b = bools(&[1, 2, 3, 4, 5, 6, 9, 10], 10);
        let k = error_consistency(&a, &b).unwrap();
        assert_eq!(k.c_obs, 0.6);
        assert_eq!(k.c_exp, 0.68);
        assert_eq!(k.kappa, -0.25);
        assert_eq!((k.p_i, k.p_j), (0.8, 0.8));
    }

    #[test]
    fn identical_is_one() {
        let a = bools(&[1, 2, 3, 4, 5, 6, 7, 8], 10);
        assert_eq!(error_consistency(&a, &a).unwrap().kappa, 1.0);
    }

    #[test]
    fn complement_is_minus_one() {
        let a = bools(&[1, 2, 3, 4, 5], 10);
        let b: Vec<bool> = a.iter().map(|x| !x).collect();
        let k = error_consistency(&a, &b).unwrap();
        assert_eq!(k.c_obs, 0.0);
        assert_eq!(k.kappa, -1.0);
    }

    #[test]
    fn degenerate_marginals_are_undefined() {
        let ones = vec![true; 5];
        let zeros = vec![false; 5];
        assert!(matches!(
            error_consistency(&ones, &ones),
            Err(Error::UndefinedKappa { c_obs }) if c_obs == 1.0
        ));
        assert!(matches!(
            error_consistency(&zeros, &zeros),
            Err(Error::UndefinedKappa { .. })
        ));
        // One all-correct, one all-wrong: c_exp = 0, κ defined.
        assert_eq!(error_consistency(&ones, &zeros).unwrap().kappa, 0.0);
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(error_consistency(&[true], &[true, false]).is_err());
        assert!(matches!(error_consistency(&[], &[]), Err(Error::InvalidInput(_))));
    }

    fn cube_from(rows: &[(&str, &str, Vec<bool>)]) -> DecisionCube {
        let n = rows[0].2.len();
        let images = (0..n)
            .map(|i| ImageInfo {
                id: format!("i{i}"),
                true_label: 0,
            })
            .collect();
        let models = rows
            .iter()
            .map(|(id, c, _)| ModelInfo {
                id: id.to_string(),
                condition: c.to_string(),
            })
            .collect();
        let planes = rows.iter().map(|r| BitPlane::from_bools(&r.2)).collect();
        DecisionCube::from_parts(models, vec![0], images, planes, None).unwrap()
    }

    #[test]
    fn matrix_identical_and_complement() {
        let a = vec![true, false, true, false];
        let c: Vec<bool> = a.iter().map(|x| !x).collect();
        let cube = cube_from(&[("a", "x", a.clone()), ("b", "x", a), ("c", "y", c)]);
        let m = pairwise_kappa_matrix(&cube, 0).unwrap();
        assert_eq!(m.get(0, 1), Some(1.0));
        assert_eq!(m.get(0, 2), Some(-1.0));
        assert_eq!(m.get(2, 1), Some(-1.0));
        assert_eq!(m.get(1, 1), Some(1.0));
        assert_eq!(
            m.to_csv(),
            "id,a,b,c\na,1.000000,1.000000,-1.000000\nb,1.000000,1.000000,-1.000000\nc,-1.000000,-1.000000,1.000000\n"
        );
        assert_eq!(within_condition_consistency(&cube, 0, "x").unwrap(), 1.0);
        assert_eq!(within_condition_consistency(&cube, 0, "y").unwrap(), 1.0);
        assert!(matches!(
            within_condition_consistency(&cube, 0, "zzz"),
            Err(Error::Lookup { .. })
        ));
    }

    #[test]
    fn undefined_cell_is_na() {
        let cube = cube_from(&[("a", "x", vec![true; 3]), ("b", "x", vec![true; 3])]);
        let m = pairwise_kappa_matrix(&cube, 0).unwrap();
        assert_eq!(m.get(0, 1), None);
        assert!(m.to_csv().contains(",NA"));
        assert!(matches!(
            within_condition_consistency(&cube, 0, "x"),
            Err(Error::UndefinedKappa { .. })
        ));
    }

    #[test]
    fn single_model_matrix_rejected() {
        let cube = cube_from(&[("a", "x", vec![true, false])]);
        assert!(pairwise_kappa_matrix(&cube, 0).is_err());
    }
}
