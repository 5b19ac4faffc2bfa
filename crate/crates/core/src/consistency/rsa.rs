use std::collections::HashMap;
use std::io::Read;
use std::str::FromStr;

use serde::Serialize;

use super::kappa::matrix_csv;
use crate::error::{Error, Result};
use crate::stats;

/// Per-image feature vectors, e.g. activations of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    /// Reads CSV with header `image_id,<dim>,<dim>,...`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let width = reader
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .len();
        if width < 2 {
            return Err(Error::Parse {
                line: 1,
                message: "feature table needs an id column and at least one dimension".into(),
            });
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        message: format!("{v:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(FeatureTable { ids, rows })
    }
}

/// Representational dissimilarity matrix, entry (i, j) = 1 − Pearson(fᵢ, fⱼ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rdm {
    pub ids: Vec<String>,
    values: Vec<f64>,
}

impl Rdm {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    fn upper_triangle(&self, order: &[usize]) -> Vec<f64> {
        let n = order.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.get(order[i], order[j]));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.ids, |i, j| Some(self.get(i, j)))
    }
}

pub fn rdm(features: &FeatureTable) -> Result<Rdm> {
    let n = features.ids.len();
    if n < 2 || features.rows.len() != n {
        return Err(Error::InvalidInput("RDM needs at least two images".into()));
    }
    let dim = features.rows[0].len();
    if dim < 2 {
        return Err(Error::InvalidInput("feature vectors need at least two dimensions".into()));
    }
    for (id, row) in features.ids.iter().zip(&features.rows) {
        if row.len() != dim {
            return Err(Error::InvalidInput(format!("feature vector of {id:?} has wrong length")));
        }
        let first = row[0];
        if row.iter().all(|&v| v == first) {
            return Err(Error::DegenerateFeature(id.clone()));
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let r = stats::pearson(&features.rows[i], &features.rows[j])?;
            let d = (1.0 - r).clamp(0.0, 2.0);
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(Rdm { ids: features.ids.clone(), values })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RsaMethod {
    Pearson,
    #[default]
    Spearman,
}

impl FromStr for RsaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(RsaMethod::Pearson),
            "spearman" => Ok(RsaMethod::Spearman),
            other => Err(Error::InvalidInput(format!("unknown correlation method {other:?}"))),
        }
    }
}

/// Correlates the strictly-upper triangles of two RDMs over the same images.
/// `b` may list the images in a different order.
pub fn rsa_correlation(a: &Rdm, b: &Rdm, method: RsaMethod) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Incompatible("RDMs cover different image sets".into()));
    }
    let b_index: HashMap<&str, usize> =
        b.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let b_order = a
        .ids
        .iter()
        .map(|id| {
            b_index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Incompatible(format!("image {id:?} missing from second RDM")))
        })
        .collect::<Result<Vec<_>>>()?;
    let a_order: Vec<usize> = (0..a.len()).collect();
    let xa = a.upper_triangle(&a_order);
    let xb = b.upper_triangle(&b_order);
    match method {
        RsaMethod::Pearson => stats::pearson(&xa, &xb),
        RsaMethod::Spearman => stats::spearman(&xa, &xb),
    }
}
