use std::collections::HashSet;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_COLUMNS: [&str; 6] = [
    "model_id",
    "condition",
    "epoch",
    "image_id",
    "true_label",
    "predicted_label",
];

/// One top-1 decision of one model at one epoch on one image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub model_id: String,
    pub condition: String,
    pub epoch: u32,
    pub image_id: String,
    pub true_label: u32,
    pub predicted_label: u32,
}

impl DecisionRecord {
    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "json-lines" => Ok(LogFormat::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown log format {other:?}"))),
        }
    }
}

fn check_tokens(rec: &DecisionRecord, line: u64) -> Result<()> {
    for (name, v) in [
        ("model_id", &rec.model_id),
        ("condition", &rec.condition),
        ("image_id", &rec.image_id),
    ] {
        if v.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("empty {name}"),
            });
        }
    }
    Ok(())
}

/// Parses a decision log. Records come back in input order; the
/// (model, epoch, image) triple must be unique.
pub fn parse_records<R: Read>(input: R, format: LogFormat) -> Result<Vec<DecisionRecord>> {
    let records = match format {
        LogFormat::Csv => parse_csv(input)?,
        LogFormat::Jsonl => parse_jsonl(input)?,
    };
    let mut seen = HashSet::with_capacity(records.len());
    for (line, rec) in &records {
        check_tokens(rec, *line)?;
        if !seen.insert((rec.model_id.as_str(), rec.epoch, rec.image_id.as_str())) {
            return Err(Error::Duplicate {
                line: *line,
                model_id: rec.model_id.clone(),
                epoch: rec.epoch,
                image_id: rec.image_id.clone(),
            });
        }
    }
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn parse_csv<R: Read>(input: R) -> Result<Vec<(u64, DecisionRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().ne(LOG_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header must be {:?}, found {:?}",
                LOG_COLUMNS.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let rec: DecisionRecord = row.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?;
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_jsonl<R: Read>(input: R) -> Result<Vec<(u64, DecisionRecord)>> {
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(input).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(obj) = value.as_object() {
            if let Some(missing) = LOG_COLUMNS.iter().find(|k| !obj.contains_key(**k)) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("missing key {missing:?}"),
                });
            }
        }
        let rec: DecisionRecord = serde_json::from_value(value).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

pub fn write_records_csv<W: Write>(records: &[DecisionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        w.serialize(rec).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "model_id,condition,epoch,image_id,true_label,predicted_label\n";

    fn csv(body: &str) -> Result<Vec<DecisionRecord>> {
        parse_records(format!("{HEADER}{body}").as_bytes(), LogFormat::Csv)
    }

    #[test]
    fn correct_and_incorrect_rows() {
        let recs = csv("m0,base,0,img1,5,5\nm0,base,0,img2,5,3\n").unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].is_correct());
        assert!(!recs[1].is_correct());
        assert_eq!(recs[1].image_id, "img2");
    }

    #[test]
    fn negative_epoch_reports_line() {
        let err = csv("m0,base,0,img1,5,5\nm0,base,-1,img2,5,5\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_row_reports_line() {
        let err = csv("m0,base,0,img1,5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_triple() {
        let err = csv("m0,base,0,img1,5,5\nm0,base,0,img1,5,4\n").unwrap_err();
        assert!(matches!(err, Error::Duplicate { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn wrong_header() {
        let err = parse_records("a,b\n1,2\n".as_bytes(), LogFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn jsonl_rows() {
        let text = concat!(
            r#"{"model_id":"m0","condition":"base","epoch":0,"image_id":"a","true_label":1,"predicted_label":1}"#,
            "\n\n",
            r#"{"model_id":"m0","condition":"base","epoch":0,"image_id":"b","true_label":1,"predicted_label":2}"#,
            "\n"
        );
        let recs = parse_records(text.as_bytes(), LogFormat::Jsonl).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(!recs[1].is_correct());
    }

    #[test]
    fn jsonl_extra_or_missing_keys() {
        let extra = r#"{"model_id":"m0","condition":"base","epoch":0,"image_id":"a","true_label":1,"predicted_label":1,"x":2}"#;
        assert!(matches!(
            parse_records(extra.as_bytes(), LogFormat::Jsonl),
            Err(Error::Parse { line: 1, .. })
        ));
        let missing = r#"{"model_id":"m0","condition":"base","epoch":0,"image_id":"a","true_label":1}"#;
        assert!(matches!(
            parse_records(missing.as_bytes(), LogFormat::Jsonl),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_writer_round_trips() {
        let recs = csv("m0,base,0,img1,5,5\nm1,different_seed,3,img1,5,2\n").unwrap();
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        assert!(buf.starts_with(HEADER.as_bytes()));
        assert_eq!(parse_records(buf.as_slice(), LogFormat::Csv).unwrap(), recs);
    }
}
