//! Predictions CSV: `fname,label` optionally followed by `p0..p11`.

use std::path::Path;

use speechcmd_core::dataset::{ClassLabel, NUM_CLASSES};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub fname: String,
    pub label: ClassLabel,
    pub probs: Option<[f32; NUM_CLASSES]>,
}

fn header(with_probs: bool) -> Vec<String> {
    let mut h = vec!["fname".to_string(), "label".to_string()];
    if with_probs {
        h.extend((0..NUM_CLASSES).map(|i| format!("p{i}")));
    }
    h
}

/// Probabilities are written with Rust's shortest round-trip formatting, so
/// reading them back is exact.
pub fn to_string(rows: &[PredictionRow]) -> String {
    let with_probs = rows.iter().any(|r| r.probs.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(with_probs)).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.fname.clone(), r.label.name().to_string()];
        if with_probs {
            let p = r.probs.unwrap_or([f32::NAN; NUM_CLASSES]);
            rec.extend(p.iter().map(|v| v.to_string()));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn from_str(text: &str, origin: &Path) -> Result<Vec<PredictionRow>> {
    let csv_err = |source| Error::Csv { path: origin.to_path_buf(), source };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let with_probs = if h == header(false) {
        false
    } else if h == header(true) {
        true
    } else {
        return Err(Error::format("predictions", "expected header fname,label[,p0..p11]"));
    };
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let label = ClassLabel::from_name(&rec[1])?;
        let probs = if with_probs {
            let mut p = [0.0f32; NUM_CLASSES];
            for (i, v) in p.iter_mut().enumerate() {
                *v = rec[2 + i].parse().map_err(|_| {
                    Error::format("predictions", format!("row {}: bad probability p{i}", line + 2))
                })?;
            }
            Some(p)
        } else {
            None
        };
        rows.push(PredictionRow { fname: rec[0].to_string(), label, probs });
    }
    Ok(rows)
}

pub fn write(rows: &[PredictionRow], path: &Path) -> Result<()> {
    std::fs::write(path, to_string(rows)).at(path)
}

pub fn read(path: &Path) -> Result<Vec<PredictionRow>> {
    from_str(&std::fs::read_to_string(path).at(path)?, path)
}
