//! CSV and JSON encodings of [`CompactSet`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CompactSet;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    dim: usize,
    resolution: f64,
    points: Vec<Vec<f64>>,
}

/// Writes one row per point under an `x1..xn` header.
pub fn write_csv<W: Write>(set: &CompactSet, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=set.dim()).map(|k| format!("x{k}")))?;
    for p in set.points() {
        out.write_record(p.iter().map(|v| format!("{v:e}")))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_csv`]. Resolution is not stored in
/// CSV and must be supplied.
pub fn read_csv<R: Read>(r: R, resolution: f64) -> Result<CompactSet> {
    let mut rdr = csv::Reader::from_reader(r);
    let dim = rdr.headers()?.len();
    let mut data = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim {
            return Err(Error::Parse(format!(
                "row {} has {} columns, header has {dim}",
                line + 2,
                rec.len()
            )));
        }
        for field in rec.iter() {
            data.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {field:?}: {e}", line + 2)))?,
            );
        }
    }
    CompactSet::from_flat(dim, data, resolution)
}

pub fn to_json(set: &CompactSet) -> Result<String> {
    let doc = SetDoc {
        dim: set.dim(),
        resolution: set.resolution(),
        points: set.to_rows(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<CompactSet> {
    let doc: SetDoc = serde_json::from_str(text)?;
    let set = CompactSet::new(doc.dim, &doc.points)?;
    CompactSet::from_flat(doc.dim, set.as_flat().to_vec(), doc.resolution)
}
