//! CSV encoding of a funnel: one row per section point with columns
//! `param, point_index, x1..xn, phi_lo, phi_hi` (the phase window is empty
//! for phase-parameterized funnels).

use std::io::{Read, Write};

use super::{CrossSection, ParamKind, RfSolution};
use crate::error::{Error, Result};
use crate::sets::CompactSet;

pub fn write_csv<W: Write>(sol: &RfSolution, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = sol.first().set.dim();
    let mut header = vec!["param".to_string(), "point_index".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    header.extend(["phi_lo".to_string(), "phi_hi".to_string()]);
    out.write_record(&header)?;
    for s in &sol.slices {
        let (lo, hi) = match s.phase_window {
            Some((lo, hi)) => (format!("{lo:e}"), format!("{hi:e}")),
            None => (String::new(), String::new()),
        };
        for (i, p) in s.set.points().enumerate() {
            let mut row = vec![format!("{:e}", s.param), i.to_string()];
            row.extend(p.iter().map(|v| format!("{v:e}")));
            row.push(lo.clone());
            row.push(hi.clone());
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("row {line}: {field:?}: {e}")))
}

/// Reads the format produced by [`write_csv`]. Rows of one section must be
/// contiguous; sections must appear in increasing parameter order.
pub fn read_csv<R: Read>(r: R, kind: ParamKind, resolution: f64) -> Result<RfSolution> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let width = header.len();
    if width < 5 || &header[0] != "param" || &header[width - 1] != "phi_hi" {
        return Err(Error::Parse(
            "expected columns param, point_index, x1..xn, phi_lo, phi_hi".into(),
        ));
    }
    let dim = width - 4;
    let mut slices: Vec<CrossSection> = Vec::new();
    let mut pending: Option<(f64, Vec<f64>, Option<(f64, f64)>)> = None;
    let flush = |p: Option<(f64, Vec<f64>, Option<(f64, f64)>)>,
                 slices: &mut Vec<CrossSection>|
     -> Result<()> {
        if let Some((param, data, window)) = p {
            if slices.last().is_some_and(|s| s.param >= param) {
                return Err(Error::Parse(format!(
                    "section parameters not increasing at {param}"
                )));
            }
            slices.push(CrossSection {
                param,
                set: CompactSet::from_flat(dim, data, resolution)?,
                phase_window: window,
            });
        }
        Ok(())
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {line} has {} columns, header has {width}",
                rec.len()
            )));
        }
        let param = parse(&rec[0], line)?;
        let window = match (rec[width - 2].trim(), rec[width - 1].trim()) {
            ("", "") => None,
            (lo, hi) => Some((parse(lo, line)?, parse(hi, line)?)),
        };
        if pending.as_ref().map_or(true, |(p, _, _)| *p != param) {
            flush(pending.take(), &mut slices)?;
            pending = Some((param, Vec::new(), window));
        }
        let buf = &mut pending.as_mut().expect("set above").1;
        for f in rec.iter().skip(2).take(dim) {
            buf.push(parse(f, line)?);
        }
    }
    flush(pending, &mut slices)?;
    if slices.is_empty() {
        return Err(Error::Parse("funnel CSV has no rows".into()));
    }
    let step = if slices.len() > 1 {
        slices[1].param - slices[0].param
    } else {
        0.0
    };
    Ok(RfSolution {
        kind,
        slices,
        step,
        resolution,
        seed: 0,
        terminal: None,
    })
}
