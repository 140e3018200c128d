//! Per-epoch metrics as CSV with six significant digits.

use std::io::{Read, Write};
use std::path::Path;

use super::cifar::Split;
use crate::error::{Error, Result};

pub const HEADER: [&str; 6] = ["epoch", "split", "loss", "accuracy", "module_mse_mean", "seconds"];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
    /// Empty when the network has no padding modules.
    pub module_mse_mean: Option<f64>,
    pub seconds: f64,
}

/// Rounds to six significant digits and prints the shortest decimal form.
pub fn six_digits(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn to_writer<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::format("metrics CSV", e.to_string());
    out.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.epoch.to_string(),
            r.split.to_string(),
            six_digits(r.loss),
            six_digits(r.accuracy),
            r.module_mse_mean.map(six_digits).unwrap_or_default(),
            six_digits(r.seconds),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::format("metrics CSV", e.to_string()))
}

pub fn from_reader<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let csv_err = |e: csv::Error| Error::format("metrics CSV", e.to_string());
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER) {
        return Err(Error::format("metrics CSV", format!("unexpected header {header:?}")));
    }
    let float = |s: &str| s.parse::<f64>().map_err(|e| Error::format("metrics CSV", format!("{s:?}: {e}")));
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| rec.get(i).unwrap_or_default();
            Ok(MetricsRow {
                epoch: field(0).parse().map_err(|e| Error::format("metrics CSV", format!("epoch: {e}")))?,
                split: field(1).parse()?,
                loss: float(field(2))?,
                accuracy: float(field(3))?,
                module_mse_mean: match field(4) {
                    "" => None,
                    s => Some(float(s)?),
                },
                seconds: float(field(5))?,
            })
        })
        .collect()
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    to_writer(rows, std::io::BufWriter::new(file))
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    from_reader(std::io::BufReader::new(file))
}
