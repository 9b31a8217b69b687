//! Hidden-layer activations for external embedding tools (t-SNE and the like).

use std::io::Write;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::net::Network;

/// One row of hidden activations per example.
pub fn export_features<'a>(
    net: &Network,
    examples: impl IntoIterator<Item = &'a [f64]>,
) -> Result<Matrix> {
    let n = net.shape.hidden;
    let mut data = Vec::new();
    let mut rows = 0;
    for x in examples {
        data.extend(net.hidden(x)?);
        rows += 1;
    }
    Matrix::from_vec(rows, n, data)
}

/// CSV with header `h0,…,h{n-1}`, optionally prefixed by a `label` column.
pub fn write_features_csv<W: Write>(
    out: W,
    features: &Matrix,
    labels: Option<&[usize]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Vec::new();
    if labels.is_some() {
        header.push("label".into());
    }
    header.extend((0..features.cols()).map(|j| format!("h{j}")));
    w.write_record(&header)?;
    for r in 0..features.rows() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(l) = labels {
            rec.push(l[r].to_string());
        }
        rec.extend(features.row(r).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| crate::error::Error::io("<features csv>", e))?;
    Ok(())
}
