//! Channel realizations as CSV, one row per sub-carrier.

use std::path::Path;

use duplex_asr_core::{ChannelRealization, Complex64};

use crate::error::{CliError, Result};
use crate::output::{num, Table};

pub const HEADER: [&str; 11] = ["k", "h21_re", "h21_im", "h12_re", "h12_im", "h11_re", "h11_im", "h22_re", "h22_im", "beta1", "beta2"];

pub fn channel_table(ch: &ChannelRealization) -> Table {
    let mut t = Table::new(&HEADER);
    for k in 0..ch.len() {
        let mut row = vec![k.to_string()];
        for h in [ch.h21[k], ch.h12[k], ch.h11[k], ch.h22[k]] {
            row.push(num(h.re));
            row.push(num(h.im));
        }
        row.push(num(ch.beta1[k]));
        row.push(num(ch.beta2[k]));
        t.push(row);
    }
    t
}

pub fn read_channel(path: &Path) -> Result<ChannelRealization> {
    let bad = |message: String| CliError::ChannelFile {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(bad(format!("expected header `{}`", HEADER.join(","))));
    }
    let mut cols: [Vec<f64>; 10] = Default::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let k: usize = rec[0].trim().parse().map_err(|_| bad(format!("row {i}: k = `{}` is not an index", &rec[0])))?;
        if k != i {
            return Err(bad(format!("row {i}: k = {k}, rows must list sub-carriers 0, 1, … in order")));
        }
        for (j, col) in cols.iter_mut().enumerate() {
            let text = rec[j + 1].trim();
            let v: f64 = text.parse().map_err(|_| bad(format!("row {i}: {} = `{text}` is not a number", HEADER[j + 1])))?;
            col.push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(bad("no sub-carriers".into()));
    }
    let c = |re: &[f64], im: &[f64]| re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect::<Vec<_>>();
    let [h21r, h21i, h12r, h12i, h11r, h11i, h22r, h22i, b1, b2] = cols;
    ChannelRealization::new(c(&h21r, &h21i), c(&h12r, &h12i), c(&h11r, &h11i), c(&h22r, &h22i), b1, b2).map_err(|e| bad(e.to_string()))
}
