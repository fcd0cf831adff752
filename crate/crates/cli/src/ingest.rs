//! Auction CSV files.
//!
//! Columns: `winning_bid`, optional `reserve` and `outside_value` (cells may
//! be blank), covariates `x1..xD`, `n_bidders`. Lines starting with `#` are
//! provenance comments and are skipped.

use std::collections::HashSet;
use std::path::Path;

use auction_risk::sim::stats::{mean, quantile, sample_sd};
use auction_risk::{AuctionDataset, AuctionRecord};

use crate::error::{io_error, CliError, CliResult};

struct Schema {
    winning_bid: usize,
    reserve: Option<usize>,
    outside_value: Option<usize>,
    n_bidders: usize,
    covariates: Vec<usize>,
}

fn schema(headers: &csv::StringRecord) -> CliResult<Schema> {
    let mut seen = HashSet::new();
    let mut xs: Vec<(usize, usize)> = Vec::new();
    let (mut wb, mut res, mut ov, mut nb) = (None, None, None, None);
    for (col, name) in headers.iter().enumerate() {
        let name = name.trim();
        if !seen.insert(name.to_string()) {
            return Err(CliError::data(format!("duplicate column {name:?} in header")));
        }
        match name {
            "winning_bid" => wb = Some(col),
            "reserve" => res = Some(col),
            "outside_value" => ov = Some(col),
            "n_bidders" => nb = Some(col),
            _ => match name.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 => xs.push((k, col)),
                _ => return Err(CliError::data(format!("unknown column {name:?} in header"))),
            },
        }
    }
    xs.sort();
    for (i, &(k, _)) in xs.iter().enumerate() {
        if k != i + 1 {
            return Err(CliError::data(format!(
                "covariate columns must be x1..x{}, x{} is missing",
                xs.len(),
                i + 1
            )));
        }
    }
    let need = |c: Option<usize>, name: &str| {
        c.ok_or_else(|| CliError::data(format!("missing mandatory column {name:?}")))
    };
    Ok(Schema {
        winning_bid: need(wb, "winning_bid")?,
        reserve: res,
        outside_value: ov,
        n_bidders: need(nb, "n_bidders")?,
        covariates: xs.into_iter().map(|(_, c)| c).collect(),
    })
}

fn number(row: &csv::StringRecord, col: usize, name: &str, line: u64) -> CliResult<Option<f64>> {
    let cell = row.get(col).unwrap_or("").trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(CliError::data(format!("line {line}: {name} is not a number: {cell:?}"))),
    }
}

fn parse_row(row: &csv::StringRecord, s: &Schema, line: u64) -> CliResult<AuctionRecord> {
    let required = |col: usize, name: &str| -> CliResult<f64> {
        number(row, col, name, line)?
            .ok_or_else(|| CliError::data(format!("line {line}: {name} is blank")))
    };
    let price = |v: f64, name: &str| -> CliResult<f64> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::data(format!("line {line}: {name} must be positive, got {v}")))
        }
    };
    let winning_bid = price(required(s.winning_bid, "winning_bid")?, "winning_bid")?;
    let reserve = match s.reserve {
        Some(c) => number(row, c, "reserve", line)?
            .map(|r| price(r, "reserve"))
            .transpose()?,
        None => None,
    };
    let outside_value = match s.outside_value {
        Some(c) => number(row, c, "outside_value", line)?,
        None => None,
    };
    let n = required(s.n_bidders, "n_bidders")?;
    if n.fract() != 0.0 || n < 2.0 || n > u32::MAX as f64 {
        return Err(CliError::data(format!(
            "line {line}: n_bidders must be an integer of at least 2, got {n}"
        )));
    }
    let covariates = s
        .covariates
        .iter()
        .enumerate()
        .map(|(k, &c)| required(c, &format!("x{}", k + 1)))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(AuctionRecord {
        winning_bid,
        reserve,
        outside_value,
        covariates,
        n_bidders: n as u32,
    })
}

pub fn read_dataset(path: &Path) -> CliResult<AuctionDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let headers = rdr.headers().map_err(|e| io_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(CliError::data(format!("{}: empty file", path.display())));
    }
    let s = schema(&headers)?;
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::data(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        records.push(parse_row(&row, &s, line)?);
    }
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok(AuctionDataset::with_dim(records, s.covariates.len())?)
}

pub fn dataset_csv(data: &AuctionDataset) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["winning_bid".to_string(), "reserve".into(), "outside_value".into()];
    header.extend((1..=data.dim()).map(|k| format!("x{k}")));
    header.push("n_bidders".into());
    w.write_record(&header).expect("in-memory write");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in data.records() {
        let mut row = vec![r.winning_bid.to_string(), opt(r.reserve), opt(r.outside_value)];
        row.extend(r.covariates.iter().map(f64::to_string));
        row.push(r.n_bidders.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Mean, median, quartiles, standard deviation and count per column, over
/// the non-blank cells.
pub fn summary_table(data: &AuctionDataset) -> String {
    let recs = data.records();
    let mut cols: Vec<(String, Vec<f64>)> = vec![
        ("winning_bid".into(), recs.iter().map(|r| r.winning_bid).collect()),
        ("reserve".into(), recs.iter().filter_map(|r| r.reserve).collect()),
        ("outside_value".into(), recs.iter().filter_map(|r| r.outside_value).collect()),
    ];
    for k in 0..data.dim() {
        cols.push((format!("x{}", k + 1), recs.iter().map(|r| r.covariates[k]).collect()));
    }
    cols.push(("n_bidders".into(), recs.iter().map(|r| r.n_bidders as f64).collect()));
    let mut out = format!(
        "{:<14} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7}\n",
        "variable", "mean", "median", "p25", "p75", "std", "count"
    );
    for (name, v) in cols {
        if v.is_empty() {
            out.push_str(&format!("{name:<14} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7}\n", "-", "-", "-", "-", "-", 0));
            continue;
        }
        out.push_str(&format!(
            "{name:<14} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>7}\n",
            mean(&v),
            quantile(&v, 0.5),
            quantile(&v, 0.25),
            quantile(&v, 0.75),
            sample_sd(&v),
            v.len()
        ));
    }
    out
}
