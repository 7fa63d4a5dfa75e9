//! Price-relative CSV files: a `date,<asset names…>` header, then one row per
//! trading day with an ISO date and one positive decimal per asset.

use std::path::Path;

use rand::Rng;

use crate::bench::synth::rng;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::online::PriceRelativeSeries;

/// Reads and validates a price-relative file. Rows and columns in errors are
/// zero-based over data rows and asset columns.
pub fn load_price_relatives(path: impl AsRef<Path>) -> Result<PriceRelativeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_relatives(file)
}

pub fn read_price_relatives(reader: impl std::io::Read) -> Result<PriceRelativeSeries> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "date" {
        return Err(Error::Parse("header must be `date,<asset names…>`".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut dates = Vec::new();
    let mut data = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("data row {row}: {e}")))?;
        if !looks_like_iso_date(&record[0]) {
            return Err(Error::Parse(format!("data row {row}: `{}` is not an ISO date", &record[0])));
        }
        dates.push(record[0].to_owned());
        for (column, field) in record.iter().skip(1).enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Parse(format!("data row {row}, column {column}: `{field}` is not a number"))
            })?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NoJunkBond { row, column, value });
            }
            data.push(value);
        }
    }
    if dates.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let relatives = Matrix::from_vec(dates.len(), names.len(), data)?;
    PriceRelativeSeries::with_dates(names, dates, relatives)
}

fn looks_like_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b[..10]
            .iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

pub fn write_price_relatives(series: &PriceRelativeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let mut header = vec!["date".to_owned()];
    header.extend(series.asset_names().iter().cloned());
    w.write_record(&header).map_err(io)?;
    for t in 0..series.days() {
        let mut row = vec![series.dates()[t].clone()];
        row.extend(series.day(t).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A seeded i.i.d. market with relatives uniform on `[a, 1]` and one entry
/// pinned to `a`, so every day's ratio of relatives is at most `1/a`.
pub fn synthetic_market(assets: usize, days: usize, a: f64, seed: u64) -> Result<PriceRelativeSeries> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("market variability must lie in (0, 1), got {a}")));
    }
    if assets == 0 || days == 0 {
        return Err(Error::Empty);
    }
    let mut r = rng(seed, 4);
    let mut data: Vec<f64> = (0..assets * days).map(|_| r.random_range(a..=1.0)).collect();
    let pinned = r.random_range(0..data.len());
    data[pinned] = a;
    let dates = (0..days).map(|t| synthetic_date(t as u32)).collect();
    let names = (0..assets).map(|i| format!("s{i}")).collect();
    PriceRelativeSeries::with_dates(names, dates, Matrix::from_vec(days, assets, data)?)
}

/// Day `t` of a calendar that starts on 2000-01-01 and uses 28-day months.
fn synthetic_date(t: u32) -> String {
    let (year, rest) = (2000 + t / 336, t % 336);
    format!("{year:04}-{:02}-{:02}", rest / 28 + 1, rest % 28 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_two_asset_file() {
        let s = read_price_relatives("date,A,B\n2020-01-02,1.0,1.0\n2020-01-03,1.0,1.0\n".as_bytes())
            .unwrap();
        assert_eq!((s.days(), s.assets()), (2, 2));
        assert_eq!(s.market_variability(), 1.0);
        assert_eq!(s.asset_names(), &["A".to_owned(), "B".to_owned()]);
    }

    #[test]
    fn zero_entry_names_its_cell() {
        let err = read_price_relatives("date,A,B\n2020-01-02,1.0,1.0\n2020-01-03,1.1,0\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::NoJunkBond { row: 1, column: 1, value } if value == 0.0));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_files_are_parse_errors() {
        for text in [
            "date,A,B\n2020-01-02,1.0\n",
            "day,A\n2020-01-02,1.0\n",
            "date,A\nyesterday,1.0\n",
            "date,A\n2020-01-02,abc\n",
            "date,A\n",
        ] {
            assert!(matches!(read_price_relatives(text.as_bytes()), Err(Error::Parse(_))), "{text}");
        }
    }

    #[test]
    fn synthetic_market_round_trips() {
        let s = synthetic_market(2, 500, 0.5, 3).unwrap();
        assert_eq!(s.market_variability(), 0.5);
        assert!(s.relatives().as_slice().iter().all(|v| (0.5..=1.0).contains(v)));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_price_relatives(&s, &path).unwrap();
        assert_eq!(load_price_relatives(&path).unwrap(), s);
        assert!(load_price_relatives(dir.path().join("missing.csv")).is_err());
    }
}
