use crate::types::{format_timestamp, parse_timestamp, AssetSeries, Bar};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Field { row: usize, column: &'static str, value: String },
    #[error("row {row}: duplicate timestamp {timestamp}")]
    Duplicate { row: usize, timestamp: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

const REQUIRED: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];

/// Parses an OHLCV CSV with a header row. Column order and header case are
/// free; `adjusted_close` (or `adj_close`) is optional. Rows are returned in
/// timestamp order. Row numbers in errors count the header as row 1.
pub fn parse_ohlcv_csv(bytes: &[u8], symbol: &str) -> Result<AssetSeries, CsvError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = find(name).ok_or(CsvError::MissingColumn(name))?;
    }
    let adj = find("adjusted_close").or_else(|| find("adj_close"));

    let mut rows: Vec<(usize, Bar)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let get = |k: usize| record.get(idx[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64, CsvError> {
            let raw = get(k);
            raw.parse::<f64>().map_err(|_| CsvError::Field { row, column: REQUIRED[k], value: raw.to_string() })
        };
        let timestamp = parse_timestamp(get(0)).map_err(|_| CsvError::Field {
            row,
            column: "timestamp",
            value: get(0).to_string(),
        })?;
        let adjusted_close = match adj.and_then(|a| record.get(a)).filter(|s| !s.is_empty()) {
            None => None,
            Some(raw) => Some(raw.parse::<f64>().map_err(|_| CsvError::Field {
                row,
                column: "adjusted_close",
                value: raw.to_string(),
            })?),
        };
        let bar = Bar {
            timestamp,
            open: num(1)?,
            high: num(2)?,
            low: num(3)?,
            close: num(4)?,
            volume: num(5)?,
            adjusted_close,
        };
        rows.push((row, bar));
    }
    rows.sort_by_key(|(_, b)| b.timestamp);
    for pair in rows.windows(2) {
        if pair[0].1.timestamp == pair[1].1.timestamp {
            let row = pair[0].0.max(pair[1].0);
            return Err(CsvError::Duplicate { row, timestamp: format_timestamp(&pair[1].1.timestamp) });
        }
    }
    Ok(AssetSeries { symbol: symbol.to_string(), bars: rows.into_iter().map(|(_, b)| b).collect() })
}

/// Writes the canonical CSV layout read by [`parse_ohlcv_csv`]. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_ohlcv_csv<W: std::io::Write>(series: &AssetSeries, out: W) -> Result<(), CsvError> {
    let with_adj = series.bars.iter().any(|b| b.adjusted_close.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = REQUIRED.to_vec();
    if with_adj {
        header.push("adjusted_close");
    }
    w.write_record(&header)?;
    for b in &series.bars {
        let mut rec = vec![
            format_timestamp(&b.timestamp),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.volume.to_string(),
        ];
        if with_adj {
            rec.push(b.adjusted_close.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
