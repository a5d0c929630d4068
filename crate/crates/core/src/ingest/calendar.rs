use std::collections::BTreeSet;

use crate::types::{AssetSeries, DataError, Granularity, Panel};

/// Aligns series on the sorted union of their timestamps. Cells where an
/// asset has no bar are left empty. All non-empty series must share one
/// granularity.
pub fn align_calendar(series: &[AssetSeries]) -> Result<Panel, DataError> {
    let mut granularity: Option<Granularity> = None;
    for s in series {
        match (granularity, s.granularity()) {
            (None, g) => granularity = g,
            (Some(a), Some(b)) if a != b => {
                return Err(DataError::MixedGranularity(s.symbol.clone(), b, a));
            }
            _ => {}
        }
    }
    let calendar: Vec<_> =
        series.iter().flat_map(|s| s.bars.iter().map(|b| b.timestamp)).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cells = Vec::with_capacity(series.len() * calendar.len());
    for s in series {
        let mut bars = s.bars.iter().peekable();
        for ts in &calendar {
            match bars.peek() {
                Some(b) if b.timestamp == *ts => {
                    cells.push(Some(**b));
                    bars.next();
                }
                _ => cells.push(None),
            }
        }
    }
    let symbols = series.iter().map(|s| s.symbol.clone()).collect();
    Ok(Panel::from_parts(symbols, calendar, cells))
}
