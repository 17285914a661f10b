//! Multi-year balance-sheet series and gap filling for interbank items.
//!
//! Gaps of one or two consecutive years bracketed by reported values are
//! filled by linear interpolation. Longer gaps, and gaps at either end of the
//! series, take the value of the opposite interbank side for the same year.
//! Only reported (non-imputed) values act as interpolation anchors, which makes
//! the procedure idempotent.

use serde::{Deserialize, Serialize};

/// Longest run of missing years that is still interpolated.
pub const MAX_INTERPOLATED_GAP: i32 = 2;

/// A bank-year as read from input, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub bank_id: String,
    pub name: String,
    pub period: i32,
    pub equity: Option<f64>,
    pub total_assets: Option<f64>,
    pub interbank_assets: Option<f64>,
    pub interbank_liabilities: Option<f64>,
    #[serde(default)]
    pub imputed_assets: bool,
    #[serde(default)]
    pub imputed_liabilities: bool,
}

/// A record (or a whole bank, when `period` is `None`) left out of a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub bank_id: String,
    pub period: Option<i32>,
    pub reason: String,
}

#[derive(Clone, Copy)]
enum Side {
    Assets,
    Liabilities,
}

impl Side {
    fn value(self, r: &SeriesRecord) -> Option<f64> {
        match self {
            Side::Assets => r.interbank_assets,
            Side::Liabilities => r.interbank_liabilities,
        }
    }

    fn imputed(self, r: &SeriesRecord) -> bool {
        match self {
            Side::Assets => r.imputed_assets,
            Side::Liabilities => r.imputed_liabilities,
        }
    }

    fn fill(self, r: &mut SeriesRecord, v: f64) {
        match self {
            Side::Assets => {
                r.interbank_assets = Some(v);
                r.imputed_assets = true;
            }
            Side::Liabilities => {
                r.interbank_liabilities = Some(v);
                r.imputed_liabilities = true;
            }
        }
    }

    fn other(self) -> Side {
        match self {
            Side::Assets => Side::Liabilities,
            Side::Liabilities => Side::Assets,
        }
    }
}

/// Fills missing interbank lending and borrowing values. Output preserves the
/// input order; banks with no interbank data in any year are reported.
pub fn preprocess_series(records: &[SeriesRecord]) -> (Vec<SeriesRecord>, Vec<Rejection>) {
    let mut out = records.to_vec();
    let mut rejections = Vec::new();

    let mut bank_order: Vec<&str> = Vec::new();
    for r in records {
        if !bank_order.contains(&r.bank_id.as_str()) {
            bank_order.push(&r.bank_id);
        }
    }

    for bank_id in bank_order {
        let mut rows: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].bank_id == bank_id)
            .collect();
        rows.sort_by_key(|&i| records[i].period);

        if rows.iter().all(|&i| {
            records[i].interbank_assets.is_none() && records[i].interbank_liabilities.is_none()
        }) {
            rejections.push(Rejection {
                bank_id: bank_id.to_string(),
                period: None,
                reason: "interbank lending and borrowing missing in every period".into(),
            });
            continue;
        }

        let interpolated: Vec<(Option<f64>, Option<f64>)> = rows
            .iter()
            .map(|&i| {
                (
                    interpolate(records, &rows, i, Side::Assets),
                    interpolate(records, &rows, i, Side::Liabilities),
                )
            })
            .collect();

        for (k, &i) in rows.iter().enumerate() {
            let (a, l) = interpolated[k];
            for (side, own, other) in [(Side::Assets, a, l), (Side::Liabilities, l, a)] {
                if side.value(&out[i]).is_some() {
                    continue;
                }
                let other_side = side.other().value(&records[i]).or(other);
                if let Some(v) = own.or(other_side) {
                    side.fill(&mut out[i], v);
                }
            }
        }
    }
    (out, rejections)
}

/// Linear interpolation between the nearest reported anchors, if the gap
/// around `row` is short enough.
fn interpolate(records: &[SeriesRecord], rows: &[usize], row: usize, side: Side) -> Option<f64> {
    let rec = &records[row];
    if side.value(rec).is_some() {
        return None;
    }
    let anchor = |i: &&usize| {
        let r = &records[**i];
        side.value(r)
            .filter(|_| !side.imputed(r))
            .map(|v| (r.period, v))
    };
    let before = rows
        .iter()
        .rev()
        .filter(|&&i| records[i].period < rec.period)
        .find_map(|i| anchor(&i))?;
    let after = rows
        .iter()
        .filter(|&&i| records[i].period > rec.period)
        .find_map(|i| anchor(&i))?;
    let (y0, v0) = before;
    let (y1, v1) = after;
    if y1 - y0 - 1 > MAX_INTERPOLATED_GAP {
        return None;
    }
    let t = f64::from(rec.period - y0) / f64::from(y1 - y0);
    Some(v0 + (v1 - v0) * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(period: i32, a: Option<f64>, l: Option<f64>) -> SeriesRecord {
        SeriesRecord {
            bank_id: "b".into(),
            name: "B".into(),
            period,
            equity: Some(10.0),
            total_assets: Some(1000.0),
            interbank_assets: a,
            interbank_liabilities: l,
            imputed_assets: false,
            imputed_liabilities: false,
        }
    }

    #[test]
    fn one_year_gap_is_interpolated() {
        let input = vec![
            rec(2008, Some(100.0), Some(1.0)),
            rec(2009, None, Some(1.0)),
            rec(2010, Some(200.0), Some(1.0)),
        ];
        let (out, rej) = preprocess_series(&input);
        assert!(rej.is_empty());
        assert_eq!(out[1].interbank_assets, Some(150.0));
        assert!(out[1].imputed_assets);
        assert!(!out[1].imputed_liabilities);
    }

    #[test]
    fn two_year_gap_is_interpolated() {
        let input = vec![
            rec(2008, Some(100.0), Some(1.0)),
            rec(2009, None, Some(1.0)),
            rec(2010, None, Some(1.0)),
            rec(2011, Some(400.0), Some(1.0)),
        ];
        let (out, _) = preprocess_series(&input);
        assert_eq!(out[1].interbank_assets, Some(200.0));
        assert_eq!(out[2].interbank_assets, Some(300.0));
    }

    #[test]
    fn long_gap_copies_other_side() {
        let input = vec![
            rec(2008, Some(50.0), Some(70.0)),
            rec(2009, Some(51.0), None),
            rec(2010, Some(52.0), None),
            rec(2011, Some(53.0), None),
            rec(2012, Some(54.0), None),
            rec(2013, Some(55.0), Some(75.0)),
        ];
        let (out, _) = preprocess_series(&input);
        for (k, r) in out.iter().enumerate().take(5).skip(1) {
            assert_eq!(r.interbank_liabilities, Some(50.0 + k as f64));
            assert!(r.imputed_liabilities);
        }
    }

    #[test]
    fn exactly_three_years_copies_other_side() {
        let input = vec![
            rec(2008, Some(10.0), Some(100.0)),
            rec(2009, Some(20.0), None),
            rec(2010, Some(30.0), None),
            rec(2011, Some(40.0), None),
            rec(2012, Some(50.0), Some(500.0)),
        ];
        let (out, _) = preprocess_series(&input);
        assert_eq!(out[2].interbank_liabilities, Some(30.0));
    }

    #[test]
    fn lending_known_borrowing_never() {
        let input: Vec<_> = (2008..2012).map(|y| rec(y, Some(y as f64), None)).collect();
        let (out, rej) = preprocess_series(&input);
        assert!(rej.is_empty());
        for r in &out {
            assert_eq!(r.interbank_liabilities, r.interbank_assets);
            assert!(r.imputed_liabilities);
        }
    }

    #[test]
    fn complete_series_unchanged() {
        let input = vec![
            rec(2008, Some(1.0), Some(2.0)),
            rec(2009, Some(3.0), Some(4.0)),
        ];
        let (out, rej) = preprocess_series(&input);
        assert_eq!(out, input);
        assert!(rej.is_empty());
    }

    #[test]
    fn bank_without_any_interbank_data_is_reported() {
        let input = vec![rec(2008, None, None), rec(2009, None, None)];
        let (out, rej) = preprocess_series(&input);
        assert_eq!(out, input);
        assert_eq!(rej.len(), 1);
        assert_eq!(rej[0].period, None);
    }

    #[test]
    fn imputed_values_are_not_anchors() {
        // 2009 is filled from liabilities; it must not become an anchor that
        // shortens the 2010..2011 gap on a second pass.
        let input = vec![
            rec(2008, None, Some(5.0)),
            rec(2009, None, None),
            rec(2010, None, None),
            rec(2011, Some(9.0), Some(9.0)),
        ];
        let (once, _) = preprocess_series(&input);
        let (twice, _) = preprocess_series(&once);
        assert_eq!(once, twice);
    }
}
