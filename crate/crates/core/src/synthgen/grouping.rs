use chrono::Duration;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::store::CareUnit;
use crate::time::Timestamp;

/// Gaps strictly shorter than this join two ICU intervals into one stay.
pub const ICU_GROUPING_GAP_HOURS: i64 = 24;

/// One contiguous period in a single ICU, as a transfer record would show it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IcuInterval {
    pub unit: CareUnit,
    pub start: Timestamp,
    pub end: Timestamp,
}

/// A grouped ICU stay and the indices of the intervals it spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StayGroup {
    pub members: Vec<usize>,
    pub first_careunit: CareUnit,
    pub last_careunit: CareUnit,
    pub intime: Timestamp,
    pub outtime: Timestamp,
}

/// Group the time-ordered ICU intervals of one admission into stays.
///
/// Consecutive intervals separated by less than 24 hours share a stay; a gap
/// of 24 hours or more starts a new one. Unordered or overlapping intervals
/// are rejected.
pub fn script_icu_grouping(intervals: &[IcuInterval]) -> Result<Vec<StayGroup>> {
    let max_gap = Duration::hours(ICU_GROUPING_GAP_HOURS);
    let mut groups: Vec<StayGroup> = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        if iv.end < iv.start {
            return Err(Error::Config(format!("ICU interval {i} ends before it starts")));
        }
        match groups.last_mut() {
            Some(g) if iv.start < g.outtime => {
                return Err(Error::Config(format!("ICU interval {i} overlaps or precedes its predecessor")));
            }
            Some(g) if iv.start - g.outtime < max_gap => {
                g.members.push(i);
                g.last_careunit = iv.unit;
                g.outtime = iv.end;
            }
            _ => groups.push(StayGroup {
                members: vec![i],
                first_careunit: iv.unit,
                last_careunit: iv.unit,
                intime: iv.start,
                outtime: iv.end,
            }),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;
    use proptest::prelude::*;

    fn iv(start_h: i64, len_h: i64) -> IcuInterval {
        let t0 = parse_timestamp("2005-01-01 00:00:00").unwrap();
        IcuInterval {
            unit: CareUnit::MICU,
            start: t0 + Duration::hours(start_h),
            end: t0 + Duration::hours(start_h + len_h),
        }
    }

    #[test]
    fn ten_hour_gap_joins() {
        let g = script_icu_grouping(&[iv(0, 20), iv(30, 5)]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![0, 1]);
        assert_eq!(g[0].outtime, iv(30, 5).end);
    }

    #[test]
    fn exact_day_gap_splits() {
        let g = script_icu_grouping(&[iv(0, 20), iv(44, 5)]).unwrap();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn overlap_is_hard_failure() {
        assert!(script_icu_grouping(&[iv(0, 20), iv(10, 5)]).is_err());
    }

    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }

    proptest! {
        #[test]
        fn matches_union_find_closure(parts in prop::collection::vec((0i64..60, 1i64..50), 1..12)) {
            let mut start = 0;
            let mut ivs = Vec::new();
            for (gap, len) in &parts {
                start += gap;
                ivs.push(iv(start, *len));
                start += len;
            }
            let groups = script_icu_grouping(&ivs).unwrap();

            // Oracle: union every pair (not only neighbours) whose gap is under 24h.
            let n = ivs.len();
            let mut parent: Vec<usize> = (0..n).collect();
            for i in 0..n {
                for j in i + 1..n {
                    if ivs[j].start - ivs[i].end < Duration::hours(24) {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
            for g in &groups {
                let root = find(&mut parent, g.members[0]);
                for &m in &g.members {
                    prop_assert_eq!(find(&mut parent, m), root);
                }
            }
            let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
            roots.sort();
            roots.dedup();
            prop_assert_eq!(roots.len(), groups.len());
        }
    }
}
