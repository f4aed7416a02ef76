use serde::{Deserialize, Serialize};

use super::logistic::logit;
use crate::error::{Error, Result};
use crate::store::IcuStayId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub icustay_id: IcuStayId,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub treated: IcuStayId,
    pub control: IcuStayId,
    pub treated_logit: f64,
    pub control_logit: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    /// Maximum logit distance of a pair.
    pub caliper: f64,
    pub unmatched_treated: usize,
}

impl MatchResult {
    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).sum()
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Greedy 1:1 nearest-neighbour matching on the logit of the propensity
/// score, without replacement.
///
/// Treated stays are taken in descending score order and paired with the
/// closest unused control, ties going to the smaller stay id, when it lies
/// within `caliper_multiplier` times the standard deviation of all logit
/// scores. Every pair is within the caliper, so the total distance is at
/// most `pairs * caliper`. The matching is maximal among caliper-feasible
/// pairs, so it holds at least half as many pairs as a maximum one.
pub fn match_cohorts(treated: &[Scored], controls: &[Scored], caliper_multiplier: f64) -> Result<MatchResult> {
    if !(caliper_multiplier > 0.0) {
        return Err(Error::Config("caliper multiplier must be positive".into()));
    }
    if let Some(s) = treated.iter().chain(controls).find(|s| !(s.score > 0.0 && s.score < 1.0)) {
        return Err(Error::Config(format!("propensity score of stay {} is outside (0, 1)", s.icustay_id)));
    }
    let logits = |v: &[Scored]| v.iter().map(|s| (s.icustay_id, logit(s.score))).collect::<Vec<_>>();
    let (mut t, mut c) = (logits(treated), logits(controls));
    let pooled: Vec<f64> = t.iter().chain(&c).map(|x| x.1).collect();
    let caliper = caliper_multiplier * sample_sd(&pooled);

    t.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    c.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut used = vec![false; c.len()];
    let mut pairs = Vec::new();
    let mut unmatched = 0;
    for &(tid, tl) in &t {
        let best = c
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &(cid, cl))| ((tl - cl).abs(), cid, i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((d, cid, i)) if d <= caliper => {
                used[i] = true;
                pairs.push(MatchedPair {
                    treated: tid,
                    control: cid,
                    treated_logit: tl,
                    control_logit: c[i].1,
                    distance: d,
                });
            }
            _ => unmatched += 1,
        }
    }
    Ok(MatchResult {
        pairs,
        caliper,
        unmatched_treated: unmatched,
    })
}
