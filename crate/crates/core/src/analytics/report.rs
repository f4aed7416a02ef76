use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    /// Inclusive lower edge; absent for categorical bins.
    pub lo: Option<f64>,
    /// Exclusive upper edge.
    pub hi: Option<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub dimension: String,
    pub stratum: Option<String>,
    pub definition: String,
    pub bins: Vec<Bin>,
}

impl HistogramReport {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn count(&self, label: &str) -> u64 {
        self.bins.iter().find(|b| b.label == label).map_or(0, |b| b.count)
    }

    /// Bin with the largest count; earlier bins win ties.
    pub fn mode(&self) -> Option<&Bin> {
        self.bins.iter().fold(None, |best: Option<&Bin>, b| match best {
            Some(m) if m.count >= b.count => Some(m),
            _ if b.count > 0 => Some(b),
            _ => best,
        })
    }
}

/// Numeric bins `[lo + i*width, lo + (i+1)*width)` up to `hi`, plus an
/// optional trailing categorical bin.
pub(crate) struct Binner {
    lo: f64,
    width: f64,
    counts: Vec<u64>,
    extra: Option<(String, u64)>,
}

impl Binner {
    pub(crate) fn new(lo: f64, hi: f64, width: f64, extra: Option<&str>) -> Binner {
        let n = ((hi - lo) / width).ceil().max(1.0) as usize;
        Binner {
            lo,
            width,
            counts: vec![0; n],
            extra: extra.map(|l| (l.to_string(), 0)),
        }
    }

    /// Values past the last edge extend the histogram.
    pub(crate) fn add(&mut self, v: f64) {
        let i = ((v - self.lo) / self.width).floor().max(0.0) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
    }

    pub(crate) fn add_extra(&mut self) {
        if let Some((_, c)) = &mut self.extra {
            *c += 1;
        }
    }

    pub(crate) fn finish(self, dimension: &str, stratum: Option<String>, definition: String) -> HistogramReport {
        let mut bins: Vec<Bin> = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &count)| {
                let lo = self.lo + i as f64 * self.width;
                let hi = lo + self.width;
                Bin {
                    label: format!("[{lo},{hi})"),
                    lo: Some(lo),
                    hi: Some(hi),
                    count,
                }
            })
            .collect();
        if let Some((label, count)) = self.extra {
            bins.push(Bin { label, lo: None, hi: None, count });
        }
        HistogramReport {
            dimension: dimension.into(),
            stratum,
            definition,
            bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub key: String,
    pub numerator: u64,
    pub denominator: u64,
    pub rate: f64,
    /// This stratum's fraction of the overall numerator.
    pub share_of_events: f64,
    /// This stratum's fraction of the overall denominator.
    pub share_of_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub outcome: String,
    pub definition: String,
    pub overall: Stratum,
    pub strata: Vec<Stratum>,
}

impl OutcomeReport {
    pub(crate) fn build(outcome: &str, definition: String, counts: impl IntoIterator<Item = (String, u64, u64)>) -> OutcomeReport {
        let counts: Vec<(String, u64, u64)> = counts.into_iter().collect();
        let num: u64 = counts.iter().map(|c| c.1).sum();
        let den: u64 = counts.iter().map(|c| c.2).sum();
        let stratum = |key: String, n: u64, d: u64| Stratum {
            key,
            numerator: n,
            denominator: d,
            rate: ratio(n, d),
            share_of_events: ratio(n, num),
            share_of_population: ratio(d, den),
        };
        OutcomeReport {
            outcome: outcome.into(),
            definition,
            overall: stratum("ALL".into(), num, den),
            strata: counts.into_iter().map(|(k, n, d)| stratum(k, n, d)).collect(),
        }
    }

    pub fn stratum(&self, key: &str) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.key == key)
    }
}

pub(crate) fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}
