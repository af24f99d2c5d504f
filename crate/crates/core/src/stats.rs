//! Streaming summary statistics.
//!
//! Mean and variance use Welford's update. Quantiles are exact (linear
//! interpolation between order statistics) while at most [`RETENTION_CAP`]
//! samples have been seen; past the cap the retained sample seeds a set of
//! P-squared estimators and is dropped.

use serde::{Deserialize, Serialize};

pub const RETENTION_CAP: usize = 1_000_000;
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Quantiles {
    fn from_array(q: [f64; 5]) -> Self {
        Quantiles { q05: q[0], q25: q[1], q50: q[2], q75: q[3], q95: q[4] }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.q05, self.q25, self.q50, self.q75, self.q95]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance; 0 for fewer than two samples.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub quantiles: Quantiles,
    /// False once the retention cap was exceeded and P-squared estimates are reported.
    pub exact_quantiles: bool,
}

impl StatSummary {
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance / self.count as f64).sqrt()
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut acc = StatAccumulator::new();
        for v in values {
            acc.push(v);
        }
        acc.summary()
    }
}

#[derive(Clone, Debug)]
pub struct StatAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
    cap: usize,
    retained: Vec<f64>,
    markers: Option<Vec<P2>>,
}

impl Default for StatAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl StatAccumulator {
    pub fn new() -> Self {
        Self::with_cap(RETENTION_CAP)
    }

    pub fn with_cap(cap: usize) -> Self {
        StatAccumulator {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            cap: cap.max(5),
            retained: Vec::new(),
            markers: None,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);

        match self.markers.as_mut() {
            Some(markers) => markers.iter_mut().for_each(|m| m.push(x)),
            None if self.retained.len() < self.cap => self.retained.push(x),
            None => {
                self.retained.push(x);
                self.retained.sort_by(f64::total_cmp);
                let sorted = std::mem::take(&mut self.retained);
                self.markers = Some(QUANTILE_LEVELS.iter().map(|&p| P2::from_sorted(p, &sorted)).collect());
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn summary(&self) -> StatSummary {
        let variance = if self.count > 1 { (self.m2 / (self.count - 1) as f64).max(0.0) } else { 0.0 };
        let (quantiles, exact) = match &self.markers {
            Some(markers) => {
                let mut q = [0.0; 5];
                for (slot, m) in q.iter_mut().zip(markers) {
                    *slot = m.estimate().clamp(self.min, self.max);
                }
                // P-squared markers are independent; keep the reported levels ordered
                for i in 1..5 {
                    q[i] = q[i].max(q[i - 1]);
                }
                (q, false)
            }
            None => {
                let mut sorted = self.retained.clone();
                sorted.sort_by(f64::total_cmp);
                let mut q = [f64::NAN; 5];
                for (slot, &p) in q.iter_mut().zip(&QUANTILE_LEVELS) {
                    *slot = sorted_quantile(&sorted, p);
                }
                (q, true)
            }
        };
        StatSummary {
            count: self.count,
            mean: if self.count == 0 { f64::NAN } else { self.mean },
            variance,
            min: if self.count == 0 { f64::NAN } else { self.min },
            max: if self.count == 0 { f64::NAN } else { self.max },
            quantiles: Quantiles::from_array(quantiles),
            exact_quantiles: exact,
        }
    }
}

/// Quantile of a sorted sample by linear interpolation at `(len - 1) * p`.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Jain and Chlamtac's P-squared estimator for a single quantile.
#[derive(Clone, Debug)]
struct P2 {
    p: f64,
    heights: [f64; 5],
    positions: [f64; 5],
    desired: [f64; 5],
    increments: [f64; 5],
}

impl P2 {
    fn from_sorted(p: f64, sorted: &[f64]) -> Self {
        let len = sorted.len() as f64;
        let increments = [0.0, p / 2.0, p, (1.0 + p) / 2.0, 1.0];
        let mut positions = [0.0; 5];
        let mut heights = [0.0; 5];
        for i in 0..5 {
            positions[i] = 1.0 + (len - 1.0) * increments[i];
            heights[i] = sorted_quantile(sorted, increments[i]);
        }
        let desired = positions;
        // marker positions must be strictly increasing integers
        for i in 0..5 {
            positions[i] = positions[i].round();
            if i > 0 && positions[i] <= positions[i - 1] {
                positions[i] = positions[i - 1] + 1.0;
            }
        }
        P2 { p, heights, positions, desired, increments }
    }

    fn push(&mut self, x: f64) {
        let q = &mut self.heights;
        let n = &mut self.positions;
        let cell = if x < q[0] {
            q[0] = x;
            0
        } else if x >= q[4] {
            q[4] = x;
            3
        } else {
            (0..4).find(|&i| x < q[i + 1]).unwrap_or(3)
        };
        for pos in n.iter_mut().skip(cell + 1) {
            *pos += 1.0;
        }
        for (d, inc) in self.desired.iter_mut().zip(&self.increments) {
            *d += inc;
        }
        for i in 1..4 {
            let d = self.desired[i] - n[i];
            if (d >= 1.0 && n[i + 1] - n[i] > 1.0) || (d <= -1.0 && n[i - 1] - n[i] < -1.0) {
                let s = d.signum();
                let parabolic = q[i]
                    + s / (n[i + 1] - n[i - 1])
                        * ((n[i] - n[i - 1] + s) * (q[i + 1] - q[i]) / (n[i + 1] - n[i])
                            + (n[i + 1] - n[i] - s) * (q[i] - q[i - 1]) / (n[i] - n[i - 1]));
                q[i] = if q[i - 1] < parabolic && parabolic < q[i + 1] {
                    parabolic
                } else {
                    let j = if s > 0.0 { i + 1 } else { i - 1 };
                    q[i] + s * (q[j] - q[i]) / (n[j] - n[i])
                };
                n[i] += s;
            }
        }
    }

    fn estimate(&self) -> f64 {
        debug_assert!((0.0..=1.0).contains(&self.p));
        self.heights[2]
    }
}
