//! Exact depth statistics of small uniform random recursive DAGs.
//!
//! With uniform attachment the parents of node `x` are i.i.d. uniform on
//! `{0, .., x-1}`, so there are `prod_x x^k` equally likely parent
//! configurations. We walk all of them with a mixed-radix counter and
//! accumulate integer counts, which makes every statistic an exact rational.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_BUDGET: u128 = 100_000_000;
/// Counter intervals handed to workers; fixed so merging never depends on the worker count.
const CHUNKS: u128 = 256;

pub type Fraction = Ratio<u128>;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDepthResult {
    pub n: u32,
    pub k: u32,
    pub mean_dn: Fraction,
    pub dist_dn: BTreeMap<u32, Fraction>,
    pub mean_min_half: Fraction,
    pub mean_max_all: Fraction,
    pub configs_enumerated: u128,
}

fn frac_f64(f: &Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

impl ExactDepthResult {
    pub fn mean_dn_f64(&self) -> f64 {
        frac_f64(&self.mean_dn)
    }

    pub fn mean_min_half_f64(&self) -> f64 {
        frac_f64(&self.mean_min_half)
    }

    pub fn mean_max_all_f64(&self) -> f64 {
        frac_f64(&self.mean_max_all)
    }
}

impl Serialize for ExactDepthResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dist: BTreeMap<String, String> =
            self.dist_dn.iter().map(|(d, p)| (d.to_string(), p.to_string())).collect();
        let mut s = serializer.serialize_struct("ExactDepthResult", 10)?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("k", &self.k)?;
        s.serialize_field("mean_dn", &self.mean_dn.to_string())?;
        s.serialize_field("mean_dn_real", &self.mean_dn_f64())?;
        s.serialize_field("dist_dn", &dist)?;
        s.serialize_field("mean_min_half", &self.mean_min_half.to_string())?;
        s.serialize_field("mean_min_half_real", &self.mean_min_half_f64())?;
        s.serialize_field("mean_max_all", &self.mean_max_all.to_string())?;
        s.serialize_field("mean_max_all_real", &self.mean_max_all_f64())?;
        s.serialize_field("configs_enumerated", &self.configs_enumerated.to_string())?;
        s.end()
    }
}

/// Integer tallies over a range of configurations.
#[derive(Clone, Debug, Default)]
struct Tally {
    dn_counts: Vec<u64>,
    min_half_sum: u128,
    max_all_sum: u128,
    configs: u128,
}

impl Tally {
    fn absorb(&mut self, other: Tally) {
        if self.dn_counts.len() < other.dn_counts.len() {
            self.dn_counts.resize(other.dn_counts.len(), 0);
        }
        for (a, b) in self.dn_counts.iter_mut().zip(other.dn_counts) {
            *a += b;
        }
        self.min_half_sum += other.min_half_sum;
        self.max_all_sum += other.max_all_sum;
        self.configs += other.configs;
    }
}

/// Number of parent configurations, or `None` past `u128`.
pub fn config_count(n: u32, k: u32) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, x| acc.checked_mul(x.checked_pow(k)?))
}

pub fn exact_depths(n: u32, k: u32, budget: u128) -> Result<ExactDepthResult> {
    exact_depths_with(n, k, budget, Execution::default())
}

pub fn exact_depths_with(n: u32, k: u32, budget: u128, exec: Execution) -> Result<ExactDepthResult> {
    if n == 0 {
        return Err(Error::Empty("the oracle needs n >= 1".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let total = config_count(n, k)
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::Budget(format!("n = {n}, k = {k} exceeds the enumeration budget of {budget}")))?;

    let chunks = CHUNKS.min(total);
    let tallies = exec.map(chunks as usize, |c| {
        let c = c as u128;
        let start = total * c / chunks;
        let end = total * (c + 1) / chunks;
        enumerate_range(n as usize, k as usize, start, end - start)
    });
    let mut tally = Tally::default();
    for t in tallies {
        tally.absorb(t);
    }
    debug_assert_eq!(tally.configs, total);

    let mut dist_dn = BTreeMap::new();
    let mut dn_sum = 0u128;
    for (d, &count) in tally.dn_counts.iter().enumerate() {
        if count > 0 {
            dist_dn.insert(d as u32, Ratio::new(count as u128, total));
            dn_sum += d as u128 * count as u128;
        }
    }
    Ok(ExactDepthResult {
        n,
        k,
        mean_dn: Ratio::new(dn_sum, total),
        dist_dn,
        mean_min_half: Ratio::new(tally.min_half_sum, total),
        mean_max_all: Ratio::new(tally.max_all_sum, total),
        configs_enumerated: total,
    })
}

/// Walks `count` configurations starting at counter value `start`.
///
/// Digit `(x - 1) * k + p` is the `p`-th parent of node `x` and has radix `x`;
/// the last digit (node `n`) is least significant.
fn enumerate_range(n: usize, k: usize, start: u128, count: u128) -> Tally {
    let mut tally = Tally { dn_counts: vec![0; n + 1], ..Default::default() };
    if count == 0 {
        return tally;
    }
    let digits_len = n * k;
    let radix = |pos: usize| (pos / k + 1) as u128;
    let mut digits = vec![0u32; digits_len];
    let mut rem = start;
    for pos in (0..digits_len).rev() {
        digits[pos] = (rem % radix(pos)) as u32;
        rem /= radix(pos);
    }

    let half = n.div_ceil(2);
    let mut depths = vec![0u32; n + 1];
    let recompute = |depths: &mut [u32], digits: &[u32], from: usize| {
        for x in from..=n {
            let own = &digits[(x - 1) * k..x * k];
            depths[x] = 1 + own.iter().map(|&p| depths[p as usize]).max().unwrap_or(0);
        }
    };
    recompute(&mut depths, &digits, 1);

    let mut done = 0u128;
    loop {
        tally.dn_counts[depths[n] as usize] += 1;
        tally.min_half_sum += depths[half..].iter().copied().min().unwrap_or(0) as u128;
        tally.max_all_sum += depths.iter().copied().max().unwrap_or(0) as u128;
        tally.configs += 1;
        done += 1;
        if done == count {
            break;
        }
        let mut pos = digits_len - 1;
        loop {
            digits[pos] += 1;
            if (digits[pos] as u128) < radix(pos) {
                break;
            }
            digits[pos] = 0;
            pos -= 1;
        }
        recompute(&mut depths, &digits, pos / k + 1);
    }
    tally
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: u128, b: u128) -> Fraction {
        Ratio::new(a, b)
    }

    #[test]
    fn single_node() {
        let r = exact_depths(1, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.mean_dn, frac(1, 1));
        assert_eq!(r.dist_dn, BTreeMap::from([(1, frac(1, 1))]));
        assert_eq!(r.configs_enumerated, 1);
    }

    #[test]
    fn two_nodes() {
        let r = exact_depths(2, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.mean_dn, frac(7, 4));
        assert_eq!(r.dist_dn, BTreeMap::from([(1, frac(1, 4)), (2, frac(3, 4))]));
        assert_eq!(r.mean_min_half, frac(1, 1));
        assert_eq!(r.mean_max_all, frac(7, 4));
        assert_eq!(r.configs_enumerated, 4);
    }

    #[test]
    fn distribution_sums_to_one_exactly() {
        for (n, k) in [(3, 2), (5, 2), (6, 2), (4, 3)] {
            let r = exact_depths(n, k, DEFAULT_BUDGET).unwrap();
            let total = r.dist_dn.values().fold(frac(0, 1), |a, b| a + b);
            assert_eq!(total, frac(1, 1));
            assert!(r.dist_dn.keys().all(|&d| d >= 1 && d <= n));
            assert!(r.mean_min_half <= r.mean_dn && r.mean_dn <= r.mean_max_all);
        }
    }

    #[test]
    fn chunking_does_not_change_results() {
        let a = exact_depths_with(5, 2, DEFAULT_BUDGET, Execution::Sequential).unwrap();
        let b = exact_depths_with(5, 2, DEFAULT_BUDGET, Execution::Parallel(Some(3))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_and_empty() {
        assert!(matches!(exact_depths(8, 2, DEFAULT_BUDGET), Err(Error::Budget(_))));
        assert!(matches!(exact_depths(3, 2, 35), Err(Error::Budget(_))));
        assert!(exact_depths(3, 2, 36).is_ok());
        assert!(matches!(exact_depths(0, 2, DEFAULT_BUDGET), Err(Error::Empty(_))));
        assert_eq!(config_count(7, 2), Some(5040 * 5040));
        assert_eq!(config_count(200, 10), None);
    }

    #[test]
    fn json_uses_fraction_strings() {
        let r = exact_depths(2, 2, DEFAULT_BUDGET).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mean_dn"], "7/4");
        assert_eq!(v["dist_dn"]["1"], "1/4");
        assert_eq!(v["mean_min_half"], "1");
        assert_eq!(v["mean_dn_real"], 1.75);
    }
}
