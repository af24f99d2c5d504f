//! Minima of branching random walks with constant branching.
//!
//! Every node of the k-ary tree carries an i.i.d. nonnegative step; the
//! position `S_u` of a word is the sum of steps along its root path and
//! `M_m` is the minimum position over the `k^m` words of length `m`.
//!
//! Steps are assigned in pre-order: the node with pre-order index `i` (root
//! is 0) takes the variate at counter `i` of a [`CounterStream`]. Because the
//! stream is random access, skipping a pruned subtree costs nothing and the
//! pruned search returns exactly the minimum an exhaustive sweep over the same
//! variates would.

use serde::{Deserialize, Serialize};

use crate::attachment::StepSpec;
use crate::constants::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::derive_seed;
use crate::stream::CounterStream;

/// Lattice tables larger than this are refused.
pub const LATTICE_TABLE_BUDGET: u64 = 10_000_000;
/// Hits a grid point needs before it enters the rate fit.
pub const MIN_HITS: u64 = 10;
/// Grid points with enough hits needed for a fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrwMinResult {
    pub m: u32,
    pub k: u32,
    pub min_value: f64,
    pub nodes_visited: u64,
    pub seed: u64,
    /// Letters (`1..=k`) of a minimizing word, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Vec<u32>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub prune: bool,
    pub witness: bool,
    /// Only sums strictly below the cutoff count; with none, `min_value` is infinite.
    pub cutoff: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { prune: true, witness: false, cutoff: f64::INFINITY }
    }
}

/// Subtree sizes by depth for a complete k-ary tree of height `m`.
fn subtree_sizes(k: u32, m: u32) -> Result<Vec<u128>> {
    let mut sizes = vec![0u128; m as usize + 2];
    sizes[m as usize] = 1;
    for d in (0..m as usize).rev() {
        sizes[d] = sizes[d + 1]
            .checked_mul(k as u128)
            .and_then(|s| s.checked_add(1))
            .ok_or_else(|| Error::Capacity(format!("a {k}-ary tree of height {m} is too large to index")))?;
    }
    Ok(sizes)
}

struct Search<'a> {
    spec: &'a StepSpec,
    stream: CounterStream,
    k: usize,
    m: usize,
    sizes: Vec<u128>,
    opts: SearchOptions,
    best: f64,
    visited: u64,
    /// Per-depth child buffers of `(partial sum, letter, index)`.
    scratch: Vec<(f64, u32, u128)>,
    path: Vec<u32>,
    witness: Vec<u32>,
}

impl Search<'_> {
    fn visit(&mut self, index: u128, depth: usize, sum: f64) {
        self.visited += 1;
        if depth == self.m {
            if sum < self.best {
                self.best = sum;
                if self.opts.witness {
                    self.witness.clone_from(&self.path);
                }
            }
            return;
        }
        let k = self.k;
        let base = depth * k;
        let child_size = self.sizes[depth + 1];
        for c in 0..k {
            let child = index + 1 + c as u128 * child_size;
            let step = self.spec.step_from_uniform(self.stream.uniform_at(child));
            self.scratch[base + c] = (sum + step, c as u32 + 1, child);
        }
        if self.opts.prune {
            // cheapest child first so the incumbent drops early
            self.scratch[base..base + k].sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        }
        for c in 0..k {
            let (child_sum, letter, child) = self.scratch[base + c];
            if self.opts.prune && child_sum >= self.best {
                break;
            }
            self.path.push(letter);
            self.visit(child, depth + 1, child_sum);
            self.path.pop();
        }
    }
}

/// Exact `M_m` by pruned depth-first search.
pub fn simulate_min(spec: &StepSpec, k: u32, m: u32, seed: u64) -> Result<BrwMinResult> {
    simulate_min_with(spec, k, m, seed, SearchOptions::default())
}

/// `M_m` by visiting every node; same variates as [`simulate_min`].
pub fn simulate_min_exhaustive(spec: &StepSpec, k: u32, m: u32, seed: u64) -> Result<BrwMinResult> {
    simulate_min_with(spec, k, m, seed, SearchOptions { prune: false, ..Default::default() })
}

pub fn simulate_min_with(
    spec: &StepSpec,
    k: u32,
    m: u32,
    seed: u64,
    opts: SearchOptions,
) -> Result<BrwMinResult> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if m == 0 {
        return Ok(BrwMinResult {
            m,
            k,
            min_value: if 0.0 < opts.cutoff { 0.0 } else { f64::INFINITY },
            nodes_visited: 1,
            seed,
            witness: opts.witness.then(Vec::new),
        });
    }
    let mut search = Search {
        spec,
        stream: CounterStream::new(seed),
        k: k as usize,
        m: m as usize,
        sizes: subtree_sizes(k, m)?,
        opts,
        best: opts.cutoff,
        visited: 0,
        scratch: vec![(0.0, 0, 0); m as usize * k as usize],
        path: Vec::with_capacity(m as usize),
        witness: Vec::new(),
    };
    search.visit(0, 0, 0.0);
    // leaves only replace the incumbent when strictly below it, so `best == cutoff` means none did
    let found = search.best < opts.cutoff;
    Ok(BrwMinResult {
        m,
        k,
        min_value: if found { search.best } else { f64::INFINITY },
        nodes_visited: search.visited,
        seed,
        witness: opts.witness.then_some(search.witness),
    })
}

/// Position of the word `letters` under the pre-order assignment of `seed`.
pub fn path_position(spec: &StepSpec, k: u32, m: u32, seed: u64, letters: &[u32]) -> Result<f64> {
    let sizes = subtree_sizes(k, m)?;
    let stream = CounterStream::new(seed);
    let mut index = 0u128;
    let mut sum = 0.0;
    for (depth, &letter) in letters.iter().enumerate() {
        if letter == 0 || letter > k || depth >= m as usize {
            return Err(Error::Domain(format!("word {letters:?} is not a path of the {k}-ary tree of height {m}")));
        }
        index += 1 + (letter - 1) as u128 * sizes[depth + 1];
        sum += spec.step_from_uniform(stream.uniform_at(index));
    }
    Ok(sum)
}

/// Stream index of replication `rep` at level `m`.
pub fn replication_stream(m: u32, rep: u64) -> u64 {
    ((m as u64) << 32) | (rep & 0xffff_ffff)
}

/// `reps` independent copies of `M_m`, in replication order.
pub fn sample_minima(
    spec: &StepSpec,
    k: u32,
    m: u32,
    reps: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    subtree_sizes(k, m)?;
    sample_minima_below(spec, k, m, reps, master_seed, exec, f64::INFINITY)
}

/// Like [`sample_minima`], but minima at or above `cutoff` come back as infinity.
///
/// Far cheaper when only the event `M_m < cutoff` matters.
pub fn sample_minima_below(
    spec: &StepSpec,
    k: u32,
    m: u32,
    reps: u64,
    master_seed: u64,
    exec: Execution,
    cutoff: f64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    subtree_sizes(k, m)?;
    let opts = SearchOptions { cutoff, ..Default::default() };
    let out = exec.map(reps as usize, |r| {
        let seed = derive_seed(master_seed, replication_stream(m, r as u64));
        simulate_min_with(spec, k, m, seed, opts).map(|res| res.min_value)
    });
    out.into_iter().collect()
}

/// Distribution of `M_m` for a lattice step law, on the lattice `j / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeMinDistribution {
    pub m: u32,
    pub k: u32,
    /// Common denominator of the support.
    pub scale: u64,
    /// `survival[j] = P(M_m > j / scale)` for `j = 0..=m * max_support * scale`.
    pub survival: Vec<f64>,
}

impl LatticeMinDistribution {
    /// `P(M_m <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let j = (t * self.scale as f64 + 1e-9).floor();
        if j >= self.survival.len() as f64 {
            return 1.0;
        }
        1.0 - self.survival[j as usize]
    }

    /// `P(M_m = j / scale)`.
    pub fn pmf(&self, j: usize) -> f64 {
        let above = self.survival.get(j).copied().unwrap_or(0.0);
        let below = if j == 0 { 1.0 } else { self.survival.get(j - 1).copied().unwrap_or(0.0) };
        below - above
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.scale as f64
    }
}

fn common_denominator(support: &[f64]) -> Option<u64> {
    (1..=1000u64).find(|&d| {
        support.iter().all(|&y| {
            let scaled = y * d as f64;
            (scaled - scaled.round()).abs() <= 1e-9 * scaled.abs().max(1.0)
        })
    })
}

/// Exact law of `M_m` for lattice steps, by the survival recursion
/// `G_m(t) = (sum_y p_y G_{m-1}(t - y))^k` with `G_0(t) = [t < 0]`.
pub fn exact_lattice_min_cdf(spec: &StepSpec, k: u32, m: u32) -> Result<LatticeMinDistribution> {
    spec.validate()?;
    let StepSpec::Lattice { support, probs } = spec else {
        return Err(Error::Spec("the exact minimum law needs a lattice step".into()));
    };
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let scale = common_denominator(support)
        .ok_or_else(|| Error::Spec("lattice support has no common denominator up to 1000".into()))?;
    let atoms: Vec<(usize, f64)> = support
        .iter()
        .zip(probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(y, p)| ((y * scale as f64).round() as usize, *p))
        .collect();
    let top = atoms.iter().map(|a| a.0).max().unwrap_or(0) as u64;
    let len = (m as u64).saturating_mul(top).saturating_add(1);
    if len.saturating_mul(m.max(1) as u64) > LATTICE_TABLE_BUDGET {
        return Err(Error::Budget(format!(
            "lattice table of {len} points over {m} levels exceeds {LATTICE_TABLE_BUDGET} entries"
        )));
    }
    let len = len as usize;
    let mut survival = vec![0.0f64; len];
    let mut next = vec![0.0f64; len];
    for _ in 0..m {
        for (t, slot) in next.iter_mut().enumerate() {
            let inner: f64 = atoms
                .iter()
                .map(|&(y, p)| if t < y { p } else { p * survival[t - y] })
                .sum();
            *slot = inner.powi(k as i32);
        }
        std::mem::swap(&mut survival, &mut next);
    }
    Ok(LatticeMinDistribution { m, k, scale, survival })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Right,
    Left,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub m: u32,
    pub hits: u64,
    pub reps: u64,
    pub p_hat: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub side: TailSide,
    pub eps: f64,
    pub rows: Vec<TailRow>,
    /// Least-squares slope of `-log p_hat` against `m`.
    pub fitted_rate: Option<f64>,
    /// `None` where no rate comparison applies (lattice right tails).
    pub theory_rate: Option<f64>,
}

impl TailEstimate {
    pub fn m_grid(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.m).collect()
    }

    /// Relative error of the fitted rate against theory.
    pub fn relative_error(&self) -> Option<f64> {
        let (fit, theory) = (self.fitted_rate?, self.theory_rate?);
        Some((fit - theory).abs() / theory)
    }
}

/// Replications needed for `min_hits` expected hits when `p ~ exp(-rate * m)`.
pub fn required_reps(theory_rate: f64, m: u32, min_hits: u64) -> u64 {
    (min_hits as f64 * (theory_rate * m as f64).exp()).ceil() as u64
}

/// Unweighted least-squares slope of `-log p_hat` against `m` over rows with enough hits.
pub fn fit_rate(rows: &[TailRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.hits >= MIN_HITS)
        .map(|r| (r.m as f64, -r.p_hat.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Tail threshold `(gamma +- eps) m` for level `m`.
pub fn tail_threshold(gamma: f64, side: TailSide, eps: f64, m: u32) -> f64 {
    let level = match side {
        TailSide::Right => gamma + eps,
        TailSide::Left => gamma - eps,
    };
    level * m as f64
}

pub(crate) fn tail_row(m: u32, minima: &[f64], side: TailSide, threshold: f64) -> TailRow {
    let hits = minima
        .iter()
        .filter(|&&v| match side {
            TailSide::Right => v >= threshold,
            TailSide::Left => v <= threshold,
        })
        .count() as u64;
    let reps = minima.len() as u64;
    let p_hat = if reps == 0 { 0.0 } else { hits as f64 / reps as f64 };
    let se = if reps == 0 { 0.0 } else { (p_hat * (1.0 - p_hat) / reps as f64).sqrt() };
    TailRow { m, hits, reps, p_hat, se }
}

pub(crate) fn check_grid(m_grid: &[u32]) -> Result<()> {
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("grid must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

/// Theory rate for one side; `Ok(None)` when no comparison applies.
pub fn theory_rate(spec: &StepSpec, k: u32, side: TailSide, eps: f64) -> Result<Option<f64>> {
    let gamma = constants::gamma(spec, k, DEFAULT_TOL)?;
    match side {
        TailSide::Right => {
            if eps.is_nan() || eps <= 0.0 {
                return Err(Error::Domain(format!("eps must be positive, got {eps}")));
            }
            Ok(spec.exponential_rate().map(|alpha| k as f64 * alpha * eps))
        }
        TailSide::Left => {
            if !(eps > 0.0 && eps < gamma) {
                return Err(Error::Domain(format!("left tail needs 0 < eps < gamma = {gamma}, got {eps}")));
            }
            let rate = constants::rate_function(spec, gamma - eps, DEFAULT_TOL)?;
            Ok(Some(rate - (k as f64).ln()))
        }
    }
}

/// Builds a tail estimate from per-level samples of `M_m`.
pub fn tail_from_minima(
    spec: &StepSpec,
    k: u32,
    side: TailSide,
    eps: f64,
    levels: &[(u32, Vec<f64>)],
) -> Result<TailEstimate> {
    let theory = theory_rate(spec, k, side, eps)?;
    let gamma = constants::gamma(spec, k, DEFAULT_TOL)?;
    let rows: Vec<TailRow> = levels
        .iter()
        .map(|(m, minima)| tail_row(*m, minima, side, tail_threshold(gamma, side, eps, *m)))
        .collect();
    let fitted_rate = fit_rate(&rows);
    let estimate = TailEstimate { side, eps, rows, fitted_rate, theory_rate: theory };
    if estimate.fitted_rate.is_none() {
        return Err(Error::Underpowered(Box::new(estimate)));
    }
    Ok(estimate)
}

#[allow(clippy::too_many_arguments)]
fn tail_estimate(
    spec: &StepSpec,
    k: u32,
    side: TailSide,
    eps: f64,
    m_grid: &[u32],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<TailEstimate> {
    check_grid(m_grid)?;
    if reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    theory_rate(spec, k, side, eps)?;
    let gamma = constants::gamma(spec, k, DEFAULT_TOL)?;
    let levels = m_grid
        .iter()
        .map(|&m| {
            let threshold = tail_threshold(gamma, side, eps, m);
            // the hit indicator only needs to know whether M_m falls below the cutoff
            let cutoff = match side {
                TailSide::Right => threshold,
                TailSide::Left => threshold.next_up(),
            };
            Ok((m, sample_minima_below(spec, k, m, reps, seed, exec, cutoff)?))
        })
        .collect::<Result<Vec<_>>>()?;
    tail_from_minima(spec, k, side, eps, &levels)
}

/// Estimates `P(M_m >= (gamma + eps) m)` along `m_grid`; theory rate `k alpha eps`.
pub fn right_tail_estimate(
    spec: &StepSpec,
    k: u32,
    eps: f64,
    m_grid: &[u32],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<TailEstimate> {
    tail_estimate(spec, k, TailSide::Right, eps, m_grid, reps, seed, exec)
}

/// Estimates `P(M_m <= (gamma - eps) m)` along `m_grid`; theory rate `rate(gamma - eps) - log k`.
pub fn left_tail_estimate(
    spec: &StepSpec,
    k: u32,
    eps: f64,
    m_grid: &[u32],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<TailEstimate> {
    tail_estimate(spec, k, TailSide::Left, eps, m_grid, reps, seed, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_preserves_tail_indicators() {
        let spec = StepSpec::exponential(1.0).unwrap();
        let gamma = constants::gamma(&spec, 2, DEFAULT_TOL).unwrap();
        for m in [6, 10] {
            let full = sample_minima(&spec, 2, m, 400, 9, Execution::Sequential).unwrap();
            for (side, eps) in [(TailSide::Right, 0.05), (TailSide::Left, 0.1)] {
                let threshold = tail_threshold(gamma, side, eps, m);
                let cutoff = if side == TailSide::Right { threshold } else { threshold.next_up() };
                let capped = sample_minima_below(&spec, 2, m, 400, 9, Execution::Sequential, cutoff).unwrap();
                for (a, b) in full.iter().zip(&capped) {
                    if a < &cutoff {
                        assert_eq!(a, b);
                    } else {
                        assert_eq!(*b, f64::INFINITY, "a = {a}, cutoff = {cutoff}, side {side:?}, m {m}");
                    }
                }
                assert_eq!(tail_row(m, &full, side, threshold), tail_row(m, &capped, side, threshold));
            }
        }
    }

    fn bernoulli() -> StepSpec {
        StepSpec::lattice(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    fn exp1() -> StepSpec {
        StepSpec::exponential(1.0).unwrap()
    }

    #[test]
    fn zero_steps_give_zero_minimum() {
        let zero = StepSpec::lattice(vec![0.0], vec![1.0]).unwrap();
        for (k, m) in [(1, 5), (2, 10), (3, 4)] {
            assert_eq!(simulate_min(&zero, k, m, 1).unwrap().min_value, 0.0);
        }
    }

    #[test]
    fn level_zero() {
        let r = simulate_min(&exp1(), 2, 0, 3).unwrap();
        assert_eq!(r.min_value, 0.0);
        let d = exact_lattice_min_cdf(&bernoulli(), 2, 0).unwrap();
        assert_eq!(d.cdf(0.0), 1.0);
    }

    #[test]
    fn witness_attains_minimum() {
        for seed in 0..30 {
            let opts = SearchOptions { witness: true, ..Default::default() };
            let r = simulate_min_with(&exp1(), 3, 9, seed, opts).unwrap();
            let w = r.witness.clone().unwrap();
            assert_eq!(w.len(), 9);
            assert_eq!(path_position(&exp1(), 3, 9, seed, &w).unwrap(), r.min_value);
            // any other sampled path is no better
            let leftmost = vec![1; 9];
            assert!(r.min_value <= path_position(&exp1(), 3, 9, seed, &leftmost).unwrap());
        }
    }

    #[test]
    fn pruning_matches_exhaustive_search() {
        for seed in 0..20 {
            let a = simulate_min(&exp1(), 2, 10, seed).unwrap();
            let b = simulate_min_exhaustive(&exp1(), 2, 10, seed).unwrap();
            assert_eq!(a.min_value, b.min_value);
            assert!(a.nodes_visited < b.nodes_visited);
            assert_eq!(b.nodes_visited, (1 << 11) - 1);
        }
    }

    #[test]
    fn single_branch_is_a_random_walk() {
        let r = simulate_min(&exp1(), 1, 6, 9).unwrap();
        assert_eq!(r.min_value, path_position(&exp1(), 1, 6, 9, &[1; 6]).unwrap());
    }

    #[test]
    fn bernoulli_first_level() {
        // P(M_1 = 0) = 3/4
        let reps = 100_000u64;
        let minima = sample_minima(&bernoulli(), 2, 1, reps, 5, Execution::default()).unwrap();
        let zeros = minima.iter().filter(|&&v| v == 0.0).count() as f64 / reps as f64;
        let sigma = (0.75f64 * 0.25 / reps as f64).sqrt();
        assert!((zeros - 0.75).abs() < 3.0 * sigma, "{zeros}");
    }

    #[test]
    fn exact_law_small_levels() {
        let d1 = exact_lattice_min_cdf(&bernoulli(), 2, 1).unwrap();
        assert_eq!(d1.cdf(0.0), 0.75);
        let d2 = exact_lattice_min_cdf(&bernoulli(), 2, 2).unwrap();
        assert_eq!(d2.pmf(0), 39.0 / 64.0);
        assert_eq!(d2.cdf(2.0), 1.0);
        assert_eq!(d2.cdf(-0.5), 0.0);
        let total: f64 = (0..=2).map(|j| d2.pmf(j)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_law_with_fractional_support() {
        // steps {0.5, 1.5} equal {1, 3} halves; M_1 for k = 1 is just the step
        let spec = StepSpec::lattice(vec![0.5, 1.5], vec![0.25, 0.75]).unwrap();
        let d = exact_lattice_min_cdf(&spec, 1, 1).unwrap();
        assert_eq!(d.scale, 2);
        assert_eq!(d.cdf(0.4), 0.0);
        assert_eq!(d.cdf(0.5), 0.25);
        assert_eq!(d.cdf(1.49), 0.25);
        assert_eq!(d.cdf(1.5), 1.0);
    }

    #[test]
    fn exact_law_errors() {
        assert!(matches!(exact_lattice_min_cdf(&exp1(), 2, 3), Err(Error::Spec(_))));
        let wide = StepSpec::lattice(vec![0.0, 100_000.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(exact_lattice_min_cdf(&wide, 2, 200), Err(Error::Budget(_))));
        let irrational = StepSpec::lattice(vec![0.0, std::f64::consts::PI], vec![0.5, 0.5]).unwrap();
        assert!(matches!(exact_lattice_min_cdf(&irrational, 2, 3), Err(Error::Spec(_))));
    }

    #[test]
    fn rate_fit_recovers_exact_slope() {
        let rows: Vec<TailRow> = [5u32, 10, 15, 20]
            .iter()
            .map(|&m| {
                let p_hat = 0.8 * (-0.3 * m as f64).exp();
                TailRow { m, hits: 1000, reps: 1_000_000, p_hat, se: 0.0 }
            })
            .collect();
        assert!((fit_rate(&rows).unwrap() - 0.3).abs() < 1e-12);
        let mut sparse = rows.clone();
        sparse[0].hits = 9;
        sparse[1].hits = 3;
        assert_eq!(fit_rate(&sparse), None);
    }

    #[test]
    fn impossible_right_tail_is_underpowered() {
        // gamma = 0 for the fair Bernoulli walk; M_m <= m always, so (0 + 1.5) m is out of reach
        let err = right_tail_estimate(&bernoulli(), 2, 1.5, &[2, 4, 6], 1000, 1, Execution::default())
            .unwrap_err();
        match err {
            Error::Underpowered(est) => {
                assert!(est.rows.iter().all(|r| r.hits == 0));
                assert_eq!(est.theory_rate, None);
                assert_eq!(est.fitted_rate, None);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn left_tail_domain() {
        let g = constants::gamma(&exp1(), 2, DEFAULT_TOL).unwrap();
        for eps in [g, g + 0.1, 0.0] {
            assert!(matches!(
                left_tail_estimate(&exp1(), 2, eps, &[2, 3, 4], 10, 0, Execution::Sequential),
                Err(Error::Domain(_))
            ));
        }
        let t = theory_rate(&exp1(), 2, TailSide::Left, 0.1).unwrap().unwrap();
        let z = g - 0.1;
        assert!((t - (z - 1.0 - z.ln() - 2f64.ln())).abs() < 1e-9);
        assert!(t > 0.0);
    }

    #[test]
    fn grid_must_increase() {
        assert!(right_tail_estimate(&exp1(), 2, 0.1, &[4, 4], 10, 0, Execution::Sequential).is_err());
        assert!(right_tail_estimate(&exp1(), 2, 0.1, &[], 10, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn tail_json_shape() {
        let est = TailEstimate {
            side: TailSide::Right,
            eps: 0.05,
            rows: vec![TailRow { m: 8, hits: 10, reps: 100, p_hat: 0.1, se: 0.03 }],
            fitted_rate: None,
            theory_rate: Some(0.1),
        };
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(keys, ["eps", "fitted_rate", "rows", "side", "theory_rate"]);
        assert_eq!(v["side"], "right");
        let row = v["rows"][0].as_object().unwrap();
        let keys: Vec<&str> = row.keys().map(|s| s.as_str()).collect();
        assert_eq!(keys, ["hits", "m", "p_hat", "reps", "se"]);
    }

    #[test]
    fn required_reps_scales_exponentially() {
        assert_eq!(required_reps(0.0, 10, 10), 10);
        assert_eq!(required_reps(2f64.ln(), 3, 10), 80);
    }
}
