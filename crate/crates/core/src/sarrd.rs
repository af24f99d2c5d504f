//! Scaled-attachment random recursive DAGs.
//!
//! Node `x >= 1` picks `k` parents `floor(x * X_{x,p})`, with the `X_{x,p}`
//! i.i.d. copies of the attachment law. Node 0 is the root. The depth `D_x`
//! is the number of edges on the longest path from `x` to the root, so
//! `D_x = 1 + max_p D_{parent_p(x)}` and one left-to-right pass suffices.

use std::io::{Read, Write};

use rand::{Rng, RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::attachment::AttachmentSpec;
use crate::error::{Error, Result};

/// Largest supported number of nodes.
pub const MAX_NODES: u64 = (1 << 31) - 1;
/// Default memory budget, in stored 32-bit integers.
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 31;
/// Largest ideal-tree block, in leaves.
pub const MAX_BLOCK_LEAVES: u64 = 1 << 24;

pub fn dag_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthProfile {
    pub n: u32,
    pub k: u32,
    pub seed: u64,
    pub depths: Vec<u32>,
    /// Flattened parents of nodes `1..=n`, `k` per node.
    parents: Option<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthStats {
    pub d_n: u32,
    /// Minimum depth over `ceil(n/2) <= x <= n`.
    pub min_half: u32,
    /// Maximum depth over `0 <= x <= n`.
    pub max_all: u32,
}

impl DepthStats {
    pub fn from_depths(depths: &[u32]) -> Result<Self> {
        let n = depths.len().saturating_sub(1);
        if n == 0 {
            return Err(Error::Empty("depth statistics need at least one non-root node".into()));
        }
        let half = n.div_ceil(2);
        Ok(DepthStats {
            d_n: depths[n],
            min_half: depths[half..].iter().copied().min().unwrap_or(0),
            max_all: depths.iter().copied().max().unwrap_or(0),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GenerateOptions {
    pub store_parents: bool,
    pub max_entries: u64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { store_parents: false, max_entries: DEFAULT_MAX_ENTRIES }
    }
}

/// Generates one DAG realization and its depth profile.
pub fn generate_depths(
    n: u64,
    k: u32,
    spec: &AttachmentSpec,
    seed: u64,
    store_parents: bool,
) -> Result<DepthProfile> {
    generate_depths_with(n, k, spec, seed, GenerateOptions { store_parents, ..Default::default() })
}

pub fn generate_depths_with(
    n: u64,
    k: u32,
    spec: &AttachmentSpec,
    seed: u64,
    opts: GenerateOptions,
) -> Result<DepthProfile> {
    spec.validate()?;
    if !spec.density_bound().is_finite() {
        return Err(Error::Spec(format!(
            "{} has an unbounded density; DAG generation needs a bounded one",
            spec.label()
        )));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if n > MAX_NODES {
        return Err(Error::Capacity(format!("n = {n} exceeds the maximum of {MAX_NODES} nodes")));
    }
    let mut entries = n + 1;
    if opts.store_parents {
        entries += k as u64 * n;
    }
    if entries > opts.max_entries {
        return Err(Error::Capacity(format!(
            "n = {n}, k = {k} needs {entries} entries, budget is {}",
            opts.max_entries
        )));
    }

    let n_us = n as usize;
    let k_us = k as usize;
    let mut rng = dag_rng(seed);
    let mut depths = vec![0u32; n_us + 1];
    let mut parents = opts.store_parents.then(|| Vec::with_capacity(k_us * n_us));
    for x in 1..=n_us {
        let scale = x as f64;
        let mut deepest = 0u32;
        for _ in 0..k_us {
            let parent = draw_parent(x, scale, spec, &mut rng);
            deepest = deepest.max(depths[parent]);
            if let Some(ps) = parents.as_mut() {
                ps.push(parent as u32);
            }
        }
        depths[x] = deepest + 1;
    }
    Ok(DepthProfile { n: n as u32, k, seed, depths, parents })
}

/// One parent of node `x >= 1`: `floor(x * X)`, clamped to `x - 1` against rounding up.
///
/// `scale` is `x as f64`, hoisted out of the per-parent loop.
#[inline]
pub fn draw_parent<R: Rng + ?Sized>(x: usize, scale: f64, spec: &AttachmentSpec, rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    ((scale * spec.from_uniform(u)) as usize).min(x - 1)
}

/// Depth statistics of one realization, without storing the profile.
pub fn sample_stats(n: u64, k: u32, spec: &AttachmentSpec, seed: u64) -> Result<DepthStats> {
    let profile = generate_depths(n, k, spec, seed, false)?;
    profile.stats()
}

impl DepthProfile {
    /// Builds a profile from explicit parent lists; `parents[x - 1]` holds the parents of `x`.
    pub fn from_parents(k: u32, parents: &[Vec<u32>]) -> Result<Self> {
        let n = parents.len();
        let mut depths = vec![0u32; n + 1];
        let mut flat = Vec::with_capacity(n * k as usize);
        for (i, ps) in parents.iter().enumerate() {
            let x = i + 1;
            if ps.len() != k as usize {
                return Err(Error::Spec(format!("node {x} has {} parents, expected {k}", ps.len())));
            }
            if let Some(p) = ps.iter().find(|&&p| p as usize >= x) {
                return Err(Error::Spec(format!("node {x} has parent {p}, which is not smaller")));
            }
            depths[x] = 1 + ps.iter().map(|&p| depths[p as usize]).max().unwrap_or(0);
            flat.extend_from_slice(ps);
        }
        Ok(DepthProfile { n: n as u32, k, seed: 0, depths, parents: Some(flat) })
    }

    pub fn stats(&self) -> Result<DepthStats> {
        DepthStats::from_depths(&self.depths)
    }

    pub fn has_parents(&self) -> bool {
        self.parents.is_some()
    }

    /// Parents of node `x >= 1`, if stored.
    pub fn parents_of(&self, x: u32) -> Option<&[u32]> {
        if x == 0 || x > self.n {
            return None;
        }
        let k = self.k as usize;
        let start = (x as usize - 1) * k;
        self.parents.as_ref().map(|ps| &ps[start..start + k])
    }

    /// Label reached from `x` by following the parent slots in `word` (letters in `1..=k`).
    pub fn ancestor_label(&self, x: u32, word: &[u32]) -> Result<u32> {
        if self.parents.is_none() {
            return Err(Error::Spec("ancestor labels need a profile with stored parents".into()));
        }
        if x > self.n {
            return Err(Error::Domain(format!("node {x} is not in 0..={}", self.n)));
        }
        let mut label = x;
        for (i, &letter) in word.iter().enumerate() {
            if letter == 0 || letter > self.k {
                return Err(Error::Domain(format!("letter {letter} is not in 1..={}", self.k)));
            }
            if label == 0 {
                return Err(Error::Root { remaining: word.len() - i });
            }
            label = self.parents_of(label).expect("parents stored")[letter as usize - 1];
        }
        Ok(label)
    }

    /// Recomputes depths from the stored parents and compares.
    pub fn check_recurrence(&self) -> bool {
        let Some(ps) = self.parents.as_ref() else {
            return false;
        };
        let k = self.k as usize;
        let mut depths = vec![0u32; self.depths.len()];
        for x in 1..depths.len() {
            let own = &ps[(x - 1) * k..x * k];
            if own.iter().any(|&p| p as usize >= x) {
                return false;
            }
            depths[x] = 1 + own.iter().map(|&p| depths[p as usize]).max().unwrap_or(0);
        }
        depths == self.depths
    }

    /// Binary dump: `n` (u64), `k` (u32), `seed` (u64), then `n + 1` depths (u32), all little-endian.
    pub fn write_depths<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&self.k.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(4 * self.depths.len());
        for d in &self.depths {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_depths<R: Read>(mut input: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8);
        input.read_exact(&mut b4)?;
        let k = u32::from_le_bytes(b4);
        input.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        if n > MAX_NODES {
            return Err(Error::Capacity(format!("dump header claims n = {n}")));
        }
        let mut raw = vec![0u8; 4 * (n as usize + 1)];
        input.read_exact(&mut raw)?;
        let depths = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(DepthProfile { n: n as u32, k, seed, depths, parents: None })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealTreePath {
    /// `V_0 = n, V_1, ..`; ends early at the first zero.
    pub labels: Vec<u64>,
    /// The maximizing block word chosen at each step, letters in `1..=k`.
    pub words: Vec<Vec<u32>>,
    pub reached_zero_at: Option<usize>,
}

/// Block-greedy descent in the ideal ancestor tree.
///
/// Each of the `q` steps explores all `k^ell` words below the current label,
/// drawing a fresh attachment variate for every tree edge, and moves to the
/// largest label reached. Ties go to the lexicographically smallest word.
pub fn ideal_tree_block_greedy(
    n: u64,
    k: u32,
    spec: &AttachmentSpec,
    ell: u32,
    q: u32,
    seed: u64,
) -> Result<IdealTreePath> {
    spec.validate()?;
    if k == 0 || ell == 0 || q == 0 {
        return Err(Error::Domain("k, ell and q must all be at least 1".into()));
    }
    let leaves = (k as u64).checked_pow(ell).filter(|&l| l <= MAX_BLOCK_LEAVES);
    if leaves.is_none() {
        return Err(Error::Budget(format!(
            "k^ell = {k}^{ell} exceeds the block budget of {MAX_BLOCK_LEAVES} words"
        )));
    }

    struct Search<'a, R> {
        k: u32,
        ell: u32,
        spec: &'a AttachmentSpec,
        rng: R,
        word: Vec<u32>,
        best: Option<(u64, Vec<u32>)>,
    }

    impl<R: Rng> Search<'_, R> {
        fn descend(&mut self, label: u64) {
            if self.word.len() == self.ell as usize {
                if self.best.as_ref().is_none_or(|(b, _)| label > *b) {
                    self.best = Some((label, self.word.clone()));
                }
                return;
            }
            for letter in 1..=self.k {
                let x = self.spec.sample(&mut self.rng);
                let child = ((label as f64 * x) as u64).min(label.saturating_sub(1));
                self.word.push(letter);
                self.descend(child);
                self.word.pop();
            }
        }
    }

    let mut search = Search { k, ell, spec, rng: dag_rng(seed), word: Vec::new(), best: None };
    let mut labels = vec![n];
    let mut words = Vec::new();
    let mut reached_zero_at = None;
    for step in 1..=q as usize {
        let current = *labels.last().expect("non-empty");
        search.best = None;
        search.descend(current);
        let (label, word) = search.best.take().expect("at least one word");
        labels.push(label);
        words.push(word);
        if label == 0 {
            reached_zero_at = Some(step);
            break;
        }
    }
    Ok(IdealTreePath { labels, words, reached_zero_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_has_depth_one() {
        for seed in 0..20 {
            let p = generate_depths(1, 2, &AttachmentSpec::Uniform, seed, true).unwrap();
            assert_eq!(p.depths, vec![0, 1]);
            assert_eq!(p.ancestor_label(1, &[1]).unwrap(), 0);
        }
    }

    #[test]
    fn empty_dag() {
        let p = generate_depths(0, 2, &AttachmentSpec::Uniform, 1, false).unwrap();
        assert_eq!(p.depths, vec![0]);
        assert!(matches!(p.stats(), Err(Error::Empty(_))));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_depths(5000, 3, &AttachmentSpec::Uniform, 77, false).unwrap();
        let b = generate_depths(5000, 3, &AttachmentSpec::Uniform, 77, false).unwrap();
        let c = generate_depths(5000, 3, &AttachmentSpec::Uniform, 78, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.depths, c.depths);
    }

    #[test]
    fn mean_depth_of_node_two() {
        // D_2 = 1 only when both parents are 0: E[D_2] = 7/4
        let reps = 200_000u64;
        let total: u64 = (0..reps)
            .map(|s| generate_depths(2, 2, &AttachmentSpec::Uniform, s, false).unwrap().depths[2] as u64)
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (3.0f64 / 16.0 / reps as f64).sqrt();
        assert!((mean - 1.75).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn depth_bounds_hold() {
        let p = generate_depths(20_000, 2, &AttachmentSpec::power_tail(3.0).unwrap(), 9, false).unwrap();
        assert_eq!(p.depths[0], 0);
        assert_eq!(p.depths[1], 1);
        assert!(p.depths.iter().enumerate().skip(1).all(|(x, &d)| d >= 1 && d as usize <= x));
    }

    #[test]
    fn rejects_unbounded_density_and_budget() {
        let heavy = AttachmentSpec::power_tail(0.5).unwrap();
        assert!(matches!(generate_depths(10, 2, &heavy, 0, false), Err(Error::Spec(_))));
        let opts = GenerateOptions { store_parents: true, max_entries: 100 };
        assert!(matches!(
            generate_depths_with(50, 2, &AttachmentSpec::Uniform, 0, opts),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            generate_depths(MAX_NODES + 1, 2, &AttachmentSpec::Uniform, 0, false),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn stats_examples() {
        let s = DepthStats::from_depths(&[0, 1]).unwrap();
        assert_eq!(s, DepthStats { d_n: 1, min_half: 1, max_all: 1 });
        let s = DepthStats::from_depths(&[0, 1, 2, 2]).unwrap();
        assert_eq!(s, DepthStats { d_n: 2, min_half: 2, max_all: 2 });
        // ceil(5/2) = 3, so node 2 is excluded
        let s = DepthStats::from_depths(&[0, 1, 1, 2, 3, 2]).unwrap();
        assert_eq!(s, DepthStats { d_n: 2, min_half: 2, max_all: 3 });
    }

    /// DAG on {0..6}: node 6 has parents (1, 5), node 5 has (1, 2).
    fn small_dag() -> DepthProfile {
        DepthProfile::from_parents(
            2,
            &[vec![0, 0], vec![0, 1], vec![2, 1], vec![3, 0], vec![1, 2], vec![1, 5]],
        )
        .unwrap()
    }

    #[test]
    fn ancestor_labels_follow_parent_slots() {
        let dag = small_dag();
        assert_eq!(dag.ancestor_label(6, &[]).unwrap(), 6);
        assert_eq!(dag.ancestor_label(6, &[1]).unwrap(), 1);
        assert_eq!(dag.ancestor_label(6, &[2]).unwrap(), 5);
        assert_eq!(dag.ancestor_label(6, &[1, 2]).unwrap(), 0);
        assert_eq!(dag.ancestor_label(6, &[2, 2]).unwrap(), 2);
        assert_eq!(dag.ancestor_label(6, &[2, 2, 2]).unwrap(), 1);
        assert!(matches!(dag.ancestor_label(6, &[1, 2, 1]), Err(Error::Root { remaining: 1 })));
        assert!(matches!(dag.ancestor_label(6, &[3]), Err(Error::Domain(_))));
        assert!(matches!(dag.ancestor_label(7, &[]), Err(Error::Domain(_))));
        assert_eq!(dag.depths, vec![0, 1, 2, 3, 4, 3, 4]);
        assert!(dag.check_recurrence());
    }

    #[test]
    fn explicit_parents_must_precede() {
        assert!(DepthProfile::from_parents(1, &[vec![0], vec![2]]).is_err());
        assert!(DepthProfile::from_parents(2, &[vec![0]]).is_err());
    }

    #[test]
    fn ancestor_label_without_parents() {
        let p = generate_depths(10, 2, &AttachmentSpec::Uniform, 1, false).unwrap();
        assert!(p.ancestor_label(5, &[1]).is_err());
        assert!(!p.check_recurrence());
    }

    #[test]
    fn dump_round_trip() {
        let p = generate_depths(1000, 2, &AttachmentSpec::Uniform, 5, false).unwrap();
        let mut buf = Vec::new();
        p.write_depths(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 4 * 1001);
        assert_eq!(&buf[..8], &1000u64.to_le_bytes());
        let back = DepthProfile::read_depths(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        assert!(DepthProfile::read_depths(&buf[..30]).is_err());
    }

    #[test]
    fn ideal_tree_single_letter_is_multiplicative_walk() {
        let spec = AttachmentSpec::Uniform;
        let path = ideal_tree_block_greedy(1_000_000, 1, &spec, 1, 30, 4).unwrap();
        let mut rng = dag_rng(4);
        let mut v = 1_000_000u64;
        for (j, &label) in path.labels.iter().enumerate().skip(1) {
            v = ((v as f64 * spec.sample(&mut rng)) as u64).min(v.saturating_sub(1));
            assert_eq!(label, v, "step {j}");
        }
        if let Some(z) = path.reached_zero_at {
            assert_eq!(path.labels[z], 0);
            assert_eq!(path.labels.len(), z + 1);
        }
    }

    #[test]
    fn ideal_tree_labels_never_increase() {
        for seed in 0..50 {
            let path = ideal_tree_block_greedy(10_000, 3, &AttachmentSpec::Uniform, 3, 10, seed).unwrap();
            assert!(path.labels.windows(2).all(|w| w[1] <= w[0]));
            assert!(path.words.iter().all(|w| w.len() == 3 && w.iter().all(|&l| (1..=3).contains(&l))));
        }
    }

    #[test]
    fn ideal_tree_budget() {
        assert!(matches!(
            ideal_tree_block_greedy(100, 2, &AttachmentSpec::Uniform, 25, 1, 0),
            Err(Error::Budget(_))
        ));
        assert!(ideal_tree_block_greedy(100, 2, &AttachmentSpec::Uniform, 24, 1, 0).is_ok());
    }
}
