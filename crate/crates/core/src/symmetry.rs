//! Symbol permutations that leave a verifier's verdicts unchanged.
//!
//! The invariance group is found by brute force: all `k!` permutations are
//! tried against every sequence of each requested length. Checking only
//! bounded lengths can admit permutations that a longer sequence would rule
//! out, so the reported group is a superset of the true one and the error
//! bounds derived from it are upper bounds.

use std::collections::HashSet;

use itertools::Itertools;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Assignment, SymbolPrior};
use crate::verifiers::Verify;

/// Largest alphabet for which all `k!` permutations are enumerated.
pub const MAX_EXHAUSTIVE_SYMBOLS: usize = 8;
/// Largest number of sequences checked per length.
pub const MAX_SEQUENCES_PER_LENGTH: u64 = 2_000_000;

/// A bijection on `0..k`: symbol `s` maps to `mapping[s]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || seen[m] {
                return Err(Error::contract(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            mapping: (0..k).collect(),
        }
    }

    /// Exchanges two symbols.
    pub fn transposition(k: usize, a: usize, b: usize) -> Self {
        let mut mapping: Vec<usize> = (0..k).collect();
        mapping.swap(a, b);
        Permutation { mapping }
    }

    pub fn degree(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn apply(&self, symbol: usize) -> usize {
        self.mapping[symbol]
    }

    pub fn apply_all(&self, symbols: &[usize]) -> Vec<usize> {
        symbols.iter().map(|&s| self.mapping[s]).collect()
    }

    /// `self` after `other`: `s -> self(other(s))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            mapping: other.mapping.iter().map(|&s| self.mapping[s]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut mapping = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            mapping[m] = i;
        }
        Permutation { mapping }
    }
}

/// Symmetry structure of a verifier and the error bounds it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub group: Vec<Permutation>,
    pub orbits: Vec<Vec<usize>>,
    pub fixed_points: Vec<usize>,
    pub r_up: f64,
    pub r_avg: f64,
    pub check_length: usize,
}

fn for_each_sequence(
    k: usize,
    len: usize,
    mut f: impl FnMut(&[usize]) -> Result<bool>,
) -> Result<bool> {
    let mut cur = vec![0usize; len];
    loop {
        if !f(&cur)? {
            return Ok(false);
        }
        let mut p = len;
        loop {
            if p == 0 {
                return Ok(true);
            }
            p -= 1;
            cur[p] += 1;
            if cur[p] < k {
                break;
            }
            cur[p] = 0;
        }
    }
}

fn preserves<V: Verify + ?Sized>(
    verifier: &V,
    sigma: &Permutation,
    k: usize,
    lengths: &[usize],
) -> Result<bool> {
    let mut mapped = Vec::new();
    for &len in lengths {
        let ok = for_each_sequence(k, len, |s| {
            mapped.clear();
            mapped.extend(s.iter().map(|&x| sigma.apply(x)));
            Ok(verifier.verify(s)? == verifier.verify(&mapped)?)
        })?;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Asserts identity membership, closure under composition and inverses.
pub fn check_group(group: &[Permutation], k: usize) -> Result<()> {
    if group.iter().any(|g| g.degree() != k) {
        return Err(Error::contract(format!(
            "group contains a permutation not of degree {k}"
        )));
    }
    let members: HashSet<&Permutation> = group.iter().collect();
    if !members.contains(&Permutation::identity(k)) {
        return Err(Error::contract("group is missing the identity"));
    }
    for a in group {
        if !members.contains(&a.inverse()) {
            return Err(Error::contract(format!(
                "group not closed under inverse: {:?}",
                a.mapping()
            )));
        }
        for b in group {
            if !members.contains(&a.compose(b)) {
                return Err(Error::contract(format!(
                    "group not closed under composition: {:?} . {:?}",
                    a.mapping(),
                    b.mapping()
                )));
            }
        }
    }
    Ok(())
}

/// Every permutation of `0..k` under which the verifier's verdict is unchanged
/// on all sequences of the given lengths, in lexicographic order of mappings.
pub fn symmetry_group<V: Verify + ?Sized>(
    verifier: &V,
    k: usize,
    lengths: &[usize],
) -> Result<Vec<Permutation>> {
    if k > MAX_EXHAUSTIVE_SYMBOLS {
        return Err(Error::Capability(format!(
            "exhaustive symmetry search supports at most {MAX_EXHAUSTIVE_SYMBOLS} symbols, got {k}"
        )));
    }
    if k == 0 {
        return Err(Error::contract("alphabet must not be empty"));
    }
    for &len in lengths {
        let count = (k as u64).checked_pow(len as u32).unwrap_or(u64::MAX);
        if count > MAX_SEQUENCES_PER_LENGTH {
            return Err(Error::Capability(format!(
                "{k}^{len} sequences exceed the per-length limit of {MAX_SEQUENCES_PER_LENGTH}"
            )));
        }
    }
    let candidates: Vec<Permutation> = (0..k)
        .permutations(k)
        .map(|mapping| Permutation { mapping })
        .collect();
    let verdicts: Vec<Result<bool>> = candidates
        .par_iter()
        .map(|sigma| preserves(verifier, sigma, k, lengths))
        .collect();
    let mut group = Vec::new();
    for (sigma, verdict) in candidates.into_iter().zip(verdicts) {
        if verdict? {
            group.push(sigma);
        }
    }
    check_group(&group, k)
        .map_err(|e| Error::Contract(format!("invariance set failed the group check ({e})")))?;
    Ok(group)
}

/// Orbits of the group's action on `0..k`, each sorted, ordered by smallest member.
pub fn orbit_decomposition(group: &[Permutation], k: usize) -> Result<Vec<Vec<usize>>> {
    check_group(group, k)?;
    let mut uf = UnionFind::<usize>::new(k);
    for sigma in group {
        for s in 0..k {
            uf.union(s, sigma.apply(s));
        }
    }
    let labels = uf.into_labeling();
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut slot_of_label = std::collections::HashMap::new();
    for (s, label) in labels.into_iter().enumerate() {
        let slot = *slot_of_label.entry(label).or_insert_with(|| {
            orbits.push(Vec::new());
            orbits.len() - 1
        });
        orbits[slot].push(s);
    }
    Ok(orbits)
}

/// `(r_up, r_avg)`: prior mass outside fixed points, and the sum of each
/// symbol's prior divided by its orbit size.
pub fn task_error_bounds(orbits: &[Vec<usize>], prior: &SymbolPrior) -> Result<(f64, f64)> {
    let k = prior.len();
    let mut orbit_size = vec![0usize; k];
    for orbit in orbits {
        for &s in orbit {
            if s >= k || orbit_size[s] != 0 {
                return Err(Error::contract("orbits must partition the alphabet"));
            }
            orbit_size[s] = orbit.len();
        }
    }
    if orbit_size.contains(&0) {
        return Err(Error::contract("orbits do not cover every symbol"));
    }
    let p = prior.probs();
    let r_up = compensated_sum((0..k).filter(|&s| orbit_size[s] > 1).map(|s| p[s]));
    let r_avg = compensated_sum((0..k).map(|s| p[s] / orbit_size[s] as f64));
    Ok((r_up, r_avg))
}

/// Neumaier summation. Six copies of 1/6 must add up to exactly 1.
/// Starts from +0.0, since an empty f64 `Sum` is -0.0.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + c
}

pub fn orbit_report<V: Verify + ?Sized>(
    verifier: &V,
    k: usize,
    lengths: &[usize],
    prior: &SymbolPrior,
) -> Result<OrbitReport> {
    if prior.len() != k {
        return Err(Error::contract("prior size does not match the alphabet"));
    }
    let group = symmetry_group(verifier, k, lengths)?;
    let orbits = orbit_decomposition(&group, k)?;
    let (r_up, r_avg) = task_error_bounds(&orbits, prior)?;
    let fixed_points = orbits
        .iter()
        .filter(|o| o.len() == 1)
        .map(|o| o[0])
        .collect();
    Ok(OrbitReport {
        group,
        orbits,
        fixed_points,
        r_up,
        r_avg,
        check_length: lengths.iter().copied().max().unwrap_or(0),
    })
}

/// Smallest symbol-level mismatch rate between relabeled predictions and
/// truths over all relabelings in the group.
pub fn min_perm_empirical_error(
    preds: &[Assignment],
    truths: &[Assignment],
    group: &[Permutation],
) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::contract("prediction and truth counts differ"));
    }
    if group.is_empty() {
        return Err(Error::contract("group must contain at least the identity"));
    }
    let mut total = 0usize;
    for (p, t) in preds.iter().zip(truths) {
        if p.len() != t.len() {
            return Err(Error::contract("prediction and truth lengths differ"));
        }
        total += p.len();
    }
    if total == 0 {
        return Ok(0.0);
    }
    let degree = group[0].degree();
    if preds
        .iter()
        .chain(truths)
        .flat_map(|a| a.iter())
        .any(|&s| s >= degree)
    {
        return Err(Error::contract("symbol outside the group's degree"));
    }
    let best = group
        .iter()
        .map(|sigma| {
            preds
                .iter()
                .zip(truths)
                .flat_map(|(p, t)| p.iter().zip(t.iter()))
                .filter(|(&ps, &ts)| sigma.apply(ps) != ts)
                .count()
        })
        .min()
        .expect("group is non-empty");
    Ok(best as f64 / total as f64)
}
