//! Dynamic combinatorial sorting.
//!
//! Each position's symbols are sorted once by their per-position priority.
//! An assignment is then identified by a rank vector (the cursor), the best
//! assignment is the all-zero cursor, and the successors of a cursor advance
//! exactly one position by one rank. Because every score variant here is
//! monotone (a position's priority order ignores the other positions), every
//! assignment except the first has a strictly better predecessor, so a
//! max-heap over "best pending successor of each emitted assignment" yields
//! the assignments in exact ranking order.
//!
//! Ranking order is [`ranking_cmp`]: higher [`ScoreKey`] first, ties broken
//! by ascending symbol indices. Per-position ties are broken the same way so
//! that a successor never outranks its parent.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{ranking_cmp, score_key, ScoreKey, ScoreModel};
use crate::types::{Assignment, ConfidenceGrid};
use crate::verifiers::Verify;

/// Per-position symbol lists, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionOrder {
    per_position: Vec<Vec<usize>>,
}

impl PositionOrder {
    /// Wraps explicit per-position orders; each must be a permutation of `0..k`.
    pub fn from_lists(per_position: Vec<Vec<usize>>) -> Result<Self> {
        let k = per_position
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::contract("position order needs at least one position"))?;
        for (p, list) in per_position.iter().enumerate() {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted != (0..k).collect::<Vec<_>>() {
                return Err(Error::contract(format!(
                    "order at position {p} is not a permutation of 0..{k}"
                )));
            }
        }
        Ok(PositionOrder { per_position })
    }

    pub fn len(&self) -> usize {
        self.per_position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.per_position[0].len()
    }

    pub fn position(&self, p: usize) -> &[usize] {
        &self.per_position[p]
    }

    /// The assignment a cursor points at.
    pub fn assignment(&self, cursor: &[usize]) -> Assignment {
        Assignment::from_vec(
            cursor
                .iter()
                .enumerate()
                .map(|(p, &r)| self.per_position[p][r])
                .collect(),
        )
    }
}

/// Sorts each position's symbols by descending priority, ties by index.
pub fn build_order(grid: &ConfidenceGrid, model: &ScoreModel) -> Result<PositionOrder> {
    model.validate(grid)?;
    let per_position = (0..grid.rows())
        .map(|p| {
            let mut symbols: Vec<usize> = (0..grid.cols()).collect();
            let priorities: Vec<ScoreKey> = symbols
                .iter()
                .map(|&s| model.position_priority(grid, p, s))
                .collect();
            symbols.sort_by(|&a, &b| priorities[b].cmp(&priorities[a]).then(a.cmp(&b)));
            symbols
        })
        .collect();
    Ok(PositionOrder { per_position })
}

/// Rank 0 everywhere.
pub fn first_assignment(order: &PositionOrder) -> Assignment {
    order.assignment(&vec![0; order.len()])
}

/// Cursors reachable by advancing one position by one rank.
pub fn successors(cursor: &[usize], order: &PositionOrder) -> Vec<Vec<usize>> {
    let k = order.alphabet_size();
    (0..cursor.len())
        .filter(|&p| cursor[p] + 1 < k)
        .map(|p| {
            let mut next = cursor.to_vec();
            next[p] += 1;
            next
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Candidate {
    key: ScoreKey,
    assignment: Assignment,
    cursor: Vec<usize>,
}

impl Candidate {
    /// `Greater` means `self` ranks before `other`.
    fn priority_cmp(&self, other: &Self) -> Ordering {
        ranking_cmp(
            (&other.key, &other.assignment),
            (&self.key, &self.assignment),
        )
    }
}

/// One emitted assignment and its not-yet-extracted successors.
#[derive(Debug)]
struct HeapEntry {
    /// Sorted worst-first so the best pending successor is at the end.
    pending: Vec<Candidate>,
}

impl HeapEntry {
    fn best(&self) -> &Candidate {
        self.pending.last().expect("heap entries are never empty")
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.best().priority_cmp(other.best())
    }
}

/// Counters describing the work an enumeration has done.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStats {
    pub emitted: usize,
    pub heap_pushes: usize,
    pub heap_pops: usize,
    pub successors_generated: usize,
    pub duplicates_skipped: usize,
    pub max_heap_len: usize,
}

/// Lazy stream of all assignments of one grid in ranking order.
#[derive(Debug)]
pub struct Enumerator<'a> {
    grid: &'a ConfidenceGrid,
    model: &'a ScoreModel,
    order: PositionOrder,
    heap: BinaryHeap<HeapEntry>,
    visited: HashSet<Assignment>,
    started: bool,
    stats: WorkStats,
}

impl<'a> Enumerator<'a> {
    pub fn new(grid: &'a ConfidenceGrid, model: &'a ScoreModel) -> Result<Self> {
        let order = build_order(grid, model)?;
        Ok(Enumerator {
            grid,
            model,
            order,
            heap: BinaryHeap::new(),
            visited: HashSet::new(),
            started: false,
            stats: WorkStats::default(),
        })
    }

    pub fn order(&self) -> &PositionOrder {
        &self.order
    }

    pub fn stats(&self) -> WorkStats {
        self.stats
    }

    pub fn emitted_count(&self) -> usize {
        self.stats.emitted
    }

    fn key_of(&self, assignment: &Assignment) -> ScoreKey {
        score_key(self.model, self.grid, assignment)
            .expect("model validated against grid at construction")
    }

    fn push_successors_of(&mut self, cursor: &[usize]) {
        let mut pending: Vec<Candidate> = successors(cursor, &self.order)
            .into_iter()
            .map(|c| {
                let assignment = self.order.assignment(&c);
                Candidate {
                    key: self.key_of(&assignment),
                    assignment,
                    cursor: c,
                }
            })
            .collect();
        self.stats.successors_generated += pending.len();
        if pending.is_empty() {
            return;
        }
        pending.sort_by(|a, b| a.priority_cmp(b));
        self.push(HeapEntry { pending });
    }

    fn push(&mut self, entry: HeapEntry) {
        self.heap.push(entry);
        self.stats.heap_pushes += 1;
        self.stats.max_heap_len = self.stats.max_heap_len.max(self.heap.len());
    }

    fn emit(&mut self, candidate: Candidate) -> (Assignment, ScoreKey) {
        self.visited.insert(candidate.assignment.clone());
        self.stats.emitted += 1;
        self.push_successors_of(&candidate.cursor);
        (candidate.assignment, candidate.key)
    }

    /// Next assignment in ranking order with its key, or `None` once all
    /// `k^l` assignments have been emitted.
    pub fn next_scored(&mut self) -> Option<(Assignment, ScoreKey)> {
        if !self.started {
            self.started = true;
            let cursor = vec![0; self.order.len()];
            let assignment = self.order.assignment(&cursor);
            let key = self.key_of(&assignment);
            return Some(self.emit(Candidate {
                key,
                assignment,
                cursor,
            }));
        }
        while let Some(mut entry) = self.heap.pop() {
            self.stats.heap_pops += 1;
            let candidate = entry.pending.pop().expect("heap entries are never empty");
            if !entry.pending.is_empty() {
                self.push(entry);
            }
            if self.visited.contains(&candidate.assignment) {
                self.stats.duplicates_skipped += 1;
                continue;
            }
            return Some(self.emit(candidate));
        }
        None
    }
}

impl Iterator for Enumerator<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        self.next_scored().map(|(a, _)| a)
    }
}

/// Outcome of a budgeted constrained search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CopOutcome {
    /// The first verified assignment; `rank` is 1-based.
    Solved {
        assignment: Assignment,
        rank: usize,
        verifications: usize,
    },
    /// No verified assignment within the budget (or in the whole space).
    Exhausted {
        best_unverified: Assignment,
        verifications: usize,
    },
}

impl CopOutcome {
    /// The assignment to use downstream: the verified one, or the rank-1 fallback.
    pub fn assignment(&self) -> &Assignment {
        match self {
            CopOutcome::Solved { assignment, .. } => assignment,
            CopOutcome::Exhausted {
                best_unverified, ..
            } => best_unverified,
        }
    }

    pub fn verifications(&self) -> usize {
        match self {
            CopOutcome::Solved { verifications, .. }
            | CopOutcome::Exhausted { verifications, .. } => *verifications,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            CopOutcome::Solved { rank, .. } => Some(*rank),
            CopOutcome::Exhausted { .. } => None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, CopOutcome::Exhausted { .. })
    }
}

/// Verifies assignments in ranking order and returns the first accepted one.
///
/// At most `budget` assignments are verified. Verifier errors propagate.
pub fn solve_cop<V: Verify + ?Sized>(
    grid: &ConfidenceGrid,
    model: &ScoreModel,
    verifier: &V,
    budget: usize,
) -> Result<CopOutcome> {
    if budget == 0 {
        return Err(Error::contract("search budget must be >= 1"));
    }
    let mut enumerator = Enumerator::new(grid, model)?;
    let mut best_unverified = None;
    let mut verifications = 0;
    while verifications < budget {
        let Some(candidate) = enumerator.next() else {
            break;
        };
        verifications += 1;
        if verifier.verify(&candidate)? {
            return Ok(CopOutcome::Solved {
                assignment: candidate,
                rank: verifications,
                verifications,
            });
        }
        best_unverified.get_or_insert(candidate);
    }
    Ok(CopOutcome::Exhausted {
        best_unverified: best_unverified.expect("the first assignment always exists"),
        verifications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::product_score;
    use crate::verifiers::Verifier;

    fn grid(rows: &[&[f64]]) -> ConfidenceGrid {
        ConfidenceGrid::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn asg(v: &[usize]) -> Assignment {
        Assignment::from_vec(v.to_vec())
    }

    #[test]
    fn build_order_examples() {
        let o = build_order(&grid(&[&[0.2, 0.8]]), &ScoreModel::independent()).unwrap();
        assert_eq!(o.position(0), &[1, 0]);
        let o = build_order(&grid(&[&[0.5, 0.5]]), &ScoreModel::independent()).unwrap();
        assert_eq!(o.position(0), &[0, 1]);
        let o = build_order(&grid(&[&[0.9, 0.1]]), &ScoreModel::lex(asg(&[1]))).unwrap();
        assert_eq!(o.position(0), &[1, 0]);
        let o = build_order(
            &grid(&[&[0.1, 0.2, 0.3, 0.4]]),
            &ScoreModel::consistency(asg(&[2])),
        )
        .unwrap();
        assert_eq!(o.position(0), &[2, 0, 1, 3]);
    }

    #[test]
    fn first_assignment_examples() {
        let o = PositionOrder::from_lists(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(first_assignment(&o).symbols(), &[1, 0]);
        let o = PositionOrder::from_lists(vec![vec![0, 1, 2]; 3]).unwrap();
        assert_eq!(first_assignment(&o).symbols(), &[0, 0, 0]);
        let o = PositionOrder::from_lists(vec![vec![2, 0, 1]]).unwrap();
        assert_eq!(first_assignment(&o).symbols(), &[2]);
        assert!(PositionOrder::from_lists(vec![vec![0, 0]]).is_err());
    }

    #[test]
    fn successor_examples() {
        let o = PositionOrder::from_lists(vec![vec![0, 1]; 2]).unwrap();
        assert_eq!(successors(&[0, 0], &o), vec![vec![1, 0], vec![0, 1]]);
        assert!(successors(&[1, 1], &o).is_empty());
        let o = PositionOrder::from_lists(vec![vec![0, 1]; 3]).unwrap();
        assert_eq!(successors(&[1, 0, 1], &o), vec![vec![1, 1, 1]]);
    }

    #[test]
    fn next_emits_in_score_order() {
        let g = grid(&[&[0.9, 0.1], &[0.6, 0.4]]);
        let model = ScoreModel::independent();
        let scores: Vec<f64> = Enumerator::new(&g, &model)
            .unwrap()
            .map(|a| product_score(&g, &a).unwrap())
            .collect();
        let expected = [0.54, 0.36, 0.06, 0.04];
        assert_eq!(scores.len(), 4);
        for (s, e) in scores.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_space() {
        let g = ConfidenceGrid::from_rows_unchecked_sum(vec![vec![1.0]; 3]).unwrap();
        let model = ScoreModel::independent();
        let mut e = Enumerator::new(&g, &model).unwrap();
        assert_eq!(e.next().unwrap().symbols(), &[0, 0, 0]);
        assert!(e.next().is_none());
        assert!(e.next().is_none());
    }

    #[test]
    fn ties_follow_index_order() {
        let g = grid(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let model = ScoreModel::independent();
        let order: Vec<Vec<usize>> = Enumerator::new(&g, &model)
            .unwrap()
            .map(Vec::from)
            .collect();
        assert_eq!(order, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn solve_cop_accept_all_returns_first() {
        let g = grid(&[&[0.3, 0.7], &[0.6, 0.4]]);
        let out = solve_cop(&g, &ScoreModel::independent(), &|_: &[usize]| true, 10).unwrap();
        assert_eq!(
            out,
            CopOutcome::Solved {
                assignment: asg(&[1, 0]),
                rank: 1,
                verifications: 1
            }
        );
    }

    #[test]
    fn solve_cop_last_rank() {
        let g = grid(&[&[0.9, 0.1], &[0.6, 0.4]]);
        let only_last = |a: &[usize]| a == [1, 1];
        let out = solve_cop(&g, &ScoreModel::independent(), &only_last, 10).unwrap();
        assert_eq!(out.rank(), Some(4));
        assert_eq!(out.verifications(), 4);
    }

    #[test]
    fn solve_cop_addition_peaked() {
        let mut rows = Vec::new();
        for digit in [9, 8, 1, 7] {
            let mut r = vec![0.01; 10];
            r[digit] = 0.91;
            rows.push(r);
        }
        let g = ConfidenceGrid::new(rows).unwrap();
        let v = Verifier::Addition {
            base: 10,
            num_digits: 1,
        };
        let out = solve_cop(&g, &ScoreModel::independent(), &v, 100).unwrap();
        assert_eq!(out.assignment().symbols(), &[9, 8, 1, 7]);
        assert_eq!(out.rank(), Some(1));
    }

    #[test]
    fn exhausted_budget_falls_back_to_rank_one() {
        let g = grid(&[&[0.9, 0.1], &[0.6, 0.4]]);
        let out = solve_cop(&g, &ScoreModel::independent(), &|_: &[usize]| false, 2).unwrap();
        assert_eq!(
            out,
            CopOutcome::Exhausted {
                best_unverified: asg(&[0, 0]),
                verifications: 2
            }
        );
        let out = solve_cop(&g, &ScoreModel::independent(), &|_: &[usize]| false, 100).unwrap();
        assert_eq!(out.verifications(), 4);
        assert!(out.is_exhausted());
        assert!(solve_cop(&g, &ScoreModel::independent(), &|_: &[usize]| true, 0).is_err());
    }

    #[test]
    fn verifier_errors_propagate() {
        let g = grid(&[&[0.9, 0.1], &[0.6, 0.4]]);
        let v = Verifier::Addition {
            base: 2,
            num_digits: 1,
        };
        assert!(matches!(
            solve_cop(&g, &ScoreModel::independent(), &v, 5),
            Err(Error::Task(_))
        ));
    }

    #[test]
    fn visited_matches_emitted() {
        let g = grid(&[&[0.4, 0.35, 0.25], &[0.2, 0.5, 0.3], &[0.1, 0.1, 0.8]]);
        let model = ScoreModel::independent();
        let mut e = Enumerator::new(&g, &model).unwrap();
        let mut seen = HashSet::new();
        while let Some(a) = e.next() {
            assert!(seen.insert(a));
            assert_eq!(e.visited.len(), seen.len());
        }
        assert_eq!(seen.len(), 27);
        let stats = e.stats();
        assert_eq!(stats.emitted, 27);
        assert!(stats.successors_generated <= 27 * 3);
    }
}
