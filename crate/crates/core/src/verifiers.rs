//! Verification functions: total boolean predicates over symbol sequences.
//!
//! The rule programs below follow the reference task definitions exactly,
//! including their quirks (the chess rule accepts a board when *some* piece
//! attacks a later one, and only checks the earlier-to-later direction).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that can accept or reject an assignment.
///
/// Errors mean the assignment is outside the verifier's domain (wrong
/// length, symbol out of range); they are never a "no".
pub trait Verify: Sync {
    fn verify(&self, symbols: &[usize]) -> Result<bool>;
}

impl<F> Verify for F
where
    F: Fn(&[usize]) -> bool + Sync,
{
    fn verify(&self, symbols: &[usize]) -> Result<bool> {
        Ok(self(symbols))
    }
}

/// Piece types by index, in the order the attack rule dispatches on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piece {
    Bishop = 0,
    King = 1,
    Knight = 2,
    Pawn = 3,
    Queen = 4,
    Rook = 5,
}

pub const PIECE_TYPES: usize = 6;

/// Board coordinates of the pieces; these are known inputs, only the types are predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChessPositions {
    pub coords: Vec<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Verifier {
    Addition { base: usize, num_digits: usize },
    Sort,
    Match,
    Chess { positions: ChessPositions },
    AllDifferent,
}

impl Verify for Verifier {
    fn verify(&self, a: &[usize]) -> Result<bool> {
        if a.is_empty() {
            return Err(Error::Task("empty assignment".into()));
        }
        match self {
            Verifier::Addition { base, num_digits } => {
                let expected = 4 * num_digits;
                if a.len() != expected {
                    return Err(Error::Task(format!(
                        "addition with {num_digits} digit(s) needs {expected} symbols, got {}",
                        a.len()
                    )));
                }
                if let Some(d) = a.iter().find(|&&d| d >= *base) {
                    return Err(Error::Task(format!("digit {d} outside base {base}")));
                }
                Ok(verify_addition(a, *base, *num_digits))
            }
            Verifier::Sort => Ok(verify_sort(a)),
            Verifier::Match => Ok(verify_match(a)),
            Verifier::Chess { positions } => {
                if a.len() != positions.coords.len() {
                    return Err(Error::Task(format!(
                        "{} piece types for {} positions",
                        a.len(),
                        positions.coords.len()
                    )));
                }
                if let Some(t) = a.iter().find(|&&t| t >= PIECE_TYPES) {
                    return Err(Error::Task(format!("piece type {t} out of range")));
                }
                Ok(verify_chess(a, positions))
            }
            Verifier::AllDifferent => Ok(verify_all_different(a)),
        }
    }
}

/// Big-endian positional value. Saturates instead of overflowing.
pub fn digits_to_number(digits: &[usize], base: usize) -> u128 {
    digits.iter().fold(0u128, |n, &d| {
        n.saturating_mul(base as u128).saturating_add(d as u128)
    })
}

/// Inverse of [`digits_to_number`], padded to `digit_size` digits.
pub fn number_to_digits(mut number: u128, digit_size: usize, base: usize) -> Vec<usize> {
    let mut digits = vec![0; digit_size];
    for slot in digits.iter_mut().rev() {
        *slot = (number % base as u128) as usize;
        number /= base as u128;
    }
    digits
}

/// `first + second == rest`, where the operands take `num_digits` symbols
/// each and the result is whatever follows them.
pub fn verify_addition(a: &[usize], base: usize, num_digits: usize) -> bool {
    if a.len() < 2 * num_digits {
        return false;
    }
    let (lhs, result) = a.split_at(2 * num_digits);
    let (x, y) = lhs.split_at(num_digits);
    digits_to_number(x, base) + digits_to_number(y, base) == digits_to_number(result, base)
}

/// Strictly increasing.
pub fn verify_sort(a: &[usize]) -> bool {
    a.windows(2).all(|w| w[1] > w[0])
}

/// Non-decreasing, and every maximal run of equal symbols has the same length.
pub fn verify_match(a: &[usize]) -> bool {
    let mut count: Option<usize> = None;
    let mut cur_count = 0usize;
    for i in 0..a.len() {
        if i > 0 && a[i] < a[i - 1] {
            return false;
        } else if i > 0 && a[i] > a[i - 1] {
            match count {
                None => count = Some(cur_count),
                Some(c) if c != cur_count => return false,
                Some(_) => {}
            }
            cur_count = 0;
        }
        cur_count += 1;
    }
    count.is_none_or(|c| c == cur_count)
}

fn straight_attack(x1: i32, y1: i32, x2: i32, y2: i32) -> bool {
    x1 == x2 || y1 == y2
}

fn diagonal_attack(x1: i32, y1: i32, x2: i32, y2: i32) -> bool {
    (x1 - x2).abs() == (y1 - y2).abs()
}

/// Whether a piece of type `ptype` at `(x1, y1)` attacks `(x2, y2)`.
/// Unknown types never attack.
pub fn attack(ptype: usize, x1: i32, y1: i32, x2: i32, y2: i32) -> bool {
    match ptype {
        0 => diagonal_attack(x1, y1, x2, y2),
        1 => (x1 - x2).abs() <= 1 && (y1 - y2).abs() <= 1,
        2 => {
            let (dx, dy) = ((x1 - x2).abs(), (y1 - y2).abs());
            (dx == 2 && dy == 1) || (dx == 1 && dy == 2)
        }
        // white pawn
        3 => (x1 - x2).abs() == 1 && y2 - y1 == 1,
        4 => straight_attack(x1, y1, x2, y2) || diagonal_attack(x1, y1, x2, y2),
        5 => straight_attack(x1, y1, x2, y2),
        _ => false,
    }
}

/// True iff some piece attacks a piece listed after it.
pub fn verify_chess(types: &[usize], pos: &ChessPositions) -> bool {
    let pieces: Vec<(usize, (i32, i32))> = types
        .iter()
        .copied()
        .zip(pos.coords.iter().copied())
        .collect();
    pieces.iter().enumerate().any(|(i, &(t, (x1, y1)))| {
        pieces[i + 1..]
            .iter()
            .any(|&(_, (x2, y2))| attack(t, x1, y1, x2, y2))
    })
}

pub fn verify_all_different(a: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(a.len());
    a.iter().all(|s| seen.insert(*s))
}
