//! Combinatorics of one-sided subshifts of finite type.
//!
//! Symbols are 1-based throughout (`1..=n`), in memory and in every
//! serialized form.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of words produced by [`enumerate_cylinders`].
pub const DEFAULT_CYLINDER_CAPACITY: usize = 1_000_000;

pub type Symbol = u16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShiftError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({row},{col}) is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize },
    #[error("row {0} is identically zero")]
    ZeroRow(usize),
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("cylinder count {count} at depth {depth} exceeds capacity {capacity}")]
    CapacityExceeded {
        depth: usize,
        count: u128,
        capacity: usize,
    },
    #[error("word {0} is not admissible")]
    InadmissibleWord(Word),
    #[error("symbol {symbol} outside alphabet 1..={n}")]
    SymbolOutOfRange { symbol: Symbol, n: usize },
    #[error("invalid word syntax {0:?}")]
    WordSyntax(String),
    #[error("depth must be at least 1")]
    ZeroDepth,
}

/// A finite word over the alphabet `{1, …, n}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pushed(&self, s: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    /// The word with its first symbol dropped (the shift).
    pub fn shifted(&self) -> Word {
        if self.0.is_empty() {
            Word::empty()
        } else {
            Word(self.0[1..].to_vec())
        }
    }

    /// If `prefix` is a prefix of `self`, the remaining suffix.
    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.0
            .strip_prefix(prefix.0.as_slice())
            .map(|s| Word(s.to_vec()))
    }
}

impl From<&[Symbol]> for Word {
    fn from(s: &[Symbol]) -> Self {
        Word(s.to_vec())
    }
}

impl<const N: usize> From<[Symbol; N]> for Word {
    fn from(s: [Symbol; N]) -> Self {
        Word(s.to_vec())
    }
}

/// Comma-separated symbols; the empty word is written `e`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = ShiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "e" || t.is_empty() {
            return Ok(Word::empty());
        }
        t.split(',')
            .map(|p| {
                p.trim()
                    .parse::<Symbol>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| ShiftError::WordSyntax(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

/// The transition matrix `A` of the shift. Entries are stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZeroOneMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl ZeroOneMatrix {
    /// Validates a square 0/1 matrix with no zero row or column.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self, ShiftError> {
        let n = rows.len();
        if n == 0 {
            return Err(ShiftError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ShiftError::NotSquare {
                    row: i + 1,
                    len: row.len(),
                    n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => {
                        return Err(ShiftError::NonBinaryEntry {
                            row: i + 1,
                            col: j + 1,
                        })
                    }
                }
            }
        }
        let a = ZeroOneMatrix { n, entries };
        a.validate()?;
        Ok(a)
    }

    /// Parses the textual row form, e.g. `["11", "10"]`.
    pub fn from_row_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self, ShiftError> {
        let mut parsed = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let mut row = Vec::new();
            for (j, c) in r.as_ref().trim().chars().enumerate() {
                match c {
                    '0' => row.push(0),
                    '1' => row.push(1),
                    _ => {
                        return Err(ShiftError::NonBinaryEntry {
                            row: i + 1,
                            col: j + 1,
                        })
                    }
                }
            }
            parsed.push(row);
        }
        Self::new(&parsed)
    }

    /// The all-ones `n × n` matrix (full shift).
    pub fn full(n: usize) -> Self {
        assert!(n > 0);
        ZeroOneMatrix {
            n,
            entries: vec![true; n * n],
        }
    }

    /// `[[1,1],[1,0]]`.
    pub fn golden_mean() -> Self {
        Self::new(&[vec![1, 1], vec![1, 0]]).expect("valid")
    }

    fn validate(&self) -> Result<(), ShiftError> {
        for i in 1..=self.n {
            if !(1..=self.n).any(|j| self.get(i as Symbol, j as Symbol)) {
                return Err(ShiftError::ZeroRow(i));
            }
        }
        for j in 1..=self.n {
            if !(1..=self.n).any(|i| self.get(i as Symbol, j as Symbol)) {
                return Err(ShiftError::ZeroColumn(j));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `A[i][j]` with 1-based indices.
    #[inline]
    pub fn get(&self, i: Symbol, j: Symbol) -> bool {
        self.entries[(i as usize - 1) * self.n + (j as usize - 1)]
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + Clone {
        1..=(self.n as Symbol)
    }

    pub fn row_strings(&self) -> Vec<String> {
        (1..=self.n as Symbol)
            .map(|i| {
                self.symbols()
                    .map(|j| if self.get(i, j) { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }

    pub fn is_admissible(&self, w: &Word) -> bool {
        let s = w.symbols();
        s.iter().all(|&x| x >= 1 && x as usize <= self.n)
            && s.windows(2).all(|p| self.get(p[0], p[1]))
    }

    pub fn check_word(&self, w: &Word) -> Result<(), ShiftError> {
        if let Some(&bad) = w.symbols().iter().find(|&&x| x < 1 || x as usize > self.n) {
            return Err(ShiftError::SymbolOutOfRange {
                symbol: bad,
                n: self.n,
            });
        }
        if !self.is_admissible(w) {
            return Err(ShiftError::InadmissibleWord(w.clone()));
        }
        Ok(())
    }

    /// Number of ones in column `j`.
    pub fn column_sum(&self, j: Symbol) -> usize {
        self.symbols().filter(|&i| self.get(i, j)).count()
    }

    /// Symbols `a` with `A[s][a] = 1`, ascending.
    pub fn successors(&self, s: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols().filter(move |&a| self.get(s, a))
    }

    /// Symbols `a` with `A[a][s] = 1`, ascending.
    pub fn predecessors(&self, s: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols().filter(move |&a| self.get(a, s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Primitivity {
    /// Least `m` with every entry of `A^m` positive.
    Primitive(usize),
    NotPrimitive,
}

impl Primitivity {
    pub fn exponent(self) -> Option<usize> {
        match self {
            Primitivity::Primitive(m) => Some(m),
            Primitivity::NotPrimitive => None,
        }
    }
}

/// Wielandt's bound `n² − 2n + 2` on the primitivity exponent.
pub fn wielandt_bound(n: usize) -> usize {
    (n * n + 2).saturating_sub(2 * n)
}

fn bool_mul(x: &[bool], a: &ZeroOneMatrix) -> Vec<bool> {
    let n = a.n;
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if x[i * n + k] {
                for j in 0..n {
                    if a.entries[k * n + j] {
                        out[i * n + j] = true;
                    }
                }
            }
        }
    }
    out
}

/// Smallest `m ≤ m_max` with `A^m > 0` entrywise (boolean powers).
pub fn primitivity_exponent(a: &ZeroOneMatrix, m_max: usize) -> Primitivity {
    let mut power = a.entries.clone();
    for m in 1..=m_max {
        if power.iter().all(|&b| b) {
            return Primitivity::Primitive(m);
        }
        power = bool_mul(&power, a);
    }
    Primitivity::NotPrimitive
}

/// Primitivity test with the Wielandt bound as the search limit.
pub fn primitivity(a: &ZeroOneMatrix) -> Primitivity {
    primitivity_exponent(a, wielandt_bound(a.n()))
}

/// Admissible words of a fixed length, in lexicographic order.
#[derive(Debug, Clone)]
pub struct CylinderSpace {
    depth: usize,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl PartialEq for CylinderSpace {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.words == other.words
    }
}

impl CylinderSpace {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Position of the cylinder containing `w`, i.e. of its depth-length prefix.
    pub fn index_of_prefix(&self, w: &[Symbol]) -> Option<usize> {
        if w.len() < self.depth {
            return None;
        }
        self.index.get(&Word::from(&w[..self.depth])).copied()
    }
}

/// Number of admissible words of length `k`, without materializing them.
pub fn count_cylinders(a: &ZeroOneMatrix, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    let mut ending: Vec<u128> = vec![1; a.n()];
    for _ in 1..k {
        let mut next = vec![0u128; a.n()];
        for i in a.symbols() {
            for j in a.successors(i) {
                next[j as usize - 1] = next[j as usize - 1].saturating_add(ending[i as usize - 1]);
            }
        }
        ending = next;
    }
    ending.iter().fold(0u128, |s, &c| s.saturating_add(c))
}

pub fn enumerate_cylinders(a: &ZeroOneMatrix, k: usize) -> Result<CylinderSpace, ShiftError> {
    enumerate_cylinders_with_capacity(a, k, DEFAULT_CYLINDER_CAPACITY)
}

pub fn enumerate_cylinders_with_capacity(
    a: &ZeroOneMatrix,
    k: usize,
    capacity: usize,
) -> Result<CylinderSpace, ShiftError> {
    if k == 0 {
        return Err(ShiftError::ZeroDepth);
    }
    let count = count_cylinders(a, k);
    if count > capacity as u128 {
        return Err(ShiftError::CapacityExceeded {
            depth: k,
            count,
            capacity,
        });
    }
    // Extending a lexicographically sorted list symbol-by-symbol in
    // ascending order keeps it sorted.
    let mut words: Vec<Word> = a.symbols().map(|s| Word(vec![s])).collect();
    for _ in 1..k {
        let mut next = Vec::with_capacity(words.len() * 2);
        for w in &words {
            let last = w.last().expect("nonempty");
            for s in a.successors(last) {
                next.push(w.pushed(s));
            }
        }
        words = next;
    }
    let index = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    Ok(CylinderSpace {
        depth: k,
        words,
        index,
    })
}

/// `Q(j)`: the number of ones in column `j`, i.e. the number of
/// σ-preimages of a point starting with `j`. Indexed by `j − 1`.
pub fn q_function(a: &ZeroOneMatrix) -> Vec<usize> {
    a.symbols().map(|j| a.column_sum(j)).collect()
}

/// Extends `w` to length `len` by repeatedly appending the smallest
/// admissible successor.
pub fn extend_to_point(a: &ZeroOneMatrix, w: &Word, len: usize) -> Word {
    assert!(!w.is_empty(), "cannot extend the empty word");
    let mut v = w.0.clone();
    while v.len() < len {
        let last = *v.last().expect("nonempty");
        let next = a.successors(last).next().expect("no zero rows");
        v.push(next);
    }
    Word(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(space: &CylinderSpace) -> Vec<String> {
        space
            .words()
            .iter()
            .map(|w| w.symbols().iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn validation_examples() {
        assert!(ZeroOneMatrix::new(&[vec![1]]).is_ok());
        assert!(ZeroOneMatrix::new(&[vec![1, 1], vec![1, 0]]).is_ok());
        assert_eq!(
            ZeroOneMatrix::new(&[vec![1, 0], vec![1, 0]]),
            Err(ShiftError::ZeroColumn(2))
        );
        assert_eq!(
            ZeroOneMatrix::new(&[vec![0, 0], vec![1, 1]]),
            Err(ShiftError::ZeroRow(1))
        );
        assert_eq!(
            ZeroOneMatrix::new(&[vec![1, 2], vec![1, 1]]),
            Err(ShiftError::NonBinaryEntry { row: 1, col: 2 })
        );
        assert!(matches!(
            ZeroOneMatrix::new(&[vec![1, 1], vec![1]]),
            Err(ShiftError::NotSquare { .. })
        ));
        assert_eq!(
            ZeroOneMatrix::from_row_strings(&["10", "10"]),
            Err(ShiftError::ZeroColumn(2))
        );
    }

    #[test]
    fn row_strings_round_trip() {
        let a = ZeroOneMatrix::from_row_strings(&["11", "10"]).unwrap();
        assert_eq!(a, ZeroOneMatrix::golden_mean());
        assert_eq!(a.row_strings(), vec!["11", "10"]);
    }

    #[test]
    fn primitivity_examples() {
        assert_eq!(
            primitivity(&ZeroOneMatrix::full(2)),
            Primitivity::Primitive(1)
        );
        assert_eq!(
            primitivity(&ZeroOneMatrix::golden_mean()),
            Primitivity::Primitive(2)
        );
        let swap = ZeroOneMatrix::new(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(primitivity(&swap), Primitivity::NotPrimitive);
        assert_eq!(
            primitivity(&ZeroOneMatrix::full(1)),
            Primitivity::Primitive(1)
        );
    }

    #[test]
    fn wielandt_matrix_attains_bound() {
        // Wielandt's matrix: cycle 1→2→…→n→1 plus the chord n→2.
        let n = 4;
        let mut rows = vec![vec![0u8; n]; n];
        for i in 0..n - 1 {
            rows[i][i + 1] = 1;
        }
        rows[n - 1][0] = 1;
        rows[n - 1][1] = 1;
        let a = ZeroOneMatrix::new(&rows).unwrap();
        assert_eq!(primitivity(&a), Primitivity::Primitive(wielandt_bound(n)));
        assert_eq!(primitivity_exponent(&a, 9), Primitivity::NotPrimitive);
    }

    #[test]
    fn cylinder_examples() {
        let full = ZeroOneMatrix::full(2);
        assert_eq!(
            words(&enumerate_cylinders(&full, 2).unwrap()),
            vec!["11", "12", "21", "22"]
        );
        let g = ZeroOneMatrix::golden_mean();
        assert_eq!(
            words(&enumerate_cylinders(&g, 2).unwrap()),
            vec!["11", "12", "21"]
        );
        assert_eq!(enumerate_cylinders(&g, 3).unwrap().len(), 5);
        assert_eq!(count_cylinders(&g, 10), 144);
    }

    #[test]
    fn cylinder_capacity() {
        let full = ZeroOneMatrix::full(3);
        let err = enumerate_cylinders_with_capacity(&full, 5, 100).unwrap_err();
        assert!(matches!(
            err,
            ShiftError::CapacityExceeded { count: 243, .. }
        ));
        assert!(enumerate_cylinders(&full, 0).is_err());
    }

    #[test]
    fn index_is_inverse_of_position() {
        let g = ZeroOneMatrix::golden_mean();
        let space = enumerate_cylinders(&g, 4).unwrap();
        for (i, w) in space.words().iter().enumerate() {
            assert_eq!(space.index_of(w), Some(i));
        }
        assert_eq!(space.index_of(&Word::from([2, 2, 1, 1])), None);
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_function(&ZeroOneMatrix::full(3)), vec![3, 3, 3]);
        assert_eq!(q_function(&ZeroOneMatrix::golden_mean()), vec![2, 1]);
    }

    #[test]
    fn extension_examples() {
        let g = ZeroOneMatrix::golden_mean();
        assert_eq!(
            extend_to_point(&g, &Word::from([2]), 4),
            Word::from([2, 1, 1, 1])
        );
        let full = ZeroOneMatrix::full(2);
        assert_eq!(
            extend_to_point(&full, &Word::from([1]), 3),
            Word::from([1, 1, 1])
        );
        let w = Word::from([1, 2, 1]);
        assert_eq!(extend_to_point(&g, &w, 3), w);
    }

    #[test]
    fn word_syntax() {
        assert_eq!("1,2,1".parse::<Word>().unwrap(), Word::from([1, 2, 1]));
        assert_eq!("e".parse::<Word>().unwrap(), Word::empty());
        assert_eq!(Word::from([1, 2]).to_string(), "1,2");
        assert_eq!(Word::empty().to_string(), "e");
        assert!("1,x".parse::<Word>().is_err());
        assert!("0".parse::<Word>().is_err());
    }
}
