use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// The point `F_word(q_vertex)`.
///
/// Addresses produced by [`crate::Fractal::address`] are canonical: the
/// shortest word naming the point, and among those the lexicographically least
/// `(word, vertex)`. Equality and hashing of canonical addresses is equality of
/// points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Address {
    pub(crate) word: Vec<u8>,
    pub(crate) vertex: u8,
}

impl Address {
    /// Unchecked constructor; callers canonicalize through the fractal.
    pub(crate) fn raw(word: Vec<u8>, vertex: u8) -> Self {
        Address { word, vertex }
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn vertex(&self) -> usize {
        self.vertex as usize
    }

    /// Length of the canonical word; the least `m` with the point in `V_m`.
    pub fn level(&self) -> usize {
        self.word.len()
    }

    pub fn word_string(&self) -> String {
        word_to_string(&self.word)
    }
}

impl Ord for Address {
    fn cmp(&self, other: &Self) -> Ordering {
        self.word
            .len()
            .cmp(&other.word.len())
            .then_with(|| self.word.cmp(&other.word))
            .then_with(|| self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for Address {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.word_string(), self.vertex)
    }
}

/// The cell `F_word(K)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub word: Vec<u8>,
}

impl CellRef {
    pub fn new(word: Vec<u8>) -> Self {
        CellRef { word }
    }

    pub fn root() -> Self {
        CellRef { word: Vec::new() }
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }

    pub fn child(&self, i: usize) -> CellRef {
        let mut word = self.word.clone();
        word.push(i as u8);
        CellRef { word }
    }

    pub fn is_prefix_of(&self, word: &[u8]) -> bool {
        word.len() >= self.word.len() && word[..self.word.len()] == self.word[..]
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", word_to_string(&self.word))
    }
}

pub fn word_to_string(word: &[u8]) -> String {
    word.iter().map(|d| char::from(b'0' + d)).collect()
}

/// Parses a digit string such as `"0121"`; the empty string is the empty word.
pub fn parse_word(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| c.to_digit(10).map(|d| d as u8))
        .collect()
}
