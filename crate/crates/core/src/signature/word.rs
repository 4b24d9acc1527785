use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word the crate will enumerate at all.
pub const HARD_MAX_WORD_LENGTH: usize = 6;

/// A nonempty sequence of letters. Letters are stored 0-based and shown
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::EmptyWord);
        }
        if letters.len() > HARD_MAX_WORD_LENGTH {
            return Err(Error::WordTooLong { len: letters.len(), max: HARD_MAX_WORD_LENGTH });
        }
        Ok(Self(letters))
    }

    /// Builds a word from 1-based letters, as written in formulas.
    pub fn from_one_based(letters: &[usize]) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0) {
            return Err(Error::LetterOutOfRange { letter: bad, size: 0 });
        }
        Self::new(letters.iter().map(|l| l - 1).collect())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks letters against an alphabet of `size` letters.
    pub fn check_alphabet(&self, size: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l >= size) {
            Some(&l) => Err(Error::LetterOutOfRange { letter: l + 1, size }),
            None => Ok(()),
        }
    }

    /// `σ · I = (i_{σ(1)}, ..., i_{σ(k)})` for a 0-based permutation.
    pub fn permuted(&self, sigma: &[usize]) -> Word {
        Word(sigma.iter().map(|&j| self.0[j]).collect())
    }

    /// Index of the word in the level-`k` block of a tensor over `size`
    /// letters (lexicographic order).
    pub fn tensor_index(&self, size: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * size + l)
    }

    /// All words of length `len` over `size` letters, lexicographically.
    pub fn all(size: usize, len: usize) -> impl Iterator<Item = Word> {
        let total = size.pow(len as u32);
        (0..total).map(move |mut idx| {
            let mut letters = vec![0; len];
            for slot in letters.iter_mut().rev() {
                *slot = idx % size;
                idx /= size;
            }
            Word(letters)
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_lexicographically() {
        let words: Vec<String> = Word::all(2, 2).map(|w| w.to_string()).collect();
        assert_eq!(words, ["(1,1)", "(1,2)", "(2,1)", "(2,2)"]);
        for (i, w) in Word::all(3, 3).enumerate() {
            assert_eq!(w.tensor_index(3), i);
        }
    }

    #[test]
    fn validation() {
        assert!(Word::new(vec![]).is_err());
        assert!(Word::from_one_based(&[0, 1]).is_err());
        assert!(Word::new(vec![0; 7]).is_err());
        let w = Word::from_one_based(&[1, 3]).unwrap();
        assert!(w.check_alphabet(2).is_err());
        assert!(w.check_alphabet(3).is_ok());
        assert_eq!(w.permuted(&[1, 0]).to_string(), "(3,1)");
    }
}
