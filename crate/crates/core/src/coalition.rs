//! Coalitions as bitmasks over consumer indices `0..n`.

use std::fmt;

use crate::error::{Error, Result};

/// A subset of consumer indices, encoded as a bitmask. Bit `i` set means
/// consumer `i` is a member.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Coalition(u32);

/// Hard cap on population size: every game materialization enumerates all
/// 2^n − 1 coalitions.
pub const MAX_PLAYERS: usize = 20;

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_mask(mask: u32) -> Coalition {
        Coalition(mask)
    }

    pub fn singleton(i: usize) -> Coalition {
        Coalition(1 << i)
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Coalition {
        Coalition(members.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    /// All consumers `0..n`.
    pub fn grand(n: usize) -> Coalition {
        assert!(n <= MAX_PLAYERS, "population beyond bitmask cap");
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Coalition) -> Coalition {
        Coalition(self.0 | other.0)
    }

    pub fn intersection(self, other: Coalition) -> Coalition {
        Coalition(self.0 & other.0)
    }

    pub fn complement_within(self, n: usize) -> Coalition {
        Coalition(Coalition::grand(n).0 & !self.0)
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    /// All subsets of this coalition, empty set and the coalition itself
    /// included, via the carry-rippler enumeration.
    pub fn subsets(self) -> SubsetIter {
        SubsetIter {
            set: self.0,
            subset: 0,
            done: false,
        }
    }

    /// All nonempty coalitions over a population of `n`.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = Coalition> {
        (1..(1u64 << n)).map(|m| Coalition(m as u32))
    }

    pub fn require_nonempty(self) -> Result<Coalition> {
        if self.is_empty() {
            Err(Error::EmptyCoalition)
        } else {
            Ok(self)
        }
    }
}

/// Iterates `subset = (subset − set) & set` until it wraps to zero.
pub struct SubsetIter {
    set: u32,
    subset: u32,
    done: bool,
}

impl Iterator for SubsetIter {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.done {
            return None;
        }
        let current = self.subset;
        self.subset = self.subset.wrapping_sub(self.set) & self.set;
        self.done = self.subset == 0;
        Some(Coalition(current))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}
