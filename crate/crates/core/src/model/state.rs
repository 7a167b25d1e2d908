use std::fmt;

use crate::error::{Error, Result};

/// A game outcome: one action bit per node plus the directed adjacency
/// matrix of friendship nominations (zero diagonal).
///
/// States with `n * n <= 64` also have a packed integer index. The packing
/// is diagonal-first: bit `i` (for `i < n`) is the action of node `i`, and
/// the remaining `n(n-1)` bits hold the off-diagonal links in row-major
/// order. See [`cell_bit`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    n: usize,
    actions: Vec<bool>,
    links: Vec<bool>,
}

/// Bit position of cell `(i, j)` in the packed state encoding. The diagonal
/// cell `(i, i)` is the action of node `i`.
#[inline]
pub fn cell_bit(n: usize, i: usize, j: usize) -> usize {
    if i == j {
        i
    } else {
        n + i * (n - 1) + if j > i { j - 1 } else { j }
    }
}

/// Inverse of [`cell_bit`].
pub fn bit_cell(n: usize, bit: usize) -> (usize, usize) {
    if bit < n {
        (bit, bit)
    } else {
        let off = bit - n;
        let i = off / (n - 1);
        let r = off % (n - 1);
        (i, if r >= i { r + 1 } else { r })
    }
}

impl NetworkState {
    /// The state with no links and every action at zero.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("a network needs n >= 2 nodes, got {n}")));
        }
        Ok(Self {
            n,
            actions: vec![false; n],
            links: vec![false; n * n],
        })
    }

    /// Builds a state from explicit actions and an `n x n` adjacency matrix.
    pub fn from_parts(actions: Vec<bool>, adjacency: Vec<Vec<bool>>) -> Result<Self> {
        let n = actions.len();
        let mut s = Self::empty(n)?;
        if adjacency.len() != n || adjacency.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("adjacency matrix must be n x n"));
        }
        s.actions = actions;
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if i == j && g {
                    return Err(Error::invalid(format!("self-loop at node {i}")));
                }
                s.links[i * n + j] = g;
            }
        }
        Ok(s)
    }

    /// Decodes a packed state index (requires `n * n <= 64`).
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        let mut s = Self::empty(n)?;
        if n * n > 64 {
            return Err(Error::invalid("packed indices need n*n <= 64"));
        }
        if n * n < 64 && index >> (n * n) != 0 {
            return Err(Error::invalid(format!("index {index} out of range for n = {n}")));
        }
        s.set_index(index);
        Ok(s)
    }

    /// Overwrites every bit from a packed index. `n` is unchanged.
    pub fn set_index(&mut self, index: u64) {
        let n = self.n;
        for i in 0..n {
            self.actions[i] = index >> i & 1 == 1;
        }
        let mut bit = n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    self.links[i * n + j] = index >> bit & 1 == 1;
                    bit += 1;
                }
            }
        }
    }

    /// Packed index of the state (requires `n * n <= 64`).
    pub fn index(&self) -> u64 {
        let n = self.n;
        assert!(n * n <= 64, "packed indices need n*n <= 64");
        let mut idx = 0u64;
        for i in 0..n {
            idx |= (self.actions[i] as u64) << i;
        }
        let mut bit = n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    idx |= (self.links[i * n + j] as u64) << bit;
                    bit += 1;
                }
            }
        }
        idx
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn action(&self, i: usize) -> bool {
        self.actions[i]
    }

    #[inline]
    pub fn set_action(&mut self, i: usize, a: bool) {
        self.actions[i] = a;
    }

    #[inline]
    pub fn link(&self, i: usize, j: usize) -> bool {
        self.links[i * self.n + j]
    }

    #[inline]
    pub fn set_link(&mut self, i: usize, j: usize, g: bool) {
        debug_assert!(i != j, "self-loops are not part of the state");
        self.links[i * self.n + j] = g;
    }

    pub fn actions(&self) -> &[bool] {
        &self.actions
    }

    /// Row-major `n x n` adjacency, diagonal always false.
    pub fn adjacency(&self) -> &[bool] {
        &self.links
    }

    /// Reads a cell of the packed layout: the diagonal is the action bit.
    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> bool {
        if i == j {
            self.actions[i]
        } else {
            self.links[i * self.n + j]
        }
    }

    #[inline]
    pub fn flip_cell(&mut self, i: usize, j: usize) {
        if i == j {
            self.actions[i] = !self.actions[i];
        } else {
            let c = &mut self.links[i * self.n + j];
            *c = !*c;
        }
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.links[i * self.n..(i + 1) * self.n].iter().filter(|&&g| g).count()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.link(i, j)).count()
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().filter(|&&g| g).count()
    }

    pub fn action_count(&self) -> usize {
        self.actions.iter().filter(|&&a| a).count()
    }

    /// Number of bits that differ from `other` (same `n` required).
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.n, other.n);
        let a = self.actions.iter().zip(&other.actions).filter(|(x, y)| x != y).count();
        let g = self.links.iter().zip(&other.links).filter(|(x, y)| x != y).count();
        a + g
    }

    /// True when every link bit equals the one in `other`.
    pub fn same_links(&self, other: &Self) -> bool {
        self.links == other.links
    }

    /// Number of state bits, `n^2`.
    pub fn num_bits(&self) -> usize {
        self.n * self.n
    }
}

impl fmt::Debug for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NetworkState(n={}, a=", self.n)?;
        for &a in &self.actions {
            write!(f, "{}", a as u8)?;
        }
        write!(f, ", g=")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "|")?;
            }
            for j in 0..self.n {
                write!(f, "{}", if i == j { '.' } else if self.link(i, j) { '1' } else { '0' })?;
            }
        }
        write!(f, ")")
    }
}

/// Bit string in the packed layout, least significant bit first. Used by
/// the CSV writers.
impl fmt::Display for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.actions {
            write!(f, "{}", a as u8)?;
        }
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    write!(f, "{}", self.link(i, j) as u8)?;
                }
            }
        }
        Ok(())
    }
}

/// Iterates over every state of an `n`-node network in packed-index order.
pub fn all_states(n: usize) -> impl Iterator<Item = NetworkState> {
    let total = 1u64 << (n * n);
    (0..total).map(move |idx| NetworkState::from_index(n, idx).expect("valid index"))
}
