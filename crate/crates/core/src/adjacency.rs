//! Bit-packed adjacency rows used by the statistics engine and the samplers.

use crate::network::{BinaryLayer, Dyad};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Adjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    degree: Vec<u32>,
    n_edges: usize,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Adjacency {
            n,
            words,
            bits: vec![0; n * words],
            degree: vec![0; n],
            n_edges: 0,
        }
    }

    pub fn from_layer(layer: &BinaryLayer) -> Self {
        let mut adj = Adjacency::empty(layer.n_nodes());
        for &(i, j) in layer.edges() {
            adj.insert(i, j);
        }
        adj
    }

    /// Overwrites `self` with `other` without reallocating.
    pub fn copy_from(&mut self, other: &Adjacency) {
        debug_assert_eq!(self.n, other.n);
        self.bits.copy_from_slice(&other.bits);
        self.degree.copy_from_slice(&other.degree);
        self.n_edges = other.n_edges;
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn has(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    #[inline]
    pub fn insert(&mut self, i: usize, j: usize) {
        debug_assert!(i != j && !self.has(i, j));
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
        self.degree[i] += 1;
        self.degree[j] += 1;
        self.n_edges += 1;
    }

    #[inline]
    pub fn remove(&mut self, i: usize, j: usize) {
        debug_assert!(self.has(i, j));
        self.bits[i * self.words + j / 64] &= !(1 << (j % 64));
        self.bits[j * self.words + i / 64] &= !(1 << (i % 64));
        self.degree[i] -= 1;
        self.degree[j] -= 1;
        self.n_edges -= 1;
    }

    /// Number of common neighbours of `i` and `j`.
    #[inline]
    pub fn shared_partners(&self, i: usize, j: usize) -> u32 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn to_layer(&self) -> BinaryLayer {
        let mut edges: Vec<Dyad> = Vec::with_capacity(self.n_edges);
        for i in 0..self.n {
            for_each_bit(self.row(i), |j| {
                if j > i {
                    edges.push((i, j));
                }
            });
        }
        BinaryLayer::from_sorted_unchecked(self.n, edges)
    }
}

/// Calls `f` with the index of every set bit, in increasing order.
#[inline]
pub(crate) fn for_each_bit(words: &[u64], mut f: impl FnMut(usize)) {
    for (w, &word) in words.iter().enumerate() {
        let mut x = word;
        while x != 0 {
            let b = x.trailing_zeros() as usize;
            f(w * 64 + b);
            x &= x - 1;
        }
    }
}
