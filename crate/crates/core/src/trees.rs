//! Ternary trees indexing the terms of the power-series solution.
//!
//! A tree with `j` internal nodes has `2j + 1` leaves. Internal nodes carry
//! no conjugation marks: the Duhamel operator conjugates its middle
//! argument, so the shape alone determines the term.

use std::fmt;

use crate::error::{Error, Result};

/// Largest generation accepted by [`enumerate_trees`].
pub const ENUMERATION_CAP: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TernaryTree {
    Leaf,
    Node(Box<[TernaryTree; 3]>),
}

impl TernaryTree {
    pub fn node(a: TernaryTree, b: TernaryTree, c: TernaryTree) -> Self {
        TernaryTree::Node(Box::new([a, b, c]))
    }

    /// Number of internal nodes (the generation `j`).
    pub fn internal_nodes(&self) -> usize {
        match self {
            TernaryTree::Leaf => 0,
            TernaryTree::Node(ch) => 1 + ch.iter().map(|c| c.internal_nodes()).sum::<usize>(),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TernaryTree::Leaf => 1,
            TernaryTree::Node(ch) => ch.iter().map(|c| c.leaves()).sum(),
        }
    }

    pub fn size(&self) -> usize {
        self.internal_nodes() + self.leaves()
    }

    /// For each leaf (left to right), whether it enters the term conjugated,
    /// i.e. sits below an odd number of middle slots.
    pub fn leaf_conjugations(&self) -> Vec<bool> {
        fn walk(t: &TernaryTree, conj: bool, out: &mut Vec<bool>) {
            match t {
                TernaryTree::Leaf => out.push(conj),
                TernaryTree::Node(ch) => {
                    walk(&ch[0], conj, out);
                    walk(&ch[1], !conj, out);
                    walk(&ch[2], conj, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, false, &mut out);
        out
    }
}

impl fmt::Display for TernaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TernaryTree::Leaf => write!(f, "•"),
            TernaryTree::Node(ch) => write!(f, "({} {} {})", ch[0], ch[1], ch[2]),
        }
    }
}

impl fmt::Debug for TernaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Compositions (j1, j2, j3) of `total` into three nonnegative parts, in
/// lexicographic order.
pub fn compositions(total: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=total).flat_map(move |a| (0..=total - a).map(move |b| (a, b, total - a - b)))
}

/// #𝐓(j) via #𝐓(j) = Σ_{j1+j2+j3=j−1} #𝐓(j1)#𝐓(j2)#𝐓(j3), #𝐓(0) = 1.
pub fn count_trees(j: usize) -> u128 {
    let mut counts: Vec<u128> = vec![1];
    for g in 1..=j {
        let c = compositions(g - 1).map(|(a, b, c)| counts[a] * counts[b] * counts[c]).sum();
        counts.push(c);
    }
    counts[j]
}

/// The constant 9 (Σ_{k≥0} (1+k)^{−2})² = π⁴/4 of the exponential growth bound.
pub fn growth_constant() -> f64 {
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    9.0 * zeta2 * zeta2
}

/// All trees with `j` internal nodes, each once, ordered by the composition
/// of child generations and then recursively by the children.
pub fn enumerate_trees(j: usize) -> Result<Vec<TernaryTree>> {
    if j > ENUMERATION_CAP {
        return Err(Error::Resource(format!("tree enumeration capped at j <= {ENUMERATION_CAP}, got {j}")));
    }
    let mut levels: Vec<Vec<TernaryTree>> = vec![vec![TernaryTree::Leaf]];
    for g in 1..=j {
        let mut trees = Vec::with_capacity(count_trees(g) as usize);
        for (a, b, c) in compositions(g - 1) {
            for ta in &levels[a] {
                for tb in &levels[b] {
                    for tc in &levels[c] {
                        trees.push(TernaryTree::node(ta.clone(), tb.clone(), tc.clone()));
                    }
                }
            }
        }
        levels.push(trees);
    }
    Ok(levels.swap_remove(j))
}
