//! Finite secrecy lattices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// A secrecy level identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(Arc<str>);

impl Level {
    pub fn new(id: impl AsRef<str>) -> Self {
        Level(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Level {
    fn from(s: &str) -> Self {
        Level::new(s)
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattice has no levels")]
    Empty,
    #[error("unknown secrecy level `{0}`")]
    UnknownLevel(Level),
    #[error("order is not antisymmetric: `{0}` and `{1}` are below each other")]
    Cycle(Level, Level),
    #[error("levels `{0}` and `{1}` have no unique join")]
    NoJoin(Level, Level),
    #[error("levels `{0}` and `{1}` have no unique meet")]
    NoMeet(Level, Level),
}

/// A finite lattice given by its levels and the reflexive-transitive closure
/// of a set of covering edges.
#[derive(Clone, PartialEq, Eq)]
pub struct SecrecyLattice {
    levels: Vec<Level>,
    index: BTreeMap<Level, usize>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<usize>>,
    meet: Vec<Vec<usize>>,
}

impl fmt::Debug for SecrecyLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecrecyLattice {{ ")?;
        for (i, (a, b)) in self.covering_edges().iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{a} < {b}")?;
        }
        write!(f, " }}")
    }
}

impl SecrecyLattice {
    /// Builds a lattice from declared levels and `a < b` edges. Levels that
    /// only appear in edges are added automatically.
    pub fn new(
        levels: impl IntoIterator<Item = Level>,
        edges: impl IntoIterator<Item = (Level, Level)>,
    ) -> Result<Self, LatticeError> {
        let edges: Vec<(Level, Level)> = edges.into_iter().collect();
        let mut set: BTreeSet<Level> = levels.into_iter().collect();
        for (a, b) in &edges {
            set.insert(a.clone());
            set.insert(b.clone());
        }
        if set.is_empty() {
            return Err(LatticeError::Empty);
        }
        let levels: Vec<Level> = set.into_iter().collect();
        let index: BTreeMap<Level, usize> = levels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let n = levels.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in &edges {
            leq[index[a]][index[b]] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(LatticeError::Cycle(levels[i].clone(), levels[j].clone()));
                }
            }
        }
        let mut join = vec![vec![0; n]; n];
        let mut meet = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let ub: Vec<usize> = (0..n).filter(|&k| leq[i][k] && leq[j][k]).collect();
                join[i][j] = ub
                    .iter()
                    .copied()
                    .find(|&k| ub.iter().all(|&u| leq[k][u]))
                    .ok_or_else(|| LatticeError::NoJoin(levels[i].clone(), levels[j].clone()))?;
                let lb: Vec<usize> = (0..n).filter(|&k| leq[k][i] && leq[k][j]).collect();
                meet[i][j] = lb
                    .iter()
                    .copied()
                    .find(|&k| lb.iter().all(|&l| leq[l][k]))
                    .ok_or_else(|| LatticeError::NoMeet(levels[i].clone(), levels[j].clone()))?;
            }
        }
        Ok(SecrecyLattice {
            levels,
            index,
            leq,
            join,
            meet,
        })
    }

    /// The chain `L < H`.
    pub fn two_point() -> Self {
        SecrecyLattice::new([], [(Level::new("L"), Level::new("H"))]).expect("two-point chain is a lattice")
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn contains(&self, l: &Level) -> bool {
        self.index.contains_key(l)
    }

    fn idx(&self, l: &Level) -> Result<usize, LatticeError> {
        self.index.get(l).copied().ok_or_else(|| LatticeError::UnknownLevel(l.clone()))
    }

    pub fn leq(&self, c: &Level, d: &Level) -> Result<bool, LatticeError> {
        Ok(self.leq[self.idx(c)?][self.idx(d)?])
    }

    pub fn join(&self, c: &Level, d: &Level) -> Result<Level, LatticeError> {
        Ok(self.levels[self.join[self.idx(c)?][self.idx(d)?]].clone())
    }

    pub fn meet(&self, c: &Level, d: &Level) -> Result<Level, LatticeError> {
        Ok(self.levels[self.meet[self.idx(c)?][self.idx(d)?]].clone())
    }

    pub fn bottom(&self) -> Level {
        let b = (1..self.levels.len()).fold(0, |acc, i| self.meet[acc][i]);
        self.levels[b].clone()
    }

    pub fn top(&self) -> Level {
        let t = (1..self.levels.len()).fold(0, |acc, i| self.join[acc][i]);
        self.levels[t].clone()
    }

    /// Levels `l` with `c ⊑ l`, in declaration-sorted order.
    pub fn up_set(&self, c: &Level) -> Result<Vec<Level>, LatticeError> {
        let i = self.idx(c)?;
        Ok((0..self.levels.len())
            .filter(|&j| self.leq[i][j])
            .map(|j| self.levels[j].clone())
            .collect())
    }

    /// The Hasse diagram, sorted.
    pub fn covering_edges(&self) -> Vec<(Level, Level)> {
        let n = self.levels.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || !self.leq[i][j] {
                    continue;
                }
                let covered = (0..n).any(|k| k != i && k != j && self.leq[i][k] && self.leq[k][j]);
                if !covered {
                    out.push((self.levels[i].clone(), self.levels[j].clone()));
                }
            }
        }
        out.sort();
        out
    }

    /// Levels with no incident edge.
    pub fn isolated_levels(&self) -> Vec<Level> {
        let n = self.levels.len();
        (0..n)
            .filter(|&i| (0..n).all(|j| i == j || (!self.leq[i][j] && !self.leq[j][i])))
            .map(|i| self.levels[i].clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Level {
        Level::new(s)
    }

    #[test]
    fn two_point_tables() {
        let o = SecrecyLattice::two_point();
        assert!(o.leq(&l("L"), &l("H")).unwrap());
        assert!(!o.leq(&l("H"), &l("L")).unwrap());
        assert_eq!(o.join(&l("L"), &l("L")).unwrap(), l("L"));
        assert_eq!(o.meet(&l("H"), &l("H")).unwrap(), l("H"));
        assert_eq!(o.join(&l("L"), &l("H")).unwrap(), l("H"));
        assert_eq!(o.meet(&l("L"), &l("H")).unwrap(), l("L"));
        assert_eq!(o.bottom(), l("L"));
        assert_eq!(o.top(), l("H"));
    }

    #[test]
    fn unknown_level_is_named() {
        let o = SecrecyLattice::two_point();
        assert_eq!(o.leq(&l("M"), &l("H")), Err(LatticeError::UnknownLevel(l("M"))));
    }

    #[test]
    fn diamond_joins_through_top() {
        let o = SecrecyLattice::new(
            [],
            [(l("L"), l("M1")), (l("L"), l("M2")), (l("M1"), l("H")), (l("M2"), l("H"))],
        )
        .unwrap();
        assert_eq!(o.join(&l("M1"), &l("M2")).unwrap(), l("H"));
        assert_eq!(o.meet(&l("M1"), &l("M2")).unwrap(), l("L"));
        assert!(!o.leq(&l("M1"), &l("M2")).unwrap());
        assert_eq!(o.covering_edges().len(), 4);
    }

    #[test]
    fn bowtie_rejected() {
        let r = SecrecyLattice::new(
            [],
            [(l("a"), l("c")), (l("a"), l("d")), (l("b"), l("c")), (l("b"), l("d"))],
        );
        assert!(matches!(r, Err(LatticeError::NoJoin(..))));
    }

    #[test]
    fn cycle_rejected() {
        let r = SecrecyLattice::new([], [(l("a"), l("b")), (l("b"), l("a"))]);
        assert!(matches!(r, Err(LatticeError::Cycle(..))));
    }

    #[test]
    fn incomparable_pair_without_top_rejected() {
        let r = SecrecyLattice::new([l("a"), l("b")], []);
        assert!(matches!(r, Err(LatticeError::NoJoin(..))));
        assert!(SecrecyLattice::new([l("a")], []).is_ok());
    }

    #[test]
    fn transitive_closure() {
        let o = SecrecyLattice::new([], [(l("L"), l("M")), (l("M"), l("H"))]).unwrap();
        assert!(o.leq(&l("L"), &l("H")).unwrap());
        assert_eq!(o.covering_edges(), vec![(l("L"), l("M")), (l("M"), l("H"))]);
        assert_eq!(o.up_set(&l("M")).unwrap(), vec![l("H"), l("M")]);
    }
}
