//! Update families and their rule algebra.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dot_sign, negative_arc, Arc, ArcSet, Direction, Site};

mod classify;
pub mod corpus;
mod difficulty;

pub use classify::*;
pub use difficulty::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("an update family needs at least one rule")]
    EmptyFamily,
    #[error("rule {0} is empty")]
    EmptyRule(usize),
    #[error("rule {0} contains the origin")]
    OriginInRule(usize),
}

/// A finite collection of finite subsets of Z² \ {0}.
///
/// Sites inside each rule and the rules themselves are kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpdateFamily {
    name: String,
    rules: Vec<Vec<Site>>,
}

impl UpdateFamily {
    pub fn new(name: impl Into<String>, rules: Vec<Vec<Site>>) -> Result<UpdateFamily, FamilyError> {
        if rules.is_empty() {
            return Err(FamilyError::EmptyFamily);
        }
        let mut out = Vec::with_capacity(rules.len());
        for (i, mut r) in rules.into_iter().enumerate() {
            if r.is_empty() {
                return Err(FamilyError::EmptyRule(i));
            }
            if r.contains(&Site::ORIGIN) {
                return Err(FamilyError::OriginInRule(i));
            }
            r.sort();
            r.dedup();
            out.push(r);
        }
        out.sort();
        out.dedup();
        Ok(UpdateFamily { name: name.into(), rules: out })
    }

    /// All `k`-subsets of `neighbours`, one rule each.
    pub fn threshold(name: impl Into<String>, neighbours: &[Site], k: usize) -> Result<UpdateFamily, FamilyError> {
        let mut rules = vec![];
        let n = neighbours.len();
        if k == 0 || k > n {
            return Err(FamilyError::EmptyFamily);
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            rules.push(idx.iter().map(|&i| neighbours[i]).collect());
            let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { break };
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
        UpdateFamily::new(name, rules)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[Vec<Site>] {
        &self.rules
    }

    /// Every site used by some rule, sorted.
    pub fn sites(&self) -> Vec<Site> {
        let mut s: Vec<Site> = self.rules.iter().flatten().copied().collect();
        s.sort();
        s.dedup();
        s
    }

    /// `ν = max ‖x − y‖` over `x, y ∈ X ∪ {0}`, `X ∈ U`.
    pub fn nu(&self) -> f64 {
        let mut best = 0i64;
        for r in &self.rules {
            let with0: Vec<Site> = r.iter().copied().chain(std::iter::once(Site::ORIGIN)).collect();
            for &x in &with0 {
                for &y in &with0 {
                    best = best.max(x.dist_sq(y));
                }
            }
        }
        (best as f64).sqrt()
    }

    /// Largest Chebyshev norm of a rule site: how far one step can reach.
    pub fn reach(&self) -> i64 {
        self.rules.iter().flatten().map(|s| s.chebyshev()).max().unwrap_or(0)
    }

    /// No rule lies inside the open half-plane `H_u`.
    pub fn is_stable(&self, u: Direction) -> bool {
        !self.rules.iter().any(|r| r.iter().all(|&x| dot_sign(x, u) < 0))
    }

    pub fn stable_set(&self) -> StableSet {
        let mut unstable = ArcSet::empty();
        for r in &self.rules {
            let mut arc = ArcSet::full();
            for &x in r {
                arc = arc.intersection(&negative_arc(x).expect("rule sites are nonzero"));
            }
            unstable = unstable.union(&arc);
        }
        StableSet { set: unstable.complement() }
    }

    /// `Q`: both perpendiculars of every rule site.
    pub fn quasi_stable_set(&self) -> Vec<Direction> {
        let mut q: Vec<Direction> = self
            .sites()
            .into_iter()
            .flat_map(|x| {
                let d = Direction::of(x).expect("rule sites are nonzero");
                [d.rot_ccw(), d.rot_cw()]
            })
            .collect();
        q.sort();
        q.dedup();
        q
    }

    /// Applies a linear map to every rule site (used for lattice symmetries).
    pub fn transformed(&self, f: impl Fn(Site) -> Site) -> UpdateFamily {
        UpdateFamily::new(self.name.clone(), self.rules.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect())
            .expect("a bijection keeps rules valid")
    }
}

impl fmt::Display for UpdateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [", self.name)?;
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (j, s) in r.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "]")
    }
}

/// The closed set `S` of stable directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableSet {
    set: ArcSet,
}

impl StableSet {
    pub fn from_arc_set(set: ArcSet) -> StableSet {
        StableSet { set }
    }

    pub fn arc_set(&self) -> &ArcSet {
        &self.set
    }

    pub fn contains(&self, u: Direction) -> bool {
        self.set.contains(u)
    }

    pub fn arcs(&self) -> Vec<Arc> {
        self.set.arcs()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.set.is_full()
    }

    pub fn isolated_points(&self) -> Vec<Direction> {
        self.arcs()
            .into_iter()
            .filter_map(|a| match a {
                Arc::Span { start, end, closed_start: true, closed_end: true } if start == end => Some(start),
                _ => None,
            })
            .collect()
    }

    pub fn is_isolated(&self, u: Direction) -> bool {
        self.isolated_points().contains(&u)
    }

    /// The union of the components of `S` that are not single points.
    pub fn nondegenerate(&self) -> ArcSet {
        let arcs: Vec<Arc> = self.arcs().into_iter().filter(|a| !a.is_degenerate_point()).collect();
        ArcSet::from_arcs(&arcs).expect("arcs of a normalized set are valid")
    }

    /// Nondegenerate components `[v, w]` (counterclockwise from `v` to `w`).
    pub fn intervals(&self) -> Vec<(Direction, Direction)> {
        self.arcs()
            .into_iter()
            .filter_map(|a| match a {
                Arc::Span { start, end, .. } if start != end => Some((start, end)),
                _ => None,
            })
            .collect()
    }

    pub fn breakpoints(&self) -> &[Direction] {
        self.set.breakpoints()
    }
}

impl fmt::Display for StableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: i64, b: i64) -> Direction {
        Direction::new(a, b).unwrap()
    }

    #[test]
    fn nu_examples() {
        assert_eq!(corpus::two_neighbour().nu(), 2.0);
        assert_eq!(UpdateFamily::new("one", vec![vec![Site::new(1, 0)]]).unwrap().nu(), 1.0);
        assert_eq!(corpus::duarte().nu(), 2.0);
        assert_eq!(UpdateFamily::new("none", vec![]), Err(FamilyError::EmptyFamily));
    }

    #[test]
    fn stability_examples() {
        let f = corpus::two_neighbour();
        assert!(f.is_stable(Direction::E1));
        assert!(!f.is_stable(d(1, 1)));
        let r1 = corpus::r1();
        for (a, b) in [(1, 0), (3, -7), (0, -1), (2, 5)] {
            assert!(!r1.is_stable(d(a, b)));
        }
    }

    #[test]
    fn stable_set_examples() {
        let s = corpus::two_neighbour().stable_set();
        let mut iso = s.isolated_points();
        iso.sort();
        assert_eq!(iso, vec![d(1, 0), d(0, 1), d(-1, 0), d(0, -1)]);
        assert!(corpus::r3().stable_set().is_full());
        assert!(corpus::r1().stable_set().is_empty());
        let duarte = corpus::duarte().stable_set();
        assert_eq!(duarte.isolated_points(), vec![Direction::E1]);
        assert_eq!(duarte.intervals(), vec![(d(0, 1), d(0, -1))]);
    }

    #[test]
    fn quasi_stable_examples() {
        let mut q = corpus::two_neighbour().quasi_stable_set();
        q.sort();
        assert_eq!(q, vec![d(1, 0), d(0, 1), d(-1, 0), d(0, -1)]);
        let single = UpdateFamily::new("x", vec![vec![Site::new(1, 2)]]).unwrap();
        assert_eq!(single.quasi_stable_set(), vec![d(-2, 1), d(2, -1)]);
        assert_eq!(corpus::duarte().quasi_stable_set().len(), 4);
    }

    #[test]
    fn threshold_builds_all_subsets() {
        let f = UpdateFamily::threshold("t", &corpus::NEAREST, 2).unwrap();
        assert_eq!(f.rules().len(), 6);
        assert_eq!(f.rules(), corpus::two_neighbour().rules());
    }
}
