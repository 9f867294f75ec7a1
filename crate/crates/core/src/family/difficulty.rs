//! Difficulty of a direction by exhaustive search over small sets `Z`, and the
//! constants derived from such searches (α*, ρ̂).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::UpdateFamily;
use crate::geometry::{line_index, u_norm, Direction, LineFrame, Site, UNormContext};
use crate::lattice::{strip_line_decision_auto, LineVerdict, Strip, StripDecision, MAX_BAND_HEIGHT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Value of α±(u) or α(u).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DifficultyValue {
    Finite(u32),
    /// Infinite because of where `u` sits in the stable set.
    Infinite,
    /// No witness within the searched window and cardinality cap.
    InfiniteWithinWindow,
}

impl DifficultyValue {
    pub fn finite(self) -> Option<u32> {
        match self {
            DifficultyValue::Finite(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_resolved(self) -> bool {
        self != DifficultyValue::InfiniteWithinWindow
    }

    /// Ordering key with both kinds of infinity above every finite value.
    pub fn key(self) -> u64 {
        match self {
            DifficultyValue::Finite(k) => k as u64,
            _ => u64::MAX,
        }
    }

    /// `min` of two side values per the definition of `ᾱ`.
    pub fn min_side(a: DifficultyValue, b: DifficultyValue) -> DifficultyValue {
        use DifficultyValue::*;
        match (a, b) {
            (Finite(x), Finite(y)) => Finite(x.min(y)),
            (Finite(x), _) | (_, Finite(x)) => Finite(x),
            (Infinite, Infinite) => Infinite,
            _ => InfiniteWithinWindow,
        }
    }

    /// Two-sided α: the minimum if both sides are finite, infinite otherwise.
    pub fn two_sided(a: DifficultyValue, b: DifficultyValue) -> DifficultyValue {
        use DifficultyValue::*;
        match (a, b) {
            (Finite(x), Finite(y)) => Finite(x.min(y)),
            (Infinite, _) | (_, Infinite) => Infinite,
            _ => InfiniteWithinWindow,
        }
    }
}

impl std::fmt::Display for DifficultyValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DifficultyValue::Finite(k) => write!(f, "{k}"),
            DifficultyValue::Infinite => write!(f, "inf"),
            DifficultyValue::InfiniteWithinWindow => write!(f, "INFINITE_WITHIN_WINDOW"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Z lies in the box `[-window, window]²`.
    pub window: i64,
    /// Largest cardinality of Z tried.
    pub max_size: usize,
    /// Largest number of translation classes tested.
    pub candidate_cap: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { window: 8, max_size: 4, candidate_cap: 1_000_000 }
    }
}

impl SearchConfig {
    pub fn with_window(window: i64) -> SearchConfig {
        SearchConfig { window, ..SearchConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyResult {
    pub value: DifficultyValue,
    pub window: i64,
    pub max_size: usize,
    pub witness: Option<Vec<Site>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionDifficulty {
    pub u: Direction,
    pub plus: DifficultyResult,
    pub minus: DifficultyResult,
    /// Translation classes examined.
    pub candidates: u64,
    /// Strip decisions that found no repetition (counted as not infinite).
    pub undetermined: u64,
}

impl DirectionDifficulty {
    pub fn alpha(&self) -> DifficultyValue {
        DifficultyValue::two_sided(self.plus.value, self.minus.value)
    }

    pub fn alpha_bar(&self) -> DifficultyValue {
        DifficultyValue::min_side(self.plus.value, self.minus.value)
    }

    pub fn side(&self, side: Side) -> &DifficultyResult {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DifficultyError {
    #[error("search budget of {cap} candidate sets exceeded at cardinality {size}")]
    SearchBudgetExceeded { cap: u64, size: usize },
    #[error("closure of H_u ∪ Z escaped a band of height {height} for u = {u}")]
    StripHeightExceeded { u: Direction, height: i64 },
    #[error("no set of at most {max} consecutive sites fills the right half-line for u = {u}")]
    NotFound { u: Direction, max: usize },
}

/// Candidate sites for Z: the box minus `H_u`, sorted by `(line index, right coordinate)`.
struct Candidates {
    sites: Vec<Site>,
    coords: Vec<(i64, i64)>,
    row_min: std::collections::HashMap<i64, i64>,
}

impl Candidates {
    fn new(u: Direction, window: i64) -> Candidates {
        let frame = LineFrame::new(u);
        let mut v: Vec<((i64, i64), Site)> = vec![];
        for x in -window..=window {
            for y in -window..=window {
                let p = Site::new(x, y);
                let (j, r) = frame.to_frame(p);
                if j >= 0 {
                    v.push(((j, r), p));
                }
            }
        }
        v.sort();
        let mut row_min = std::collections::HashMap::new();
        for &((j, r), _) in &v {
            row_min.entry(j).or_insert(r);
        }
        Candidates {
            coords: v.iter().map(|x| x.0).collect(),
            sites: v.iter().map(|x| x.1).collect(),
            row_min,
        }
    }

    /// Z is the leftmost translate along `ℓ_u` that fits in the box.
    fn canonical(&self, idx: &[usize]) -> bool {
        idx.is_empty() || idx.iter().any(|&i| self.coords[i].1 == self.row_min[&self.coords[i].0])
    }
}

/// Calls `f` on every increasing index tuple of length `k` below `n` until it returns false.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { return };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stop {
    /// Minimal witnesses for both sides.
    Both,
    /// Stop at the first cardinality where either side has a witness.
    Either,
}

fn decide(u: Direction, z: &[Site], family: &UpdateFamily) -> Result<StripDecision, DifficultyError> {
    let d = strip_line_decision_auto(u, z, family);
    if d.exceeded() {
        return Err(DifficultyError::StripHeightExceeded { u, height: MAX_BAND_HEIGHT });
    }
    Ok(d)
}

fn search(family: &UpdateFamily, u: Direction, cfg: &SearchConfig, stop: Stop) -> Result<DirectionDifficulty, DifficultyError> {
    let unresolved = DifficultyResult {
        value: DifficultyValue::InfiniteWithinWindow,
        window: cfg.window,
        max_size: cfg.max_size,
        witness: None,
    };
    let mut out = DirectionDifficulty { u, plus: unresolved.clone(), minus: unresolved, candidates: 0, undetermined: 0 };
    if !family.is_stable(u) {
        for r in [&mut out.plus, &mut out.minus] {
            r.value = DifficultyValue::Finite(0);
            r.witness = Some(vec![]);
        }
        return Ok(out);
    }
    let cands = Candidates::new(u, cfg.window);
    let n = cands.sites.len();
    for k in 0..=cfg.max_size {
        let mut err = None;
        let need = |o: &DirectionDifficulty, side_plus: bool| {
            let r = if side_plus { &o.plus } else { &o.minus };
            r.witness.is_none()
        };
        for_each_subset(n, k, |idx| {
            if !cands.canonical(idx) {
                return true;
            }
            out.candidates += 1;
            if out.candidates > cfg.candidate_cap {
                err = Some(DifficultyError::SearchBudgetExceeded { cap: cfg.candidate_cap, size: k });
                return false;
            }
            let z: Vec<Site> = idx.iter().map(|&i| cands.sites[i]).collect();
            let d = match decide(u, &z, family) {
                Ok(d) => d,
                Err(e) => {
                    err = Some(e);
                    return false;
                }
            };
            for (plus, verdict) in [(true, d.plus.verdict), (false, d.minus.verdict)] {
                if verdict == LineVerdict::Undetermined {
                    out.undetermined += 1;
                }
                if verdict == LineVerdict::InfiniteLine && need(&out, plus) {
                    let r = if plus { &mut out.plus } else { &mut out.minus };
                    r.value = DifficultyValue::Finite(k as u32);
                    r.witness = Some(z.clone());
                }
            }
            need(&out, true) || need(&out, false)
        });
        if let Some(e) = err {
            return Err(e);
        }
        let found = [out.plus.witness.is_some(), out.minus.witness.is_some()];
        if found.iter().all(|&f| f) || (stop == Stop::Either && found.iter().any(|&f| f)) {
            break;
        }
    }
    Ok(out)
}

/// `α±(u)`: the least `|Z|` such that `[H_u ∪ Z] ∩ ℓ_u^±` is infinite, searched by
/// increasing cardinality then lexicographic order inside the window box.
pub fn difficulty_side(family: &UpdateFamily, u: Direction, side: Side, cfg: &SearchConfig) -> Result<DifficultyResult, DifficultyError> {
    Ok(search(family, u, cfg, Stop::Both)?.side(side).clone())
}

/// Both sides of the difficulty of `u`.
pub fn difficulty(family: &UpdateFamily, u: Direction, cfg: &SearchConfig) -> Result<DirectionDifficulty, DifficultyError> {
    search(family, u, cfg, Stop::Both)
}

/// Search that stops as soon as one side has a witness; used at endpoints of stable
/// intervals, where exactly one side is finite.
pub fn difficulty_one_side(family: &UpdateFamily, u: Direction, cfg: &SearchConfig) -> Result<DirectionDifficulty, DifficultyError> {
    search(family, u, cfg, Stop::Either)
}

/// Whether `[H_u ∪ Z] ∩ ℓ_u` is infinite.
pub fn voracious_check(z: &[Site], u: Direction, family: &UpdateFamily, alpha_cap: usize) -> Result<bool, DifficultyError> {
    if z.len() > alpha_cap {
        return Ok(false);
    }
    Ok(decide(u, z, family)?.any_infinite())
}

/// Least number of consecutive sites of `ℓ_{u*}`, starting at the origin and going right,
/// whose closure with `H_{u*}` contains all of `ℓ_{u*}^+`.
pub fn alpha_star(family: &UpdateFamily, u_star: Direction, max: usize) -> Result<u32, DifficultyError> {
    if !family.is_stable(u_star) {
        return Ok(0);
    }
    let frame = LineFrame::new(u_star);
    for k in 1..=max {
        let z: Vec<Site> = (0..k as i64).map(|r| frame.from_frame(0, r)).collect();
        let d = decide(u_star, &z, family)?;
        if d.plus.verdict != LineVerdict::InfiniteLine {
            continue;
        }
        let strip = Strip::new(u_star, &z, family, crate::lattice::default_band_height(family, k));
        let extent = 64 * strip.block_width;
        let lat = strip.simulate(extent);
        if (0..extent / 2).all(|r| lat.is_infected(Site::new(r, 0))) {
            return Ok(k as u32);
        }
    }
    Err(DifficultyError::NotFound { u: u_star, max })
}

/// An upper bound on the largest distance from `Y` to a site of `[H_u ∪ Y] \ H_u`, over
/// `u ∈ dirs` and `|Y| = size` inside the window box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBound {
    pub value: f64,
    pub witness: Option<(Direction, Vec<Site>)>,
}

/// `ρ̂` for the given directions, measured in the Euclidean norm or in a u-norm.
pub fn rho_bound_with(
    family: &UpdateFamily,
    dirs: &[Direction],
    size: usize,
    window: i64,
    norm: Option<&UNormContext>,
) -> Result<RhoBound, DifficultyError> {
    let mut best = RhoBound { value: 0.0, witness: None };
    if size == 0 {
        return Ok(best);
    }
    for &u in dirs {
        let cands = Candidates::new(u, window);
        let mut err = None;
        for_each_subset(cands.sites.len(), size, |idx| {
            if !cands.canonical(idx) {
                return true;
            }
            let z: Vec<Site> = idx.iter().map(|&i| cands.sites[i]).collect();
            match finite_closure(u, &z, family) {
                Ok(new) => {
                    for y in new {
                        let d = z
                            .iter()
                            .map(|&x| match norm {
                                Some(ctx) => u_norm(y - x, ctx),
                                None => y.dist(x),
                            })
                            .fold(f64::INFINITY, f64::min);
                        if d > best.value {
                            best = RhoBound { value: d, witness: Some((u, z.clone())) };
                        }
                    }
                    true
                }
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(best)
}

/// `ρ̂` with `|Z| = α − 1`.
pub fn rho_bound(family: &UpdateFamily, s_b: &[Direction], alpha: u32, window: i64) -> Result<RhoBound, DifficultyError> {
    rho_bound_with(family, s_b, alpha.saturating_sub(1) as usize, window, None)
}

/// The sites of `[H_u ∪ Z] \ (H_u ∪ Z)`, which must be finite.
pub fn finite_closure(u: Direction, z: &[Site], family: &UpdateFamily) -> Result<Vec<Site>, DifficultyError> {
    let zmax = z.iter().map(|&p| line_index(p, u)).max().unwrap_or(0);
    let mut height = crate::lattice::default_band_height(family, z.len()).max(2 * zmax + 2);
    while height <= MAX_BAND_HEIGHT {
        let strip = Strip::new(u, z, family, height);
        let mut extent = 8 * strip.block_width;
        while extent <= crate::lattice::STRIP_MAX_EXTENT {
            let lat = strip.simulate(extent);
            let sites = lat.infected_sites();
            let (x0, _, x1, _) = lat.window_box();
            let touches_top = sites.iter().any(|s| s.y == height - 1);
            if touches_top {
                break;
            }
            if sites.iter().all(|s| s.x > x0 + strip.block_width && s.x < x1 - strip.block_width) {
                let zf: std::collections::HashSet<Site> = z.iter().copied().collect();
                return Ok(sites
                    .into_iter()
                    .map(|s| strip.frame.from_frame(s.y, s.x))
                    .filter(|s| !zf.contains(s))
                    .collect());
            }
            extent *= 2;
        }
        height *= 2;
    }
    Err(DifficultyError::StripHeightExceeded { u, height: MAX_BAND_HEIGHT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::corpus;

    #[test]
    fn two_neighbour_e1_is_one() {
        let f = corpus::two_neighbour();
        let r = difficulty_side(&f, Direction::E1, Side::Plus, &SearchConfig::with_window(3)).unwrap();
        assert_eq!(r.value, DifficultyValue::Finite(1));
        assert_eq!(r.witness.unwrap().len(), 1);
        let d = difficulty(&f, Direction::E1, &SearchConfig::default()).unwrap();
        assert_eq!(d.alpha(), DifficultyValue::Finite(1));
    }

    #[test]
    fn unstable_direction_is_zero() {
        let f = corpus::two_neighbour();
        let u = Direction::new(1, 1).unwrap();
        let d = difficulty(&f, u, &SearchConfig::default()).unwrap();
        assert_eq!(d.alpha(), DifficultyValue::Finite(0));
        assert_eq!(d.plus.witness, Some(vec![]));
    }

    #[test]
    fn voracity_examples() {
        let f = corpus::two_neighbour();
        assert!(voracious_check(&[Site::ORIGIN], Direction::E1, &f, 1).unwrap());
        assert!(!voracious_check(&[], Direction::E1, &f, 1).unwrap());
        assert!(voracious_check(&[Site::ORIGIN], Direction::E2, &corpus::duarte(), 1).unwrap());
    }

    #[test]
    fn alpha_star_examples() {
        assert_eq!(alpha_star(&corpus::two_neighbour(), Direction::E2, 8).unwrap(), 1);
        assert_eq!(alpha_star(&corpus::duarte(), Direction::E2, 8).unwrap(), 1);
        assert_eq!(alpha_star(&corpus::two_neighbour(), Direction::new(1, 1).unwrap(), 8).unwrap(), 0);
    }

    #[test]
    fn rho_is_zero_for_alpha_one() {
        let f = corpus::two_neighbour();
        let dirs = [Direction::E1, Direction::E2];
        assert_eq!(rho_bound(&f, &dirs, 1, 4).unwrap().value, 0.0);
    }
}
