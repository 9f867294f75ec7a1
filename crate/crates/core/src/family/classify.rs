//! Universality class, difficulty α, balance, drift and the direction sets `S_U`, `S_B`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{difficulty, difficulty_one_side, DifficultyError, DifficultyValue, SearchConfig, StableSet, UpdateFamily};
use crate::geometry::{in_closed_semicircle as in_closed_semicircle_points, Arc, ArcSet, Direction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Kind::Subcritical => "subcritical",
            Kind::Critical => "critical",
            Kind::Supercritical => "supercritical",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("every open semicircle has a direction with no witness in the window [-{window}, {window}]²")]
    DifficultyWindowExhausted { window: i64 },
    #[error("the family is {0}, not critical")]
    NotCritical(Kind),
    #[error("u* = {0} is not an endpoint of a nondegenerate stable interval")]
    NoDriftDirection(Direction),
    #[error(transparent)]
    Difficulty(#[from] DifficultyError),
}

/// Difficulty of one stable direction, with the witnesses found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub u: Direction,
    pub isolated: bool,
    pub plus: DifficultyValue,
    pub minus: DifficultyValue,
    pub plus_witness: Option<Vec<crate::geometry::Site>>,
    pub minus_witness: Option<Vec<crate::geometry::Site>>,
}

impl DirectionRecord {
    pub fn alpha(&self) -> DifficultyValue {
        DifficultyValue::two_sided(self.plus, self.minus)
    }

    pub fn alpha_bar(&self) -> DifficultyValue {
        DifficultyValue::min_side(self.plus, self.minus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub family: String,
    pub kind: Kind,
    pub stable_set: String,
    pub window: i64,
    pub max_size: usize,
    pub alpha: Option<u32>,
    /// False when some direction without a witness could still lower α.
    pub alpha_resolved: bool,
    pub balanced: Option<bool>,
    pub drift: Option<bool>,
    pub u_star: Option<Direction>,
    /// `[u*, -u*, u^l, u^r]` for unbalanced families.
    pub s_u: Option<Vec<Direction>>,
    pub s_b: Option<Vec<Direction>>,
    pub directions: Vec<DirectionRecord>,
}

impl Classification {
    pub fn record(&self, u: Direction) -> Option<&DirectionRecord> {
        self.directions.iter().find(|r| r.u == u)
    }
}

/// Whether a closed semicircle contains `set`; candidates are the semicircles starting at a breakpoint.
fn in_closed_semicircle(set: &ArcSet) -> bool {
    if set.is_empty() {
        return true;
    }
    if set.is_full() {
        return false;
    }
    set.breakpoints().iter().any(|&b| {
        let half = ArcSet::from_arc(Arc::closed_semicircle(b)).expect("semicircles are valid");
        set.is_subset(&half)
    })
}

/// Starting angles for the open semicircles worth examining: every breakpoint, its
/// antipode, and a direction strictly inside each gap between consecutive ones.
fn semicircle_starts(s: &StableSet) -> Vec<Direction> {
    let mut e: Vec<Direction> = s.breakpoints().iter().flat_map(|&b| [b, b.opposite()]).collect();
    e.sort();
    e.dedup();
    let mut out = e.clone();
    for i in 0..e.len() {
        let next = e[(i + 1) % e.len()];
        out.push(e[i].strictly_between(next));
    }
    if out.is_empty() {
        out.push(Direction::E1);
    }
    out.sort();
    out.dedup();
    out
}

/// Difficulty record of one direction: searched on both sides when `u` is isolated in the
/// stable set, on the finite side only at an interval endpoint, and not at all elsewhere.
pub fn direction_record(family: &UpdateFamily, u: Direction, cfg: &SearchConfig) -> Result<DirectionRecord, DifficultyError> {
    analyse(family, &family.stable_set(), u, cfg)
}

fn analyse(family: &UpdateFamily, s: &StableSet, u: Direction, cfg: &SearchConfig) -> Result<DirectionRecord, DifficultyError> {
    let isolated = s.is_isolated(u);
    let mut rec = DirectionRecord {
        u,
        isolated,
        plus: DifficultyValue::Infinite,
        minus: DifficultyValue::Infinite,
        plus_witness: None,
        minus_witness: None,
    };
    if !s.contains(u) {
        rec.plus = DifficultyValue::Finite(0);
        rec.minus = DifficultyValue::Finite(0);
        rec.plus_witness = Some(vec![]);
        rec.minus_witness = Some(vec![]);
        return Ok(rec);
    }
    if !s.breakpoints().contains(&u) {
        return Ok(rec);
    }
    let d = if isolated { difficulty(family, u, cfg)? } else { difficulty_one_side(family, u, cfg)? };
    rec.plus = d.plus.value;
    rec.minus = d.minus.value;
    rec.plus_witness = d.plus.witness;
    rec.minus_witness = d.minus.witness;
    if !isolated {
        // At an interval endpoint one side is infinite because of the interval itself.
        match (d.plus.value, d.minus.value) {
            (DifficultyValue::Finite(_), _) => rec.minus = DifficultyValue::Infinite,
            (_, DifficultyValue::Finite(_)) => rec.plus = DifficultyValue::Infinite,
            _ => {}
        }
    }
    Ok(rec)
}

struct Half {
    start: Direction,
    /// Max α over the isolated points inside, `None` meaning infinite.
    value: Option<u32>,
    /// Max over the resolved points only.
    resolved_max: Option<u32>,
    fully_resolved: bool,
}

/// Classifies a family and, if critical, computes α, balance, drift and the
/// direction sets used by the droplet algorithms.
pub fn classify(family: &UpdateFamily, cfg: &SearchConfig) -> Result<Classification, ClassifyError> {
    let s = family.stable_set();
    let mut out = Classification {
        family: family.name().to_string(),
        kind: Kind::Critical,
        stable_set: s.to_string(),
        window: cfg.window,
        max_size: cfg.max_size,
        alpha: None,
        alpha_resolved: true,
        balanced: None,
        drift: None,
        u_star: None,
        s_u: None,
        s_b: None,
        directions: vec![],
    };
    if in_closed_semicircle(s.arc_set()) {
        out.kind = Kind::Supercritical;
        return Ok(out);
    }
    let nondeg = s.nondegenerate();
    if !nondeg.is_empty() && !in_closed_semicircle(&nondeg) {
        out.kind = Kind::Subcritical;
        return Ok(out);
    }

    let mut recs: BTreeMap<Direction, DirectionRecord> = BTreeMap::new();
    for &b in s.breakpoints() {
        recs.insert(b, analyse(family, &s, b, cfg)?);
    }
    let isolated = s.isolated_points();

    let mut halves = vec![];
    for phi in semicircle_starts(&s) {
        let open = Arc::open_semicircle(phi);
        let meets_interval = !ArcSet::from_arc(open).expect("valid").intersection(&nondeg).is_empty();
        let mut h = Half { start: phi, value: Some(0), resolved_max: Some(0), fully_resolved: true };
        if meets_interval {
            h.value = None;
            h.resolved_max = None;
        } else {
            for &u in isolated.iter().filter(|&&u| open.contains(u)) {
                match recs[&u].alpha() {
                    DifficultyValue::Finite(k) => {
                        h.value = h.value.map(|v| v.max(k));
                        h.resolved_max = h.resolved_max.map(|v| v.max(k));
                    }
                    DifficultyValue::Infinite => {
                        h.value = None;
                        h.resolved_max = None;
                    }
                    DifficultyValue::InfiniteWithinWindow => {
                        h.value = None;
                        h.fully_resolved = false;
                    }
                }
            }
        }
        halves.push(h);
    }
    let Some(alpha) = halves.iter().filter_map(|h| h.value).min() else {
        return Err(ClassifyError::DifficultyWindowExhausted { window: cfg.window });
    };
    out.alpha = Some(alpha);
    out.alpha_resolved = halves.iter().all(|h| h.fully_resolved || h.resolved_max.map_or(true, |m| m >= alpha));
    // Ties go to the largest starting angle, which puts u* at e2 for the symmetric examples.
    let best = halves.iter().rev().find(|h| h.value == Some(alpha)).expect("α is attained");

    // Balanced: some closed semicircle whose stable directions all have α(u) ≤ α.
    let balanced = semicircle_starts(&s).into_iter().any(|phi| {
        let closed = Arc::closed_semicircle(phi);
        let half = ArcSet::from_arc(closed).expect("valid");
        if !half.intersection(&nondeg).is_empty() {
            return false;
        }
        isolated.iter().filter(|&&u| closed.contains(u)).all(|u| recs[u].alpha().finite().is_some_and(|k| k <= alpha))
    });
    out.balanced = Some(balanced);

    if balanced {
        let mut cands: Vec<Direction> = recs
            .values()
            .filter(|r| r.alpha_bar().finite().map_or(r.alpha_bar() == DifficultyValue::Infinite, |k| k >= alpha))
            .map(|r| r.u)
            .collect();
        for (v, w) in s.intervals() {
            cands.push(v.strictly_between(w));
        }
        cands.sort();
        cands.dedup();
        if !in_closed_semicircle_points(&cands) {
            let mut i = 0;
            while i < cands.len() {
                let mut rest = cands.clone();
                rest.remove(i);
                if !in_closed_semicircle_points(&rest) {
                    cands = rest;
                } else {
                    i += 1;
                }
            }
            out.s_b = Some(cands);
        }
    } else {
        let u_star = best.start.opposite();
        let minus_u = best.start;
        out.u_star = Some(u_star);
        let drift = [u_star, minus_u].iter().any(|u| {
            let r = &recs[u];
            let inf = |v: DifficultyValue| v.finite().is_none();
            inf(r.plus) != inf(r.minus)
        });
        out.drift = Some(drift);
        let open = Arc::open_semicircle(best.start);
        let u_r = isolated
            .iter()
            .copied()
            .find(|&u| open.contains(u) && recs[&u].alpha() == DifficultyValue::Finite(alpha));
        let left = Arc::open_semicircle(u_star);
        let left_set = ArcSet::from_arc(left).expect("valid");
        let u_l = match left_set.intersection(&nondeg).arcs().first() {
            Some(Arc::Span { start, end, .. }) => Some(start.strictly_between(*end)),
            Some(Arc::Full) => Some(u_star.rot_ccw()),
            None => isolated
                .iter()
                .copied()
                .filter(|&u| left.contains(u))
                .max_by_key(|&u| (recs[&u].alpha_bar().key(), std::cmp::Reverse(u))),
        };
        if let (Some(u_l), Some(u_r)) = (u_l, u_r) {
            out.s_u = Some(vec![u_star, minus_u, u_l, u_r]);
        }
    }
    out.directions = recs.into_values().collect();
    Ok(out)
}

/// Connectivity radius: `2(ρ̂ + ν)` for balanced families, `3ν` for unbalanced ones.
pub fn kappa(family: &UpdateFamily, classification: &Classification, rho_hat: f64) -> Result<f64, ClassifyError> {
    match (classification.kind, classification.balanced) {
        (Kind::Critical, Some(true)) => Ok(2.0 * (rho_hat + family.nu())),
        (Kind::Critical, _) => Ok(3.0 * family.nu()),
        (k, _) => Err(ClassifyError::NotCritical(k)),
    }
}

/// A direction of the stable interval at `u*`, strictly between `u*` and the
/// nearest perpendicular to a difference of rule sites on that side.
pub fn iceberg_u0(family: &UpdateFamily, u_star: Direction) -> Result<Direction, ClassifyError> {
    let s = family.stable_set();
    let (ccw, other_end) = match s.intervals().into_iter().find(|&(v, w)| v == u_star || w == u_star) {
        Some((v, w)) if v == u_star => (true, w),
        Some((v, _)) => (false, v),
        None => return Err(ClassifyError::NoDriftDirection(u_star)),
    };
    let mut forbidden = vec![other_end];
    for r in family.rules() {
        let pts: Vec<_> = r.iter().copied().chain(std::iter::once(crate::geometry::Site::ORIGIN)).collect();
        for &x in &pts {
            for &y in &pts {
                if let Ok(d) = Direction::of(x - y) {
                    forbidden.push(d.rot_ccw());
                    forbidden.push(d.rot_cw());
                }
            }
        }
    }
    forbidden.retain(|&v| v != u_star);
    // Nearest on the chosen side: no other candidate lies strictly between u* and it.
    let nearest = forbidden
        .iter()
        .copied()
        .find(|&v| {
            forbidden.iter().all(|&w| {
                if ccw {
                    !u_star.ccw_strictly_between(w, v)
                } else {
                    !v.ccw_strictly_between(w, u_star)
                }
            })
        })
        .expect("the other endpoint is always a candidate");
    Ok(if ccw { u_star.strictly_between(nearest) } else { nearest.strictly_between(u_star) })
}
