//! Droplets, icebergs and the three approximation algorithms built from them.
//!
//! A droplet is the set of lattice sites `x` with `line_index(x, u) < a_u` for every
//! direction `u` of a finite set `T`. It is stored both as its half-planes and as one
//! interval of sites per row, which is what every geometric query walks over.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{in_closed_semicircle, line_index, Direction, Site};

mod cover;
mod iceberg;
mod span;

pub use cover::*;
pub use iceberg::*;
pub use span::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DropletError {
    #[error("droplets over these directions are unbounded: an open semicircle misses them all")]
    UnboundedDroplet,
    #[error("a droplet must contain at least one site")]
    Empty,
    #[error("directions and offsets differ in length")]
    Mismatch,
    #[error("the family does not exhibit drift")]
    NotDriftFamily,
    #[error("u = {u} must lie strictly between u0 = {u0} and u* = {u_star}")]
    BadIcebergDirection { u: Direction, u0: Direction, u_star: Direction },
    #[error("closure failed: {0}")]
    Closure(#[from] crate::lattice::LatticeError),
}

/// One row of a droplet: `y` and the inclusive range `lo..=hi` of `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Row {
    pub y: i64,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Droplet {
    directions: Vec<Direction>,
    offsets: Vec<i64>,
    #[serde(skip)]
    rows: Vec<Row>,
}

fn div_floor(n: i128, d: i128) -> i128 {
    n.div_euclid(d)
}

fn div_ceil(n: i128, d: i128) -> i128 {
    -((-n).div_euclid(d))
}

impl Droplet {
    /// The droplet `∩ {x : line_index(x, u) < a_u}`.
    pub fn from_offsets(directions: Vec<Direction>, offsets: Vec<i64>) -> Result<Droplet, DropletError> {
        if directions.len() != offsets.len() {
            return Err(DropletError::Mismatch);
        }
        if in_closed_semicircle(&directions) {
            return Err(DropletError::UnboundedDroplet);
        }
        let rows = compute_rows(&directions, &offsets);
        if rows.is_empty() {
            return Err(DropletError::Empty);
        }
        Ok(Droplet { directions, offsets, rows })
    }

    /// `D(K)`: offsets `1 + max line_index` over `K`.
    pub fn minimal(k: &[Site], directions: &[Direction]) -> Result<Droplet, DropletError> {
        if k.is_empty() {
            return Err(DropletError::Empty);
        }
        let offsets = directions.iter().map(|&u| 1 + k.iter().map(|&x| line_index(x, u)).max().unwrap()).collect();
        Droplet::from_offsets(directions.to_vec(), offsets)
    }

    /// The minimal droplet containing the lattice points of the closed Euclidean ball of radius `r`.
    pub fn containing_ball(centre: Site, r: f64, directions: &[Direction]) -> Result<Droplet, DropletError> {
        Droplet::minimal(&ball(centre, r), directions)
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn contains(&self, x: Site) -> bool {
        self.directions.iter().zip(&self.offsets).all(|(&u, &a)| line_index(x, u) < a)
    }

    pub fn size(&self) -> u64 {
        self.rows.iter().map(|r| (r.hi - r.lo + 1) as u64).sum()
    }

    pub fn sites(&self) -> Vec<Site> {
        self.rows.iter().flat_map(|r| (r.lo..=r.hi).map(move |x| Site::new(x, r.y))).collect()
    }

    pub fn translate(&self, v: Site) -> Droplet {
        let offsets = self.directions.iter().zip(&self.offsets).map(|(&u, &a)| a + line_index(v, u)).collect();
        let rows = self.rows.iter().map(|r| Row { y: r.y + v.y, lo: r.lo + v.x, hi: r.hi + v.x }).collect();
        Droplet { directions: self.directions.clone(), offsets, rows }
    }

    /// `D(self ∪ other)` for droplets over the same directions.
    pub fn hull(&self, other: &Droplet) -> Droplet {
        assert_eq!(self.directions, other.directions, "droplets over different direction sets");
        let offsets = self.tight_offsets().into_iter().zip(other.tight_offsets()).map(|(a, b)| a.max(b)).collect();
        Droplet::from_offsets(self.directions.clone(), offsets).expect("the hull of two droplets is a droplet")
    }

    /// Offsets lowered until every face holds a site.
    pub fn tight_offsets(&self) -> Vec<i64> {
        self.directions.iter().map(|&u| 1 + self.max_index(u)).collect()
    }

    /// `max line_index(x, v)` over the sites.
    pub fn max_index(&self, v: Direction) -> i64 {
        self.rows.iter().map(|r| line_index(Site::new(r.lo, r.y), v).max(line_index(Site::new(r.hi, r.y), v))).max().unwrap()
    }

    pub fn min_index(&self, v: Direction) -> i64 {
        self.rows.iter().map(|r| line_index(Site::new(r.lo, r.y), v).min(line_index(Site::new(r.hi, r.y), v))).min().unwrap()
    }

    /// `π(D, v) = max |⟨x − y, v⟩|` with `v` normalised.
    pub fn projection(&self, v: Direction) -> f64 {
        (self.max_index(v) - self.min_index(v)) as f64 / v.norm()
    }

    pub fn diam(&self) -> f64 {
        let ends: Vec<Site> = self.rows.iter().flat_map(|r| [Site::new(r.lo, r.y), Site::new(r.hi, r.y)]).collect();
        let mut best = 0;
        for (i, &a) in ends.iter().enumerate() {
            for &b in &ends[i..] {
                best = best.max(a.dist_sq(b));
            }
        }
        (best as f64).sqrt()
    }

    /// Height `π(D, u*)`.
    pub fn height(&self, u_star: Direction) -> f64 {
        self.projection(u_star)
    }

    /// Width `π(D, u*^⊥)`.
    pub fn width(&self, u_star: Direction) -> f64 {
        self.projection(u_star.rot_ccw())
    }

    /// `(x0, y0, x1, y1)`, inclusive.
    pub fn bbox(&self) -> (i64, i64, i64, i64) {
        let y0 = self.rows[0].y;
        let y1 = self.rows[self.rows.len() - 1].y;
        let x0 = self.rows.iter().map(|r| r.lo).min().unwrap();
        let x1 = self.rows.iter().map(|r| r.hi).max().unwrap();
        (x0, y0, x1, y1)
    }

    /// Euclidean distance between the two site sets.
    pub fn distance(&self, other: &Droplet) -> f64 {
        (rows_distance_sq(&self.rows, &other.rows) as f64).sqrt()
    }
}

impl std::fmt::Display for Droplet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "droplet(")?;
        for (i, (u, a)) in self.directions.iter().zip(&self.offsets).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{u}<{a}")?;
        }
        write!(f, ")")
    }
}

fn compute_rows(directions: &[Direction], offsets: &[i64]) -> Vec<Row> {
    // Constraints a·x + b·y ≤ c with c = offset − 1; the y-range comes from pairwise vertices.
    let cons: Vec<(i128, i128, i128)> =
        directions.iter().zip(offsets).map(|(&u, &o)| (u.a() as i128, u.b() as i128, o as i128 - 1)).collect();
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for i in 0..cons.len() {
        for j in i + 1..cons.len() {
            let (a1, b1, c1) = cons[i];
            let (a2, b2, c2) = cons[j];
            let det = a1 * b2 - a2 * b1;
            if det == 0 {
                continue;
            }
            let x = (c1 * b2 - c2 * b1) as f64 / det as f64;
            let y = (a1 * c2 - a2 * c1) as f64 / det as f64;
            let ok = cons.iter().all(|&(a, b, c)| a as f64 * x + b as f64 * y <= c as f64 + 1e-6 * (1.0 + c.abs() as f64));
            if ok {
                ylo = ylo.min(y);
                yhi = yhi.max(y);
            }
        }
    }
    if !ylo.is_finite() {
        return vec![];
    }
    let mut rows = vec![];
    for y in (ylo.floor() as i64 - 1)..=(yhi.ceil() as i64 + 1) {
        let mut lo = i128::MIN;
        let mut hi = i128::MAX;
        let mut ok = true;
        for &(a, b, c) in &cons {
            let n = c - b * y as i128;
            match a.signum() {
                1 => hi = hi.min(div_floor(n, a)),
                -1 => lo = lo.max(div_ceil(-n, -a)),
                _ => ok &= n >= 0,
            }
        }
        if ok && lo <= hi {
            rows.push(Row { y, lo: lo as i64, hi: hi as i64 });
        }
    }
    rows
}

/// Squared distance between two row-interval sets.
fn rows_distance_sq(a: &[Row], b: &[Row]) -> i64 {
    let mut best = i64::MAX;
    for ra in a {
        for rb in b {
            let dy = ra.y - rb.y;
            if dy * dy >= best {
                continue;
            }
            let dx = (rb.lo - ra.hi).max(ra.lo - rb.hi).max(0);
            best = best.min(dx * dx + dy * dy);
        }
    }
    best
}

/// Lattice points of the closed ball of radius `r` around `centre`.
pub fn ball(centre: Site, r: f64) -> Vec<Site> {
    let k = r.floor() as i64;
    let r2 = r * r + 1e-9;
    let mut out = vec![];
    for dx in -k..=k {
        for dy in -k..=k {
            if (dx * dx + dy * dy) as f64 <= r2 {
                out.push(centre + Site::new(dx, dy));
            }
        }
    }
    out
}

/// Components of the graph joining sites at Euclidean distance at most `kappa`.
///
/// Each component is sorted and components are ordered by their least site.
pub fn strong_components(sites: &[Site], kappa: f64) -> Vec<Vec<Site>> {
    let mut sites = sites.to_vec();
    sites.sort();
    sites.dedup();
    let n = sites.len();
    if n == 0 {
        return vec![];
    }
    let cell = (kappa.ceil() as i64).max(1);
    let k2 = kappa * kappa + 1e-9;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, s) in sites.iter().enumerate() {
        grid.entry((s.x.div_euclid(cell), s.y.div_euclid(cell))).or_default().push(i);
    }
    let mut uf = UnionFind::<usize>::new(n);
    for (i, s) in sites.iter().enumerate() {
        let (cx, cy) = (s.x.div_euclid(cell), s.y.div_euclid(cell));
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(v) = grid.get(&(gx, gy)) {
                    for &j in v {
                        if j > i && s.dist_sq(sites[j]) as f64 <= k2 {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<Site>> = HashMap::new();
    for (i, &s) in sites.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(s);
    }
    let mut out: Vec<Vec<Site>> = groups.into_values().collect();
    out.sort();
    out
}

/// Whether two site sets contain points at distance at most `kappa`.
pub fn sets_within(a: &[Site], b: &[Site], kappa: f64) -> bool {
    let cell = (kappa.ceil() as i64).max(1);
    let k2 = kappa * kappa + 1e-9;
    let mut grid: HashMap<(i64, i64), Vec<Site>> = HashMap::new();
    for s in b {
        grid.entry((s.x.div_euclid(cell), s.y.div_euclid(cell))).or_default().push(*s);
    }
    a.iter().any(|s| {
        let (cx, cy) = (s.x.div_euclid(cell), s.y.div_euclid(cell));
        (cx - 1..=cx + 1).any(|gx| {
            (cy - 1..=cy + 1).any(|gy| grid.get(&(gx, gy)).is_some_and(|v| v.iter().any(|t| s.dist_sq(*t) as f64 <= k2)))
        })
    })
}

/// `Δ = (D̂ − D̂) + (B_κ − B_κ)`: two sets `X`, `Y` (each strongly connected) can be joined
/// by a translate of `D̂` into one strongly connected set iff `Y − X` meets `Δ`.
#[derive(Clone, Debug)]
pub struct BridgeSet {
    ry: i64,
    rx: i64,
    /// Prefix counts per row `dy + ry`, over `dx + rx`.
    prefix: Vec<Vec<u32>>,
    members: Vec<Site>,
}

impl BridgeSet {
    pub fn new(dhat: &Droplet, kappa: f64) -> BridgeSet {
        let mut diff: Vec<Site> = vec![];
        let b = ball(Site::ORIGIN, kappa);
        for p in &b {
            for q in &b {
                diff.push(*p - *q);
            }
        }
        diff.sort();
        diff.dedup();
        let (x0, y0, x1, y1) = dhat.bbox();
        let ek = diff.iter().map(|s| s.x.abs().max(s.y.abs())).max().unwrap_or(0);
        let rx = x1 - x0 + ek;
        let ry = y1 - y0 + ek;
        let w = (2 * rx + 1) as usize;
        let h = (2 * ry + 1) as usize;
        // D̂ − D̂ row by row, then dilated by B_κ − B_κ.
        let mut base = vec![vec![false; w]; h];
        for ra in dhat.rows() {
            for rb in dhat.rows() {
                let dy = rb.y - ra.y;
                for dx in (rb.lo - ra.hi)..=(rb.hi - ra.lo) {
                    base[(dy + ry) as usize][(dx + rx) as usize] = true;
                }
            }
        }
        let mut full = vec![vec![false; w]; h];
        for y in 0..h {
            for x in 0..w {
                if !base[y][x] {
                    continue;
                }
                for e in &diff {
                    let (nx, ny) = (x as i64 + e.x, y as i64 + e.y);
                    if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                        full[ny as usize][nx as usize] = true;
                    }
                }
            }
        }
        let mut members = vec![];
        let prefix = full
            .iter()
            .enumerate()
            .map(|(y, row)| {
                let mut acc = vec![0u32; w + 1];
                for x in 0..w {
                    acc[x + 1] = acc[x] + row[x] as u32;
                    if row[x] {
                        members.push(Site::new(x as i64 - rx, y as i64 - ry));
                    }
                }
                acc
            })
            .collect();
        BridgeSet { ry, rx, prefix, members }
    }

    pub fn contains(&self, d: Site) -> bool {
        self.count(d.y, d.x, d.x) > 0
    }

    fn count(&self, dy: i64, lo: i64, hi: i64) -> u32 {
        if dy.abs() > self.ry {
            return 0;
        }
        let lo = (lo + self.rx).max(0);
        let hi = (hi + self.rx).min(2 * self.rx);
        if lo > hi {
            return 0;
        }
        let row = &self.prefix[(dy + self.ry) as usize];
        row[hi as usize + 1] - row[lo as usize]
    }

    /// Whether `b − a` meets `Δ`.
    pub fn bridges(&self, a: &[Row], b: &[Row]) -> bool {
        for ra in a {
            for rb in b {
                if self.count(rb.y - ra.y, rb.lo - ra.hi, rb.hi - ra.lo) > 0 {
                    return true;
                }
            }
        }
        false
    }

    /// `max line_index(δ, u)` over `δ ∈ Δ`: a set `X` bridges to `H_u` iff
    /// `min line_index(X, u)` is below this.
    pub fn reach(&self, u: Direction) -> i64 {
        self.members.iter().map(|&d| line_index(d, u)).max().unwrap_or(0)
    }

    /// Radius of the box holding `Δ`.
    pub fn radius(&self) -> i64 {
        self.rx.max(self.ry)
    }
}

/// Critical-droplet regimes for unbalanced families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalType {
    TypeT,
    TypeL,
    NotCritical,
}

/// Default scale `ξ` of the critical-droplet regimes.
pub const DEFAULT_XI: f64 = 0.05;
/// Default small-scale cutoff `λ` in the Aizenman–Lebowitz checks.
pub const DEFAULT_LAMBDA: f64 = 16.0;

/// Classifies a droplet by its width and height relative to `u*`.
pub fn is_critical_droplet(d: &Droplet, p: f64, alpha: u32, xi: f64, u_star: Direction) -> CriticalType {
    critical_type(d.width(u_star), d.height(u_star), p, alpha, xi)
}

/// The regime test on raw dimensions.
pub fn critical_type(w: f64, h: f64, p: f64, alpha: u32, xi: f64) -> CriticalType {
    let a = alpha as f64;
    let wcap = p.powf(-a - 0.2);
    let hs = xi * p.powf(-a) * (1.0 / p).ln();
    if w <= wcap && hs <= h && h <= 3.0 * hs {
        CriticalType::TypeT
    } else if wcap <= w && w <= 3.0 * wcap && h <= hs {
        CriticalType::TypeL
    } else {
        CriticalType::NotCritical
    }
}

/// `X ⊂ [X ∩ A]`.
pub fn is_internally_filled(x: &[Site], a: &[Site], family: &crate::family::UpdateFamily) -> Result<bool, DropletError> {
    if x.is_empty() {
        return Ok(true);
    }
    let xs: std::collections::HashSet<Site> = x.iter().copied().collect();
    let seeds: Vec<Site> = a.iter().copied().filter(|s| xs.contains(s)).collect();
    if seeds.is_empty() {
        return Ok(false);
    }
    let lat = crate::lattice::closure_in_plane(&seeds, family)?;
    Ok(x.iter().all(|&s| lat.is_infected(s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Vec<Direction> {
        vec![Direction::E1, Direction::E2, Direction::E1.opposite(), Direction::E2.opposite()]
    }

    #[test]
    fn minimal_droplet_examples() {
        let d = Droplet::minimal(&[Site::ORIGIN], &axes()).unwrap();
        assert_eq!(d.sites(), vec![Site::ORIGIN]);
        let d = Droplet::minimal(&[Site::ORIGIN, Site::new(3, 2)], &axes()).unwrap();
        assert_eq!(d.size(), 12);
        assert_eq!(d.bbox(), (0, 0, 3, 2));
        assert_eq!(
            Droplet::minimal(&[Site::ORIGIN], &[Direction::E1, Direction::E2]),
            Err(DropletError::UnboundedDroplet)
        );
    }

    #[test]
    fn slanted_rows_match_membership() {
        let dirs = vec![
            Direction::new(1, 2).unwrap(),
            Direction::new(-3, 1).unwrap(),
            Direction::new(1, -4).unwrap(),
        ];
        let k = [Site::new(0, 0), Site::new(5, -2), Site::new(-3, 4)];
        let d = Droplet::minimal(&k, &dirs).unwrap();
        let sites: std::collections::HashSet<Site> = d.sites().into_iter().collect();
        for x in -30..=30 {
            for y in -30..=30 {
                let s = Site::new(x, y);
                assert_eq!(sites.contains(&s), d.contains(s));
            }
        }
        assert!(k.iter().all(|&s| d.contains(s)));
        assert_eq!(d.tight_offsets(), d.offsets());
    }

    #[test]
    fn components_join_within_kappa() {
        let s = [Site::new(0, 0), Site::new(2, 0), Site::new(10, 0), Site::new(11, 1)];
        assert_eq!(strong_components(&s, 2.0).len(), 2);
        assert_eq!(strong_components(&s, 1.0).len(), 4);
        assert_eq!(strong_components(&s, 8.0).len(), 1);
    }

    #[test]
    fn bridge_set_matches_brute_force() {
        let dhat = Droplet::containing_ball(Site::ORIGIN, 2.0, &axes()).unwrap();
        let kappa = 1.5;
        let bs = BridgeSet::new(&dhat, kappa);
        let a = Droplet::minimal(&[Site::ORIGIN], &axes()).unwrap();
        for dx in -12..=12 {
            for dy in -12..=12 {
                let b = Droplet::minimal(&[Site::new(dx, dy)], &axes()).unwrap();
                // Brute force over translates of D̂.
                let mut brute = false;
                for tx in -10..=10 {
                    for ty in -10..=10 {
                        let t = dhat.translate(Site::new(tx, ty));
                        if t.distance(&a) <= kappa && t.distance(&b) <= kappa {
                            brute = true;
                        }
                    }
                }
                brute |= a.distance(&b) <= kappa;
                assert_eq!(bs.bridges(a.rows(), b.rows()), brute, "({dx},{dy})");
            }
        }
    }

    #[test]
    fn critical_regimes() {
        let p: f64 = 0.01;
        let wcap = p.powf(-1.2);
        let hs = DEFAULT_XI * p.powf(-1.0) * (1.0 / p).ln();
        assert_eq!(critical_type(2.0 * wcap, hs / 2.0, p, 1, DEFAULT_XI), CriticalType::TypeL);
        assert_eq!(critical_type(wcap / 2.0, 2.0 * hs, p, 1, DEFAULT_XI), CriticalType::TypeT);
        assert_eq!(critical_type(1.0, 1.0, p, 1, DEFAULT_XI), CriticalType::NotCritical);
    }

    #[test]
    fn internally_filled_examples() {
        let f = crate::family::corpus::two_neighbour();
        let x = [Site::new(0, 0), Site::new(0, 1), Site::new(1, 0), Site::new(1, 1)];
        assert!(is_internally_filled(&x, &x, &f).unwrap());
        assert!(is_internally_filled(&x, &[Site::new(0, 0), Site::new(1, 1)], &f).unwrap());
        assert!(!is_internally_filled(&x, &[], &f).unwrap());
    }
}
