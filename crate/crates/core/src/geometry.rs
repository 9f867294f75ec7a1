//! Lattice sites, rational directions and exact arithmetic on arcs of the unit circle.
//!
//! Directions are primitive integer vectors. Two directions are compared by angle
//! without any trigonometry: first by half-plane, then by the sign of the cross product.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("the zero vector does not define a direction")]
    ZeroDirection,
    #[error("an arc whose endpoints coincide must be closed at both ends or open at both ends")]
    MixedDegenerateArc,
}

/// A site of Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Site {
        Site { x, y }
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dist_sq(self, other: Site) -> i64 {
        (self - other).norm_sq()
    }

    pub fn dist(self, other: Site) -> f64 {
        (self - other).norm()
    }

    pub fn chebyshev(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }
}

impl From<[i64; 2]> for Site {
    fn from(p: [i64; 2]) -> Site {
        Site::new(p[0], p[1])
    }
}

impl From<Site> for [i64; 2] {
    fn from(s: Site) -> [i64; 2] {
        [s.x, s.y]
    }
}

impl From<(i64, i64)> for Site {
    fn from(p: (i64, i64)) -> Site {
        Site::new(p.0, p.1)
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A rational direction `u = (a, b) / |(a, b)|`, stored as the primitive vector `(a, b)`.
///
/// Lines `ℓ_u(j) = {p : a·p.x + b·p.y = j}` are indexed by integers, and the open
/// half-plane `H_u = {p : ⟨p, u⟩ < 0}` is the union of the lines with negative index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct Direction {
    a: i64,
    b: i64,
}

impl TryFrom<[i64; 2]> for Direction {
    type Error = GeometryError;
    fn try_from(p: [i64; 2]) -> Result<Direction, GeometryError> {
        Direction::new(p[0], p[1])
    }
}

impl From<Direction> for [i64; 2] {
    fn from(d: Direction) -> [i64; 2] {
        [d.a, d.b]
    }
}

impl Direction {
    pub const E1: Direction = Direction { a: 1, b: 0 };
    pub const E2: Direction = Direction { a: 0, b: 1 };

    /// Reduces `(a, b)` by its gcd.
    pub fn new(a: i64, b: i64) -> Result<Direction, GeometryError> {
        if a == 0 && b == 0 {
            return Err(GeometryError::ZeroDirection);
        }
        let g = gcd(a, b);
        Ok(Direction { a: a / g, b: b / g })
    }

    /// Direction of a nonzero site vector.
    pub fn of(p: Site) -> Result<Direction, GeometryError> {
        Direction::new(p.x, p.y)
    }

    pub fn a(self) -> i64 {
        self.a
    }

    pub fn b(self) -> i64 {
        self.b
    }

    pub fn vector(self) -> Site {
        Site::new(self.a, self.b)
    }

    pub fn norm(self) -> f64 {
        ((self.a * self.a + self.b * self.b) as f64).sqrt()
    }

    pub fn norm_sq(self) -> i64 {
        self.a * self.a + self.b * self.b
    }

    pub fn opposite(self) -> Direction {
        Direction { a: -self.a, b: -self.b }
    }

    /// Rotation by +π/2, i.e. the direction to the left when looking along `self`.
    pub fn rot_ccw(self) -> Direction {
        Direction { a: -self.b, b: self.a }
    }

    /// Rotation by -π/2, i.e. the direction to the right when looking along `self`.
    pub fn rot_cw(self) -> Direction {
        Direction { a: self.b, b: -self.a }
    }

    /// 0 for angles in [0, π), 1 for angles in [π, 2π).
    fn half(self) -> u8 {
        if self.b > 0 || (self.b == 0 && self.a > 0) {
            0
        } else {
            1
        }
    }

    pub fn cross(self, other: Direction) -> i128 {
        self.a as i128 * other.b as i128 - self.b as i128 * other.a as i128
    }

    pub fn dot(self, other: Direction) -> i128 {
        self.a as i128 * other.a as i128 + self.b as i128 * other.b as i128
    }

    /// Total order by angle in [0, 2π), measured from e1.
    pub fn cmp_angle(self, other: Direction) -> Ordering {
        match self.half().cmp(&other.half()) {
            Ordering::Equal => 0.cmp(&self.cross(other)),
            o => o,
        }
    }

    /// Angle in [0, 2π); for display and for the angular distance σ only.
    pub fn angle(self) -> f64 {
        let t = (self.b as f64).atan2(self.a as f64);
        if t < 0.0 {
            t + std::f64::consts::TAU
        } else {
            t
        }
    }

    /// Unsigned angle between two directions, in [0, π].
    pub fn angle_to(self, other: Direction) -> f64 {
        (other.cross(self).abs() as f64).atan2(self.dot(other) as f64)
    }

    /// Whether `x` lies in the open counterclockwise arc from `self` to `to`.
    /// When `self == to` the arc is the whole circle minus that point.
    pub fn ccw_strictly_between(self, x: Direction, to: Direction) -> bool {
        if x == self || x == to {
            return false;
        }
        if self == to {
            return true;
        }
        match x.half_rel(self).cmp(&to.half_rel(self)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => x.cross(to) > 0,
        }
    }

    /// Half index of `self` relative to the frame whose zero angle is `base`.
    fn half_rel(self, base: Direction) -> u8 {
        let c = base.cross(self);
        let d = base.dot(self);
        if c > 0 || (c == 0 && d > 0) {
            0
        } else {
            1
        }
    }

    /// Some rational direction strictly inside the counterclockwise open arc from `self` to `to`.
    pub fn strictly_between(self, to: Direction) -> Direction {
        if self == to {
            return self.opposite();
        }
        let c = self.cross(to);
        let s = Site::new(self.a + to.a, self.b + to.b);
        if c > 0 {
            Direction::of(s).expect("non-opposite directions have a nonzero sum")
        } else if c == 0 {
            self.rot_ccw()
        } else {
            Direction::of(-s).expect("non-opposite directions have a nonzero sum")
        }
    }

    /// Unit-length coordinates.
    pub fn unit(self) -> (f64, f64) {
        let n = self.norm();
        (self.a as f64 / n, self.b as f64 / n)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

impl Ord for Direction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_angle(*other)
    }
}

impl PartialOrd for Direction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sign of `⟨x, u⟩`.
pub fn dot_sign(x: Site, u: Direction) -> i32 {
    line_index(x, u).signum() as i32
}

/// The integer `j` with `x ∈ ℓ_u(j)`.
pub fn line_index(x: Site, u: Direction) -> i64 {
    u.a * x.x + u.b * x.y
}

/// Position of `x` along its line, increasing to the right when looking along `u`.
/// Together with `line_index` this is a bijection Z² → Z², see [`LineFrame`].
pub fn right_coordinate(x: Site, u: Direction) -> i64 {
    LineFrame::new(u).to_frame(x).1
}

/// A unimodular change of basis `p = j·s0 + r·t` with `t` pointing right of `u` and
/// `⟨s0, u⟩ = 1`, so that `j = line_index(p, u)`.
#[derive(Clone, Copy, Debug)]
pub struct LineFrame {
    pub u: Direction,
    pub s0: Site,
    pub t: Site,
}

fn bezout(a: i64, b: i64) -> (i64, i64) {
    // Returns (s, t) with a*s + b*t = gcd(a, b) >= 0.
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_s, -old_t)
    } else {
        (old_s, old_t)
    }
}

impl LineFrame {
    pub fn new(u: Direction) -> LineFrame {
        let (s, t) = bezout(u.a, u.b);
        LineFrame {
            u,
            s0: Site::new(s, t),
            t: Site::new(u.b, -u.a),
        }
    }

    /// `(j, r)` coordinates of a site.
    pub fn to_frame(&self, p: Site) -> (i64, i64) {
        let j = line_index(p, self.u);
        let q = p - Site::new(j * self.s0.x, j * self.s0.y);
        let n = self.u.norm_sq();
        let r = (q.x * self.t.x + q.y * self.t.y) / n;
        (j, r)
    }

    pub fn from_frame(&self, j: i64, r: i64) -> Site {
        Site::new(j * self.s0.x + r * self.t.x, j * self.s0.y + r * self.t.y)
    }
}

/// An arc of the unit circle traversed counterclockwise from `start` to `end`.
///
/// `Span` with `start == end` is a single point when closed at both ends and the
/// circle minus that point when open at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arc {
    Full,
    Span {
        start: Direction,
        end: Direction,
        closed_start: bool,
        closed_end: bool,
    },
}

impl Arc {
    pub fn closed(start: Direction, end: Direction) -> Arc {
        Arc::Span { start, end, closed_start: true, closed_end: true }
    }

    pub fn open(start: Direction, end: Direction) -> Arc {
        Arc::Span { start, end, closed_start: false, closed_end: false }
    }

    pub fn point(d: Direction) -> Arc {
        Arc::closed(d, d)
    }

    /// The open semicircle counterclockwise from `d` to `-d`.
    pub fn open_semicircle(d: Direction) -> Arc {
        Arc::open(d, d.opposite())
    }

    /// The closed semicircle counterclockwise from `d` to `-d`.
    pub fn closed_semicircle(d: Direction) -> Arc {
        Arc::closed(d, d.opposite())
    }

    pub fn contains(&self, x: Direction) -> bool {
        match *self {
            Arc::Full => true,
            Arc::Span { start, end, closed_start, closed_end } => {
                if x == start {
                    return closed_start || (start == end && closed_end);
                }
                if x == end {
                    return closed_end;
                }
                start.ccw_strictly_between(x, end)
            }
        }
    }

    pub fn is_degenerate_point(&self) -> bool {
        matches!(*self, Arc::Span { start, end, .. } if start == end && self.contains(start))
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Arc::Full => write!(f, "S^1"),
            Arc::Span { start, end, closed_start, closed_end } => {
                if start == end && closed_start {
                    return write!(f, "{{{start}}}");
                }
                let l = if closed_start { '[' } else { '(' };
                let r = if closed_end { ']' } else { ')' };
                write!(f, "{l}{start} -> {end}{r}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcOp {
    Union,
    Intersection,
    Difference,
}

/// A finite union of arcs, kept in a canonical breakpoint form.
///
/// The breakpoints are sorted by angle; each breakpoint carries its own membership
/// and the membership of the open gap that follows it counterclockwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcSet {
    points: Vec<Direction>,
    point_in: Vec<bool>,
    gap_in: Vec<bool>,
    full: bool,
}

impl ArcSet {
    pub fn empty() -> ArcSet {
        ArcSet { points: vec![], point_in: vec![], gap_in: vec![], full: false }
    }

    pub fn full() -> ArcSet {
        ArcSet { points: vec![], point_in: vec![], gap_in: vec![], full: true }
    }

    pub fn from_arc(arc: Arc) -> Result<ArcSet, GeometryError> {
        match arc {
            Arc::Full => Ok(ArcSet::full()),
            Arc::Span { start, end, closed_start, closed_end } => {
                if start == end {
                    if closed_start != closed_end {
                        return Err(GeometryError::MixedDegenerateArc);
                    }
                    return Ok(ArcSet {
                        points: vec![start],
                        point_in: vec![closed_start],
                        gap_in: vec![!closed_start],
                        full: false,
                    }
                    .normalized());
                }
                // Gap after `start` (ccw) is inside, gap after `end` is outside.
                let (points, point_in, gap_in) = if start < end {
                    (vec![start, end], vec![closed_start, closed_end], vec![true, false])
                } else {
                    (vec![end, start], vec![closed_end, closed_start], vec![false, true])
                };
                Ok(ArcSet { points, point_in, gap_in, full: false }.normalized())
            }
        }
    }

    pub fn from_arcs(arcs: &[Arc]) -> Result<ArcSet, GeometryError> {
        let mut s = ArcSet::empty();
        for a in arcs {
            s = s.union(&ArcSet::from_arc(*a)?);
        }
        Ok(s)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && !self.full
    }

    pub fn is_full(&self) -> bool {
        self.points.is_empty() && self.full
    }

    pub fn contains(&self, d: Direction) -> bool {
        if self.points.is_empty() {
            return self.full;
        }
        match self.points.binary_search_by(|p| p.cmp_angle(d)) {
            Ok(i) => self.point_in[i],
            Err(0) => *self.gap_in.last().unwrap(),
            Err(i) => self.gap_in[i - 1],
        }
    }

    pub fn complement(&self) -> ArcSet {
        ArcSet {
            points: self.points.clone(),
            point_in: self.point_in.iter().map(|b| !b).collect(),
            gap_in: self.gap_in.iter().map(|b| !b).collect(),
            full: self.points.is_empty() && !self.full,
        }
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, ArcOp::Union)
    }

    pub fn intersection(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, ArcOp::Intersection)
    }

    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, ArcOp::Difference)
    }

    pub fn is_subset(&self, other: &ArcSet) -> bool {
        self.difference(other).is_empty()
    }

    pub fn combine(&self, other: &ArcSet, op: ArcOp) -> ArcSet {
        let f = |x: bool, y: bool| match op {
            ArcOp::Union => x || y,
            ArcOp::Intersection => x && y,
            ArcOp::Difference => x && !y,
        };
        let mut points: Vec<Direction> = self.points.iter().chain(&other.points).copied().collect();
        points.sort();
        points.dedup();
        if points.is_empty() {
            return ArcSet { full: f(self.full, other.full), ..ArcSet::empty() };
        }
        let n = points.len();
        let point_in = points.iter().map(|&p| f(self.contains(p), other.contains(p))).collect();
        let gap_in = (0..n)
            .map(|i| {
                let w = points[i].strictly_between(points[(i + 1) % n]);
                f(self.contains(w), other.contains(w))
            })
            .collect();
        ArcSet { points, point_in, gap_in, full: false }.normalized()
    }

    fn normalized(mut self) -> ArcSet {
        loop {
            let n = self.points.len();
            if n == 0 {
                return self;
            }
            let redundant = (0..n).find(|&i| {
                let prev_gap = self.gap_in[(i + n - 1) % n];
                self.point_in[i] == prev_gap && self.gap_in[i] == prev_gap
            });
            match redundant {
                None => return self,
                Some(i) => {
                    let v = self.point_in[i];
                    self.points.remove(i);
                    self.point_in.remove(i);
                    self.gap_in.remove(i);
                    if self.points.is_empty() {
                        self.full = v;
                    }
                }
            }
        }
    }

    /// Breakpoints of the set: the endpoints of its arcs and its isolated points.
    pub fn breakpoints(&self) -> &[Direction] {
        &self.points
    }

    /// Maximal arcs of the set in counterclockwise order.
    pub fn arcs(&self) -> Vec<Arc> {
        if self.points.is_empty() {
            return if self.full { vec![Arc::Full] } else { vec![] };
        }
        let n = self.points.len();
        // Elements alternate point_0, gap_0, point_1, gap_1, ...
        let member = |e: usize| if e % 2 == 0 { self.point_in[e / 2] } else { self.gap_in[e / 2] };
        let m = 2 * n;
        let first_out = (0..m).find(|&e| !member(e)).expect("a nonempty breakpoint list is never the full circle");
        let mut arcs = vec![];
        let mut e = (first_out + 1) % m;
        let mut steps = 0;
        while steps < m {
            if !member(e) {
                e = (e + 1) % m;
                steps += 1;
                continue;
            }
            let s = e;
            let mut last = e;
            while steps < m && member(e) {
                last = e;
                e = (e + 1) % m;
                steps += 1;
            }
            let (start, closed_start) = if s % 2 == 0 { (self.points[s / 2], true) } else { (self.points[s / 2], false) };
            let (end, closed_end) = if last % 2 == 0 {
                (self.points[last / 2], true)
            } else {
                (self.points[(last / 2 + 1) % n], false)
            };
            arcs.push(Arc::Span { start, end, closed_start, closed_end });
        }
        arcs
    }
}

impl fmt::Display for ArcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arcs = self.arcs();
        if arcs.is_empty() {
            return write!(f, "∅");
        }
        for (i, a) in arcs.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Applies a boolean operation to two single arcs.
pub fn arc_boolean(a: Arc, b: Arc, op: ArcOp) -> Result<Vec<Arc>, GeometryError> {
    Ok(ArcSet::from_arc(a)?.combine(&ArcSet::from_arc(b)?, op).arcs())
}

/// Whether some closed semicircle contains every direction of `dirs`; equivalently,
/// whether some open semicircle misses them all.
pub fn in_closed_semicircle(dirs: &[Direction]) -> bool {
    dirs.is_empty() || dirs.iter().any(|&b| dirs.iter().all(|&d| Arc::closed_semicircle(b).contains(d)))
}

/// The open arc `{u : ⟨x, u⟩ < 0}` for a nonzero site `x`.
pub fn negative_arc(x: Site) -> Result<ArcSet, GeometryError> {
    let d = Direction::of(x)?;
    ArcSet::from_arc(Arc::open(d.rot_ccw(), d.rot_cw()))
}

/// Data for the direction-dependent norm used around a drift direction `u*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UNormContext {
    pub u: Direction,
    pub u_star: Direction,
    /// Angle between `u` and `u*`.
    pub sigma: f64,
    pub drift: bool,
}

impl UNormContext {
    pub fn new(u: Direction, u_star: Direction, drift: bool) -> UNormContext {
        UNormContext { u, u_star, sigma: u.angle_to(u_star), drift }
    }

    pub fn with_sigma(u_star: Direction, sigma: f64, drift: bool) -> UNormContext {
        UNormContext { u: u_star, u_star, sigma, drift }
    }
}

/// `|⟨p, u*⟩| + σ·|⟨p, u*^⊥⟩|` in the drift case with σ > 0, the Euclidean norm otherwise.
pub fn u_norm(p: Site, ctx: &UNormContext) -> f64 {
    if ctx.drift && ctx.sigma > 0.0 {
        let (a, b) = ctx.u_star.unit();
        let along = (p.x as f64 * a + p.y as f64 * b).abs();
        let across = (-(p.x as f64) * b + p.y as f64 * a).abs();
        along + ctx.sigma * across
    } else {
        p.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: i64, b: i64) -> Direction {
        Direction::new(a, b).unwrap()
    }

    #[test]
    fn reduces_by_gcd_and_keeps_sign() {
        assert_eq!(d(4, -6), d(2, -3));
        assert_eq!(d(-3, 0), d(-1, 0));
        assert_eq!(Direction::new(0, 0), Err(GeometryError::ZeroDirection));
    }

    #[test]
    fn dot_sign_and_line_index() {
        assert_eq!(dot_sign(Site::new(2, 3), d(1, -1)), -1);
        assert_eq!(line_index(Site::new(1, 2), d(2, -1)), 0);
    }

    #[test]
    fn angle_order_matches_atan2() {
        let dirs: Vec<Direction> = (-4..=4)
            .flat_map(|a| (-4..=4).map(move |b| (a, b)))
            .filter(|&(a, b)| (a, b) != (0, 0))
            .map(|(a, b)| d(a, b))
            .collect();
        for &x in &dirs {
            for &y in &dirs {
                let by_float = x.angle().partial_cmp(&y.angle()).unwrap();
                let by_float = if x == y { Ordering::Equal } else { by_float };
                assert_eq!(x.cmp_angle(y), by_float, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn two_quarter_arcs_meet_in_a_point() {
        let a = Arc::closed(Direction::E1, Direction::E2);
        let b = Arc::closed(Direction::E2, Direction::E1.opposite());
        let r = arc_boolean(a, b, ArcOp::Intersection).unwrap();
        assert_eq!(r, vec![Arc::point(Direction::E2)]);
    }

    #[test]
    fn arcs_round_trip() {
        let s = ArcSet::from_arcs(&[
            Arc::closed(d(0, 1), d(0, -1)),
            Arc::point(Direction::E1),
            Arc::open(d(1, -2), d(1, -1)),
        ])
        .unwrap();
        assert_eq!(ArcSet::from_arcs(&s.arcs()).unwrap(), s);
        assert!(s.contains(d(-1, 0)));
        assert!(s.contains(Direction::E1));
        assert!(!s.contains(d(1, 1)));
        assert!(!s.contains(d(1, -2)));
        assert!(s.contains(d(2, -3)));
    }

    #[test]
    fn circle_minus_point() {
        let s = ArcSet::from_arc(Arc::point(Direction::E2)).unwrap().complement();
        assert_eq!(s.arcs(), vec![Arc::open(Direction::E2, Direction::E2)]);
        assert!(s.contains(Direction::E1));
        assert!(!s.contains(Direction::E2));
    }

    #[test]
    fn negative_arc_is_open_semicircle() {
        let s = negative_arc(Site::new(1, 0)).unwrap();
        assert!(s.contains(d(-1, 0)));
        assert!(s.contains(d(-1, 100)));
        assert!(!s.contains(d(0, 1)));
        assert!(!s.contains(d(0, -1)));
    }

    #[test]
    fn line_frame_is_a_bijection() {
        for &(a, b) in &[(1, 0), (0, 1), (2, -1), (-3, 5), (1, 1), (-1, 0), (0, -1)] {
            let f = LineFrame::new(d(a, b));
            for x in -6..=6 {
                for y in -6..=6 {
                    let p = Site::new(x, y);
                    let (j, r) = f.to_frame(p);
                    assert_eq!(j, line_index(p, d(a, b)));
                    assert_eq!(f.from_frame(j, r), p);
                }
            }
        }
    }

    #[test]
    fn right_coordinate_points_right() {
        // Looking up, right is +x.
        assert!(right_coordinate(Site::new(1, 0), Direction::E2) > right_coordinate(Site::ORIGIN, Direction::E2));
        // Looking right, right is -y.
        assert!(right_coordinate(Site::new(0, -1), Direction::E1) > 0);
    }

    #[test]
    fn u_norm_drift_example() {
        let ctx = UNormContext::with_sigma(Direction::E2, 0.5, true);
        assert!((u_norm(Site::new(4, 1), &ctx) - 3.0).abs() < 1e-12);
        let flat = UNormContext::with_sigma(Direction::E2, 0.5, false);
        assert!((u_norm(Site::new(3, 4), &flat) - 5.0).abs() < 1e-12);
    }
}
