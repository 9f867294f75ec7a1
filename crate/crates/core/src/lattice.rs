//! Finite windows of Z², the closure engine and the strip decision procedure.
//!
//! A window is a box or a torus. Outside a box, sites are healthy unless the
//! boundary is a half-plane, in which case every site of the half-plane counts as
//! permanently infected without being stored.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::UpdateFamily;
use crate::geometry::{line_index, Direction, LineFrame, Site};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("the origin lies outside the window")]
    OriginOutsideWindow,
    #[error("window is empty or too large ({0} sites)")]
    BadWindow(u128),
    #[error("a half-plane boundary needs a box window")]
    HalfPlaneOnTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Sites with `x0 ≤ x ≤ x1` and `y0 ≤ y ≤ y1`.
    Box { x0: i64, y0: i64, x1: i64, y1: i64 },
    /// Z_n × Z_n with coordinates `0..n`.
    Torus { n: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Blocked,
    /// Sites with `line_index(x, u) < offset` are infected.
    HalfPlane { u: Direction, offset: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub shape: Shape,
    pub boundary: Boundary,
}

/// Largest window the engine will allocate.
pub const MAX_SITES: u128 = 1 << 26;

impl Window {
    pub fn boxed(x0: i64, y0: i64, x1: i64, y1: i64) -> Window {
        Window { shape: Shape::Box { x0, y0, x1, y1 }, boundary: Boundary::Blocked }
    }

    /// The box `[-r, r]²`.
    pub fn centred(r: i64) -> Window {
        Window::boxed(-r, -r, r, r)
    }

    pub fn torus(n: i64) -> Window {
        Window { shape: Shape::Torus { n }, boundary: Boundary::Blocked }
    }

    pub fn with_half_plane(self, u: Direction, offset: i64) -> Window {
        Window { boundary: Boundary::HalfPlane { u, offset }, ..self }
    }

    /// Smallest box containing `sites`, grown by `margin` on every side.
    pub fn bounding(sites: &[Site], margin: i64) -> Window {
        let x0 = sites.iter().map(|s| s.x).min().unwrap_or(0) - margin;
        let x1 = sites.iter().map(|s| s.x).max().unwrap_or(0) + margin;
        let y0 = sites.iter().map(|s| s.y).min().unwrap_or(0) - margin;
        let y1 = sites.iter().map(|s| s.y).max().unwrap_or(0) + margin;
        Window::boxed(x0, y0, x1, y1)
    }

    fn dims(&self) -> (i64, i64, i64, i64) {
        match self.shape {
            Shape::Box { x0, y0, x1, y1 } => (x0, y0, x1 - x0 + 1, y1 - y0 + 1),
            Shape::Torus { n } => (0, 0, n, n),
        }
    }

    pub fn site_count(&self) -> u128 {
        let (_, _, w, h) = self.dims();
        if w <= 0 || h <= 0 {
            0
        } else {
            w as u128 * h as u128
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        let (x0, y0, w, h) = self.dims();
        s.x >= x0 && s.y >= y0 && s.x < x0 + w && s.y < y0 + h
    }

    pub fn in_background(&self, s: Site) -> bool {
        match self.boundary {
            Boundary::Blocked => false,
            Boundary::HalfPlane { u, offset } => line_index(s, u) < offset,
        }
    }
}

/// A family compiled for the engine: distinct offsets and the rules using each one.
#[derive(Clone, Debug)]
pub struct RuleTable {
    pub rules: Vec<Vec<Site>>,
    pub offsets: Vec<Site>,
    pub by_offset: Vec<Vec<usize>>,
}

impl RuleTable {
    pub fn new(family: &UpdateFamily) -> RuleTable {
        RuleTable::from_rules(family.rules().to_vec())
    }

    pub fn from_rules(rules: Vec<Vec<Site>>) -> RuleTable {
        let mut offsets: Vec<Site> = rules.iter().flatten().copied().collect();
        offsets.sort();
        offsets.dedup();
        let by_offset = offsets
            .iter()
            .map(|o| (0..rules.len()).filter(|&r| rules[r].contains(o)).collect())
            .collect();
        RuleTable { rules, offsets, by_offset }
    }
}

/// Infection state of a window, one bit per site, rows packed into 64-bit words.
#[derive(Clone, Debug)]
pub struct Lattice {
    window: Window,
    x0: i64,
    y0: i64,
    w: i64,
    h: i64,
    words: usize,
    bits: Vec<u64>,
    count: u64,
}

impl Lattice {
    pub fn new(window: Window) -> Result<Lattice, LatticeError> {
        let n = window.site_count();
        if n == 0 || n > MAX_SITES {
            return Err(LatticeError::BadWindow(n));
        }
        if matches!(window.shape, Shape::Torus { .. }) && window.boundary != Boundary::Blocked {
            return Err(LatticeError::HalfPlaneOnTorus);
        }
        let (x0, y0, w, h) = window.dims();
        let words = (w as usize).div_ceil(64);
        Ok(Lattice { window, x0, y0, w, h, words, bits: vec![0; words * h as usize], count: 0 })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// `(x0, y0, x1, y1)` of the stored region, inclusive.
    pub fn window_box(&self) -> (i64, i64, i64, i64) {
        (self.x0, self.y0, self.x0 + self.w - 1, self.y0 + self.h - 1)
    }

    pub fn width(&self) -> i64 {
        self.w
    }

    pub fn height(&self) -> i64 {
        self.h
    }

    /// Number of stored infected sites (background excluded).
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_full(&self) -> bool {
        self.count as u128 == self.window.site_count()
    }

    fn is_torus(&self) -> bool {
        matches!(self.window.shape, Shape::Torus { .. })
    }

    /// Maps a site to window-local coordinates, wrapping on a torus.
    #[inline]
    fn local(&self, s: Site) -> Option<(i64, i64)> {
        let (mut x, mut y) = (s.x - self.x0, s.y - self.y0);
        if self.is_torus() {
            x = x.rem_euclid(self.w);
            y = y.rem_euclid(self.h);
            Some((x, y))
        } else if x < 0 || y < 0 || x >= self.w || y >= self.h {
            None
        } else {
            Some((x, y))
        }
    }

    #[inline]
    fn bit(&self, x: i64, y: i64) -> bool {
        let i = y as usize * self.words + (x as usize >> 6);
        self.bits[i] >> (x & 63) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, x: i64, y: i64) -> bool {
        let i = y as usize * self.words + (x as usize >> 6);
        let m = 1u64 << (x & 63);
        if self.bits[i] & m != 0 {
            return false;
        }
        self.bits[i] |= m;
        self.count += 1;
        true
    }

    /// Whether `s` counts as infected, including the half-plane background.
    #[inline]
    pub fn is_infected(&self, s: Site) -> bool {
        if self.window.in_background(s) {
            return true;
        }
        match self.local(s) {
            Some((x, y)) => self.bit(x, y),
            None => false,
        }
    }

    /// Canonical representative of `s` inside the window.
    pub fn canonical(&self, s: Site) -> Option<Site> {
        self.local(s).map(|(x, y)| Site::new(x + self.x0, y + self.y0))
    }

    /// Marks a site infected; returns false if it already was, or lies outside a box.
    pub fn infect(&mut self, s: Site) -> bool {
        if self.window.in_background(s) {
            return false;
        }
        match self.local(s) {
            Some((x, y)) => self.set_bit(x, y),
            None => false,
        }
    }

    /// Stored infected sites in row-major order.
    pub fn infected_sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.count as usize);
        for y in 0..self.h {
            for k in 0..self.words {
                let mut word = self.bits[y as usize * self.words + k];
                while word != 0 {
                    let b = word.trailing_zeros() as i64;
                    out.push(Site::new(self.x0 + k as i64 * 64 + b, self.y0 + y));
                    word &= word - 1;
                }
            }
        }
        out
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.h).flat_map(move |y| (0..self.w).map(move |x| Site::new(self.x0 + x, self.y0 + y)))
    }

    #[inline]
    fn rule_fits(&self, c: Site, rule: &[Site]) -> bool {
        rule.iter().all(|&y| self.is_infected(c + y))
    }

    /// Whether some rule translate at `c` lies in the infected set.
    pub fn can_infect(&self, c: Site, table: &RuleTable) -> bool {
        table.rules.iter().any(|r| self.rule_fits(c, r))
    }

    /// Runs the asynchronous closure from the given frontier until no site can be added.
    fn propagate(&mut self, table: &RuleTable, stack: &mut Vec<Site>) {
        while let Some(s) = stack.pop() {
            for (k, &o) in table.offsets.iter().enumerate() {
                let Some(c) = self.canonical(s - o) else { continue };
                if self.is_infected(c) {
                    continue;
                }
                if table.by_offset[k].iter().any(|&r| self.rule_fits(c, &table.rules[r])) {
                    self.infect(c);
                    stack.push(c);
                }
            }
        }
    }

    /// Brings the state to its closure. Only sites near a newly infected site are examined,
    /// apart from one full scan when a half-plane boundary is present.
    pub fn close(&mut self, table: &RuleTable) {
        let mut stack = self.infected_sites();
        if matches!(self.window.boundary, Boundary::HalfPlane { .. }) {
            let all: Vec<Site> = self.sites().collect();
            for c in all {
                if !self.is_infected(c) && self.can_infect(c, table) {
                    self.infect(c);
                    stack.push(c);
                }
            }
        }
        self.propagate(table, &mut stack);
    }

    /// Infects `s` and restores closure; the state must already be closed.
    pub fn add_and_close(&mut self, s: Site, table: &RuleTable) {
        if let Some(c) = self.canonical(s) {
            if self.infect(c) {
                let mut stack = vec![c];
                self.propagate(table, &mut stack);
            }
        }
    }

    /// One synchronous step computed with word-level shifts, `A ∪ ⋃_X ⋂_{x∈X} (A − x)`.
    /// Supports blocked boxes and tori.
    pub fn step_bitparallel(&mut self, table: &RuleTable) {
        assert_eq!(self.window.boundary, Boundary::Blocked, "bit-parallel step needs a blocked boundary");
        let old = self.bits.clone();
        let words = self.words;
        let mut acc = vec![0u64; words];
        let mut tmp = vec![0u64; words];
        let mut new_bits = old.clone();
        for y in 0..self.h {
            for rule in &table.rules {
                acc.iter_mut().for_each(|a| *a = !0);
                for &o in rule {
                    let sy = y + o.y;
                    let src: &[u64] = if self.is_torus() {
                        let sy = sy.rem_euclid(self.h) as usize;
                        &old[sy * words..(sy + 1) * words]
                    } else if sy < 0 || sy >= self.h {
                        acc.iter_mut().for_each(|a| *a = 0);
                        break;
                    } else {
                        &old[sy as usize * words..(sy as usize + 1) * words]
                    };
                    if self.is_torus() {
                        rotate_bits(src, o.x, self.w, &mut tmp);
                    } else {
                        shift_bits(src, o.x, self.w, &mut tmp);
                    }
                    acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a &= t);
                }
                let row = &mut new_bits[y as usize * words..(y as usize + 1) * words];
                row.iter_mut().zip(&acc).for_each(|(r, a)| *r |= a);
            }
        }
        mask_rows(&mut new_bits, words, self.w);
        self.count = new_bits.iter().map(|w| w.count_ones() as u64).sum();
        self.bits = new_bits;
    }
}

fn mask_rows(bits: &mut [u64], words: usize, w: i64) {
    let rem = (w % 64) as u32;
    if rem == 0 {
        return;
    }
    let m = (1u64 << rem) - 1;
    for row in bits.chunks_mut(words) {
        *row.last_mut().unwrap() &= m;
    }
}

/// `dst[c] = src[c + k]` for `0 ≤ c + k < w`, zero elsewhere.
fn shift_bits(src: &[u64], k: i64, w: i64, dst: &mut [u64]) {
    let words = src.len() as i64;
    let (q, r) = (k.div_euclid(64), k.rem_euclid(64) as u32);
    for (i, d) in dst.iter_mut().enumerate() {
        let j = i as i64 + q;
        let lo = if (0..words).contains(&j) { src[j as usize] } else { 0 };
        let hi = if (0..words).contains(&(j + 1)) { src[(j + 1) as usize] } else { 0 };
        *d = if r == 0 { lo } else { (lo >> r) | (hi << (64 - r)) };
    }
    let last = dst.len() - 1;
    if w % 64 != 0 {
        dst[last] &= (1u64 << (w % 64)) - 1;
    }
}

/// `dst[c] = src[(c + k) mod w]`.
fn rotate_bits(src: &[u64], k: i64, w: i64, dst: &mut [u64]) {
    let k = k.rem_euclid(w);
    let mut a = vec![0u64; src.len()];
    shift_bits(src, k, w, &mut a);
    shift_bits(src, k - w, w, dst);
    dst.iter_mut().zip(&a).for_each(|(d, x)| *d |= x);
}

/// The closure `[A]` of `a` inside `window`.
pub fn closure(a: &[Site], family: &UpdateFamily, window: Window) -> Result<Lattice, LatticeError> {
    let table = RuleTable::new(family);
    let mut lat = Lattice::new(window)?;
    for &s in a {
        if let Some(c) = lat.canonical(s) {
            lat.infect(c);
        }
    }
    lat.close(&table);
    Ok(lat)
}

/// The closure of a finite set in all of Z², for families where it stays finite.
///
/// The box around `a` is doubled until no infected site lies within reach of its edge.
pub fn closure_in_plane(a: &[Site], family: &UpdateFamily) -> Result<Lattice, LatticeError> {
    let reach = family.reach().max(1);
    let mut margin = 2 * reach + 2;
    loop {
        let window = Window::bounding(a, margin);
        let lat = closure(a, family, window)?;
        let (x0, y0, x1, y1) = lat.window_box();
        let clear = lat
            .infected_sites()
            .iter()
            .all(|s| s.x - x0 > reach && x1 - s.x > reach && s.y - y0 > reach && y1 - s.y > reach);
        if clear {
            return Ok(lat);
        }
        margin *= 2;
    }
}

/// Whether `[A] = Z_n²`.
pub fn percolates(a: &[Site], family: &UpdateFamily, n: i64) -> Result<bool, LatticeError> {
    Ok(closure(a, family, Window::torus(n))?.is_full())
}

/// Largest window used for infection-time experiments.
pub const LIGHT_CONE_MAX_SITES: u128 = 1 << 24;

/// The box of sites that can influence the origin within `t` synchronous steps: every
/// such site is a sum of at most `t` rule sites, so a blocked box this size gives the
/// exact infection time of the origin whenever that time is at most `t`.
pub fn light_cone_window(family: &UpdateFamily, t: i64) -> Window {
    let sites = family.sites();
    let lo = |f: fn(&Site) -> i64| sites.iter().map(f).min().unwrap_or(0).min(0);
    let hi = |f: fn(&Site) -> i64| sites.iter().map(f).max().unwrap_or(0).max(0);
    Window::boxed(t * lo(|s| s.x), t * lo(|s| s.y), t * hi(|s| s.x), t * hi(|s| s.y))
}

/// Largest `t` whose light-cone window fits in [`LIGHT_CONE_MAX_SITES`].
pub fn max_light_cone_time(family: &UpdateFamily) -> i64 {
    let (mut lo, mut hi) = (0i64, 1i64 << 24);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if light_cone_window(family, mid).site_count() <= LIGHT_CONE_MAX_SITES {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Synchronous infection times by generation: `times[i]` is the step at which the
/// i-th window site (row-major) became infected, `u32::MAX` if never within `t_max`.
pub struct InfectionTimes {
    pub window: Window,
    pub times: Vec<u32>,
    w: i64,
    x0: i64,
    y0: i64,
}

impl InfectionTimes {
    pub fn time_of(&self, s: Site) -> Option<u32> {
        if !self.window.contains(s) {
            return None;
        }
        let t = self.times[((s.y - self.y0) * self.w + (s.x - self.x0)) as usize];
        (t != u32::MAX).then_some(t)
    }
}

/// Runs `A_{t+1} = A_t ∪ {x : x + X ⊂ A_t}` for up to `t_max` steps, stopping early
/// once `stop_at` is infected. Only candidates next to the previous generation are examined.
pub fn synchronous_times(
    a: &[Site],
    family: &UpdateFamily,
    window: Window,
    t_max: u32,
    stop_at: Option<Site>,
) -> Result<InfectionTimes, LatticeError> {
    let table = RuleTable::new(family);
    let lat = Lattice::new(window)?;
    let (x0, y0, w, h) = (lat.x0, lat.y0, lat.w, lat.h);
    let torus = lat.is_torus();
    let mut times = vec![u32::MAX; (w * h) as usize];
    let idx = |s: Site| -> Option<usize> {
        let (mut x, mut y) = (s.x - x0, s.y - y0);
        if torus {
            x = x.rem_euclid(w);
            y = y.rem_euclid(h);
        } else if x < 0 || y < 0 || x >= w || y >= h {
            return None;
        }
        Some((y * w + x) as usize)
    };
    let site_of = |i: usize| Site::new(x0 + i as i64 % w, y0 + i as i64 / w);
    let infected_by = |times: &Vec<u32>, s: Site, t: u32| -> bool {
        if window.in_background(s) {
            return true;
        }
        match idx(s) {
            Some(i) => times[i] <= t,
            None => false,
        }
    };
    let mut layer: Vec<usize> = vec![];
    for &s in a {
        if window.in_background(s) {
            continue;
        }
        if let Some(i) = idx(s) {
            if times[i] == u32::MAX {
                times[i] = 0;
                layer.push(i);
            }
        }
    }
    let target = stop_at.and_then(idx);
    let done = |times: &Vec<u32>| target.is_some_and(|i| times[i] != u32::MAX);
    let mut t = 0u32;
    let mut first = matches!(window.boundary, Boundary::HalfPlane { .. });
    while t < t_max && !done(&times) {
        let mut next = vec![];
        let consider = |c: Site, times: &mut Vec<u32>, next: &mut Vec<usize>, rules: &[usize]| {
            if window.in_background(c) {
                return;
            }
            let Some(i) = idx(c) else { return };
            if times[i] != u32::MAX {
                return;
            }
            if rules.iter().any(|&r| table.rules[r].iter().all(|&y| infected_by(times, c + y, t))) {
                times[i] = t + 1;
                next.push(i);
            }
        };
        if first {
            let all: Vec<usize> = (0..table.rules.len()).collect();
            for i in 0..times.len() {
                consider(site_of(i), &mut times, &mut next, &all);
            }
            first = false;
        } else {
            for &i in &layer {
                let s = site_of(i);
                for (k, &o) in table.offsets.iter().enumerate() {
                    consider(s - o, &mut times, &mut next, &table.by_offset[k]);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layer = next;
        t += 1;
    }
    Ok(InfectionTimes { window, times, w, x0, y0 })
}

/// The first time the origin is infected under synchronous updates, if within `t_max`.
pub fn infection_time(a: &[Site], family: &UpdateFamily, window: Window, t_max: u32) -> Result<Option<u32>, LatticeError> {
    if !window.contains(Site::ORIGIN) {
        return Err(LatticeError::OriginOutsideWindow);
    }
    let times = synchronous_times(a, family, window, t_max, Some(Site::ORIGIN))?;
    Ok(times.time_of(Site::ORIGIN))
}

/// Verdict on `[H_u ∪ Z] ∩ ℓ_u^±`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineVerdict {
    InfiniteLine,
    FiniteLine,
    /// The closure reached the top row of the band.
    BandExceeded,
    /// No repetition was found before the column limit.
    Undetermined,
}

/// A detected repetition of column-block states: blocks `start..start+period` repeat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Periodicity {
    pub start: usize,
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideReport {
    pub verdict: LineVerdict,
    pub periodicity: Option<Periodicity>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripDecision {
    /// Towards the right when looking along `u`.
    pub plus: SideReport,
    pub minus: SideReport,
    pub block_width: i64,
}

impl StripDecision {
    pub fn side(&self, plus: bool) -> LineVerdict {
        if plus {
            self.plus.verdict
        } else {
            self.minus.verdict
        }
    }

    pub fn any_infinite(&self) -> bool {
        self.plus.verdict == LineVerdict::InfiniteLine || self.minus.verdict == LineVerdict::InfiniteLine
    }

    pub fn exceeded(&self) -> bool {
        self.plus.verdict == LineVerdict::BandExceeded || self.minus.verdict == LineVerdict::BandExceeded
    }
}

/// The family rewritten in `(r, j)` coordinates of the frame of `u`, so that `ℓ_u(j)` is
/// the row `y = j` and the right of `u` is `+x`.
pub fn frame_family(family: &UpdateFamily, frame: &LineFrame) -> Vec<Vec<Site>> {
    family
        .rules()
        .iter()
        .map(|rule| {
            rule.iter()
                .map(|&x| {
                    let (j, r) = frame.to_frame(x);
                    Site::new(r, j)
                })
                .collect()
        })
        .collect()
}

/// The band `0 ≤ j < height` above `H_u` in frame coordinates with the initial set `Z`.
#[derive(Clone, Debug)]
pub struct Strip {
    pub frame: LineFrame,
    table: RuleTable,
    /// Z in frame coordinates, all with `0 ≤ j`.
    z: Vec<Site>,
    pub height: i64,
    pub block_width: i64,
}

/// Columns kept on each side of Z before giving up on finding a repetition.
pub const STRIP_MAX_EXTENT: i64 = 1 << 13;

impl Strip {
    pub fn new(u: Direction, z: &[Site], family: &UpdateFamily, height: i64) -> Strip {
        let frame = LineFrame::new(u);
        let rules = frame_family(family, &frame);
        let reach = rules.iter().flatten().map(|s| s.x.abs()).max().unwrap_or(1).max(1);
        let mut zf: Vec<Site> = z
            .iter()
            .map(|&p| {
                let (j, r) = frame.to_frame(p);
                Site::new(r, j)
            })
            .filter(|s| s.y >= 0)
            .collect();
        zf.sort();
        zf.dedup();
        Strip { frame, table: RuleTable::from_rules(rules), z: zf, height, block_width: 2 * reach }
    }

    fn z_range(&self) -> (i64, i64) {
        let lo = self.z.iter().map(|s| s.x).min().unwrap_or(0);
        let hi = self.z.iter().map(|s| s.x).max().unwrap_or(0);
        (lo, hi)
    }

    /// Closure of `H ∪ Z` in the band restricted to columns `[lo - extent, hi + extent]`.
    pub fn simulate(&self, extent: i64) -> Lattice {
        let (lo, hi) = self.z_range();
        let window = Window::boxed(lo - extent, 0, hi + extent, self.height - 1).with_half_plane(Direction::E2, 0);
        let mut lat = Lattice::new(window).expect("strip window within limits");
        for &s in &self.z {
            lat.infect(s);
        }
        lat.close(&self.table);
        lat
    }

    /// Whether any site of `Z`'s neighbourhood can be infected by `H ∪ Z`.
    fn inert(&self) -> bool {
        let zs: HashSet<Site> = self.z.iter().copied().collect();
        let inf = |s: Site| s.y < 0 || zs.contains(&s);
        for &z in &self.z {
            for (k, &o) in self.table.offsets.iter().enumerate() {
                let c = z - o;
                if inf(c) {
                    continue;
                }
                if self.table.by_offset[k].iter().any(|&r| self.table.rules[r].iter().all(|&y| inf(c + y))) {
                    return false;
                }
            }
        }
        true
    }

    /// Block states outward from Z on one side; each state is the bit pattern of the
    /// `block_width × height` rectangle, listed outward.
    pub fn blocks(&self, lat: &Lattice, extent: i64, plus: bool) -> Vec<Vec<bool>> {
        let (lo, hi) = self.z_range();
        let bw = self.block_width;
        let n = extent / bw;
        (0..n)
            .map(|i| {
                let mut state = Vec::with_capacity((bw * self.height) as usize);
                for j in 0..self.height {
                    for c in 0..bw {
                        let x = if plus { hi + 1 + i * bw + c } else { lo - 1 - i * bw - c };
                        state.push(lat.is_infected(Site::new(x, j)));
                    }
                }
                state
            })
            .collect()
    }

    pub fn decide(&self) -> StripDecision {
        let undecided = SideReport { verdict: LineVerdict::Undetermined, periodicity: None };
        let finite = SideReport { verdict: LineVerdict::FiniteLine, periodicity: None };
        if self.z.iter().any(|s| s.y >= self.height) {
            let e = SideReport { verdict: LineVerdict::BandExceeded, periodicity: None };
            return StripDecision { plus: e.clone(), minus: e, block_width: self.block_width };
        }
        if self.inert() {
            return StripDecision { plus: finite.clone(), minus: finite, block_width: self.block_width };
        }
        let bw = self.block_width;
        let mut extent = 8 * bw;
        let mut prev: Option<(Vec<Vec<bool>>, Vec<Vec<bool>>)> = None;
        let mut result = [None, None];
        while extent <= STRIP_MAX_EXTENT {
            let lat = self.simulate(extent);
            let top = self.height - 1;
            let (lo, hi) = self.z_range();
            if (lo - extent..=hi + extent).any(|x| lat.is_infected(Site::new(x, top))) {
                let e = SideReport { verdict: LineVerdict::BandExceeded, periodicity: None };
                return StripDecision { plus: e.clone(), minus: e, block_width: bw };
            }
            let cur = (self.blocks(&lat, extent, true), self.blocks(&lat, extent, false));
            if let Some((pp, pm)) = &prev {
                for (side, (now, before)) in [(&cur.0, pp), (&cur.1, pm)].into_iter().enumerate() {
                    if result[side].is_some() {
                        continue;
                    }
                    let common = now.iter().zip(before.iter()).take_while(|(a, b)| a == b).count();
                    let settled = common.min(before.len().saturating_sub(2));
                    result[side] = analyse_blocks(&now[..settled], now, bw as usize);
                }
                if result.iter().all(|r| r.is_some()) {
                    break;
                }
            }
            prev = Some(cur);
            extent *= 2;
        }
        let [plus, minus] = result;
        StripDecision {
            plus: plus.unwrap_or_else(|| undecided.clone()),
            minus: minus.unwrap_or(undecided),
            block_width: bw,
        }
    }
}

/// Looks for the absorbing empty state or a repetition `L_j = L_{j+r}` confirmed over three
/// further periods among the settled blocks.
fn analyse_blocks(settled: &[Vec<bool>], all: &[Vec<bool>], bw: usize) -> Option<SideReport> {
    let empty = |b: &Vec<bool>| b.iter().all(|&x| !x);
    if let Some(i) = settled.iter().position(empty) {
        if all[i..].iter().all(empty) {
            return Some(SideReport {
                verdict: LineVerdict::FiniteLine,
                periodicity: Some(Periodicity { start: i, period: 1 }),
            });
        }
    }
    let n = settled.len();
    for start in 0..n {
        for period in 1..=(n - start) / 4 {
            let repeats = (0..3 * period).all(|k| settled[start + k] == settled[start + k + period]);
            if repeats {
                let row0 = settled[start..start + period].iter().any(|b| b[..bw].iter().any(|&x| x));
                let verdict = if row0 { LineVerdict::InfiniteLine } else { LineVerdict::FiniteLine };
                return Some(SideReport { verdict, periodicity: Some(Periodicity { start, period }) });
            }
        }
    }
    None
}

/// Decides whether `[H_u ∪ Z]` meets `ℓ_u^+` and `ℓ_u^-` in infinitely many sites.
pub fn strip_line_decision(u: Direction, z: &[Site], family: &UpdateFamily, band_height: i64) -> StripDecision {
    Strip::new(u, z, family, band_height).decide()
}

/// Default band height `4⌈ν⌉(|Z| + 1)`.
pub fn default_band_height(family: &UpdateFamily, z_len: usize) -> i64 {
    4 * family.nu().ceil() as i64 * (z_len as i64 + 1)
}

/// Largest band height tried before reporting `BandExceeded`.
pub const MAX_BAND_HEIGHT: i64 = 1 << 10;

/// Strip decision with the band height doubled from the default until the closure fits.
pub fn strip_line_decision_auto(u: Direction, z: &[Site], family: &UpdateFamily) -> StripDecision {
    let mut h = default_band_height(family, z.len());
    let zmax = z.iter().map(|&p| line_index(p, u)).max().unwrap_or(0);
    while h <= zmax {
        h *= 2;
    }
    loop {
        let d = strip_line_decision(u, z, family, h);
        if !d.exceeded() || h >= MAX_BAND_HEIGHT {
            return d;
        }
        h *= 2;
    }
}

/// Whether some strongly connected subset of `[H_u(x) ∪ (S ∩ A)]` joins `H_u(x)` to the
/// `u`-side of the strip `S`. `x` is a site on the `-u` side, so `H_u(x)` lies just below `S`.
pub fn is_u_crossed(
    strip: &crate::droplets::Droplet,
    u: Direction,
    a: &[Site],
    family: &UpdateFamily,
    kappa: f64,
) -> bool {
    let sites = strip.sites();
    if sites.is_empty() {
        return false;
    }
    let bottom = sites.iter().map(|&s| line_index(s, u)).min().unwrap();
    let top = sites.iter().map(|&s| line_index(s, u)).max().unwrap();
    let inside: HashSet<Site> = sites.iter().copied().collect();
    let seeds: Vec<Site> = a.iter().copied().filter(|s| inside.contains(s)).collect();
    let margin = family.nu().ceil() as i64 + kappa.ceil() as i64 + 1;
    let window = Window::bounding(&sites, margin).with_half_plane(u, bottom);
    let lat = match closure(&seeds, family, window) {
        Ok(l) => l,
        Err(_) => return false,
    };
    let infected = lat.infected_sites();
    let k2 = kappa * kappa + 1e-9;
    let reach = kappa.floor() as i64;
    // Largest line index below `bottom` that is within κ of a site.
    let near_h: i64 = {
        let mut best = i64::MIN;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if (dx * dx + dy * dy) as f64 <= k2 {
                    best = best.max(-line_index(Site::new(dx, dy), u));
                }
            }
        }
        best
    };
    let touches_h = |s: Site| line_index(s, u) - near_h < bottom;
    let comps = crate::droplets::strong_components(&infected, kappa);
    comps.iter().any(|c| {
        c.iter().any(|&s| touches_h(s)) && c.iter().any(|&s| inside.contains(&s) && line_index(s, u) == top)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::corpus;

    #[test]
    fn diagonal_pair_fills_its_box() {
        let f = corpus::two_neighbour();
        let lat = closure(&[Site::new(0, 0), Site::new(1, 1)], &f, Window::centred(5)).unwrap();
        let mut got = lat.infected_sites();
        got.sort();
        assert_eq!(got, vec![Site::new(0, 0), Site::new(0, 1), Site::new(1, 0), Site::new(1, 1)]);
    }

    #[test]
    fn full_diagonal_percolates_on_torus() {
        let f = corpus::two_neighbour();
        let a: Vec<Site> = (0..8).map(|i| Site::new(i, i)).collect();
        assert!(percolates(&a, &f, 8).unwrap());
    }

    #[test]
    fn three_neighbours_infect_origin_at_once() {
        let f = corpus::two_neighbour();
        let a = [Site::new(0, 1), Site::new(1, 0), Site::new(-1, 0)];
        assert_eq!(infection_time(&a, &f, Window::centred(4), 10).unwrap(), Some(1));
        assert_eq!(
            infection_time(&a, &f, Window::boxed(1, 1, 3, 3), 10),
            Err(LatticeError::OriginOutsideWindow)
        );
    }

    #[test]
    fn bitparallel_step_matches_generations() {
        let f = corpus::duarte();
        let table = RuleTable::new(&f);
        let a: Vec<Site> = (0..70).map(|i| Site::new((i * 37) % 23 - 11, (i * 11) % 19 - 9)).collect();
        for window in [Window::boxed(-12, -10, 80, 12), Window::torus(23)] {
            let times = synchronous_times(&a, &f, window, 40, None).unwrap();
            let mut lat = Lattice::new(window).unwrap();
            for &s in &a {
                lat.infect(lat.canonical(s).unwrap());
            }
            for t in 1..40 {
                lat.step_bitparallel(&table);
                for s in lat.sites().collect::<Vec<_>>() {
                    let by_time = times.time_of(s).is_some_and(|x| x <= t);
                    assert_eq!(lat.is_infected(s), by_time, "t={t} s={s}");
                }
            }
        }
    }

    #[test]
    fn strip_duarte_grows_right_only() {
        let f = corpus::duarte();
        let d = strip_line_decision(Direction::E2, &[Site::ORIGIN], &f, 8);
        assert_eq!(d.plus.verdict, LineVerdict::InfiniteLine);
        assert_eq!(d.minus.verdict, LineVerdict::FiniteLine);
        assert_eq!(strip_line_decision(Direction::E2, &[Site::ORIGIN], &f, 4).minus.verdict, LineVerdict::FiniteLine);
    }

    #[test]
    fn strip_two_neighbour_fills_both_ways() {
        let f = corpus::two_neighbour();
        let d = strip_line_decision(Direction::E1, &[Site::ORIGIN], &f, 8);
        assert_eq!(d.plus.verdict, LineVerdict::InfiniteLine);
        assert_eq!(d.minus.verdict, LineVerdict::InfiniteLine);
        let d = strip_line_decision(Direction::E1, &[], &f, 8);
        assert_eq!(d.plus.verdict, LineVerdict::FiniteLine);
        let d = strip_line_decision(Direction::E1, &[Site::new(3, 0)], &f, 8);
        assert_eq!(d.plus.verdict, LineVerdict::FiniteLine);
    }
}
