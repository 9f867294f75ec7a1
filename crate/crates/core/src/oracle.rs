//! Slow reference implementations for cross-checking the engine: whole-window sweeps
//! over a hash set, no offset tables, no frontier.

use std::collections::HashSet;

use crate::family::UpdateFamily;
use crate::geometry::Site;
use crate::lattice::{Shape, Window};

fn sites(w: &Window) -> Vec<Site> {
    let (x0, y0, x1, y1) = match w.shape {
        Shape::Box { x0, y0, x1, y1 } => (x0, y0, x1, y1),
        Shape::Torus { n } => (0, 0, n - 1, n - 1),
    };
    (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| Site::new(x, y))).collect()
}

fn wrap(w: &Window, s: Site) -> Option<Site> {
    match w.shape {
        Shape::Torus { n } => Some(Site::new(s.x.rem_euclid(n), s.y.rem_euclid(n))),
        Shape::Box { .. } => w.contains(s).then_some(s),
    }
}

fn infected(w: &Window, set: &HashSet<Site>, s: Site) -> bool {
    match wrap(w, s) {
        Some(c) => set.contains(&c) || w.in_background(c),
        None => w.in_background(s),
    }
}

fn fires(family: &UpdateFamily, w: &Window, set: &HashSet<Site>, x: Site) -> bool {
    family.rules().iter().any(|r| r.iter().all(|&y| infected(w, set, x + y)))
}

/// Window sites in `[A]` outside the background half-plane, by sweeping the whole
/// window until nothing changes.
pub fn naive_closure(a: &[Site], family: &UpdateFamily, window: &Window) -> HashSet<Site> {
    let all = sites(window);
    let mut set: HashSet<Site> = a.iter().filter_map(|&s| wrap(window, s)).collect();
    set.extend(all.iter().copied().filter(|&s| window.in_background(s)));
    loop {
        let new: Vec<Site> = all.iter().copied().filter(|s| !set.contains(s) && fires(family, window, &set, *s)).collect();
        if new.is_empty() {
            return set.into_iter().filter(|&s| !window.in_background(s)).collect();
        }
        set.extend(new);
    }
}

/// Step at which each window site outside the background is infected under synchronous
/// updates, up to `t_max`, sorted by site.
pub fn naive_times(a: &[Site], family: &UpdateFamily, window: &Window, t_max: u32) -> Vec<(Site, u32)> {
    let all = sites(window);
    let mut set: HashSet<Site> = a.iter().filter_map(|&s| wrap(window, s)).collect();
    set.extend(all.iter().copied().filter(|&s| window.in_background(s)));
    let mut out: Vec<(Site, u32)> = set.iter().filter(|&&s| !window.in_background(s)).map(|&s| (s, 0)).collect();
    for t in 1..=t_max {
        let new: Vec<Site> = all.iter().copied().filter(|s| !set.contains(s) && fires(family, window, &set, *s)).collect();
        if new.is_empty() {
            break;
        }
        out.extend(new.iter().map(|&s| (s, t)));
        set.extend(new);
    }
    out.sort();
    out
}
