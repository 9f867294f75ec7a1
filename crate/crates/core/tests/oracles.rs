//! The engine against the slow sweeps in `ubp::oracle`.

use std::collections::HashSet;

use ubp::family::corpus;
use ubp::geometry::{Direction, Site};
use ubp::lattice::{closure, synchronous_times, Lattice, RuleTable, Shape, Window};
use ubp::montecarlo::random_set;
use ubp::oracle::{naive_closure, naive_times};

const SEED: u64 = 0x5eed;

fn windows() -> Vec<Window> {
    vec![
        Window::boxed(0, 0, 23, 17),
        Window::torus(16),
        Window::boxed(-10, -10, 10, 10).with_half_plane(Direction::new(1, 2).unwrap(), -3),
        Window::boxed(0, 0, 47, 47),
    ]
}

fn box_sites(w: &Window) -> Vec<Site> {
    let (x0, y0, x1, y1) = match w.shape {
        Shape::Box { x0, y0, x1, y1 } => (x0, y0, x1, y1),
        Shape::Torus { n } => (0, 0, n - 1, n - 1),
    };
    (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| Site::new(x, y))).collect()
}

#[test]
fn frontier_closure_matches_the_sweep() {
    for f in corpus::all() {
        for (i, w) in windows().into_iter().enumerate() {
            for trial in 0..12u64 {
                let p = 0.02 + 0.03 * (trial % 5) as f64;
                let a: Vec<Site> = random_set(&w, SEED + i as u64, trial, p).unwrap().into_iter().filter(|&s| !w.in_background(s)).collect();
                let fast: HashSet<Site> = closure(&a, &f, w).unwrap().infected_sites().into_iter().collect();
                let slow = naive_closure(&a, &f, &w);
                assert_eq!(fast, slow, "{} window {i} trial {trial}", f.name());
            }
        }
    }
}

#[test]
fn synchronous_times_match_the_sweep() {
    for f in corpus::all() {
        for (i, w) in windows().into_iter().take(3).enumerate() {
            for trial in 0..6u64 {
                let a: Vec<Site> = random_set(&w, SEED ^ 7, trial, 0.08).unwrap().into_iter().filter(|&s| !w.in_background(s)).collect();
                let times = synchronous_times(&a, &f, w, 40, None).unwrap();
                let slow = naive_times(&a, &f, &w, 40);
                let mut fast: Vec<(Site, u32)> = box_sites(&w)
                    .into_iter()
                    .filter(|&s| !w.in_background(s))
                    .filter_map(|s| times.time_of(s).map(|t| (s, t)))
                    .collect();
                fast.sort();
                assert_eq!(fast, slow, "{} window {i} trial {trial}", f.name());
            }
        }
    }
}

#[test]
fn bitparallel_steps_match_the_sweep() {
    for f in corpus::all() {
        let table = RuleTable::new(&f);
        for w in [Window::boxed(-5, 3, 70, 30), Window::torus(20)] {
            for trial in 0..6u64 {
                let a = random_set(&w, SEED ^ 11, trial, 0.1).unwrap();
                let slow = naive_times(&a, &f, &w, 200);
                let mut lat = Lattice::new(w).unwrap();
                for &s in &a {
                    lat.infect(s);
                }
                for t in 1..=200u32 {
                    let before = lat.count();
                    lat.step_bitparallel(&table);
                    let want: HashSet<Site> = slow.iter().filter(|&&(_, u)| u <= t).map(|&(s, _)| s).collect();
                    let got: HashSet<Site> = lat.infected_sites().into_iter().collect();
                    assert_eq!(got, want, "{} step {t}", f.name());
                    if lat.count() == before {
                        break;
                    }
                }
            }
        }
    }
}

#[test]
fn stable_directions_match_half_plane_closures() {
    let dirs: Vec<Direction> =
        (-4..=4i64).flat_map(|a| (-4..=4i64).map(move |b| (a, b))).filter_map(|(a, b)| Direction::new(a, b).ok()).collect();
    for f in corpus::all() {
        for &u in &dirs {
            let w = Window::centred(9).with_half_plane(u, 0);
            let grew = !naive_closure(&[], &f, &w).is_empty();
            assert_eq!(grew, !f.is_stable(u), "{} at {u}", f.name());
        }
    }
}
