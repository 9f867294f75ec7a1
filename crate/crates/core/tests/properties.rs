use std::collections::HashSet;

use proptest::prelude::*;
use ubp::droplets::Droplet;
use ubp::family::corpus;
use ubp::geometry::{line_index, u_norm, Arc, ArcSet, Direction, LineFrame, Site, UNormContext};
use ubp::lattice::{closure, Window};

fn direction() -> impl Strategy<Value = Direction> {
    (-30i64..=30, -30i64..=30).prop_filter_map("zero vector", |(a, b)| Direction::new(a, b).ok())
}

fn site() -> impl Strategy<Value = Site> {
    (-50i64..=50, -50i64..=50).prop_map(|(x, y)| Site::new(x, y))
}

fn arc() -> impl Strategy<Value = Arc> {
    (direction(), direction(), any::<bool>(), any::<bool>()).prop_map(|(start, end, closed_start, closed_end)| {
        Arc::Span { start, end, closed_start, closed_end }
    })
}

fn arc_set() -> impl Strategy<Value = ArcSet> {
    prop::collection::vec(arc(), 0..4).prop_map(|arcs| ArcSet::from_arcs(&arcs).unwrap_or_else(|_| ArcSet::empty()))
}

fn small_set() -> impl Strategy<Value = Vec<Site>> {
    prop::collection::vec((0i64..14, 0i64..14).prop_map(|(x, y)| Site::new(x, y)), 0..30)
}

proptest! {
    #[test]
    fn arc_sets_obey_de_morgan(a in arc_set(), b in arc_set(), probes in prop::collection::vec(direction(), 1..20)) {
        let lhs = a.union(&b).complement();
        let rhs = a.complement().intersection(&b.complement());
        prop_assert_eq!(&lhs, &rhs);
        for d in probes {
            prop_assert_eq!(a.union(&b).contains(d), a.contains(d) || b.contains(d));
            prop_assert_eq!(a.intersection(&b).contains(d), a.contains(d) && b.contains(d));
            prop_assert_eq!(a.difference(&b).contains(d), a.contains(d) && !b.contains(d));
        }
    }

    #[test]
    fn line_index_is_additive(x in site(), y in site(), u in direction()) {
        prop_assert_eq!(line_index(x + y, u), line_index(x, u) + line_index(y, u));
        prop_assert_eq!(line_index(u.vector(), u), u.norm_sq());
    }

    #[test]
    fn line_frames_round_trip(p in site(), u in direction()) {
        let f = LineFrame::new(u);
        let (j, r) = f.to_frame(p);
        prop_assert_eq!(j, line_index(p, u));
        prop_assert_eq!(f.from_frame(j, r), p);
    }

    #[test]
    fn strictly_between_is_strict(u in direction(), v in direction()) {
        let w = u.strictly_between(v);
        prop_assert!(u.ccw_strictly_between(w, v) || (u == v && w == u.opposite()));
    }

    #[test]
    fn u_norm_is_sandwiched(p in site(), u_star in direction(), da in -3i64..=3, db in -3i64..=3) {
        let u = Direction::new(u_star.a() * 4 + da, u_star.b() * 4 + db).unwrap_or(u_star);
        let ctx = UNormContext::new(u, u_star, true);
        prop_assume!(ctx.sigma <= 1.0);
        let (a, b) = u.unit();
        let along = (p.x as f64 * a + p.y as f64 * b).abs();
        let n = u_norm(p, &ctx);
        prop_assert!(along <= n + 1e-9);
        prop_assert!(n <= 2.0 * p.norm() + 1e-9);
    }

    #[test]
    fn minimal_droplets_are_tight(k in prop::collection::vec(site(), 1..12), fi in 0usize..3) {
        let dirs: Vec<Direction> = match fi {
            0 => vec![Direction::E2, Direction::E1.opposite(), Direction::E2.opposite(), Direction::E1],
            1 => vec![Direction::new(1, 0).unwrap(), Direction::new(-1, 1).unwrap(), Direction::new(0, -1).unwrap()],
            _ => vec![Direction::new(1, -2).unwrap(), Direction::new(-1, 2).unwrap(), Direction::new(2, 1).unwrap(), Direction::new(-1, 0).unwrap()],
        };
        let d = Droplet::minimal(&k, &dirs).unwrap();
        for &s in &k {
            prop_assert!(d.contains(s));
        }
        prop_assert_eq!(d.tight_offsets(), d.offsets().to_vec());
        prop_assert_eq!(d.size() as usize, d.sites().len());
    }

    #[test]
    fn closure_is_monotone_and_idempotent(a in small_set(), extra in small_set(), fi in 0usize..8) {
        let f = corpus::all().swap_remove(fi);
        let w = Window::boxed(0, 0, 13, 13);
        let ca = closure(&a, &f, w).unwrap().infected_sites();
        let mut b = a.clone();
        b.extend(extra);
        let cb: HashSet<Site> = closure(&b, &f, w).unwrap().infected_sites().into_iter().collect();
        prop_assert!(a.iter().all(|s| ca.contains(s)));
        prop_assert!(ca.iter().all(|s| cb.contains(s)));
        let again = closure(&ca, &f, w).unwrap().infected_sites();
        prop_assert_eq!(again, ca);
    }
}
