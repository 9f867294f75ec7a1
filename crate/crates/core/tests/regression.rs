//! Frozen classifications and droplet constants of the bundled families.

use ubp::droplets::default_dhat;
use ubp::family::{classify, corpus, kappa, rho_bound, Kind, SearchConfig};
use ubp::geometry::Direction;

struct Frozen {
    name: &'static str,
    kind: Kind,
    alpha: Option<u32>,
    balanced: Option<bool>,
    drift: Option<bool>,
    u_star: Option<(i64, i64)>,
    kappa: f64,
    dhat_size: u64,
    dhat_diam: f64,
}

fn frozen() -> Vec<Frozen> {
    let c = |name, alpha, balanced, drift, u_star, kappa, dhat_size, dhat_diam| Frozen {
        name,
        kind: Kind::Critical,
        alpha: Some(alpha),
        balanced: Some(balanced),
        drift: if balanced { None } else { Some(drift) },
        u_star,
        kappa,
        dhat_size,
        dhat_diam,
    };
    vec![
        c("2-neighbour", 1, true, false, None, 4.0, 625, 33.9411),
        c("duarte", 1, false, true, Some((0, 1)), 6.0, 1369, 50.9117),
        c("van-enter-hulshof", 1, false, false, Some((0, 1)), 12.0, 5329, 101.8234),
        c("cross-4", 2, true, false, None, 8.0, 2401, 67.8823),
        c("skew-drift", 1, false, true, Some((1, -2)), 12.3693, 5816, 120.3038),
        c("skew-balanced", 1, true, false, None, 6.3246, 2016, 87.6812),
    ]
}

#[test]
fn corpus_constants_are_frozen() {
    let cfg = SearchConfig::default();
    for fz in frozen() {
        let f = corpus::by_name(fz.name).unwrap();
        let c = classify(&f, &cfg).unwrap();
        assert_eq!((c.kind, c.alpha, c.balanced, c.drift), (fz.kind, fz.alpha, fz.balanced, fz.drift), "{}", fz.name);
        assert!(c.alpha_resolved, "{}", fz.name);
        if let Some((a, b)) = fz.u_star {
            assert_eq!(c.u_star, Some(Direction::new(a, b).unwrap()), "{}", fz.name);
        }
        let dirs = if fz.balanced == Some(true) { c.s_b.clone() } else { c.s_u.clone() }.unwrap();
        let rho = if fz.balanced == Some(true) { rho_bound(&f, &dirs, fz.alpha.unwrap(), cfg.window).unwrap().value } else { 0.0 };
        let k = kappa(&f, &c, rho).unwrap();
        assert!((k - fz.kappa).abs() < 1e-3, "{}: κ = {k}", fz.name);
        let d = default_dhat(&dirs, k).unwrap();
        assert_eq!(d.size(), fz.dhat_size, "{}", fz.name);
        assert!((d.diam() - fz.dhat_diam).abs() < 1e-3, "{}: diam {}", fz.name, d.diam());
    }
}

#[test]
fn non_critical_families() {
    let cfg = SearchConfig::default();
    assert_eq!(classify(&corpus::r1(), &cfg).unwrap().kind, Kind::Supercritical);
    assert_eq!(classify(&corpus::r3(), &cfg).unwrap().kind, Kind::Subcritical);
}
