//! The bundled families.

use super::UpdateFamily;
use crate::geometry::Site;

pub const NEAREST: [Site; 4] = [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)];

fn s(x: i64, y: i64) -> Site {
    Site::new(x, y)
}

/// Two of the four nearest neighbours.
pub fn two_neighbour() -> UpdateFamily {
    UpdateFamily::threshold("2-neighbour", &NEAREST, 2).unwrap()
}

/// Two of the left, upper and lower neighbours.
pub fn duarte() -> UpdateFamily {
    UpdateFamily::threshold("duarte", &[s(-1, 0), s(0, 1), s(0, -1)], 2).unwrap()
}

/// Three of the six sites `(±1, 0), (±2, 0), (0, ±1)`.
pub fn van_enter_hulshof() -> UpdateFamily {
    UpdateFamily::threshold("van-enter-hulshof", &[s(-2, 0), s(-1, 0), s(0, 1), s(0, -1), s(1, 0), s(2, 0)], 3).unwrap()
}

/// Any one of the four nearest neighbours.
pub fn r1() -> UpdateFamily {
    UpdateFamily::threshold("r1", &NEAREST, 1).unwrap()
}

/// Three of the four nearest neighbours.
pub fn r3() -> UpdateFamily {
    UpdateFamily::threshold("r3", &NEAREST, 3).unwrap()
}

/// Four of the eight sites at distance one or two along the axes.
pub fn cross4() -> UpdateFamily {
    let cross = [s(1, 0), s(2, 0), s(-1, 0), s(-2, 0), s(0, 1), s(0, 2), s(0, -1), s(0, -2)];
    UpdateFamily::threshold("cross-4", &cross, 4).unwrap()
}

/// Three of `(1, 0), (-2, 0), (0, 1), (0, -1), (2, 1)`: unbalanced with drift along a slanted `u*`.
pub fn skew_drift() -> UpdateFamily {
    UpdateFamily::threshold("skew-drift", &[s(1, 0), s(-2, 0), s(0, 1), s(0, -1), s(2, 1)], 3).unwrap()
}

/// Three of `(±1, 0), (0, ±1), (1, 1), (-2, 0)`: balanced, with a stable interval and no symmetry.
pub fn skew_balanced() -> UpdateFamily {
    let n = [s(1, 0), s(-1, 0), s(0, 1), s(0, -1), s(1, 1), s(-2, 0)];
    UpdateFamily::threshold("skew-balanced", &n, 3).unwrap()
}

/// Every bundled family, in a fixed order.
pub fn all() -> Vec<UpdateFamily> {
    vec![two_neighbour(), duarte(), van_enter_hulshof(), r1(), r3(), cross4(), skew_drift(), skew_balanced()]
}

/// Looks a bundled family up by name.
pub fn by_name(name: &str) -> Option<UpdateFamily> {
    all().into_iter().find(|f| f.name() == name)
}
