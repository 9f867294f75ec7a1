//! Icebergs and the iceberg algorithm for unbalanced families with drift.
//!
//! A `u`-iceberg is `(H_{u0}(a) ∩ H_{u*}(b)) \ H_u`, a lattice triangle with faces
//! perpendicular to `u0`, `u*` and `-u`. It is stored as a three-direction droplet.

use serde::Serialize;

use super::{BridgeSet, Droplet, DropletError, MergeEvent};
use crate::geometry::{line_index, Direction, Site};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Iceberg {
    pub u: Direction,
    pub u0: Direction,
    pub u_star: Direction,
    /// Offset of the `u0` face: sites have `line_index(x, u0) < a`.
    pub a: i64,
    /// Offset of the `u*` face.
    pub b: i64,
    region: Droplet,
}

/// `u` lies strictly inside the shorter arc between `u0` and `u*`.
pub fn between_u0_and_u_star(u: Direction, u0: Direction, u_star: Direction) -> bool {
    if u_star.ccw_strictly_between(u0, u_star.opposite()) {
        u_star.ccw_strictly_between(u, u0)
    } else {
        u0.ccw_strictly_between(u, u_star)
    }
}

impl Iceberg {
    pub fn new(u: Direction, u0: Direction, u_star: Direction, a: i64, b: i64) -> Result<Iceberg, DropletError> {
        if !between_u0_and_u_star(u, u0, u_star) {
            return Err(DropletError::BadIcebergDirection { u, u0, u_star });
        }
        let region = Droplet::from_offsets(vec![u0, u_star, u.opposite()], vec![a, b, 1])?;
        Ok(Iceberg { u, u0, u_star, a, b, region })
    }

    /// `J_u(X)`: the smallest iceberg with `X ⊂ H_u ∪ J`.
    pub fn smallest(x: &[Site], u: Direction, u0: Direction, u_star: Direction) -> Result<Iceberg, DropletError> {
        let above: Vec<Site> = x.iter().copied().filter(|&s| line_index(s, u) >= 0).collect();
        if above.is_empty() {
            return Err(DropletError::Empty);
        }
        let a = 1 + above.iter().map(|&s| line_index(s, u0)).max().unwrap();
        let b = 1 + above.iter().map(|&s| line_index(s, u_star)).max().unwrap();
        Iceberg::new(u, u0, u_star, a, b)
    }

    pub fn region(&self) -> &Droplet {
        &self.region
    }

    pub fn sites(&self) -> Vec<Site> {
        self.region.sites()
    }

    pub fn contains(&self, x: Site) -> bool {
        self.region.contains(x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Piece {
    Droplet(Droplet),
    Iceberg(Iceberg),
}

impl Piece {
    pub fn region(&self) -> &Droplet {
        match self {
            Piece::Droplet(d) => d,
            Piece::Iceberg(j) => j.region(),
        }
    }

    pub fn is_iceberg(&self) -> bool {
        matches!(self, Piece::Iceberg(_))
    }
}

/// Fixed data of one run: the directions, the droplet directions `S_U` and `D̂_U`.
#[derive(Clone, Debug)]
pub struct IcebergContext {
    pub u: Direction,
    pub u0: Direction,
    pub u_star: Direction,
    pub directions: Vec<Direction>,
    pub kappa: f64,
    pub dhat: Droplet,
}

impl IcebergContext {
    /// Angle between `u` and `u*`.
    pub fn sigma(&self) -> f64 {
        self.u.angle_to(self.u_star)
    }

    pub fn height(&self, d: &Droplet) -> f64 {
        d.height(self.u_star)
    }

    pub fn width(&self, d: &Droplet) -> f64 {
        d.width(self.u_star)
    }

    /// `Σ_D h(D) + σ Σ_J w(J)`, the quantity that bounds the width of the output.
    pub fn width_potential(&self, pieces: &[&Piece]) -> f64 {
        let s = self.sigma();
        pieces
            .iter()
            .map(|p| match p {
                Piece::Droplet(d) => self.height(d),
                Piece::Iceberg(j) => s * self.width(j.region()),
            })
            .sum()
    }

    /// `Σ_D (σ w(D) + h(D)) + Σ_J h(J)`, the quantity that bounds the height.
    pub fn height_potential(&self, pieces: &[&Piece]) -> f64 {
        let s = self.sigma();
        pieces
            .iter()
            .map(|p| match p {
                Piece::Droplet(d) => s * self.width(d) + self.height(d),
                Piece::Iceberg(j) => self.height(j.region()),
            })
            .sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IcebergRun {
    pub pieces: Vec<Piece>,
    /// For each output piece, the indices (into the sorted input) of the sites it absorbed.
    pub members: Vec<Vec<usize>>,
    pub history: Vec<Piece>,
    pub history_members: Vec<Vec<usize>>,
    pub merge_log: Vec<MergeEvent>,
    pub output: Vec<usize>,
}

/// The iceberg algorithm. Step 1 turns a droplet that can be joined to `H_u` through a
/// translate of `D̂_U` into `J_u` of itself; step 2 merges a pair containing an iceberg
/// that can be joined through a translate of `D̂_U` into `J_u` of the union; step 3
/// merges two such droplets into `D` of the union. Earlier steps take priority and
/// ties go to the lowest indices.
pub fn iceberg_algorithm(k: &[Site], ctx: &IcebergContext) -> Result<IcebergRun, DropletError> {
    if !between_u0_and_u_star(ctx.u, ctx.u0, ctx.u_star) {
        return Err(DropletError::BadIcebergDirection { u: ctx.u, u0: ctx.u0, u_star: ctx.u_star });
    }
    let mut sites = k.to_vec();
    sites.sort();
    sites.dedup();
    let bridge = BridgeSet::new(&ctx.dhat, ctx.kappa);
    let reach = bridge.reach(ctx.u);
    let r = bridge.radius();
    let mut history: Vec<Piece> = sites.iter().map(|&x| Piece::Droplet(ctx.dhat.translate(x))).collect();
    let mut members: Vec<Vec<usize>> = (0..sites.len()).map(|i| vec![i]).collect();
    let mut alive: Vec<usize> = (0..sites.len()).collect();
    let mut log = vec![];
    let near = |a: &Droplet, b: &Droplet| {
        let (ax0, ay0, ax1, ay1) = a.bbox();
        let (bx0, by0, bx1, by1) = b.bbox();
        !(bx0 - ax1 > r || ax0 - bx1 > r || by0 - ay1 > r || ay0 - by1 > r) && bridge.bridges(a.rows(), b.rows())
    };
    let iceberg_of = |parts: &[&Droplet]| -> Result<Iceberg, DropletError> {
        let all: Vec<Site> = parts.iter().flat_map(|d| d.sites()).collect();
        Iceberg::smallest(&all, ctx.u, ctx.u0, ctx.u_star)
    };
    loop {
        let mut event = None;
        for (a, &i) in alive.iter().enumerate() {
            if let Piece::Droplet(d) = &history[i] {
                if d.min_index(ctx.u) < reach {
                    event = Some((1u8, a, None, Piece::Iceberg(iceberg_of(&[d])?)));
                    break;
                }
            }
        }
        if event.is_none() {
            'two: for a in 0..alive.len() {
                for b in a + 1..alive.len() {
                    let (p, q) = (&history[alive[a]], &history[alive[b]]);
                    if (p.is_iceberg() || q.is_iceberg()) && near(p.region(), q.region()) {
                        event = Some((2, a, Some(b), Piece::Iceberg(iceberg_of(&[p.region(), q.region()])?)));
                        break 'two;
                    }
                }
            }
        }
        if event.is_none() {
            'three: for a in 0..alive.len() {
                for b in a + 1..alive.len() {
                    if let (Piece::Droplet(p), Piece::Droplet(q)) = (&history[alive[a]], &history[alive[b]]) {
                        if near(p, q) {
                            event = Some((3, a, Some(b), Piece::Droplet(p.hull(q))));
                            break 'three;
                        }
                    }
                }
            }
        }
        let Some((step, a, b, piece)) = event else { break };
        let mut m = members[alive[a]].clone();
        if let Some(b) = b {
            m.extend(&members[alive[b]]);
            m.sort();
        }
        history.push(piece);
        members.push(m);
        let id = history.len() - 1;
        log.push(MergeEvent { step, left: alive[a], right: b.map(|b| alive[b]), result: id });
        alive[a] = id;
        if let Some(b) = b {
            alive.remove(b);
        }
    }
    Ok(IcebergRun {
        pieces: alive.iter().map(|&i| history[i].clone()).collect(),
        members: alive.iter().map(|&i| members[i].clone()).collect(),
        history,
        history_members: members,
        merge_log: log,
        output: alive,
    })
}

/// Replays a run and returns the largest single-step increase of the width and
/// height potentials, restricted to the merge tree below each output piece.
pub fn potential_increments(run: &IcebergRun, ctx: &IcebergContext) -> (f64, f64) {
    let mut dw: f64 = 0.0;
    let mut dh: f64 = 0.0;
    for e in &run.merge_log {
        let mut before = vec![&run.history[e.left]];
        if let Some(r) = e.right {
            before.push(&run.history[r]);
        }
        let after = [&run.history[e.result]];
        dw = dw.max(ctx.width_potential(&after) - ctx.width_potential(&before));
        dh = dh.max(ctx.height_potential(&after) - ctx.height_potential(&before));
    }
    (dw, dh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{corpus, iceberg_u0};

    fn ctx() -> IcebergContext {
        let u_star = Direction::E2;
        let u0 = iceberg_u0(&corpus::duarte(), u_star).unwrap();
        let dirs = vec![Direction::E2, Direction::E2.opposite(), Direction::E1.opposite(), Direction::E1];
        let kappa = 3.0 * corpus::duarte().nu();
        IcebergContext {
            u: Direction::new(-1, 4).unwrap(),
            u0,
            u_star,
            dhat: super::super::default_dhat(&dirs, kappa).unwrap(),
            directions: dirs,
            kappa,
        }
    }

    #[test]
    fn iceberg_examples() {
        let c = ctx();
        assert!(iceberg_algorithm(&[], &c).unwrap().pieces.is_empty());
        let far = iceberg_algorithm(&[Site::new(0, 500)], &c).unwrap();
        assert_eq!(far.pieces, vec![Piece::Droplet(c.dhat.translate(Site::new(0, 500)))]);
        let close = iceberg_algorithm(&[Site::new(0, 2)], &c).unwrap();
        assert_eq!(close.pieces.len(), 1);
        assert!(close.pieces[0].is_iceberg());
    }

    #[test]
    fn iceberg_shape() {
        let c = ctx();
        let j = Iceberg::new(c.u, c.u0, c.u_star, 5, 6).unwrap();
        for s in j.sites() {
            assert!(line_index(s, c.u) >= 0 && s.y < 6 && line_index(s, c.u0) < 5);
        }
        assert!(Iceberg::new(c.u_star, c.u0, c.u_star, 5, 6).is_err());
    }
}
