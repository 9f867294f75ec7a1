//! α-clusters and the covering algorithm for balanced families.

use serde::Serialize;

use super::{strong_components, BridgeSet, Droplet, DropletError};
use crate::geometry::{Direction, Site};

/// One merge: ids index into the run's history of droplets (or site sets).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MergeEvent {
    /// Which rule of the algorithm fired (1 for the covering and spanning loops).
    pub step: u8,
    pub left: usize,
    pub right: Option<usize>,
    pub result: usize,
}

/// The default `D̂`: the minimal droplet containing the ball of radius `3κ` around the origin.
pub fn default_dhat(directions: &[Direction], kappa: f64) -> Result<Droplet, DropletError> {
    Droplet::containing_ball(Site::ORIGIN, 3.0 * kappa, directions)
}

fn adjacency(sites: &[Site], kappa: f64) -> Vec<Vec<usize>> {
    let k2 = kappa * kappa + 1e-9;
    let cell = (kappa.ceil() as i64).max(1);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    for (i, s) in sites.iter().enumerate() {
        grid.entry((s.x.div_euclid(cell), s.y.div_euclid(cell))).or_default().push(i);
    }
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (cx, cy) = (s.x.div_euclid(cell), s.y.div_euclid(cell));
            let mut v = vec![];
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    for &j in grid.get(&(gx, gy)).into_iter().flatten() {
                        if j != i && s.dist_sq(sites[j]) as f64 <= k2 {
                            v.push(j);
                        }
                    }
                }
            }
            v.sort();
            v
        })
        .collect()
}

/// A maximal collection of disjoint strongly connected sets of `alpha` sites.
///
/// Sites are scanned in lexicographic order; from each unused site a breadth-first
/// search over unused sites takes the first `alpha` it meets. A site whose unused
/// component is too small now stays too small later, so the result is maximal.
pub fn alpha_clusters(k: &[Site], alpha: usize, kappa: f64) -> Vec<Vec<Site>> {
    let mut sites = k.to_vec();
    sites.sort();
    sites.dedup();
    if alpha == 0 {
        return vec![];
    }
    let adj = adjacency(&sites, kappa);
    let mut used = vec![false; sites.len()];
    let mut out = vec![];
    for s in 0..sites.len() {
        if used[s] {
            continue;
        }
        let mut seen = vec![s];
        let mut head = 0;
        while head < seen.len() && seen.len() < alpha {
            let v = seen[head];
            head += 1;
            for &w in &adj[v] {
                if !used[w] && !seen.contains(&w) {
                    seen.push(w);
                    if seen.len() == alpha {
                        break;
                    }
                }
            }
        }
        if seen.len() == alpha {
            for &v in &seen {
                used[v] = true;
            }
            let mut c: Vec<Site> = seen.iter().map(|&v| sites[v]).collect();
            c.sort();
            out.push(c);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverResult {
    pub droplets: Vec<Droplet>,
    /// For each output droplet, the indices of the initial clusters merged into it.
    pub members: Vec<Vec<usize>>,
    pub clusters: Vec<Vec<Site>>,
    pub dust: Vec<Site>,
    /// Every droplet formed, initial copies first; merge events refer to these ids.
    pub history: Vec<Droplet>,
    pub history_members: Vec<Vec<usize>>,
    pub merge_log: Vec<MergeEvent>,
    /// History ids of the output droplets.
    pub output: Vec<usize>,
}

/// Runs a merge loop over droplets: the lowest pair `(i, j)` whose union can be joined
/// by a translate of `D̂` is replaced by `D(D_i ∪ D_j)`, until no pair qualifies.
fn merge_droplets(
    initial: Vec<Droplet>,
    bridge: &BridgeSet,
) -> (Vec<Droplet>, Vec<Vec<usize>>, Vec<MergeEvent>, Vec<usize>) {
    let mut history = initial.clone();
    let mut members: Vec<Vec<usize>> = (0..initial.len()).map(|i| vec![i]).collect();
    let mut alive: Vec<usize> = (0..initial.len()).collect();
    let mut log = vec![];
    let r = bridge.radius();
    'outer: loop {
        for a in 0..alive.len() {
            for b in a + 1..alive.len() {
                let (da, db) = (&history[alive[a]], &history[alive[b]]);
                let (ax0, ay0, ax1, ay1) = da.bbox();
                let (bx0, by0, bx1, by1) = db.bbox();
                if bx0 - ax1 > r || ax0 - bx1 > r || by0 - ay1 > r || ay0 - by1 > r {
                    continue;
                }
                if bridge.bridges(da.rows(), db.rows()) {
                    let merged = da.hull(db);
                    let mut m = members[alive[a]].clone();
                    m.extend(&members[alive[b]]);
                    m.sort();
                    history.push(merged);
                    members.push(m);
                    let id = history.len() - 1;
                    log.push(MergeEvent { step: 1, left: alive[a], right: Some(alive[b]), result: id });
                    alive[a] = id;
                    alive.remove(b);
                    continue 'outer;
                }
            }
        }
        break;
    }
    (history, members, log, alive)
}

/// The α-covering algorithm with the deterministic cluster choice of [`alpha_clusters`].
pub fn covering_algorithm(k: &[Site], alpha: usize, kappa: f64, dhat: &Droplet) -> Result<CoverResult, DropletError> {
    let clusters = alpha_clusters(k, alpha, kappa);
    let mut initial = vec![];
    for c in &clusters {
        let copy = c
            .iter()
            .map(|&x| dhat.translate(x))
            .find(|d| c.iter().all(|&y| d.contains(y)))
            .ok_or(DropletError::Empty)?;
        initial.push(copy);
    }
    let bridge = BridgeSet::new(dhat, kappa);
    let (history, history_members, merge_log, output) = merge_droplets(initial, &bridge);
    let droplets: Vec<Droplet> = output.iter().map(|&i| history[i].clone()).collect();
    let members = output.iter().map(|&i| history_members[i].clone()).collect();
    let mut dust: Vec<Site> = k.iter().copied().filter(|&s| !droplets.iter().any(|d| d.contains(s))).collect();
    dust.sort();
    dust.dedup();
    Ok(CoverResult { droplets, members, clusters, dust, history, history_members, merge_log, output })
}

/// The droplets of the merge tree below history id `id`, including itself.
pub fn merge_tree(history_len: usize, log: &[MergeEvent], id: usize) -> Vec<usize> {
    let mut children = vec![vec![]; history_len];
    for e in log {
        children[e.result].push(e.left);
        if let Some(r) = e.right {
            children[e.result].push(r);
        }
    }
    let mut out = vec![id];
    let mut i = 0;
    while i < out.len() {
        out.extend(children[out[i]].iter().copied());
        i += 1;
    }
    out
}

/// Strongly connected components of the dust, used by the locality check.
pub fn dust_components(cover: &CoverResult, kappa: f64) -> Vec<Vec<Site>> {
    strong_components(&cover.dust, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Vec<Direction> {
        vec![Direction::E1, Direction::E2, Direction::E1.opposite(), Direction::E2.opposite()]
    }

    #[test]
    fn cluster_examples() {
        let far = [Site::new(0, 0), Site::new(10, 0), Site::new(0, 10)];
        assert!(alpha_clusters(&far, 2, 2.0).is_empty());
        let near = [Site::new(0, 0), Site::new(1, 1)];
        assert_eq!(alpha_clusters(&near, 2, 1.5), vec![near.to_vec()]);
    }

    #[test]
    fn cover_examples() {
        let kappa = 2.0;
        let dhat = default_dhat(&axes(), kappa).unwrap();
        assert!(covering_algorithm(&[], 1, kappa, &dhat).unwrap().droplets.is_empty());
        let one = covering_algorithm(&[Site::new(3, 3)], 1, kappa, &dhat).unwrap();
        assert_eq!(one.droplets, vec![dhat.translate(Site::new(3, 3))]);
        let d = dhat.diam();
        let near = covering_algorithm(&[Site::ORIGIN, Site::new(d as i64 - 1, 0)], 1, kappa, &dhat).unwrap();
        assert_eq!(near.droplets.len(), 1);
        let far = covering_algorithm(&[Site::ORIGIN, Site::new(3 * d as i64 + 20, 0)], 1, kappa, &dhat).unwrap();
        assert_eq!(far.droplets.len(), 2);
    }
}
