//! The spanning algorithm and internally spanned droplets.

use serde::Serialize;

use super::{sets_within, strong_components, Droplet, DropletError, MergeEvent};
use crate::family::UpdateFamily;
use crate::geometry::{Direction, Site};
use crate::lattice::closure_in_plane;

#[derive(Clone, Debug, Serialize)]
pub struct SpanResult {
    /// `D([K_i])` for the final parts.
    pub droplets: Vec<Droplet>,
    /// The final parts `K_i` of the input.
    pub components: Vec<Vec<Site>>,
    /// Their closures `[K_i]`.
    pub closures: Vec<Vec<Site>>,
    /// Every part formed, singletons first; merge events refer to these ids.
    pub history: Vec<Vec<Site>>,
    pub history_droplets: Vec<Droplet>,
    pub merge_log: Vec<MergeEvent>,
    pub output: Vec<usize>,
}

fn plane_closure(k: &[Site], family: &UpdateFamily) -> Result<Vec<Site>, DropletError> {
    let mut v = closure_in_plane(k, family)?.infected_sites();
    v.sort();
    Ok(v)
}

fn bbox(s: &[Site]) -> (i64, i64, i64, i64) {
    let x0 = s.iter().map(|p| p.x).min().unwrap();
    let x1 = s.iter().map(|p| p.x).max().unwrap();
    let y0 = s.iter().map(|p| p.y).min().unwrap();
    let y1 = s.iter().map(|p| p.y).max().unwrap();
    (x0, y0, x1, y1)
}

/// The merge-loop form: parts start as singletons and the lowest pair `(i, j)` with
/// `[K_i] ∪ [K_j]` strongly connected is merged until none is left.
pub fn spanning_algorithm(
    k: &[Site],
    directions: &[Direction],
    family: &UpdateFamily,
    kappa: f64,
) -> Result<SpanResult, DropletError> {
    let mut sites = k.to_vec();
    sites.sort();
    sites.dedup();
    let mut history: Vec<Vec<Site>> = sites.iter().map(|&s| vec![s]).collect();
    let mut closures: Vec<Vec<Site>> = vec![];
    for part in &history {
        closures.push(plane_closure(part, family)?);
    }
    let mut boxes: Vec<(i64, i64, i64, i64)> = closures.iter().map(|c| bbox(c)).collect();
    let mut alive: Vec<usize> = (0..history.len()).collect();
    let mut log = vec![];
    let r = kappa.ceil() as i64;
    'outer: loop {
        for a in 0..alive.len() {
            for b in a + 1..alive.len() {
                let (i, j) = (alive[a], alive[b]);
                let (ax0, ay0, ax1, ay1) = boxes[i];
                let (bx0, by0, bx1, by1) = boxes[j];
                if bx0 - ax1 > r || ax0 - bx1 > r || by0 - ay1 > r || ay0 - by1 > r {
                    continue;
                }
                if sets_within(&closures[i], &closures[j], kappa) {
                    let mut part = history[i].clone();
                    part.extend(&history[j]);
                    part.sort();
                    let c = plane_closure(&part, family)?;
                    boxes.push(bbox(&c));
                    closures.push(c);
                    history.push(part);
                    let id = history.len() - 1;
                    log.push(MergeEvent { step: 1, left: i, right: Some(j), result: id });
                    alive[a] = id;
                    alive.remove(b);
                    continue 'outer;
                }
            }
        }
        break;
    }
    let mut history_droplets = vec![];
    for c in &closures {
        history_droplets.push(Droplet::minimal(c, directions)?);
    }
    Ok(SpanResult {
        droplets: alive.iter().map(|&i| history_droplets[i].clone()).collect(),
        components: alive.iter().map(|&i| history[i].clone()).collect(),
        closures: alive.iter().map(|&i| closures[i].clone()).collect(),
        history,
        history_droplets,
        merge_log: log,
        output: alive,
    })
}

/// The component form: `D(L)` for each strongly connected component `L` of `[K]`.
pub fn span_by_components(
    k: &[Site],
    directions: &[Direction],
    family: &UpdateFamily,
    kappa: f64,
) -> Result<Vec<(Vec<Site>, Droplet)>, DropletError> {
    if k.is_empty() {
        return Ok(vec![]);
    }
    let closed = plane_closure(k, family)?;
    strong_components(&closed, kappa)
        .into_iter()
        .map(|l| {
            let d = Droplet::minimal(&l, directions)?;
            Ok((l, d))
        })
        .collect()
}

/// Some strongly connected component `L` of `[D ∩ A]` has `D(L) = D`.
pub fn is_internally_spanned(d: &Droplet, a: &[Site], family: &UpdateFamily, kappa: f64) -> Result<bool, DropletError> {
    let inside: Vec<Site> = a.iter().copied().filter(|&s| d.contains(s)).collect();
    let target = Droplet::from_offsets(d.directions().to_vec(), d.tight_offsets())?;
    Ok(span_by_components(&inside, d.directions(), family, kappa)?.iter().any(|(_, e)| *e == target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::corpus;

    fn axes() -> Vec<Direction> {
        vec![Direction::E1, Direction::E2, Direction::E1.opposite(), Direction::E2.opposite()]
    }

    #[test]
    fn span_examples() {
        let f = corpus::duarte();
        let one = spanning_algorithm(&[Site::ORIGIN], &axes(), &f, 6.0).unwrap();
        assert_eq!(one.droplets, vec![Droplet::minimal(&[Site::ORIGIN], &axes()).unwrap()]);
        let two = spanning_algorithm(&[Site::ORIGIN, Site::new(20, 0)], &axes(), &f, 6.0).unwrap();
        assert_eq!(two.droplets.len(), 2);
    }

    #[test]
    fn spanned_examples() {
        let f = corpus::two_neighbour();
        let a = [Site::new(0, 0), Site::new(1, 1), Site::new(2, 2)];
        let d = Droplet::minimal(&a, &axes()).unwrap();
        assert!(is_internally_spanned(&d, &a, &f, 2.0).unwrap());
        let bigger = Droplet::minimal(&[Site::new(0, 0), Site::new(5, 5)], &axes()).unwrap();
        assert!(!is_internally_spanned(&bigger, &a, &f, 2.0).unwrap());
    }
}
