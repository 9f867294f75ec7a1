//! Monte Carlo experiments: percolation probabilities and `p_c` on tori, infection
//! times on light-cone windows, and scaling fits.
//!
//! Randomness comes from a keyed hash of `(seed, trial, site)`, so a site's state never
//! depends on the window, the visiting order or the number of workers. A site is
//! initially infected at density `p` when its hash is below `p·2⁶⁴`; raising `p` only
//! adds sites, which gives the monotone coupling used by the threshold computations.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::family::UpdateFamily;
use crate::geometry::Site;
use crate::lattice::{
    closure, light_cone_window, max_light_cone_time, synchronous_times, Lattice, LatticeError, RuleTable, Window,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("at least one trial is needed")]
    NoTrials,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("trial budget of {trials} exhausted with p_c bracketed by [{lo}, {hi}]")]
    BudgetExhausted { lo: f64, hi: f64, trials: u64 },
    #[error("scaling fit needs at least 3 points, got {0}")]
    InsufficientData(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Normal quantile used for every interval reported here.
pub const Z: f64 = 1.96;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "UBP_THREADS";

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The uniform 64-bit word attached to `site` in trial `trial` of stream `seed`.
pub fn site_hash(seed: u64, trial: u64, site: Site) -> u64 {
    let mut h = mix(seed.wrapping_add(GOLDEN));
    h = mix(h ^ trial.wrapping_mul(GOLDEN));
    h = mix(h ^ (site.x as u64).wrapping_add(GOLDEN));
    mix(h ^ (site.y as u64).rotate_left(32))
}

/// A different stream for a second sprinkling round of the same trial.
pub fn round_seed(seed: u64, round: u64) -> u64 {
    if round == 0 {
        seed
    } else {
        mix(seed ^ mix(round.wrapping_mul(GOLDEN)))
    }
}

/// The hash cutoff for density `p`; `None` means every site.
fn cutoff(p: f64) -> Option<u64> {
    if p >= 1.0 {
        None
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

/// Whether `site` is initially infected at density `p`.
pub fn is_seeded(seed: u64, trial: u64, site: Site, p: f64) -> bool {
    match cutoff(p) {
        None => true,
        Some(c) => site_hash(seed, trial, site) < c,
    }
}

/// The initially infected sites of `window` for one trial, in row-major order.
pub fn random_set(window: &Window, seed: u64, trial: u64, p: f64) -> Result<Vec<Site>, LatticeError> {
    let lat = Lattice::new(*window)?;
    Ok(lat.sites().filter(|&s| is_seeded(seed, trial, s, p)).collect())
}

/// Worker count from `UBP_THREADS`, or rayon's default when unset or invalid.
pub fn worker_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Evaluates `f` on every index of `range` in parallel, returning results in index order.
/// Inside [`with_workers`] the enclosing pool is used; otherwise a pool of
/// [`worker_count`] threads is built.
pub fn run_trials<T: Send>(range: std::ops::Range<u64>, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    if rayon::current_thread_index().is_some() {
        return range.into_par_iter().map(&f).collect();
    }
    with_workers(worker_count(), || range.into_par_iter().map(&f).collect())
}

/// Runs `f` on a pool of `n` worker threads.
pub fn with_workers<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn check_p(p: f64) -> Result<(), MonteCarloError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(MonteCarloError::BadProbability(p))
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let ph = k / n;
    let z2 = Z * Z;
    let centre = (ph + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialConfig {
    pub family: String,
    pub n: i64,
    pub p: f64,
    pub seed: u64,
    pub t_max: u32,
    pub trials: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Proportion {
        let (ci_low, ci_high) = wilson(successes, trials);
        let fraction = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Proportion { successes, trials, fraction, ci_low, ci_high }
    }
}

/// Whether trial `trial` percolates the torus `Z_n²` at density `p`, by direct closure.
pub fn trial_percolates(family: &UpdateFamily, n: i64, p: f64, seed: u64, trial: u64) -> Result<bool, LatticeError> {
    let w = Window::torus(n);
    let a = random_set(&w, seed, trial, p)?;
    Ok(closure(&a, family, w)?.is_full())
}

/// Fraction of trials whose random set percolates the torus, with a Wilson interval.
pub fn percolation_probability(family: &UpdateFamily, cfg: &TrialConfig) -> Result<Proportion, MonteCarloError> {
    check_p(cfg.p)?;
    if cfg.trials == 0 {
        return Err(MonteCarloError::NoTrials);
    }
    let hits = run_trials(0..cfg.trials, |t| trial_percolates(family, cfg.n, cfg.p, cfg.seed, t));
    let mut k = 0;
    for h in hits {
        k += h? as u64;
    }
    Ok(Proportion::new(k, cfg.trials))
}

/// Percolation with the initial set sprinkled in two independent rounds at density `q`
/// each; the union is a `p`-random set with `p = 1 − (1 − q)²`.
pub fn sprinkled_percolation_probability(
    family: &UpdateFamily,
    n: i64,
    q: f64,
    trials: u64,
    seed: u64,
) -> Result<Proportion, MonteCarloError> {
    check_p(q)?;
    if trials == 0 {
        return Err(MonteCarloError::NoTrials);
    }
    let w = Window::torus(n);
    let hits = run_trials(0..trials, |t| -> Result<bool, LatticeError> {
        let mut a = random_set(&w, round_seed(seed, 1), t, q)?;
        a.extend(random_set(&w, round_seed(seed, 2), t, q)?);
        Ok(closure(&a, family, w)?.is_full())
    });
    let mut k = 0;
    for h in hits {
        k += h? as u64;
    }
    Ok(Proportion::new(k, trials))
}

/// The hash value of the site whose addition first makes the torus fully infected when
/// sites are added in increasing hash order. Trial `t` percolates at density `p` exactly
/// when this value is below the cutoff for `p`.
pub fn percolation_threshold(family: &UpdateFamily, n: i64, seed: u64, trial: u64) -> Result<u64, LatticeError> {
    let table = RuleTable::new(family);
    let mut lat = Lattice::new(Window::torus(n))?;
    let mut keyed: Vec<(u64, Site)> = lat.sites().map(|s| (site_hash(seed, trial, s), s)).collect();
    keyed.sort_unstable();
    for (h, s) in keyed {
        lat.add_and_close(s, &table);
        if lat.is_full() {
            return Ok(h);
        }
    }
    Ok(u64::MAX)
}

fn percolates_at(threshold: u64, p: f64) -> bool {
    match cutoff(p) {
        None => true,
        Some(c) => threshold < c,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PcConfig {
    pub n: i64,
    /// Total trial budget.
    pub trials: u64,
    /// Trials added each time the current midpoint cannot be decided.
    pub batch: u64,
    /// Target bracket width.
    pub tol: f64,
    pub seed: u64,
}

impl PcConfig {
    pub fn new(n: i64, trials: u64, tol: f64, seed: u64) -> PcConfig {
        PcConfig { n, trials, batch: 100.min(trials.max(1)), tol, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PcEstimate {
    pub n: i64,
    pub p_hat: f64,
    /// Densities at which the percolation probability was found below and above one half.
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials_used: u64,
}

/// Bisection for the density at which the torus percolates with probability one half.
///
/// Each midpoint is classified once the Wilson interval of its percolation fraction
/// excludes one half, adding trial batches until it does. When the budget runs out at an
/// undecided midpoint, the two quarter points are tried instead. Percolation at every density
/// is read off per-trial thresholds, so all midpoints share the same trials.
pub fn estimate_pc(family: &UpdateFamily, cfg: &PcConfig) -> Result<PcEstimate, MonteCarloError> {
    if cfg.trials == 0 {
        return Err(MonteCarloError::NoTrials);
    }
    if cfg.tol <= 0.0 || cfg.tol.is_nan() {
        return Err(MonteCarloError::BadTolerance);
    }
    let batch = cfg.batch.max(1);
    let mut thresholds: Vec<u64> = vec![];
    let more = |thresholds: &mut Vec<u64>| -> Result<bool, MonteCarloError> {
        let used = thresholds.len() as u64;
        if used >= cfg.trials {
            return Ok(false);
        }
        let end = (used + batch).min(cfg.trials);
        for t in run_trials(used..end, |t| percolation_threshold(family, cfg.n, cfg.seed, t)) {
            thresholds.push(t?);
        }
        Ok(true)
    };
    more(&mut thresholds)?;
    // Some(true) if the percolation probability at p is significantly above one half.
    let side = |thresholds: &[u64], p: f64| {
        let k = thresholds.iter().filter(|&&t| percolates_at(t, p)).count() as u64;
        let (a, b) = wilson(k, thresholds.len() as u64);
        if a > 0.5 {
            Some(true)
        } else if b < 0.5 {
            Some(false)
        } else {
            None
        }
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        loop {
            match side(&thresholds, mid) {
                Some(true) => hi = mid,
                Some(false) => lo = mid,
                None if more(&mut thresholds)? => continue,
                None => {
                    // The midpoint sits too close to p_c for the budget: try to halve the
                    // bracket around it using the quarter points instead.
                    let w = hi - lo;
                    let (a, b) = (lo + 0.25 * w, hi - 0.25 * w);
                    let (sa, sb) = (side(&thresholds, a), side(&thresholds, b));
                    if sa != Some(false) || sb != Some(true) {
                        return Err(MonteCarloError::BudgetExhausted { lo, hi, trials: thresholds.len() as u64 });
                    }
                    (lo, hi) = (a, b);
                }
            }
            break;
        }
    }
    Ok(PcEstimate { n: cfg.n, p_hat: 0.5 * (lo + hi), ci_low: lo, ci_high: hi, trials_used: thresholds.len() as u64 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauStats {
    /// `None` marks a trial where the origin was still healthy at `t_max`.
    pub samples: Vec<Option<u32>>,
    /// Lower median, lower and upper quartile; `None` when the order statistic is a timeout.
    pub median: Option<u32>,
    pub q1: Option<u32>,
    pub q3: Option<u32>,
    /// Order statistics bracketing the median at the usual normal level.
    pub median_low: Option<u32>,
    pub median_high: Option<u32>,
    pub timeouts: u64,
    /// The horizon actually used, after capping to the light-cone window limit.
    pub t_max: u32,
}

/// `τ` for one trial. The light-cone window is doubled from a small horizon, so the
/// answer is exact for every `τ ≤ t_max`.
pub fn trial_tau(family: &UpdateFamily, p: f64, t_max: u32, seed: u64, trial: u64) -> Result<Option<u32>, LatticeError> {
    if is_seeded(seed, trial, Site::ORIGIN, p) {
        return Ok(Some(0));
    }
    let mut t = 32.min(t_max as i64).max(1);
    loop {
        let w = light_cone_window(family, t);
        let a = random_set(&w, seed, trial, p)?;
        let times = synchronous_times(&a, family, w, t as u32, Some(Site::ORIGIN))?;
        if let Some(tau) = times.time_of(Site::ORIGIN) {
            return Ok(Some(tau));
        }
        if t >= t_max as i64 {
            return Ok(None);
        }
        t = (2 * t).min(t_max as i64);
    }
}

fn order_stat(sorted: &[Option<u32>], i: usize) -> Option<u32> {
    sorted.get(i).copied().flatten()
}

pub fn tau_stats(samples: Vec<Option<u32>>, t_max: u32) -> TauStats {
    let mut sorted = samples.clone();
    sorted.sort_by_key(|s| s.map_or(u64::MAX, |t| t as u64));
    let n = sorted.len();
    let at = |q: f64| order_stat(&sorted, ((n.max(1) - 1) as f64 * q).floor() as usize);
    let half = Z * (n as f64).sqrt() / 2.0;
    let low = ((n as f64 / 2.0 - half).floor().max(1.0) as usize).saturating_sub(1);
    let high = ((n as f64 / 2.0 + half).ceil() as usize).min(n.max(1)) - 1;
    TauStats {
        timeouts: samples.iter().filter(|s| s.is_none()).count() as u64,
        median: at(0.5),
        q1: at(0.25),
        q3: at(0.75),
        median_low: order_stat(&sorted, low),
        median_high: order_stat(&sorted, high),
        samples,
        t_max,
    }
}

/// Samples `τ` over `trials` fresh random sets. `t_max` is capped so that a trial's
/// window stays within the light-cone size limit.
pub fn sample_tau(family: &UpdateFamily, p: f64, trials: u64, t_max: u32, seed: u64) -> Result<TauStats, MonteCarloError> {
    check_p(p)?;
    let t_max = t_max.min(max_light_cone_time(family).min(u32::MAX as i64) as u32);
    let res = run_trials(0..trials, |t| trial_tau(family, p, t_max, seed, t));
    let mut samples = Vec::with_capacity(res.len());
    for r in res {
        samples.push(r?);
    }
    Ok(tau_stats(samples, t_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Transform {
    /// `p^α · log τ`.
    BalancedTau,
    /// `p^α · (log 1/p)^(−2) · log τ`.
    UnbalancedTau,
    /// `p_c · (log n)^(1/α)`; points are `(n, p_c)`.
    BalancedPc,
    /// `p_c · (log n / (log log n)²)^(1/α)`; points are `(n, p_c)`.
    UnbalancedPc,
}

impl Transform {
    pub fn apply(self, x: f64, stat: f64, alpha: u32) -> f64 {
        let a = alpha as f64;
        match self {
            Transform::BalancedTau => x.powf(a) * stat,
            Transform::UnbalancedTau => x.powf(a) * (1.0 / x).ln().powi(-2) * stat,
            Transform::BalancedPc => stat * x.ln().powf(1.0 / a),
            Transform::UnbalancedPc => stat * (x.ln() / x.ln().ln().powi(2)).powf(1.0 / a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub transform: Transform,
    pub alpha: u32,
    /// `(p or n, statistic)` as given.
    pub points: Vec<(f64, f64)>,
    pub transformed: Vec<f64>,
    /// `max / min` of the transformed values; infinite if any is non-positive or infinite.
    pub spread: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn scaling_fit(points: &[(f64, f64)], transform: Transform, alpha: u32, bound: f64) -> Result<ScalingReport, MonteCarloError> {
    if points.len() < 3 {
        return Err(MonteCarloError::InsufficientData(points.len()));
    }
    let transformed: Vec<f64> = points.iter().map(|&(x, s)| transform.apply(x, s, alpha)).collect();
    let max = transformed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = transformed.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 && max.is_finite() { max / min } else { f64::INFINITY };
    Ok(ScalingReport { transform, alpha, points: points.to_vec(), transformed, spread, bound, pass: spread <= bound })
}

/// One CSV output line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub family: String,
    pub n: i64,
    pub p: f64,
    pub trials: u64,
    pub statistic: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

fn ln_time(t: Option<u32>) -> f64 {
    match t {
        None => f64::INFINITY,
        Some(t) => (t.max(1) as f64).ln(),
    }
}

impl CsvRow {
    pub fn percolation(family: &UpdateFamily, cfg: &TrialConfig, r: &Proportion) -> CsvRow {
        CsvRow {
            family: family.name().to_string(),
            n: cfg.n,
            p: cfg.p,
            trials: r.trials,
            statistic: r.fraction,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            seed: cfg.seed,
        }
    }

    /// The statistic is `p_hat` and the interval is the final bisection bracket.
    pub fn pc(family: &UpdateFamily, cfg: &PcConfig, e: &PcEstimate) -> CsvRow {
        CsvRow {
            family: family.name().to_string(),
            n: e.n,
            p: e.p_hat,
            trials: e.trials_used,
            statistic: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            seed: cfg.seed,
        }
    }

    /// The statistic is the median of `log τ`; `n` records the horizon.
    pub fn tau(family: &UpdateFamily, p: f64, seed: u64, s: &TauStats) -> CsvRow {
        CsvRow {
            family: family.name().to_string(),
            n: s.t_max as i64,
            p,
            trials: s.samples.len() as u64,
            statistic: ln_time(s.median),
            ci_low: ln_time(s.median_low),
            ci_high: ln_time(s.median_high),
            seed,
        }
    }
}

/// The median of `log τ` used by the scaling transforms.
pub fn median_log_tau(s: &TauStats) -> f64 {
    ln_time(s.median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::corpus;

    #[test]
    fn hash_is_roughly_uniform() {
        let mut buckets = [0u32; 16];
        for x in 0..64 {
            for y in 0..64 {
                buckets[(site_hash(3, 1, Site::new(x, y)) >> 60) as usize] += 1;
            }
        }
        let e = 4096.0 / 16.0;
        let chi: f64 = buckets.iter().map(|&b| (b as f64 - e).powi(2) / e).sum();
        assert!(chi < 40.0, "chi-square {chi}");
        assert_ne!(site_hash(3, 1, Site::new(0, 1)), site_hash(3, 1, Site::new(1, 0)));
        assert_ne!(site_hash(3, 1, Site::ORIGIN), site_hash(3, 2, Site::ORIGIN));
    }

    #[test]
    fn extreme_densities() {
        let f = corpus::two_neighbour();
        let cfg = |p| TrialConfig { family: "2-neighbour".into(), n: 16, p, seed: 1, t_max: 10, trials: 5 };
        assert_eq!(percolation_probability(&f, &cfg(1.0)).unwrap().fraction, 1.0);
        assert_eq!(percolation_probability(&f, &cfg(0.0)).unwrap().fraction, 0.0);
        assert!(percolation_probability(&f, &cfg(1.5)).is_err());
        let all = sample_tau(&f, 1.0, 4, 10, 1).unwrap();
        assert!(all.samples.iter().all(|&t| t == Some(0)));
        let none = sample_tau(&f, 0.0, 3, 10, 1).unwrap();
        assert_eq!(none.timeouts, 3);
    }

    #[test]
    fn wilson_brackets_the_fraction() {
        for (k, n) in [(0, 10), (5, 10), (10, 10), (37, 200)] {
            let (a, b) = wilson(k, n);
            let f = k as f64 / n as f64;
            assert!(a <= f && f <= b && 0.0 <= a && b <= 1.0);
        }
    }

    #[test]
    fn synthetic_scaling_is_flat() {
        let c = 0.3;
        let bal: Vec<(f64, f64)> = [0.04, 0.05, 0.06].iter().map(|&p| (p, c / p)).collect();
        let r = scaling_fit(&bal, Transform::BalancedTau, 1, 1.5).unwrap();
        assert!((r.spread - 1.0).abs() < 1e-12 && r.pass);
        let unbal: Vec<(f64, f64)> = [0.08, 0.1, 0.12].iter().map(|&p: &f64| (p, c / p * (1.0 / p).ln().powi(2))).collect();
        let r = scaling_fit(&unbal, Transform::UnbalancedTau, 1, 1.5).unwrap();
        assert!((r.spread - 1.0).abs() < 1e-12);
        assert_eq!(scaling_fit(&bal[..2], Transform::BalancedTau, 1, 2.0), Err(MonteCarloError::InsufficientData(2)));
    }
}
