//! Property suites over the library: each trial draws a replayable random instance and
//! checks one or more invariants on it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ubp::droplets::{
    between_u0_and_u_star, covering_algorithm, default_dhat, iceberg_algorithm, is_internally_spanned, merge_tree,
    potential_increments, span_by_components, spanning_algorithm, strong_components, Droplet, Iceberg, IcebergContext,
    Piece,
};
use ubp::family::{
    classify, corpus, iceberg_u0, kappa, rho_bound, voracious_check, Classification, DifficultyValue, Kind,
    SearchConfig, UpdateFamily,
};
use ubp::geometry::{dot_sign, line_index, Direction, LineFrame, Site};
use ubp::lattice::{closure, closure_in_plane, default_band_height, LineVerdict, Strip, Window, MAX_BAND_HEIGHT};
use ubp::montecarlo::{
    percolation_probability, percolation_threshold, run_trials, scaling_fit, sprinkled_percolation_probability,
    trial_percolates, with_workers, Transform, TrialConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Stable,
    Quasi,
    Voracity,
    Cover,
    Span,
    Iceberg,
    Scaling,
}

impl Suite {
    /// The families a suite runs on when none is given.
    pub fn default_families(self) -> Vec<UpdateFamily> {
        let all = corpus::all();
        match self {
            Suite::Stable | Suite::Quasi => all,
            Suite::Voracity | Suite::Span => {
                all.into_iter().filter(|f| !matches!(f.name(), "r1" | "r3")).collect()
            }
            Suite::Cover => vec![corpus::two_neighbour(), corpus::cross4(), corpus::skew_balanced()],
            Suite::Iceberg => vec![corpus::duarte(), corpus::skew_drift()],
            Suite::Scaling => vec![corpus::two_neighbour()],
        }
    }
}

/// Small-scale cutoff for the Aizenman–Lebowitz checks.
pub const DEFAULT_LAMBDA: f64 = 16.0;

/// Extra factor on the calibrated iceberg constant.
pub const C2_SAFETY: f64 = 1.5;

/// Counterexamples kept per check.
const KEEP: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct VerifyOptions {
    pub trials: u64,
    pub seed: u64,
    pub search: SearchConfig,
    pub lambda: f64,
}

impl VerifyOptions {
    pub fn new(trials: u64, seed: u64) -> VerifyOptions {
        VerifyOptions { trials, seed, search: SearchConfig::default(), lambda: DEFAULT_LAMBDA }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub seed: u64,
    pub input: Vec<[i64; 2]>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub family: String,
    pub passed: u64,
    pub failed: u64,
    pub skipped: u64,
    /// Largest observed value of the checked ratio, when the check bounds one.
    pub worst: Option<f64>,
    pub counterexamples: Vec<Counterexample>,
}

impl Check {
    fn new(name: &str, family: &str) -> Check {
        Check {
            name: name.to_string(),
            family: family.to_string(),
            passed: 0,
            failed: 0,
            skipped: 0,
            worst: None,
            counterexamples: vec![],
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub trials: u64,
    pub seed: u64,
    /// Per family, the constants the checks used.
    pub constants: BTreeMap<String, BTreeMap<String, f64>>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }

    pub fn failures(&self) -> u64 {
        self.checks.iter().map(|c| c.failed).sum()
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let mut s = format!(
                    "{} {}/{}: {} passed, {} failed, {} skipped",
                    if c.ok() { "PASS" } else { "FAIL" },
                    c.family,
                    c.name,
                    c.passed,
                    c.failed,
                    c.skipped
                );
                if let Some(w) = c.worst {
                    s += &format!(", worst ratio {w:.3}");
                }
                for e in &c.counterexamples {
                    s += &format!("\n    trial {} seed {}: {} input {:?}", e.trial, e.seed, e.detail, e.input);
                }
                s
            })
            .collect()
    }
}

/// Result of one check on one instance.
enum Outcome {
    Pass,
    /// Passed with the observed value of the bounded ratio.
    Ratio(f64),
    Fail(String),
    Skip,
}

struct Record {
    check: &'static str,
    outcome: Outcome,
    input: Vec<Site>,
}

fn rec(check: &'static str, outcome: Outcome, input: &[Site]) -> Record {
    Record { check, outcome, input: input.to_vec() }
}

fn pass_if(check: &'static str, ok: bool, detail: impl FnOnce() -> String, input: &[Site]) -> Record {
    rec(check, if ok { Outcome::Pass } else { Outcome::Fail(detail()) }, input)
}

/// Folds per-trial records into checks, keeping first-seen order of check names.
fn collect(family: &str, seed: u64, per_trial: Vec<Vec<Record>>, checks: &mut Vec<Check>) {
    let start = checks.len();
    for (t, recs) in per_trial.into_iter().enumerate() {
        for r in recs {
            let i = match checks[start..].iter().position(|c| c.name == r.check) {
                Some(i) => start + i,
                None => {
                    checks.push(Check::new(r.check, family));
                    checks.len() - 1
                }
            };
            let c = &mut checks[i];
            match r.outcome {
                Outcome::Pass => c.passed += 1,
                Outcome::Ratio(x) => {
                    c.passed += 1;
                    c.worst = Some(c.worst.map_or(x, |w| w.max(x)));
                }
                Outcome::Skip => c.skipped += 1,
                Outcome::Fail(detail) => {
                    c.failed += 1;
                    if c.counterexamples.len() < KEEP {
                        c.counterexamples.push(Counterexample {
                            trial: t as u64,
                            seed,
                            input: r.input.iter().map(|s| [s.x, s.y]).collect(),
                            detail,
                        });
                    }
                }
            }
        }
    }
}

/// The random stream of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn random_sites(rng: &mut ChaCha8Rng, side: i64, count: usize) -> Vec<Site> {
    let mut v: Vec<Site> = (0..count).map(|_| Site::new(rng.gen_range(0..side), rng.gen_range(0..side))).collect();
    v.sort();
    v.dedup();
    v
}

/// Classification and derived constants of a critical family.
#[derive(Clone, Debug)]
pub struct FamilyContext {
    pub family: UpdateFamily,
    pub class: Classification,
    pub alpha: u32,
    pub balanced: bool,
    /// `S_B` or `S_U`.
    pub directions: Vec<Direction>,
    pub rho_hat: f64,
    pub kappa: f64,
    pub dhat: Droplet,
}

impl FamilyContext {
    pub fn new(family: &UpdateFamily, search: &SearchConfig) -> anyhow::Result<FamilyContext> {
        let class = classify(family, search)?;
        if class.kind != Kind::Critical {
            anyhow::bail!("{} is {}, not critical", family.name(), class.kind);
        }
        let alpha = class.alpha.ok_or_else(|| anyhow::anyhow!("α of {} is unresolved", family.name()))?;
        let balanced = class.balanced == Some(true);
        let directions = if balanced { class.s_b.clone() } else { class.s_u.clone() }
            .ok_or_else(|| anyhow::anyhow!("no droplet directions for {}", family.name()))?;
        let rho_hat = if balanced { rho_bound(family, &directions, alpha, search.window)?.value } else { 0.0 };
        let kappa = kappa(family, &class, rho_hat)?;
        let dhat = default_dhat(&directions, kappa)?;
        Ok(FamilyContext { family: family.clone(), class, alpha, balanced, directions, rho_hat, kappa, dhat })
    }

    fn constants(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("alpha".into(), self.alpha as f64);
        m.insert("nu".into(), self.family.nu());
        m.insert("rho_hat".into(), self.rho_hat);
        m.insert("kappa".into(), self.kappa);
        m.insert("dhat_diam".into(), self.dhat.diam());
        m.insert("dhat_size".into(), self.dhat.size() as f64);
        m
    }
}

/// Runs a suite. `families` empty means the suite's default families.
pub fn run_suite(suite: Suite, families: &[UpdateFamily], opts: &VerifyOptions) -> anyhow::Result<VerifyReport> {
    let mut report =
        VerifyReport { suite, trials: opts.trials, seed: opts.seed, constants: BTreeMap::new(), checks: vec![] };
    if opts.trials == 0 {
        return Ok(report);
    }
    let families = if families.is_empty() { suite.default_families() } else { families.to_vec() };
    for f in &families {
        match suite {
            Suite::Stable => stable_suite(f, opts, &mut report),
            Suite::Quasi => quasi_suite(f, opts, &mut report),
            Suite::Voracity => voracity_suite(&FamilyContext::new(f, &opts.search)?, opts, &mut report)?,
            Suite::Cover => cover_suite(&FamilyContext::new(f, &opts.search)?, opts, &mut report)?,
            Suite::Span => span_suite(&FamilyContext::new(f, &opts.search)?, opts, &mut report)?,
            Suite::Iceberg => iceberg_suite(&FamilyContext::new(f, &opts.search)?, opts, &mut report)?,
            Suite::Scaling => scaling_suite(f, opts, &mut report)?,
        }
    }
    Ok(report)
}

/// The eight symmetries of Z².
pub fn symmetries() -> Vec<fn(Site) -> Site> {
    vec![
        |s| s,
        |s| Site::new(-s.y, s.x),
        |s| Site::new(-s.x, -s.y),
        |s| Site::new(s.y, -s.x),
        |s| Site::new(s.x, -s.y),
        |s| Site::new(-s.x, s.y),
        |s| Site::new(s.y, s.x),
        |s| Site::new(-s.y, -s.x),
    ]
}

/// Trial `t`'s direction: breakpoints of `S` first, then directions inside each gap,
/// then random ones.
fn sample_direction(breakpoints: &[Direction], t: u64, rng: &mut ChaCha8Rng) -> Direction {
    let n = breakpoints.len() as u64;
    if t < n {
        return breakpoints[t as usize];
    }
    if t < 2 * n {
        let i = (t - n) as usize;
        return breakpoints[i].strictly_between(breakpoints[(i + 1) % n as usize]);
    }
    loop {
        let (a, b) = (rng.gen_range(-64..=64i64), rng.gen_range(-64..=64i64));
        if let Ok(d) = Direction::new(a, b) {
            return d;
        }
    }
}

fn stable_suite(f: &UpdateFamily, opts: &VerifyOptions, report: &mut VerifyReport) {
    let s = f.stable_set();
    let bps = s.breakpoints().to_vec();
    let per_trial = run_trials(0..opts.trials, |t| {
        let mut rng = trial_rng(opts.seed, t);
        let u = sample_direction(&bps, t, &mut rng);
        let input = [u.vector()];
        let stable = f.is_stable(u);
        let mut out = vec![pass_if(
            "stable-set membership",
            stable == s.contains(u),
            || format!("u = {u}: rule test says {stable}, arcs say {}", s.contains(u)),
            &input,
        )];
        // Without extra sites, H_u gains nothing exactly when u is stable.
        let w = Window::centred(12).with_half_plane(u, 0);
        let lat = closure(&[], f, w).expect("small window");
        let line_full = (-12..=12)
            .flat_map(|x| (-12..=12).map(move |y| Site::new(x, y)))
            .filter(|&x| line_index(x, u) == 0)
            .all(|x| lat.is_infected(x));
        let ok = if stable { lat.count() == 0 } else { lat.count() > 0 && line_full };
        out.push(pass_if("half-plane dichotomy", ok, || format!("u = {u}: stable {stable}, {} sites added", lat.count()), &input));
        let zero = SearchConfig { window: 1, max_size: 0, candidate_cap: 1 };
        let pos = ubp::family::difficulty(f, u, &zero).map(|d| d.alpha() != DifficultyValue::Finite(0));
        out.push(pass_if(
            "positive difficulty iff stable",
            pos.as_ref().is_ok_and(|&p| p == stable),
            || format!("u = {u}: stable {stable}, {pos:?}"),
            &input,
        ));
        if t == 0 {
            out.extend(symmetry_records(f, &opts.search));
        }
        out
    });
    collect(f.name(), opts.seed, per_trial, &mut report.checks);
}

fn symmetry_records(f: &UpdateFamily, search: &SearchConfig) -> Vec<Record> {
    let s = f.stable_set();
    let base = classify(f, search);
    let mut probes: Vec<Direction> = s.breakpoints().to_vec();
    for i in 0..probes.len() {
        probes.push(probes[i].strictly_between(probes[(i + 1) % s.breakpoints().len()]));
    }
    probes.extend([Direction::E1, Direction::E2, Direction::E1.opposite(), Direction::E2.opposite()]);
    symmetries()
        .into_iter()
        .map(|g| {
            let h = f.transformed(g);
            let hs = h.stable_set();
            let image = |d: Direction| Direction::of(g(d.vector())).expect("symmetries are bijections");
            let moved = probes.iter().all(|&d| hs.contains(image(d)) == s.contains(d));
            let c = classify(&h, search);
            let same = match (&base, &c) {
                (Ok(a), Ok(b)) => a.kind == b.kind && a.alpha == b.alpha && a.balanced == b.balanced,
                _ => false,
            };
            pass_if(
                "symmetry covariance",
                moved && same,
                || format!("image family {h}: stable set moved correctly {moved}, class preserved {same}"),
                &[g(Site::new(1, 0)), g(Site::new(0, 1))],
            )
        })
        .collect()
}

/// `S ∪ Q` in angular order.
fn s_union_q(f: &UpdateFamily) -> Vec<Direction> {
    let mut v: Vec<Direction> = f.stable_set().breakpoints().to_vec();
    v.extend(f.quasi_stable_set());
    v.sort();
    v.dedup();
    v
}

/// For consecutive `u, v` of `S ∪ Q` with unstable directions between them, some rule
/// lies in the closed double half-plane `{x : ⟨x,u⟩ ≤ 0, ⟨x,v⟩ ≤ 0}`.
fn corner_record(f: &UpdateFamily, list: &[Direction], i: usize, input: &[Site]) -> Record {
    let (u, v) = (list[i], list[(i + 1) % list.len()]);
    if list.len() < 2 || u.cross(v) <= 0 {
        return rec("quasi-stable corners", Outcome::Skip, input);
    }
    if f.is_stable(u.strictly_between(v)) {
        return rec("quasi-stable corners", Outcome::Skip, input);
    }
    let ok = f.rules().iter().any(|r| r.iter().all(|&x| dot_sign(x, u) <= 0 && dot_sign(x, v) <= 0));
    pass_if("quasi-stable corners", ok, || format!("no rule in the corner between {u} and {v}"), input)
}

fn quasi_suite(f: &UpdateFamily, opts: &VerifyOptions, report: &mut VerifyReport) {
    let list = s_union_q(f);
    let per_trial = run_trials(0..opts.trials, |t| {
        let mut rng = trial_rng(opts.seed, t);
        let mut out = vec![];
        if t == 0 {
            for i in 0..list.len() {
                out.push(corner_record(f, &list, i, &[list[i].vector()]));
            }
        }
        // A random unstable direction and the pair of S ∪ Q around it.
        let w = sample_direction(&[], 2, &mut rng);
        if f.is_stable(w) || list.contains(&w) {
            out.push(rec("quasi-stable corners", Outcome::Skip, &[w.vector()]));
            return out;
        }
        let i = (0..list.len()).find(|&i| list[i].ccw_strictly_between(w, list[(i + 1) % list.len()]));
        match i {
            Some(i) => out.push(corner_record(f, &list, i, &[w.vector()])),
            None => out.push(rec("quasi-stable corners", Outcome::Fail(format!("{w} not between S ∪ Q")), &[w.vector()])),
        }
        out
    });
    collect(f.name(), opts.seed, per_trial, &mut report.checks);
}

/// Band height the automatic strip decision settles on for `Z`.
fn settled_height(u: Direction, z: &[Site], f: &UpdateFamily) -> i64 {
    let mut h = default_band_height(f, z.len());
    let zmax = z.iter().map(|&p| line_index(p, u)).max().unwrap_or(0);
    while h <= zmax {
        h *= 2;
    }
    while h < MAX_BAND_HEIGHT && Strip::new(u, z, f, h).decide().exceeded() {
        h *= 2;
    }
    h
}

fn voracity_suite(ctx: &FamilyContext, opts: &VerifyOptions, report: &mut VerifyReport) -> anyhow::Result<()> {
    let f = &ctx.family;
    let name = f.name().to_string();
    report.constants.insert(name.clone(), ctx.constants());
    // One item per isolated direction and side with a witness.
    let mut items: Vec<(Direction, bool, u32, Vec<Site>)> = vec![];
    for r in &ctx.class.directions {
        for (plus, v, w) in [(true, r.plus, &r.plus_witness), (false, r.minus, &r.minus_witness)] {
            if let (DifficultyValue::Finite(k), Some(z)) = (v, w) {
                if k > 0 {
                    items.push((r.u, plus, k, z.clone()));
                }
            }
        }
    }
    let per_trial = run_trials(0..opts.trials.min(items.len() as u64).max(1), |t| {
        let mut out = vec![];
        if t == 0 && !ctx.balanced {
            if let Some(us) = ctx.class.u_star {
                for u in [us, us.opposite()] {
                    let a = ctx.class.record(u).map(|r| r.alpha().key());
                    out.push(pass_if(
                        "unbalanced: u* and -u* exceed alpha",
                        a.is_some_and(|a| a > ctx.alpha as u64),
                        || format!("α({u}) key {a:?} vs α = {}", ctx.alpha),
                        &[u.vector()],
                    ));
                }
            }
        }
        let Some((u, plus, k, z)) = items.get(t as usize) else { return out };
        let (u, plus, k) = (*u, *plus, *k);
        let vor = voracious_check(z, u, f, k as usize);
        out.push(pass_if("witness is voracious", vor == Ok(true), || format!("u = {u}: {vor:?}"), z));
        let h = settled_height(u, z, f);
        let strip = Strip::new(u, z, f, h);
        let d = strip.decide();
        let side = if plus { &d.plus } else { &d.minus };
        out.push(pass_if(
            "witness side is infinite",
            side.verdict == LineVerdict::InfiniteLine,
            || format!("u = {u}, plus {plus}: {:?}", side.verdict),
            z,
        ));
        for i in 0..z.len() {
            let mut fewer = z.clone();
            fewer.remove(i);
            let d2 = Strip::new(u, &fewer, f, h).decide();
            out.push(pass_if(
                "witness is minimal",
                d2.side(plus) != LineVerdict::InfiniteLine,
                || format!("u = {u}, plus {plus}: dropping {} keeps the side infinite", z[i]),
                z,
            ));
        }
        // The repetition found by the decision persists for three more periods.
        if let Some(per) = side.periodicity {
            let bw = strip.block_width;
            let extent = 2 * bw * (per.start as i64 + 8 * per.period as i64 + 16);
            let lat = strip.simulate(extent);
            let blocks = strip.blocks(&lat, extent, plus);
            let upto = per.start + 7 * per.period;
            let ok = upto + per.period <= blocks.len()
                && (per.start..upto).all(|i| blocks[i] == blocks[i + per.period]);
            out.push(pass_if("semi-periodic continuation", ok, || format!("u = {u}, plus {plus}: {per:?}"), z));
        }
        // A few translates of the witness along the line infect a solid half-line on its side.
        let frame = LineFrame::new(u);
        let r_max = 8;
        let found = (1..=r_max).find(|&r| {
            let mut zr: Vec<Site> = vec![];
            for i in 0..r as i64 {
                zr.extend(z.iter().map(|&p| p + frame.from_frame(0, i)));
            }
            let s = Strip::new(u, &zr, f, settled_height(u, &zr, f));
            let cols: Vec<i64> = zr.iter().map(|&p| frame.to_frame(p).1).collect();
            let (lo, hi) = (*cols.iter().min().unwrap(), *cols.iter().max().unwrap());
            let ext = 64 * s.block_width;
            let lat = s.simulate(ext);
            let mut xs = if plus { hi + 1..=hi + ext / 2 } else { lo - ext / 2..=lo - 1 };
            xs.all(|x| lat.is_infected(Site::new(x, 0)))
        });
        out.push(pass_if(
            "bounded multiplicity",
            found.is_some(),
            || format!("u = {u}, plus {plus}: no r ≤ {r_max} translates fill the half-line"),
            z,
        ));
        out
    });
    collect(&name, opts.seed, per_trial, &mut report.checks);
    Ok(())
}

/// `D̂_κ`: the smallest droplet containing the `κ`-neighbourhood of `D̂`.
pub fn dhat_kappa(ctx: &FamilyContext) -> anyhow::Result<Droplet> {
    let mut pts = vec![];
    let r = ctx.kappa.ceil() as i64;
    for s in ctx.dhat.sites() {
        for dx in [-r, 0, r] {
            for dy in [-r, 0, r] {
                pts.push(s + Site::new(dx, dy));
            }
        }
    }
    Ok(Droplet::minimal(&pts, &ctx.directions)?)
}

/// Per-cluster growth constant for the extremal cover bound: one copy of `D̂` plus the
/// bridge reach, `diam(D̂) + diam(D̂_κ)`.
pub fn cover_constant(ctx: &FamilyContext) -> anyhow::Result<f64> {
    Ok(ctx.dhat.diam() + dhat_kappa(ctx)?.diam())
}

/// The shorter formula `diam(D̂) + 2κ + 2ν`, reported but not enforced.
pub fn cover_constant_short(ctx: &FamilyContext) -> f64 {
    ctx.dhat.diam() + 2.0 * ctx.kappa + 2.0 * ctx.family.nu()
}

/// Cutoff for the cover Aizenman–Lebowitz check. Covered droplets start as copies of
/// `D̂` and a merge adds at most one bridge, so scales below that are out of reach.
pub fn cover_lambda(ctx: &FamilyContext, lambda: f64) -> f64 {
    lambda.max(cover_constant_short(ctx))
}

/// Random cover instance: up to 12 sites in a box of side `3 diam(D̂)`, each with a
/// companion within `κ/2` half of the time so that clusters of two occur.
fn cover_instance(ctx: &FamilyContext, rng: &mut ChaCha8Rng) -> Vec<Site> {
    let side = (3.0 * ctx.dhat.diam()).ceil() as i64;
    let m = rng.gen_range(1..=12);
    let mut k = random_sites(rng, side, m);
    let c = (ctx.kappa / 2.0).floor().max(1.0) as i64;
    for i in 0..k.len() {
        if rng.gen_bool(0.5) {
            let p = k[i] + Site::new(rng.gen_range(-c..=c), rng.gen_range(-c..=c));
            k.push(p);
        }
    }
    k.sort();
    k.dedup();
    k
}

/// `k` values at which the Aizenman–Lebowitz property is tested.
fn al_scales(rng: &mut ChaCha8Rng, lambda: f64, top: f64) -> Vec<f64> {
    (0..5).map(|_| rng.gen_range(lambda..=top)).collect()
}

fn cover_suite(ctx: &FamilyContext, opts: &VerifyOptions, report: &mut VerifyReport) -> anyhow::Result<()> {
    let name = ctx.family.name().to_string();
    let c0 = cover_constant(ctx)?;
    let lambda = cover_lambda(ctx, opts.lambda);
    let mut consts = ctx.constants();
    consts.insert("lambda".into(), lambda);
    consts.insert("c0".into(), c0);
    consts.insert("c0_short".into(), cover_constant_short(ctx));
    report.constants.insert(name.clone(), consts);
    let per_trial = run_trials(0..opts.trials, |t| -> Vec<Record> {
        let mut rng = trial_rng(opts.seed, t);
        let k = cover_instance(ctx, &mut rng);
        let cover = match covering_algorithm(&k, ctx.alpha as usize, ctx.kappa, &ctx.dhat) {
            Ok(c) => c,
            Err(e) => return vec![rec("cover runs", Outcome::Fail(e.to_string()), &k)],
        };
        let mut out = vec![];
        // Locality: what the closure adds outside the droplets stays near the dust.
        match closure_in_plane(&k, &ctx.family) {
            Ok(lat) => {
                let bad = lat.infected_sites().into_iter().find(|&x| {
                    !cover.droplets.iter().any(|d| d.contains(x))
                        && cover.dust.iter().map(|&y| x.dist(y)).fold(f64::INFINITY, f64::min) > ctx.rho_hat + 1e-9
                });
                out.push(pass_if("cover locality", bad.is_none(), || format!("{bad:?} is far from droplets and dust"), &k));
            }
            Err(e) => out.push(rec("cover locality", Outcome::Fail(e.to_string()), &k)),
        }
        for (h, d) in cover.history.iter().enumerate() {
            let clusters = cover.history_members[h].len() as f64;
            let ratio = d.diam() / (c0 * clusters);
            out.push(if ratio <= 1.0 + 1e-9 {
                rec("cover extremal", Outcome::Ratio(ratio), &k)
            } else {
                rec("cover extremal", Outcome::Fail(format!("diam {:.2} with {clusters} clusters", d.diam())), &k)
            });
        }
        for &id in &cover.output {
            let d = &cover.history[id];
            if d.diam() < lambda {
                continue;
            }
            let tree = merge_tree(cover.history.len(), &cover.merge_log, id);
            for kk in al_scales(&mut rng, lambda, d.diam()) {
                let ok = tree.iter().any(|&j| (kk..=3.0 * kk).contains(&cover.history[j].diam()));
                out.push(pass_if(
                    "cover Aizenman-Lebowitz",
                    ok,
                    || format!("no covered droplet with diam in [{kk:.2}, {:.2}] below diam {:.2}", 3.0 * kk, d.diam()),
                    &k,
                ));
            }
        }
        out
    });
    collect(&name, opts.seed, per_trial, &mut report.checks);
    Ok(())
}

/// `C₁ = κ + 2ν + 1` for the extremal span bound.
pub fn span_constant(ctx: &FamilyContext) -> f64 {
    ctx.kappa + 2.0 * ctx.family.nu() + 1.0
}

/// Random span instance, cycling through three shapes: a sparse spread of sites, a tight
/// box whose closure is often strongly connected, and a dense box large enough to span
/// droplets above the small-scale cutoff.
fn span_instance(ctx: &FamilyContext, rng: &mut ChaCha8Rng, t: u64) -> Vec<Site> {
    let nu = ctx.family.nu();
    match t % 3 {
        0 => {
            let side = (6.0 * nu).ceil() as i64 + 8;
            let m = rng.gen_range(1..=14);
            random_sites(rng, side, m)
        }
        1 => {
            let side = (1.5 * nu).ceil() as i64 + 2;
            let m = rng.gen_range(2..=6);
            random_sites(rng, side, m)
        }
        _ => {
            let side = rng.gen_range(16..=40);
            let m = (side * side) as f64 * rng.gen_range(0.04..0.12);
            random_sites(rng, side, m as usize + 2)
        }
    }
}

fn span_suite(ctx: &FamilyContext, opts: &VerifyOptions, report: &mut VerifyReport) -> anyhow::Result<()> {
    let name = ctx.family.name().to_string();
    let c1 = span_constant(ctx);
    let mut consts = ctx.constants();
    consts.insert("lambda".into(), opts.lambda);
    consts.insert("c1".into(), c1);
    report.constants.insert(name.clone(), consts);
    let f = &ctx.family;
    let dirs = &ctx.directions;
    let per_trial = run_trials(0..opts.trials, |t| -> Vec<Record> {
        let mut rng = trial_rng(opts.seed, t);
        let k = span_instance(ctx, &mut rng, t);
        let (span, comps) = match (spanning_algorithm(&k, dirs, f, ctx.kappa), span_by_components(&k, dirs, f, ctx.kappa))
        {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                let e = a.err().map(|e| e.to_string()).or(b.err().map(|e| e.to_string()));
                return vec![rec("span runs", Outcome::Fail(e.unwrap_or_default()), &k)];
            }
        };
        let mut out = vec![];
        let mut by_loop: Vec<(Vec<Site>, Droplet)> =
            span.closures.iter().cloned().zip(span.droplets.iter().cloned()).collect();
        let mut by_comp = comps.clone();
        let key = |x: &(Vec<Site>, Droplet)| x.0.clone();
        by_loop.sort_by_key(key);
        by_comp.sort_by_key(key);
        out.push(pass_if(
            "span dual path",
            by_loop == by_comp,
            || format!("{} parts by merging, {} components", by_loop.len(), by_comp.len()),
            &k,
        ));
        for (i, d) in span.droplets.iter().enumerate() {
            let inside = k.iter().filter(|&&s| d.contains(s)).count() as f64;
            let ratio = d.diam() / (c1 * inside.max(1.0));
            out.push(if ratio <= 1.0 + 1e-9 && inside > 0.0 {
                rec("span extremal", Outcome::Ratio(ratio), &k)
            } else {
                rec("span extremal", Outcome::Fail(format!("droplet {i}: diam {:.2}, |D ∩ A| = {inside}", d.diam())), &k)
            });
        }
        for (i, &id) in span.output.iter().enumerate() {
            let d = &span.droplets[i];
            if d.diam() < opts.lambda {
                continue;
            }
            if !is_internally_spanned(d, &k, f, ctx.kappa).unwrap_or(false) {
                out.push(rec("span Aizenman-Lebowitz", Outcome::Skip, &k));
                continue;
            }
            let tree = merge_tree(span.history.len(), &span.merge_log, id);
            let spanned = |j: usize| is_internally_spanned(&span.history_droplets[j], &k, f, ctx.kappa).unwrap_or(false);
            for kk in al_scales(&mut rng, opts.lambda, d.diam()) {
                let ok = tree
                    .iter()
                    .any(|&j| (kk..=3.0 * kk).contains(&span.history_droplets[j].diam()) && spanned(j));
                out.push(pass_if(
                    "span Aizenman-Lebowitz",
                    ok,
                    || format!("no spanned droplet with diam in [{kk:.2}, {:.2}] below diam {:.2}", 3.0 * kk, d.diam()),
                    &k,
                ));
            }
            for &u in dirs {
                let top = d.projection(u);
                if top < opts.lambda {
                    continue;
                }
                let kk = rng.gen_range(opts.lambda..=top);
                let ok = tree.iter().any(|&j| {
                    (kk..=3.0 * kk).contains(&span.history_droplets[j].projection(u)) && spanned(j)
                });
                out.push(pass_if(
                    "span Aizenman-Lebowitz (projections)",
                    ok,
                    || format!("u = {u}: no spanned droplet with projection in [{kk:.2}, {:.2}]", 3.0 * kk),
                    &k,
                ));
            }
        }
        // Penultimate step: the last merge splits K into parts with connected closures.
        if span.output.len() == 1 && k.len() >= 2 && k.len() <= 24 {
            let last = span.merge_log.last().expect("several sites merged into one part");
            let k1 = &span.history[last.left];
            let k2 = &span.history[last.right.expect("merges are binary")];
            let own = |part: &[Site]| -> Vec<Site> {
                let w = Window::bounding(&k, 8 * (f.reach() + 2) * (k.len() as i64 + 1));
                closure(part, f, w).map(|l| l.infected_sites()).unwrap_or_default()
            };
            let (c1s, c2s) = (own(k1), own(k2));
            let mut both = c1s.clone();
            both.extend(&c2s);
            both.sort();
            both.dedup();
            let one = |s: &[Site]| strong_components(s, ctx.kappa).len() == 1;
            let ok = one(&c1s) && one(&c2s) && one(&both) && k1.len() + k2.len() == k.len();
            out.push(pass_if("span penultimate split", ok, || format!("split {k1:?} | {k2:?}"), &k));
        } else {
            out.push(rec("span penultimate split", Outcome::Skip, &k));
        }
        out
    });
    collect(&name, opts.seed, per_trial, &mut report.checks);
    Ok(())
}

/// The iceberg set-up for a drift family: `u*`, `u₀`, a direction `u` between them and
/// the droplet data over `S_U`.
pub fn iceberg_context(ctx: &FamilyContext) -> anyhow::Result<IcebergContext> {
    let u_star = ctx.class.u_star.ok_or_else(|| anyhow::anyhow!("{} has no u*", ctx.family.name()))?;
    if ctx.class.drift != Some(true) {
        anyhow::bail!("{} has no drift", ctx.family.name());
    }
    let u0 = iceberg_u0(&ctx.family, u_star)?;
    let u = u_star.strictly_between(u0);
    let u = if between_u0_and_u_star(u, u0, u_star) { u } else { u0.strictly_between(u_star) };
    Ok(IcebergContext { u, u0, u_star, directions: ctx.directions.clone(), kappa: ctx.kappa, dhat: ctx.dhat.clone() })
}

/// A random direction strictly between `u₀` and `u*`.
fn random_iceberg_direction(ic: &IcebergContext, rng: &mut ChaCha8Rng) -> Direction {
    for _ in 0..1000 {
        if let Ok(d) = Direction::new(rng.gen_range(-12..=12), rng.gen_range(-12..=12)) {
            if between_u0_and_u_star(d, ic.u0, ic.u_star) {
                return d;
            }
        }
    }
    ic.u
}

/// Random iceberg-algorithm input above `H_u`.
fn iceberg_instance(ic: &IcebergContext, rng: &mut ChaCha8Rng) -> Vec<Site> {
    let frame = LineFrame::new(ic.u);
    let d = ic.dhat.diam().ceil() as i64;
    let m = rng.gen_range(1..=10);
    let mut k: Vec<Site> = (0..m).map(|_| frame.from_frame(rng.gen_range(0..=3 * d), rng.gen_range(-4 * d..=4 * d))).collect();
    k.sort();
    k.dedup();
    k
}

/// Largest potential increments over calibration runs on a seed stream disjoint from the
/// test runs.
pub fn calibrate_increments(ic: &IcebergContext, seed: u64, runs: u64) -> (f64, f64) {
    let cal_seed = seed ^ 0x5eed_ca11_b4a7_e000;
    let inc = run_trials(0..runs, |t| {
        let mut rng = trial_rng(cal_seed, t);
        let k = iceberg_instance(ic, &mut rng);
        iceberg_algorithm(&k, ic).map(|run| potential_increments(&run, ic)).unwrap_or((0.0, 0.0))
    });
    inc.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (f64::max(a, x), f64::max(b, y)))
}

/// `C₂` from the calibrated increments: starting from `γ` copies of `D̂` and at most
/// `2γ` steps, each raising a potential by at most its increment.
pub fn iceberg_constant(ic: &IcebergContext, c1: f64, c2: f64) -> f64 {
    let h = ic.height(&ic.dhat);
    let w = ic.width(&ic.dhat);
    C2_SAFETY * f64::max(h + 2.0 * c1, ic.sigma() * w + h + 2.0 * c2)
}

fn iceberg_suite(ctx: &FamilyContext, opts: &VerifyOptions, report: &mut VerifyReport) -> anyhow::Result<()> {
    let name = ctx.family.name().to_string();
    let ic = iceberg_context(ctx)?;
    let (c1, c2) = calibrate_increments(&ic, opts.seed, 50);
    let c2_const = iceberg_constant(&ic, c1, c2);
    let mut consts = ctx.constants();
    consts.insert("sigma".into(), ic.sigma());
    consts.insert("increment_width".into(), c1);
    consts.insert("increment_height".into(), c2);
    consts.insert("c2".into(), c2_const);
    report.constants.insert(name.clone(), consts);
    let f = &ctx.family;
    let per_trial = run_trials(0..opts.trials, |t| -> Vec<Record> {
        let mut rng = trial_rng(opts.seed, t);
        let mut out = vec![];
        // Closedness of H_u ∪ J for a constructed iceberg.
        let u = random_iceberg_direction(&ic, &mut rng);
        let (a, b) = (rng.gen_range(1..=40), rng.gen_range(1..=40));
        match Iceberg::new(u, ic.u0, ic.u_star, a, b) {
            Ok(j) => {
                let sites = j.sites();
                if sites.is_empty() {
                    out.push(rec("iceberg closed", Outcome::Skip, &[u.vector()]));
                } else {
                    let w = Window::bounding(&sites, f.reach() + 2).with_half_plane(u, 0);
                    let got = closure(&sites, f, w).map(|l| l.count());
                    out.push(pass_if(
                        "iceberg closed",
                        got == Ok(sites.len() as u64),
                        || format!("u = {u}, a = {a}, b = {b}: {} sites became {got:?}", sites.len()),
                        &[u.vector(), Site::new(a, b)],
                    ));
                }
            }
            Err(e) => out.push(rec("iceberg closed", Outcome::Fail(e.to_string()), &[u.vector()])),
        }
        // Dimensions of the icebergs produced by the algorithm.
        let k = iceberg_instance(&ic, &mut rng);
        match iceberg_algorithm(&k, &ic) {
            Ok(run) => {
                for (p, m) in run.pieces.iter().zip(&run.members) {
                    let Piece::Iceberg(j) = p else { continue };
                    let gamma = m.len() as f64;
                    let rw = ic.width(j.region()) * ic.sigma() / (c2_const * gamma);
                    let rh = ic.height(j.region()) / (c2_const * gamma);
                    for (check, r) in [("iceberg width", rw), ("iceberg height", rh)] {
                        out.push(if r <= 1.0 + 1e-9 {
                            rec(check, Outcome::Ratio(r), &k)
                        } else {
                            rec(check, Outcome::Fail(format!("ratio {r:.3} with γ = {gamma}")), &k)
                        });
                    }
                }
            }
            Err(e) => out.push(rec("iceberg width", Outcome::Fail(e.to_string()), &k)),
        }
        out
    });
    collect(&name, opts.seed, per_trial, &mut report.checks);
    Ok(())
}

fn scaling_suite(f: &UpdateFamily, opts: &VerifyOptions, report: &mut VerifyReport) -> anyhow::Result<()> {
    let name = f.name().to_string();
    let n = 32;
    let trials = opts.trials;
    let grid = [0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.16, 0.20];
    let cfg = |p: f64, seed: u64| TrialConfig { family: name.clone(), n, p, seed, t_max: 0, trials };
    let mut out = vec![];
    let mut prev: Option<ubp::montecarlo::Proportion> = None;
    for &p in &grid {
        let r = percolation_probability(f, &cfg(p, opts.seed))?;
        if let Some(q) = prev {
            out.push(pass_if(
                "percolation monotone in p",
                r.successes >= q.successes,
                || format!("p = {p}: {} < {}", r.successes, q.successes),
                &[],
            ));
        }
        prev = Some(r);
    }
    // Thresholds and direct closures agree trial by trial.
    let th = run_trials(0..trials.min(50), |t| percolation_threshold(f, n, opts.seed, t));
    for (t, h) in th.into_iter().enumerate() {
        let h = h?;
        for &p in &[0.05, 0.08, 0.12] {
            let direct = trial_percolates(f, n, p, opts.seed, t as u64)?;
            let cutoff = (p * 18_446_744_073_709_551_616.0) as u64;
            out.push(pass_if(
                "threshold matches closure",
                direct == (h < cutoff),
                || format!("trial {t}, p = {p}"),
                &[],
            ));
        }
    }
    // Two sprinkling rounds at q give the same law as one round at p.
    let p = 0.1;
    let q = 1.0 - (1.0 - p as f64).sqrt();
    let one = percolation_probability(f, &cfg(p, opts.seed))?;
    let two = sprinkled_percolation_probability(f, n, q, trials, opts.seed)?;
    let pooled = (one.successes + two.successes) as f64 / (2 * trials) as f64;
    let se = (pooled * (1.0 - pooled) * 2.0 / trials as f64).sqrt();
    let z = if se > 0.0 { (one.fraction - two.fraction).abs() / se } else { 0.0 };
    out.push(pass_if("two-round sprinkling", z <= 2.576, || format!("z = {z:.3}: {one:?} vs {two:?}"), &[]));
    // Worker count does not change results.
    let a = with_workers(1, || percolation_probability(f, &cfg(0.08, opts.seed)))?;
    let b = with_workers(3, || percolation_probability(f, &cfg(0.08, opts.seed)))?;
    out.push(pass_if("independent of worker count", a == b, || format!("{a:?} vs {b:?}"), &[]));
    // Synthetic data is flat under the matching transform.
    let ps = [0.04, 0.05, 0.06, 0.07, 0.08];
    let bal: Vec<(f64, f64)> = ps.iter().map(|&p| (p, 0.3 / p)).collect();
    let unb: Vec<(f64, f64)> = ps.iter().map(|&p: &f64| (p, 0.3 / p * (1.0 / p).ln().powi(2))).collect();
    let fb = scaling_fit(&bal, Transform::BalancedTau, 1, 1.0 + 1e-9)?;
    let fu = scaling_fit(&unb, Transform::UnbalancedTau, 1, 1.0 + 1e-9)?;
    out.push(pass_if("synthetic transforms are flat", fb.pass && fu.pass, || format!("{} {}", fb.spread, fu.spread), &[]));
    collect(&name, opts.seed, vec![out], &mut report.checks);
    Ok(())
}
