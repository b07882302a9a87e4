//! Seeded walks, ensembles, rescaled paths and exact small-`n` laws.

use rayon::prelude::*;
use serde::Serialize;

use crate::exact::{self, CoeffOptions, CoeffTable, ExactError};
use crate::rng::{self, TrialRng};
use crate::{Schedule, Sign};

pub const BRUTE_FORCE_CAP: usize = 22;
pub const DP_CAP: usize = 20_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("n = {n} exceeds the cap {cap} for this method")]
    TooLarge { n: usize, cap: usize },
    #[error("path of length {available} does not reach step {needed}")]
    HorizonExceeded { needed: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// One realization of the walk up to step `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkPath {
    pub n: usize,
    /// `W_2, …, W_n`.
    pub turns: Vec<bool>,
    /// `Y_1, …, Y_n` as ±1.
    pub signs: Vec<i8>,
    /// `S_0, …, S_n`.
    pub sums: Vec<i64>,
    pub seed: u64,
}

impl WalkPath {
    pub fn sign(&self, k: usize) -> i8 {
        self.signs[k - 1]
    }

    pub fn sum(&self, k: usize) -> i64 {
        self.sums[k]
    }

    /// `W_k` for `k ≥ 2`; `W_1` is read off the start as `Y_1 = −1`.
    pub fn turn(&self, k: usize) -> bool {
        if k == 1 {
            self.signs[0] < 0
        } else {
            self.turns[k - 2]
        }
    }

    pub fn endpoint(&self) -> Endpoint {
        Endpoint {
            s_n: self.sums[self.n],
            y_n: self.signs[self.n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Endpoint {
    pub s_n: i64,
    pub y_n: i8,
}

/// Draws `Y_1`: fixed if given, otherwise `Y_1 = −1` with probability `first`.
#[inline]
fn start_sign(rng: &mut TrialRng, first: f64, y1: Option<Sign>) -> i8 {
    match y1 {
        Some(y) => y.value(),
        None => {
            if rng::bernoulli(rng, first) {
                -1
            } else {
                1
            }
        }
    }
}

/// Walks with a precomputed `probs` table (`probs[k] = p_k`), calling `visit(k, w_k, y_k)`
/// for `k = 1..=n`, where `w_1` records `Y_1 = −1`.
#[inline]
fn drive<F: FnMut(usize, bool, i8)>(probs: &[f64], n: usize, rng: &mut TrialRng, y1: Option<Sign>, mut visit: F) {
    let mut y = start_sign(rng, probs[1], y1);
    visit(1, y < 0, y);
    for (k, &p) in probs.iter().enumerate().take(n + 1).skip(2) {
        let w = rng::bernoulli(rng, p);
        if w {
            y = -y;
        }
        visit(k, w, y);
    }
}

pub fn sample_walk(s: &Schedule, n: usize, seed: u64, y1: Option<Sign>) -> WalkPath {
    assert!(n >= 1, "walks need n >= 1");
    let probs = s.prob_table(n);
    walk_with_probs(&probs, n, seed, y1)
}

fn walk_with_probs(probs: &[f64], n: usize, seed: u64, y1: Option<Sign>) -> WalkPath {
    let mut rng = rng::seeded(seed);
    let mut turns = Vec::with_capacity(n.saturating_sub(1));
    let mut signs = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n + 1);
    sums.push(0i64);
    drive(probs, n, &mut rng, y1, |k, w, y| {
        if k >= 2 {
            turns.push(w);
        }
        signs.push(y);
    });
    let mut acc = 0i64;
    for &y in &signs {
        acc += i64::from(y);
        sums.push(acc);
    }
    WalkPath {
        n,
        turns,
        signs,
        sums,
        seed,
    }
}

/// Runs `f(trial, rng)` for every trial in parallel, each on its own stream,
/// and returns results in trial order.
pub fn run_trials<T, F>(trials: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> T + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::trial_rng(master, t);
            f(t, &mut r)
        })
        .collect()
}

/// Path of trial `t` in an ensemble with master seed `master`.
pub fn trial_walk(s: &Schedule, n: usize, master: u64, trial: u64, y1: Option<Sign>) -> WalkPath {
    sample_walk(s, n, rng::trial_seed(master, trial), y1)
}

/// `(S_n, Y_n)` for every trial; trial `t` matches [`trial_walk`].
pub fn sample_endpoints(s: &Schedule, n: usize, trials: usize, master: u64, y1: Option<Sign>) -> Vec<Endpoint> {
    assert!(n >= 1);
    let probs = s.prob_table(n);
    run_trials(trials, master, |_, r| {
        let mut sum = 0i64;
        let mut last = 0i8;
        drive(&probs, n, r, y1, |_, _, y| {
            sum += i64::from(y);
            last = y;
        });
        Endpoint { s_n: sum, y_n: last }
    })
}

/// Exact law of `(S_n, Y_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDist {
    pub n: usize,
    /// `plus[S + n] = P(S_n = S, Y_n = +1)`.
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl ExactDist {
    fn zeros(n: usize) -> Self {
        ExactDist {
            n,
            plus: vec![0.0; 2 * n + 1],
            minus: vec![0.0; 2 * n + 1],
        }
    }

    fn idx(&self, s: i64) -> Option<usize> {
        let i = s + self.n as i64;
        (0..=2 * self.n as i64).contains(&i).then_some(i as usize)
    }

    pub fn prob(&self, s: i64, y: Sign) -> f64 {
        match self.idx(s) {
            Some(i) => match y {
                Sign::Plus => self.plus[i],
                Sign::Minus => self.minus[i],
            },
            None => 0.0,
        }
    }

    /// `(S, P(S_n = S))` over the parity-compatible support, ascending.
    pub fn marginal(&self) -> Vec<(i64, f64)> {
        let n = self.n as i64;
        (0..=self.n)
            .map(|k| {
                let s = -n + 2 * k as i64;
                let i = (s + n) as usize;
                (s, self.plus[i] + self.minus[i])
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.plus.iter().chain(&self.minus).sum()
    }

    pub fn head_prob(&self) -> f64 {
        self.plus.iter().sum::<f64>() / self.total()
    }

    pub fn mean(&self) -> f64 {
        self.marginal().iter().map(|&(s, p)| s as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.marginal().iter().map(|&(s, p)| (s as f64 - m).powi(2) * p).sum()
    }

    /// Total variation distance on the joint `(S, Y)` support.
    pub fn tv(&self, other: &ExactDist) -> f64 {
        assert_eq!(self.n, other.n);
        let d: f64 = self
            .plus
            .iter()
            .zip(&other.plus)
            .chain(self.minus.iter().zip(&other.minus))
            .map(|(a, b)| (a - b).abs())
            .sum();
        0.5 * d
    }

    /// `((1 + S/n)/2, mass)` over the support, ascending.
    pub fn unit_marginal(&self) -> Vec<(f64, f64)> {
        let n = self.n as f64;
        self.marginal()
            .into_iter()
            .map(|(s, p)| ((1.0 + s as f64 / n) / 2.0, p))
            .collect()
    }
}

fn start_weights(s: &Schedule, y1: Option<Sign>) -> [(i8, f64); 2] {
    match y1 {
        Some(Sign::Plus) => [(1, 1.0), (-1, 0.0)],
        Some(Sign::Minus) => [(1, 0.0), (-1, 1.0)],
        None => [(1, 1.0 - s.first()), (-1, s.first())],
    }
}

/// Exact law by enumerating all `2^{n−1}` turn patterns.
pub fn brute_force_dist(s: &Schedule, n: usize, y1: Option<Sign>) -> Result<ExactDist, SimError> {
    if n == 0 {
        return Err(SimError::InvalidArgument("n must be at least 1".into()));
    }
    if n > BRUTE_FORCE_CAP {
        return Err(SimError::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    let probs = s.prob_table(n);
    let mut out = ExactDist::zeros(n);
    for (y_start, weight) in start_weights(s, y1) {
        if weight == 0.0 {
            continue;
        }
        for mask in 0u64..(1u64 << (n - 1)) {
            let mut prob = weight;
            let mut y = y_start;
            let mut sum = i64::from(y);
            for k in 2..=n {
                let p = probs[k];
                if mask >> (k - 2) & 1 == 1 {
                    prob *= p;
                    y = -y;
                } else {
                    prob *= 1.0 - p;
                }
                sum += i64::from(y);
            }
            let i = (sum + n as i64) as usize;
            if y > 0 {
                out.plus[i] += prob;
            } else {
                out.minus[i] += prob;
            }
        }
    }
    Ok(out)
}

/// Exact law by forward dynamic programming on `(S_k, Y_k)`.
pub fn dp_dist(s: &Schedule, n: usize, y1: Option<Sign>) -> Result<ExactDist, SimError> {
    if n == 0 {
        return Err(SimError::InvalidArgument("n must be at least 1".into()));
    }
    if n > DP_CAP {
        return Err(SimError::TooLarge { n, cap: DP_CAP });
    }
    let off = n as i64;
    let mut cur = ExactDist::zeros(n);
    for (y, w) in start_weights(s, y1) {
        let i = (i64::from(y) + off) as usize;
        if y > 0 {
            cur.plus[i] += w;
        } else {
            cur.minus[i] += w;
        }
    }
    let mut next = ExactDist::zeros(n);
    for k in 2..=n {
        let p = s.prob(k);
        let q = 1.0 - p;
        let reach = (k - 1) as i64;
        let lo = (off - reach) as usize;
        let hi = (off + reach) as usize;
        next.plus[lo.saturating_sub(1)..=(hi + 1).min(2 * n)].fill(0.0);
        next.minus[lo.saturating_sub(1)..=(hi + 1).min(2 * n)].fill(0.0);
        for i in lo..=hi {
            let (up, down) = (cur.plus[i], cur.minus[i]);
            if up == 0.0 && down == 0.0 {
                continue;
            }
            next.plus[i + 1] += up * q + down * p;
            next.minus[i - 1] += down * q + up * p;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RescaleMode {
    /// `S_{nt}/n` with linear interpolation.
    Cooling { scale: usize },
    /// `S_{Z(nt)}/√n`.
    Diffusive { scale: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledPath {
    pub mode: RescaleMode,
    pub samples: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Evaluates a rescaled version of `w` on `grid`.
pub fn rescaled_path(
    w: &WalkPath,
    s: &Schedule,
    mode: RescaleMode,
    grid: &[f64],
    opts: &CoeffOptions,
) -> Result<RescaledPath, SimError> {
    if let Some(&bad) = grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(SimError::InvalidArgument(format!("grid points must be nonnegative, got {bad}")));
    }
    let samples = match mode {
        RescaleMode::Cooling { scale } => {
            if scale == 0 {
                return Err(SimError::InvalidArgument("scale must be positive".into()));
            }
            let n = scale as f64;
            grid.iter()
                .map(|&t| Ok((t, interpolate(w, n * t)? / n)))
                .collect::<Result<Vec<_>, SimError>>()?
        }
        RescaleMode::Diffusive { scale } => {
            if scale == 0 {
                return Err(SimError::InvalidArgument("scale must be positive".into()));
            }
            let table = CoeffTable::covering(s, w.n, opts)?;
            let root = (scale as f64).sqrt();
            grid.iter()
                .map(|&t| {
                    let x = scale as f64 * t;
                    let z = if x <= 0.0 {
                        0
                    } else {
                        match table.first_reaching(x) {
                            Some(z) if z <= w.n => z,
                            _ => {
                                return Err(SimError::HorizonExceeded {
                                    needed: table.horizon().max(w.n) + 1,
                                    available: w.n,
                                })
                            }
                        }
                    };
                    Ok((t, w.sums[z] as f64 / root))
                })
                .collect::<Result<Vec<_>, SimError>>()?
        }
    };
    Ok(RescaledPath {
        mode,
        samples,
        seed: w.seed,
    })
}

/// `S` at real time `x` by linear interpolation; integer times are exact.
fn interpolate(w: &WalkPath, x: f64) -> Result<f64, SimError> {
    let r = x.round();
    let x = if (x - r).abs() < 1e-9 { r } else { x };
    if x > w.n as f64 {
        return Err(SimError::HorizonExceeded {
            needed: x.ceil() as usize,
            available: w.n,
        });
    }
    let k = x.floor() as usize;
    let frac = x - k as f64;
    if frac == 0.0 {
        Ok(w.sums[k] as f64)
    } else {
        Ok(w.sums[k] as f64 + frac * f64::from(w.signs[k]))
    }
}

/// `ξ_i = (−1)^{W_i} + 2p_i − 1`.
#[inline]
pub fn xi(turned: bool, p: f64) -> f64 {
    (if turned { -1.0 } else { 1.0 }) + 2.0 * p - 1.0
}

/// `Λ_n² = Σ_{i≤n} a_i² ξ_i²` along `w`.
pub fn lambda_sq(w: &WalkPath, s: &Schedule, table: &CoeffTable, n: usize) -> Result<f64, SimError> {
    if n > w.n {
        return Err(SimError::HorizonExceeded { needed: n, available: w.n });
    }
    if n > table.horizon() {
        return Err(SimError::HorizonExceeded {
            needed: n,
            available: table.horizon(),
        });
    }
    Ok((1..=n)
        .map(|i| {
            let a = table.a(i);
            let x = xi(w.turn(i), s.prob(i));
            a * a * x * x
        })
        .sum())
}

/// Ensemble of `Λ_n²` values; trial `t` matches [`trial_walk`] with no fixed start.
pub fn lambda_sq_ensemble(s: &Schedule, n: usize, trials: usize, master: u64, opts: &CoeffOptions) -> Result<Vec<f64>, SimError> {
    let table = CoeffTable::covering(s, n, opts)?;
    let probs = s.prob_table(n);
    let a_sq: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { table.a(i) * table.a(i) }).collect();
    Ok(run_trials(trials, master, |_, r| {
        let mut acc = 0.0;
        drive(&probs, n, r, None, |k, w, _| {
            let x = xi(w, probs[k]);
            acc += a_sq[k] * x * x;
        });
        acc
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DroginMethod {
    /// `4 sup a_i² ≤ nε`, so no term can pass the truncation.
    Envelope,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DroginReport {
    pub value: f64,
    pub method: DroginMethod,
    /// `Z(n)`, when computed.
    pub z: Option<usize>,
    /// Upper bound used for `sup a_i²`, when known.
    pub a_sq_bound: Option<f64>,
}

/// Closed-form bound on `sup_i a_i` where the schedule determines one.
fn a_envelope(s: &Schedule) -> Option<f64> {
    use crate::schedule::Family;
    match s.family() {
        Family::Constant { c } => Some(0.5 / c),
        // every p_k ≥ 1/2 from k = 2 on: a_n is a Leibniz series in [0, 1]
        _ if s.heating_onset() == Some(2) => Some(1.0),
        _ => None,
    }
}

/// Mean over trials of `(1/n) Σ_{i≤Z(n)} X_i² 1{X_i² > nε}` with `X_i² = a_i² ξ_i²`.
pub fn drogin_check(
    s: &Schedule,
    n: usize,
    eps: f64,
    trials: usize,
    master: u64,
    opts: &CoeffOptions,
) -> Result<DroginReport, SimError> {
    if !(eps > 0.0) || n == 0 || trials == 0 {
        return Err(SimError::InvalidArgument("need n ≥ 1, eps > 0, trials ≥ 1".into()));
    }
    let cut = n as f64 * eps;
    if let Some(b) = a_envelope(s) {
        if 4.0 * b * b <= cut {
            return Ok(DroginReport {
                value: 0.0,
                method: DroginMethod::Envelope,
                z: None,
                a_sq_bound: Some(b * b),
            });
        }
    }
    let z = exact::time_change(s, n as f64, opts)?;
    let table = CoeffTable::covering(s, z, opts)?;
    // only steps whose largest possible X_i² clears the cut need sampling
    let candidates: Vec<(usize, f64, f64)> = (1..=z)
        .filter_map(|i| {
            let p = s.prob(i);
            let a2 = table.a(i) * table.a(i);
            let max_xi = 2.0 * p.max(1.0 - p);
            (a2 * max_xi * max_xi > cut).then_some((i, p, a2))
        })
        .collect();
    let sums = run_trials(trials, master, |_, r| {
        let mut acc = 0.0;
        for &(_, p, a2) in &candidates {
            let x = xi(rng::bernoulli(r, p), p);
            let x2 = a2 * x * x;
            if x2 > cut {
                acc += x2;
            }
        }
        acc / n as f64
    });
    Ok(DroginReport {
        value: sums.iter().sum::<f64>() / trials as f64,
        method: DroginMethod::MonteCarlo,
        z: Some(z),
        a_sq_bound: Some(table.max_a_sq()),
    })
}

/// `#{1 ≤ k ≤ n : S_k = 0}`.
pub fn zero_hits(w: &WalkPath) -> usize {
    w.sums[1..].iter().filter(|&&s| s == 0).count()
}

/// Zero-hit counts per trial; trial `t` matches [`trial_walk`].
pub fn zero_hit_ensemble(s: &Schedule, n: usize, trials: usize, master: u64, y1: Option<Sign>) -> Vec<usize> {
    let probs = s.prob_table(n);
    run_trials(trials, master, |_, r| {
        let mut hits = 0;
        let mut sum = 0i64;
        drive(&probs, n, r, y1, |_, _, y| {
            sum += i64::from(y);
            if sum == 0 {
                hits += 1;
            }
        });
        hits
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Tail;

    #[test]
    fn deterministic_extremes() {
        let never = Schedule::custom(vec![0.0], Tail::Last).unwrap();
        let w = sample_walk(&never, 50, 9, Some(Sign::Plus));
        assert!(w.sums.iter().enumerate().all(|(k, &s)| s == k as i64));
        assert_eq!(zero_hits(&w), 0);
        let always = Schedule::custom(vec![1.0], Tail::Last).unwrap();
        let w = sample_walk(&always, 51, 9, Some(Sign::Minus));
        assert!((1..=25).all(|k| w.sum(2 * k) == 0));
        assert_eq!(zero_hits(&w), 25);
    }

    #[test]
    fn same_seed_same_path() {
        let s = Schedule::constant(0.3).unwrap();
        assert_eq!(sample_walk(&s, 200, 42, None), sample_walk(&s, 200, 42, None));
        assert_ne!(sample_walk(&s, 200, 42, None), sample_walk(&s, 200, 43, None));
    }

    #[test]
    fn endpoints_match_paths() {
        let s = Schedule::power_cooling(1.0, 0.5, 1).unwrap();
        let ends = sample_endpoints(&s, 300, 20, 5, None);
        for (t, e) in ends.iter().enumerate() {
            assert_eq!(*e, trial_walk(&s, 300, 5, t as u64, None).endpoint());
        }
        let hits = zero_hit_ensemble(&s, 300, 20, 5, None);
        for (t, h) in hits.iter().enumerate() {
            assert_eq!(*h, zero_hits(&trial_walk(&s, 300, 5, t as u64, None)));
        }
    }

    #[test]
    fn single_step_law() {
        let s = Schedule::constant(0.3).unwrap();
        let d = brute_force_dist(&s, 1, None).unwrap();
        assert_eq!(d.prob(1, Sign::Plus), 0.5);
        assert_eq!(d.prob(-1, Sign::Minus), 0.5);
        assert_eq!(d.prob(1, Sign::Minus), 0.0);
        assert!(brute_force_dist(&s, 23, None).is_err());
    }

    #[test]
    fn uniform_footnote_law() {
        let d = dp_dist(&Schedule::uniform_footnote(), 8, None).unwrap();
        for (_, p) in d.marginal() {
            assert!((p - 1.0 / 9.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cooling_rescale_on_ray() {
        let never = Schedule::custom(vec![0.0], Tail::Last).unwrap();
        let w = sample_walk(&never, 100, 1, Some(Sign::Plus));
        let grid: Vec<f64> = (0..=37).map(|i| f64::from(i) / 37.0).collect();
        let r = rescaled_path(&w, &never, RescaleMode::Cooling { scale: 100 }, &grid, &CoeffOptions::default()).unwrap();
        for (t, v) in r.samples {
            assert!((v - t).abs() < 1e-12);
        }
        assert!(rescaled_path(&w, &never, RescaleMode::Cooling { scale: 100 }, &[1.5], &CoeffOptions::default()).is_err());
    }

    #[test]
    fn lambda_sq_half() {
        let s = Schedule::constant(0.5).unwrap();
        let t = CoeffTable::build(&s, 64, &CoeffOptions::default()).unwrap();
        let w = sample_walk(&s, 64, 3, None);
        assert_eq!(lambda_sq(&w, &s, &t, 64).unwrap(), 64.0);
    }

    #[test]
    fn drogin_envelope() {
        let s = Schedule::constant(0.5).unwrap();
        let r = drogin_check(&s, 5, 1.0, 10, 1, &CoeffOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.method, DroginMethod::Envelope);
    }
}
