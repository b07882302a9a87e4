//! The zigzag process on `[0, T]`.
//!
//! Turning points form a Poisson point process with intensity `c/x`. The map
//! `Φ_t` colors the segments between consecutive atoms alternately, starting
//! with an increasing segment at the anchor `t`, and integrates the colors;
//! a fair global sign `W` finishes the path. Atoms below `ε` are not
//! generated: the segment `(0, a_1)` keeps the alternation going, which puts
//! the path within `2·min(t, ε)` of the untruncated one.

use rand::Rng;
use rand_distr::Exp;
use serde::Serialize;

use crate::rng::{self, TrialRng};
use crate::simulate::run_trials;
use crate::Sign;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ZigzagError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("anchor {t} outside ({eps}, {horizon}]")]
    AnchorOutOfRange { t: f64, eps: f64, horizon: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
}

/// Atoms of one truncated PPP realization, ascending in `(ε, T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMeasure {
    pub atoms: Vec<f64>,
    pub epsilon: f64,
    pub horizon: f64,
    pub intensity: f64,
    pub seed: u64,
}

impl PointMeasure {
    /// Number of atoms in `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.atoms.partition_point(|&x| x <= b) - self.atoms.partition_point(|&x| x <= a)
    }

    /// Number of atoms `≤ x`; segment `[a_j, a_{j+1})` has index `j`.
    fn index(&self, x: f64) -> usize {
        self.atoms.partition_point(|&a| a <= x)
    }
}

fn check(c: f64, horizon: f64, eps: f64) -> Result<(), ZigzagError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ZigzagError::InvalidParameters(format!("intensity must be positive, got {c}")));
    }
    if !(eps > 0.0 && eps < horizon && horizon.is_finite()) {
        return Err(ZigzagError::InvalidParameters(format!(
            "need 0 < eps < T, got eps = {eps}, T = {horizon}"
        )));
    }
    Ok(())
}

pub fn sample_ppp(c: f64, horizon: f64, eps: f64, seed: u64) -> Result<PointMeasure, ZigzagError> {
    let mut r = rng::seeded(seed);
    sample_ppp_with(&mut r, c, horizon, eps, seed)
}

/// In `u = ln x` the process is homogeneous with rate `c`, so atoms are
/// `T·exp(−(G_1 + … + G_k))` with `G_i ~ Exp(c)`.
fn sample_ppp_with(r: &mut TrialRng, c: f64, horizon: f64, eps: f64, seed: u64) -> Result<PointMeasure, ZigzagError> {
    check(c, horizon, eps)?;
    let gap = Exp::new(c).map_err(|e| ZigzagError::InvalidParameters(e.to_string()))?;
    let floor = (horizon / eps).ln();
    let mut depth = 0.0;
    let mut atoms = Vec::new();
    loop {
        depth += r.sample(gap);
        if depth >= floor {
            break;
        }
        atoms.push(horizon * (-depth).exp());
    }
    atoms.reverse();
    // ties are possible only through rounding; keep the sequence strict
    atoms.dedup();
    atoms.retain(|&x| x > eps && x <= horizon);
    Ok(PointMeasure {
        atoms,
        epsilon: eps,
        horizon,
        intensity: c,
        seed,
    })
}

/// `Φ_t(μ)(r)`: the slope-±1 path through the origin that increases on the
/// segment containing `t`.
pub fn phi(pm: &PointMeasure, t: f64, r: f64) -> Result<f64, ZigzagError> {
    if !(t > pm.epsilon && t <= pm.horizon) {
        return Err(ZigzagError::AnchorOutOfRange {
            t,
            eps: pm.epsilon,
            horizon: pm.horizon,
        });
    }
    if !(0.0..=pm.horizon).contains(&r) {
        return Err(ZigzagError::TimeOutOfRange { t: r, horizon: pm.horizon });
    }
    let anchor = pm.index(t);
    let mut value = 0.0;
    let mut left = 0.0;
    for (j, &right) in pm.atoms.iter().enumerate() {
        if left >= r {
            break;
        }
        value += segment_sign(j, anchor) * (right.min(r) - left);
        left = right;
    }
    if left < r {
        value += segment_sign(pm.atoms.len(), anchor) * (r - left);
    }
    Ok(value)
}

#[inline]
fn segment_sign(j: usize, anchor: usize) -> f64 {
    if j.abs_diff(anchor) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A sampled zigzag path with knot values precomputed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZigzagPath {
    pub pm: PointMeasure,
    pub w: Sign,
    pub anchor: f64,
    /// `Φ` at `0, a_1, …, a_m` before applying `W`.
    knots: Vec<f64>,
}

impl ZigzagPath {
    pub fn new(pm: PointMeasure, w: Sign) -> Self {
        let anchor = pm.atoms.last().copied().unwrap_or(pm.horizon);
        let top = pm.atoms.len();
        let mut knots = Vec::with_capacity(top + 1);
        knots.push(0.0);
        let mut left = 0.0;
        let mut value = 0.0;
        for (j, &a) in pm.atoms.iter().enumerate() {
            value += segment_sign(j, top) * (a - left);
            knots.push(value);
            left = a;
        }
        ZigzagPath { pm, w, anchor, knots }
    }

    /// `X_t`.
    pub fn eval(&self, t: f64) -> Result<f64, ZigzagError> {
        if !(0.0..=self.pm.horizon).contains(&t) {
            return Err(ZigzagError::TimeOutOfRange { t, horizon: self.pm.horizon });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        let j = self.pm.index(t);
        let left = if j == 0 { 0.0 } else { self.pm.atoms[j - 1] };
        let v = self.knots[j] + segment_sign(j, self.pm.atoms.len()) * (t - left);
        self.w.as_f64() * v
    }

    /// Worst-case distance at `t` to the path with every atom below `ε` present.
    pub fn truncation_bound(&self, t: f64) -> f64 {
        2.0 * t.min(self.pm.epsilon)
    }

    /// Sign changes of `X` on `[t0, t1]`.
    pub fn zeros(&self, t0: f64, t1: f64) -> Result<usize, ZigzagError> {
        if !(0.0 <= t0 && t0 < t1 && t1 <= self.pm.horizon) {
            return Err(ZigzagError::InvalidParameters(format!(
                "need 0 <= t0 < t1 <= T, got [{t0}, {t1}]"
            )));
        }
        let lo = self.pm.index(t0);
        let hi = self.pm.atoms.partition_point(|&a| a < t1);
        let inner = self.pm.atoms[lo..hi].iter().map(|&a| self.eval_unchecked(a));
        let mut count = 0;
        let mut last = 0.0f64;
        for v in std::iter::once(self.eval_unchecked(t0))
            .chain(inner)
            .chain(std::iter::once(self.eval_unchecked(t1)))
        {
            if v != 0.0 {
                if last != 0.0 && v.signum() != last.signum() {
                    count += 1;
                }
                last = v;
            }
        }
        Ok(count)
    }
}

pub fn sample_zigzag(c: f64, horizon: f64, eps: f64, seed: u64) -> Result<ZigzagPath, ZigzagError> {
    let mut r = rng::seeded(seed);
    sample_zigzag_with(&mut r, c, horizon, eps, seed)
}

fn sample_zigzag_with(r: &mut TrialRng, c: f64, horizon: f64, eps: f64, seed: u64) -> Result<ZigzagPath, ZigzagError> {
    let pm = sample_ppp_with(r, c, horizon, eps, seed)?;
    let w = if rng::bernoulli(r, 0.5) { Sign::Minus } else { Sign::Plus };
    Ok(ZigzagPath::new(pm, w))
}

/// Path of trial `t` in an ensemble with master seed `master`.
pub fn trial_zigzag(c: f64, horizon: f64, eps: f64, master: u64, trial: u64) -> Result<ZigzagPath, ZigzagError> {
    sample_zigzag(c, horizon, eps, rng::trial_seed(master, trial))
}

/// Applies `f` to every trial path, in trial order.
pub fn zigzag_ensemble<T, F>(c: f64, horizon: f64, eps: f64, trials: usize, master: u64, f: F) -> Result<Vec<T>, ZigzagError>
where
    T: Send,
    F: Fn(&ZigzagPath) -> T + Sync,
{
    check(c, horizon, eps)?;
    Ok(run_trials(trials, master, |t, _| {
        let z = trial_zigzag(c, horizon, eps, master, t).expect("parameters checked");
        f(&z)
    }))
}

/// Turn counts of the critical walk `p_k = c/k ∧ 1` in steps
/// `⌈a n⌉ + 1 ..= ⌈b n⌉`, one vector per window, one entry per trial.
pub fn walk_turn_counts_windows(
    c: f64,
    n: usize,
    windows: &[(f64, f64)],
    trials: usize,
    master: u64,
) -> Result<Vec<Vec<u64>>, ZigzagError> {
    if !(c > 0.0) || n == 0 {
        return Err(ZigzagError::InvalidParameters("need c > 0 and n >= 1".into()));
    }
    let ranges: Vec<(usize, usize)> = windows
        .iter()
        .map(|&(a, b)| {
            if !(0.0 <= a && a < b) {
                return Err(ZigzagError::InvalidParameters(format!("bad window ({a}, {b}]")));
            }
            Ok(((a * n as f64).ceil() as usize + 1, (b * n as f64).ceil() as usize))
        })
        .collect::<Result<_, _>>()?;
    let lo = ranges.iter().map(|r| r.0).min().unwrap_or(1).max(1);
    let hi = ranges.iter().map(|r| r.1).max().unwrap_or(0);
    let probs: Vec<f64> = (lo..=hi).map(|k| (c / k as f64).min(1.0)).collect();
    let per_trial = run_trials(trials, master, |_, r| {
        let mut counts = vec![0u64; ranges.len()];
        for (offset, &p) in probs.iter().enumerate() {
            if rng::bernoulli(r, p) {
                let k = lo + offset;
                for (slot, &(a, b)) in counts.iter_mut().zip(&ranges) {
                    if (a..=b).contains(&k) {
                        *slot += 1;
                    }
                }
            }
        }
        counts
    });
    let mut out = vec![Vec::with_capacity(trials); ranges.len()];
    for counts in per_trial {
        for (col, v) in out.iter_mut().zip(counts) {
            col.push(v);
        }
    }
    Ok(out)
}

pub fn walk_turn_counts(c: f64, n: usize, a: f64, b: f64, trials: usize, master: u64) -> Result<Vec<u64>, ZigzagError> {
    Ok(walk_turn_counts_windows(c, n, &[(a, b)], trials, master)?.remove(0))
}
