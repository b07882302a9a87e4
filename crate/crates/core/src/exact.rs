//! Exactly computable quantities of the walk.
//!
//! `e_{i,j} = Π_{k=i+1}^{j} (1 − 2p_k)` is the step correlation `E(Y_i Y_j)`,
//! `a_n = Σ_{i≥0} e_{n,n+i}` the martingale coefficient, and
//! `v_m = Σ_{i≤m} 4 a_i² p_i q_i` the cumulative martingale variance.
//!
//! Coefficient tables are anchored at a power-of-two horizon and filled by the
//! backward recursion `a_n = 1 + (1 − 2p_{n+1}) a_{n+1}`, which damps the
//! anchor's truncation error by `|e_{n,N}|`. Every consumer of `a_i` or `v_i`
//! goes through the same anchoring, so cached and uncached results agree bit
//! for bit.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::schedule::{Family, Schedule};
use crate::Sign;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExactError {
    #[error("coefficient series a_{n} diverges (partial sum {partial:e})")]
    Divergent { n: usize, partial: f64 },
    #[error("v_m stays below {x} up to m = {horizon} (v = {plateau})")]
    NonDivergentVariance { x: f64, plateau: f64, horizon: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `e_{i,j}`; requires `1 ≤ i ≤ j`.
pub fn corr(s: &Schedule, i: usize, j: usize) -> f64 {
    assert!(i >= 1 && i <= j, "corr needs 1 <= i <= j, got ({i}, {j})");
    let mut e = 1.0;
    for k in (i + 1)..=j {
        e *= 1.0 - 2.0 * s.prob(k);
    }
    e
}

/// `P(Y_n = +1 | Y_1 = y1)`.
pub fn head_prob(s: &Schedule, n: usize, y1: Sign) -> f64 {
    assert!(n >= 1);
    0.5 + 0.5 * y1.as_f64() * corr(s, 1, n)
}

/// `Σ min(p_n, q_n) = ∞`. Every closed-form family diverges; only schedules
/// that settle on `{0, 1}` are non-mixing.
pub fn classify_mixing(s: &Schedule) -> bool {
    s.settled_from().is_none()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RhoOutcome {
    Converged { rho: f64, tail_bound: f64, terms: usize },
    /// The product tends to 0 (mixing, or a factor vanishes).
    Zero,
    /// Infinitely many `p_i > 1/2`: partial products keep flipping sign.
    Undefined,
}

/// `ρ = Π_{i≥2} (1 − 2p_i)`, truncated once the tail's log-bound is below `tol`.
pub fn rho(s: &Schedule, tol: f64) -> Result<RhoOutcome, ExactError> {
    if !(tol > 0.0) {
        return Err(ExactError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let Some((settle, turns_forever)) = s.settled_from() else {
        return Ok(RhoOutcome::Zero);
    };
    if turns_forever {
        return Ok(RhoOutcome::Undefined);
    }
    // beyond `settle` every factor is 1; bound |ln Π_{k>m}| by Σ 2p/(1−2p)
    let factors: Vec<f64> = (2..=settle).map(|k| 1.0 - 2.0 * s.prob(k)).collect();
    if factors.contains(&0.0) {
        return Ok(RhoOutcome::Zero);
    }
    let mut suffix = vec![0.0; factors.len() + 1];
    for i in (0..factors.len()).rev() {
        let f = factors[i].abs();
        suffix[i] = suffix[i + 1] + (1.0 - f) / f;
    }
    let mut prod = 1.0;
    let mut terms = 0;
    for (i, &f) in factors.iter().enumerate() {
        if suffix[i] < tol && factors[i..].iter().all(|&g| g > 0.0) {
            break;
        }
        prod *= f;
        terms += 1;
    }
    Ok(RhoOutcome::Converged {
        rho: prod,
        tail_bound: suffix[terms],
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErgodicCase {
    Half,
    RhoLimit,
    NoLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicVerdict {
    pub case: ErgodicCase,
    pub rho: Option<f64>,
    /// `#{2 ≤ i ≤ horizon : p_i > 1/2}`.
    pub turns_above_half: usize,
    /// Whether `p_i > 1/2` infinitely often.
    pub infinite: bool,
    /// `exp(−2 Σ_{2≤i≤horizon} min(p_i, q_i))`.
    pub speed_proxy: f64,
}

impl ErgodicVerdict {
    /// `lim_n P(Y_n = 1 | Y_1 = y1)`, when it exists.
    pub fn limit(&self, y1: Sign) -> Option<f64> {
        match self.case {
            ErgodicCase::Half => Some(0.5),
            ErgodicCase::RhoLimit => Some(0.5 * (1.0 + y1.as_f64() * self.rho.unwrap_or(0.0))),
            ErgodicCase::NoLimit => None,
        }
    }
}

pub fn ergodic_verdict(s: &Schedule, horizon: usize) -> ErgodicVerdict {
    let mut above = 0;
    let mut sum_min = 0.0;
    for i in 2..=horizon {
        let p = s.prob(i);
        if p > 0.5 {
            above += 1;
        }
        sum_min += p.min(1.0 - p);
    }
    let speed_proxy = (-2.0 * sum_min).exp();
    let settled = s.settled_from();
    let infinite = match settled {
        Some((_, turns)) => turns,
        None => s.heating_onset().is_some(),
    };
    let (case, rho_value) = match rho(s, 1e-15).expect("positive tol") {
        RhoOutcome::Zero => (ErgodicCase::Half, Some(0.0)),
        RhoOutcome::Converged { rho, .. } => (ErgodicCase::RhoLimit, Some(rho)),
        RhoOutcome::Undefined => (ErgodicCase::NoLimit, None),
    };
    ErgodicVerdict {
        case,
        rho: rho_value,
        turns_above_half: above,
        infinite,
        speed_proxy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffOptions {
    pub tol: f64,
    pub max_terms: usize,
    /// Partial sums beyond this signal divergence.
    pub divergence_cap: f64,
    /// Largest table horizon the time-change search may build.
    pub max_horizon: usize,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        CoeffOptions {
            tol: 1e-6,
            max_terms: 1 << 28,
            divergence_cap: 1e8,
            max_horizon: 1 << 22,
        }
    }
}

impl CoeffOptions {
    pub fn with_tol(tol: f64) -> Self {
        CoeffOptions {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleCoeffs {
    pub n: usize,
    pub a: f64,
    pub error_bound: f64,
    pub converged: bool,
    pub terms: usize,
}

/// `a_n` by direct summation of `e_{n,n+k}`.
///
/// Terms following a negative factor use the alternating rule (stop once the
/// next term is below `tol`, which bounds the error). Otherwise the positive
/// rule stops when both the term and the geometric tail estimate
/// `term / (2 p_{n+k})` fall below `tol · sum`.
pub fn a_coeff(s: &Schedule, n: usize, opts: &CoeffOptions) -> Result<MartingaleCoeffs, ExactError> {
    if n < 1 {
        return Err(ExactError::InvalidArgument("n must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(ExactError::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    if s.a_series_diverges() {
        return Err(ExactError::Divergent {
            n,
            partial: f64::INFINITY,
        });
    }
    let mut sum = 1.0;
    let mut e = 1.0;
    for k in 1..=opts.max_terms {
        let p = s.prob(n + k);
        let f = 1.0 - 2.0 * p;
        let next = e * f;
        if next == 0.0 {
            return Ok(MartingaleCoeffs {
                n,
                a: sum,
                error_bound: 0.0,
                converged: true,
                terms: k - 1,
            });
        }
        if f < 0.0 && next.abs() < opts.tol {
            return Ok(MartingaleCoeffs {
                n,
                a: sum,
                error_bound: next.abs(),
                converged: true,
                terms: k - 1,
            });
        }
        sum += next;
        e = next;
        if sum.abs() > opts.divergence_cap {
            return Err(ExactError::Divergent { n, partial: sum });
        }
        if f > 0.0 {
            let tail = next / (2.0 * p);
            let scale = opts.tol * sum.abs();
            if next.abs() < scale && tail.abs() < scale {
                return Ok(MartingaleCoeffs {
                    n,
                    a: sum,
                    error_bound: tail.abs(),
                    converged: true,
                    terms: k,
                });
            }
        }
    }
    Ok(MartingaleCoeffs {
        n,
        a: sum,
        error_bound: f64::INFINITY,
        converged: false,
        terms: opts.max_terms,
    })
}

/// Closed forms for `a_n` where the series is known exactly.
fn closed_form_a(s: &Schedule, n: usize) -> Option<f64> {
    match s.family() {
        // Π_{k=n+1}^{m} (1 − 2c/k) telescopes against n/(2c − 1)
        Family::CriticalCooling { c, n0 } if *c > 0.5 && n >= *n0 && n as f64 >= *c => Some(n as f64 / (2.0 * c - 1.0)),
        Family::Constant { c } => Some(0.5 / c),
        _ => None,
    }
}

/// `a_i`, their error bounds, and `v_i` for `1 ≤ i ≤ horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    horizon: usize,
    a: Vec<f64>,
    err: Vec<f64>,
    v: Vec<f64>,
    anchor: MartingaleCoeffs,
}

impl CoeffTable {
    /// Table anchored exactly at `horizon`.
    pub fn build(s: &Schedule, horizon: usize, opts: &CoeffOptions) -> Result<Self, ExactError> {
        let horizon = horizon.max(1);
        let anchor = match closed_form_a(s, horizon) {
            Some(a) => MartingaleCoeffs {
                n: horizon,
                a,
                error_bound: 0.0,
                converged: true,
                terms: 0,
            },
            None => a_coeff(s, horizon, opts)?,
        };
        let mut a = vec![0.0; horizon + 1];
        let mut err = vec![0.0; horizon + 1];
        a[horizon] = anchor.a;
        err[horizon] = anchor.error_bound;
        for i in (1..horizon).rev() {
            let f = 1.0 - 2.0 * s.prob(i + 1);
            a[i] = 1.0 + f * a[i + 1];
            err[i] = f.abs() * err[i + 1];
        }
        let mut v = vec![0.0; horizon + 1];
        for i in 1..=horizon {
            let p = s.prob(i);
            v[i] = v[i - 1] + 4.0 * a[i] * a[i] * p * (1.0 - p);
        }
        Ok(CoeffTable {
            horizon,
            a,
            err,
            v,
            anchor,
        })
    }

    /// Table covering `m`, anchored at the power-of-two level above it.
    pub fn covering(s: &Schedule, m: usize, opts: &CoeffOptions) -> Result<Self, ExactError> {
        Self::build(s, level_for(m), opts)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn a(&self, i: usize) -> f64 {
        self.a[i]
    }

    pub fn error_bound(&self, i: usize) -> f64 {
        self.err[i]
    }

    /// `v_m`, with `v_0 = 0`.
    pub fn v(&self, m: usize) -> f64 {
        self.v[m]
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    pub fn anchor(&self) -> &MartingaleCoeffs {
        &self.anchor
    }

    /// `max_{i ≤ horizon} a_i²`.
    pub fn max_a_sq(&self) -> f64 {
        self.a[1..].iter().map(|a| a * a).fold(0.0, f64::max)
    }

    /// Smallest `n ≤ horizon` with `v_n ≥ x`.
    pub fn first_reaching(&self, x: f64) -> Option<usize> {
        if x <= 0.0 {
            return Some(1);
        }
        let idx = self.v[1..].partition_point(|&v| v < x) + 1;
        (idx <= self.horizon).then_some(idx)
    }
}

const MIN_LEVEL: usize = 64;

fn level_for(m: usize) -> usize {
    m.max(MIN_LEVEL).next_power_of_two()
}

/// Memoized coefficient tables keyed by schedule, tolerance and level.
/// Readers share tables; a level is filled at most once per key and the fill
/// is deterministic, so concurrent use matches sequential use.
#[derive(Debug, Default)]
pub struct CoeffCache {
    tables: RwLock<HashMap<(String, u64, usize), Arc<CoeffTable>>>,
}

impl CoeffCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self, s: &Schedule, m: usize, opts: &CoeffOptions) -> Result<Arc<CoeffTable>, ExactError> {
        let key = (s.to_config(), opts.tol.to_bits(), level_for(m));
        if let Some(t) = self.tables.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(CoeffTable::build(s, key.2, opts)?);
        let mut w = self.tables.write().expect("cache lock");
        Ok(Arc::clone(w.entry(key).or_insert(built)))
    }
}

/// `v_m`.
pub fn v_cum(s: &Schedule, m: usize, opts: &CoeffOptions) -> Result<f64, ExactError> {
    if m == 0 {
        return Ok(0.0);
    }
    Ok(CoeffTable::covering(s, m, opts)?.v(m))
}

/// `Z(x) = inf{n ≥ 1 : v_n ≥ x}` by doubling the table horizon.
pub fn time_change(s: &Schedule, x: f64, opts: &CoeffOptions) -> Result<usize, ExactError> {
    if !(x >= 0.0) {
        return Err(ExactError::InvalidArgument(format!("x must be nonnegative, got {x}")));
    }
    let mut level = MIN_LEVEL;
    loop {
        let t = CoeffTable::build(s, level, opts)?;
        if let Some(z) = t.first_reaching(x) {
            return Ok(z);
        }
        if level >= opts.max_horizon {
            return Err(ExactError::NonDivergentVariance {
                x,
                plateau: t.v(level),
                horizon: level,
            });
        }
        level *= 2;
    }
}

/// Exact moments of `S_m` and the martingale variance at `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceLedger {
    pub m: usize,
    pub v_m: f64,
    /// `Var(S_m)`.
    pub sigma2_m: f64,
    /// `E S_m²`.
    pub second_moment: f64,
    pub mean: f64,
    /// `r_m = Σ_{i<m} e_{i,m}`.
    pub r_m: f64,
}

struct Moments {
    mean: f64,
    second: f64,
    r: f64,
}

fn moments(s: &Schedule, n: usize) -> Moments {
    let mut r = 0.0;
    let mut second = 1.0;
    let mut ey = 1.0 - 2.0 * s.prob(1);
    let mut mean = ey;
    for k in 2..=n {
        let f = 1.0 - 2.0 * s.prob(k);
        r = (1.0 + r) * f;
        second += 1.0 + 2.0 * r;
        ey *= f;
        mean += ey;
    }
    Moments { mean, second, r }
}

/// `Var(S_n)` in O(n) via the row sums `r_n = (1 + r_{n−1})(1 − 2p_n)`.
/// `E Y_1 = 1 − 2p_1`, so the mean vanishes under the default symmetric start.
pub fn variance_exact(s: &Schedule, n: usize) -> f64 {
    assert!(n >= 1);
    let m = moments(s, n);
    m.second - m.mean * m.mean
}

/// `Var(S_1), …, Var(S_n)` at index `1..=n`; index 0 holds 0.
pub fn variance_series(s: &Schedule, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let (mut r, mut second) = (0.0, 0.0);
    let mut ey = 1.0 - 2.0 * s.prob(1);
    let mut mean = 0.0;
    for k in 1..=n {
        if k >= 2 {
            let f = 1.0 - 2.0 * s.prob(k);
            r = (1.0 + r) * f;
            ey *= f;
        }
        second += 1.0 + 2.0 * r;
        mean += ey;
        out.push(second - mean * mean);
    }
    out
}

pub fn variance_ledger(s: &Schedule, m: usize, opts: &CoeffOptions) -> Result<VarianceLedger, ExactError> {
    let mo = moments(s, m.max(1));
    Ok(VarianceLedger {
        m,
        v_m: v_cum(s, m, opts)?,
        sigma2_m: mo.second - mo.mean * mo.mean,
        second_moment: mo.second,
        mean: mo.mean,
        r_m: mo.r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleDiag {
    pub n: usize,
    pub a_n: f64,
    pub v_n: f64,
    /// `a_n² / v_n`.
    pub ratio: f64,
    /// `1 − a_n`.
    pub gap: f64,
}

pub fn martingale_diag(s: &Schedule, n: usize, opts: &CoeffOptions) -> Result<MartingaleDiag, ExactError> {
    let t = CoeffTable::covering(s, n, opts)?;
    Ok(diag_from(&t, n))
}

pub fn diag_from(t: &CoeffTable, n: usize) -> MartingaleDiag {
    let (a_n, v_n) = (t.a(n), t.v(n));
    MartingaleDiag {
        n,
        a_n,
        v_n,
        ratio: a_n * a_n / v_n,
        gap: 1.0 - a_n,
    }
}
