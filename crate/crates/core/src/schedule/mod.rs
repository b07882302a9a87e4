//! Turning-probability schedules `n ↦ p_n`.
//!
//! Every schedule evaluates `p_1` from its `first` field (default `1/2`, the
//! symmetric start) and `p_n` for `n ≥ 2` from the family formula. Families
//! with a start index `n0` return `1/2` below it, and formulas that leave
//! `[0, 1]` are clamped.

mod classify;
mod config;

pub use classify::{classify, classify_with, ClassifyOptions, Diagnostics, Mixing, Regime, RegimeVerdict};
pub use config::ConfigMap;

use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("schedule config: {0}")]
    Config(String),
    #[error("schedule table: {0}")]
    Table(String),
}

/// Continuation rule for a [`Family::CustomTable`] past its last row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Constant(f64),
    /// Repeat the last tabulated value.
    Last,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `p_n = c`.
    Constant { c: f64 },
    /// `p_n = a / n^γ` for `n ≥ n0`.
    PowerCooling { a: f64, gamma: f64, n0: usize },
    /// `p_n = c / n` for `n ≥ n0`.
    CriticalCooling { c: f64, n0: usize },
    /// `p_n = 1 − c / n` for `n ≥ n0`.
    HarmonicHeating { c: f64, n0: usize },
    /// `p_n = 1 − c / (2 n^γ)` for `n ≥ n0`.
    PowerHeating { c: f64, gamma: f64, n0: usize },
    /// Even indices follow `even`, odd indices follow `odd`.
    EvenOdd { even: Box<Schedule>, odd: Box<Schedule> },
    /// `p_i = ln k / (2·k!)` for `k! < i ≤ (k+1)!`.
    FactorialCounterexample,
    /// `p_n = 1/(n+1)`; makes `S_N/N` exactly uniform on its support.
    UniformFootnote,
    /// `values[i]` is `p_{i+2}`; `tail` continues the sequence.
    CustomTable { values: Vec<f64>, tail: Tail },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    family: Family,
    first: f64,
}

const HALF: f64 = 0.5;

fn check_unit_open(name: &'static str, v: f64) -> Result<(), ScheduleError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ScheduleError::InvalidParameter {
            name,
            value: v,
            reason: "must lie in (0, 1)",
        })
    }
}

fn check_unit_closed(name: &'static str, v: f64) -> Result<(), ScheduleError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ScheduleError::InvalidParameter {
            name,
            value: v,
            reason: "must lie in [0, 1]",
        })
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<(), ScheduleError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScheduleError::InvalidParameter {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

fn check_n0(n0: usize) -> Result<(), ScheduleError> {
    if n0 >= 1 {
        Ok(())
    } else {
        Err(ScheduleError::InvalidParameter {
            name: "n0",
            value: 0.0,
            reason: "must be at least 1",
        })
    }
}

/// `k!` as a float, exact for `k ≤ 22`.
fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl Schedule {
    fn new(family: Family) -> Self {
        Schedule { family, first: HALF }
    }

    pub fn constant(c: f64) -> Result<Self, ScheduleError> {
        check_unit_open("c", c)?;
        Ok(Self::new(Family::Constant { c }))
    }

    pub fn power_cooling(a: f64, gamma: f64, n0: usize) -> Result<Self, ScheduleError> {
        check_positive("a", a)?;
        check_unit_open("gamma", gamma)?;
        check_n0(n0)?;
        Ok(Self::new(Family::PowerCooling { a, gamma, n0 }))
    }

    pub fn critical_cooling(c: f64, n0: usize) -> Result<Self, ScheduleError> {
        check_positive("c", c)?;
        check_n0(n0)?;
        Ok(Self::new(Family::CriticalCooling { c, n0 }))
    }

    pub fn harmonic_heating(c: f64, n0: usize) -> Result<Self, ScheduleError> {
        check_positive("c", c)?;
        check_n0(n0)?;
        Ok(Self::new(Family::HarmonicHeating { c, n0 }))
    }

    pub fn power_heating(c: f64, gamma: f64, n0: usize) -> Result<Self, ScheduleError> {
        check_positive("c", c)?;
        check_unit_open("gamma", gamma)?;
        check_n0(n0)?;
        Ok(Self::new(Family::PowerHeating { c, gamma, n0 }))
    }

    pub fn even_odd(even: Schedule, odd: Schedule) -> Self {
        Self::new(Family::EvenOdd {
            even: Box::new(even),
            odd: Box::new(odd),
        })
    }

    pub fn factorial_counterexample() -> Self {
        Self::new(Family::FactorialCounterexample)
    }

    pub fn uniform_footnote() -> Self {
        Self::new(Family::UniformFootnote)
    }

    /// Table of `p_2, p_3, …` continued by `tail`.
    pub fn custom(values: Vec<f64>, tail: Tail) -> Result<Self, ScheduleError> {
        for &v in &values {
            check_unit_closed("p_n", v)?;
        }
        match tail {
            Tail::Constant(v) => check_unit_closed("tail", v)?,
            Tail::Last if values.is_empty() => {
                return Err(ScheduleError::Table("tail=last needs at least one row".into()))
            }
            Tail::Last => {}
        }
        Ok(Self::new(Family::CustomTable { values, tail }))
    }

    /// Overrides `p_1`.
    pub fn with_first(mut self, first: f64) -> Result<Self, ScheduleError> {
        check_unit_closed("first", first)?;
        self.first = first;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn first(&self) -> f64 {
        self.first
    }

    /// Turning probability `p_n`, `n ≥ 1`.
    pub fn prob(&self, n: usize) -> f64 {
        debug_assert!(n >= 1, "schedules are indexed from 1");
        if n <= 1 {
            self.first
        } else {
            self.family.prob(n)
        }
    }

    /// `q_n = 1 − p_n`.
    pub fn q(&self, n: usize) -> f64 {
        1.0 - self.prob(n)
    }

    /// `A_n = n·p_n`.
    pub fn scaled_prob(&self, n: usize) -> f64 {
        n as f64 * self.prob(n)
    }

    /// `p_k` for `k = 0..=n`; index 0 is unused and holds 0.
    pub fn prob_table(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        out.extend((1..=n).map(|k| self.prob(k)));
        out
    }

    /// Smallest `K ≥ 2` with `p_k ≥ 1/2` for every `k ≥ K`, when the family
    /// determines it.
    pub fn heating_onset(&self) -> Option<usize> {
        // below n0 the families sit at 1/2, which counts as heating here
        let onset_for = |n0: usize, threshold: f64| -> usize {
            if n0 as f64 >= threshold {
                2
            } else {
                (threshold.ceil() as usize).max(2)
            }
        };
        match &self.family {
            Family::Constant { c } => (*c >= HALF).then_some(2),
            Family::HarmonicHeating { c, n0 } => Some(onset_for(*n0, 2.0 * c)),
            Family::PowerHeating { c, gamma, n0 } => Some(onset_for(*n0, c.powf(1.0 / gamma))),
            Family::EvenOdd { even, odd } => Some(even.heating_onset()?.max(odd.heating_onset()?)),
            Family::CustomTable { values, tail } => {
                if self.tail_value(values, *tail) < HALF {
                    return None;
                }
                let last_low = values.iter().rposition(|&p| p < HALF);
                Some(last_low.map_or(2, |i| i + 3))
            }
            Family::PowerCooling { .. }
            | Family::CriticalCooling { .. }
            | Family::FactorialCounterexample
            | Family::UniformFootnote => None,
        }
    }

    /// Index `L` past which every `p_k ∈ {0, 1}`, together with whether
    /// turns (`p_k = 1`) keep occurring beyond it.
    pub fn settled_from(&self) -> Option<(usize, bool)> {
        match &self.family {
            Family::CustomTable { values, tail } => {
                let t = self.tail_value(values, *tail);
                (t == 0.0 || t == 1.0).then_some((values.len() + 1, t == 1.0))
            }
            Family::EvenOdd { even, odd } => {
                let (le, fe) = even.settled_from()?;
                let (lo, fo) = odd.settled_from()?;
                Some((le.max(lo), fe || fo))
            }
            _ => None,
        }
    }

    /// Whether `a_n = Σ_i e_{n,n+i}` is known to diverge for every `n`.
    pub fn a_series_diverges(&self) -> bool {
        match &self.family {
            // e_{n,m} ~ (n/m)^{2c}, summable only for 2c > 1
            Family::CriticalCooling { c, .. } => *c <= HALF,
            _ => self.settled_from().is_some(),
        }
    }

    fn tail_value(&self, values: &[f64], tail: Tail) -> f64 {
        match tail {
            Tail::Constant(v) => v,
            Tail::Last => *values.last().expect("validated non-empty"),
        }
    }
}

impl Family {
    fn prob(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            Family::Constant { c } => *c,
            Family::PowerCooling { a, gamma, n0 } => {
                if n < *n0 {
                    HALF
                } else {
                    (a / x.powf(*gamma)).min(1.0)
                }
            }
            Family::CriticalCooling { c, n0 } => {
                if n < *n0 {
                    HALF
                } else {
                    (c / x).min(1.0)
                }
            }
            Family::HarmonicHeating { c, n0 } => {
                if n < *n0 {
                    HALF
                } else {
                    (1.0 - c / x).max(0.0)
                }
            }
            Family::PowerHeating { c, gamma, n0 } => {
                if n < *n0 {
                    HALF
                } else {
                    (1.0 - c / (2.0 * x.powf(*gamma))).max(0.0)
                }
            }
            Family::EvenOdd { even, odd } => {
                if n % 2 == 0 {
                    even.prob(n)
                } else {
                    odd.prob(n)
                }
            }
            Family::FactorialCounterexample => {
                // find k with k! < n ≤ (k+1)!
                let mut k = 1u32;
                let mut kf = 1.0f64;
                while kf * f64::from(k + 1) < x {
                    k += 1;
                    kf *= f64::from(k);
                }
                debug_assert_eq!(kf, factorial(k));
                f64::from(k).ln() / (2.0 * kf)
            }
            Family::UniformFootnote => 1.0 / (x + 1.0),
            Family::CustomTable { values, tail } => match values.get(n - 2) {
                Some(&p) => p,
                None => match tail {
                    Tail::Constant(v) => *v,
                    Tail::Last => *values.last().expect("validated non-empty"),
                },
            },
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl Schedule {
    /// Canonical `key=value` form; parses back to an equal schedule.
    pub fn to_config(&self) -> String {
        let mut pairs: Vec<(String, String)> = Vec::new();
        self.push_pairs("", &mut pairs);
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn push_pairs(&self, prefix: &str, out: &mut Vec<(String, String)>) {
        let mut put = |k: &str, v: String| out.push((format!("{prefix}{k}"), v));
        match &self.family {
            Family::Constant { c } => {
                put("kind", "constant".into());
                put("c", fmt_num(*c));
            }
            Family::PowerCooling { a, gamma, n0 } => {
                put("kind", "power_cooling".into());
                put("a", fmt_num(*a));
                put("gamma", fmt_num(*gamma));
                put("n0", n0.to_string());
            }
            Family::CriticalCooling { c, n0 } => {
                put("kind", "critical_cooling".into());
                put("c", fmt_num(*c));
                put("n0", n0.to_string());
            }
            Family::HarmonicHeating { c, n0 } => {
                put("kind", "harmonic_heating".into());
                put("c", fmt_num(*c));
                put("n0", n0.to_string());
            }
            Family::PowerHeating { c, gamma, n0 } => {
                put("kind", "power_heating".into());
                put("c", fmt_num(*c));
                put("gamma", fmt_num(*gamma));
                put("n0", n0.to_string());
            }
            Family::EvenOdd { even, odd } => {
                put("kind", "even_odd".into());
                even.push_pairs(&format!("{prefix}even."), out);
                odd.push_pairs(&format!("{prefix}odd."), out);
                out.push((format!("{prefix}first"), fmt_num(self.first)));
                return;
            }
            Family::FactorialCounterexample => put("kind", "factorial".into()),
            Family::UniformFootnote => put("kind", "uniform_footnote".into()),
            Family::CustomTable { values, tail } => {
                put("kind", "custom".into());
                put(
                    "values",
                    values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(";"),
                );
                put(
                    "tail",
                    match tail {
                        Tail::Constant(v) => format!("constant:{}", fmt_num(*v)),
                        Tail::Last => "last".into(),
                    },
                );
            }
        }
        put("first", fmt_num(self.first));
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config())
    }
}
