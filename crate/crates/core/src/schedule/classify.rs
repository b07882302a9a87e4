use serde::Serialize;

use super::{Family, Schedule, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    Mixing,
    NonMixing,
    UndeterminedAtHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LowerSupercritical,
    StronglyCritical,
    CriticalCooling,
    SubcriticalCooling,
    BoundedBand,
    Heating,
    UpperSupercritical,
    Irregular,
}

impl Mixing {
    pub fn as_str(self) -> &'static str {
        match self {
            Mixing::Mixing => "mixing",
            Mixing::NonMixing => "non-mixing",
            Mixing::UndeterminedAtHorizon => "undetermined-at-horizon",
        }
    }
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LowerSupercritical => "lower-supercritical",
            Regime::StronglyCritical => "strongly-critical",
            Regime::CriticalCooling => "critical-cooling",
            Regime::SubcriticalCooling => "subcritical-cooling",
            Regime::BoundedBand => "bounded-band",
            Regime::Heating => "heating",
            Regime::UpperSupercritical => "upper-supercritical",
            Regime::Irregular => "irregular",
        }
    }
}

/// Partial sums at the classification horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub horizon: usize,
    pub sum_p: f64,
    pub sum_q: f64,
    pub sum_min: f64,
    /// `A_H = H·p_H`.
    pub scaled_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub mixing: Mixing,
    pub regime: Regime,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// `Σ min(p_n, q_n)` must exceed this before a table is declared mixing.
    pub divergence_witness: f64,
    /// Minimum `Σ min(p_n, q_n)` over `(H/2, H]` for the divergence pattern.
    pub doubling_increment: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            divergence_witness: 10.0,
            doubling_increment: 0.1,
        }
    }
}

pub fn classify(s: &Schedule, horizon: usize) -> RegimeVerdict {
    classify_with(s, horizon, &ClassifyOptions::default())
}

pub fn classify_with(s: &Schedule, horizon: usize, opts: &ClassifyOptions) -> RegimeVerdict {
    let horizon = horizon.max(1);
    let diagnostics = diagnostics(s, horizon);
    let (mixing, regime) = verdict(s, horizon, opts, &diagnostics);
    RegimeVerdict {
        mixing,
        regime,
        diagnostics,
    }
}

fn diagnostics(s: &Schedule, horizon: usize) -> Diagnostics {
    let (mut sum_p, mut sum_q, mut sum_min) = (0.0, 0.0, 0.0);
    for n in 1..=horizon {
        let p = s.prob(n);
        let q = 1.0 - p;
        sum_p += p;
        sum_q += q;
        sum_min += p.min(q);
    }
    Diagnostics {
        horizon,
        sum_p,
        sum_q,
        sum_min,
        scaled_prob: s.scaled_prob(horizon),
    }
}

fn verdict(s: &Schedule, horizon: usize, opts: &ClassifyOptions, diag: &Diagnostics) -> (Mixing, Regime) {
    match s.family() {
        Family::Constant { .. } => (Mixing::Mixing, Regime::BoundedBand),
        Family::PowerCooling { .. } | Family::FactorialCounterexample => {
            (Mixing::Mixing, Regime::SubcriticalCooling)
        }
        Family::CriticalCooling { .. } | Family::UniformFootnote => (Mixing::Mixing, Regime::CriticalCooling),
        Family::HarmonicHeating { .. } | Family::PowerHeating { .. } => (Mixing::Mixing, Regime::Heating),
        Family::CustomTable { values, tail } => {
            if horizon > values.len() {
                let t = match tail {
                    Tail::Constant(v) => *v,
                    Tail::Last => *values.last().expect("validated non-empty"),
                };
                if t == 0.0 {
                    (Mixing::NonMixing, Regime::LowerSupercritical)
                } else if t == 1.0 {
                    (Mixing::NonMixing, Regime::UpperSupercritical)
                } else {
                    (Mixing::Mixing, Regime::BoundedBand)
                }
            } else {
                heuristic(s, horizon, opts, diag)
            }
        }
        Family::EvenOdd { even, odd } => {
            let e = verdict(even, horizon, opts, diag);
            let o = verdict(odd, horizon, opts, diag);
            combine(e, o)
        }
    }
}

fn combine(e: (Mixing, Regime), o: (Mixing, Regime)) -> (Mixing, Regime) {
    let mixing = match (e.0, o.0) {
        (Mixing::Mixing, _) | (_, Mixing::Mixing) => Mixing::Mixing,
        (Mixing::NonMixing, Mixing::NonMixing) => Mixing::NonMixing,
        _ => Mixing::UndeterminedAtHorizon,
    };
    let regime = if e.1 == o.1 { e.1 } else { Regime::Irregular };
    // a mixing interleaving of a mixing and a settled subsequence keeps the
    // settled side's extreme values infinitely often
    let regime = match (mixing, regime) {
        (Mixing::Mixing, Regime::LowerSupercritical | Regime::UpperSupercritical) => Regime::Irregular,
        (_, r) => r,
    };
    (mixing, regime)
}

/// Classification from the observed prefix when the horizon stops inside the table.
fn heuristic(s: &Schedule, horizon: usize, opts: &ClassifyOptions, diag: &Diagnostics) -> (Mixing, Regime) {
    let half = horizon / 2;
    let window = (half + 1)..=horizon;
    let mut window_min = 0.0;
    let mut window_p = 0.0;
    let mut window_q = 0.0;
    let (mut lo_p, mut hi_p) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in window.clone() {
        let p = s.prob(n);
        window_min += p.min(1.0 - p);
        window_p += p;
        window_q += 1.0 - p;
        lo_p = lo_p.min(p);
        hi_p = hi_p.max(p);
    }
    let mixing = if diag.sum_min >= opts.divergence_witness && window_min >= opts.doubling_increment {
        Mixing::Mixing
    } else {
        Mixing::UndeterminedAtHorizon
    };

    const BAND: f64 = 0.05;
    let regime = if lo_p >= BAND && hi_p <= 1.0 - BAND {
        Regime::BoundedBand
    } else if hi_p < BAND {
        let a_mid = s.scaled_prob(half.max(1));
        let a_end = s.scaled_prob(horizon);
        if window_p < 1e-9 {
            Regime::LowerSupercritical
        } else if a_end < 0.05 {
            Regime::StronglyCritical
        } else if a_end > 2.0 * a_mid {
            Regime::SubcriticalCooling
        } else if a_end >= 0.5 * a_mid {
            Regime::CriticalCooling
        } else {
            Regime::Irregular
        }
    } else if lo_p > 1.0 - BAND {
        if window_q < 1e-9 {
            Regime::UpperSupercritical
        } else {
            Regime::Heating
        }
    } else {
        Regime::Irregular
    };
    (mixing, regime)
}
