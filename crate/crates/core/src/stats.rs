//! Special functions and goodness-of-fit statistics.

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("empty sample")]
    Empty,
}

const LENTZ_MAX_ITER: usize = 300;
const LENTZ_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta `I_x(α, β)`.
pub fn beta_cdf(alpha: f64, beta: f64, x: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(StatsError::InvalidParameter { name: "alpha", value: alpha });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(StatsError::InvalidParameter { name: "beta", value: beta });
    }
    if x.is_nan() {
        return Err(StatsError::InvalidParameter { name: "x", value: x });
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let ln_front = libm::lgamma(alpha + beta) - libm::lgamma(alpha) - libm::lgamma(beta)
        + alpha * x.ln()
        + beta * (-x).ln_1p();
    let front = ln_front.exp();
    // the fraction converges fast on this side of the mean
    if x < (alpha + 1.0) / (alpha + beta + 2.0) {
        Ok(front * beta_fraction(alpha, beta, x) / alpha)
    } else {
        Ok(1.0 - front * beta_fraction(beta, alpha, 1.0 - x) / beta)
    }
}

/// Continued fraction for `I_x(a, b)`, modified Lentz.
fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=LENTZ_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < LENTZ_EPS {
            break;
        }
    }
    h
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of `Normal(0, var)`.
pub fn normal_cdf_var(x: f64, var: f64) -> f64 {
    normal_cdf(x / var.sqrt())
}

/// Empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut sample: Vec<f64>) -> Result<Self, StatsError> {
        if sample.is_empty() {
            return Err(StatsError::Empty);
        }
        if let Some(&bad) = sample.iter().find(|v| v.is_nan()) {
            return Err(StatsError::InvalidParameter { name: "sample", value: bad });
        }
        sample.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// One-sample Kolmogorov–Smirnov distance against a continuous CDF.
pub fn ks_one<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64, StatsError> {
    let e = Ecdf::new(sample.to_vec())?;
    let n = e.len() as f64;
    let xs = e.sorted();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // group ties so the step is taken once
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(((j + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let a = Ecdf::new(a.to_vec())?;
    let b = Ecdf::new(b.to_vec())?;
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Sup distance between a discrete law (sorted `(point, mass)` pairs) and a
/// continuous CDF, taken over both sides of every jump.
pub fn ks_discrete<F: Fn(f64) -> f64>(atoms: &[(f64, f64)], cdf: F) -> f64 {
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    for &(x, m) in atoms {
        let f = cdf(x);
        let above = below + m;
        d = d.max((below - f).abs()).max((above - f).abs());
        below = above;
    }
    d
}

pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as f64;
    (k * mu.ln() - mu - libm::lgamma(k + 1.0)).exp()
}

/// Histogram of nonnegative counts: `out[k]` is the number of samples equal to `k`.
pub fn histogram(samples: &[u64]) -> Vec<u64> {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut out = vec![0u64; max + 1];
    for &s in samples {
        out[s as usize] += 1;
    }
    out
}

/// Total variation between an empirical count histogram and `Poisson(mu)`,
/// including the Poisson mass beyond the observed range.
pub fn tv_to_poisson(hist: &[u64], mu: f64) -> Result<f64, StatsError> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(StatsError::Empty);
    }
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (k, &c) in hist.iter().enumerate() {
        let pk = poisson_pmf(mu, k as u64);
        covered += pk;
        tv += (c as f64 / total as f64 - pk).abs();
    }
    tv += (1.0 - covered).max(0.0);
    Ok(0.5 * tv)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Sample median (average of the middle pair for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
