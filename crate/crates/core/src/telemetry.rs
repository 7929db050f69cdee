//! Retrieval telemetry: interpolating polynomials over database completion
//! points, their derivative (instantaneous retrieval rate) and average
//! values over the run's restricted domain.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelemetryError {
    #[error("need at least 2 points, got {0}")]
    InsufficientPoints(usize),
    #[error("duplicate abscissa t = {0}")]
    DuplicateAbscissa(f64),
    #[error("degenerate interval [{0}, {1}]")]
    DegenerateInterval(f64, f64),
}

/// One database completion: `y` sources retrieved by time `t` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryPoint {
    pub t: f64,
    pub y: u64,
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, about 32
/// significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn new(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let s = Dd::new(s.hi, s.lo + t.hi);
        Dd::new(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::new(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::new(q1, q2).add(Dd::from(q3))
    }
}

/// Dense polynomial, coefficients in ascending degree. Trailing zeros are
/// trimmed, so the zero polynomial has no coefficients.
///
/// Fitted polynomials also keep the rounding residue of every coefficient,
/// which evaluation and calculus use; ill-conditioned fits stay accurate at
/// their nodes even when the rounded coefficients alone would not. The
/// residue is not serialized, and equality compares coefficients only.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coefficients: Vec<f64>,
    #[serde(skip)]
    residue: Vec<f64>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.coefficients == other.coefficients
    }
}

impl Polynomial {
    pub fn new(mut coefficients: Vec<f64>) -> Self {
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Self {
            coefficients,
            residue: Vec::new(),
        }
    }

    fn from_dd(mut terms: Vec<Dd>) -> Self {
        while terms.last().is_some_and(|d| d.hi == 0.0) {
            terms.pop();
        }
        if terms.iter().all(|d| d.lo == 0.0) {
            return Self::new(terms.iter().map(|d| d.hi).collect());
        }
        Self {
            coefficients: terms.iter().map(|d| d.hi).collect(),
            residue: terms.iter().map(|d| d.lo).collect(),
        }
    }

    fn terms(&self) -> impl DoubleEndedIterator<Item = Dd> + ExactSizeIterator + '_ {
        self.coefficients.iter().enumerate().map(|(k, &hi)| Dd {
            hi,
            lo: self.residue.get(k).copied().unwrap_or(0.0),
        })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Horner evaluation.
    pub fn evaluate(&self, t: f64) -> f64 {
        if self.residue.is_empty() {
            return self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        }
        let t = Dd::from(t);
        let v = self.terms().rev().fold(Dd::ZERO, |acc, c| acc.mul(t).add(c));
        v.hi + v.lo
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::from_dd(
            self.terms()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.mul(Dd::from(k as f64)))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut terms = Vec::with_capacity(self.coefficients.len() + 1);
        terms.push(Dd::ZERO);
        terms.extend(
            self.terms()
                .enumerate()
                .map(|(k, c)| c.div(Dd::from((k + 1) as f64))),
        );
        Polynomial::from_dd(terms)
    }
}

fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl fmt::Display for Polynomial {
    /// Descending-degree form, e.g. `14.516t^3 - 188.549t^2 + 821.01t - 1114.36`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, &c) in self.coefficients.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let mag = significant(c.abs(), 6);
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match k {
                0 => write!(f, "{mag}")?,
                1 => write!(f, "{mag}t")?,
                _ => write!(f, "{mag}t^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}

pub fn evaluate(p: &Polynomial, t: f64) -> f64 {
    p.evaluate(t)
}

pub fn differentiate(p: &Polynomial) -> Polynomial {
    p.derivative()
}

/// Mean of `p` over `[t_i, t_f]` through the closed-form antiderivative.
pub fn average_value(p: &Polynomial, t_i: f64, t_f: f64) -> Result<f64, TelemetryError> {
    if !(t_f > t_i) {
        return Err(TelemetryError::DegenerateInterval(t_i, t_f));
    }
    let big_p = p.antiderivative();
    Ok((big_p.evaluate(t_f) - big_p.evaluate(t_i)) / (t_f - t_i))
}

/// Lagrange interpolating polynomial through `(t, y)` pairs, expanded into
/// coefficients. Points are sorted by abscissa first.
pub fn lagrange_fit(points: &[(f64, f64)]) -> Result<Polynomial, TelemetryError> {
    if points.len() < 2 {
        return Err(TelemetryError::InsufficientPoints(points.len()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(TelemetryError::DuplicateAbscissa(w[0].0));
    }

    let n = pts.len();
    let mut coefficients = vec![Dd::ZERO; n];
    let mut basis = Vec::with_capacity(n);
    for (i, &(ti, yi)) in pts.iter().enumerate() {
        // basis = prod_{k != i} (t - t_k), built one factor at a time
        basis.clear();
        basis.push(Dd::from(1.0));
        let mut denom = Dd::from(1.0);
        for (k, &(tk, _)) in pts.iter().enumerate() {
            if k == i {
                continue;
            }
            let tk = Dd::from(tk);
            basis.push(Dd::ZERO);
            for j in (1..basis.len()).rev() {
                basis[j] = basis[j - 1].sub(tk.mul(basis[j]));
            }
            basis[0] = basis[0].mul(tk.neg());
            denom = denom.mul(Dd::from(ti).sub(tk));
        }
        let scale = Dd::from(yi).div(denom);
        for (c, b) in coefficients.iter_mut().zip(&basis) {
            *c = c.add(scale.mul(*b));
        }
    }
    Ok(Polynomial::from_dd(coefficients))
}

/// Fits the interpolation polynomial through the given completion points.
pub fn fit_ipf(points: &[TelemetryPoint]) -> Result<Polynomial, TelemetryError> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.y as f64)).collect();
    lagrange_fit(&pairs)
}

/// Running totals of sources retrieved, in completion order: point `i` says
/// how many sources had been compiled when the `i`-th database finished.
pub fn cumulative_series(points: &[TelemetryPoint]) -> Vec<TelemetryPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut total = 0;
    sorted
        .into_iter()
        .map(|p| {
            total += p.y;
            TelemetryPoint { t: p.t, y: total }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_sources: u64,
    pub total_time_seconds: f64,
    /// Per-database completion points as recorded.
    pub points: Vec<TelemetryPoint>,
    /// The series `s_of_t` interpolates.
    pub cumulative: Vec<TelemetryPoint>,
    #[serde(rename = "s_coefficients")]
    pub s_of_t: Polynomial,
    #[serde(rename = "e_coefficients")]
    pub e_of_t: Polynomial,
    pub average_value: f64,
    pub domain: (f64, f64),
    /// Mean of E(t) over the domain, i.e. the secant slope of S(t).
    pub secant_rate: f64,
    /// total_sources / total_time_seconds.
    pub throughput: f64,
    /// False when too few points were available to fit S(t).
    pub fitted: bool,
}

impl RunMetrics {
    /// Totals only, for runs whose points cannot support a fit.
    pub fn unfitted(points: &[TelemetryPoint]) -> Self {
        let total_sources = points.iter().map(|p| p.y).sum();
        let t_min = points.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
        let t_max = points.iter().map(|p| p.t).fold(0.0, f64::max);
        let domain = if points.is_empty() { (0.0, 0.0) } else { (t_min, t_max) };
        Self {
            total_sources,
            total_time_seconds: t_max,
            points: points.to_vec(),
            cumulative: cumulative_series(points),
            s_of_t: Polynomial::zero(),
            e_of_t: Polynomial::zero(),
            average_value: 0.0,
            domain,
            secant_rate: 0.0,
            throughput: if t_max > 0.0 { total_sources as f64 / t_max } else { 0.0 },
            fitted: false,
        }
    }

    /// Whether `t` lies inside the restricted domain, where S(t) interpolates
    /// rather than extrapolates.
    pub fn in_domain(&self, t: f64) -> bool {
        self.domain.0 <= t && t <= self.domain.1
    }
}

/// Totals plus S(t) fitted to the cumulative series, its derivative E(t),
/// and averages over the restricted domain.
pub fn run_metrics(points: &[TelemetryPoint]) -> Result<RunMetrics, TelemetryError> {
    let cumulative = cumulative_series(points);
    let s_of_t = fit_ipf(&cumulative)?;
    let e_of_t = s_of_t.derivative();
    let mut metrics = RunMetrics::unfitted(points);
    let (a, b) = metrics.domain;
    metrics.average_value = average_value(&s_of_t, a, b)?;
    metrics.secant_rate = average_value(&e_of_t, a, b)?;
    metrics.s_of_t = s_of_t;
    metrics.e_of_t = e_of_t;
    metrics.fitted = true;
    Ok(metrics)
}

/// Mean total sources per run.
pub fn mean_sources_per_search(runs: &[RunMetrics]) -> Option<f64> {
    if runs.is_empty() {
        return None;
    }
    Some(runs.iter().map(|r| r.total_sources as f64).sum::<f64>() / runs.len() as f64)
}

/// Mean of per-run throughput (sources per second of total run time).
pub fn mean_throughput(runs: &[RunMetrics]) -> Option<f64> {
    if runs.is_empty() {
        return None;
    }
    Some(runs.iter().map(|r| r.throughput).sum::<f64>() / runs.len() as f64)
}

/// Sources per second for a manual compilation baseline.
pub fn manual_comparison_rate(
    sources_used: u64,
    compilation_seconds: f64,
) -> Result<f64, TelemetryError> {
    if !(compilation_seconds > 0.0) {
        return Err(TelemetryError::DegenerateInterval(0.0, compilation_seconds));
    }
    Ok(sources_used as f64 / compilation_seconds)
}
