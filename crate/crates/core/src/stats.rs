//! Volume-law versus logarithmic-law classification of entropy scaling.
//!
//! Both laws are fitted by ordinary least squares, against `L` and `ln L`.
//! The ratio `F = SSE_L / SSE_lnL` is referred to the F distribution with
//! `(n - 2, n - 2)` degrees of freedom and `P = Pr[F' ≥ F]`. Small `F` (and
//! `P → 1`) favors the volume law.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::runner::ScalingPoint;

/// SSEs at or below this fraction of the total sum of squares count as zero.
const ZERO_SSE_REL: f64 = 1e-24;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub sse: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let ws = vec![1.0; xs.len()];
    linear_fit_weighted(xs, ys, &ws)
}

/// Weighted least squares minimizing `Σ w_i (y_i - slope·x_i - intercept)²`.
/// The reported `sse` is the weighted sum.
pub fn linear_fit_weighted(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(Error::DegenerateFit("input lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    if ws.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::DegenerateFit("weights must be positive and finite".into()));
    }
    let w_sum: f64 = ws.iter().sum();
    let x_mean = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / w_sum;
    let y_mean = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / w_sum;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - x_mean) * (x - x_mean);
        sxy += w * (x - x_mean) * (y - y_mean);
    }
    if sxx <= f64::EPSILON * x_mean.abs().max(1.0) * w_sum {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        sse,
    })
}

/// Entropy means versus system size, at least four distinct even sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub points: Vec<ScalingPoint>,
}

impl ScalingSeries {
    pub fn new(points: Vec<ScalingPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::MalformedSeries(format!(
                "need at least 4 sizes, got {}",
                points.len()
            )));
        }
        let mut sizes: Vec<usize> = points.iter().map(|p| p.n_sites).collect();
        if sizes.iter().any(|l| l % 2 != 0) {
            return Err(Error::MalformedSeries("sizes must be even".into()));
        }
        sizes.sort_unstable();
        sizes.dedup();
        if sizes.len() != points.len() {
            return Err(Error::MalformedSeries("sizes must be distinct".into()));
        }
        if points
            .iter()
            .any(|p| !p.s_mean.is_finite() || !p.s_stderr.is_finite())
        {
            return Err(Error::MalformedSeries("entropies must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n_sites as f64).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s_mean).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitWeighting {
    #[default]
    Unweighted,
    /// Weights `1 / stderr²`; points with zero error get the largest finite weight present.
    InverseVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FTestReport {
    pub fit_l: LinearFit,
    pub fit_ln_l: LinearFit,
    #[serde(with = "extended_f64")]
    pub f: f64,
    pub dof: (f64, f64),
    pub p: f64,
}

/// Fits both laws and forms `F`; the P-value is filled in by [`p_value`].
pub fn f_statistic(series: &ScalingSeries, weighting: FitWeighting) -> Result<FTestReport> {
    let xs = series.sizes();
    let ln_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ys = series.means();
    let ws = weights(series, weighting);
    let fit_l = linear_fit_weighted(&xs, &ys, &ws)?;
    let fit_ln_l = linear_fit_weighted(&ln_xs, &ys, &ws)?;

    let w_sum: f64 = ws.iter().sum();
    let y_mean = ys.iter().zip(&ws).map(|(y, w)| w * y).sum::<f64>() / w_sum;
    let sst: f64 = ys.iter().zip(&ws).map(|(y, w)| w * (y - y_mean).powi(2)).sum();
    let zero = |sse: f64| sse <= ZERO_SSE_REL * sst;
    let f = match (zero(fit_l.sse), zero(fit_ln_l.sse)) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        (true, false) => 0.0,
        (false, false) => fit_l.sse / fit_ln_l.sse,
    };
    let nu = (xs.len() - 2) as f64;
    Ok(FTestReport {
        fit_l,
        fit_ln_l,
        f,
        dof: (nu, nu),
        p: f64::NAN,
    })
}

/// Runs the whole test: both fits, `F`, and the P-value.
pub fn f_test(series: &ScalingSeries, weighting: FitWeighting) -> Result<FTestReport> {
    let mut report = f_statistic(series, weighting)?;
    report.p = p_value(report.f, report.dof.0, report.dof.1)?;
    Ok(report)
}

fn weights(series: &ScalingSeries, weighting: FitWeighting) -> Vec<f64> {
    match weighting {
        FitWeighting::Unweighted => vec![1.0; series.points.len()],
        FitWeighting::InverseVariance => {
            let raw: Vec<f64> = series
                .points
                .iter()
                .map(|p| (p.s_stderr * p.s_stderr).recip())
                .collect();
            let cap = raw
                .iter()
                .copied()
                .filter(|w| w.is_finite())
                .fold(0.0, f64::max);
            let cap = if cap > 0.0 { cap } else { 1.0 };
            raw.into_iter().map(|w| if w.is_finite() { w } else { cap }).collect()
        }
    }
}

/// `Pr[F' ≥ f]` for `F' ~ F(ν1, ν2)`.
pub fn p_value(f: f64, nu1: f64, nu2: f64) -> Result<f64> {
    check_dof(nu1, nu2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::Domain(format!("F statistic must be ≥ 0, got {f}")));
    }
    if f == f64::INFINITY {
        return Ok(0.0);
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    // 1 - I_z(a, b) = I_{1-z}(b, a), with 1 - z formed directly.
    let tail_x = nu2 / (nu1 * f + nu2);
    regularized_incomplete_beta(tail_x, nu2 / 2.0, nu1 / 2.0)
}

/// CDF of the F distribution.
pub fn f_cdf(x: f64, nu1: f64, nu2: f64) -> Result<f64> {
    check_dof(nu1, nu2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("F CDF argument must be ≥ 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let z = nu1 * x / (nu1 * x + nu2);
    regularized_incomplete_beta(z, nu1 / 2.0, nu2 / 2.0)
}

fn check_dof(nu1: f64, nu2: f64) -> Result<()> {
    if !(nu1 > 0.0 && nu2 > 0.0) || !nu1.is_finite() || !nu2.is_finite() {
        return Err(Error::Domain(format!(
            "degrees of freedom must be positive, got ({nu1}, {nu2})"
        )));
    }
    Ok(())
}

/// `I_x(a, b)`, evaluated by a modified-Lentz continued fraction on whichever
/// side of the symmetry `I_x(a,b) = 1 - I_{1-x}(b,a)` converges fastest.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "beta parameters must be positive, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b)? / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a)? / b
    };
    Ok(value.clamp(0.0, 1.0))
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::Domain(format!(
        "incomplete beta continued fraction did not converge for x={x}, a={a}, b={b}"
    )))
}

mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "nan" => Ok(f64::NAN),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad number `{t}`"))),
        }
    }
}
