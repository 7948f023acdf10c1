//! Survival curves `P(tau > t)` with Wilson intervals, and power-law fits.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::markovian::{CouplingOutcome, MuTOutcome};

/// When a replicate stopped being tracked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventTime {
    Coupled(f64),
    /// Not coupled by this time; nothing is known afterwards.
    Censored(f64),
}

pub trait Observation {
    fn event_time(&self) -> EventTime;
}

impl Observation for EventTime {
    fn event_time(&self) -> EventTime {
        *self
    }
}

impl Observation for CouplingOutcome {
    fn event_time(&self) -> EventTime {
        if self.coupled {
            EventTime::Coupled(self.tau)
        } else {
            EventTime::Censored(self.tau)
        }
    }
}

impl Observation for MuTOutcome {
    fn event_time(&self) -> EventTime {
        self.outcome.event_time()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    /// `None` where censoring leaves the value undefined.
    pub estimates: Vec<Option<f64>>,
    pub ci_lo: Vec<Option<f64>>,
    pub ci_hi: Vec<Option<f64>>,
    /// Replicates still uncoupled at each grid time.
    pub at_risk: Vec<usize>,
    pub replicates: usize,
    pub confidence: f64,
    /// Block indices when the grid is a block schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
}

/// Two-sided normal quantile for a confidence level.
pub fn normal_quantile(confidence: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + 0.5 * confidence)
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, confidence: f64) -> (f64, f64) {
    let z = normal_quantile(confidence);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // the interval always contains p; rounding at p = 0 or 1 must not undo that
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Empirical `P(tau > t)` on `grid` with 95% Wilson intervals.
pub fn estimate_survival<O: Observation>(outcomes: &[O], grid: &[f64]) -> Result<SurvivalCurve> {
    estimate_survival_with(outcomes, grid, 0.95)
}

pub fn estimate_survival_with<O: Observation>(
    outcomes: &[O],
    grid: &[f64],
    confidence: f64,
) -> Result<SurvivalCurve> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {confidence} not in (0, 1)")));
    }
    let n = outcomes.len();
    let mut coupled: Vec<f64> = Vec::with_capacity(n);
    let mut censored: Vec<f64> = Vec::new();
    for o in outcomes {
        match o.event_time() {
            EventTime::Coupled(t) => coupled.push(t),
            EventTime::Censored(t) => censored.push(t),
        }
    }
    coupled.sort_by(f64::total_cmp);
    censored.sort_by(f64::total_cmp);
    let first_censor = censored.first().copied().unwrap_or(f64::INFINITY);

    let mut curve = SurvivalCurve {
        times: grid.to_vec(),
        estimates: Vec::with_capacity(grid.len()),
        ci_lo: Vec::with_capacity(grid.len()),
        ci_hi: Vec::with_capacity(grid.len()),
        at_risk: Vec::with_capacity(grid.len()),
        replicates: n,
        confidence,
        blocks: None,
    };
    for &t in grid {
        // coupled with tau > t, plus censored at or after t
        let alive_coupled = coupled.len() - coupled.partition_point(|&x| x <= t);
        let alive_censored = censored.len() - censored.partition_point(|&x| x < t);
        let alive = alive_coupled + alive_censored;
        curve.at_risk.push(alive);
        if t > first_censor {
            curve.estimates.push(None);
            curve.ci_lo.push(None);
            curve.ci_hi.push(None);
        } else {
            let (lo, hi) = wilson_interval(alive, n, confidence);
            curve.estimates.push(Some(alive as f64 / n as f64));
            curve.ci_lo.push(Some(lo));
            curve.ci_hi.push(Some(hi));
        }
    }
    Ok(curve)
}

impl SurvivalCurve {
    /// Curve from exact values, with zero-width intervals.
    pub fn exact(times: Vec<f64>, values: Vec<f64>) -> Self {
        let n = times.len();
        let est: Vec<Option<f64>> = values.into_iter().map(Some).collect();
        Self {
            times,
            ci_lo: est.clone(),
            ci_hi: est.clone(),
            estimates: est,
            at_risk: vec![0; n],
            replicates: 0,
            confidence: 0.95,
            blocks: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Estimate at the grid time closest to `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.estimates[i]
    }

    /// Binomial standard error `sqrt(p(1-p)/N)` at grid index `i`.
    pub fn standard_error(&self, i: usize) -> Option<f64> {
        let p = self.estimates[i]?;
        Some((p * (1.0 - p) / self.replicates as f64).sqrt())
    }

    /// CSV with columns `t, survival, ci_lo, ci_hi, n_at_risk`.
    pub fn write_time_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,survival,ci_lo,ci_hi,n_at_risk")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt(Some(self.times[i])),
                fmt(self.estimates[i]),
                fmt(self.ci_lo[i]),
                fmt(self.ci_hi[i]),
                self.at_risk[i]
            )?;
        }
        Ok(())
    }

    /// CSV with columns `block_n, S_n, survival, ci_lo, ci_hi`.
    pub fn write_block_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "block_n,S_n,survival,ci_lo,ci_hi")?;
        for i in 0..self.len() {
            let n = self.blocks.as_ref().map_or(i, |b| b[i]);
            writeln!(
                out,
                "{},{},{},{},{}",
                n,
                fmt(Some(self.times[i])),
                fmt(self.estimates[i]),
                fmt(self.ci_lo[i]),
                fmt(self.ci_hi[i])
            )?;
        }
        Ok(())
    }
}

fn fmt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.17e}"),
        None => "nan".to_string(),
    }
}

/// Which grid points enter a rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWindow {
    /// The last decade of grid times whose estimates all lie in
    /// `[0.01, 0.5]`, widened backwards to at least 4 points.
    Auto,
    /// Same rule with a custom estimate band.
    Band { lo: f64, hi: f64 },
    /// All grid points with `lo <= t <= hi`.
    Times { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
}

fn usable(curve: &SurvivalCurve, i: usize) -> Option<f64> {
    let p = curve.estimates[i]?;
    (p > 0.0 && p < 1.0 && curve.times[i] > 0.0).then_some(p)
}

fn window_indices(curve: &SurvivalCurve, window: FitWindow) -> Result<Vec<usize>> {
    let idx: Vec<usize> = match window {
        FitWindow::Times { lo, hi } => (0..curve.len())
            .filter(|&i| curve.times[i] >= lo && curve.times[i] <= hi && usable(curve, i).is_some())
            .collect(),
        FitWindow::Auto => return window_indices(curve, FitWindow::Band { lo: 0.01, hi: 0.5 }),
        FitWindow::Band { lo, hi } => {
            let inside = |i: usize| usable(curve, i).is_some_and(|p| p >= lo && p <= hi);
            let Some(end) = (0..curve.len()).rev().find(|&i| inside(i)) else {
                return Err(Error::DegenerateFit("no estimate inside the band".into()));
            };
            let mut start = end;
            while start > 0 && inside(start - 1) {
                start -= 1;
            }
            let t_end = curve.times[end];
            let mut first = end;
            while first > start && (curve.times[first - 1] >= t_end / 10.0 || end - first + 1 < 4) {
                first -= 1;
            }
            (first..=end).collect()
        }
    };
    if idx.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} usable points in the window, need at least 4",
            idx.len()
        )));
    }
    Ok(idx)
}

/// Weighted least squares of `ln P` on `ln t`.
///
/// Weights are inverse variances of `ln P` read off the confidence band. If
/// the band has zero width everywhere (exact input) the fit is unweighted
/// and the standard error comes from the residuals.
pub fn fit_rate(curve: &SurvivalCurve, window: FitWindow) -> Result<RateFit> {
    let idx = window_indices(curve, window)?;
    let z = normal_quantile(curve.confidence);
    let xs: Vec<f64> = idx.iter().map(|&i| curve.times[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| usable(curve, i).unwrap().ln()).collect();
    let sig: Vec<Option<f64>> = idx
        .iter()
        .map(|&i| {
            let (lo, hi) = (curve.ci_lo[i]?, curve.ci_hi[i]?);
            let s = (hi.ln() - lo.max(1e-300).ln()) / (2.0 * z);
            (s > 0.0 && s.is_finite()).then_some(s)
        })
        .collect();
    let weighted = sig.iter().all(Option::is_some);
    let ws: Vec<f64> = if weighted {
        sig.iter().map(|s| s.unwrap().powi(-2)).collect()
    } else {
        vec![1.0; xs.len()]
    };
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("window spans a single time".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((x, y), w)| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (xs.len() as f64 - 2.0) / sxx).sqrt()
    };
    Ok(RateFit {
        slope,
        stderr,
        intercept,
        t_lo: curve.times[idx[0]],
        t_hi: curve.times[*idx.last().unwrap()],
        points: idx.len(),
    })
}

/// Log-spaced grid with `per_decade` points per decade from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}
