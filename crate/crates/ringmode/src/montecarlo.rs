//! Parallel Monte Carlo estimate of the mode-signal variance.

use rayon::prelude::*;

use ringmode_core::sim::{mode_signal_path, Controller, DisturbanceSpec, Horizon};
use ringmode_core::{LinearRingModel, StateVector};

use crate::error::Result;

/// Sample mean and unbiased variance of `x~11(t)` across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSummary {
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
    pub mean: Vec<f64>,
    pub runs: usize,
    /// Variance curves of disjoint batches of runs, for replicate-based
    /// standard errors.
    pub batch_variance: Vec<Vec<f64>>,
}

/// Number of disjoint run batches kept for replicate standard errors.
pub const BATCHES: usize = 10;

/// Spread of a fit across independent batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSpread {
    pub slope_se: f64,
    pub intercept_se: f64,
    pub batches: usize,
}

/// Ordinary least squares line with textbook standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let m = xs.len();
    if m < 3 || ys.len() != m {
        return None;
    }
    let mf = m as f64;
    let x_bar = xs.iter().sum::<f64>() / mf;
    let y_bar = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = ssr / (mf - 2.0);
    Some(LinearFit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / mf + x_bar * x_bar / sxx)).sqrt(),
        points: m,
    })
}

impl VarianceSummary {
    pub fn terminal_variance(&self) -> f64 {
        self.variance.last().copied().unwrap_or(f64::NAN)
    }

    pub fn terminal_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }

    /// Variance-versus-time regression over `t_from <= t <= t_to`.
    pub fn fit(&self, t_from: f64, t_to: f64) -> Option<LinearFit> {
        let eps = 1e-9 * t_to.abs().max(1.0);
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.variance)
            .filter(|(t, _)| **t >= t_from - eps && **t <= t_to + eps)
            .map(|(t, v)| (*t, *v))
            .unzip();
        fit_line(&xs, &ys)
    }

    /// Standard errors of the pooled fit from the scatter of per-batch fits.
    /// Every point of one variance curve comes from the same paths, so the
    /// OLS errors of [`fit_line`] are far too optimistic; batches are
    /// independent.
    pub fn batch_spread(&self, t_from: f64, t_to: f64) -> Option<BatchSpread> {
        let eps = 1e-9 * t_to.abs().max(1.0);
        let keep: Vec<usize> = (0..self.times.len())
            .filter(|&k| self.times[k] >= t_from - eps && self.times[k] <= t_to + eps)
            .collect();
        let xs: Vec<f64> = keep.iter().map(|&k| self.times[k]).collect();
        let fits: Vec<LinearFit> = self
            .batch_variance
            .iter()
            .filter_map(|curve| fit_line(&xs, &keep.iter().map(|&k| curve[k]).collect::<Vec<_>>()))
            .collect();
        let b = fits.len();
        if b < 2 {
            return None;
        }
        let se = |get: fn(&LinearFit) -> f64| {
            let mean = fits.iter().map(get).sum::<f64>() / b as f64;
            let var = fits.iter().map(|f| (get(f) - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        };
        Some(BatchSpread {
            slope_se: se(|f| f.slope),
            intercept_se: se(|f| f.intercept),
            batches: b,
        })
    }

    /// Fit over the last nine tenths of the horizon, skipping the start where
    /// the variance is still tiny.
    pub fn default_fit(&self) -> Option<LinearFit> {
        let t_end = *self.times.last()?;
        self.fit(0.1 * t_end, t_end)
    }

    pub fn default_batch_spread(&self) -> Option<BatchSpread> {
        let t_end = *self.times.last()?;
        self.batch_spread(0.1 * t_end, t_end)
    }
}

/// Runs `runs` independent realizations (noise stream = run index) in
/// parallel. Results are combined in run order, so the summary does not
/// depend on scheduling.
pub fn monte_carlo(
    model: &LinearRingModel,
    controller: &Controller,
    x0: &StateVector,
    horizon: Horizon,
    spec: &DisturbanceSpec,
    runs: usize,
    stride: usize,
) -> Result<VarianceSummary> {
    let paths = (0..runs as u64)
        .into_par_iter()
        .map(|run| mode_signal_path(model, controller, x0, horizon, spec, run, stride))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let (mean, variance) = moments(&paths);
    let batch = runs / BATCHES;
    let batch_variance = if batch >= 2 {
        paths.chunks_exact(batch).map(|c| moments(c).1).collect()
    } else {
        Vec::new()
    };
    let times = (0..mean.len()).map(|j| horizon.time(j * stride)).collect();
    Ok(VarianceSummary {
        times,
        variance,
        mean,
        runs,
        batch_variance,
    })
}

/// Pointwise mean and unbiased variance, summed in run order.
fn moments(paths: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let points = paths.first().map_or(0, Vec::len);
    let rf = paths.len() as f64;
    let mut mean = vec![0.0; points];
    let mut variance = vec![0.0; points];
    for k in 0..points {
        let m = paths.iter().map(|p| p[k]).sum::<f64>() / rf;
        mean[k] = m;
        variance[k] = paths.iter().map(|p| (p[k] - m).powi(2)).sum::<f64>() / (rf - 1.0);
    }
    (mean, variance)
}
