//! Optimal model size and the linear law between graph search entropy and
//! optimal parameter count.
//!
//! A sweep trains several model sizes on one graph for a fixed number of
//! steps. The size with the lowest held-out loss is that graph's optimum;
//! regressing optimum on entropy across graphs gives the law
//!
//! > `P_opt ≈ slope · H + intercept`
//!
//! whose inverse slope reads as bits of graph information reasoned over per
//! parameter.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Losses within this fraction of the minimum count as tied.
pub const TIE_TOLERANCE: f64 = 0.005;

/// One trained model evaluated on one graph, as written by the trainer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunResult {
    pub model_params: u64,
    pub train_steps: u64,
    pub train_loss: f64,
    pub eval_loss: f64,
    pub eval_acc: f64,
    pub graph_id: String,
}

impl RunResult {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.model_params == 0 {
            return Err("model_params must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.eval_acc) {
            return Err(format!("eval_acc {} outside [0, 1]", self.eval_acc));
        }
        for (name, v) in [("train_loss", self.train_loss), ("eval_loss", self.eval_loss)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} {v} must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Reads one [`RunResult`] per line; blank lines are skipped.
pub fn read_run_results(path: &Path) -> Result<Vec<RunResult>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", i + 1),
        };
        let r: RunResult = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        r.validate().map_err(schema)?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFlag {
    Interior,
    AtMinSize,
    AtMaxSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPoint {
    pub graph_id: String,
    pub entropy_bits: f64,
    pub optimal_params: u64,
    pub boundary_flag: BoundaryFlag,
    pub min_sweep_params: u64,
    pub max_sweep_params: u64,
}

/// [`locate_optimal_with_tolerance`] with the default [`TIE_TOLERANCE`].
pub fn locate_optimal(results: &[RunResult], entropy_bits: f64) -> Result<OptimalPoint> {
    locate_optimal_with_tolerance(results, entropy_bits, TIE_TOLERANCE)
}

/// Smallest model whose eval loss is within `tolerance · |ℓ_min|` of the
/// best. All results must share one graph and one step count.
pub fn locate_optimal_with_tolerance(
    results: &[RunResult],
    entropy_bits: f64,
    tolerance: f64,
) -> Result<OptimalPoint> {
    let first = results
        .first()
        .ok_or_else(|| Error::Fit("no run results".into()))?;
    let mut by_size: BTreeMap<u64, f64> = BTreeMap::new();
    for r in results {
        if r.graph_id != first.graph_id || r.train_steps != first.train_steps {
            return Err(Error::Fit(format!(
                "mixed sweep: ({}, {} steps) and ({}, {} steps)",
                first.graph_id, first.train_steps, r.graph_id, r.train_steps
            )));
        }
        if by_size.insert(r.model_params, r.eval_loss).is_some() {
            return Err(Error::Fit(format!(
                "duplicate result for {} params on {}",
                r.model_params, r.graph_id
            )));
        }
    }
    if by_size.len() < 2 {
        return Err(Error::Fit(format!(
            "graph {} needs at least 2 model sizes",
            first.graph_id
        )));
    }
    let best = by_size.values().copied().fold(f64::INFINITY, f64::min);
    let limit = best + tolerance * best.abs();
    let (&optimal_params, _) = by_size.iter().find(|(_, &l)| l <= limit).unwrap();
    let min_sweep_params = *by_size.keys().next().unwrap();
    let max_sweep_params = *by_size.keys().next_back().unwrap();
    let boundary_flag = if optimal_params == min_sweep_params {
        BoundaryFlag::AtMinSize
    } else if optimal_params == max_sweep_params {
        BoundaryFlag::AtMaxSize
    } else {
        BoundaryFlag::Interior
    };
    Ok(OptimalPoint {
        graph_id: first.graph_id.clone(),
        entropy_bits,
        optimal_params,
        boundary_flag,
        min_sweep_params,
        max_sweep_params,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope_params_per_bit: f64,
    pub intercept_params: f64,
    pub r2: f64,
    pub slope_ci95_low: f64,
    pub slope_ci95_high: f64,
    /// `1 / slope`; absent when the slope is not positive.
    pub bits_per_param: Option<f64>,
    pub n_points: usize,
    /// Smallest swept size over the fitted points; predictions never go below.
    #[serde(default)]
    pub min_sweep_params: u64,
}

/// Ordinary least squares of `optimal_params` on `entropy_bits` over the
/// interior points. Boundary-flagged points are dropped with a warning.
pub fn fit_scaling_law(points: &[OptimalPoint]) -> Result<ScalingFit> {
    let interior: Vec<&OptimalPoint> = points
        .iter()
        .filter(|p| p.boundary_flag == BoundaryFlag::Interior)
        .collect();
    let excluded = points.len() - interior.len();
    if excluded > 0 {
        log::warn!("excluding {excluded} boundary-flagged point(s) from the fit");
    }
    if interior.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 interior points, have {}",
            interior.len()
        )));
    }
    let xs: Vec<f64> = interior.iter().map(|p| p.entropy_bits).collect();
    let ys: Vec<f64> = interior.iter().map(|p| p.optimal_params as f64).collect();
    let ols = ols(&xs, &ys)?;
    let bits_per_param = (ols.slope > 0.0).then(|| 1.0 / ols.slope);
    Ok(ScalingFit {
        slope_params_per_bit: ols.slope,
        intercept_params: ols.intercept,
        r2: ols.r2,
        slope_ci95_low: ols.slope - ols.ci95_half_width,
        slope_ci95_high: ols.slope + ols.ci95_half_width,
        bits_per_param,
        n_points: interior.len(),
        min_sweep_params: interior.iter().map(|p| p.min_sweep_params).min().unwrap(),
    })
}

/// Simple linear regression `y = slope · x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ols {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_std_err: f64,
    pub ci95_half_width: f64,
}

/// Sums and products are exact rationals, rounded once at the end, so data
/// lying exactly on a line gives that line's slope and `r2 == 1`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<Ols> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, have {n}")));
    }
    let exact = |v: &[f64]| -> Result<Vec<BigRational>> {
        v.iter()
            .map(|&x| BigRational::from_float(x).ok_or_else(|| Error::Fit(format!("non-finite value {x}"))))
            .collect()
    };
    let (xq, yq) = (exact(xs)?, exact(ys)?);
    let nq = BigRational::from_integer(n.into());
    let mean = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |a, b| a + b) / &nq;
    let (mx, my) = (mean(&xq), mean(&yq));
    let mut sxx = BigRational::zero();
    let mut sxy = BigRational::zero();
    let mut syy = BigRational::zero();
    for (x, y) in xq.iter().zip(&yq) {
        let (dx, dy) = (x - &mx, y - &my);
        sxx += &dx * &dx;
        sxy += &dx * &dy;
        syy += &dy * &dy;
    }
    if sxx.is_zero() {
        return Err(Error::Fit("entropy values have zero variance".into()));
    }
    let slope = &sxy / &sxx;
    let intercept = &my - &slope * &mx;
    // residual sum of squares, SYY - SXY²/SXX
    let sse = &syy - &sxy * &sxy / &sxx;
    let f = |q: &BigRational| q.to_f64().expect("finite");
    let r2 = if sse.is_zero() || syy.is_zero() {
        1.0
    } else {
        (1.0 - f(&(&sse / &syy))).clamp(0.0, 1.0)
    };
    let dof = n as f64 - 2.0;
    let slope_std_err = (f(&sse) / dof / f(&sxx)).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(Ols {
        slope: f(&slope),
        intercept: f(&intercept),
        r2,
        slope_std_err,
        ci95_half_width: t * slope_std_err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub entropy_bits: f64,
    pub predicted_params: u64,
    /// The raw linear value before flooring.
    pub raw_params: f64,
    pub floored: bool,
}

/// `round(slope · H + intercept)`, floored at the fit's smallest swept size.
pub fn predict_optimal_size(fit: &ScalingFit, entropy_bits: f64) -> Prediction {
    let raw = fit.slope_params_per_bit * entropy_bits + fit.intercept_params;
    let rounded = raw.round();
    let floor = fit.min_sweep_params as f64;
    let floored = rounded < floor;
    if rounded < 0.0 {
        log::warn!("negative prediction {raw:.1} floored at {}", fit.min_sweep_params);
    }
    Prediction {
        entropy_bits,
        predicted_params: if floored { fit.min_sweep_params } else { rounded as u64 },
        raw_params: raw,
        floored,
    }
}

pub fn bits_per_parameter(fit: &ScalingFit) -> Result<f64> {
    if fit.slope_params_per_bit > 0.0 {
        Ok(1.0 / fit.slope_params_per_bit)
    } else {
        Err(Error::Fit(format!(
            "slope {} is not positive",
            fit.slope_params_per_bit
        )))
    }
}
