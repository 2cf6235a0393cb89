//! Finite-size scaling analysis: critical-point detection from curve
//! crossings and scaling-collapse fits.
//!
//! The collapse uses the standard finite-size forms
//! `u = (x - x_c) L^(1/nu)` and, when an order-parameter exponent is fitted,
//! `v = value * L^(beta/nu)`; the scaled data is fitted to a single
//! polynomial and the critical parameters minimize the weighted residual by
//! deterministic grid refinement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CollapseError {
    #[error("need at least {needed} distinct system sizes, got {got}")]
    TooFewSizes { needed: usize, got: usize },
    #[error("no crossing found in the sampled range")]
    NoCrossing,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

/// One data point of a finite-size family of curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub l: usize,
    pub x: f64,
    pub value: f64,
    /// Standard error of `value`; 0 means unweighted.
    #[serde(default)]
    pub stderr: f64,
}

/// Group points into per-L curves sorted by x.
fn curves(data: &[CurvePoint]) -> Vec<(usize, Vec<CurvePoint>)> {
    let mut sizes: Vec<usize> = data.iter().map(|p| p.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|l| {
            let mut pts: Vec<CurvePoint> =
                data.iter().copied().filter(|p| p.l == l).collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            (l, pts)
        })
        .collect()
}

fn interp(a: CurvePoint, b: CurvePoint, x: f64) -> f64 {
    if (b.x - a.x).abs() < 1e-15 {
        return a.value;
    }
    a.value + (b.value - a.value) * (x - a.x) / (b.x - a.x)
}

/// Crossings of two piecewise-linear curves over their shared x range.
fn pair_crossings(a: &[CurvePoint], b: &[CurvePoint]) -> Vec<f64> {
    let lo = a[0].x.max(b[0].x);
    let hi = a[a.len() - 1].x.min(b[b.len() - 1].x);
    if lo >= hi {
        return Vec::new();
    }
    let grid = 512;
    let eval = |pts: &[CurvePoint], x: f64| -> f64 {
        let i = pts.partition_point(|p| p.x <= x).clamp(1, pts.len() - 1);
        interp(pts[i - 1], pts[i], x)
    };
    let mut crossings = Vec::new();
    let mut prev_x = lo;
    let mut prev_d = eval(a, lo) - eval(b, lo);
    for step in 1..=grid {
        let x = lo + (hi - lo) * step as f64 / grid as f64;
        let d = eval(a, x) - eval(b, x);
        if prev_d == 0.0 || (prev_d < 0.0) != (d < 0.0) {
            let t = if (d - prev_d).abs() < 1e-15 { 0.0 } else { prev_d / (prev_d - d) };
            crossings.push(prev_x + t * (x - prev_x));
        }
        prev_x = x;
        prev_d = d;
    }
    crossings.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    crossings
}

/// Crossing-point estimate from a family of per-L curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub x_c: f64,
    pub error: f64,
    /// Interpolated crossing of each adjacent-size pair (smaller L first).
    pub pair_crossings: Vec<(usize, usize, f64)>,
}

/// Estimate the critical point as the aggregated pairwise crossing of
/// adjacent-L curves, with a bootstrap error when standard errors are
/// supplied.
pub fn crossing_detect(data: &[CurvePoint]) -> Result<CrossingEstimate, CollapseError> {
    let families = curves(data);
    if families.len() < 2 {
        return Err(CollapseError::TooFewSizes { needed: 2, got: families.len() });
    }
    let mut pairs = Vec::new();
    for window in families.windows(2) {
        let (l_small, ref a) = window[0];
        let (l_large, ref b) = window[1];
        for x in pair_crossings(a, b) {
            pairs.push((l_small, l_large, x));
        }
    }
    if pairs.is_empty() {
        return Err(CollapseError::NoCrossing);
    }
    let mean = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;

    // Bootstrap: jitter each point by its standard error with a small
    // deterministic LCG and re-detect.
    let has_errors = data.iter().any(|p| p.stderr > 0.0);
    let error = if has_errors {
        let mut lcg: u64 = 0x9e3779b97f4a7c15;
        let mut noise = || {
            // Sum of 12 uniforms, centered: approximately standard normal.
            let mut acc = -6.0f64;
            for _ in 0..12 {
                lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                acc += (lcg >> 11) as f64 / (1u64 << 53) as f64;
            }
            acc
        };
        let resamples = 64;
        let mut estimates = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let jittered: Vec<CurvePoint> = data
                .iter()
                .map(|p| CurvePoint { value: p.value + p.stderr * noise(), ..*p })
                .collect();
            let families = curves(&jittered);
            let mut xs = Vec::new();
            for window in families.windows(2) {
                xs.extend(pair_crossings(&window[0].1, &window[1].1));
            }
            if !xs.is_empty() {
                estimates.push(xs.iter().sum::<f64>() / xs.len() as f64);
            }
        }
        if estimates.len() > 1 {
            let m = estimates.iter().sum::<f64>() / estimates.len() as f64;
            (estimates.iter().map(|e| (e - m) * (e - m)).sum::<f64>()
                / (estimates.len() - 1) as f64)
                .sqrt()
        } else {
            spread(&pairs)
        }
    } else {
        spread(&pairs)
    };
    Ok(CrossingEstimate { x_c: mean, error, pair_crossings: pairs })
}

fn spread(pairs: &[(usize, usize, f64)]) -> f64 {
    if pairs.len() < 2 {
        return 0.0;
    }
    let mean = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;
    (pairs.iter().map(|p| (p.2 - mean) * (p.2 - mean)).sum::<f64>()
        / (pairs.len() - 1) as f64)
        .sqrt()
}

/// Which scaling hypothesis to fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseForm {
    /// Dimensionless curves: value = f((x - x_c) L^(1/nu)).
    I3,
    /// Order parameter with an amplitude exponent:
    /// value = L^(-beta/nu) g((x - x_c) L^(1/nu)).
    CoherentInfo,
}

/// Fitted collapse parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub form: CollapseForm,
    pub x_c: f64,
    pub nu: f64,
    pub beta: Option<f64>,
    pub residual: f64,
    pub degree: usize,
}

/// Weighted least-squares polynomial fit; returns the mean squared residual
/// per point.
fn polynomial_residual(points: &[(f64, f64, f64)], degree: usize) -> f64 {
    let terms = degree + 1;
    // Rescale u to stabilize the normal equations.
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1e-12);
    let mut gram = vec![0.0f64; terms * terms];
    let mut moment = vec![0.0f64; terms];
    let mut weight_total = 0.0;
    for &(u, v, w) in points {
        let u = u / scale;
        let mut powers = vec![1.0f64; terms];
        for d in 1..terms {
            powers[d] = powers[d - 1] * u;
        }
        for i in 0..terms {
            for j in 0..terms {
                gram[i * terms + j] += w * powers[i] * powers[j];
            }
            moment[i] += w * powers[i] * v;
        }
        weight_total += w;
    }
    // Solve by Gaussian elimination with partial pivoting.
    let mut a = gram;
    let mut b = moment;
    for col in 0..terms {
        let pivot = (col..terms)
            .max_by(|&i, &j| a[i * terms + col].abs().total_cmp(&a[j * terms + col].abs()))
            .unwrap();
        if a[pivot * terms + col].abs() < 1e-12 {
            continue;
        }
        if pivot != col {
            for j in 0..terms {
                a.swap(col * terms + j, pivot * terms + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * terms + col];
        for row in 0..terms {
            if row == col {
                continue;
            }
            let factor = a[row * terms + col] / diag;
            for j in 0..terms {
                a[row * terms + j] -= factor * a[col * terms + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let coeffs: Vec<f64> = (0..terms)
        .map(|i| {
            let diag = a[i * terms + i];
            if diag.abs() < 1e-12 {
                0.0
            } else {
                b[i] / diag
            }
        })
        .collect();
    let mut residual = 0.0;
    for &(u, v, w) in points {
        let u = u / scale;
        let mut prediction = 0.0;
        let mut power = 1.0;
        for &c in &coeffs {
            prediction += c * power;
            power *= u;
        }
        residual += w * (v - prediction) * (v - prediction);
    }
    residual / weight_total.max(1e-12)
}

fn collapse_residual(
    data: &[CurvePoint],
    form: CollapseForm,
    degree: usize,
    x_c: f64,
    nu: f64,
    beta: f64,
) -> f64 {
    let points: Vec<(f64, f64, f64)> = data
        .iter()
        .map(|p| {
            let lf = p.l as f64;
            let u = (p.x - x_c) * lf.powf(1.0 / nu);
            let v = match form {
                CollapseForm::I3 => p.value,
                CollapseForm::CoherentInfo => p.value * lf.powf(beta / nu),
            };
            let w = if p.stderr > 0.0 {
                let scaled_err = match form {
                    CollapseForm::I3 => p.stderr,
                    CollapseForm::CoherentInfo => p.stderr * lf.powf(beta / nu),
                };
                1.0 / (scaled_err * scaled_err)
            } else {
                1.0
            };
            (u, v, w)
        })
        .collect();
    polynomial_residual(&points, degree)
}

/// Fit the collapse by grid search over the critical parameters with three
/// refinement levels centered on the running best; the residual is
/// non-increasing across levels and the procedure is fully deterministic.
pub fn collapse_fit(
    data: &[CurvePoint],
    form: CollapseForm,
    degree: usize,
) -> Result<CollapseFit, CollapseError> {
    let families = curves(data);
    if families.len() < 3 {
        return Err(CollapseError::TooFewSizes { needed: 3, got: families.len() });
    }
    let values: Vec<f64> = data.iter().map(|p| p.value).collect();
    let value_range = values.iter().fold(f64::MIN, |a, &b| a.max(b))
        - values.iter().fold(f64::MAX, |a, &b| a.min(b));
    if value_range < 1e-12 {
        return Err(CollapseError::DegenerateData("constant values".into()));
    }
    let xs: Vec<f64> = data.iter().map(|p| p.x).collect();
    let (x_lo, x_hi) = (
        xs.iter().fold(f64::MAX, |a, &b| a.min(b)),
        xs.iter().fold(f64::MIN, |a, &b| a.max(b)),
    );
    if x_hi - x_lo < 1e-12 {
        return Err(CollapseError::DegenerateData("single x value".into()));
    }

    let fit_beta = form == CollapseForm::CoherentInfo;
    let mut center = ((x_lo + x_hi) / 2.0, 1.0f64, 0.5f64);
    let mut half_width = ((x_hi - x_lo) / 2.0, 0.75f64, 0.5f64);
    let mut best = (f64::INFINITY, center);
    for _level in 0..4 {
        let steps = 12usize;
        for i in 0..=steps {
            let x_c = center.0 - half_width.0 + 2.0 * half_width.0 * i as f64 / steps as f64;
            for j in 0..=steps {
                let nu = (center.1 - half_width.1
                    + 2.0 * half_width.1 * j as f64 / steps as f64)
                    .max(0.2);
                let beta_steps = if fit_beta { steps } else { 0 };
                for k in 0..=beta_steps {
                    let beta = if fit_beta {
                        (center.2 - half_width.2
                            + 2.0 * half_width.2 * k as f64 / beta_steps.max(1) as f64)
                            .max(0.0)
                    } else {
                        0.0
                    };
                    let residual = collapse_residual(data, form, degree, x_c, nu, beta);
                    if residual < best.0 {
                        best = (residual, (x_c, nu, beta));
                    }
                }
            }
        }
        center = best.1;
        half_width = (half_width.0 * 0.3, half_width.1 * 0.3, half_width.2 * 0.3);
    }
    let (residual, (x_c, nu, beta)) = best;
    Ok(CollapseFit {
        form,
        x_c,
        nu,
        beta: fit_beta.then_some(beta),
        residual,
        degree,
    })
}
