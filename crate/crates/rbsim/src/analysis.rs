//! Decay-curve fitting and error-per-gate figures.
//!
//! Three models cover the study: A (1-d)^x for well-behaved benchmarking
//! decays, A a^(x^k) for the sub-exponential decays of uncompensated
//! pulses, and a plain quadratic for short-time coherence decays. Fits are
//! weighted Levenberg-Marquardt with analytic Jacobians; standard errors
//! come from the fit covariance.

use crate::engine::DecayCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// y = A (1 - d)^x; params [A, d].
    Exponential,
    /// y = A a^(x^k); params [A, a, k].
    Stretched,
    /// y = c2 x^2 + c1 x + c0; params [c2, c1, c0].
    Quadratic,
}

impl FitModel {
    pub fn name(&self) -> &'static str {
        match self {
            FitModel::Exponential => "exponential",
            FitModel::Stretched => "stretched",
            FitModel::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Weighted root-sum-square residual.
    pub residual_norm: f64,
}

impl FitResult {
    /// Decay parameter d of an exponential fit.
    pub fn d(&self) -> Option<f64> {
        matches!(self.model, FitModel::Exponential).then(|| self.params[1])
    }

    /// Stretching exponent k of a stretched fit.
    pub fn k(&self) -> Option<f64> {
        matches!(self.model, FitModel::Stretched).then(|| self.params[2])
    }

    /// 1/e constant of an exponential fit, in x units: -1 / ln(1 - d).
    pub fn time_constant(&self) -> Option<f64> {
        self.d().map(|d| -1.0 / (1.0 - d).ln())
    }
}

struct FitData {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    weighted: bool,
}

fn fit_data(curve: &DecayCurve) -> FitData {
    let x: Vec<f64> = curve.points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = curve.points.iter().map(|p| p.mean).collect();
    let weighted = !curve.points.is_empty() && curve.points.iter().all(|p| p.stderr > 0.0);
    let w = if weighted {
        curve.points.iter().map(|p| 1.0 / (p.stderr * p.stderr)).collect()
    } else {
        vec![1.0; y.len()]
    };
    FitData { x, y, w, weighted }
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

fn invert_matrix(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_linear(a.to_vec(), e)?;
        for row in 0..n {
            out[row][col] = x[row];
        }
    }
    Some(out)
}

const LM_MAX_ITERS: usize = 500;
const LM_PARAM_TOL: f64 = 1e-10;

/// Weighted Levenberg-Marquardt. `model(p, x)` evaluates the curve,
/// `jac(p, x)` its gradient in the parameters, and `in_domain` guards the
/// valid parameter region; steps leaving it are rejected.
fn lm_fit(
    name: &'static str,
    data: &FitData,
    p0: &[f64],
    model: &dyn Fn(&[f64], f64) -> f64,
    jac: &dyn Fn(&[f64], f64) -> Vec<f64>,
    in_domain: &dyn Fn(&[f64]) -> bool,
) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
    let npar = p0.len();
    let ssr = |p: &[f64]| -> f64 {
        data.x
            .iter()
            .zip(&data.y)
            .zip(&data.w)
            .map(|((&x, &y), &w)| {
                let r = y - model(p, x);
                w * r * r
            })
            .sum()
    };

    let mut p = p0.to_vec();
    if !in_domain(&p) {
        return Err(Error::FitFailure {
            model: name,
            reason: "initial parameters outside the model domain".into(),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let mut current = ssr(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < LM_MAX_ITERS {
        iterations += 1;
        // Normal equations J^T W J and J^T W r.
        let mut jtj = vec![vec![0.0; npar]; npar];
        let mut jtr = vec![0.0; npar];
        for ((&x, &y), &w) in data.x.iter().zip(&data.y).zip(&data.w) {
            let g = jac(&p, x);
            let r = y - model(&p, x);
            for i in 0..npar {
                jtr[i] += w * g[i] * r;
                for j in 0..npar {
                    jtj[i][j] += w * g[i] * g[j];
                }
            }
        }

        let mut stepped = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for i in 0..npar {
                damped[i][i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(delta) = solve_linear(damped, jtr.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            if !in_domain(&candidate) {
                lambda *= 10.0;
                continue;
            }
            let trial = ssr(&candidate);
            if trial.is_finite() && trial <= current {
                let rel = delta
                    .iter()
                    .zip(&p)
                    .map(|(d, v)| d.abs() / (v.abs() + 1e-12))
                    .fold(0.0, f64::max);
                p = candidate;
                current = trial;
                lambda = (lambda / 10.0).max(1e-15);
                if rel < LM_PARAM_TOL {
                    converged = true;
                }
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !stepped {
            // No acceptable step at any damping: stationary point.
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::FitFailure {
            model: name,
            reason: "did not converge".into(),
            iterations,
            residual: current.sqrt(),
        });
    }

    // Covariance from the converged Jacobian.
    let mut jtj = vec![vec![0.0; npar]; npar];
    for (&x, &w) in data.x.iter().zip(&data.w) {
        let g = jac(&p, x);
        for i in 0..npar {
            for j in 0..npar {
                jtj[i][j] += w * g[i] * g[j];
            }
        }
    }
    let stderr = match invert_matrix(&jtj) {
        Some(cov) => {
            // With true 1/sigma^2 weights the covariance is (J^T W J)^-1;
            // unit weights are rescaled by the residual variance.
            let scale = if data.weighted {
                1.0
            } else {
                let dof = (data.x.len() as f64 - npar as f64).max(1.0);
                current / dof
            };
            (0..npar).map(|i| (cov[i][i] * scale).max(0.0).sqrt()).collect()
        }
        None => vec![f64::NAN; npar],
    };
    Ok((p, stderr, current.sqrt(), iterations))
}

/// Fits A (1 - d)^x by weighted least squares.
pub fn fit_exponential(curve: &DecayCurve) -> Result<FitResult> {
    if curve.points.len() < 3 {
        return Err(Error::InvalidInput(
            "exponential fit needs at least 3 points".into(),
        ));
    }
    let data = fit_data(curve);
    // Log-linear initialization on the positive points.
    let usable: Vec<(f64, f64)> = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(_, &y)| y > 1e-12)
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    let p0 = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let d0 = (1.0 - slope.exp()).clamp(-0.5, 1.0 - 1e-12);
        vec![(my - slope * mx).exp(), d0]
    } else {
        vec![data.y.first().copied().unwrap_or(1.0).max(0.1), 0.1]
    };

    let model = |p: &[f64], x: f64| p[0] * (1.0 - p[1]).powf(x);
    let jac = |p: &[f64], x: f64| {
        let base = (1.0 - p[1]).powf(x);
        vec![base, -p[0] * x * (1.0 - p[1]).powf(x - 1.0)]
    };
    let in_domain = |p: &[f64]| p[1] < 1.0 - 1e-15 && p.iter().all(|v| v.is_finite());
    let (params, stderr, residual_norm, iterations) =
        lm_fit("exponential", &data, &p0, &model, &jac, &in_domain)?;
    if !(-1e-9..=2.0).contains(&params[1]) {
        return Err(Error::FitFailure {
            model: "exponential",
            reason: format!("depolarizing parameter d = {} outside [0, 2]", params[1]),
            iterations,
            residual: residual_norm,
        });
    }
    Ok(FitResult {
        model: FitModel::Exponential,
        params,
        stderr,
        residual_norm,
    })
}

/// Fits A a^(x^k) by weighted least squares with multistart over the
/// stretching exponent; requires x >= 1.
pub fn fit_stretched(curve: &DecayCurve) -> Result<FitResult> {
    if curve.points.len() < 4 {
        return Err(Error::InvalidInput(
            "stretched fit needs at least 4 points".into(),
        ));
    }
    if curve.points.iter().any(|p| p.x < 1.0) {
        return Err(Error::InvalidInput("stretched fit needs x >= 1".into()));
    }
    let data = fit_data(curve);
    let model = |p: &[f64], x: f64| p[0] * p[1].powf(x.powf(p[2]));
    let jac = |p: &[f64], x: f64| {
        let u = x.powf(p[2]);
        let au = p[1].powf(u);
        vec![
            au,
            p[0] * u * p[1].powf(u - 1.0),
            p[0] * au * p[1].ln() * u * x.ln(),
        ]
    };
    let in_domain = |p: &[f64]| {
        p[0] > 0.0
            && p[1] > 1e-9
            && p[1] <= 1.0 - 1e-15
            && p[2] > 0.02
            && p[2] <= 3.0
            && p.iter().all(|v| v.is_finite())
    };

    // Multistart over k to escape the stretched-decay local minima.
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, usize)> = None;
    for k0 in [0.25, 0.5, 0.75, 1.0] {
        // Given k, the model is log-linear in (ln A, ln a) over u = x^k.
        let usable: Vec<(f64, f64)> = data
            .x
            .iter()
            .zip(&data.y)
            .filter(|(_, &y)| y > 1e-12)
            .map(|(&x, &y)| (x.powf(k0), y.ln()))
            .collect();
        let p0 = if usable.len() >= 2 {
            let n = usable.len() as f64;
            let mu = usable.iter().map(|p| p.0).sum::<f64>() / n;
            let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
            let suu: f64 = usable.iter().map(|p| (p.0 - mu) * (p.0 - mu)).sum();
            let suy: f64 = usable.iter().map(|p| (p.0 - mu) * (p.1 - my)).sum();
            let ln_a = if suu > 0.0 { (suy / suu).min(-1e-12) } else { -0.1 };
            let ln_big_a = my - ln_a * mu;
            vec![ln_big_a.exp().clamp(1e-6, 2.0), ln_a.exp(), k0]
        } else {
            vec![1.0, 0.9, k0]
        };
        if let Ok(result) = lm_fit("stretched", &data, &p0, &model, &jac, &in_domain) {
            if best.as_ref().is_none_or(|b| result.2 < b.2) {
                best = Some(result);
            }
        }
    }
    let (params, stderr, residual_norm, _) = best.ok_or(Error::FitFailure {
        model: "stretched",
        reason: "no multistart converged".into(),
        iterations: LM_MAX_ITERS,
        residual: f64::NAN,
    })?;
    Ok(FitResult {
        model: FitModel::Stretched,
        params,
        stderr,
        residual_norm,
    })
}

/// Ordinary (weighted) polynomial least squares for c2 x^2 + c1 x + c0.
pub fn fit_quadratic(curve: &DecayCurve) -> Result<FitResult> {
    if curve.points.len() < 3 {
        return Err(Error::InvalidInput(
            "quadratic fit needs at least 3 points".into(),
        ));
    }
    let data = fit_data(curve);
    let basis = |x: f64| [x * x, x, 1.0];
    let mut xtx = vec![vec![0.0; 3]; 3];
    let mut xty = vec![0.0; 3];
    for ((&x, &y), &w) in data.x.iter().zip(&data.y).zip(&data.w) {
        let b = basis(x);
        for i in 0..3 {
            xty[i] += w * b[i] * y;
            for j in 0..3 {
                xtx[i][j] += w * b[i] * b[j];
            }
        }
    }
    let params = solve_linear(xtx.clone(), xty).ok_or(Error::FitFailure {
        model: "quadratic",
        reason: "singular normal equations".into(),
        iterations: 0,
        residual: f64::NAN,
    })?;
    let ssr: f64 = data
        .x
        .iter()
        .zip(&data.y)
        .zip(&data.w)
        .map(|((&x, &y), &w)| {
            let b = basis(x);
            let r = y - (params[0] * b[0] + params[1] * b[1] + params[2] * b[2]);
            w * r * r
        })
        .sum();
    let stderr = match invert_matrix(&xtx) {
        Some(cov) => {
            let scale = if data.weighted {
                1.0
            } else {
                ssr / (data.x.len() as f64 - 3.0).max(1.0)
            };
            (0..3).map(|i| (cov[i][i] * scale).max(0.0).sqrt()).collect()
        }
        None => vec![f64::NAN; 3],
    };
    Ok(FitResult {
        model: FitModel::Quadratic,
        params,
        stderr,
        residual_norm: ssr.sqrt(),
    })
}

/// Error per gate from an exponential fit: EPG = d/2, with the propagated
/// standard error.
pub fn epg_from_fit(fit: &FitResult) -> Result<(f64, f64)> {
    if fit.model != FitModel::Exponential {
        return Err(Error::InvalidInput(format!(
            "EPG requires an exponential fit, got {}",
            fit.model.name()
        )));
    }
    Ok((fit.params[1] / 2.0, fit.stderr[1] / 2.0))
}

/// Dephasing-limited error per gate for a gate of duration tau under a
/// coherence time t2: (1 - e^(-tau/t2)) / 3. The 1/3 weight is the
/// average-fidelity cost of a dephasing channel (two of the three Bloch
/// axes are affected, with flip probability (1 - e^(-tau/t2)) / 2).
pub fn epg_limit(tau: f64, t2: f64) -> f64 {
    assert!(tau > 0.0 && t2 > 0.0, "durations must be positive");
    (1.0 - (-tau / t2).exp()) / 3.0
}

/// Least-squares slope of ln y against ln x; points with y <= 0 are
/// rejected by the caller.
pub fn power_law_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}
