// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Equilibration diagnostics: detailed balance, the `c̄` trajectory and the
//! closed-form determinant, asymptotic Gibbs populations, the late-time
//! ratios `(1−α)/α → e^{−βΩ}` and `(1−ξ)/ξ → e^{βΩ}`, van Hove scaling and
//! the reservoir return.
//!
//! Tails are the last quarter of the window under study and are summarised
//! by medians.

use serde::{Deserialize, Serialize};

use crate::bath::{thermal_occupation, ModelParams};
use crate::dynmap::PopulationSeries;
use crate::error::{Error, Result};
use crate::exact::{MapCoefficients, OccupationSeries};
use crate::gkls::{median, tail_indices, GklsCoefficients};

/// Closed-form Gibbs populations `(p₊, p₋)` of the qubit.
pub fn asymptotic_populations(params: &ModelParams) -> Result<(f64, f64)> {
    if params.is_vacuum() {
        return Err(Error::invalid(
            "model.beta",
            "vacuum reservoir has no thermal fixed point (use the survival pipeline)",
        ));
    }
    let x = params.beta * params.omega;
    // 1/(1 + e^{x}), written to stay finite for large x
    let p_plus = if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    };
    Ok((p_plus, 1.0 - p_plus))
}

/// `1/c̄(t)` and the predicted determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbarSeries {
    pub times: Vec<f64>,
    pub integral_gamma_plus: Vec<f64>,
    pub inv_cbar: Vec<f64>,
    pub d_pred: Vec<f64>,
}

/// `1/c̄ = [1 − exp(−((2n+1)/n) ∫Γ₊)]/(2n+1)`,
/// `D_pred = exp(−((2n+1)/n) ∫Γ₊)`, with the integral by cumulative
/// trapezoid.
pub fn cbar_and_d(times: &[f64], gamma_plus: &[f64], n: f64) -> Result<CbarSeries> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("n", format!("thermal occupation must be > 0, got {n}")));
    }
    if times.len() != gamma_plus.len() || times.is_empty() {
        return Err(Error::invalid("gamma_plus", "series and grid lengths differ"));
    }
    if let Some(i) = gamma_plus.iter().position(|g| !g.is_finite()) {
        return Err(Error::solver_at("cbar_and_d", i, "masked gap in Gamma_+"));
    }
    let k = (2.0 * n + 1.0) / n;
    let mut integral = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    integral.push(0.0);
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (gamma_plus[i] + gamma_plus[i - 1]);
        integral.push(acc);
    }
    let d_pred: Vec<f64> = integral.iter().map(|&s| (-k * s).exp()).collect();
    let inv_cbar = d_pred.iter().map(|&d| (1.0 - d) / (2.0 * n + 1.0)).collect();
    Ok(CbarSeries {
        times: times.to_vec(),
        integral_gamma_plus: integral,
        inv_cbar,
        d_pred,
    })
}

/// Tail medians of `(1−α)/α` and `(1−ξ)/ξ` with their limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub tail_start: f64,
    pub tail_end: f64,
    pub alpha_ratio: f64,
    pub alpha_limit: f64,
    pub xi_ratio: f64,
    pub xi_limit: f64,
    /// Largest `|D|` over the tail (the limits apply once `D` has decayed).
    pub tail_max_abs_d: f64,
}

/// Ratios over the last quarter of `c`.
pub fn occupation_ratios(c: &MapCoefficients, params: &ModelParams) -> Result<RatioReport> {
    let n = occupation_at_gap(params)?;
    if c.len() < 8 {
        return Err(Error::solver("occupation_ratios", "tail too short"));
    }
    let tail = tail_indices(c.len());
    let mut ra: Vec<f64> = tail.clone().map(|i| (1.0 - c.alpha[i]) / c.alpha[i]).collect();
    let mut rx: Vec<f64> = tail.clone().map(|i| (1.0 - c.xi[i]) / c.xi[i]).collect();
    Ok(RatioReport {
        tail_start: c.times[tail.start],
        tail_end: c.times[tail.end - 1],
        alpha_ratio: median(&mut ra),
        alpha_limit: n / (n + 1.0),
        xi_ratio: median(&mut rx),
        xi_limit: (n + 1.0) / n,
        tail_max_abs_d: tail.map(|i| c.determinant[i].abs()).fold(0.0, f64::max),
    })
}

fn occupation_at_gap(params: &ModelParams) -> Result<f64> {
    if params.is_vacuum() {
        return Err(Error::invalid("model.beta", "thermal diagnostics need a finite temperature"));
    }
    thermal_occupation(params.omega, params.beta)
}

/// Detailed-balance diagnostics over the tail of the valid window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailedBalance {
    pub ratio_series: Vec<f64>,
    pub tail_median_ratio: f64,
    pub expected_ratio: f64,
    /// Tail median of `|Γ₋ n − Γ₊ (n+1)| / |Γ₊ (n+1)|`.
    pub tail_median_mismatch: f64,
}

pub fn detailed_balance(g: &GklsCoefficients, params: &ModelParams) -> Result<DetailedBalance> {
    let n = occupation_at_gap(params)?;
    let end = g.valid_prefix();
    if end < 4 {
        return Err(Error::solver("detailed_balance", "empty tail window"));
    }
    let ratio_series: Vec<f64> = (0..end).map(|i| g.gamma_minus[i] / g.gamma_plus[i]).collect();
    let tail = tail_indices(end);
    let mut r: Vec<f64> = tail.clone().map(|i| ratio_series[i]).filter(|x| x.is_finite()).collect();
    let mut mis: Vec<f64> = tail
        .map(|i| {
            let gp = g.gamma_plus[i] * (n + 1.0);
            (g.gamma_minus[i] * n - gp).abs() / gp.abs()
        })
        .filter(|x| x.is_finite())
        .collect();
    if r.is_empty() || mis.is_empty() {
        return Err(Error::solver("detailed_balance", "no finite rate ratios on the tail"));
    }
    Ok(DetailedBalance {
        ratio_series,
        tail_median_ratio: median(&mut r),
        expected_ratio: (params.beta * params.omega).exp(),
        tail_median_mismatch: median(&mut mis),
    })
}

/// Comparison of the measured determinant with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantCheck {
    pub window_end: f64,
    /// Largest increase of `D` between consecutive points.
    pub max_increase: f64,
    /// Largest `|D − D_pred| / D_pred`.
    pub max_relative_error: f64,
}

/// Checks `D = α+ξ−1` on the first `window` points against
/// `exp(−((2n+1)/n) ∫Γ₊)`.
pub fn determinant_check(c: &MapCoefficients, g: &GklsCoefficients, params: &ModelParams, window: usize) -> Result<DeterminantCheck> {
    let n = occupation_at_gap(params)?;
    let window = window.min(g.valid_prefix()).min(c.len());
    if window < 2 {
        return Err(Error::solver("determinant_check", "valid window too short"));
    }
    let cb = cbar_and_d(&c.times[..window], &g.gamma_plus[..window], n)?;
    let max_increase = c.determinant[..window]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_relative_error = (0..window)
        .map(|i| (c.determinant[i] - cb.d_pred[i]).abs() / cb.d_pred[i])
        .fold(0.0, f64::max);
    Ok(DeterminantCheck {
        window_end: c.times[window - 1],
        max_increase,
        max_relative_error,
    })
}

/// Tail populations against the Gibbs prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTail {
    pub tail_median_excited: f64,
    pub predicted_excited: f64,
    pub relative_error: f64,
}

pub fn population_tail(pops: &PopulationSeries, params: &ModelParams) -> Result<PopulationTail> {
    let (pp, _) = asymptotic_populations(params)?;
    if pops.excited.len() < 4 {
        return Err(Error::solver("population_tail", "tail too short"));
    }
    let mut tail: Vec<f64> = tail_indices(pops.excited.len()).map(|i| pops.excited[i]).collect();
    let m = median(&mut tail);
    Ok(PopulationTail {
        tail_median_excited: m,
        predicted_excited: pp,
        relative_error: (m - pp).abs() / pp,
    })
}

/// Result of comparing two runs on the `λ²t` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub common_window: f64,
    pub sup_difference: f64,
    pub population_range: f64,
    /// `sup_difference / population_range` (zero when both vanish).
    pub relative: f64,
}

/// Sup-norm of the excited-population difference after rescaling both time
/// axes to `λ²t`; `run_b` is linearly interpolated onto `run_a`'s points.
pub fn van_hove_collapse(
    run_a: &PopulationSeries,
    lambda_a: f64,
    run_b: &PopulationSeries,
    lambda_b: f64,
) -> Result<CollapseReport> {
    if run_a.times.len() < 2 || run_b.times.len() < 2 {
        return Err(Error::invalid("runs", "each run needs at least two points"));
    }
    let (sa, sb) = if lambda_a == lambda_b {
        (1.0, 1.0)
    } else if lambda_a > 0.0 && lambda_b > 0.0 {
        (lambda_a * lambda_a, lambda_b * lambda_b)
    } else {
        return Err(Error::invalid("lambda", "cannot rescale a coupled run against an uncoupled one"));
    };
    let ta: Vec<f64> = run_a.times.iter().map(|t| t * sa).collect();
    let tb: Vec<f64> = run_b.times.iter().map(|t| t * sb).collect();
    let window = ta.last().unwrap().min(*tb.last().unwrap());
    let mut sup: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut j = 0;
    for (i, &t) in ta.iter().enumerate() {
        if t > window * (1.0 + 1e-12) {
            break;
        }
        while j + 2 < tb.len() && tb[j + 1] < t {
            j += 1;
        }
        let (t0, t1) = (tb[j], tb[j + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let pb = run_b.excited[j] * (1.0 - w) + run_b.excited[j + 1] * w;
        let pa = run_a.excited[i];
        sup = sup.max((pa - pb).abs());
        lo = lo.min(pa);
        hi = hi.max(pa);
    }
    let range = hi - lo;
    Ok(CollapseReport {
        common_window: window,
        sup_difference: sup,
        population_range: range,
        relative: if sup == 0.0 { 0.0 } else { sup / range },
    })
}

/// Per-mode reservoir return within the window where `D > d_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReturn {
    pub mode: usize,
    pub peak_deviation: f64,
    pub peak_time: f64,
    /// First time after the peak with deviation below `fraction·peak`.
    pub return_time: Option<f64>,
    /// Smallest deviation after the peak, relative to the peak.
    pub min_relative_after_peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirReturn {
    pub d_floor: f64,
    pub fraction: f64,
    pub window_end: f64,
    pub modes: Vec<ModeReturn>,
}

impl ReservoirReturn {
    pub fn all_returned(&self) -> bool {
        self.modes.iter().all(|m| m.return_time.is_some())
    }

    /// Latest return time across modes: the observed reservoir time scale.
    pub fn observed_return_time(&self) -> Option<f64> {
        self.modes
            .iter()
            .map(|m| m.return_time)
            .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// `occ` and `determinant` must share a grid. Modes with no transient are
/// reported as returned at time zero.
pub fn reservoir_return(
    occ: &OccupationSeries,
    determinant: &[f64],
    d_floor: f64,
    fraction: f64,
) -> Result<ReservoirReturn> {
    if occ.times.len() != determinant.len() {
        return Err(Error::invalid("occupations", "occupation and determinant grids differ"));
    }
    let end = determinant.iter().position(|&d| d <= d_floor).unwrap_or(determinant.len());
    if end < 3 {
        return Err(Error::solver("reservoir_return", "window with D above the floor is too short"));
    }
    let n_modes = occ.initial.len();
    let modes = (0..n_modes)
        .map(|k| {
            let dev: Vec<f64> = (0..end).map(|i| (occ.occupations[i][k] - occ.initial[k]).abs()).collect();
            let (ip, &peak) = dev
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty window");
            if peak == 0.0 {
                return ModeReturn {
                    mode: k,
                    peak_deviation: 0.0,
                    peak_time: 0.0,
                    return_time: Some(0.0),
                    min_relative_after_peak: 0.0,
                };
            }
            let after = &dev[ip..];
            let ret = after.iter().position(|&d| d < fraction * peak).map(|j| occ.times[ip + j]);
            let min_after = after.iter().copied().fold(f64::INFINITY, f64::min);
            ModeReturn {
                mode: k,
                peak_deviation: peak,
                peak_time: occ.times[ip],
                return_time: ret,
                min_relative_after_peak: min_after / peak,
            }
        })
        .collect();
    Ok(ReservoirReturn {
        d_floor,
        fraction,
        window_end: occ.times[end - 1],
        modes,
    })
}

/// Everything the equilibrium pipeline reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub n: f64,
    pub p_plus_asymptotic: f64,
    pub p_minus_asymptotic: f64,
    pub valid_window_end: f64,
    pub population_tail: PopulationTail,
    pub detailed_balance_tail_median: f64,
    pub detailed_balance_expected: f64,
    pub detailed_balance_mismatch: f64,
    pub determinant: DeterminantCheck,
    pub cbar: CbarSeries,
    pub ratios: RatioReport,
    pub stationarity: crate::gkls::StationarityReport,
    pub reservoir: Option<ReservoirReturn>,
    pub collapse: Option<CollapseReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::VACUUM;
    use crate::dynmap::{populations, CoefficientPoint};
    use crate::gkls::rates_from_map;
    use num_complex::Complex64;

    /// Thermal amplitude damping: Γ₋ = κ(n+1), Γ₊ = κn.
    fn markov_thermal(n: f64, kappa: f64, t_max: f64, steps: usize) -> MapCoefficients {
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * t_max / steps as f64).collect();
        let pts = times
            .iter()
            .map(|&t| {
                let e = (-kappa * (2.0 * n + 1.0) * t).exp();
                let xi = (n + (n + 1.0) * e) / (2.0 * n + 1.0);
                let alpha = (n + 1.0 + n * e) / (2.0 * n + 1.0);
                CoefficientPoint {
                    alpha,
                    xi,
                    gamma: 1.0 - alpha,
                    zeta: 1.0 - xi,
                    eta: Complex64::new((-0.5 * kappa * (2.0 * n + 1.0) * t).exp(), 0.0),
                }
            })
            .collect();
        MapCoefficients::from_points(times, pts)
    }

    fn params(beta_omega: f64) -> ModelParams {
        ModelParams::new(1.0, beta_omega, 0.1).unwrap()
    }

    #[test]
    fn gibbs_populations() {
        let (p, m) = asymptotic_populations(&params(3f64.ln())).unwrap();
        assert!((p - 0.25).abs() < 1e-15 && (m - 0.75).abs() < 1e-15);
        let (p, _) = asymptotic_populations(&params(1e-12)).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let (p, m) = asymptotic_populations(&params(800.0)).unwrap();
        assert!(p < 1e-300 && m == 1.0);
        let (p, m) = asymptotic_populations(&params(2f64.ln())).unwrap();
        assert!((p + m - 1.0).abs() < 1e-15 && (p - 1.0 / 3.0).abs() < 1e-15);
        assert!(asymptotic_populations(&ModelParams::new(1.0, VACUUM, 0.1).unwrap()).is_err());
    }

    #[test]
    fn cbar_without_dissipation() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let cb = cbar_and_d(&t, &[0.0; 10], 0.7).unwrap();
        assert!(cb.inv_cbar.iter().all(|&x| x == 0.0));
        assert!(cb.d_pred.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn cbar_limit() {
        let n = 0.5;
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.1).collect();
        let cb = cbar_and_d(&t, &vec![0.2; 2000], n).unwrap();
        assert!((cb.inv_cbar.last().unwrap() - 1.0 / (2.0 * n + 1.0)).abs() < 1e-12);
        let mut gp = vec![0.2; 10];
        gp[4] = f64::NAN;
        assert!(cbar_and_d(&t[..10], &gp, n).is_err());
    }

    #[test]
    fn ratio_limits() {
        let r = occupation_ratios(&markov_thermal(1.0, 0.05, 400.0, 4000), &params(2f64.ln())).unwrap();
        assert!((r.alpha_limit - 0.5).abs() < 1e-12 && (r.xi_limit - 2.0).abs() < 1e-12);
        assert!((r.alpha_ratio - 0.5).abs() < 1e-6 && (r.xi_ratio - 2.0).abs() < 1e-5);
        let r = occupation_ratios(&markov_thermal(0.5, 0.05, 400.0, 4000), &params(3f64.ln())).unwrap();
        assert!((r.alpha_limit - 1.0 / 3.0).abs() < 1e-12 && (r.xi_limit - 3.0).abs() < 1e-12);
    }

    #[test]
    fn markovian_map_satisfies_all_thermal_checks() {
        let p = params(2f64.ln());
        let n = 1.0;
        let c = markov_thermal(n, 0.02, 300.0, 3000);
        let g = rates_from_map(&c).unwrap();
        let db = detailed_balance(&g, &p).unwrap();
        assert!((db.tail_median_ratio - 2.0).abs() < 1e-6);
        assert!(db.tail_median_mismatch < 1e-6);
        let dc = determinant_check(&c, &g, &p, c.len()).unwrap();
        assert!(dc.max_increase <= 0.0);
        assert!(dc.max_relative_error < 1e-6);
        let pops = populations(&c, (1.0, 0.0)).unwrap();
        let tail = population_tail(&pops, &p).unwrap();
        assert!(tail.relative_error < 1e-3);
    }

    #[test]
    fn collapse_of_scaled_markovian_runs() {
        let n = 1.0;
        let run = |lambda: f64, t_max: f64| {
            let c = markov_thermal(n, lambda * lambda, t_max, 2000);
            populations(&c, (1.0, 0.0)).unwrap()
        };
        let a = run(0.2, 500.0);
        let b = run(0.1, 2000.0);
        let r = van_hove_collapse(&a, 0.2, &b, 0.1).unwrap();
        assert!(r.relative < 1e-4, "{r:?}");
        let same = van_hove_collapse(&a, 0.2, &a, 0.2).unwrap();
        assert_eq!(same.sup_difference, 0.0);
        let flat = run(0.0, 10.0);
        assert_eq!(van_hove_collapse(&flat, 0.0, &flat, 0.0).unwrap().relative, 0.0);
    }

    #[test]
    fn reservoir_return_detects_transient() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        // bump that rises and decays, and a mode that never moves
        let occupations = times
            .iter()
            .map(|&t| vec![1.0 + t * (-t).exp(), 0.3])
            .collect();
        let occ = OccupationSeries { times: times.clone(), occupations, initial: vec![1.0, 0.3] };
        let d = vec![0.9; 100];
        let r = reservoir_return(&occ, &d, 0.5, 0.1).unwrap();
        assert!((r.modes[0].peak_time - 1.0).abs() < 1e-12);
        let ret = r.modes[0].return_time.unwrap();
        // root of t e^{-t} = 0.1/e beyond the peak, by bisection
        let (mut lo, mut hi) = (1.0f64, 20.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid * (-mid).exp() > 0.1 * (-1.0f64).exp() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(ret >= lo && ret - lo < 0.1 + 1e-12, "{ret} vs {lo}");
        assert_eq!(r.modes[1].return_time, Some(0.0));
        assert!(r.all_returned());
    }
}
