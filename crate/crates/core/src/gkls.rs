// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-local GKLS generator extracted from the exact map, and its
//! integrator.
//!
//! With `D = α + ξ − 1`,
//!
//! ```text
//! F  = −η̇/(2η) + (ξ̇ + α̇)/(4D),   Γ_z = Re F,   G = −Im F
//! Γ₋ = −(α ξ̇ + (1−ξ) α̇)/D
//! Γ₊ = −(α̇ ξ + (1−α) ξ̇)/D
//! ```
//!
//! and in components the master equation reads
//!
//! ```text
//! ṗ₊  = −Γ₋ p₊ + Γ₊ p₋
//! ρ̇₊₋ = [−2iG − 2Γ_z − (Γ₊ + Γ₋)/2] ρ₊₋
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynmap::QubitState;
use crate::error::{Error, Result};
use crate::exact::MapCoefficients;

/// Default mask threshold on `|D|`.
pub const D_MIN: f64 = 1e-6;
/// Points with `|η|` below this are masked (log-derivative undefined).
pub const ETA_MIN: f64 = 1e-12;
/// Default bound on the derivative self-test (see [`RateOptions`]).
pub const SELF_TEST_TOL: f64 = 1e-2;
/// Trace drift tolerated by the integrator.
pub const TRACE_TOL: f64 = 1e-10;
/// Coefficient noise assumed by the derivative self-test; derivative
/// scales below `DERIVATIVE_NOISE / Δt` are treated as zero.
pub const DERIVATIVE_NOISE: f64 = 1e-10;

/// Knobs for [`rates_from_map_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub d_min: f64,
    /// The derivatives are recomputed from every other grid point; if the
    /// largest change (relative to the largest derivative of the series)
    /// exceeds this, the grid is rejected as too coarse.
    pub self_test_tol: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            d_min: D_MIN,
            self_test_tol: SELF_TEST_TOL,
        }
    }
}

/// Generator coefficients on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GklsCoefficients {
    pub times: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_z: Vec<f64>,
    pub g: Vec<f64>,
    pub f: Vec<Complex64>,
    pub valid: Vec<bool>,
    /// Outcome of the derivative self-test (relative).
    pub self_test: f64,
}

impl GklsCoefficients {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index one past the end of the leading run of valid points.
    pub fn valid_prefix(&self) -> usize {
        self.valid.iter().position(|v| !v).unwrap_or(self.len())
    }

    /// All-zero generator on `times`.
    pub fn zero(times: Vec<f64>) -> Self {
        let n = times.len();
        GklsCoefficients {
            times,
            gamma_plus: vec![0.0; n],
            gamma_minus: vec![0.0; n],
            gamma_z: vec![0.0; n],
            g: vec![0.0; n],
            f: vec![Complex64::new(0.0, 0.0); n],
            valid: vec![true; n],
            self_test: 0.0,
        }
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 5 {
        return Err(Error::invalid("time.steps", "rate extraction needs at least 5 grid points"));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::invalid("time", format!("grid not uniform at index {i}")));
        }
    }
    if !(h > 0.0) {
        return Err(Error::invalid("time", "grid spacing must be positive"));
    }
    Ok(h)
}

/// Fourth-order finite-difference derivative of uniformly sampled data
/// (centred in the interior, one-sided at the two points of each end).
pub fn derivative<T>(f: &[T], h: f64) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    assert!(n >= 5, "derivative needs at least 5 points");
    let s = 1.0 / (12.0 * h);
    let mut d = Vec::with_capacity(n);
    d.push((f[1] * 48.0 - f[0] * 25.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * s);
    d.push((f[2] * 18.0 - f[0] * 3.0 - f[1] * 10.0 - f[3] * 6.0 + f[4]) * s);
    for i in 2..n - 2 {
        d.push((f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * s);
    }
    let m = n - 1;
    d.push((f[m - 1] * 10.0 + f[m] * 3.0 - f[m - 2] * 18.0 + f[m - 3] * 6.0 - f[m - 4]) * s);
    d.push((f[m] * 25.0 - f[m - 1] * 48.0 + f[m - 2] * 36.0 - f[m - 3] * 16.0 + f[m - 4] * 3.0) * s);
    d
}

/// Rates with default options.
pub fn rates_from_map(c: &MapCoefficients) -> Result<GklsCoefficients> {
    rates_from_map_with(c, RateOptions::default())
}

pub fn rates_from_map_with(c: &MapCoefficients, opts: RateOptions) -> Result<GklsCoefficients> {
    let h = check_uniform(&c.times)?;
    let da = derivative(&c.alpha, h);
    let dx = derivative(&c.xi, h);
    let de = derivative(&c.eta, h);

    let self_test = if c.len() >= 9 {
        let sub = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<f64>>();
        let subc = |v: &[Complex64]| v.iter().step_by(2).copied().collect::<Vec<Complex64>>();
        let da2 = derivative(&sub(&c.alpha), 2.0 * h);
        let dx2 = derivative(&sub(&c.xi), 2.0 * h);
        let de2 = derivative(&subc(&c.eta), 2.0 * h);
        // below `floor` a derivative is indistinguishable from roundoff
        let floor = DERIVATIVE_NOISE / h;
        let rel = |fine: &[f64], coarse: &[f64]| {
            let scale = fine.iter().fold(floor, |m, x| m.max(x.abs()));
            coarse
                .iter()
                .enumerate()
                .map(|(i, x)| (x - fine[2 * i]).abs())
                .fold(0.0, f64::max)
                / scale
        };
        let scale_e = de.iter().fold(floor, |m, x| m.max(x.norm()));
        let rel_e = de2.iter().enumerate().map(|(i, x)| (x - de[2 * i]).norm()).fold(0.0, f64::max) / scale_e;
        rel(&da, &da2).max(rel(&dx, &dx2)).max(rel_e)
    } else {
        0.0
    };
    if self_test > opts.self_test_tol {
        return Err(Error::solver(
            "rates_from_map",
            format!(
                "derivative self-test failed: halving the sampling changes derivatives by {self_test:.3e} (> {}); refine the time grid",
                opts.self_test_tol
            ),
        ));
    }

    let n = c.len();
    let mut out = GklsCoefficients::zero(c.times.clone());
    out.self_test = self_test;
    for i in 0..n {
        let (a, x, eta) = (c.alpha[i], c.xi[i], c.eta[i]);
        let d = c.determinant[i];
        if d.abs() < opts.d_min || eta.norm() < ETA_MIN {
            out.valid[i] = false;
            out.gamma_plus[i] = f64::NAN;
            out.gamma_minus[i] = f64::NAN;
            out.gamma_z[i] = f64::NAN;
            out.g[i] = f64::NAN;
            out.f[i] = Complex64::new(f64::NAN, f64::NAN);
            continue;
        }
        let f = -de[i] / (2.0 * eta) + (dx[i] + da[i]) / (4.0 * d);
        out.f[i] = f;
        out.gamma_z[i] = f.re;
        out.g[i] = -f.im;
        out.gamma_minus[i] = -(a * dx[i] + (1.0 - x) * da[i]) / d;
        out.gamma_plus[i] = -(da[i] * x + (1.0 - a) * dx[i]) / d;
        out.valid[i] = [out.gamma_plus[i], out.gamma_minus[i], f.re, f.im]
            .iter()
            .all(|v| v.is_finite());
    }
    Ok(out)
}

/// Integrated master-equation trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GklsTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
}

/// Integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

// Rates needed by the right-hand side, on the grid.
struct RateTable<'a> {
    g: &'a GklsCoefficients,
    t0: f64,
    h: f64,
    end: usize,
}

impl RateTable<'_> {
    // (Γ₊, Γ₋, κ) at time t by cubic Lagrange interpolation over the four
    // nearest grid points of the valid window.
    fn eval(&self, t: f64) -> (f64, f64, Complex64) {
        let n = self.end;
        let x = (t - self.t0) / self.h;
        let i0 = if n < 4 {
            0
        } else {
            (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize
        };
        let m = n.min(4);
        let mut gp = 0.0;
        let mut gm = 0.0;
        let mut kappa = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let mut w = 1.0;
            for k in 0..m {
                if k != j {
                    w *= (x - (i0 + k) as f64) / (j as f64 - k as f64);
                }
            }
            let idx = i0 + j;
            gp += w * self.g.gamma_plus[idx];
            gm += w * self.g.gamma_minus[idx];
            let f = self.g.f[idx];
            // −2iG − 2Γ_z with G = −Im F, Γ_z = Re F  ⇒  −2 F*
            kappa += w * (-2.0 * f.conj());
        }
        let kappa = kappa - 0.5 * (gp + gm);
        (gp, gm, kappa)
    }

    fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let (gp, gm, kappa) = self.eval(t);
        let flow = -gm * y[0] + gp * y[1];
        let c = kappa * Complex64::new(y[2], y[3]);
        [flow, -flow, c.re, c.im]
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(table: &RateTable, t: f64, y: &[f64; 4], h: f64) -> ([f64; 4], f64, f64) {
    let mut k = [[0.0; 4]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for c in 0..4 {
                ys[c] += h * A[s][j] * kj[c];
            }
        }
        k[s] = table.rhs(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; 4];
    for s in 0..7 {
        for c in 0..4 {
            y5[c] += h * B5[s] * k[s][c];
            err[c] += h * (B5[s] - B4[s]) * k[s][c];
        }
    }
    let scale = |c: usize| 1.0 + y[c].abs().max(y5[c].abs());
    let norm = (0..4).map(|c| (err[c] / scale(c)).abs()).fold(0.0, f64::max);
    (y5, norm, t + h)
}

/// Integrates the master equation from `rho0` at `g.times[0]` and reports
/// the state at every time in `at`. All of `at` must lie in the leading
/// valid window of `g`.
pub fn integrate_gkls(g: &GklsCoefficients, rho0: &QubitState, at: &[f64]) -> Result<GklsTrajectory> {
    integrate_gkls_with(g, rho0, at, IntegratorOptions::default())
}

pub fn integrate_gkls_with(
    g: &GklsCoefficients,
    rho0: &QubitState,
    at: &[f64],
    opts: IntegratorOptions,
) -> Result<GklsTrajectory> {
    QubitState::new(rho0.matrix())?;
    let h_grid = check_uniform(&g.times)?;
    let end = g.valid_prefix();
    if end < 2 {
        return Err(Error::solver_at("integrate_gkls", end, "no valid window at the start of the grid"));
    }
    let t0 = g.times[0];
    let t_end = g.times[end - 1];
    for (i, w) in at.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::invalid("times", format!("output times not sorted at index {i}")));
        }
    }
    if let Some(&last) = at.last() {
        if last > t_end + 1e-12 * t_end.max(1.0) {
            let idx = ((last - t0) / h_grid).round() as usize;
            return Err(Error::solver_at(
                "integrate_gkls",
                idx.min(end),
                format!("requested time {last} beyond valid window ending at {t_end} (masked region)"),
            ));
        }
    }
    if at.first().is_some_and(|&t| t < t0) {
        return Err(Error::invalid("times", "output time before start of grid"));
    }
    let table = RateTable { g, t0, h: h_grid, end };
    let pm = rho0.rho_pm();
    let mut y = [rho0.rho_pp(), rho0.rho_mm(), pm.re, pm.im];
    let mut t = t0;
    let mut h = h_grid * 0.25;
    let mut states = Vec::with_capacity(at.len());
    let mut steps = 0usize;
    let tol = opts.rel_tol.max(opts.abs_tol);
    for &target in at {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::solver("integrate_gkls", "step budget exhausted"));
            }
            let step = h.min(target - t);
            let (y_new, err, t_new) = dp_step(&table, t, &y, step);
            steps += 1;
            if !y_new.iter().all(|v| v.is_finite()) {
                let idx = ((t - t0) / h_grid).round() as usize;
                return Err(Error::solver_at("integrate_gkls", idx, "non-finite state"));
            }
            if err <= tol {
                y = y_new;
                t = if target - t_new < 1e-14 * target.abs().max(1.0) { target } else { t_new };
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
            h = (step * factor).min(h_grid);
            if h < 1e-14 * h_grid {
                let idx = ((t - t0) / h_grid).round() as usize;
                return Err(Error::solver_at("integrate_gkls", idx, "step size underflow"));
            }
        }
        let trace = y[0] + y[1];
        if (trace - 1.0).abs() > TRACE_TOL {
            let idx = ((t - t0) / h_grid).round() as usize;
            return Err(Error::solver_at("integrate_gkls", idx, format!("trace drift {:.3e}", trace - 1.0)));
        }
        states.push(QubitState::from_parts_unchecked(y[0], Complex64::new(y[2], y[3]), y[1]));
    }
    Ok(GklsTrajectory {
        times: at.to_vec(),
        states,
    })
}

/// Instantaneous fixed point `Γ₊/(Γ₊+Γ₋)` over the tail of the valid window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub tail_start: f64,
    pub tail_end: f64,
    pub median_fixed_point: f64,
    /// `max − min` of the fixed point over the tail.
    pub drift: f64,
    pub first: f64,
    pub last: f64,
}

/// Indices of the last quarter of the leading valid window.
pub fn tail_indices(valid_end: usize) -> std::ops::Range<usize> {
    let start = valid_end - valid_end / 4;
    start.min(valid_end.saturating_sub(1))..valid_end
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn stationarity_report(g: &GklsCoefficients) -> Result<StationarityReport> {
    let end = g.valid_prefix();
    if end < 4 {
        return Err(Error::solver("stationarity_report", "empty tail window"));
    }
    let tail = tail_indices(end);
    let fp: Vec<f64> = tail
        .clone()
        .map(|i| g.gamma_plus[i] / (g.gamma_plus[i] + g.gamma_minus[i]))
        .filter(|x| x.is_finite())
        .collect();
    if fp.is_empty() {
        return Err(Error::solver("stationarity_report", "empty tail window"));
    }
    let lo = fp.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (first, last) = (fp[0], fp[fp.len() - 1]);
    Ok(StationarityReport {
        tail_start: g.times[tail.start],
        tail_end: g.times[tail.end - 1],
        median_fixed_point: median(&mut fp.clone()),
        drift: hi - lo,
        first,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynmap::{apply_map, CoefficientPoint};

    fn jc_series(g: f64, t_max: f64, n: usize) -> MapCoefficients {
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * t_max / n as f64).collect();
        let pts = times
            .iter()
            .map(|&t| {
                let c = (g * t).cos();
                CoefficientPoint {
                    alpha: 1.0,
                    xi: c * c,
                    gamma: 0.0,
                    zeta: 1.0 - c * c,
                    eta: Complex64::new(c, 0.0),
                }
            })
            .collect();
        MapCoefficients::from_points(times, pts)
    }

    #[test]
    fn derivative_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let f: Vec<f64> = (0..=n).map(|i| (3.0 * i as f64 * h).sin()).collect();
            derivative(&f, h)
                .iter()
                .enumerate()
                .map(|(i, d)| (d - 3.0 * (3.0 * i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 14.0 && ratio < 40.0, "ratio {ratio}");
    }

    #[test]
    fn polynomials_of_degree_four_are_exact() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(4)).collect();
        for (i, d) in derivative(&f, h).iter().enumerate() {
            assert!((d - 4.0 * (i as f64 * h).powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_map_gives_zero_rates() {
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let c = MapCoefficients::from_points(times, vec![CoefficientPoint::IDENTITY; 20]);
        let g = rates_from_map(&c).unwrap();
        for i in 0..20 {
            assert!(g.valid[i]);
            assert_eq!(g.gamma_plus[i], 0.0);
            assert_eq!(g.gamma_minus[i], 0.0);
            assert_eq!(g.gamma_z[i], 0.0);
            assert_eq!(g.g[i], 0.0);
        }
    }

    #[test]
    fn jaynes_cummings_rates() {
        let g = 0.2;
        let c = jc_series(g, 7.5, 1500);
        let r = rates_from_map(&c).unwrap();
        for i in 0..c.len() {
            let t = c.times[i];
            if c.determinant[i].abs() > 1e-3 {
                assert!(r.valid[i]);
                let exact = 2.0 * g * (g * t).tan();
                assert!((r.gamma_minus[i] - exact).abs() <= 1e-2 * exact.abs().max(1e-6), "t={t}");
                assert!(r.gamma_plus[i].abs() < 1e-9);
                assert!(r.gamma_z[i].abs() < 1e-6 * (1.0 + exact.abs()));
                assert!(r.g[i].abs() < 1e-9);
            }
        }
        // gt = π/2 at t = 7.85 lies beyond the grid; go past it
        let c = jc_series(g, 10.0, 2000);
        let r = rates_from_map(&c).unwrap();
        let masked = r.valid.iter().position(|v| !v).unwrap();
        assert!((c.times[masked] * g - std::f64::consts::FRAC_PI_2).abs() < 2e-3);
    }

    #[test]
    fn null_generator_keeps_state() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let g = GklsCoefficients::zero(times.clone());
        for rho in QubitState::probe_basis() {
            let tr = integrate_gkls(&g, &rho, &times).unwrap();
            for s in &tr.states {
                assert!(s.trace_distance(&rho) < 1e-15);
            }
        }
    }

    #[test]
    fn jaynes_cummings_round_trip() {
        let gc = 0.2;
        let c = jc_series(gc, 7.5, 3000);
        let r = rates_from_map(&c).unwrap();
        let window: Vec<f64> = c.times.iter().copied().filter(|&t| gc * t < 1.45).collect();
        for rho in QubitState::probe_basis() {
            let tr = integrate_gkls(&r, &rho, &window).unwrap();
            for (i, s) in tr.states.iter().enumerate() {
                let exact = apply_map(&c.point(i), &rho).unwrap();
                assert!(s.trace_distance(&exact) < 1e-7, "t = {}", window[i]);
                assert!((s.trace() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integration_past_mask_is_rejected() {
        let c = jc_series(0.2, 10.0, 2000);
        let r = rates_from_map(&c).unwrap();
        let err = integrate_gkls(&r, &QubitState::excited(), &[9.0]).unwrap_err();
        assert!(matches!(err, Error::Solver { index: Some(_), .. }));
    }

    #[test]
    fn coarse_grid_fails_self_test() {
        let c = jc_series(3.0, 10.0, 40);
        assert!(rates_from_map(&c).is_err());
    }

    #[test]
    fn detailed_balance_fixed_point() {
        let times: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let mut g = GklsCoefficients::zero(times);
        for i in 0..40 {
            g.gamma_plus[i] = 0.01;
            g.gamma_minus[i] = 0.03;
        }
        let r = stationarity_report(&g).unwrap();
        assert!((r.median_fixed_point - 0.25).abs() < 1e-15);
        assert_eq!(r.drift, 0.0);
        let mut g2 = g.clone();
        for x in g2.gamma_minus.iter_mut() {
            *x = 0.01 * 2.0;
        }
        let r = stationarity_report(&g2).unwrap();
        assert!((r.median_fixed_point - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn markovian_decay_is_reproduced() {
        // Amplitude damping with rates Γ₋ = a, Γ₊ = b, dephasing Γ_z:
        // ξ = (b + a e^{−(a+b)t})/(a+b), α = (a + b e^{−(a+b)t})/(a+b).
        let (a, b, gz, om) = (0.3, 0.1, 0.05, 0.7);
        let times: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
        let pts: Vec<CoefficientPoint> = times
            .iter()
            .map(|&t| {
                let e = (-(a + b) * t).exp();
                let xi = (b + a * e) / (a + b);
                let alpha = (a + b * e) / (a + b);
                // η* ρ₊₋ with ρ̇₊₋ = (−2iG − 2Γ_z − (a+b)/2) ρ₊₋, G = om/2
                let eta = Complex64::from_polar((-(2.0 * gz + 0.5 * (a + b)) * t).exp(), om * t);
                CoefficientPoint { alpha, xi, gamma: 1.0 - alpha, zeta: 1.0 - xi, eta }
            })
            .collect();
        let c = MapCoefficients::from_points(times.clone(), pts);
        let r = rates_from_map(&c).unwrap();
        for i in 0..c.len() {
            assert!((r.gamma_minus[i] - a).abs() < 1e-7);
            assert!((r.gamma_plus[i] - b).abs() < 1e-7);
            assert!((r.gamma_z[i] - gz).abs() < 1e-7);
            assert!((r.g[i] - om / 2.0).abs() < 1e-7);
        }
        let tr = integrate_gkls(&r, &QubitState::plus_y(), &times).unwrap();
        for (i, s) in tr.states.iter().enumerate() {
            let exact = apply_map(&c.point(i), &QubitState::plus_y()).unwrap();
            assert!(s.trace_distance(&exact) < 1e-8);
        }
    }
}
