// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Vacuum reservoir: survival amplitude of the excited qubit state.
//!
//! With the reservoir in its vacuum the dynamics stays in the one-excitation
//! sector, and the excited-state amplitude obeys
//!
//! ```text
//! dU₊/dt = −∫₀ᵗ K(t−t′) U₊(t′) dt′,   U₊(0) = 1,
//! ```
//!
//! with `K` the memory kernel of [`crate::bath`]. Integrating once gives the
//! Volterra equation of the second kind `U₊(t) = 1 − ∫₀ᵗ L(t−t′)U₊(t′)dt′`
//! with `L(τ) = ∫₀^τ K`, solved by second-order product integration: `U₊`
//! is taken linear on each cell and the kernel moments are integrated
//! exactly, so fast kernel oscillations cost no accuracy. The
//! one-photon amplitudes `c(ω, t) = −i√J(ω) ∫₀ᵗ e^{iω̄t′}U₊(t′)dt′` are
//! accumulated on a frequency grid with a Filon rule, which is exact for the
//! oscillating factor.
//!
//! The resolvent is used only for the analysis side: the bound-state pole,
//! its residue, and the branch-cut weight.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bath::{kernel_any_sign, CutoffShape, SpectralDensity};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quadrature::{self, GaussLegendre, Tolerance};

/// Upper bound on `Δt · max(|ω̄|, √∫J)` accepted by [`solve_survival`].
pub const RESOLUTION_LIMIT: f64 = 0.5;
/// Required accuracy of the bound-state fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Amplitudes below this are treated as solver noise by [`tail_fit`].
pub const NOISE_FLOOR: f64 = 1e-12;

const KERNEL_PANEL_ORDER: usize = 8;
const FLIP_PANEL_ORDER: usize = 16;
const FLIP_CHUNK: usize = 256;
const PHASE_RESYNC: usize = 512;

/// Options for [`solve_survival_with`].
#[derive(Debug, Clone, Copy)]
pub struct SurvivalOptions {
    pub resolution_limit: f64,
    /// Store `c(ω, t)` every `stride` grid points.
    pub flip_table_stride: Option<usize>,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        SurvivalOptions {
            resolution_limit: RESOLUTION_LIMIT,
            flip_table_stride: None,
        }
    }
}

/// Frequency node carrying a flip amplitude. For a continuous density
/// `weight = w_q J(ω_q)` (quadrature weight times density), for a discrete
/// mode `weight = g²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipNode {
    pub omega: f64,
    pub weight: f64,
    pub quadrature_weight: f64,
}

/// Flip amplitudes sampled on a subset of the time grid. `values[r][q]` is
/// `c_k(t)` for a discrete mode and the spectral amplitude `c(ω_q, t)` for a
/// continuum node.
#[derive(Debug, Clone, Serialize)]
pub struct FlipTable {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

/// Excited-state survival amplitude and the one-photon amplitudes.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalAmplitude {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    /// `∑|c_k(t)|²` or `∫|c(ω,t)|² dω`.
    pub flip_norm: Vec<f64>,
    pub nodes: Vec<FlipNode>,
    pub discrete: bool,
    pub flip_table: Option<FlipTable>,
}

impl SurvivalAmplitude {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn probability(&self) -> Vec<f64> {
        self.amplitude.iter().map(|u| u.norm_sqr()).collect()
    }

    /// `|U₊(t)|² + ∑|c_k(t)|² − 1` at every grid point.
    pub fn norm_defect(&self) -> Vec<f64> {
        self.amplitude
            .iter()
            .zip(&self.flip_norm)
            .map(|(u, n)| u.norm_sqr() + n - 1.0)
            .collect()
    }

    pub fn norm_residual(&self) -> f64 {
        self.norm_defect().iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// `Δt · max(|ω̄|, √∫J)` for the given grid spacing.
pub fn kernel_resolution(j: &SpectralDensity, omega: f64, dt: f64) -> Result<f64> {
    let (lo, hi) = j.finite_range()?;
    let detuning = (lo - omega).abs().max((hi - omega).abs());
    let coupling = j.total_weight()?.sqrt();
    Ok(dt * detuning.max(coupling))
}

pub fn solve_survival(j: &SpectralDensity, omega: f64, grid: &TimeGrid) -> Result<SurvivalAmplitude> {
    solve_survival_with(j, omega, grid, &SurvivalOptions::default())
}

/// Solves for `U₊` on `grid` and accumulates the flip amplitudes.
pub fn solve_survival_with(
    j: &SpectralDensity,
    omega: f64,
    grid: &TimeGrid,
    opts: &SurvivalOptions,
) -> Result<SurvivalAmplitude> {
    j.validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("model.omega", format!("must be > 0, got {omega}")));
    }
    if let Some(0) = opts.flip_table_stride {
        return Err(Error::invalid("survival.flip_table_stride", "must be >= 1"));
    }
    let dt = grid.dt();
    let resolution = kernel_resolution(j, omega, dt)?;
    if resolution > opts.resolution_limit {
        return Err(Error::invalid(
            "time.steps",
            format!(
                "kernel not resolved: dt*max(|w - Omega|, sqrt(int J)) = {resolution:.3e} exceeds {}",
                opts.resolution_limit
            ),
        ));
    }

    let times = grid.times();
    let weights = product_weights(j, omega, grid)?;
    let amplitude = volterra_product(&weights);
    let nodes = flip_nodes(j, omega, grid.t_max)?;
    let (flip_norm, flip_table) = flip_amplitudes(&nodes, j, omega, &amplitude, &times, opts.flip_table_stride);

    Ok(SurvivalAmplitude {
        times,
        amplitude,
        flip_norm,
        nodes,
        discrete: j.is_discrete(),
        flip_table,
    })
}

/// Product-integration weights for `∫₀^{t_n} L(t_n−s) U(s) ds` with `U`
/// linear on every cell, `L(τ) = ∫₀^τ K`.
///
/// On the cell that ends `m` steps before `t_n`, the weights multiplying
/// the left and right values are
/// `A_m = Δt [L_{m−1}/2 + Δt ∫₀¹ K((m−1+y)Δt)(1−y²)/2 dy]` and
/// `B_m = Δt [L_{m−1}/2 + Δt ∫₀¹ K((m−1+y)Δt)(1−y)²/2 dy]`.
struct ProductWeights {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

fn product_weights(j: &SpectralDensity, omega: f64, grid: &TimeGrid) -> Result<ProductWeights> {
    let dt = grid.dt();
    let zero = Complex64::new(0.0, 0.0);
    // per cell: (∫K, ∫K(1−y²)/2, ∫K(1−y)²/2), y the position inside the cell
    let (nodes, weights) = quadrature::gauss_legendre(KERNEL_PANEL_ORDER);
    let cells: Vec<[Complex64; 3]> = (1..grid.len())
        .into_par_iter()
        .map(|m| {
            let t0 = grid.time(m - 1);
            let mut acc = [zero; 3];
            for (x, w) in nodes.iter().zip(&weights) {
                let y = 0.5 * (x + 1.0);
                let k = kernel_any_sign(j, omega, t0 + y * dt)? * (0.5 * w);
                acc[0] += k;
                acc[1] += k * (0.5 * (1.0 - y * y));
                acc[2] += k * (0.5 * (1.0 - y) * (1.0 - y));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut a = Vec::with_capacity(grid.len());
    let mut b = Vec::with_capacity(grid.len());
    a.push(zero);
    b.push(zero);
    let mut lag = zero;
    for c in cells {
        a.push(dt * (0.5 * lag + dt * c[1]));
        b.push(dt * (0.5 * lag + dt * c[2]));
        lag += dt * c[0];
    }
    Ok(ProductWeights { a, b })
}

/// `U_n (1 + B_1) = 1 − A_n U_0 − ∑_{j=1}^{n−1} (A_{n−j} + B_{n−j+1}) U_j`.
fn volterra_product(w: &ProductWeights) -> Vec<Complex64> {
    let n_pts = w.a.len();
    // combined history weights C_m = A_m + B_{m+1}, m = 1..n_pts-2
    let (mut cr, mut ci) = (vec![0.0; n_pts], vec![0.0; n_pts]);
    for m in 1..n_pts - 1 {
        let c = w.a[m] + w.b[m + 1];
        cr[m] = c.re;
        ci[m] = c.im;
    }
    let denom = Complex64::new(1.0, 0.0) + w.b[1];
    let mut ur = vec![0.0; n_pts];
    let mut ui = vec![0.0; n_pts];
    ur[0] = 1.0;
    for n in 1..n_pts {
        let (mut sr, mut si) = (w.a[n].re, w.a[n].im);
        // history j = 1..n-1 pairs with C_{n-1}..C_1
        let crh = &cr[1..n];
        let cih = &ci[1..n];
        let urh = &ur[1..n];
        let uih = &ui[1..n];
        for k in 0..n - 1 {
            let m = n - 2 - k;
            sr += crh[m] * urh[k] - cih[m] * uih[k];
            si += crh[m] * uih[k] + cih[m] * urh[k];
        }
        let u = Complex64::new(1.0 - sr, -si) / denom;
        ur[n] = u.re;
        ui[n] = u.im;
    }
    ur.into_iter().zip(ui).map(|(r, i)| Complex64::new(r, i)).collect()
}

/// Frequency nodes for the flip amplitudes.
///
/// Panels are at most `10/t_max` wide so that `e^{iω̄t}` is resolved by the
/// 16-point rule up to the final time, and are refined around the resonance
/// to resolve the Lorentzian of width `πJ(Ω)`.
fn flip_nodes(j: &SpectralDensity, omega: f64, t_max: f64) -> Result<Vec<FlipNode>> {
    if let SpectralDensity::SingleMode { frequency, coupling } = *j {
        return Ok(vec![FlipNode {
            omega: frequency,
            weight: coupling * coupling,
            quadrature_weight: 1.0,
        }]);
    }
    let (lo, hi) = flip_range(j)?;
    let mut h_far = (10.0 / t_max).min((hi - lo) / 4.0);
    if let SpectralDensity::Ohmic { cutoff, .. } = *j {
        h_far = h_far.min(0.5 * cutoff);
    }
    let width = (PI * j.value(omega)).max(1e-6);
    let h_near = h_far.min(0.5 * width);
    let near = 40.0 * width;

    let mut edges = vec![lo, hi];
    for e in [omega - near, omega + near] {
        if e > lo && e < hi {
            edges.push(e);
        }
    }
    if matches!(j, SpectralDensity::Ohmic { .. }) {
        // graded panels toward the ω^a branch point at zero
        let mut x = h_far.min(hi);
        for _ in 0..30 {
            x *= 0.5;
            edges.push(lo + x);
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let rule = GaussLegendre::new(FLIP_PANEL_ORDER);
    let mut nodes = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let h = if (mid - omega).abs() < near { h_near } else { h_far };
        let panels = ((b - a) / h).ceil().max(1.0) as usize;
        for (x, wq) in rule.composite_nodes(a, b, panels) {
            nodes.push(FlipNode {
                omega: x,
                weight: wq * j.value(x),
                quadrature_weight: wq,
            });
        }
    }
    Ok(nodes)
}

/// Frequency range carrying all but a relative `1e-13` of the weight.
fn flip_range(j: &SpectralDensity) -> Result<(f64, f64)> {
    match *j {
        SpectralDensity::Ohmic { exponent, cutoff, shape: CutoffShape::Exponential, .. } => {
            // upper regularised Γ(a+1, x) decides where the tail is negligible
            let tail = |x: f64| statrs::function::gamma::gamma_ur(exponent + 1.0, x);
            let (mut a, mut b) = (1.0, 200.0 + 4.0 * exponent);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if tail(m) > 1e-13 {
                    a = m;
                } else {
                    b = m;
                }
            }
            Ok((0.0, b * cutoff))
        }
        _ => j.finite_range(),
    }
}

/// Filon accumulation of `∫₀ᵗ e^{iω̄t′}U₊(t′)dt′` with `U₊` linear on each cell.
fn flip_amplitudes(
    nodes: &[FlipNode],
    j: &SpectralDensity,
    omega: f64,
    u: &[Complex64],
    times: &[f64],
    stride: Option<usize>,
) -> (Vec<f64>, Option<FlipTable>) {
    let n_pts = u.len();
    let dt = times[1] - times[0];
    let table_rows: Vec<usize> = match stride {
        Some(s) => (0..n_pts).step_by(s).collect(),
        None => Vec::new(),
    };

    let partials: Vec<(Vec<f64>, Vec<Vec<Complex64>>)> = nodes
        .par_chunks(FLIP_CHUNK)
        .map(|chunk| {
            let mut norm = vec![0.0; n_pts];
            let mut rows = vec![Vec::with_capacity(chunk.len()); table_rows.len()];
            for node in chunk {
                let nu = node.omega - omega;
                let amp_scale = if j.is_discrete() {
                    node.weight.sqrt()
                } else {
                    j.value(node.omega).sqrt()
                };
                let (i0, i1) = filon_moments(nu, dt);
                let step = Complex64::from_polar(1.0, nu * dt);
                let mut phase = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut row = 0;
                if table_rows.first() == Some(&0) {
                    rows[0].push(Complex64::new(0.0, 0.0));
                    row = 1;
                }
                for n in 1..n_pts {
                    acc += phase * (u[n - 1] * i0 + (u[n] - u[n - 1]) * (i1 / dt));
                    phase = if n % PHASE_RESYNC == 0 {
                        Complex64::from_polar(1.0, nu * times[n])
                    } else {
                        phase * step
                    };
                    norm[n] += node.weight * acc.norm_sqr();
                    if row < table_rows.len() && table_rows[row] == n {
                        rows[row].push(Complex64::new(0.0, -amp_scale) * acc);
                        row += 1;
                    }
                }
            }
            (norm, rows)
        })
        .collect();

    let mut norm = vec![0.0; n_pts];
    let mut values = vec![Vec::with_capacity(nodes.len()); table_rows.len()];
    for (part, rows) in partials {
        for (t, p) in norm.iter_mut().zip(part) {
            *t += p;
        }
        for (dst, src) in values.iter_mut().zip(rows) {
            dst.extend(src);
        }
    }
    let table = stride.map(|_| FlipTable {
        times: table_rows.iter().map(|&i| times[i]).collect(),
        values,
    });
    (norm, table)
}

/// `∫₀^h e^{iνx} dx` and `∫₀^h x e^{iνx} dx`.
fn filon_moments(nu: f64, h: f64) -> (Complex64, Complex64) {
    let th = nu * h;
    let i = Complex64::new(0.0, 1.0);
    if th.abs() < 1e-2 {
        // Taylor series, truncation error below 1e-18 relative
        let mut i0 = Complex64::new(0.0, 0.0);
        let mut i1 = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..8 {
            let kf = k as f64;
            i0 += term / (kf + 1.0);
            i1 += term / (kf + 2.0);
            term *= i * th / (kf + 1.0);
        }
        (i0 * h, i1 * h * h)
    } else {
        let e = Complex64::from_polar(1.0, th);
        let inu = i * nu;
        let i0 = (e - 1.0) / inu;
        let i1 = h * e / inu - (e - 1.0) / (inu * inu);
        (i0, i1)
    }
}

/// Bound state below the continuum, reached as the pole `s = i s_I` of the
/// resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundStatePole {
    pub exists: bool,
    /// `∫ J(ω)/ω dω`, compared against Ω.
    pub condition: f64,
    pub s_i: f64,
    pub residue: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

/// `∫ J(ω)/ω dω`.
pub fn pole_condition(j: &SpectralDensity) -> Result<f64> {
    let g = statrs::function::gamma::gamma;
    let value = match *j {
        SpectralDensity::Ohmic { exponent, scale, cutoff, shape } => match shape {
            CutoffShape::Exponential => scale * cutoff.powf(exponent) * g(exponent),
            CutoffShape::Hard => scale * cutoff.powf(exponent) / exponent,
            CutoffShape::None => f64::INFINITY,
        },
        SpectralDensity::FlatBand { level, lo, hi } => {
            if level == 0.0 {
                0.0
            } else if lo > 0.0 {
                level * (hi / lo).ln()
            } else {
                f64::INFINITY
            }
        }
        SpectralDensity::SingleMode { frequency, coupling } => {
            if coupling == 0.0 {
                0.0
            } else if frequency > 0.0 {
                coupling * coupling / frequency
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(value)
}

fn tight() -> Tolerance {
    Tolerance {
        abs: 1e-15,
        rel: 1e-14,
        max_intervals: 20_000,
    }
}

/// `∫ J(ω)/(δ+ω)^p dω` for `δ > 0`, `p ∈ {1, 2}`.
fn shifted_moment(j: &SpectralDensity, delta: f64, p: i32) -> Result<f64> {
    match *j {
        SpectralDensity::SingleMode { frequency, coupling } => Ok(coupling * coupling / (delta + frequency).powi(p)),
        SpectralDensity::FlatBand { level, lo, hi } => Ok(match p {
            1 => level * ((delta + hi) / (delta + lo)).ln(),
            _ => level * (1.0 / (delta + lo) - 1.0 / (delta + hi)),
        }),
        SpectralDensity::Ohmic { .. } => {
            let bps: Vec<f64> = [delta, 10.0 * delta, 100.0 * delta].into_iter().filter(|x| *x < 1.0).collect();
            j.integrate_against(|w| (delta + w).powi(-p), &bps, tight())
        }
    }
}

pub fn bound_state(j: &SpectralDensity, omega: f64) -> Result<BoundStatePole> {
    bound_state_with(j, omega, None)
}

/// Solves `s = ∫ J(ω)/(s+ω−Ω) dω` on `(Ω, s_hi]` by bisection.
///
/// The right-hand side decreases in `s`, so the root is unique when
/// `∫J/ω > Ω`. The default `s_hi = Ω + ∫J/ω` always brackets it.
pub fn bound_state_with(j: &SpectralDensity, omega: f64, s_hi: Option<f64>) -> Result<BoundStatePole> {
    j.validate()?;
    let condition = pole_condition(j)?;
    if !condition.is_finite() {
        return Err(Error::invalid(
            "spectral_density",
            "integral of J(w)/w diverges; the pole condition is undefined",
        ));
    }
    if condition <= omega {
        return Ok(BoundStatePole {
            exists: false,
            condition,
            s_i: f64::NAN,
            residue: 0.0,
            residual: 0.0,
            bracket: (omega, omega),
        });
    }
    let f = |s: f64| -> Result<f64> { Ok(shifted_moment(j, s - omega, 1)? - s) };
    let hi0 = s_hi.unwrap_or(omega + condition);
    if !(hi0 > omega) {
        return Err(Error::invalid("bound_state.s_hi", format!("must exceed Omega = {omega}, got {hi0}")));
    }
    let f_hi = f(hi0)?;
    if f_hi >= 0.0 {
        return Err(Error::solver(
            "bound_state",
            format!("no sign change below s_hi = {hi0} (f(s_hi) = {f_hi:.3e})"),
        ));
    }
    let (mut lo, mut hi) = (omega, hi0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let residual = f(s)?.abs();
    if residual > FIXED_POINT_TOL {
        return Err(Error::solver(
            "bound_state",
            format!("fixed-point residual {residual:.3e} exceeds {FIXED_POINT_TOL:e}"),
        ));
    }
    let residue = 1.0 / (1.0 + shifted_moment(j, s - omega, 2)?);
    Ok(BoundStatePole {
        exists: true,
        condition,
        s_i: s,
        residue,
        residual,
        bracket: (lo, hi),
    })
}

/// Power-law fit to the late-time survival amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub window: (f64, f64),
    pub points: usize,
    pub exponent: f64,
    pub expected_exponent: f64,
    pub exponent_deviation: f64,
    pub fitted_prefactor: f64,
    pub predicted_prefactor: f64,
    pub prefactor_ratio: f64,
}

/// Least-squares fit of `ln|U₊|` against `ln t` on `window` (default: second
/// half of the run). The prediction is
/// `|U₊| ≈ c Γ(1+a) / ((Ω − ∫J/ω)² t^{1+a})` for `J ≈ c ω^a` at small ω.
pub fn tail_fit(
    s: &SurvivalAmplitude,
    j: &SpectralDensity,
    omega: f64,
    window: Option<(f64, f64)>,
) -> Result<TailReport> {
    let (c, a) = j.low_frequency_prefactor().ok_or_else(|| {
        Error::invalid("spectral_density.family", "tail fit needs a power-law density")
    })?;
    let condition = pole_condition(j)?;
    if condition > omega {
        return Err(Error::invalid(
            "spectral_density",
            format!("bound state present (int J/w = {condition:.4} > Omega); no power-law tail"),
        ));
    }
    let t_end = *s.times.last().unwrap_or(&0.0);
    let (t1, t2) = window.unwrap_or((0.5 * t_end, t_end));
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s.times[i] >= t1 && s.times[i] <= t2 && s.times[i] > 0.0).collect();
    if idx.len() < 8 {
        return Err(Error::invalid("survival.tail_window", format!("only {} points in [{t1}, {t2}]", idx.len())));
    }
    let start = s.amplitude[idx[0]].norm();
    if start > (-4.0f64).exp() {
        return Err(Error::invalid(
            "time.t_max",
            format!("|U| = {start:.3e} at the tail window start; run has not decayed by 4 e-foldings"),
        ));
    }
    let mut xs = Vec::with_capacity(idx.len());
    let mut ys = Vec::with_capacity(idx.len());
    for &i in &idx {
        let m = s.amplitude[i].norm();
        if m < NOISE_FLOOR {
            return Err(Error::solver_at(
                "tail_fit",
                i,
                format!("|U| = {m:.3e} is below the noise floor {NOISE_FLOOR:e}"),
            ));
        }
        xs.push(s.times[i].ln());
        ys.push(m.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let fitted_prefactor = (my - slope * mx).exp();
    let predicted_prefactor = c * statrs::function::gamma::gamma(1.0 + a) / (omega - condition).powi(2);
    let expected = -(1.0 + a);
    Ok(TailReport {
        window: (t1, t2),
        points: idx.len(),
        exponent: slope,
        expected_exponent: expected,
        exponent_deviation: (slope - expected).abs(),
        fitted_prefactor,
        predicted_prefactor,
        prefactor_ratio: fitted_prefactor / predicted_prefactor,
    })
}

/// Median of `|U₊|²` over the last quarter of the run.
pub fn plateau(s: &SurvivalAmplitude) -> f64 {
    let start = s.len() - s.len() / 4;
    let mut p: Vec<f64> = s.amplitude[start..].iter().map(|u| u.norm_sqr()).collect();
    crate::gkls::median(&mut p)
}

/// Branch-cut weight plus pole weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutPoleIdentity {
    pub cut: f64,
    pub pole: Option<BoundStatePole>,
    pub total: f64,
    pub residual: f64,
}

/// Level shift `P∫ J(ω′)/(ω−ω′) dω′`.
pub fn level_shift(j: &SpectralDensity, w: f64) -> Result<f64> {
    match *j {
        SpectralDensity::FlatBand { level, lo, hi } => Ok(level * ((w - lo) / (w - hi)).abs().ln()),
        SpectralDensity::SingleMode { .. } => Err(Error::invalid(
            "spectral_density.family",
            "a single mode has no branch cut",
        )),
        SpectralDensity::Ohmic { cutoff, .. } => {
            let (lo, hi) = cut_range(j)?;
            let tol = Tolerance {
                abs: 1e-13,
                rel: 1e-11,
                max_intervals: 20_000,
            };
            quadrature::principal_value(|x| j.value(x), lo, hi, w, &[cutoff, 5.0 * cutoff], tol)
        }
    }
}

fn cut_range(j: &SpectralDensity) -> Result<(f64, f64)> {
    match *j {
        SpectralDensity::Ohmic { exponent, cutoff, shape: CutoffShape::Exponential, .. } => {
            Ok((0.0, cutoff * (40.0 + 4.0 * exponent)))
        }
        _ => j.finite_range(),
    }
}

/// Evaluates `∫ J/(R² + π²J²) dω` over the continuum, `R(ω) = ω − Ω − P∫J/(ω−ω′)`,
/// and adds the residue of the bound state when one exists.
pub fn cut_pole_identity(j: &SpectralDensity, omega: f64) -> Result<CutPoleIdentity> {
    j.validate()?;
    if j.is_discrete() {
        return Err(Error::invalid("spectral_density.family", "a single mode has no branch cut"));
    }
    if j.total_weight()? == 0.0 {
        return Err(Error::invalid("spectral_density", "zero coupling: the cut carries no weight"));
    }
    let pole = match pole_condition(j)? {
        c if c.is_finite() => Some(bound_state(j, omega)?).filter(|p| p.exists),
        _ => None,
    };
    let (lo, hi) = cut_range(j)?;
    let width = PI * j.value(omega);
    let centre = if omega > lo && omega < hi {
        omega + level_shift(j, omega)?
    } else {
        omega
    };
    let mut bps = vec![omega];
    for k in [0.0, 0.5, 2.0, 8.0, 32.0, 128.0] {
        bps.push(centre - k * width);
        bps.push(centre + k * width);
    }
    if let SpectralDensity::Ohmic { cutoff, .. } = *j {
        bps.extend([cutoff, 5.0 * cutoff, 15.0 * cutoff]);
    }
    bps.retain(|x| *x > lo && *x < hi);
    let tol = Tolerance {
        abs: 1e-11,
        rel: 1e-10,
        max_intervals: 20_000,
    };
    let mut failure = None;
    let est = quadrature::adaptive(
        |w| {
            let jw = j.value(w);
            if jw == 0.0 {
                return 0.0;
            }
            match level_shift(j, w) {
                Ok(shift) => {
                    let r = w - omega - shift;
                    jw / (r * r + PI * PI * jw * jw)
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        &bps,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let cut = est?.value;
    let total = cut + pole.map_or(0.0, |p| p.residue);
    Ok(CutPoleIdentity {
        cut,
        pole,
        total,
        residual: (total - 1.0).abs(),
    })
}
