// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Bath description: model parameters, continuum spectral densities, their
//! finite-mode surrogates, thermal occupations and the memory kernel
//! `K(τ) = ∫ dω J(ω) e^{-i(ω-Ω)τ}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, GaussLegendre, Tolerance};

/// Inverse temperature used to encode the vacuum (zero-temperature) reservoir.
pub const VACUUM: f64 = f64::INFINITY;

/// Relative tolerance for kernel quadratures.
pub const KERNEL_REL_TOL: f64 = 1e-8;

/// Exponential cutoffs are treated as negligible beyond this many cutoff
/// frequencies when a finite frequency range is needed (discretisation).
pub const EXP_CUTOFF_SPAN: f64 = 10.0;

/// Qubit gap, inverse temperature and global coupling scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    /// `VACUUM` (= +∞) selects the vacuum reservoir.
    pub beta: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(omega: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = ModelParams { omega, beta, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid("model.omega", format!("must be > 0, got {}", self.omega)));
        }
        if !(self.beta > 0.0) || self.beta.is_nan() {
            return Err(Error::invalid(
                "model.beta",
                format!("must be > 0 or \"vacuum\", got {}", self.beta),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("model.lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn is_vacuum(&self) -> bool {
        self.beta == VACUUM
    }

    /// Thermal occupation of a mode at the qubit frequency.
    pub fn occupation_at_gap(&self) -> f64 {
        thermal_occupation(self.omega, self.beta).expect("omega validated positive")
    }
}

/// High-frequency regularisation of the Ohmic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffShape {
    Exponential,
    Hard,
    /// Bare power law; only usable where no frequency integral is needed.
    None,
}

/// Continuum spectral density `J(ω)`, zero for `ω < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralDensity {
    /// `J(ω) = scale · ω^a · f(ω/ω_c)` with `f` the cutoff function.
    Ohmic {
        exponent: f64,
        scale: f64,
        cutoff: f64,
        shape: CutoffShape,
    },
    /// `J(ω) = level` on `[lo, hi]`, zero elsewhere.
    FlatBand { level: f64, lo: f64, hi: f64 },
    /// A single discrete mode `J(ω) = g² δ(ω - ω0)`.
    SingleMode { frequency: f64, coupling: f64 },
}

impl SpectralDensity {
    pub fn ohmic(exponent: f64, scale: f64, cutoff: f64, shape: CutoffShape) -> Result<Self> {
        let j = SpectralDensity::Ohmic { exponent, scale, cutoff, shape };
        j.validate()?;
        Ok(j)
    }

    pub fn flat_band(level: f64, lo: f64, hi: f64) -> Result<Self> {
        let j = SpectralDensity::FlatBand { level, lo, hi };
        j.validate()?;
        Ok(j)
    }

    pub fn single_mode(frequency: f64, coupling: f64) -> Result<Self> {
        let j = SpectralDensity::SingleMode { frequency, coupling };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralDensity::Ohmic { exponent, scale, cutoff, .. } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(Error::invalid(
                        "spectral_density.exponent",
                        format!("ohmic family needs a > 0, got {exponent}"),
                    ));
                }
                if !(scale.is_finite() && scale >= 0.0) {
                    return Err(Error::invalid("spectral_density.scale", "must be finite and >= 0"));
                }
                if !(cutoff.is_finite() && cutoff > 0.0) {
                    return Err(Error::invalid("spectral_density.cutoff", "must be > 0"));
                }
            }
            SpectralDensity::FlatBand { level, lo, hi } => {
                if !(level.is_finite() && level >= 0.0) {
                    return Err(Error::invalid("spectral_density.level", "must be finite and >= 0"));
                }
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                    return Err(Error::invalid(
                        "spectral_density.band",
                        format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
                    ));
                }
            }
            SpectralDensity::SingleMode { frequency, coupling } => {
                if !(frequency.is_finite() && frequency > 0.0) {
                    return Err(Error::invalid("spectral_density.frequency", "must be > 0"));
                }
                if !(coupling.is_finite() && coupling >= 0.0) {
                    return Err(Error::invalid("spectral_density.coupling", "must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            SpectralDensity::Ohmic { .. } => "ohmic",
            SpectralDensity::FlatBand { .. } => "flat-band",
            SpectralDensity::SingleMode { .. } => "single-mode",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, SpectralDensity::SingleMode { .. })
    }

    /// Pointwise value for the continuous families (zero for the single mode).
    pub fn value(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        match *self {
            SpectralDensity::Ohmic { exponent, scale, cutoff, shape } => {
                let base = scale * w.powf(exponent);
                match shape {
                    CutoffShape::Exponential => base * (-w / cutoff).exp(),
                    CutoffShape::Hard => {
                        if w <= cutoff {
                            base
                        } else {
                            0.0
                        }
                    }
                    CutoffShape::None => base,
                }
            }
            SpectralDensity::FlatBand { level, lo, hi } => {
                if w >= lo && w <= hi {
                    level
                } else {
                    0.0
                }
            }
            SpectralDensity::SingleMode { .. } => 0.0,
        }
    }

    /// The same density with every coupling multiplied by `lambda`
    /// (`J → λ² J`).
    pub fn scaled(&self, lambda: f64) -> SpectralDensity {
        let l2 = lambda * lambda;
        match *self {
            SpectralDensity::Ohmic { exponent, scale, cutoff, shape } => SpectralDensity::Ohmic {
                exponent,
                scale: scale * l2,
                cutoff,
                shape,
            },
            SpectralDensity::FlatBand { level, lo, hi } => SpectralDensity::FlatBand { level: level * l2, lo, hi },
            SpectralDensity::SingleMode { frequency, coupling } => SpectralDensity::SingleMode {
                frequency,
                coupling: coupling * lambda,
            },
        }
    }

    /// Support `[lo, hi]`; `hi` is infinite for the exponential cutoff and
    /// the bare power law.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            SpectralDensity::Ohmic { cutoff, shape, .. } => match shape {
                CutoffShape::Hard => (0.0, cutoff),
                _ => (0.0, f64::INFINITY),
            },
            SpectralDensity::FlatBand { lo, hi, .. } => (lo, hi),
            SpectralDensity::SingleMode { frequency, .. } => (frequency, frequency),
        }
    }

    /// Finite frequency range used for discretisation and for integrals
    /// that need a bounded domain.
    pub fn finite_range(&self) -> Result<(f64, f64)> {
        match *self {
            SpectralDensity::Ohmic { cutoff, shape, .. } => match shape {
                CutoffShape::Exponential => Ok((0.0, EXP_CUTOFF_SPAN * cutoff)),
                CutoffShape::Hard => Ok((0.0, cutoff)),
                CutoffShape::None => Err(Error::invalid(
                    "spectral_density.cutoff_shape",
                    "power law without cutoff is not integrable",
                )),
            },
            _ => Ok(self.support()),
        }
    }

    /// Range for high-accuracy integrals (the exponential tail is followed
    /// far enough that it is below double precision).
    pub(crate) fn integration_range(&self) -> Result<(f64, f64)> {
        match *self {
            SpectralDensity::Ohmic { cutoff, shape: CutoffShape::Exponential, exponent, .. } => {
                Ok((0.0, cutoff * (60.0 + 4.0 * exponent)))
            }
            _ => self.finite_range(),
        }
    }

    /// `∫ dω J(ω) f(ω)`, exact for the single mode, adaptive quadrature
    /// otherwise. `breakpoints` are extra hints for the quadrature.
    pub fn integrate_against(
        &self,
        f: impl Fn(f64) -> f64,
        breakpoints: &[f64],
        tol: Tolerance,
    ) -> Result<f64> {
        match *self {
            SpectralDensity::SingleMode { frequency, coupling } => Ok(coupling * coupling * f(frequency)),
            _ => {
                let (lo, hi) = self.integration_range()?;
                let mut bps = breakpoints.to_vec();
                if let SpectralDensity::Ohmic { cutoff, shape: CutoffShape::Exponential, .. } = *self {
                    bps.extend([cutoff, 5.0 * cutoff, 15.0 * cutoff]);
                }
                Ok(quadrature::adaptive(|w| self.value(w) * f(w), lo, hi, &bps, tol)?.value)
            }
        }
    }

    /// Total weight `∫ J(ω) dω`.
    pub fn total_weight(&self) -> Result<f64> {
        match *self {
            SpectralDensity::Ohmic { exponent, scale, cutoff, shape: CutoffShape::Exponential } => {
                Ok(scale * cutoff.powf(exponent + 1.0) * statrs::function::gamma::gamma(exponent + 1.0))
            }
            SpectralDensity::Ohmic { exponent, scale, cutoff, shape: CutoffShape::Hard } => {
                Ok(scale * cutoff.powf(exponent + 1.0) / (exponent + 1.0))
            }
            SpectralDensity::Ohmic { shape: CutoffShape::None, .. } => Err(Error::invalid(
                "spectral_density.cutoff_shape",
                "power law without cutoff has divergent weight",
            )),
            SpectralDensity::FlatBand { level, lo, hi } => Ok(level * (hi - lo)),
            SpectralDensity::SingleMode { coupling, .. } => Ok(coupling * coupling),
        }
    }

    /// Coefficient `c` of the low-frequency behaviour `J(ω) ≈ c ω^a`.
    pub fn low_frequency_prefactor(&self) -> Option<(f64, f64)> {
        match *self {
            SpectralDensity::Ohmic { exponent, scale, .. } => Some((scale, exponent)),
            _ => None,
        }
    }
}

/// How to place discrete modes on the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Midpoint,
    GaussLegendre,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Scheme::Midpoint),
            "gauss-legendre" => Ok(Scheme::GaussLegendre),
            other => Err(Error::invalid(
                "discretization.scheme",
                format!("unsupported scheme `{other}` (expected midpoint or gauss-legendre)"),
            )),
        }
    }
}

/// One bath mode: frequency `ω_k` and real coupling `g_k ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub coupling: f64,
}

/// Finite set of modes standing in for a continuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub modes: Vec<Mode>,
}

impl DiscretizedBath {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("bath.modes", "at least one mode required"));
        }
        for (k, m) in modes.iter().enumerate() {
            if !(m.omega.is_finite() && m.omega > 0.0) {
                return Err(Error::invalid(format!("bath.modes[{k}].omega"), "must be > 0"));
            }
            if !(m.coupling.is_finite() && m.coupling >= 0.0) {
                return Err(Error::invalid(format!("bath.modes[{k}].coupling"), "must be real and >= 0"));
            }
        }
        Ok(DiscretizedBath { modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.coupling * m.coupling).sum()
    }

    /// Discrete memory kernel `Σ_k g_k² e^{-i(ω_k-Ω)τ}`.
    pub fn kernel(&self, omega: f64, tau: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| Complex64::from_polar(m.coupling * m.coupling, -(m.omega - omega) * tau))
            .sum()
    }
}

/// Discretise `j` into `n` modes on its default frequency range.
pub fn discretize(j: &SpectralDensity, n: usize, scheme: Scheme) -> Result<DiscretizedBath> {
    discretize_in(j, n, scheme, None)
}

/// Discretise `j` into `n` modes on `window` (defaults to the density's
/// finite range). The single-mode density always yields its one mode.
pub fn discretize_in(
    j: &SpectralDensity,
    n: usize,
    scheme: Scheme,
    window: Option<(f64, f64)>,
) -> Result<DiscretizedBath> {
    if n == 0 {
        return Err(Error::invalid("discretization.modes", "N must be >= 1"));
    }
    j.validate()?;
    if let SpectralDensity::SingleMode { frequency, coupling } = *j {
        return DiscretizedBath::new(vec![Mode { omega: frequency, coupling }]);
    }
    let (lo, hi) = match window {
        Some((lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                return Err(Error::invalid(
                    "discretization.window",
                    format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
                ));
            }
            (lo, hi)
        }
        None => j.finite_range()?,
    };
    let nodes: Vec<(f64, f64)> = match scheme {
        Scheme::Midpoint => {
            let dw = (hi - lo) / n as f64;
            (0..n).map(|k| (lo + (k as f64 + 0.5) * dw, dw)).collect()
        }
        Scheme::GaussLegendre => GaussLegendre::new(n).composite_nodes(lo, hi, 1),
    };
    let modes = nodes
        .into_iter()
        .map(|(w, weight)| Mode {
            omega: w,
            coupling: (weight * j.value(w)).sqrt(),
        })
        .collect();
    DiscretizedBath::new(modes)
}

/// Bose–Einstein occupation `1/(e^{βω}-1)`; zero for the vacuum.
pub fn thermal_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
    }
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
    }
    if beta == VACUUM {
        return Ok(0.0);
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// Memory kernel `K(τ) = ∫ dω J(ω) e^{-i(ω-Ω)τ}` for `τ ≥ 0`.
///
/// Closed forms are used for the single mode, the flat band and the
/// exponentially cut Ohmic family; the hard-cutoff Ohmic family is
/// integrated numerically to relative accuracy [`KERNEL_REL_TOL`].
pub fn memory_kernel(j: &SpectralDensity, omega: f64, tau: f64) -> Result<Complex64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau", format!("must be finite and >= 0, got {tau}")));
    }
    kernel_any_sign(j, omega, tau)
}

pub(crate) fn kernel_any_sign(j: &SpectralDensity, omega: f64, tau: f64) -> Result<Complex64> {
    match *j {
        SpectralDensity::SingleMode { frequency, coupling } => {
            Ok(Complex64::from_polar(coupling * coupling, -(frequency - omega) * tau))
        }
        SpectralDensity::FlatBand { level, lo, hi } => {
            let width = hi - lo;
            let mid = 0.5 * (lo + hi);
            Ok(Complex64::from_polar(level * width * sinc(0.5 * width * tau), -(mid - omega) * tau))
        }
        SpectralDensity::Ohmic { exponent, scale, cutoff, shape: CutoffShape::Exponential } => {
            let z = Complex64::new(1.0 / cutoff, tau);
            let g = statrs::function::gamma::gamma(exponent + 1.0);
            Ok(Complex64::from_polar(scale * g, omega * tau) * (-(exponent + 1.0) * z.ln()).exp())
        }
        SpectralDensity::Ohmic { shape: CutoffShape::Hard, cutoff, .. } => {
            kernel_by_quadrature(j, omega, tau, 0.0, cutoff)
        }
        SpectralDensity::Ohmic { shape: CutoffShape::None, .. } => Err(Error::invalid(
            "spectral_density.cutoff_shape",
            "divergent kernel: power-law density needs a cutoff",
        )),
    }
}

/// `∫_lo^hi J(ω) e^{-i(ω-Ω)τ} dω` by adaptive Gauss–Kronrod with one
/// breakpoint per half oscillation.
pub(crate) fn kernel_by_quadrature(
    j: &SpectralDensity,
    omega: f64,
    tau: f64,
    lo: f64,
    hi: f64,
) -> Result<Complex64> {
    let periods = ((hi - lo) * tau.abs() / PI).ceil() as usize;
    let bps: Vec<f64> = (1..periods.min(20_000))
        .map(|i| lo + (hi - lo) * i as f64 / periods as f64)
        .collect();
    let tol = Tolerance {
        abs: 1e-14,
        rel: KERNEL_REL_TOL * 1e-2,
        max_intervals: 100_000,
    };
    let est = quadrature::adaptive(
        |w| Complex64::from_polar(j.value(w), -(w - omega) * tau),
        lo,
        hi,
        &bps,
        tol,
    )?;
    Ok(est.value)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
