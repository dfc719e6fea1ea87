// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! The exact qubit map: states, the map itself, a Kraus representation and
//! population dynamics.
//!
//! Basis ordering is `{excited, ground}` everywhere: `ρ[(0,0)] = ρ₊₊`,
//! `ρ[(0,1)] = ρ₊₋`, `ρ[(1,1)] = ρ₋₋`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::MapCoefficients;

/// Tolerance on `α+γ = 1` and `ξ+ζ = 1`.
pub const UNITARITY_TOL: f64 = 1e-8;
/// Tolerance on `|η|² ≤ αξ`.
pub const SCHWARZ_TOL: f64 = 1e-10;
/// Tolerance used when validating qubit density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest `ξ` for which the Kraus set is formed.
pub const KRAUS_XI_MIN: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    m: Matrix2<Complex64>,
}

impl QubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > STATE_TOL {
            return Err(Error::invalid("initial_state", format!("not Hermitian (deviation {herm:.3e})")));
        }
        let s = QubitState { m: (m + m.adjoint()).scale(0.5) };
        if (s.trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::invalid("initial_state", format!("trace is {}, expected 1", s.trace())));
        }
        if s.rho_pp() < -STATE_TOL || s.rho_mm() < -STATE_TOL || s.determinant() < -STATE_TOL {
            return Err(Error::invalid("initial_state", "not positive semidefinite"));
        }
        Ok(s)
    }

    pub fn from_components(rho_pp: f64, rho_pm: Complex64) -> Result<Self> {
        QubitState::new(Matrix2::new(
            Complex64::new(rho_pp, 0.0),
            rho_pm,
            rho_pm.conj(),
            Complex64::new(1.0 - rho_pp, 0.0),
        ))
    }

    pub(crate) fn from_parts_unchecked(rho_pp: f64, rho_pm: Complex64, rho_mm: f64) -> Self {
        QubitState {
            m: Matrix2::new(
                Complex64::new(rho_pp, 0.0),
                rho_pm,
                rho_pm.conj(),
                Complex64::new(rho_mm, 0.0),
            ),
        }
    }

    pub fn excited() -> Self {
        QubitState::from_parts_unchecked(1.0, ZERO, 0.0)
    }

    pub fn ground() -> Self {
        QubitState::from_parts_unchecked(0.0, ZERO, 1.0)
    }

    /// `(|e⟩ + |g⟩)/√2`.
    pub fn plus_x() -> Self {
        QubitState::from_parts_unchecked(0.5, Complex64::new(0.5, 0.0), 0.5)
    }

    /// `(|e⟩ + i|g⟩)/√2`.
    pub fn plus_y() -> Self {
        QubitState::from_parts_unchecked(0.5, Complex64::new(0.0, -0.5), 0.5)
    }

    /// The four states used to probe a qubit map.
    pub fn probe_basis() -> [QubitState; 4] {
        [Self::excited(), Self::ground(), Self::plus_x(), Self::plus_y()]
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        self.m
    }

    pub fn rho_pp(&self) -> f64 {
        self.m[(0, 0)].re
    }

    pub fn rho_mm(&self) -> f64 {
        self.m[(1, 1)].re
    }

    pub fn rho_pm(&self) -> Complex64 {
        self.m[(0, 1)]
    }

    pub fn trace(&self) -> f64 {
        self.m[(0, 0)].re + self.m[(1, 1)].re
    }

    pub fn determinant(&self) -> f64 {
        self.rho_pp() * self.rho_mm() - self.rho_pm().norm_sqr()
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        let (lo, _) = hermitian_eigenvalues(&self.m);
        lo
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &QubitState) -> f64 {
        let (lo, hi) = hermitian_eigenvalues(&(self.m - other.m));
        0.5 * (lo.abs() + hi.abs())
    }
}

fn hermitian_eigenvalues(m: &Matrix2<Complex64>) -> (f64, f64) {
    let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

impl Serialize for QubitState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pm = self.rho_pm();
        [self.rho_pp(), pm.re, pm.im, self.rho_mm()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for QubitState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [pp, re, im, mm] = <[f64; 4]>::deserialize(d)?;
        QubitState::new(Matrix2::new(
            Complex64::new(pp, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
            Complex64::new(mm, 0.0),
        ))
        .map_err(serde::de::Error::custom)
    }
}

/// Map coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPoint {
    pub alpha: f64,
    pub xi: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub eta: Complex64,
}

impl CoefficientPoint {
    pub const IDENTITY: CoefficientPoint = CoefficientPoint {
        alpha: 1.0,
        xi: 1.0,
        gamma: 0.0,
        zeta: 0.0,
        eta: ONE,
    };

    /// Determinant `D = α + ξ − 1`.
    pub fn determinant(&self) -> f64 {
        self.alpha + self.xi - 1.0
    }

    /// Checks the unitarity sums, the `[0, 1]` ranges and the Schwarz bound.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::invalid("coefficients", format!("{what} violated by {v:.3e}")));
        let s1 = (self.alpha + self.gamma - 1.0).abs();
        if !(s1 <= UNITARITY_TOL) {
            return bad("alpha + gamma = 1", s1);
        }
        let s2 = (self.xi + self.zeta - 1.0).abs();
        if !(s2 <= UNITARITY_TOL) {
            return bad("xi + zeta = 1", s2);
        }
        for (name, v) in [("alpha", self.alpha), ("xi", self.xi), ("gamma", self.gamma), ("zeta", self.zeta)] {
            if !(-UNITARITY_TOL..=1.0 + UNITARITY_TOL).contains(&v) {
                return bad(&format!("0 <= {name} <= 1"), v);
            }
        }
        let schwarz = self.eta.norm_sqr() - self.alpha * self.xi;
        if !(schwarz <= SCHWARZ_TOL) {
            return bad("|eta|^2 <= alpha xi", schwarz);
        }
        Ok(())
    }
}

/// Applies the map: `ρ₊₊ → ξρ₊₊ + γρ₋₋`, `ρ₋₋ → ζρ₊₊ + αρ₋₋`, `ρ₊₋ → η*ρ₊₋`.
pub fn apply_map(c: &CoefficientPoint, rho0: &QubitState) -> Result<QubitState> {
    c.validate()?;
    Ok(apply_map_unchecked(c, rho0))
}

pub(crate) fn apply_map_unchecked(c: &CoefficientPoint, rho0: &QubitState) -> QubitState {
    let (pp, mm) = (rho0.rho_pp(), rho0.rho_mm());
    QubitState::from_parts_unchecked(
        c.xi * pp + c.gamma * mm,
        c.eta.conj() * rho0.rho_pm(),
        c.zeta * pp + c.alpha * mm,
    )
}

/// Four Kraus operators reproducing the map at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausSet {
    pub ops: [Matrix2<Complex64>; 4],
}

impl KrausSet {
    /// `Σ K†K`.
    pub fn completeness(&self) -> Matrix2<Complex64> {
        self.ops.iter().map(|k| k.adjoint() * k).sum()
    }

    pub fn apply(&self, rho: &QubitState) -> QubitState {
        let m: Matrix2<Complex64> = self.ops.iter().map(|k| k * rho.matrix() * k.adjoint()).sum();
        QubitState { m }
    }
}

/// Kraus operators `{√γ σ₊, √ζ σ₋, diag(√ξ, η/√ξ), diag(0, √(α − |η|²/ξ))}`.
pub fn kraus(c: &CoefficientPoint) -> Result<KrausSet> {
    c.validate()?;
    if c.xi < KRAUS_XI_MIN {
        return Err(Error::invalid(
            "coefficients.xi",
            format!("degenerate Kraus point: xi = {:.3e}", c.xi),
        ));
    }
    let r = |x: f64| Complex64::new(x.max(0.0).sqrt(), 0.0);
    let sq_xi = c.xi.sqrt();
    let residual = c.alpha - c.eta.norm_sqr() / c.xi;
    if residual < -SCHWARZ_TOL / c.xi {
        return Err(Error::invalid(
            "coefficients",
            format!("alpha - |eta|^2/xi = {residual:.3e} < 0"),
        ));
    }
    Ok(KrausSet {
        ops: [
            Matrix2::new(ZERO, r(c.gamma), ZERO, ZERO),
            Matrix2::new(ZERO, ZERO, r(c.zeta), ZERO),
            Matrix2::new(Complex64::new(sq_xi, 0.0), ZERO, ZERO, c.eta / sq_xi),
            Matrix2::new(ZERO, ZERO, ZERO, r(residual)),
        ],
    })
}

/// Excited/ground populations along a coefficient series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub times: Vec<f64>,
    pub excited: Vec<f64>,
    pub ground: Vec<f64>,
}

/// Propagates populations `(p₊, p₋)` with the stochastic matrix
/// `[[ξ, γ], [ζ, α]]`.
pub fn populations(c: &MapCoefficients, p0: (f64, f64)) -> Result<PopulationSeries> {
    let (a, b) = p0;
    if !(a >= 0.0 && b >= 0.0) || (a + b - 1.0).abs() > STATE_TOL {
        return Err(Error::invalid(
            "initial_populations",
            format!("need nonnegative pair summing to 1, got ({a}, {b})"),
        ));
    }
    let n = c.len();
    let mut out = PopulationSeries {
        times: c.times.clone(),
        excited: Vec::with_capacity(n),
        ground: Vec::with_capacity(n),
    };
    for i in 0..n {
        out.excited.push(c.xi[i] * a + c.gamma[i] * b);
        out.ground.push(c.zeta[i] * a + c.alpha[i] * b);
    }
    Ok(out)
}
