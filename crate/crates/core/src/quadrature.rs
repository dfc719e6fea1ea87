// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Numerical quadrature used throughout the crate.
//!
//! * Gauss–Legendre rules of arbitrary order (Newton iteration on the
//!   Legendre recurrence) and composite Gauss–Legendre sums.
//! * A globally adaptive Gauss–Kronrod (7/15) integrator that works for
//!   real and complex integrands alike.
//! * Cauchy principal values by symmetric pairing around the pole.
//!
//! All routines are deterministic: the order in which panels are split and
//! summed depends only on the integrand values.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: a real vector space with a norm.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A Gauss–Legendre rule mapped onto arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussLegendre { nodes, weights }
    }

    /// Integral over `[a, b]` with a single panel.
    pub fn integrate<T: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite<T: QuadValue>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> T,
    ) -> T {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::zero();
        for p in 0..panels {
            let lo = a + p as f64 * h;
            acc = acc + self.integrate(lo, lo + h, &mut f);
        }
        acc
    }

    /// Mapped nodes and weights for a composite rule, in ascending order.
    pub fn composite_nodes(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

// Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 constants,
// kept at their published precision).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: QuadValue>(a: f64, b: f64, f: &mut impl FnMut(f64) -> T) -> (T, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    let err = (kron - gauss).magnitude();
    (kron, err)
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]` with optional
/// interior breakpoints.
///
/// The interval with the largest error estimate is bisected until the total
/// estimated error is below `max(abs, rel * |I|)`.
pub fn adaptive<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Estimate<T>> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::invalid(
            "quadrature interval",
            format!("need finite a <= b, got [{a}, {b}]"),
        ));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
        });
    }
    let mut edges = vec![a];
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    bps.sort_by(|x, y| x.total_cmp(y));
    bps.dedup();
    edges.extend(bps);
    edges.push(b);

    // (lo, hi, value, err)
    let mut panels: Vec<(f64, f64, T, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(w[0], w[1], &mut f);
            (w[0], w[1], v, e)
        })
        .collect();

    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        for p in &panels {
            total = total + p.2;
            err += p.3;
        }
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target {
            return Ok(Estimate { value: total, error: err });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::solver(
                "adaptive quadrature",
                format!(
                    "no convergence on [{a}, {b}] after {} intervals (error {err:.3e} > {target:.3e})",
                    panels.len()
                ),
            ));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels[worst];
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::solver(
                "adaptive quadrature",
                format!("interval [{lo}, {hi}] cannot be bisected further"),
            ));
        }
        let (v1, e1) = gk15(lo, mid, &mut f);
        let (v2, e2) = gk15(mid, hi, &mut f);
        panels[worst] = (lo, mid, v1, e1);
        panels.insert(worst + 1, (mid, hi, v2, e2));
    }
}

/// Cauchy principal value `P ∫_a^b f(x) / (x0 - x) dx` for `a < x0 < b`.
///
/// The window `[x0 - h, x0 + h]` with `h = min(x0 - a, b - x0)` is folded
/// onto itself so that the pole cancels pairwise:
/// `∫_0^h [f(x0 - u) - f(x0 + u)] / u du`, which is regular. The remainder of
/// `[a, b]` is integrated directly.
pub fn principal_value(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    x0: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    if !(x0 > a && x0 < b) {
        return Err(Error::invalid(
            "principal value pole",
            format!("pole {x0} must lie strictly inside ({a}, {b})"),
        ));
    }
    let h = (x0 - a).min(b - x0);
    let folded_bps: Vec<f64> = breakpoints
        .iter()
        .map(|p| (p - x0).abs())
        .filter(|u| *u > 0.0 && *u < h)
        .collect();
    let core = adaptive(
        |u| {
            if u == 0.0 {
                0.0
            } else {
                (f(x0 - u) - f(x0 + u)) / u
            }
        },
        0.0,
        h,
        &folded_bps,
        tol,
    )?;
    let mut total = core.value;
    let g = |x: f64| f(x) / (x0 - x);
    if x0 - h > a {
        total += adaptive(g, a, x0 - h, breakpoints, tol)?.value;
    }
    if x0 + h < b {
        total += adaptive(g, x0 + h, b, breakpoints, tol)?.value;
    }
    Ok(total)
}
