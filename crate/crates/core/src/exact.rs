// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact finite-bath dynamics.
//!
//! The RWA Hamiltonian
//! `H = Ω/2 σz + Σ ω_k a_k†a_k + λ Σ g_k (a_k†σ₋ + a_k σ₊)`
//! conserves `σ₊σ₋ + Σ a_k†a_k`, so it is block diagonal in sectors of fixed
//! total excitation `E`. Sector `E` holds the states `(excited, n)` with
//! `Σn = E−1` followed by `(ground, n)` with `Σn = E`. Keeping sectors
//! `E ≤ M` is exact for every boson state with `Σn ≤ M−1`; the Gibbs state is
//! restricted to that support and renormalised, and the discarded weight is
//! the truncation-health metric.
//!
//! Each sector is diagonalised once (`H_E = V diag(e) Vᵀ`, real symmetric).
//! Thermal averages then reduce to quadratic forms in the eigenbasis, e.g.
//! `ξ(t) = Σ_jl cos((e_j − e_l)t) A_jl B_jl` with
//! `A = V₊ᵀ diag(p) V₊`, `B = V₊ᵀ V₊`, which costs `O(d²)` per time point.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{DiscretizedBath, ModelParams};
use crate::dynmap::{CoefficientPoint, QubitState};
use crate::error::{Error, Result};

/// Minimum Gibbs weight the truncated basis must capture.
pub const GIBBS_WEIGHT_MIN: f64 = 0.999;
/// Largest sector handed to the dense eigensolver.
pub const MAX_SECTOR_DIM: usize = 12_000;
/// Largest basis that will be enumerated.
pub const MAX_BASIS_STATES: usize = 4_000_000;

const TIME_CHUNK: usize = 64;

/// Excitation-conserving basis with total excitation `≤ M`.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_modes: usize,
    max_excitations: usize,
    bosons: Vec<Vec<u16>>,
    boson_offsets: Vec<usize>,
    boson_index: HashMap<Vec<u16>, usize>,
    sector_offsets: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn push_compositions(total: usize, modes: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if modes == 1 {
        prefix.push(total as u16);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u16);
        push_compositions(total - first, modes - 1, prefix, out);
        prefix.pop();
    }
}

impl SectorBasis {
    pub fn new(n_modes: usize, max_excitations: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("discretization.modes", "need at least one mode"));
        }
        if max_excitations == 0 {
            return Err(Error::invalid("truncation.max_excitations", "must be >= 1"));
        }
        let bosons_total: f64 = (0..=max_excitations)
            .map(|k| binomial(n_modes + k - 1, k))
            .sum();
        if bosons_total * 2.0 > MAX_BASIS_STATES as f64 {
            return Err(Error::invalid(
                "truncation.max_excitations",
                format!(
                    "basis with N = {n_modes}, M = {max_excitations} has ~{bosons_total:.3e} boson states (limit {MAX_BASIS_STATES})"
                ),
            ));
        }
        let mut bosons = Vec::new();
        let mut boson_offsets = vec![0];
        for k in 0..=max_excitations {
            push_compositions(k, n_modes, &mut Vec::with_capacity(n_modes), &mut bosons);
            boson_offsets.push(bosons.len());
        }
        let boson_index = bosons.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let mut sector_offsets = vec![0];
        for e in 0..=max_excitations {
            let ne = if e == 0 { 0 } else { boson_offsets[e] - boson_offsets[e - 1] };
            let ng = boson_offsets[e + 1] - boson_offsets[e];
            sector_offsets.push(sector_offsets[e] + ne + ng);
        }
        Ok(SectorBasis {
            n_modes,
            max_excitations,
            bosons,
            boson_offsets,
            boson_index,
            sector_offsets,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_excitations(&self) -> usize {
        self.max_excitations
    }

    /// Total number of qubit ⊗ boson states.
    pub fn len(&self) -> usize {
        *self.sector_offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sector_count(&self) -> usize {
        self.max_excitations + 1
    }

    /// Global indices of sector `e`.
    pub fn sector_range(&self, e: usize) -> Range<usize> {
        self.sector_offsets[e]..self.sector_offsets[e + 1]
    }

    /// `(excited part, ground part)` sizes of sector `e`.
    pub fn sector_dims(&self, e: usize) -> (usize, usize) {
        let ne = if e == 0 { 0 } else { self.boson_range(e - 1).len() };
        (ne, self.boson_range(e).len())
    }

    /// Indices (into the boson list) of occupation vectors with total `k`.
    pub fn boson_range(&self, k: usize) -> Range<usize> {
        self.boson_offsets[k]..self.boson_offsets[k + 1]
    }

    pub fn bosons(&self) -> &[Vec<u16>] {
        &self.bosons
    }

    pub fn boson_index(&self, occupations: &[u16]) -> Option<usize> {
        self.boson_index.get(occupations).copied()
    }

    /// Global index of `(excited, occupations)`.
    pub fn index_of(&self, excited: bool, occupations: &[u16]) -> Option<usize> {
        let b = self.boson_index(occupations)?;
        let total: usize = occupations.iter().map(|&n| n as usize).sum();
        if excited {
            let e = total + 1;
            if e > self.max_excitations {
                return None;
            }
            Some(self.sector_offsets[e] + b - self.boson_offsets[total])
        } else {
            let (ne, _) = self.sector_dims(total);
            Some(self.sector_offsets[total] + ne + b - self.boson_offsets[total])
        }
    }

    /// Inverse of [`SectorBasis::index_of`].
    pub fn state(&self, index: usize) -> (bool, &[u16]) {
        let e = self.sector_offsets.partition_point(|&o| o <= index) - 1;
        let local = index - self.sector_offsets[e];
        let (ne, _) = self.sector_dims(e);
        if local < ne {
            (true, &self.bosons[self.boson_offsets[e - 1] + local])
        } else {
            (false, &self.bosons[self.boson_offsets[e] + local - ne])
        }
    }
}

/// Hamiltonian stored sector by sector, with the free part `H₀` alongside.
#[derive(Debug, Clone)]
pub struct BlockHamiltonian {
    pub blocks: Vec<DMatrix<f64>>,
    pub free: Vec<DVector<f64>>,
    /// Size of the qubit-excited part of each block (stored first).
    pub n_excited: Vec<usize>,
}

impl BlockHamiltonian {
    /// Assembles the full matrix over the whole basis (small bases only).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut h = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            h.view_mut((off, off), b.shape()).copy_from(b);
            off += b.nrows();
        }
        h
    }
}

/// Builds the sector blocks of the Hamiltonian.
pub fn build_hamiltonian(
    bath: &DiscretizedBath,
    params: &ModelParams,
    basis: &SectorBasis,
) -> Result<BlockHamiltonian> {
    build_sectors(bath, params, basis, basis.sector_count())
}

fn build_sectors(
    bath: &DiscretizedBath,
    params: &ModelParams,
    basis: &SectorBasis,
    sectors: usize,
) -> Result<BlockHamiltonian> {
    if bath.len() != basis.n_modes() {
        return Err(Error::invalid(
            "discretization.modes",
            format!("bath has {} modes but basis was built for {}", bath.len(), basis.n_modes()),
        ));
    }
    params.validate()?;
    let free_energy = |occ: &[u16]| -> f64 {
        occ.iter().zip(&bath.modes).map(|(&n, m)| n as f64 * m.omega).sum()
    };
    let mut blocks = Vec::with_capacity(sectors);
    let mut free = Vec::with_capacity(sectors);
    let mut n_excited = Vec::with_capacity(sectors);
    for e in 0..sectors {
        let (ne, ng) = basis.sector_dims(e);
        let d = ne + ng;
        if d > MAX_SECTOR_DIM {
            return Err(Error::invalid(
                "truncation.max_excitations",
                format!("sector {e} has dimension {d} (dense limit {MAX_SECTOR_DIM})"),
            ));
        }
        let mut h0 = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        let ground_start = basis.boson_range(e).start;
        if e > 0 {
            let exc = basis.boson_range(e - 1);
            for (i, bi) in exc.clone().enumerate() {
                let occ = &basis.bosons()[bi];
                h0[i] = 0.5 * params.omega + free_energy(occ);
                let mut target = occ.clone();
                for (k, mode) in bath.modes.iter().enumerate() {
                    target[k] += 1;
                    let j = basis.boson_index(&target).expect("raised state lies in sector") - ground_start;
                    let v = params.lambda * mode.coupling * ((occ[k] as f64) + 1.0).sqrt();
                    h[(i, ne + j)] = v;
                    h[(ne + j, i)] = v;
                    target[k] -= 1;
                }
            }
        }
        for (j, bj) in basis.boson_range(e).enumerate() {
            h0[ne + j] = -0.5 * params.omega + free_energy(&basis.bosons()[bj]);
        }
        for i in 0..d {
            h[(i, i)] = h0[i];
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::solver("build_hamiltonian", format!("non-finite entry in sector {e}")));
        }
        blocks.push(h);
        free.push(h0);
        n_excited.push(ne);
    }
    Ok(BlockHamiltonian { blocks, free, n_excited })
}

/// Eigendecomposition of one sector.
#[derive(Debug, Clone)]
pub struct SectorEigen {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub n_excited: usize,
}

impl SectorEigen {
    pub fn new(h: &DMatrix<f64>, n_excited: usize) -> Result<Self> {
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::solver("propagate", "non-finite Hamiltonian entry"));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(SectorEigen {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
            n_excited,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn excited_rows(&self) -> DMatrix<f64> {
        self.vectors.rows(0, self.n_excited).into_owned()
    }

    fn ground_rows(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.vectors.rows(self.n_excited, d - self.n_excited).into_owned()
    }

    /// `e^{−iHt}` on this sector.
    pub fn evolution(&self, t: f64) -> DMatrix<Complex64> {
        let v = self.vectors.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        let mut vp = v.clone();
        for (j, mut col) in vp.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        vp * v.transpose()
    }

    /// Qubit-conditioned blocks of `e^{+iH₀t} e^{−iHt}`.
    pub fn blocks(&self, free: &DVector<f64>, t: f64) -> SectorBlocks {
        let mut u = self.evolution(t);
        for (i, mut row) in u.row_iter_mut().enumerate() {
            row *= Complex64::from_polar(1.0, free[i] * t);
        }
        let ne = self.n_excited;
        let ng = self.dim() - ne;
        SectorBlocks {
            pp: u.view((0, 0), (ne, ne)).into_owned(),
            mp: u.view((ne, 0), (ng, ne)).into_owned(),
            pm: u.view((0, ne), (ne, ng)).into_owned(),
            mm: u.view((ne, ne), (ng, ng)).into_owned(),
        }
    }
}

/// Blocks of the interaction-picture propagator on one sector. `pp` maps
/// excited→excited (`U₊`), `mm` ground→ground (`U₋`), `mp` excited→ground,
/// `pm` ground→excited.
#[derive(Debug, Clone)]
pub struct SectorBlocks {
    pub pp: DMatrix<Complex64>,
    pub mp: DMatrix<Complex64>,
    pub pm: DMatrix<Complex64>,
    pub mm: DMatrix<Complex64>,
}

impl SectorBlocks {
    /// Largest deviation of `P₊₊†P₊₊ + P₋₊†P₋₊` and `P₋₋†P₋₋ + P₊₋†P₊₋`
    /// from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let a = self.pp.adjoint() * &self.pp + self.mp.adjoint() * &self.mp;
        let b = self.mm.adjoint() * &self.mm + self.pm.adjoint() * &self.pm;
        let dev = |m: DMatrix<Complex64>| {
            let n = m.nrows();
            (m - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        dev(a).max(dev(b))
    }
}

/// Propagator blocks for every sector on a time grid.
#[derive(Debug, Clone)]
pub struct ConditionedPropagators {
    pub times: Vec<f64>,
    pub blocks: Vec<Vec<SectorBlocks>>,
}

/// Propagator blocks of `h` at time `t` (diagonalises every sector).
pub fn propagate(h: &BlockHamiltonian, t: f64) -> Result<Vec<SectorBlocks>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    h.blocks
        .iter()
        .zip(&h.free)
        .zip(&h.n_excited)
        .map(|((b, f), &ne)| Ok(SectorEigen::new(b, ne)?.blocks(f, t)))
        .collect()
}

/// Thermally averaged map coefficients on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCoefficients {
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub zeta: Vec<f64>,
    pub eta: Vec<Complex64>,
    pub determinant: Vec<f64>,
}

impl MapCoefficients {
    pub fn from_points(times: Vec<f64>, points: Vec<CoefficientPoint>) -> Self {
        assert_eq!(times.len(), points.len());
        MapCoefficients {
            alpha: points.iter().map(|p| p.alpha).collect(),
            xi: points.iter().map(|p| p.xi).collect(),
            gamma: points.iter().map(|p| p.gamma).collect(),
            zeta: points.iter().map(|p| p.zeta).collect(),
            eta: points.iter().map(|p| p.eta).collect(),
            determinant: points.iter().map(|p| p.determinant()).collect(),
            times,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> CoefficientPoint {
        CoefficientPoint {
            alpha: self.alpha[i],
            xi: self.xi[i],
            gamma: self.gamma[i],
            zeta: self.zeta[i],
            eta: self.eta[i],
        }
    }

    /// First grid index at which the coefficient invariants fail.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            if let Err(Error::InvalidInput { reason, .. }) = self.point(i).validate() {
                return Err(Error::solver_at("map_coefficients", i, reason));
            }
        }
        Ok(())
    }
}

/// Captured Gibbs weight and the truncation actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationHealth {
    pub requested_max_excitations: usize,
    pub max_excitations: usize,
    pub captured_weight: f64,
    pub required_weight: f64,
}

impl TruncationHealth {
    pub fn is_healthy(&self) -> bool {
        self.captured_weight >= self.required_weight
    }
}

/// Gibbs weight of boson states with `Σn ≤ M−1` (product of geometric
/// distributions, convolved over modes).
pub fn gibbs_captured_weight(bath: &DiscretizedBath, beta: f64, max_excitations: usize) -> f64 {
    if beta == crate::bath::VACUUM || max_excitations == 0 {
        return if max_excitations == 0 { 0.0 } else { 1.0 };
    }
    let kmax = max_excitations - 1;
    let mut w = vec![0.0; kmax + 1];
    w[0] = 1.0;
    for m in &bath.modes {
        let x = (-beta * m.omega).exp();
        let mut next = vec![0.0; kmax + 1];
        for (c, slot) in next.iter_mut().enumerate() {
            let mut pj = 1.0 - x;
            for j in 0..=c {
                *slot += w[c - j] * pj;
                pj *= x;
            }
        }
        w = next;
    }
    w.iter().sum()
}

/// Truncation actually used: the vacuum reservoir only populates sectors
/// `E ≤ 1`, so larger `M` is redundant.
pub fn effective_max_excitations(params: &ModelParams, requested: usize) -> usize {
    if params.is_vacuum() {
        requested.min(1)
    } else {
        requested
    }
}

/// Mode occupations `⟨a_k†a_k⟩` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationSeries {
    pub times: Vec<f64>,
    /// `occupations[i][k]` at `times[i]`.
    pub occupations: Vec<Vec<f64>>,
    /// Occupations of the (truncated, renormalised) initial Gibbs state.
    pub initial: Vec<f64>,
}

/// Reduced reservoir state at one time.
#[derive(Debug, Clone)]
pub struct ReservoirState {
    /// Density matrix over all boson states with `Σn ≤ M`, in the order of
    /// [`SectorBasis::bosons`].
    pub density: DMatrix<Complex64>,
    pub occupations: Vec<f64>,
}

impl ReservoirState {
    pub fn trace(&self) -> Complex64 {
        self.density.trace()
    }
}

struct PopulationForms {
    xi: DMatrix<f64>,
    zeta: DMatrix<f64>,
    alpha: DMatrix<f64>,
    gamma: DMatrix<f64>,
    excited_source: bool,
    ground_source: bool,
}

/// Exact model for one bath and truncation, with cached eigendecompositions.
pub struct ExactModel {
    params: ModelParams,
    bath: DiscretizedBath,
    basis: SectorBasis,
    hamiltonian: BlockHamiltonian,
    eigen: Vec<SectorEigen>,
    gibbs: Vec<f64>,
    health: TruncationHealth,
}

impl ExactModel {
    /// Builds and diagonalises the model; aborts if the captured Gibbs
    /// weight is below [`GIBBS_WEIGHT_MIN`].
    pub fn new(bath: &DiscretizedBath, params: &ModelParams, max_excitations: usize) -> Result<Self> {
        let model = Self::new_unchecked(bath, params, max_excitations)?;
        if !model.health.is_healthy() {
            return Err(Error::Truncation {
                max_excitations: model.health.max_excitations,
                captured: model.health.captured_weight,
                required: model.health.required_weight,
            });
        }
        Ok(model)
    }

    /// As [`ExactModel::new`] without the truncation-health abort.
    pub fn new_unchecked(bath: &DiscretizedBath, params: &ModelParams, max_excitations: usize) -> Result<Self> {
        params.validate()?;
        let m = effective_max_excitations(params, max_excitations);
        let basis = SectorBasis::new(bath.len(), m)?;
        let hamiltonian = build_hamiltonian(bath, params, &basis)?;
        let eigen = hamiltonian
            .blocks
            .par_iter()
            .enumerate()
            .map(|(e, h)| SectorEigen::new(h, hamiltonian.n_excited[e]))
            .collect::<Result<Vec<_>>>()?;
        let captured = gibbs_captured_weight(bath, params.beta, m);
        let gibbs = gibbs_weights(bath, params, &basis, captured);
        Ok(ExactModel {
            params: *params,
            bath: bath.clone(),
            basis,
            hamiltonian,
            eigen,
            gibbs,
            health: TruncationHealth {
                requested_max_excitations: max_excitations,
                max_excitations: m,
                captured_weight: captured,
                required_weight: GIBBS_WEIGHT_MIN,
            },
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn bath(&self) -> &DiscretizedBath {
        &self.bath
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn hamiltonian(&self) -> &BlockHamiltonian {
        &self.hamiltonian
    }

    pub fn eigen(&self) -> &[SectorEigen] {
        &self.eigen
    }

    pub fn health(&self) -> TruncationHealth {
        self.health
    }

    /// Renormalised Gibbs weights, indexed like [`SectorBasis::bosons`].
    pub fn gibbs_weights(&self) -> &[f64] {
        &self.gibbs
    }

    /// Propagator blocks of every sector at time `t`.
    pub fn propagate(&self, t: f64) -> Vec<SectorBlocks> {
        self.eigen
            .iter()
            .zip(&self.hamiltonian.free)
            .map(|(eig, f)| eig.blocks(f, t))
            .collect()
    }

    pub fn propagators(&self, times: &[f64]) -> ConditionedPropagators {
        ConditionedPropagators {
            times: times.to_vec(),
            blocks: times.par_iter().map(|&t| self.propagate(t)).collect(),
        }
    }

    fn source_weights(&self, total: usize) -> DVector<f64> {
        let r = self.basis.boson_range(total);
        DVector::from_iterator(r.len(), r.map(|i| self.gibbs[i]))
    }

    fn population_forms(&self) -> Vec<PopulationForms> {
        (0..self.basis.sector_count())
            .into_par_iter()
            .map(|e| {
                let eig = &self.eigen[e];
                let vp = eig.excited_rows();
                let vm = eig.ground_rows();
                let bp = vp.transpose() * &vp;
                let bm = vm.transpose() * &vm;
                let d = eig.dim();
                let zero = || DMatrix::<f64>::zeros(d, d);
                let mut f = PopulationForms {
                    xi: zero(),
                    zeta: zero(),
                    alpha: zero(),
                    gamma: zero(),
                    excited_source: false,
                    ground_source: false,
                };
                if e > 0 {
                    let p = self.source_weights(e - 1);
                    if p.iter().any(|&x| x > 0.0) {
                        let a = weighted_gram(&vp, &p);
                        f.xi = a.component_mul(&bp);
                        f.zeta = a.component_mul(&bm);
                        f.excited_source = true;
                    }
                }
                let p = self.source_weights(e);
                if p.iter().any(|&x| x > 0.0) {
                    let a = weighted_gram(&vm, &p);
                    f.alpha = a.component_mul(&bm);
                    f.gamma = a.component_mul(&bp);
                    f.ground_source = true;
                }
                f
            })
            .collect()
    }

    /// `η` forms pairing sector `K+1` (excited rows) with sector `K`
    /// (ground rows), for every `K` carrying Gibbs weight.
    fn coherence_forms(&self) -> Vec<(usize, DMatrix<f64>)> {
        (0..self.basis.max_excitations())
            .into_par_iter()
            .filter_map(|k| {
                let p = self.source_weights(k);
                if !p.iter().any(|&x| x > 0.0) {
                    return None;
                }
                let vp = self.eigen[k + 1].excited_rows();
                let vm = self.eigen[k].ground_rows();
                let mut scaled = vm.clone();
                for (i, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= p[i];
                }
                let a = vp.transpose() * scaled;
                let b = vp.transpose() * &vm;
                Some((k, a.component_mul(&b)))
            })
            .collect()
    }

    /// Map coefficients on `times` via eigenbasis quadratic forms.
    pub fn map_coefficients(&self, times: &[f64]) -> Result<MapCoefficients> {
        for (i, &t) in times.iter().enumerate() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::invalid("time", format!("grid point {i} is {t}")));
            }
        }
        let pop = self.population_forms();
        let coh = self.coherence_forms();
        let omega = self.params.omega;
        let chunks: Vec<Vec<CoefficientPoint>> = times
            .par_chunks(TIME_CHUNK)
            .map(|ts| {
                let trig: Vec<(DMatrix<f64>, DMatrix<f64>)> =
                    self.eigen.iter().map(|eig| trig_table(&eig.energies, ts)).collect();
                let mut xi = vec![0.0; ts.len()];
                let mut zeta = vec![0.0; ts.len()];
                let mut alpha = vec![0.0; ts.len()];
                let mut gamma = vec![0.0; ts.len()];
                for (e, f) in pop.iter().enumerate() {
                    let (c, s) = &trig[e];
                    if f.excited_source {
                        add_assign(&mut xi, &quadratic_forms(&f.xi, c, s));
                        add_assign(&mut zeta, &quadratic_forms(&f.zeta, c, s));
                    }
                    if f.ground_source {
                        add_assign(&mut alpha, &quadratic_forms(&f.alpha, c, s));
                        add_assign(&mut gamma, &quadratic_forms(&f.gamma, c, s));
                    }
                }
                let mut eta = vec![Complex64::new(0.0, 0.0); ts.len()];
                for (k, cm) in &coh {
                    let (ce, se) = &trig[k + 1];
                    let (cf, sf) = &trig[*k];
                    let forms = bilinear_forms(cm, ce, se, cf, sf);
                    for (acc, v) in eta.iter_mut().zip(forms) {
                        *acc += v;
                    }
                }
                ts.iter()
                    .enumerate()
                    .map(|(i, &t)| CoefficientPoint {
                        alpha: alpha[i],
                        xi: xi[i],
                        gamma: gamma[i],
                        zeta: zeta[i],
                        eta: eta[i] * Complex64::from_polar(1.0, -omega * t),
                    })
                    .collect()
            })
            .collect();
        Ok(MapCoefficients::from_points(times.to_vec(), chunks.into_iter().flatten().collect()))
    }

    /// Map coefficients at one time by explicit traces over the propagator
    /// blocks. Independent of [`ExactModel::map_coefficients`]; meant for
    /// small bases.
    pub fn map_coefficients_direct(&self, t: f64) -> CoefficientPoint {
        let blocks = self.propagate(t);
        let mut c = CoefficientPoint {
            alpha: 0.0,
            xi: 0.0,
            gamma: 0.0,
            zeta: 0.0,
            eta: Complex64::new(0.0, 0.0),
        };
        let weighted = |m: &DMatrix<Complex64>, p: &DVector<f64>| -> f64 {
            // Tr[P diag(p) P†] = Σ_n p_n Σ_m |P_mn|²
            m.column_iter().zip(p.iter()).map(|(col, &w)| w * col.norm_squared()).sum()
        };
        for (e, b) in blocks.iter().enumerate() {
            if e > 0 {
                let p = self.source_weights(e - 1);
                c.xi += weighted(&b.pp, &p);
                c.zeta += weighted(&b.mp, &p);
            }
            let p = self.source_weights(e);
            c.alpha += weighted(&b.mm, &p);
            c.gamma += weighted(&b.pm, &p);
        }
        for k in 0..self.basis.max_excitations() {
            let p = self.source_weights(k);
            let u_plus = &blocks[k + 1].pp;
            let u_minus = &blocks[k].mm;
            let prod = u_plus.adjoint() * u_minus;
            c.eta += prod.diagonal().iter().zip(p.iter()).map(|(z, &w)| z * w).sum::<Complex64>();
        }
        c
    }

    /// Per-mode occupations `⟨a_k†a_k⟩(t)` for qubit initial state `rho0`.
    /// Qubit coherences do not contribute (they connect different boson
    /// totals).
    pub fn mode_occupations(&self, times: &[f64], rho0: &QubitState) -> OccupationSeries {
        let n = self.basis.n_modes();
        let (wp, wm) = (rho0.rho_pp(), rho0.rho_mm());
        // forms[e][k] = (A⁺ ∘ B^k) wp + (A⁻ ∘ B^k) wm
        let forms: Vec<Vec<DMatrix<f64>>> = (0..self.basis.sector_count())
            .into_par_iter()
            .map(|e| {
                let eig = &self.eigen[e];
                let d = eig.dim();
                let ne = eig.n_excited;
                let mut a = DMatrix::<f64>::zeros(d, d);
                if e > 0 && wp != 0.0 {
                    a += weighted_gram(&eig.excited_rows(), &self.source_weights(e - 1)) * wp;
                }
                if wm != 0.0 {
                    a += weighted_gram(&eig.ground_rows(), &self.source_weights(e)) * wm;
                }
                (0..n)
                    .map(|k| {
                        let occ = DVector::from_iterator(
                            d,
                            (0..d).map(|i| {
                                let b = if i < ne {
                                    self.basis.boson_range(e - 1).start + i
                                } else {
                                    self.basis.boson_range(e).start + i - ne
                                };
                                self.basis.bosons()[b][k] as f64
                            }),
                        );
                        weighted_gram(&eig.vectors, &occ).component_mul(&a)
                    })
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<Vec<f64>>> = times
            .par_chunks(TIME_CHUNK)
            .map(|ts| {
                let mut out = vec![vec![0.0; n]; ts.len()];
                for (e, fk) in forms.iter().enumerate() {
                    let (c, s) = trig_table(&self.eigen[e].energies, ts);
                    for (k, f) in fk.iter().enumerate() {
                        for (i, v) in quadratic_forms(f, &c, &s).into_iter().enumerate() {
                            out[i][k] += v;
                        }
                    }
                }
                out
            })
            .collect();
        let initial = (0..n)
            .map(|k| {
                self.basis
                    .bosons()
                    .iter()
                    .zip(&self.gibbs)
                    .map(|(b, &p)| p * b[k] as f64)
                    .sum()
            })
            .collect();
        OccupationSeries {
            times: times.to_vec(),
            occupations: rows.into_iter().flatten().collect(),
            initial,
        }
    }

    /// Full reduced reservoir state at time `t` (small bases only).
    pub fn reservoir_state(&self, rho0: &QubitState, t: f64) -> Result<ReservoirState> {
        QubitState::new(rho0.matrix())?;
        let nb = self.basis.bosons().len();
        let blocks = self.propagate(t);
        let z = || DMatrix::<Complex64>::zeros(nb, nb);
        let (mut pp, mut mp, mut pm, mut mm) = (z(), z(), z(), z());
        for (e, b) in blocks.iter().enumerate() {
            let g = self.basis.boson_range(e).start;
            if e > 0 {
                let x = self.basis.boson_range(e - 1).start;
                pp.view_mut((x, x), b.pp.shape()).copy_from(&b.pp);
                mp.view_mut((g, x), b.mp.shape()).copy_from(&b.mp);
                pm.view_mut((x, g), b.pm.shape()).copy_from(&b.pm);
            }
            mm.view_mut((g, g), b.mm.shape()).copy_from(&b.mm);
        }
        let rho_a = DMatrix::from_diagonal(&DVector::from_iterator(
            nb,
            self.gibbs.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        let r = rho0.matrix();
        let mut density = z();
        for (to_p, to_m) in [(&pp, &pm), (&mp, &mm)] {
            // to_p: the block leaving from qubit +, to_m: leaving from qubit −
            let left_p = to_p * &rho_a;
            let left_m = to_m * &rho_a;
            density += &left_p * to_p.adjoint() * r[(0, 0)];
            density += &left_m * to_m.adjoint() * r[(1, 1)];
            density += &left_p * to_m.adjoint() * r[(0, 1)];
            density += &left_m * to_p.adjoint() * r[(1, 0)];
        }
        let occupations = (0..self.basis.n_modes())
            .map(|k| {
                self.basis
                    .bosons()
                    .iter()
                    .enumerate()
                    .map(|(i, b)| density[(i, i)].re * b[k] as f64)
                    .sum()
            })
            .collect();
        Ok(ReservoirState { density, occupations })
    }
}

fn gibbs_weights(bath: &DiscretizedBath, params: &ModelParams, basis: &SectorBasis, captured: f64) -> Vec<f64> {
    let support = basis.max_excitations() - 1;
    let mut w = vec![0.0; basis.bosons().len()];
    if params.is_vacuum() {
        w[0] = 1.0;
        return w;
    }
    for k in 0..=support {
        for i in basis.boson_range(k) {
            let occ = &basis.bosons()[i];
            let log_p: f64 = occ
                .iter()
                .zip(&bath.modes)
                .map(|(&n, m)| {
                    let x = params.beta * m.omega;
                    // ln[(1 − e^{−x}) e^{−nx}]
                    (-(-x).exp_m1()).ln() - x * n as f64
                })
                .sum();
            w[i] = log_p.exp() / captured;
        }
    }
    w
}

/// `Vᵀ diag(p) V`.
fn weighted_gram(v: &DMatrix<f64>, p: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= p[i];
    }
    v.transpose() * scaled
}

fn trig_table(energies: &DVector<f64>, ts: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = energies.len();
    let mut c = DMatrix::zeros(d, ts.len());
    let mut s = DMatrix::zeros(d, ts.len());
    for (col, &t) in ts.iter().enumerate() {
        for j in 0..d {
            let (sn, cs) = (energies[j] * t).sin_cos();
            c[(j, col)] = cs;
            s[(j, col)] = sn;
        }
    }
    (c, s)
}

/// `Σ_jl cos((e_j − e_l)t) C_jl = cᵀCc + sᵀCs` for every column.
fn quadratic_forms(form: &DMatrix<f64>, c: &DMatrix<f64>, s: &DMatrix<f64>) -> Vec<f64> {
    let yc = form * c;
    let ys = form * s;
    (0..c.ncols())
        .map(|k| c.column(k).dot(&yc.column(k)) + s.column(k).dot(&ys.column(k)))
        .collect()
}

/// `Σ_jl e^{i(e_j − f_l)t} C_jl` for every column.
fn bilinear_forms(
    form: &DMatrix<f64>,
    ce: &DMatrix<f64>,
    se: &DMatrix<f64>,
    cf: &DMatrix<f64>,
    sf: &DMatrix<f64>,
) -> Vec<Complex64> {
    let yc = form * cf;
    let ys = form * sf;
    (0..ce.ncols())
        .map(|k| {
            let re = ce.column(k).dot(&yc.column(k)) + se.column(k).dot(&ys.column(k));
            let im = se.column(k).dot(&yc.column(k)) - ce.column(k).dot(&ys.column(k));
            Complex64::new(re, im)
        })
        .collect()
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Map coefficients for `bath`/`params` with truncation `basis`.
pub fn map_coefficients(
    bath: &DiscretizedBath,
    params: &ModelParams,
    basis: &SectorBasis,
    times: &[f64],
) -> Result<MapCoefficients> {
    if basis.n_modes() != bath.len() {
        return Err(Error::invalid(
            "discretization.modes",
            format!("bath has {} modes but basis was built for {}", bath.len(), basis.n_modes()),
        ));
    }
    ExactModel::new(bath, params, basis.max_excitations())?.map_coefficients(times)
}

/// Largest differences of `α`, `ξ` and `η` between two runs on the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfConvergence {
    pub max_excitations: usize,
    pub compared_with: usize,
    pub max_delta_alpha: f64,
    pub max_delta_xi: f64,
    pub max_delta_eta: f64,
}

pub fn self_convergence(a: &MapCoefficients, b: &MapCoefficients, m_a: usize, m_b: usize) -> SelfConvergence {
    let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    SelfConvergence {
        max_excitations: m_a,
        compared_with: m_b,
        max_delta_alpha: sup(&a.alpha, &b.alpha),
        max_delta_xi: sup(&a.xi, &b.xi),
        max_delta_eta: a.eta.iter().zip(&b.eta).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Mode, VACUUM};

    fn jc(g: f64) -> (DiscretizedBath, ModelParams) {
        (
            DiscretizedBath::new(vec![Mode { omega: 1.0, coupling: g }]).unwrap(),
            ModelParams::new(1.0, VACUUM, 1.0).unwrap(),
        )
    }

    fn small_thermal() -> (DiscretizedBath, ModelParams) {
        let modes = vec![
            Mode { omega: 0.8, coupling: 0.05 },
            Mode { omega: 1.05, coupling: 0.08 },
            Mode { omega: 1.6, coupling: 0.04 },
        ];
        (
            DiscretizedBath::new(modes).unwrap(),
            ModelParams::new(1.0, 2.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn basis_is_bijective_and_grouped() {
        let basis = SectorBasis::new(3, 4).unwrap();
        for i in 0..basis.len() {
            let (exc, occ) = basis.state(i);
            let total = exc as usize + occ.iter().map(|&n| n as usize).sum::<usize>();
            assert!(total <= 4);
            assert!(basis.sector_range(total).contains(&i));
            assert_eq!(basis.index_of(exc, occ), Some(i));
        }
        // C(N+k-1, k) bosons with total k
        assert_eq!(basis.boson_range(3).len(), 10);
        assert_eq!(basis.sector_dims(3), (6, 10));
    }

    #[test]
    fn jc_sector_matrix() {
        let (bath, params) = jc(0.1);
        let basis = SectorBasis::new(1, 1).unwrap();
        let h = build_hamiltonian(&bath, &params, &basis).unwrap();
        let s1 = &h.blocks[1];
        assert_eq!(s1.shape(), (2, 2));
        assert!((s1[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((s1[(1, 1)] - 0.5).abs() < 1e-15);
        assert!((s1[(0, 1)] - 0.1).abs() < 1e-15);
        let eig = s1.clone().symmetric_eigen();
        let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert!((e[1] - e[0] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn free_hamiltonian_is_diagonal_and_symmetric() {
        let (bath, _) = small_thermal();
        let basis = SectorBasis::new(3, 3).unwrap();
        let free = build_hamiltonian(&bath, &ModelParams::new(1.0, 1.0, 0.0).unwrap(), &basis).unwrap();
        let h = free.to_dense();
        assert_eq!(h.clone() - DMatrix::from_diagonal(&h.diagonal()), DMatrix::zeros(h.nrows(), h.ncols()));
        let full = build_hamiltonian(&bath, &ModelParams::new(1.0, 1.0, 1.0).unwrap(), &basis)
            .unwrap()
            .to_dense();
        assert_eq!(full.clone(), full.transpose());
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let (bath, params) = small_thermal();
        let basis = SectorBasis::new(2, 2).unwrap();
        assert!(build_hamiltonian(&bath, &params, &basis).is_err());
    }

    #[test]
    fn propagator_initial_and_free_limits() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new_unchecked(&bath, &params, 3).unwrap();
        for b in model.propagate(0.0) {
            let id = |n: usize| DMatrix::<Complex64>::identity(n, n);
            assert!((b.pp.clone() - id(b.pp.nrows())).norm() < 1e-12);
            assert!((b.mm.clone() - id(b.mm.nrows())).norm() < 1e-12);
            assert!(b.mp.norm() < 1e-12 && b.pm.norm() < 1e-12);
        }
        let free = ExactModel::new_unchecked(&bath, &ModelParams { lambda: 0.0, ..params }, 3).unwrap();
        for b in free.propagate(17.3) {
            let n = b.pp.nrows();
            assert!((b.pp.clone() - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-12);
            assert!(b.mp.norm() < 1e-12);
        }
    }

    #[test]
    fn jc_vacuum_column() {
        let g = 0.3;
        let (bath, params) = jc(g);
        let model = ExactModel::new(&bath, &params, 1).unwrap();
        for t in [0.4, 2.0, 9.1] {
            let b = model.propagate(t);
            // sector 1: excited part |0⟩, ground part |1⟩
            assert!((b[1].pp[(0, 0)] - Complex64::new((g * t).cos(), 0.0)).norm() < 1e-12);
            assert!((b[1].mp[(0, 0)] - Complex64::new(0.0, -(g * t).sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn blocks_are_unitary() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new_unchecked(&bath, &params, 4).unwrap();
        for t in [0.5, 13.0, 200.0] {
            for b in model.propagate(t) {
                assert!(b.unitarity_defect() < 1e-10);
            }
            for eig in model.eigen() {
                let u = eig.evolution(t);
                let n = u.nrows();
                assert!((u.adjoint() * &u - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn free_propagate_matches_cached_model() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new_unchecked(&bath, &params, 3).unwrap();
        let direct = propagate(model.hamiltonian(), 3.3).unwrap();
        for (a, b) in direct.iter().zip(model.propagate(3.3)) {
            assert!((a.pp.clone() - b.pp).norm() < 1e-10);
            assert!((a.mp.clone() - b.mp).norm() < 1e-10);
        }
    }

    #[test]
    fn jc_coefficients() {
        let g = 0.25;
        let (bath, params) = jc(g);
        let model = ExactModel::new(&bath, &params, 3).unwrap();
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.173).collect();
        let c = model.map_coefficients(&times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let cg = (g * t).cos();
            assert!((c.xi[i] - cg * cg).abs() < 1e-12);
            assert!((c.zeta[i] - (g * t).sin().powi(2)).abs() < 1e-12);
            assert!((c.alpha[i] - 1.0).abs() < 1e-12);
            assert!(c.gamma[i].abs() < 1e-12);
            assert!((c.eta[i] - Complex64::new(cg, 0.0)).norm() < 1e-12);
            assert!((c.determinant[i] - cg * cg).abs() < 1e-12);
        }
    }

    #[test]
    fn no_coupling_gives_identity_map() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new(&bath, &ModelParams { lambda: 0.0, ..params }, 6).unwrap();
        let c = model.map_coefficients(&[0.0, 1.0, 50.0]).unwrap();
        for i in 0..3 {
            assert!((c.alpha[i] - 1.0).abs() < 1e-12 && (c.xi[i] - 1.0).abs() < 1e-12);
            assert!(c.gamma[i].abs() < 1e-12 && c.zeta[i].abs() < 1e-12);
            assert!((c.eta[i] - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenbasis_route_matches_explicit_traces() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new(&bath, &params, 6).unwrap();
        let times = [0.0, 0.7, 5.0, 31.0, 140.0];
        let fast = model.map_coefficients(&times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let d = model.map_coefficients_direct(t);
            assert!((fast.alpha[i] - d.alpha).abs() < 1e-12);
            assert!((fast.xi[i] - d.xi).abs() < 1e-12);
            assert!((fast.gamma[i] - d.gamma).abs() < 1e-12);
            assert!((fast.zeta[i] - d.zeta).abs() < 1e-12);
            assert!((fast.eta[i] - d.eta).norm() < 1e-12);
        }
        fast.validate().unwrap();
    }

    #[test]
    fn gibbs_weight_dp_matches_enumeration() {
        let (bath, params) = small_thermal();
        for m in 1..6 {
            let basis = SectorBasis::new(3, m).unwrap();
            let direct: f64 = (0..m)
                .flat_map(|k| basis.boson_range(k))
                .map(|i| {
                    basis.bosons()[i]
                        .iter()
                        .zip(&bath.modes)
                        .map(|(&n, md)| {
                            let x = (-params.beta * md.omega).exp();
                            (1.0 - x) * x.powi(n as i32)
                        })
                        .product::<f64>()
                })
                .sum();
            assert!((gibbs_captured_weight(&bath, params.beta, m) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn hot_bath_truncation_aborts() {
        let (bath, _) = small_thermal();
        let hot = ModelParams::new(1.0, 0.2, 1.0).unwrap();
        match ExactModel::new(&bath, &hot, 3) {
            Err(Error::Truncation { max_excitations, captured, .. }) => {
                assert_eq!(max_excitations, 3);
                assert!(captured < GIBBS_WEIGHT_MIN);
            }
            other => panic!("expected truncation abort, got {:?}", other.err()),
        }
    }

    #[test]
    fn reservoir_trace_and_trivial_cases() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new(&bath, &params, 5).unwrap();
        for rho in QubitState::probe_basis() {
            let r = model.reservoir_state(&rho, 23.0).unwrap();
            assert!((r.trace() - 1.0).norm() < 1e-10);
        }
        let free = ExactModel::new(&bath, &ModelParams { lambda: 0.0, ..params }, 5).unwrap();
        let r = free.reservoir_state(&QubitState::plus_x(), 9.0).unwrap();
        for (i, &p) in free.gibbs_weights().iter().enumerate() {
            assert!((r.density[(i, i)].re - p).abs() < 1e-12);
        }
        let (jb, jp) = jc(0.2);
        let vac = ExactModel::new(&jb, &jp, 1).unwrap();
        let r = vac.reservoir_state(&QubitState::ground(), 4.0).unwrap();
        assert!((r.density[(0, 0)] - 1.0).norm() < 1e-14);
        assert!(r.occupations[0].abs() < 1e-14);
    }

    #[test]
    fn fast_occupations_match_reservoir_state() {
        let (bath, params) = small_thermal();
        let model = ExactModel::new(&bath, &params, 5).unwrap();
        let rho = QubitState::from_components(0.7, Complex64::new(0.1, 0.2)).unwrap();
        let times = [0.0, 3.0, 40.0];
        let series = model.mode_occupations(&times, &rho);
        for (i, &t) in times.iter().enumerate() {
            let full = model.reservoir_state(&rho, t).unwrap();
            for k in 0..3 {
                assert!((series.occupations[i][k] - full.occupations[k]).abs() < 1e-12);
            }
        }
        for k in 0..3 {
            assert!((series.occupations[0][k] - series.initial[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_uses_single_excitation_sector() {
        let (bath, _) = small_thermal();
        let vac = ModelParams::new(1.0, VACUUM, 1.0).unwrap();
        let model = ExactModel::new(&bath, &vac, 4).unwrap();
        assert_eq!(model.health().max_excitations, 1);
        assert_eq!(model.health().captured_weight, 1.0);
    }
}
