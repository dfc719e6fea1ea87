// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario pipelines: bath → exact → dynmap → gkls → thermo, or the
//! vacuum survival route through `friedrichs`.

use serde::Serialize;

use crate::bath::ModelParams;
use crate::dynmap::{apply_map, populations, PopulationSeries, QubitState, SCHWARZ_TOL, STATE_TOL, UNITARITY_TOL};
use crate::error::{Error, Result};
use crate::exact::{self_convergence, ExactModel, MapCoefficients, OccupationSeries, SelfConvergence, TruncationHealth, GIBBS_WEIGHT_MIN};
use crate::friedrichs::{
    bound_state, cut_pole_identity, plateau, pole_condition, solve_survival_with, tail_fit, BoundStatePole,
    CutPoleIdentity, SurvivalAmplitude, SurvivalOptions, TailReport, FIXED_POINT_TOL, RESOLUTION_LIMIT,
};
use crate::gkls::{
    integrate_gkls, rates_from_map, stationarity_report, GklsCoefficients, GklsTrajectory, IntegratorOptions, D_MIN,
    SELF_TEST_TOL,
};
use crate::grid::TimeGrid;
use crate::output::{to_json_value, Manifest, Report, Table};
use crate::scenario::{Pipeline, Resolved, Scenario};
use crate::thermo::{
    occupation_ratios, asymptotic_populations, cbar_and_d, detailed_balance, determinant_check, population_tail,
    reservoir_return, van_hove_collapse, CollapseReport, EquilibriumReport,
};

/// Exact map with its generator and trajectories.
#[derive(Debug, Clone)]
pub struct MapRun {
    pub health: TruncationHealth,
    pub coefficients: MapCoefficients,
    pub rates: GklsCoefficients,
    pub exact_trajectory: Vec<QubitState>,
    /// Master-equation trajectory on the leading window with `D > d_floor`.
    pub gkls_trajectory: GklsTrajectory,
    pub convergence: Option<SelfConvergence>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumRun {
    pub map: MapRun,
    pub populations: PopulationSeries,
    pub occupations: OccupationSeries,
    pub report: EquilibriumReport,
    /// Populations of the `λ·ratio` run, if requested.
    pub collapse_populations: Option<(f64, PopulationSeries)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalReport {
    pub norm_residual: f64,
    pub final_probability: f64,
    /// `2πJ(Ω)` for continuous densities.
    pub golden_rule_rate: Option<f64>,
    pub bound_state: Option<BoundStatePole>,
    pub identity: Option<CutPoleIdentity>,
    /// Median `|U₊|²` over the last quarter.
    pub plateau: f64,
    pub tail: Option<TailReport>,
    pub frequency_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct SurvivalRun {
    pub amplitude: SurvivalAmplitude,
    pub report: SurvivalReport,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Map(MapRun),
    Equilibrium(Box<EquilibriumRun>),
    Survival(SurvivalRun),
}

/// Result of one scenario run, ready to be written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub config_hash: String,
    pub outcome: Outcome,
    pub tables: Vec<Table>,
    pub reports: Vec<Report>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn health(&self) -> Option<TruncationHealth> {
        match &self.outcome {
            Outcome::Map(m) => Some(m.health),
            Outcome::Equilibrium(e) => Some(e.map.health),
            Outcome::Survival(_) => None,
        }
    }

    pub fn convergence(&self) -> Option<SelfConvergence> {
        match &self.outcome {
            Outcome::Map(m) => m.convergence,
            Outcome::Equilibrium(e) => e.map.convergence,
            Outcome::Survival(_) => None,
        }
    }

    pub fn manifest(&self) -> Manifest {
        let integ = IntegratorOptions::default();
        let tolerances = serde_json::json!({
            "gibbs_weight_min": GIBBS_WEIGHT_MIN,
            "unitarity": UNITARITY_TOL,
            "schwarz": SCHWARZ_TOL,
            "state": STATE_TOL,
            "rates_d_min": D_MIN,
            "derivative_self_test": SELF_TEST_TOL,
            "generator_d_floor": self.scenario.generator.d_floor,
            "integrator_rel": integ.rel_tol,
            "integrator_abs": integ.abs_tol,
            "kernel_resolution_limit": RESOLUTION_LIMIT,
            "fixed_point": FIXED_POINT_TOL,
        });
        Manifest {
            tool: "spinboson",
            version: env!("CARGO_PKG_VERSION"),
            scenario: self.scenario.name.clone(),
            pipeline: to_json_value(&self.scenario.pipeline).as_str().unwrap_or_default().to_string(),
            config_hash: self.config_hash.clone(),
            format: self.scenario.output.format,
            truncation: to_json_value(&self.health()),
            self_convergence: to_json_value(&self.convergence()),
            tolerances,
            files: Vec::new(),
        }
    }
}

/// Runs `scenario` on a dedicated pool with `threads` workers (all cores
/// when `None`). Results do not depend on the worker count.
pub fn run_with_threads(scenario: &Scenario, threads: Option<usize>) -> Result<RunOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::solver("thread pool", e.to_string()))?;
    pool.install(|| run(scenario))
}

pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let resolved = scenario.resolve()?;
    let (outcome, tables, reports) = match scenario.pipeline {
        Pipeline::Map => {
            let m = map_run(scenario, &resolved)?;
            let tables = map_tables(&m);
            (Outcome::Map(m), tables, Vec::new())
        }
        Pipeline::Equilibrium => {
            let e = equilibrium_run(scenario, &resolved)?;
            let mut tables = map_tables(&e.map);
            tables.push(occupation_table(&e.occupations));
            let reports = vec![Report::new("equilibrium", &e.report)];
            (Outcome::Equilibrium(Box::new(e)), tables, reports)
        }
        Pipeline::Survival => {
            let s = survival_run(scenario, &resolved)?;
            let tables = survival_tables(&s.amplitude);
            let reports = vec![Report::new("survival_report", &s.report)];
            (Outcome::Survival(s), tables, reports)
        }
    };
    Ok(RunOutput {
        scenario: scenario.clone(),
        config_hash: scenario.config_hash(),
        outcome,
        tables,
        reports,
    })
}

fn exact_model(r: &Resolved, params: &ModelParams, m: usize) -> Result<ExactModel> {
    let bath = r.bath.as_ref().expect("map pipelines carry a bath");
    ExactModel::new(bath, params, m)
}

/// Leading run of valid rate points with `D > d_floor`.
pub fn generator_window(c: &MapCoefficients, g: &GklsCoefficients, d_floor: f64) -> usize {
    (0..c.len())
        .position(|i| !(g.valid[i] && c.determinant[i] > d_floor))
        .unwrap_or(c.len())
}

pub fn map_run(s: &Scenario, r: &Resolved) -> Result<MapRun> {
    let requested = s.truncation.max_excitations;
    let model = exact_model(r, &r.params, requested)?;
    let times = r.grid.times();
    let coefficients = model.map_coefficients(&times)?;
    coefficients.validate()?;
    let rates = rates_from_map(&coefficients)?;

    let exact_trajectory = (0..coefficients.len())
        .map(|i| apply_map(&coefficients.point(i), &r.initial))
        .collect::<Result<Vec<_>>>()?;
    let end = generator_window(&coefficients, &rates, s.generator.d_floor);
    let gkls_trajectory = if end >= 2 {
        integrate_gkls(&rates, &r.initial, &times[..end])?
    } else {
        GklsTrajectory {
            times: times[..end].to_vec(),
            states: vec![r.initial; end],
        }
    };

    let m = model.health().max_excitations;
    let convergence = if s.truncation.convergence_check && !r.params.is_vacuum() {
        let bath = r.bath.as_ref().expect("map pipelines carry a bath");
        let finer = ExactModel::new_unchecked(bath, &r.params, m + 1)?;
        let c2 = finer.map_coefficients(&times)?;
        Some(self_convergence(&coefficients, &c2, m, m + 1))
    } else {
        None
    };

    Ok(MapRun {
        health: model.health(),
        coefficients,
        rates,
        exact_trajectory,
        gkls_trajectory,
        convergence,
    })
}

pub fn equilibrium_run(s: &Scenario, r: &Resolved) -> Result<EquilibriumRun> {
    let map = map_run(s, r)?;
    let params = &r.params;
    let c = &map.coefficients;
    let g = &map.rates;
    let n = params.occupation_at_gap();
    let (p_plus, p_minus) = asymptotic_populations(params)?;
    let pops = populations(c, (r.initial.rho_pp(), r.initial.rho_mm()))?;
    let valid = g.valid_prefix();
    if valid < 8 {
        return Err(Error::solver_at("equilibrium", valid, "valid generator window too short"));
    }
    let db = detailed_balance(g, params)?;
    let determinant = determinant_check(c, g, params, valid)?;
    let cbar = cbar_and_d(&c.times[..valid], &g.gamma_plus[..valid], n)?;
    let ratios = occupation_ratios(c, params)?;
    let stationarity = stationarity_report(g)?;

    // the occupation pass reuses the cached eigensystem
    let model = exact_model(r, params, s.truncation.max_excitations)?;
    let occupations = model.mode_occupations(&c.times, &r.initial);
    let reservoir = reservoir_return(
        &occupations,
        &c.determinant,
        s.equilibrium.reservoir_d_floor,
        s.equilibrium.reservoir_fraction,
    )?;

    let (collapse, collapse_populations) = match s.equilibrium.collapse_lambda_ratio {
        Some(ratio) => {
            let (report, lambda_b, pops_b) = collapse_run(s, r, &pops, ratio)?;
            (Some(report), Some((lambda_b, pops_b)))
        }
        None => (None, None),
    };

    let report = EquilibriumReport {
        n,
        p_plus_asymptotic: p_plus,
        p_minus_asymptotic: p_minus,
        valid_window_end: c.times[valid - 1],
        population_tail: population_tail(&pops, params)?,
        detailed_balance_tail_median: db.tail_median_ratio,
        detailed_balance_expected: db.expected_ratio,
        detailed_balance_mismatch: db.tail_median_mismatch,
        determinant,
        cbar,
        ratios,
        stationarity,
        reservoir: Some(reservoir),
        collapse,
    };
    Ok(EquilibriumRun {
        map,
        populations: pops,
        occupations,
        report,
        collapse_populations,
    })
}

/// Second run at `λ·ratio` over the same `λ²t` window.
fn collapse_run(
    s: &Scenario,
    r: &Resolved,
    pops_a: &PopulationSeries,
    ratio: f64,
) -> Result<(CollapseReport, f64, PopulationSeries)> {
    let lambda_b = r.params.lambda * ratio;
    let params_b = ModelParams::new(r.params.omega, r.params.beta, lambda_b)?;
    // populations need no derivatives, so the same number of points on the
    // stretched horizon suffices; both runs then share their λ²t samples
    let grid_b = TimeGrid::new(r.grid.t_max / (ratio * ratio), r.grid.steps)?;
    let model_b = exact_model(r, &params_b, s.truncation.max_excitations)?;
    let c_b = model_b.map_coefficients(&grid_b.times())?;
    let pops_b = populations(&c_b, (r.initial.rho_pp(), r.initial.rho_mm()))?;
    let report = van_hove_collapse(pops_a, r.params.lambda, &pops_b, lambda_b)?;
    Ok((report, lambda_b, pops_b))
}

pub fn survival_run(s: &Scenario, r: &Resolved) -> Result<SurvivalRun> {
    let j = r.density.scaled(r.params.lambda);
    let omega = r.params.omega;
    let opts = SurvivalOptions {
        flip_table_stride: s.survival.flip_table_stride,
        ..Default::default()
    };
    let amplitude = solve_survival_with(&j, omega, &r.grid, &opts)?;
    let continuous = !j.is_discrete();
    let coupled = j.total_weight()? > 0.0;
    let bound = if pole_condition(&j)?.is_finite() {
        Some(bound_state(&j, omega)?)
    } else {
        None
    };
    let identity = if continuous && coupled {
        Some(cut_pole_identity(&j, omega)?)
    } else {
        None
    };
    let tail = if s.survival.tail_fit {
        Some(tail_fit(&amplitude, &j, omega, s.survival.tail_window.map(|[a, b]| (a, b)))?)
    } else {
        None
    };
    let report = SurvivalReport {
        norm_residual: amplitude.norm_residual(),
        final_probability: amplitude.amplitude.last().map_or(1.0, |u| u.norm_sqr()),
        golden_rule_rate: continuous.then(|| 2.0 * std::f64::consts::PI * j.value(omega)),
        bound_state: bound,
        identity,
        plateau: plateau(&amplitude),
        tail,
        frequency_nodes: amplitude.nodes.len(),
    };
    Ok(SurvivalRun { amplitude, report })
}

fn map_tables(m: &MapRun) -> Vec<Table> {
    let c = &m.coefficients;
    let mut coeff = Table::new("coefficients", &["t", "alpha", "xi", "gamma", "zeta", "re_eta", "im_eta", "d"]);
    for i in 0..c.len() {
        coeff.push(vec![
            c.times[i],
            c.alpha[i],
            c.xi[i],
            c.gamma[i],
            c.zeta[i],
            c.eta[i].re,
            c.eta[i].im,
            c.determinant[i],
        ]);
    }
    let g = &m.rates;
    let mut rates = Table::new("rates", &["t", "gamma_plus", "gamma_minus", "gamma_z", "g", "valid"]);
    for i in 0..g.len() {
        rates.push(vec![
            g.times[i],
            g.gamma_plus[i],
            g.gamma_minus[i],
            g.gamma_z[i],
            g.g[i],
            if g.valid[i] { 1.0 } else { 0.0 },
        ]);
    }
    let mut traj = Table::new(
        "trajectory",
        &[
            "t",
            "exact_pp",
            "exact_re_pm",
            "exact_im_pm",
            "exact_mm",
            "gkls_pp",
            "gkls_re_pm",
            "gkls_im_pm",
            "gkls_mm",
        ],
    );
    for (i, rho) in m.exact_trajectory.iter().enumerate() {
        let mut row = vec![c.times[i], rho.rho_pp(), rho.rho_pm().re, rho.rho_pm().im, rho.rho_mm()];
        match m.gkls_trajectory.states.get(i) {
            Some(q) => row.extend([q.rho_pp(), q.rho_pm().re, q.rho_pm().im, q.rho_mm()]),
            None => row.extend([f64::NAN; 4]),
        }
        traj.push(row);
    }
    vec![coeff, rates, traj]
}

fn occupation_table(o: &OccupationSeries) -> Table {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..o.initial.len()).map(|k| format!("n_{k}")));
    let mut t = Table {
        name: "occupations",
        columns: cols,
        rows: Vec::new(),
    };
    for (i, row) in o.occupations.iter().enumerate() {
        let mut r = vec![o.times[i]];
        r.extend(row);
        t.push(r);
    }
    t
}

fn survival_tables(s: &SurvivalAmplitude) -> Vec<Table> {
    let mut t = Table::new("survival", &["t", "re_u", "im_u", "prob", "flip_norm"]);
    for i in 0..s.len() {
        let u = s.amplitude[i];
        t.push(vec![s.times[i], u.re, u.im, u.norm_sqr(), s.flip_norm[i]]);
    }
    let mut tables = vec![t];
    if let Some(ft) = &s.flip_table {
        let mut f = Table::new("flip_amplitudes", &["t", "omega", "re_c", "im_c"]);
        for (time, row) in ft.times.iter().zip(&ft.values) {
            for (node, c) in s.nodes.iter().zip(row) {
                f.push(vec![*time, node.omega, c.re, c.im]);
            }
        }
        tables.push(f);
    }
    tables
}
