// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Declarative scenarios: the TOML schema, fail-fast validation and the
//! built-in presets. See `docs/config.md` for the schema reference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{discretize_in, DiscretizedBath, ModelParams, Scheme, SpectralDensity, VACUUM};
use crate::dynmap::QubitState;
use crate::error::{Error, Result};
use crate::exact::{effective_max_excitations, gibbs_captured_weight, SectorBasis, TruncationHealth, GIBBS_WEIGHT_MIN};
use crate::friedrichs::{kernel_resolution, RESOLUTION_LIMIT};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Exact map, generator and trajectories.
    Map,
    /// `Map` plus the thermalisation diagnostics.
    Equilibrium,
    /// Vacuum survival amplitude.
    Survival,
}

/// Inverse temperature: a positive number or the string `"vacuum"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Value(f64),
    Keyword(BetaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKeyword {
    Vacuum,
}

impl Beta {
    pub fn value(&self) -> f64 {
        match *self {
            Beta::Value(b) => b,
            Beta::Keyword(BetaKeyword::Vacuum) => VACUUM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub omega: f64,
    pub beta: Beta,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    #[serde(default = "one_usize")]
    pub modes: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

fn one_usize() -> usize {
    1
}

fn default_scheme() -> Scheme {
    Scheme::Midpoint
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        DiscretizationSection {
            modes: 1,
            scheme: Scheme::Midpoint,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "one_usize")]
    pub max_excitations: usize,
    /// Repeat the map with `M + 1` and report the largest differences.
    #[serde(default)]
    pub convergence_check: bool,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            max_excitations: 1,
            convergence_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatePreset {
    Excited,
    Ground,
    PlusX,
    PlusY,
}

/// Initial qubit state: a preset, or explicit `rho_pp` and
/// `rho_pm = [re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    #[serde(default)]
    pub preset: Option<StatePreset>,
    #[serde(default)]
    pub rho_pp: Option<f64>,
    #[serde(default)]
    pub rho_pm: Option<[f64; 2]>,
}

impl Default for InitialStateSection {
    fn default() -> Self {
        InitialStateSection {
            preset: Some(StatePreset::Excited),
            rho_pp: None,
            rho_pm: None,
        }
    }
}

impl InitialStateSection {
    pub fn resolve(&self) -> Result<QubitState> {
        match (self.preset, self.rho_pp, self.rho_pm) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::invalid(
                "initial_state",
                "give either `preset` or explicit `rho_pp`/`rho_pm`, not both",
            )),
            (Some(p), None, None) => Ok(match p {
                StatePreset::Excited => QubitState::excited(),
                StatePreset::Ground => QubitState::ground(),
                StatePreset::PlusX => QubitState::plus_x(),
                StatePreset::PlusY => QubitState::plus_y(),
            }),
            (None, Some(pp), pm) => {
                let [re, im] = pm.unwrap_or([0.0, 0.0]);
                QubitState::from_components(pp, Complex64::new(re, im)).map_err(|e| match e {
                    Error::InvalidInput { reason, .. } => Error::invalid("initial_state", reason),
                    other => other,
                })
            }
            (None, None, _) => Err(Error::invalid("initial_state.rho_pp", "missing")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    /// The master equation is integrated on the leading window with `D`
    /// above this value.
    #[serde(default = "default_d_floor")]
    pub d_floor: f64,
}

fn default_d_floor() -> f64 {
    0.01
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection { d_floor: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSection {
    /// Second run at `λ·ratio` for the `λ²t` collapse test.
    #[serde(default)]
    pub collapse_lambda_ratio: Option<f64>,
    #[serde(default = "half")]
    pub reservoir_d_floor: f64,
    #[serde(default = "tenth")]
    pub reservoir_fraction: f64,
}

fn half() -> f64 {
    0.5
}

fn tenth() -> f64 {
    0.1
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        EquilibriumSection {
            collapse_lambda_ratio: None,
            reservoir_d_floor: 0.5,
            reservoir_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SurvivalSection {
    #[serde(default)]
    pub tail_fit: bool,
    #[serde(default)]
    pub tail_window: Option<[f64; 2]>,
    #[serde(default)]
    pub flip_table_stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid("output.format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
}

/// One scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub pipeline: Pipeline,
    pub model: ModelSection,
    pub spectral_density: SpectralDensity,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    pub time: TimeSection,
    #[serde(default)]
    pub initial_state: InitialStateSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub equilibrium: EquilibriumSection,
    #[serde(default)]
    pub survival: SurvivalSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Everything a pipeline needs, checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ModelParams,
    pub density: SpectralDensity,
    pub grid: TimeGrid,
    pub initial: QubitState,
    /// `None` for the survival pipeline.
    pub bath: Option<DiscretizedBath>,
    pub health: Option<TruncationHealth>,
}

/// Outcome of [`Scenario::validate`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
    pub health: Option<TruncationHealth>,
}

impl Scenario {
    /// Parses a scenario; errors carry the offending key and line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let line_of = |e: &toml::de::Error| {
            e.span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
        };
        let de = toml::Deserializer::parse(text).map_err(|e| {
            let field = line_of(&e).map_or_else(|| "config".to_string(), |l| format!("config (line {l})"));
            Error::invalid(field, e.message().to_string())
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let mut field = if path == "." { "config".to_string() } else { path };
            if let Some(l) = line_of(&inner) {
                field = format!("{field} (line {l})");
            }
            Error::invalid(field, inner.message().to_string())
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// SHA-256 over the canonical JSON of every section that affects the
    /// numbers. `name` and `[output]` are excluded.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("scenario serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("name");
            obj.remove("output");
        }
        // serde_json maps are ordered by key, so this is canonical
        let bytes = serde_json::to_vec(&v).expect("value serialises");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every precondition without running dynamics.
    pub fn resolve(&self) -> Result<Resolved> {
        let beta = self.model.beta.value();
        let params = ModelParams::new(self.model.omega, beta, self.model.lambda)?;
        self.spectral_density
            .validate()
            .map_err(|e| rename_field(e, "spectral_density"))?;
        let grid = TimeGrid::new(self.time.t_max, self.time.steps)?;
        let initial = self.initial_state.resolve()?;
        let density = self.spectral_density;

        match self.pipeline {
            Pipeline::Survival => {
                if !params.is_vacuum() {
                    return Err(Error::invalid(
                        "model.beta",
                        "the survival pipeline needs the vacuum reservoir (beta = \"vacuum\")",
                    ));
                }
                let r = kernel_resolution(&density.scaled(params.lambda), params.omega, grid.dt())?;
                if r > RESOLUTION_LIMIT {
                    return Err(Error::invalid(
                        "time.steps",
                        format!("kernel not resolved: dt*max(|w - Omega|, sqrt(int J)) = {r:.3e} exceeds {RESOLUTION_LIMIT}"),
                    ));
                }
                if let Some(0) = self.survival.flip_table_stride {
                    return Err(Error::invalid("survival.flip_table_stride", "must be >= 1"));
                }
                if let Some([a, b]) = self.survival.tail_window {
                    if !(a > 0.0 && b > a && b <= grid.t_max) {
                        return Err(Error::invalid(
                            "survival.tail_window",
                            format!("need 0 < start < end <= t_max, got [{a}, {b}]"),
                        ));
                    }
                }
                Ok(Resolved {
                    params,
                    density,
                    grid,
                    initial,
                    bath: None,
                    health: None,
                })
            }
            Pipeline::Map | Pipeline::Equilibrium => {
                if self.pipeline == Pipeline::Equilibrium && params.is_vacuum() {
                    return Err(Error::invalid(
                        "model.beta",
                        "the equilibrium pipeline needs a finite temperature",
                    ));
                }
                if !(self.generator.d_floor > 0.0 && self.generator.d_floor < 1.0) {
                    return Err(Error::invalid("generator.d_floor", "must lie in (0, 1)"));
                }
                let eq = &self.equilibrium;
                if let Some(r) = eq.collapse_lambda_ratio {
                    if !(r > 0.0 && r < 1.0) {
                        return Err(Error::invalid("equilibrium.collapse_lambda_ratio", "must lie in (0, 1)"));
                    }
                }
                if !(eq.reservoir_d_floor > 0.0 && eq.reservoir_d_floor < 1.0) {
                    return Err(Error::invalid("equilibrium.reservoir_d_floor", "must lie in (0, 1)"));
                }
                if !(eq.reservoir_fraction > 0.0 && eq.reservoir_fraction < 1.0) {
                    return Err(Error::invalid("equilibrium.reservoir_fraction", "must lie in (0, 1)"));
                }
                let window = self.discretization.window.map(|[a, b]| (a, b));
                let bath = discretize_in(&density, self.discretization.modes, self.discretization.scheme, window)?;
                let requested = self.truncation.max_excitations;
                if requested == 0 {
                    return Err(Error::invalid("truncation.max_excitations", "must be >= 1"));
                }
                let m = effective_max_excitations(&params, requested);
                let check_m = if self.truncation.convergence_check { m + 1 } else { m };
                SectorBasis::new(bath.len(), check_m).map_err(|e| rename_field(e, "truncation.max_excitations"))?;
                let captured = if params.is_vacuum() {
                    1.0
                } else {
                    gibbs_captured_weight(&bath, params.beta, m)
                };
                let health = TruncationHealth {
                    requested_max_excitations: requested,
                    max_excitations: m,
                    captured_weight: captured,
                    required_weight: GIBBS_WEIGHT_MIN,
                };
                Ok(Resolved {
                    params,
                    density,
                    grid,
                    initial,
                    bath: Some(bath),
                    health: Some(health),
                })
            }
        }
    }

    /// Full precondition check. Hard errors are returned as `Err`; an
    /// unhealthy truncation is reported as a warning.
    pub fn validate(&self) -> Result<ValidationReport> {
        let r = self.resolve()?;
        let mut report = ValidationReport {
            warnings: Vec::new(),
            health: r.health,
        };
        if let Some(h) = r.health {
            if !h.is_healthy() {
                report.warnings.push(format!(
                    "truncation: Gibbs weight captured with max_excitations = {} is {:.6} (< {}); the run would abort",
                    h.max_excitations, h.captured_weight, h.required_weight
                ));
            }
        }
        Ok(report)
    }
}

fn rename_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::InvalidInput { field, reason } if !field.starts_with(prefix) => Error::InvalidInput {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

/// A named built-in scenario.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

impl Preset {
    pub fn scenario(&self) -> Scenario {
        Scenario::from_toml_str(self.toml).expect("built-in presets parse")
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "thermal-ohmic",
        summary: "weak Ohmic bath at beta*Omega = ln 2: map validity, generator, thermalisation diagnostics",
        toml: include_str!("../presets/thermal-ohmic.toml"),
    },
    Preset {
        name: "jc-vacuum",
        summary: "single resonant mode in the vacuum: exact map and generator",
        toml: include_str!("../presets/jc-vacuum.toml"),
    },
    Preset {
        name: "jc-survival",
        summary: "single resonant mode in the vacuum: Volterra survival amplitude",
        toml: include_str!("../presets/jc-survival.toml"),
    },
    Preset {
        name: "flat-band-survival",
        summary: "weakly coupled flat band: golden-rule decay, norm conservation, cut weight",
        toml: include_str!("../presets/flat-band-survival.toml"),
    },
    Preset {
        name: "strong-ohmic-survival",
        summary: "Ohmic bath above the bound-state threshold: pole, residue, plateau",
        toml: include_str!("../presets/strong-ohmic-survival.toml"),
    },
    Preset {
        name: "ohmic-tail-survival",
        summary: "weak Ohmic bath followed into the 1/t^2 tail",
        toml: include_str!("../presets/ohmic-tail-survival.toml"),
    },
    Preset {
        name: "uncoupled",
        summary: "lambda = 0: identity map",
        toml: include_str!("../presets/uncoupled.toml"),
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
