//! Run configuration: schema, defaults and validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::presets::{closed_form_by_name, find_preset};
use crate::error::{Error, Result};
use crate::expr::SpectralSymbol;
use crate::oracle::DENSE_CAP;
use crate::states::GaussianParams;
use crate::timeop::ClosedForm;
use crate::verify::{Scenario, Setup, Tolerances, MAX_STUDY_POINTS};

/// Version of the configuration schema understood by this build.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub scenarios: Vec<ScenarioConfig>,
}

/// Identity checks a scenario can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    WeakWeyl,
    Arai,
    Steps,
    WeylPq,
    Expectation,
    Convergence,
    Oracle,
    Symmetry,
    ClosedForm,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::WeakWeyl,
        Suite::Arai,
        Suite::Steps,
        Suite::WeylPq,
        Suite::Expectation,
        Suite::Convergence,
        Suite::Oracle,
        Suite::Symmetry,
        Suite::ClosedForm,
    ];

    /// Suites evaluated at the configured time points.
    pub fn needs_times(self) -> bool {
        matches!(self, Suite::WeakWeyl | Suite::Steps | Suite::Expectation | Suite::Oracle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 4096, length: 200.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Time of the weak Weyl residual; defaults to the largest `|t|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Coarsest grid; defaults to the scenario grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<GridConfig>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            levels: default_levels(),
            t: None,
            base: None,
        }
    }
}

fn default_levels() -> usize {
    3
}

fn default_bump() -> [f64; 2] {
    [1.0, 5.0]
}

fn default_gaussian() -> GaussianParams {
    GaussianParams {
        x0: 0.0,
        sigma: 5.0,
        k0: 3.0,
    }
}

fn default_symmetry_pairs() -> usize {
    50
}

/// One scenario: a symbol, a grid, a test vector and the suites to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    /// Name of a preset supplying `symbol`, `params` and `closed_form`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    /// Parameter values; they override a preset's.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_bump")]
    pub bump: [f64; 2],
    #[serde(default = "default_gaussian")]
    pub gaussian: GaussianParams,
    /// Exclusion half-width around each singular point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    /// `(s, t)` pairs for the exponentiated relation of `(P, Q)`.
    #[serde(default)]
    pub weyl_pairs: Vec<[f64; 2]>,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    /// Real functions `f` (expressions in `x`) for the commutator identity;
    /// empty selects `sin(x)`, `1/(1 + x^2)` and `3`.
    #[serde(default)]
    pub arai_functions: Vec<String>,
    /// Phases `τ` for `f(λ) = e^{-iτλ}` in the commutator identity; empty selects `[1]`.
    #[serde(default)]
    pub arai_phases: Vec<f64>,
    /// Random admissible pairs for the symmetry suite.
    #[serde(default = "default_symmetry_pairs")]
    pub symmetry_pairs: usize,
}

/// A scenario after preset resolution and validation, ready to run.
#[derive(Clone, Debug)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub suites: BTreeSet<Suite>,
    pub closed_form: Option<ClosedForm>,
    pub convergence: ConvergenceConfig,
    pub arai_functions: Vec<SpectralSymbol>,
    pub arai_phases: Vec<f64>,
    pub setup: Setup<f64>,
}

fn config_error(id: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("scenario '{id}': {msg}"))
}

fn check_finite(id: &str, what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(config_error(id, format!("{what} must be finite")))
    }
}

impl ScenarioConfig {
    /// Resolves the preset, checks every field and builds the scenario,
    /// which validates the symbol on the grid's frequency window.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let id = self.id.as_str();
        if id.is_empty() {
            return Err(Error::Config("scenario id must not be empty".into()));
        }
        let preset = match &self.preset {
            Some(name) => Some(find_preset(name).ok_or_else(|| config_error(id, format!("unknown preset '{name}'")))?),
            None => None,
        };
        let symbol = match (&self.symbol, preset) {
            (Some(_), Some(_)) => return Err(config_error(id, "give either 'symbol' or 'preset', not both")),
            (Some(s), None) => s.clone(),
            (None, Some(p)) => p.symbol.to_string(),
            (None, None) => return Err(config_error(id, "one of 'symbol' or 'preset' is required")),
        };
        let mut params = preset.map(|p| p.params()).unwrap_or_default();
        params.extend(self.params.iter().map(|(k, v)| (k.clone(), *v)));

        if self.suites.is_empty() {
            return Err(config_error(id, "'suites' must not be empty"));
        }
        let suites: BTreeSet<Suite> = self.suites.iter().copied().collect();
        check_finite(id, "times", self.times.iter().copied())?;
        check_finite(id, "weyl_pairs", self.weyl_pairs.iter().flatten().copied())?;
        check_finite(id, "arai_phases", self.arai_phases.iter().copied())?;
        if self.times.is_empty() && suites.iter().any(|s| s.needs_times()) {
            return Err(config_error(id, "'times' must not be empty for the selected suites"));
        }
        if self.weyl_pairs.is_empty() && suites.contains(&Suite::WeylPq) {
            return Err(config_error(id, "'weyl_pairs' must not be empty for the weyl_pq suite"));
        }
        if suites.contains(&Suite::Symmetry) && self.symmetry_pairs == 0 {
            return Err(config_error(id, "'symmetry_pairs' must be positive for the symmetry suite"));
        }
        for (name, tol) in self.tolerances.entries() {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(config_error(id, format!("tolerance '{name}' must be positive and finite")));
            }
        }

        let closed_form = match (&self.closed_form, preset) {
            (Some(name), _) => {
                Some(closed_form_by_name(name, &params).ok_or_else(|| config_error(id, format!("unknown closed form '{name}'")))?)
            }
            (None, Some(p)) => closed_form_by_name(p.name, &params),
            (None, None) if symbol.trim() == "x" => Some(ClosedForm::Position),
            (None, None) => None,
        };
        if suites.contains(&Suite::ClosedForm) && closed_form.is_none() {
            return Err(config_error(id, "the closed_form suite needs a 'closed_form' or a preset"));
        }

        if suites.contains(&Suite::Oracle) && self.grid.n > DENSE_CAP {
            return Err(Error::ResourceCap(format!(
                "scenario '{id}': the oracle suite needs N <= {DENSE_CAP}, got {}",
                self.grid.n
            )));
        }
        let convergence = self.convergence.unwrap_or_default();
        if suites.contains(&Suite::Convergence) {
            if convergence.levels < 2 {
                return Err(config_error(id, "a convergence study needs at least 2 levels"));
            }
            if convergence.t.is_none() && self.times.is_empty() {
                return Err(config_error(id, "the convergence suite needs 'convergence.t' or 'times'"));
            }
            check_finite(id, "convergence.t", convergence.t)?;
            let base = convergence.base.unwrap_or(self.grid);
            let finest = base
                .n
                .checked_mul(1usize.checked_shl(convergence.levels as u32 - 1).unwrap_or(usize::MAX))
                .unwrap_or(usize::MAX);
            if convergence.levels > usize::BITS as usize || finest > MAX_STUDY_POINTS {
                return Err(Error::ResourceCap(format!(
                    "scenario '{id}': convergence study would exceed N = {MAX_STUDY_POINTS}"
                )));
            }
        }

        let scenario = Scenario {
            id: self.id.clone(),
            symbol: symbol.clone(),
            params: params.clone(),
            n: self.grid.n,
            length: self.grid.length,
            bump: (self.bump[0], self.bump[1]),
            gaussian: self.gaussian,
            margin: self.margin,
        };
        let setup = scenario.build::<f64>().map_err(|e| match e {
            Error::ResourceCap(_) => e,
            other => config_error(id, other),
        })?;
        if suites.contains(&Suite::Convergence) {
            if let Some(base) = convergence.base {
                scenario
                    .clone()
                    .with_grid(base.n, base.length)
                    .build::<f64>()
                    .map_err(|e| config_error(id, format!("convergence base grid: {e}")))?;
            }
        }

        let texts = if self.arai_functions.is_empty() {
            vec!["sin(x)".to_string(), "1/(1 + x^2)".into(), "3".into()]
        } else {
            self.arai_functions.clone()
        };
        let grid = &setup.grid;
        let window = grid.frequency_window();
        let mut arai_functions = Vec::with_capacity(texts.len());
        for text in &texts {
            let f = SpectralSymbol::parse(text, &params, window, grid.dk() / 4.0)
                .map_err(|e| config_error(id, format!("arai function '{text}': {e}")))?;
            let bounded = grid
                .frequencies()
                .iter()
                .all(|&k| f.eval(k).is_finite() && f.eval_prime(k).is_finite());
            if !bounded {
                return Err(config_error(
                    id,
                    format!("arai function '{text}' and its derivative must be finite on every grid frequency"),
                ));
            }
            arai_functions.push(f);
        }
        let arai_phases = if self.arai_phases.is_empty() {
            vec![1.0]
        } else {
            self.arai_phases.clone()
        };
        Ok(ResolvedScenario {
            config: self.clone(),
            scenario,
            suites,
            closed_form,
            convergence,
            arai_functions,
            arai_phases,
            setup,
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the schema version and scenario ids, then resolves every
    /// scenario.
    pub fn resolve(&self) -> Result<Vec<ResolvedScenario>> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported configuration version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("configuration has no scenarios".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("'jobs' must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate scenario id '{}'", s.id)));
            }
        }
        self.scenarios.iter().map(ScenarioConfig::resolve).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(scenario: &str) -> String {
        format!(r#"{{"version": 1, "scenarios": [{scenario}]}}"#)
    }

    #[test]
    fn minimal_preset_scenario_resolves_with_defaults() {
        let cfg = RunConfig::from_json(&config(r#"{"id": "a", "preset": "log_abs", "times": [1], "suites": ["weak_weyl"]}"#)).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved[0].scenario.n, 4096);
        assert_eq!(resolved[0].closed_form, Some(ClosedForm::LogAbs));
        assert_eq!(resolved[0].setup.op.singular_set().points(), &[0.0]);
    }

    #[test]
    fn unknown_fields_and_suites_are_rejected() {
        assert!(RunConfig::from_json(&config(r#"{"id": "a", "symbol": "x", "suites": ["weak_weyl"], "extra": 1}"#)).is_err());
        assert!(RunConfig::from_json(&config(r#"{"id": "a", "symbol": "x", "suites": ["nope"]}"#)).is_err());
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            r#"{"id": "a", "symbol": "x", "suites": ["weak_weyl"]}"#,
            r#"{"id": "a", "symbol": "x", "suites": ["weyl_pq"]}"#,
            r#"{"id": "a", "symbol": "x", "preset": "log_abs", "times": [1], "suites": ["weak_weyl"]}"#,
            r#"{"id": "a", "times": [1], "suites": ["weak_weyl"]}"#,
            r#"{"id": "a", "symbol": "x^2", "times": [1], "suites": ["closed_form"]}"#,
            r#"{"id": "a", "symbol": "5", "times": [1], "suites": ["weak_weyl"]}"#,
            r#"{"id": "a", "symbol": "x", "times": [1], "suites": []}"#,
            r#"{"id": "a", "symbol": "x", "times": [1], "suites": ["weak_weyl"], "tolerances": {"arai": -1}}"#,
            r#"{"id": "a", "symbol": "x", "suites": ["arai"], "arai_functions": ["1/x"]}"#,
            r#"{"id": "a", "symbol": "x", "suites": ["arai"], "arai_functions": ["y"]}"#,
        ];
        for c in cases {
            let err = RunConfig::from_json(&config(c)).unwrap().resolve().unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{c}: {err}");
        }
    }

    #[test]
    fn constant_symbol_message_names_the_zero_set_condition() {
        let cfg = RunConfig::from_json(&config(r#"{"id": "c", "symbol": "5", "times": [1], "suites": ["weak_weyl"]}"#)).unwrap();
        let msg = cfg.resolve().unwrap_err().to_string();
        assert!(msg.contains("Lebesgue-null"), "{msg}");
    }

    #[test]
    fn caps_are_resource_errors() {
        let oracle = config(r#"{"id": "a", "symbol": "x", "times": [1], "suites": ["oracle"]}"#);
        assert!(matches!(RunConfig::from_json(&oracle).unwrap().resolve(), Err(Error::ResourceCap(_))));
        let study = config(r#"{"id": "a", "symbol": "x", "times": [1], "suites": ["convergence"], "convergence": {"levels": 20}}"#);
        assert!(matches!(RunConfig::from_json(&study).unwrap().resolve(), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn version_and_ids_are_checked() {
        let wrong = r#"{"version": 2, "scenarios": [{"id": "a", "symbol": "x", "times": [1], "suites": ["weak_weyl"]}]}"#;
        assert!(RunConfig::from_json(wrong).unwrap().resolve().is_err());
        let dup = r#"{"id": "a", "symbol": "x", "times": [1], "suites": ["weak_weyl"]}"#;
        let both = format!(r#"{{"version": 1, "scenarios": [{dup}, {dup}]}}"#);
        assert!(RunConfig::from_json(&both).unwrap().resolve().is_err());
    }
}
