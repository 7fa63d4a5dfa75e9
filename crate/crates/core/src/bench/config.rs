//! Experiment configuration, read from and written to TOML.
//!
//! ```toml
//! seed = 7
//! solvers = ["cs", "egd", "pfw"]
//!
//! [experiment]
//! kind = "hull"
//! dims = [10]
//! queries = 50
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::online::Strategy;
use crate::solvers::{Method, StepSizeRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Empty means the experiment's default solver list.
    #[serde(default)]
    pub solvers: Vec<Method>,
    /// Overrides each solver's default step rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rule: Option<StepSizeRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Hull(HullSettings),
    Exam(ExamSettings),
    Experts(ExpertSettings),
    Portfolio(PortfolioSettings),
    Check(CheckSettings),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Hull(_) => "hull",
            Experiment::Exam(_) => "exam",
            Experiment::Experts(_) => "experts",
            Experiment::Portfolio(_) => "portfolio",
            Experiment::Check(_) => "check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HullSettings {
    pub dims: Vec<usize>,
    pub queries: usize,
    pub per_surface: usize,
}

impl Default for HullSettings {
    fn default() -> Self {
        Self {
            dims: vec![10],
            queries: 50,
            per_surface: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExamSettings {
    pub students: usize,
    pub questions: usize,
    pub iterations: usize,
    pub trials: usize,
    pub bandwidth: f64,
    pub partition: usize,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Default for ExamSettings {
    fn default() -> Self {
        Self {
            students: 200,
            questions: 75,
            iterations: 150,
            trials: 25,
            bandwidth: 0.05,
            partition: 400,
            target_mean: 0.5,
            target_std: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertSettings {
    pub experts: Vec<usize>,
    pub rounds: usize,
    pub trials: usize,
}

impl Default for ExpertSettings {
    fn default() -> Self {
        Self {
            experts: vec![2, 10, 100],
            rounds: 1000,
            trials: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioSettings {
    /// Price-relative CSV; a synthetic market is generated when absent.
    pub data: Option<PathBuf>,
    pub strategies: Vec<Strategy>,
    /// Overrides the dataset's minimum relative.
    pub market_variability: Option<f64>,
    pub risk_free: f64,
    pub grid_resolution: usize,
    pub synthetic: SyntheticMarket,
}

impl Default for PortfolioSettings {
    fn default() -> Self {
        Self {
            data: None,
            strategies: vec![Strategy::Cs, Strategy::Egd, Strategy::Bh],
            market_variability: None,
            risk_free: 0.04,
            grid_resolution: 10_000,
            synthetic: SyntheticMarket::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticMarket {
    pub assets: usize,
    pub days: usize,
    pub variability: f64,
    pub trials: usize,
}

impl Default for SyntheticMarket {
    fn default() -> Self {
        Self {
            assets: 2,
            days: 500,
            variability: 0.5,
            trials: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSettings {
    /// Fuzzed cases per per-step check.
    pub cases: usize,
    /// Instances per instance-level check.
    pub instances: usize,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            cases: 1000,
            instances: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            seed: 0,
            solvers: Vec::new(),
            step_rule: None,
            max_iterations: None,
            tolerance: None,
            out: None,
            experiment,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The configured solvers, or the experiment's defaults.
    pub fn solvers_or_default(&self) -> Vec<Method> {
        if !self.solvers.is_empty() {
            return self.solvers.clone();
        }
        match self.experiment {
            Experiment::Hull(_) => vec![Method::CauchySimplex, Method::ExponentiatedGradient, Method::PairwiseFrankWolfe],
            Experiment::Exam(_) => vec![Method::CauchySimplex, Method::ExponentiatedGradient, Method::ProjectedGradient],
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(rule) = &self.step_rule {
            rule.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.max_iterations == Some(0) {
            return bad("max_iterations must be positive".into());
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("tolerance must be finite and nonnegative, got {t}"));
            }
        }
        match &self.experiment {
            Experiment::Hull(h) => {
                if h.dims.is_empty() || h.dims.iter().any(|&d| d < 2) {
                    return bad("hull dims must be a nonempty list of values ≥ 2".into());
                }
                if h.queries == 0 || h.per_surface == 0 {
                    return bad("hull queries and per_surface must be positive".into());
                }
            }
            Experiment::Exam(e) => {
                if e.students == 0 || e.questions == 0 || e.trials == 0 || e.iterations == 0 {
                    return bad("exam sizes, trials and iterations must be positive".into());
                }
                if !(e.bandwidth > 0.0) || e.partition == 0 || !(e.target_std > 0.0) {
                    return bad("exam bandwidth, partition and target_std must be positive".into());
                }
            }
            Experiment::Experts(x) => {
                if x.experts.is_empty() || x.experts.iter().any(|&n| n < 2) || x.rounds == 0 || x.trials == 0 {
                    return bad("experts needs counts ≥ 2, and positive rounds and trials".into());
                }
            }
            Experiment::Portfolio(p) => {
                if p.strategies.is_empty() {
                    return bad("portfolio needs at least one strategy".into());
                }
                if let Some(a) = p.market_variability {
                    if !(a > 0.0 && a <= 1.0) {
                        return bad(format!("market_variability must lie in (0, 1], got {a}"));
                    }
                }
                let s = &p.synthetic;
                if p.data.is_none() && (s.assets == 0 || s.days == 0 || s.trials == 0) {
                    return bad("synthetic market sizes and trials must be positive".into());
                }
            }
            Experiment::Check(c) => {
                if c.cases == 0 || c.instances == 0 {
                    return bad("check cases and instances must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::new(Experiment::Exam(ExamSettings::default()));
        c.seed = 9;
        c.solvers = vec![Method::CauchySimplex, Method::CauchySimplexExp];
        c.step_rule = Some(StepSizeRule::backtracking());
        c.max_iterations = Some(20);
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let c = ExperimentConfig::from_toml("[experiment]\nkind = \"hull\"\nqueries = 3\n").unwrap();
        assert_eq!(
            c.experiment,
            Experiment::Hull(HullSettings {
                queries: 3,
                ..Default::default()
            })
        );
        assert_eq!(c.solvers_or_default().len(), 3);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let err = ExperimentConfig::from_toml("solvers = [\"newton\"]\n[experiment]\nkind = \"hull\"\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("cs-exp") && msg.contains("pfw"), "{msg}");
        assert!(ExperimentConfig::from_toml("[experiment]\nkind = \"sudoku\"\n").is_err());
        assert!(ExperimentConfig::from_toml("[experiment]\nkind = \"hull\"\ndims = [1]\n").is_err());
        assert_eq!(err.exit_code(), 1);
    }
}
