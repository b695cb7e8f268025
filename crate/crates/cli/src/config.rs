//! Experiment configuration, read from a TOML document.

use std::path::{Path, PathBuf};
use std::time::Duration;

use adbo::doe::{random_rotation, SearchBox};
use adbo::objectives::{ExternalCommand, ObjectiveKind, ObjectiveSpec};
use adbo::optimizers::Algorithm;
use adbo::RngState;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

fn default_algorithms() -> Vec<String> {
    vec!["adadropout".into(), "standard-bo".into(), "dropout".into(), "coordinate-line".into()]
}
fn default_dim() -> usize {
    100
}
fn default_n_init() -> usize {
    200
}
fn default_n_max() -> usize {
    1000
}
fn default_runs() -> usize {
    30
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_alpha() -> f64 {
    0.05
}
fn default_fixed_d() -> usize {
    5
}
fn default_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// sphere, ellipsoid, rosenbrock, ackley, rastrigin, griewank, levy,
    /// fig1-demo or external.
    pub kind: String,
    /// Directory and report label; defaults to `<kind>-<dim>d`.
    #[serde(default)]
    pub name: Option<String>,
    /// Overrides the experiment dimension for this objective.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Random shift drawn inside the central 80% of the box.
    #[serde(default)]
    pub shift: bool,
    /// Random orthogonal rotation applied after the shift.
    #[serde(default)]
    pub rotate: bool,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    /// Program and arguments of an external objective.
    #[serde(default)]
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objectives: Vec<ObjectiveConfig>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    /// Algorithm every other one is compared against; defaults to the first.
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Subspace size of the dropout baseline.
    #[serde(default = "default_fixed_d")]
    pub fixed_d: usize,
    /// Starting subspace size of AdaDropout; defaults to the dimension.
    #[serde(default)]
    pub d_init: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>, HarnessError> {
        let mut out = Vec::new();
        for a in &self.algorithms {
            let alg: Algorithm = a.parse().map_err(|e: adbo::Error| HarnessError::Usage(e.to_string()))?;
            if out.contains(&alg) {
                return Err(HarnessError::Usage(format!("algorithm {alg} listed twice")));
            }
            out.push(alg);
        }
        Ok(out)
    }

    pub fn reference(&self) -> Result<Algorithm, HarnessError> {
        let algs = self.algorithms()?;
        match &self.reference {
            Some(r) => {
                let r: Algorithm = r.parse().map_err(|e: adbo::Error| HarnessError::Usage(e.to_string()))?;
                if !algs.contains(&r) {
                    return Err(HarnessError::Usage(format!("reference {r} is not among the algorithms")));
                }
                Ok(r)
            }
            None => Ok(algs[0]),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let usage = |m: String| Err(HarnessError::Usage(m));
        if self.objectives.is_empty() {
            return usage("at least one objective is required".into());
        }
        if self.algorithms()?.is_empty() {
            return usage("at least one algorithm is required".into());
        }
        self.reference()?;
        if self.runs == 0 {
            return usage("runs must be positive".into());
        }
        if self.n_init == 0 || self.n_init > self.n_max {
            return usage(format!("need 1 <= n_init <= n_max (got {} and {})", self.n_init, self.n_max));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage(format!("alpha {} outside (0, 1)", self.alpha));
        }
        let mut names = Vec::new();
        for (i, o) in self.objectives.iter().enumerate() {
            let name = o.label(self.dim);
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                return usage(format!("objective name '{name}' is not a plain directory name"));
            }
            if names.contains(&name) {
                return usage(format!("objective name '{name}' used twice"));
            }
            names.push(name);
            o.spec(self.dim, RngState::new(self.master_seed, i as u64))?;
        }
        Ok(())
    }
}

impl ObjectiveConfig {
    pub fn kind(&self) -> Result<ObjectiveKind, HarnessError> {
        self.kind.parse().map_err(|e: adbo::Error| HarnessError::Usage(e.to_string()))
    }

    pub fn dim(&self, experiment_dim: usize) -> usize {
        self.dim.unwrap_or(experiment_dim)
    }

    pub fn label(&self, experiment_dim: usize) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-{}d", self.kind, self.dim(experiment_dim)))
    }

    /// Builds the objective; random transforms are drawn from `rng`.
    pub fn spec(&self, experiment_dim: usize, rng: RngState) -> Result<ObjectiveSpec<f64>, HarnessError> {
        let kind = self.kind()?;
        let dim = self.dim(experiment_dim);
        let usage = |e: adbo::Error| HarnessError::Usage(format!("objective '{}': {e}", self.label(experiment_dim)));
        let mut spec = if kind == ObjectiveKind::External {
            if self.command.is_empty() {
                return Err(HarnessError::Usage("external objectives need a command".into()));
            }
            let (Some(lo), Some(hi)) = (self.lower, self.upper) else {
                return Err(HarnessError::Usage("external objectives need lower and upper bounds".into()));
            };
            if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
                return Err(HarnessError::Usage("timeout_secs must be positive".into()));
            }
            let cmd = ExternalCommand {
                program: self.command[0].clone(),
                args: self.command[1..].to_vec(),
                timeout: Duration::from_secs_f64(self.timeout_secs),
            };
            ObjectiveSpec::external(cmd, SearchBox::uniform(dim, lo, hi).map_err(usage)?)
        } else {
            let mut spec = ObjectiveSpec::analytic(kind, dim).map_err(usage)?;
            if self.lower.is_some() || self.upper.is_some() {
                let (lo, hi) = kind.default_interval().unwrap_or((0.0, 1.0));
                spec.bounds =
                    SearchBox::uniform(dim, self.lower.unwrap_or(lo), self.upper.unwrap_or(hi)).map_err(usage)?;
            }
            spec
        };
        if self.shift {
            let mut g = rng.substream(0).generator();
            let inner = SearchBox::new(
                (0..dim).map(|i| spec.bounds.lower()[i] + 0.1 * spec.bounds.width(i)).collect(),
                (0..dim).map(|i| spec.bounds.upper()[i] - 0.1 * spec.bounds.width(i)).collect(),
            )
            .map_err(usage)?;
            spec = spec.with_shift(inner.sample_uniform(&mut g)).map_err(usage)?;
        }
        if self.rotate {
            let q = random_rotation(dim, &mut rng.substream(1).generator());
            spec = spec.with_rotation(q).map_err(usage)?;
        }
        Ok(spec)
    }
}
