//! Experiment configuration (JSON, `"schema": 1`).

use jumpcurv::metric::TailRule;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    MmInfinity {
        lambda: f64,
        nu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<usize>,
    },
    Constant {
        lambda: f64,
        nu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<usize>,
    },
    Affine {
        birth_intercept: f64,
        birth_slope: f64,
        death_intercept: f64,
        death_slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<usize>,
    },
    /// Rate tables; the last entry of each repeats beyond the table.
    BirthDeath {
        birth: Vec<f64>,
        death: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<usize>,
    },
    /// `{0,1}^dim` flipping one uniform coordinate at rate 1/2 overall.
    Hypercube { dim: usize },
    /// Product of explicit chains, one coordinate moving at a time.
    Product { components: Vec<Vec<Vec<(usize, f64)>>> },
    /// Sparse rows `[[target, rate], …]` per state.
    Explicit { rows: Vec<Vec<(usize, f64)>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Classical,
    InvSqrt,
    Table { weights: Vec<f64>, tail: TailRule },
    Trivial,
    /// ℓ¹ sum of trivial metrics on product coordinates.
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableTail {
    /// Repeat the last table value.
    Hold,
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Identity,
    Sqrt,
    Indicator { states: Vec<usize> },
    Table { values: Vec<f64>, tail: ObservableTail },
}

impl ObservableSpec {
    pub fn eval(&self, x: usize) -> f64 {
        match self {
            ObservableSpec::Identity => x as f64,
            ObservableSpec::Sqrt => (x as f64).sqrt(),
            ObservableSpec::Indicator { states } => {
                if states.contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            ObservableSpec::Table { values, tail } => match values.get(x) {
                Some(&v) => v,
                None => match tail {
                    ObservableTail::Hold => values.last().copied().unwrap_or(0.0),
                    ObservableTail::Constant { value } => *value,
                },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundChoice {
    /// General bound from `(σ, b, V², ‖φ‖)`.
    #[default]
    General,
    /// Birth–death bound through the Assumption A constants `(K, C_A)`.
    AssumptionA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Tail mass left out of stationary laws.
    pub stationary: f64,
    /// Leaked mass allowed in semigroup rows.
    pub uniformization: f64,
    /// Duality gap accepted for transport certificates.
    pub transport: f64,
    /// Highest state scanned for curvature, jump constants and seminorms.
    pub truncation: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stationary: 1e-14,
            uniformization: 1e-12,
            transport: 1e-9,
            truncation: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
}

fn default_schema() -> u32 {
    0
}

fn default_replicas() -> u64 {
    10_000
}

fn default_alpha() -> f64 {
    0.01
}

fn default_level() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub model: ModelSpec,
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default)]
    pub start: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub y_grid: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    /// One-sided level of the tail confidence bounds is `1 − alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `τ` values for the Laplace-transform check in `simulate`.
    #[serde(default)]
    pub tau_grid: Vec<f64>,
    /// Bootstrap level of the Laplace-transform intervals.
    #[serde(default = "default_level")]
    pub laplace_level: f64,
    /// Time grid for numeric curvature of finite chains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub bound: BoundChoice,
    /// Worker threads for simulation; results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportSpec>,
    /// Output directory used when `--out` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "config schema {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, excluding `workers` and `out`,
    /// which never change results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.out = None;
        let digest = Sha256::digest(canonical.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        match self.horizon {
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(CliError::Usage(format!("horizon {t} must be positive"))),
            None => Err(CliError::Usage("config needs a horizon".into())),
        }
    }

    pub fn observable(&self) -> Result<&ObservableSpec, CliError> {
        self.observable
            .as_ref()
            .ok_or_else(|| CliError::Usage("config needs an observable".into()))
    }

    pub fn y_grid(&self) -> Result<&[f64], CliError> {
        if self.y_grid.is_empty() {
            return Err(CliError::Usage("config needs a nonempty y_grid".into()));
        }
        if self.y_grid.iter().any(|&y| !(y > 0.0)) || self.y_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("y_grid must be positive and increasing".into()));
        }
        Ok(&self.y_grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "schema": 1,
        "model": {"kind": "mm_infinity", "lambda": 1.0, "nu": 1.0},
        "metric": {"kind": "inv_sqrt"},
        "observable": {"kind": "sqrt"},
        "horizon": 10.0,
        "y_grid": [0.2, 0.4],
        "replicas": 1000,
        "seed": 7,
        "bound": "assumption_a"
    }"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.tolerances.truncation, 1000);
        assert_eq!(cfg.bound, BoundChoice::AssumptionA);
    }

    #[test]
    fn round_trip_all_kinds() {
        let text = r#"{
            "schema": 1,
            "model": {"kind": "product", "components": [[[[1, 0.5]], [[0, 0.5]]], [[[1, 1.0]], [[0, 2.0]]]]},
            "metric": {"kind": "table", "weights": [1.0, 0.5], "tail": {"rule": "power_law", "scale": 1.0, "exponent": 0.5}},
            "observable": {"kind": "table", "values": [0.0, 1.0], "tail": {"rule": "constant", "value": 2.0}},
            "t_grid": [0.1, 1.0],
            "workers": 3,
            "transport": {"mu": {"support": [0], "weights": [1.0]}, "nu": {"support": [2], "weights": [1.0]}}
        }"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg, ExperimentConfig::parse(&cfg.to_json()).unwrap());
    }

    #[test]
    fn schema_is_required() {
        let text = SAMPLE.replace("\"schema\": 1,", "");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Usage(_))));
        let text = SAMPLE.replace("\"schema\": 1", "\"schema\": 2");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = SAMPLE.replace("\"seed\": 7", "\"seed\": 7, \"sed\": 1");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = SAMPLE.replace("\"sqrt\"", "\"cube\"");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn hash_ignores_workers() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let h = cfg.hash();
        assert_eq!(h.len(), 64);
        cfg.workers = Some(8);
        assert_eq!(cfg.hash(), h);
        cfg.seed = 8;
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn observables() {
        assert_eq!(ObservableSpec::Sqrt.eval(9), 3.0);
        assert_eq!(ObservableSpec::Indicator { states: vec![2] }.eval(2), 1.0);
        let t = ObservableSpec::Table {
            values: vec![1.0, 4.0],
            tail: ObservableTail::Hold,
        };
        assert_eq!(t.eval(10), 4.0);
    }
}
