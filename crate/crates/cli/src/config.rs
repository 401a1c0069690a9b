//! Run configuration files and command-line overrides.

use std::path::{Path, PathBuf};

use fairlag::data::SchemaConfig;
use fairlag::fairloss::ConstraintKind;
use fairlag::lagrange::{Objective, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_folds() -> usize {
    5
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One archivable run. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Path to a schema JSON file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    /// Built-in schema name (`adult` or `generic`), used when `schema` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub train: TrainConfig,
    /// Left out of report echoes so reruns into another directory compare equal.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Batch size for soft audit metrics; defaults to the training batch size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_batch_size: Option<usize>,
    /// Train with λ pinned at zero.
    #[serde(default)]
    pub lambda_zero: bool,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, schema: SchemaSource, train: TrainConfig) -> Self {
        let (schema, preset) = match schema {
            SchemaSource::File(p) => (Some(p), None),
            SchemaSource::Preset(n) => (None, Some(n)),
        };
        Self {
            dataset: dataset.into(),
            schema,
            preset,
            train,
            out: default_out(),
            sweep: None,
            folds: default_folds(),
            eval_batch_size: None,
            lambda_zero: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.dataset);
        if let Some(s) = cfg.schema.as_mut() {
            resolve(s);
        }
        resolve(&mut cfg.out);
        Ok(cfg)
    }

    pub fn schema_config(&self) -> Result<SchemaConfig> {
        match (&self.schema, &self.preset) {
            (Some(p), _) => Ok(SchemaConfig::from_json(&std::fs::read_to_string(p)?)?),
            (None, Some(name)) => SchemaConfig::preset(name)
                .ok_or_else(|| CliError::Config(format!("unknown schema preset {name:?}"))),
            (None, None) => Err(CliError::Config("config needs `schema` or `preset`".into())),
        }
    }

    /// Training settings with the λ = 0 switch folded in.
    pub fn effective_train(&self) -> TrainConfig {
        let mut t = self.train.clone();
        if self.lambda_zero {
            t.freeze_lambda = true;
            t.lambda_init = 0.0;
        }
        t
    }

    pub fn eval_batch_size(&self) -> usize {
        self.eval_batch_size.unwrap_or(self.train.batch_size)
    }

    pub fn validate(&self) -> Result<()> {
        self.effective_train().validate()?;
        if self.folds == 0 {
            return Err(CliError::Config("folds must be >= 1".into()));
        }
        if self.eval_batch_size() < 2 {
            return Err(CliError::Config("eval batch size must be >= 2".into()));
        }
        if let Some(values) = &self.sweep {
            let kind = self
                .train
                .constraint
                .ok_or_else(|| CliError::Config("a sweep needs a constraint".into()))?;
            for &v in values {
                kind.with_tolerance(v).validate()?;
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.train.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if o.lambda_zero {
            self.lambda_zero = true;
        }
        if let Some(obj) = o.objective {
            self.train.objective = obj;
        }
        if o.epsilon.is_some() && o.p_percent.is_some() {
            return Err(CliError::Usage(
                "give either --epsilon or --p-percent".into(),
            ));
        }
        let current = self.train.constraint;
        let kind = match (o.constraint, current) {
            (Some(name), cur) => {
                let fresh = name.with_default_tolerance();
                // keep a configured tolerance when the kind is unchanged
                Some(match cur {
                    Some(c) if c.name() == fresh.name() => c,
                    _ => fresh,
                })
            }
            (None, cur) => cur,
        };
        let kind = match (kind, o.epsilon, o.p_percent) {
            (Some(k @ ConstraintKind::Di { .. }), None, Some(p)) => Some(k.with_tolerance(p)),
            (Some(ConstraintKind::Di { .. }), Some(_), None) => {
                return Err(CliError::Usage("disparate impact takes --p-percent".into()))
            }
            (Some(_), None, Some(_)) => {
                return Err(CliError::Usage("--p-percent applies only to di".into()))
            }
            (Some(k), Some(e), None) => Some(k.with_tolerance(e)),
            (None, Some(_), _) | (None, _, Some(_)) => {
                return Err(CliError::Usage(
                    "tolerance given without a constraint".into(),
                ))
            }
            (k, _, _) => k,
        };
        self.train.constraint = kind;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaSource {
    File(PathBuf),
    Preset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConstraintName {
    Dp,
    EoSum,
    EoMax,
    Di,
    DpMulti,
}

impl ConstraintName {
    /// ε = 0.05, or the 80% rule for disparate impact.
    pub fn with_default_tolerance(self) -> ConstraintKind {
        match self {
            ConstraintName::Dp => ConstraintKind::Dp { epsilon: 0.05 },
            ConstraintName::EoSum => ConstraintKind::EoSum { epsilon: 0.05 },
            ConstraintName::EoMax => ConstraintKind::EoMax { epsilon: 0.05 },
            ConstraintName::Di => ConstraintKind::Di { p_percent: 80.0 },
            ConstraintName::DpMulti => ConstraintKind::DpMulti { epsilon: 0.05 },
        }
    }
}

/// Flag values that take precedence over config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub lambda_zero: bool,
    pub constraint: Option<ConstraintName>,
    pub epsilon: Option<f64>,
    pub p_percent: Option<f64>,
    pub objective: Option<Objective>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig::new(
            "d.csv",
            SchemaSource::Preset("generic".into()),
            TrainConfig::default(),
        )
    }

    #[test]
    fn constraint_flag_uses_default_tolerance() {
        let mut c = base();
        c.apply(&Overrides {
            constraint: Some(ConstraintName::Di),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(
            c.train.constraint,
            Some(ConstraintKind::Di { p_percent: 80.0 })
        );
    }

    #[test]
    fn epsilon_overrides_config_tolerance() {
        let mut c = base();
        c.train.constraint = Some(ConstraintKind::Dp { epsilon: 0.1 });
        c.apply(&Overrides {
            epsilon: Some(0.02),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(
            c.train.constraint,
            Some(ConstraintKind::Dp { epsilon: 0.02 })
        );
    }

    #[test]
    fn mismatched_tolerance_flag_is_usage_error() {
        let mut c = base();
        let r = c.apply(&Overrides {
            constraint: Some(ConstraintName::Dp),
            p_percent: Some(80.0),
            ..Default::default()
        });
        assert!(matches!(r, Err(CliError::Usage(_))));
    }

    #[test]
    fn lambda_zero_freezes_multiplier() {
        let mut c = base();
        c.train.lambda_init = 2.0;
        c.lambda_zero = true;
        let t = c.effective_train();
        assert!(t.freeze_lambda);
        assert_eq!(t.lambda_init, 0.0);
    }

    #[test]
    fn sweep_values_are_checked() {
        let mut c = base();
        c.train.constraint = Some(ConstraintKind::Di { p_percent: 80.0 });
        c.sweep = Some(vec![50.0, 120.0]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_ignores_out() {
        let c = base();
        let s = serde_json::to_string(&c).unwrap();
        assert!(!s.contains("\"out\""));
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
