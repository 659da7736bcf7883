//! JSON run configuration: task graph, treatment, parameters, rounds, seed.
//!
//! Every parameter is optional in the file and falls back to the documented
//! default; the manifest written next to a run's outputs embeds the fully
//! resolved configuration, which is itself a valid config, so a run can be
//! reproduced directly from its manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TaskGraph;
use crate::sim::{Params, Treatment};

/// A complete run description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tasks: TaskGraph,
    pub treatment: Treatment,
    #[serde(default)]
    pub params: ParamsConfig,
    pub rounds: u64,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json_str(json: &str) -> Result<Self> {
        // A manifest embeds the config under "config"; accept either shape.
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::config(e.to_string()))?;
        let config_value = match value.get("config") {
            Some(inner) if value.get("schema_version").is_some() => inner.clone(),
            _ => value,
        };
        let cfg: RunConfig =
            serde_json::from_value(config_value).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds must be >= 1".to_string()));
        }
        if self.treatment.bonus_coefficient < 0.0 {
            return Err(Error::config(
                "treatment.bonus_coefficient must be >= 0".to_string(),
            ));
        }
        self.params.validate()?;
        Ok(())
    }

    /// Runtime parameters with defaults applied.
    pub fn resolved_params(&self) -> Params<f64> {
        self.params.resolve()
    }

    /// The same config with every parameter made explicit.
    pub fn resolved(&self) -> RunConfig {
        RunConfig {
            tasks: self.tasks.clone(),
            treatment: self.treatment,
            params: ParamsConfig::full(&self.params.resolve()),
            rounds: self.rounds,
            seed: self.seed,
        }
    }
}

/// Parameter overrides; anything absent uses the default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ema_time_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reweight_theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmoid_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration_hysteresis: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rewarded_collections: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forget_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_effort_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collectable_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rollouts_per_round: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discovery_on_estimates: Option<bool>,
}

impl ParamsConfig {
    pub fn resolve(&self) -> Params<f64> {
        let d = Params::<f64>::default();
        Params {
            ema_time_scale: self.ema_time_scale.unwrap_or(d.ema_time_scale),
            reweight_theta: self.reweight_theta.unwrap_or(d.reweight_theta),
            sigmoid_slope: self.sigmoid_slope.unwrap_or(d.sigmoid_slope),
            exploration_threshold: self
                .exploration_threshold
                .unwrap_or(d.exploration_threshold),
            exploration_hysteresis: self
                .exploration_hysteresis
                .unwrap_or(d.exploration_hysteresis),
            max_rewarded_collections: self.max_rewarded_collections,
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            forget_rate: self.forget_rate.unwrap_or(d.forget_rate),
            group_effort_ref: self.group_effort_ref.unwrap_or(d.group_effort_ref),
            collectable_threshold: self
                .collectable_threshold
                .unwrap_or(d.collectable_threshold),
            rollouts_per_round: self.rollouts_per_round.unwrap_or(d.rollouts_per_round),
            discovery_on_estimates: self
                .discovery_on_estimates
                .unwrap_or(d.discovery_on_estimates),
        }
    }

    /// Explicit config mirroring an already-resolved parameter set.
    pub fn full(p: &Params<f64>) -> Self {
        Self {
            ema_time_scale: Some(p.ema_time_scale),
            reweight_theta: Some(p.reweight_theta),
            sigmoid_slope: Some(p.sigmoid_slope),
            exploration_threshold: Some(p.exploration_threshold),
            exploration_hysteresis: Some(p.exploration_hysteresis),
            max_rewarded_collections: p.max_rewarded_collections,
            learning_rate: Some(p.learning_rate),
            forget_rate: Some(p.forget_rate),
            group_effort_ref: Some(p.group_effort_ref),
            collectable_threshold: Some(p.collectable_threshold),
            rollouts_per_round: Some(p.rollouts_per_round),
            discovery_on_estimates: Some(p.discovery_on_estimates),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, value: Option<f64>, lo: f64, hi: f64, lo_open: bool| {
            if let Some(v) = value {
                let ok = if lo_open { v > lo } else { v >= lo };
                if !ok || v > hi || !v.is_finite() {
                    return Err(Error::config(format!(
                        "params.{name} = {v} outside the valid range"
                    )));
                }
            }
            Ok(())
        };
        check("ema_time_scale", self.ema_time_scale, 0.0, f64::MAX, true)?;
        check("reweight_theta", self.reweight_theta, 0.0, 0.5, true)?;
        if self.reweight_theta == Some(0.5) {
            return Err(Error::config("params.reweight_theta must be < 0.5"));
        }
        check("sigmoid_slope", self.sigmoid_slope, 0.0, f64::MAX, true)?;
        check(
            "exploration_threshold",
            self.exploration_threshold,
            0.0,
            1.0,
            true,
        )?;
        check(
            "exploration_hysteresis",
            self.exploration_hysteresis,
            0.0,
            1.0,
            false,
        )?;
        check("learning_rate", self.learning_rate, 0.0, f64::MAX, false)?;
        check("forget_rate", self.forget_rate, 0.0, f64::MAX, false)?;
        check(
            "group_effort_ref",
            self.group_effort_ref,
            0.0,
            f64::MAX,
            true,
        )?;
        check(
            "collectable_threshold",
            self.collectable_threshold,
            0.0,
            1.0,
            false,
        )?;
        if self.rollouts_per_round == Some(0) {
            return Err(Error::config(
                "params.rollouts_per_round must be >= 1",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::BonusMode;
    use crate::sim::Sampler;

    fn minimal_json() -> String {
        r#"{
            "tasks": [
                {"id": 0, "prerequisites": [], "group": "a"},
                {"id": 1, "prerequisites": [0], "group": "a"}
            ],
            "treatment": {"sampler": "uniform", "bonus_mode": "off"},
            "rounds": 10,
            "seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::from_json_str(&minimal_json()).unwrap();
        assert_eq!(cfg.treatment.sampler, Sampler::Uniform);
        assert_eq!(cfg.treatment.bonus_mode, BonusMode::Off);
        let params = cfg.resolved_params();
        assert_eq!(params.ema_time_scale, 1250.0);
        assert_eq!(params.rollouts_per_round, 256);
        assert_eq!(params.learning_rate, 0.15);
    }

    #[test]
    fn missing_sampler_names_the_field() {
        let json = minimal_json().replace(r#""sampler": "uniform", "#, "");
        let err = RunConfig::from_json_str(&json).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("sampler"), "got: {err}");
    }

    #[test]
    fn rejects_unknown_param() {
        let json = minimal_json().replace(
            r#""rounds": 10"#,
            r#""params": {"learning_speed": 1.0}, "rounds": 10"#,
        );
        let err = RunConfig::from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("learning_speed"), "got: {err}");
    }

    #[test]
    fn rejects_zero_rounds() {
        let json = minimal_json().replace(r#""rounds": 10"#, r#""rounds": 0"#);
        assert!(RunConfig::from_json_str(&json).is_err());
    }

    #[test]
    fn rejects_out_of_range_param() {
        let json = minimal_json().replace(
            r#""rounds": 10"#,
            r#""params": {"reweight_theta": 0.7}, "rounds": 10"#,
        );
        let err = RunConfig::from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("reweight_theta"));
    }

    #[test]
    fn resolved_round_trips_and_is_explicit() {
        let cfg = RunConfig::from_json_str(&minimal_json()).unwrap();
        let resolved = cfg.resolved();
        assert_eq!(resolved.params.ema_time_scale, Some(1250.0));
        let json = serde_json::to_string_pretty(&resolved).unwrap();
        let back = RunConfig::from_json_str(&json).unwrap();
        assert_eq!(back, resolved);
        assert_eq!(back.resolved_params(), cfg.resolved_params());
    }

    #[test]
    fn manifest_shape_is_accepted() {
        let cfg = RunConfig::from_json_str(&minimal_json()).unwrap();
        let manifest = serde_json::json!({
            "schema_version": 1,
            "name": "x",
            "config": cfg.resolved(),
        });
        let back = RunConfig::from_json_str(&manifest.to_string()).unwrap();
        assert_eq!(back, cfg.resolved());
    }

    #[test]
    fn cyclic_graph_is_a_config_error() {
        let json = minimal_json().replace(
            r#"{"id": 0, "prerequisites": [], "group": "a"}"#,
            r#"{"id": 0, "prerequisites": [1], "group": "a"}"#,
        );
        let err = RunConfig::from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("cycle"), "got: {err}");
    }
}
