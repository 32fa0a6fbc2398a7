//! Sweep configuration: a single JSON document holding the base network
//! parameters, the swept axes, trial counts and model-mode flags.

use serde::{Deserialize, Serialize};

use ghznet::montecarlo::FusionFailureRule;
use ghznet::repeater::{SubsetRule, TeleportFactorMode};
use ghznet::NetworkParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

/// One swept parameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    /// A `NetworkParams` field name.
    pub field: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default = "default_scale")]
    pub scale: AxisScale,
}

fn default_scale() -> AxisScale {
    AxisScale::Linear
}

impl AxisSpec {
    pub fn linear(field: &str, min: f64, max: f64, steps: usize) -> Self {
        AxisSpec {
            field: field.to_string(),
            min,
            max,
            steps,
            scale: AxisScale::Linear,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.steps < 2 {
            return Err(CliError::Config(format!(
                "axis `{}`: steps must be >= 2, got {}",
                self.field, self.steps
            )));
        }
        if self.min.is_nan() || self.max.is_nan() || self.min >= self.max {
            return Err(CliError::Config(format!(
                "axis `{}`: min must be < max, got [{}, {}]",
                self.field, self.min, self.max
            )));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(CliError::Config(format!(
                "axis `{}`: log scale needs min > 0",
                self.field
            )));
        }
        apply_axis_value(&NetworkParams::default(), &self.field, self.min.max(1e-9))
            .map(|_| ())
            .map_err(|_| CliError::Config(format!("unknown axis field `{}`", self.field)))
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.scale {
                    AxisScale::Linear => self.min + t * (self.max - self.min),
                    AxisScale::Log => {
                        (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                    }
                }
            })
            .collect()
    }
}

/// Returns a copy of `params` with the named field set to `value`.
/// Integer-valued fields round to the nearest integer.
pub fn apply_axis_value(
    params: &NetworkParams,
    field: &str,
    value: f64,
) -> Result<NetworkParams, CliError> {
    let mut p = params.clone();
    match field {
        "n_users" => p.n_users = value.round() as usize,
        "l0_in_km" => p.l0_in_km = value,
        "l_att_km" => p.l_att_km = value,
        "eta_c" => p.eta_c = value,
        "q_bsm" => p.q_bsm = value,
        "p_bsm" => p.p_bsm = value,
        "p_mem" => p.p_mem = value,
        "delta_t_s" => p.delta_t_s = value,
        "nesting_level" => p.nesting_level = value.round() as u32,
        "parallel_attempts" => p.parallel_attempts = value.round() as u32,
        "f_src" => p.f_src = value,
        "q_ghz_meas" => p.q_ghz_meas = value,
        other => {
            return Err(CliError::Config(format!("unknown axis field `{other}`")));
        }
    }
    Ok(p)
}

/// Model-mode switches exposed to sweeps and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeFlags {
    /// Factor inside the recursive readiness CDF.
    pub teleport_factor: TeleportFactorMode,
    /// Subset condition in the fusion-fidelity mixed terms.
    pub subset_rule: SubsetRule,
    /// What a failed fusion measurement does in the simulator.
    pub fusion_failure: FusionFailureRule,
}

/// The whole sweep configuration, loadable from one JSON document. Every
/// field has a default; the output path comes from the command line.
/// Unset trial counts resolve to 100k for sweeps and 1M for validation
/// reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub params: NetworkParams,
    /// Swept axes; subcommands that need axes fall back to their documented
    /// defaults when this is empty.
    pub axes: Vec<AxisSpec>,
    /// Simulation trials for MC-backed outputs; leave unset for the
    /// per-command default.
    pub trials: Option<u64>,
    pub seed: u64,
    pub modes: ModeFlags,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            params: NetworkParams::default(),
            axes: Vec::new(),
            trials: None,
            seed: 0,
            modes: ModeFlags::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(format!("bad params: {e}")))?;
        if self.trials == Some(0) {
            return Err(CliError::Config("trials must be >= 1".into()));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        Ok(())
    }

    /// Trial count for sweep cells.
    pub fn sweep_trials(&self) -> u64 {
        self.trials.unwrap_or(100_000)
    }

    /// Trial count for validation reports.
    pub fn validation_trials(&self) -> u64 {
        self.trials.unwrap_or(1_000_000)
    }

    /// Canonical one-line echo of the configuration with the trial count
    /// resolved, embedded in every output file so results are
    /// self-describing.
    pub fn echo_with_trials(&self, trials: u64) -> String {
        let resolved = SweepConfig {
            trials: Some(trials),
            ..self.clone()
        };
        serde_json::to_string(&resolved).expect("config serializes")
    }
}
