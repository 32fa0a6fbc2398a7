//! Parameter sweeps: parent fidelity planes, parent rate scans, m=1 vs m=2
//! decision boundaries, and distance curves. All sweeps emit deterministic
//! CSV: fixed column order, shortest round-trip float formatting, LF line
//! endings, and a config echo in the header comments.
//!
//! Fidelity metrics are evaluated in closed form. Rate metrics for the
//! nested repeater come from the seeded simulator (the trusted reference;
//! the transcribed recursion rides along in a separate column), with one
//! derived seed per grid cell so results do not depend on worker count.

use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use ghznet::montecarlo::{derive_seed, simulate_repeater_with};
use ghznet::parent;
use ghznet::repeater::{
    repeater_fidelity_with, total_distribution_time_with, DEFAULT_TAIL_TOL,
};
use ghznet::NetworkParams;

use crate::config::{apply_axis_value, AxisSpec, SweepConfig};
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rate,
    Fidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Direct,
    Repeater,
}

/// m=1 vs m=2 comparison over a (noise, distance) plane.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionGrid {
    pub metric: Metric,
    pub noise_axis: AxisSpec,
    pub distance_axis: AxisSpec,
    /// Row-major: one row per noise value, one column per distance.
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub winner: Vec<Winner>,
    /// Per noise row: first distance at which the repeater wins.
    pub boundary_km: Vec<Option<f64>>,
}

impl DecisionGrid {
    pub fn index(&self, noise_idx: usize, dist_idx: usize) -> usize {
        noise_idx * self.distance_axis.steps + dist_idx
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn header(out: &mut String, subject: &str, config: &SweepConfig, trials: u64) {
    out.push_str(&format!("# ghznet v{TOOL_VERSION} {subject}\n"));
    out.push_str(&format!("# config {}\n", config.echo_with_trials(trials)));
    out.push_str("# parameter defaults are illustrative conventions, not measured hardware values\n");
}

fn cell_params(
    base: &NetworkParams,
    axes: &[(&AxisSpec, f64)],
) -> Result<NetworkParams, CliError> {
    let mut p = base.clone();
    for (axis, value) in axes {
        p = apply_axis_value(&p, &axis.field, *value)?;
    }
    p.validate()
        .map_err(|e| CliError::Config(format!("swept cell invalid: {e}")))?;
    Ok(p)
}

fn two_axes<'a>(
    config: &'a SweepConfig,
    defaults: (AxisSpec, AxisSpec),
    stash: &'a mut Vec<AxisSpec>,
) -> Result<(&'a AxisSpec, &'a AxisSpec), CliError> {
    match config.axes.len() {
        0 => {
            stash.push(defaults.0);
            stash.push(defaults.1);
            Ok((&stash[0], &stash[1]))
        }
        2 => Ok((&config.axes[0], &config.axes[1])),
        n => Err(CliError::Config(format!(
            "this sweep needs exactly two axes, got {n}"
        ))),
    }
}

/// Source-based vs measurement-based parent fidelity over a two-axis plane
/// (by default `p_bsm` against `f_src`).
pub fn run_parent_fidelity_sweep(config: &SweepConfig) -> Result<String, CliError> {
    config.validate()?;
    let mut stash = Vec::new();
    let (a0, a1) = two_axes(
        config,
        (
            AxisSpec::linear("p_bsm", 0.8, 1.0, 21),
            AxisSpec::linear("f_src", 0.6, 1.0, 21),
        ),
        &mut stash,
    )?;

    let v0 = a0.values();
    let v1 = a1.values();
    let cells: Vec<(usize, usize)> = (0..v0.len())
        .flat_map(|i| (0..v1.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<(f64, f64, f64, f64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = cell_params(&config.params, &[(a0, v0[i]), (a1, v1[j])])?;
            let src = parent::source_based_fidelity(&p).map_err(CliError::model)?;
            let meas = parent::measurement_based_fidelity(&p).map_err(CliError::model)?;
            Ok((v0[i], v1[j], src, meas))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = String::new();
    header(&mut out, "parent-fidelity", config, config.sweep_trials());
    out.push_str(&format!(
        "{},{},fid_source,fid_measurement,difference\n",
        a0.field, a1.field
    ));
    for (x0, x1, src, meas) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(x0),
            fmt(x1),
            fmt(src),
            fmt(meas),
            fmt(src - meas)
        ));
    }
    Ok(out)
}

/// Parent link-stage rate scan over parallel attempts: expected rounds, the
/// gap to the single-round ideal, and the memoryless comparison point.
pub fn run_parent_rate_sweep(config: &SweepConfig) -> Result<String, CliError> {
    config.validate()?;
    let default_axis = AxisSpec::linear("parallel_attempts", 1.0, 30.0, 30);
    let axis = match config.axes.len() {
        0 => &default_axis,
        1 => &config.axes[0],
        n => {
            return Err(CliError::Config(format!(
                "parent-rate sweeps one axis, got {n}"
            )))
        }
    };

    let values = axis.values();
    let rows: Vec<(f64, f64, f64, f64, f64)> = values
        .par_iter()
        .map(|&v| {
            let p = cell_params(&config.params, &[(axis, v)])?;
            let q_eff = p.q_eff().map_err(CliError::model)?;
            let rounds =
                parent::expected_rounds_all_links(p.n_users, q_eff).map_err(CliError::model)?;
            let gap = parent::rounds_gap_to_ideal(p.n_users, q_eff).map_err(CliError::model)?;
            let memoryless = parent::measurement_based_expected_rounds(p.n_users, q_eff)
                .map_err(CliError::model)?;
            Ok((v, q_eff, rounds, gap, memoryless))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = String::new();
    header(&mut out, "parent-rate", config, config.sweep_trials());
    out.push_str(&format!(
        "{},q_eff,expected_rounds,gap_to_ideal,rounds_measurement_based\n",
        axis.field
    ));
    for (v, q_eff, rounds, gap, memoryless) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(v),
            fmt(q_eff),
            fmt(rounds),
            fmt(gap),
            fmt(memoryless)
        ));
    }
    Ok(out)
}

struct CellValues {
    m1: f64,
    m2: f64,
    m2_recursion: f64,
}

fn evaluate_cell(
    config: &SweepConfig,
    params: &NetworkParams,
    metric: Metric,
    trials: u64,
    cell_seed: u64,
) -> Result<CellValues, CliError> {
    let direct = NetworkParams {
        nesting_level: 1,
        ..params.clone()
    };
    let nested = NetworkParams {
        nesting_level: 2,
        ..params.clone()
    };
    match metric {
        Metric::Fidelity => {
            let m1 = repeater_fidelity_with(
                &direct,
                config.modes.subset_rule,
                config.modes.teleport_factor,
                DEFAULT_TAIL_TOL,
            )
            .map_err(CliError::model)?;
            let m2 = repeater_fidelity_with(
                &nested,
                config.modes.subset_rule,
                config.modes.teleport_factor,
                DEFAULT_TAIL_TOL,
            )
            .map_err(CliError::model)?;
            Ok(CellValues {
                m1,
                m2,
                m2_recursion: m2,
            })
        }
        Metric::Rate => {
            let m1 = total_distribution_time_with(
                &direct,
                DEFAULT_TAIL_TOL,
                config.modes.teleport_factor,
            )
            .map_err(CliError::model)?
            .rate_hz;
            let sim = simulate_repeater_with(
                &nested,
                2,
                trials,
                cell_seed,
                config.modes.fusion_failure,
            )
            .map_err(CliError::model)?;
            let m2 = 1.0 / (sim.mean * params.delta_t_s);
            let m2_recursion = total_distribution_time_with(
                &nested,
                DEFAULT_TAIL_TOL,
                config.modes.teleport_factor,
            )
            .map_err(CliError::model)?
            .rate_hz;
            Ok(CellValues {
                m1,
                m2,
                m2_recursion,
            })
        }
    }
}

/// Where does the two-level repeater beat direct distribution? Cells are
/// labeled per (noise, distance) point; the boundary per noise row is the
/// first distance at which the repeater wins.
pub fn run_decision_boundary(
    config: &SweepConfig,
    metric: Metric,
) -> Result<(DecisionGrid, String), CliError> {
    config.validate()?;
    let defaults = match metric {
        Metric::Rate => (
            AxisSpec::linear("q_bsm", 0.8, 1.0, 6),
            AxisSpec::linear("l0_in_km", 5.0, 150.0, 30),
        ),
        Metric::Fidelity => (
            AxisSpec::linear("p_bsm", 0.9, 1.0, 6),
            AxisSpec::linear("l0_in_km", 5.0, 150.0, 30),
        ),
    };
    let mut stash = Vec::new();
    let (noise_axis, distance_axis) = two_axes(config, defaults, &mut stash)?;
    if distance_axis.field != "l0_in_km" {
        return Err(CliError::Config(
            "decision boundaries sweep l0_in_km on the second axis".into(),
        ));
    }

    let trials = config.sweep_trials();
    let noise = noise_axis.values();
    let dist = distance_axis.values();
    let cells: Vec<usize> = (0..noise.len() * dist.len()).collect();
    let values: Vec<CellValues> = cells
        .par_iter()
        .map(|&idx| {
            let (i, j) = (idx / dist.len(), idx % dist.len());
            let p = cell_params(
                &config.params,
                &[(noise_axis, noise[i]), (distance_axis, dist[j])],
            )?;
            evaluate_cell(config, &p, metric, trials, derive_seed(config.seed, idx as u64))
        })
        .collect::<Result<_, CliError>>()?;

    let m1: Vec<f64> = values.iter().map(|v| v.m1).collect();
    let m2: Vec<f64> = values.iter().map(|v| v.m2).collect();
    let winner: Vec<Winner> = values
        .iter()
        .map(|v| {
            if v.m2 > v.m1 {
                Winner::Repeater
            } else {
                Winner::Direct
            }
        })
        .collect();
    let boundary_km: Vec<Option<f64>> = (0..noise.len())
        .map(|i| {
            (0..dist.len())
                .find(|&j| winner[i * dist.len() + j] == Winner::Repeater)
                .map(|j| dist[j])
        })
        .collect();

    let grid = DecisionGrid {
        metric,
        noise_axis: noise_axis.clone(),
        distance_axis: distance_axis.clone(),
        m1,
        m2,
        winner,
        boundary_km,
    };

    let mut out = String::new();
    let subject = match metric {
        Metric::Rate => "boundary metric=rate",
        Metric::Fidelity => "boundary metric=fidelity",
    };
    header(&mut out, subject, config, trials);
    for (i, b) in grid.boundary_km.iter().enumerate() {
        let label = match b {
            Some(km) => fmt(*km),
            None => "none".to_string(),
        };
        out.push_str(&format!(
            "# boundary {}={} first_l0_repeater_wins={label}\n",
            noise_axis.field,
            fmt(noise[i])
        ));
    }
    out.push_str(&format!(
        "{},l0_in_km,value_m1,value_m2,winner\n",
        noise_axis.field
    ));
    for (i, nv) in noise.iter().enumerate() {
        for (j, dv) in dist.iter().enumerate() {
            let idx = grid.index(i, j);
            let w = match grid.winner[idx] {
                Winner::Direct => "direct",
                Winner::Repeater => "repeater",
            };
            out.push_str(&format!(
                "{},{},{},{},{w}\n",
                fmt(*nv),
                fmt(*dv),
                fmt(grid.m1[idx]),
                fmt(grid.m2[idx])
            ));
        }
    }
    Ok((grid, out))
}

/// Metric against distance for m=1 and m=2 at fixed noise parameters.
pub fn run_distance_curves(config: &SweepConfig, metric: Metric) -> Result<String, CliError> {
    config.validate()?;
    let default_axis = AxisSpec::linear("l0_in_km", 5.0, 150.0, 30);
    let axis = match config.axes.len() {
        0 => &default_axis,
        1 => &config.axes[0],
        n => {
            return Err(CliError::Config(format!(
                "curves sweep one axis, got {n}"
            )))
        }
    };
    if axis.field != "l0_in_km" {
        return Err(CliError::Config("curves sweep l0_in_km".into()));
    }

    let trials = config.sweep_trials();
    let dist = axis.values();
    let values: Vec<CellValues> = dist
        .par_iter()
        .enumerate()
        .map(|(idx, &km)| {
            let p = cell_params(&config.params, &[(axis, km)])?;
            evaluate_cell(config, &p, metric, trials, derive_seed(config.seed, idx as u64))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = String::new();
    let subject = match metric {
        Metric::Rate => "curves metric=rate",
        Metric::Fidelity => "curves metric=fidelity",
    };
    header(&mut out, subject, config, trials);
    match metric {
        Metric::Rate => {
            out.push_str("# scale: rate columns are best viewed on a log axis\n");
            out.push_str("# value_m1: closed form; value_m2: seeded simulation; value_m2_recursion: transcribed recursion (clamped)\n");
            out.push_str("l0_in_km,value_m1,value_m2,value_m2_recursion\n");
            for (km, v) in dist.iter().zip(&values) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt(*km),
                    fmt(v.m1),
                    fmt(v.m2),
                    fmt(v.m2_recursion)
                ));
            }
        }
        Metric::Fidelity => {
            out.push_str("l0_in_km,value_m1,value_m2\n");
            for (km, v) in dist.iter().zip(&values) {
                out.push_str(&format!("{},{},{}\n", fmt(*km), fmt(v.m1), fmt(v.m2)));
            }
        }
    }
    Ok(out)
}
