//! Time-stepped stochastic simulation of the full distribution protocol:
//! link attempts, memory waiting, fusion measurements and nesting. This is
//! the trusted reference for every rate formula and for the waiting-time
//! distributions behind the fidelity estimates.
//!
//! Reproducibility: trials draw from per-trial ChaCha substreams derived
//! from the trial index, and reductions run over fixed-size chunks combined
//! by pairwise summation in chunk order. Identical `(seed, params)` give
//! bit-identical results on any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::NetworkParams;
use crate::parent::{self, SwitchKind};
use crate::repeater::{final_fidelity, mixture_fidelity, FusionFidelityInput};

/// Trials per work unit; fixed so that chunk boundaries do not depend on
/// the number of workers.
const CHUNK: u64 = 4096;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// `sample_std / sqrt(trials)`; zero for a single trial.
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    /// |mean - reference| in units of the standard error.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference).abs() / self.std_error
        }
    }
}

/// Bookkeeping of one simulated distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub total_rounds: u64,
    /// Residual memory wait of each final qubit, accumulated over fusion
    /// stages (empty of meaning at nesting level 1, where it is all zeros).
    pub per_node_wait: Vec<u64>,
    /// Completed attempt cycles per fusion stage, children first.
    pub per_fusion_bsm_attempts: Vec<u32>,
}

/// What happens when a fusion measurement fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionFailureRule {
    /// The constituents are lost and regenerated from scratch. This is the
    /// reading under which the expected total time factorizes into
    /// readiness times teleportation.
    #[default]
    DestroyParents,
    /// Only the measurement is retried, one round per retry.
    RetryMeasurement,
}

/// Stable per-index seed derivation (splitmix64), for giving each sweep
/// cell its own seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Rounds until the first success of a per-round Bernoulli(q), q in (0, 1].
fn geometric_rounds(rng: &mut ChaCha8Rng, q: f64) -> u64 {
    debug_assert!(q > 0.0 && q <= 1.0);
    if q >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    let extra = f64::ln_1p(-u) / f64::ln_1p(-q);
    (extra as u64).saturating_add(1)
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Runs `trials` independent trials in fixed chunks. The closure returns a
/// primary value (summarized as an [`McEstimate`]) and an auxiliary value
/// (summarized as a plain mean).
fn parallel_trials<F>(trials: u64, seed: u64, trial_fn: F) -> Result<(McEstimate, f64)>
where
    F: Fn(u64, &mut ChaCha8Rng) -> (f64, f64) + Sync,
{
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, ">= 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let (mut sum, mut sum_sq, mut aux) = (0.0f64, 0.0f64, 0.0f64);
            for trial in lo..hi {
                let mut rng = trial_rng(seed, trial);
                let (value, extra) = trial_fn(trial, &mut rng);
                sum += value;
                sum_sq += value * value;
                aux += extra;
            }
            (sum, sum_sq, aux)
        })
        .collect();

    let sums: Vec<f64> = partials.iter().map(|p| p.0).collect();
    let sq: Vec<f64> = partials.iter().map(|p| p.1).collect();
    let auxes: Vec<f64> = partials.iter().map(|p| p.2).collect();
    let n = trials as f64;
    let mean = pairwise_sum(&sums) / n;
    let variance = if trials > 1 {
        ((pairwise_sum(&sq) - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((
        McEstimate {
            mean,
            std_error: (variance / n).sqrt(),
            trials,
            seed,
        },
        pairwise_sum(&auxes) / n,
    ))
}

/// Empirical mean of the maximum of `n_users` geometric waiting times.
pub fn simulate_max_geometric(
    n_users: usize,
    q_eff: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n_users == 0 {
        return Err(Error::domain("n_users", 0.0, ">= 1"));
    }
    if !(q_eff > 0.0 && q_eff <= 1.0) {
        return Err(Error::domain("q_eff", q_eff, "(0, 1]"));
    }
    let (estimate, _) = parallel_trials(trials, seed, |_, rng| {
        let max = (0..n_users)
            .map(|_| geometric_rounds(rng, q_eff))
            .max()
            .unwrap();
        (max as f64, 0.0)
    })?;
    Ok(estimate)
}

fn parent_link_trial(
    n_users: usize,
    q_eff: f64,
    kind: SwitchKind,
    rng: &mut ChaCha8Rng,
) -> (u64, Vec<u64>) {
    match kind {
        SwitchKind::SourceBased => {
            let times: Vec<u64> = (0..n_users).map(|_| geometric_rounds(rng, q_eff)).collect();
            let max = *times.iter().max().unwrap();
            let waits = times.iter().map(|t| max - t).collect();
            (max, waits)
        }
        SwitchKind::MeasurementBased => {
            let q_all = q_eff.powi(n_users as i32);
            (geometric_rounds(rng, q_all), vec![0; n_users])
        }
    }
}

/// Aggregate outcome of the parent link-stage simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentSim {
    pub rounds: McEstimate,
    /// Mean residual memory wait per stored qubit (zero for the
    /// measurement-based switch by construction).
    pub mean_residual_wait: f64,
}

/// Simulates the link stage of one parent: per-node geometric successes with
/// completion at the maximum (source-based) or geometric waiting for the
/// simultaneous success of all N links (measurement-based).
pub fn simulate_parent(
    params: &NetworkParams,
    kind: SwitchKind,
    trials: u64,
    seed: u64,
) -> Result<ParentSim> {
    params.validate()?;
    let q_eff = params.q_eff()?;
    if q_eff == 0.0 {
        return Err(Error::Divergent("q_eff = 0: links never succeed".into()));
    }
    let n = params.n_users;
    let (rounds, mean_residual_wait) = parallel_trials(trials, seed, |_, rng| {
        let (max, waits) = parent_link_trial(n, q_eff, kind, rng);
        let wait_mean = waits.iter().sum::<u64>() as f64 / n as f64;
        (max as f64, wait_mean)
    })?;
    Ok(ParentSim {
        rounds,
        mean_residual_wait,
    })
}

/// Per-trial records of the parent link stage, in trial order.
pub fn sample_parent_trials(
    params: &NetworkParams,
    kind: SwitchKind,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    params.validate()?;
    let q_eff = params.q_eff()?;
    if q_eff == 0.0 {
        return Err(Error::Divergent("q_eff = 0: links never succeed".into()));
    }
    let n = params.n_users;
    collect_records(trials, seed, |rng| {
        let (rounds, waits) = parent_link_trial(n, q_eff, kind, rng);
        TrialRecord {
            total_rounds: rounds,
            per_node_wait: waits,
            per_fusion_bsm_attempts: Vec::new(),
        }
    })
}

fn collect_records<F>(trials: u64, seed: u64, trial_fn: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&mut ChaCha8Rng) -> TrialRecord + Sync,
{
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, ">= 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let nested: Vec<Vec<TrialRecord>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            (lo..hi)
                .map(|trial| trial_fn(&mut trial_rng(seed, trial)))
                .collect()
        })
        .collect();
    Ok(nested.into_iter().flatten().collect())
}

struct RepeaterCtx {
    n_users: usize,
    q_eff: f64,
    q_bsm: f64,
    bsm_count: usize,
    kind: SwitchKind,
    rule: FusionFailureRule,
}

/// One complete distribution at `level`: readiness of the N constituents,
/// then the fusion (or switch measurement) cycles of this level.
fn distribution_trial(
    ctx: &RepeaterCtx,
    level: u32,
    rng: &mut ChaCha8Rng,
    attempts: &mut Vec<u32>,
) -> (u64, Vec<u64>) {
    let n = ctx.n_users;
    let mut total = 0u64;
    let mut cycles = 0u32;
    loop {
        cycles += 1;
        let (ready, mut waits) = if level == 1 {
            let (rounds, _) = parent_link_trial(n, ctx.q_eff, ctx.kind, rng);
            (rounds, vec![0u64; n])
        } else {
            let children: Vec<(u64, Vec<u64>)> = (0..n)
                .map(|_| distribution_trial(ctx, level - 1, rng, attempts))
                .collect();
            let slowest = children.iter().map(|c| c.0).max().unwrap();
            let waits = children
                .iter()
                .map(|(t, w)| w[0] + (slowest - t))
                .collect();
            (slowest, waits)
        };
        total += ready;

        let fused = (0..ctx.bsm_count).all(|_| rng.random::<f64>() < ctx.q_bsm);
        if fused {
            attempts.push(cycles);
            return (total, waits);
        }
        match ctx.rule {
            FusionFailureRule::DestroyParents => continue,
            FusionFailureRule::RetryMeasurement => {
                // Failed measurements retry round by round; ready
                // constituents sit in memory meanwhile.
                let extra = (0..ctx.bsm_count)
                    .map(|_| geometric_rounds(rng, ctx.q_bsm))
                    .max()
                    .unwrap_or(1);
                total += extra;
                for w in waits.iter_mut() {
                    *w += extra;
                }
                attempts.push(cycles + 1);
                return (total, waits);
            }
        }
    }
}

fn repeater_ctx(params: &NetworkParams, level: u32, rule: FusionFailureRule) -> Result<(RepeaterCtx, NetworkParams)> {
    if level == 0 {
        return Err(Error::domain("level", 0.0, ">= 1"));
    }
    let leveled = NetworkParams {
        nesting_level: level,
        ..params.clone()
    };
    leveled.validate()?;
    let q_eff = leveled.q_eff()?;
    if q_eff == 0.0 {
        return Err(Error::Divergent("q_eff = 0: links never succeed".into()));
    }
    let n = leveled.n_users;
    Ok((
        RepeaterCtx {
            n_users: n,
            q_eff,
            q_bsm: leveled.q_bsm,
            bsm_count: n * (n - 1) / 2,
            kind: leveled.switch_kind,
            rule,
        },
        leveled,
    ))
}

/// Expected total rounds of a complete level-`level` distribution. The
/// elementary link length inside `params` is re-derived for `level`.
pub fn simulate_repeater(
    params: &NetworkParams,
    level: u32,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate_repeater_with(params, level, trials, seed, FusionFailureRule::default())
}

pub fn simulate_repeater_with(
    params: &NetworkParams,
    level: u32,
    trials: u64,
    seed: u64,
    rule: FusionFailureRule,
) -> Result<McEstimate> {
    let (ctx, _) = repeater_ctx(params, level, rule)?;
    let (estimate, _) = parallel_trials(trials, seed, |_, rng| {
        let mut attempts = Vec::new();
        let (rounds, _) = distribution_trial(&ctx, level, rng, &mut attempts);
        (rounds as f64, 0.0)
    })?;
    Ok(estimate)
}

/// Per-trial records of complete level-`level` distributions.
pub fn sample_repeater_trials(
    params: &NetworkParams,
    level: u32,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let (ctx, _) = repeater_ctx(params, level, FusionFailureRule::default())?;
    collect_records(trials, seed, |rng| {
        let mut attempts = Vec::new();
        let (rounds, waits) = distribution_trial(&ctx, level, rng, &mut attempts);
        TrialRecord {
            total_rounds: rounds,
            per_node_wait: waits,
            per_fusion_bsm_attempts: attempts,
        }
    })
}

struct FidelityCtx {
    n_users: usize,
    level: u32,
    p_ghz: f64,
    p_bsm: f64,
    p_mem: f64,
    parent_fidelity: f64,
}

fn fidelity_ctx(params: &NetworkParams) -> Result<FidelityCtx> {
    params.validate()?;
    let n = params.n_users;
    let parent_fid = parent::parent_fidelity(params, params.switch_kind)?;
    let floor = 0.5f64.powi(n as i32);
    let p_ghz = if parent_fid < floor {
        log::warn!("parent fidelity {parent_fid} below 2^-{n}; using p_ghz = 0");
        0.0
    } else {
        (parent_fid - floor) / (1.0 - floor)
    };
    Ok(FidelityCtx {
        n_users: n,
        level: params.nesting_level,
        p_ghz,
        p_bsm: params.p_bsm,
        p_mem: params.p_mem,
        parent_fidelity: parent_fid,
    })
}

fn record_fidelity(ctx: &FidelityCtx, record: &TrialRecord) -> Result<f64> {
    if ctx.level == 1 {
        // No fusion stage: the distributed state is the parent state.
        return Ok(ctx.parent_fidelity);
    }
    if record.per_node_wait.len() != ctx.n_users {
        return Err(Error::LengthMismatch {
            expected: ctx.n_users,
            actual: record.per_node_wait.len(),
        });
    }
    let bsm_keep = ctx.p_bsm.powi(ctx.level as i32 - 1);
    let keeps = record
        .per_node_wait
        .iter()
        .map(|&w| crate::models::DepolarizingParam::new(bsm_keep * ctx.p_mem.powf(w as f64)))
        .collect::<Result<Vec<_>>>()?;
    final_fidelity(&FusionFidelityInput {
        n_users: ctx.n_users,
        p_ghz: ctx.p_ghz,
        keep_params: keeps,
    })
}

/// Waiting-time-exact fidelity: converts each trial's waits and fusion
/// counts into per-qubit keeps, evaluates the fusion fidelity and averages.
/// `params.nesting_level` must match the level the records were drawn at.
pub fn estimate_fidelity_from_trials(
    records: &[TrialRecord],
    params: &NetworkParams,
) -> Result<McEstimate> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no trial records".into()));
    }
    let ctx = fidelity_ctx(params)?;
    let values: Vec<f64> = records
        .iter()
        .map(|r| record_fidelity(&ctx, r))
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let std_error = if values.len() > 1 {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        let variance = ((pairwise_sum(&sq) - n * mean * mean) / (n - 1.0)).max(0.0);
        (variance / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        trials: records.len() as u64,
        seed: 0,
    })
}

/// Fused simulate-and-average version of [`estimate_fidelity_from_trials`];
/// streams trials instead of materializing records.
pub fn simulate_repeater_fidelity(
    params: &NetworkParams,
    level: u32,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let (rctx, leveled) = repeater_ctx(params, level, FusionFailureRule::default())?;
    let fctx = fidelity_ctx(&leveled)?;
    let (estimate, _) = parallel_trials(trials, seed, |_, rng| {
        let mut attempts = Vec::new();
        let (rounds, waits) = distribution_trial(&rctx, level, rng, &mut attempts);
        let record = TrialRecord {
            total_rounds: rounds,
            per_node_wait: waits,
            per_fusion_bsm_attempts: attempts,
        };
        (record_fidelity(&fctx, &record).unwrap_or(f64::NAN), 0.0)
    })?;
    Ok(estimate)
}

/// Waiting-time-exact parent fidelity: integer waits are sampled per trial
/// and pushed through the same keep/overlap machinery the closed form uses
/// with mean waits.
pub fn simulate_parent_fidelity(
    params: &NetworkParams,
    kind: SwitchKind,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    params.validate()?;
    let n = params.n_users;
    let q_eff = params.q_eff()?;
    if q_eff == 0.0 {
        return Err(Error::Divergent("q_eff = 0: links never succeed".into()));
    }
    match kind {
        SwitchKind::MeasurementBased => {
            let fid = parent::measurement_based_fidelity(params)?;
            Ok(McEstimate {
                mean: fid,
                std_error: 0.0,
                trials,
                seed,
            })
        }
        SwitchKind::SourceBased => {
            let floor = 0.5f64.powi(n as i32);
            let p_ghz = (params.f_src - floor) / (1.0 - floor);
            let (p_bsm, p_mem) = (params.p_bsm, params.p_mem);
            let (estimate, _) = parallel_trials(trials, seed, |_, rng| {
                let (_, waits) = parent_link_trial(n, q_eff, kind, rng);
                let keeps: Vec<_> = waits
                    .iter()
                    .map(|&w| {
                        crate::models::DepolarizingParam::new(p_bsm * p_mem.powf(w as f64))
                            .expect("keep stays in [0, 1]")
                    })
                    .collect();
                let fid = mixture_fidelity(n, p_ghz, &keeps).expect("valid mixture");
                (fid, 0.0)
            })?;
            Ok(estimate)
        }
    }
}
