//! Rate and fidelity of the recursive two-dimensional repeater that fuses N
//! parent GHZ states into one GHZ state spanning roughly twice the distance
//! per nesting level.
//!
//! The rate side transcribes the published recursion for the readiness CDF
//! exactly as printed. That recursion multiplies a CDF by an *expected time*
//! inside a sum, so partial sums can exceed one; values are clamped to
//! `[0, 1]` and every clamp is counted and logged rather than hidden. The
//! Monte Carlo simulator in [`crate::montecarlo`] is the trusted reference
//! for rates; validation reports quantify the gap.
//!
//! The fidelity side models each parent as a GHZ/maximally-mixed mixture,
//! expands the post-fusion state over which parents were mixed, and applies
//! per-final-qubit depolarizing channels through the closed-form GHZ overlap
//! [`g_function`]. The density-matrix oracle in [`crate::oracle`] is the
//! ground truth for these formulas.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{memory_keep_after_mean_wait, DepolarizingParam, NetworkParams};
use crate::parent::{self, binomial_f64, SwitchKind};

/// Largest user count for the closed-form subset expansions.
const MAX_SUBSET_USERS: usize = 24;

/// Hard cap on tail-sum terms.
pub const MAX_TAIL_TERMS: u64 = 10_000_000;

/// Default summand threshold for truncating tail sums.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// A parent state as a probability-weighted blend of an N-qubit GHZ state
/// and the maximally mixed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzMixture {
    n_qubits: usize,
    p_ghz: f64,
}

impl GhzMixture {
    pub fn new(n_qubits: usize, p_ghz: f64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::domain("n_qubits", 0.0, ">= 1"));
        }
        if !(0.0..=1.0).contains(&p_ghz) || !p_ghz.is_finite() {
            return Err(Error::domain("p_ghz", p_ghz, "[0, 1]"));
        }
        Ok(GhzMixture { n_qubits, p_ghz })
    }

    /// The mixture whose GHZ fidelity equals `fidelity`.
    pub fn from_fidelity(n_qubits: usize, fidelity: f64) -> Result<Self> {
        let p_ghz = parent::mixture_weight_from_fidelity(n_qubits, fidelity)?;
        GhzMixture::new(n_qubits, p_ghz)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn p_ghz(&self) -> f64 {
        self.p_ghz
    }

    /// Overlap with the ideal GHZ state: `p + (1-p)/2^n`.
    pub fn fidelity(&self) -> f64 {
        self.p_ghz + (1.0 - self.p_ghz) * 0.5f64.powi(self.n_qubits as i32)
    }
}

/// Inputs of the closed-form fusion fidelity: the (identical) mixture weight
/// of the N parents and the per-final-qubit depolarizing keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionFidelityInput {
    pub n_users: usize,
    pub p_ghz: f64,
    pub keep_params: Vec<DepolarizingParam>,
}

impl FusionFidelityInput {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::domain("n_users", self.n_users as f64, ">= 2"));
        }
        if !(0.0..=1.0).contains(&self.p_ghz) || !self.p_ghz.is_finite() {
            return Err(Error::domain("p_ghz", self.p_ghz, "[0, 1]"));
        }
        if self.keep_params.len() != self.n_users {
            return Err(Error::LengthMismatch {
                expected: self.n_users,
                actual: self.keep_params.len(),
            });
        }
        Ok(())
    }
}

/// Which subsets of GHZ parents contribute to the mixed-subset term of the
/// fusion fidelity. The transcribed formula skips singletons; the widened
/// rule keeps them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetRule {
    #[default]
    ExcludeSingletons,
    IncludeSingletons,
}

/// Which factor multiplies the child CDF inside the readiness recursion:
/// the expected teleportation time as printed, or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeleportFactorMode {
    #[default]
    ExpectedTime,
    InverseExpectedTime,
}

/// Rate decomposition of one distribution: readiness rounds times
/// teleportation rounds times the step duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub expected_t_max: f64,
    pub expected_t_teleport: f64,
    pub total_time_s: f64,
    pub rate_hz: f64,
}

/// A truncated infinite tail sum plus its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    /// Number of explicitly summed terms.
    pub terms: u64,
    /// Geometric estimate added for the truncated tail.
    pub tail_estimate: f64,
    /// How many CDF evaluations were clamped into [0, 1].
    pub clamp_events: u64,
    /// Largest amount by which a clamped value exceeded 1.
    pub max_clamp_excess: f64,
}

/// Expected rounds spent on the fusion measurements: `(1/q_bsm)^(N(N-1)/2)`,
/// one Bell-state measurement per parent pair.
pub fn teleport_expected_time(n_users: usize, q_bsm: f64) -> Result<f64> {
    if n_users == 0 {
        return Err(Error::domain("n_users", 0.0, ">= 1"));
    }
    if !(q_bsm > 0.0 && q_bsm <= 1.0) {
        return Err(Error::domain("q_bsm", q_bsm, "(0, 1]"));
    }
    let bsm_count = (n_users * (n_users - 1) / 2) as i32;
    Ok(q_bsm.powi(-bsm_count))
}

/// Overlap of the ideal N-qubit GHZ state with itself after a single-qubit
/// depolarizing channel of keep `p_i` acts on qubit `i`.
///
/// Expanding the product channel over the subset `V` of replaced qubits:
/// replacing no qubit leaves overlap 1; replacing every qubit leaves the
/// maximally mixed overlap `2^-N`; replacing a proper nonempty subset leaves
/// a classical GHZ-diagonal mixture with overlap `2^-(|V|+1)`.
pub fn g_function(n_users: usize, keeps: &[DepolarizingParam]) -> Result<f64> {
    if n_users == 0 || n_users > MAX_SUBSET_USERS {
        return Err(Error::domain(
            "n_users",
            n_users as f64,
            "1..=24 for the subset expansion",
        ));
    }
    if keeps.len() != n_users {
        return Err(Error::LengthMismatch {
            expected: n_users,
            actual: keeps.len(),
        });
    }
    let full: u32 = (1u32 << n_users) - 1;
    let mut sum = 0.0f64;
    for subset in 0..=full {
        let mut weight = 1.0f64;
        for (i, k) in keeps.iter().enumerate() {
            let p = k.keep();
            weight *= if subset & (1 << i) != 0 { 1.0 - p } else { p };
        }
        let replaced = subset.count_ones() as i32;
        let overlap = if subset == 0 {
            1.0
        } else if subset == full {
            0.5f64.powi(n_users as i32)
        } else {
            0.5f64.powi(replaced + 1)
        };
        sum += weight * overlap;
    }
    Ok(sum)
}

/// GHZ fidelity of a mixture after per-qubit depolarizing keeps: the mixed
/// component is invariant, the GHZ component goes through [`g_function`].
pub fn mixture_fidelity(n_users: usize, p_ghz: f64, keeps: &[DepolarizingParam]) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_ghz) || !p_ghz.is_finite() {
        return Err(Error::domain("p_ghz", p_ghz, "[0, 1]"));
    }
    let g = g_function(n_users, keeps)?;
    Ok(p_ghz * g + (1.0 - p_ghz) * 0.5f64.powi(n_users as i32))
}

/// The channel subset sum multiplying each mixed-subset term: over every
/// subset `V` of replaced qubits, `prod_{i in V} (1-p_i)/2 * prod_{j not in V} p_j`.
fn channel_subset_sum(keeps: &[DepolarizingParam]) -> f64 {
    let n = keeps.len();
    let full: u32 = (1u32 << n) - 1;
    let mut sum = 0.0f64;
    for subset in 0..=full {
        let mut term = 1.0f64;
        for (i, k) in keeps.iter().enumerate() {
            let p = k.keep();
            term *= if subset & (1 << i) != 0 {
                (1.0 - p) / 2.0
            } else {
                p
            };
        }
        sum += term;
    }
    sum
}

/// Fidelity of the fused state, transcribed term by term: the all-GHZ term
/// `p^N G(N)`, the all-mixed term `(1/2)^N (1-p)^N`, and one half times the
/// mixed-subset weights times the channel subset sum. Out-of-range results
/// are clamped and logged, never silently.
pub fn final_fidelity(input: &FusionFidelityInput) -> Result<f64> {
    final_fidelity_with(input, SubsetRule::default())
}

pub fn final_fidelity_with(input: &FusionFidelityInput, rule: SubsetRule) -> Result<f64> {
    input.validate()?;
    let n = input.n_users;
    if n > MAX_SUBSET_USERS {
        return Err(Error::domain(
            "n_users",
            n as f64,
            "<= 24 for the subset expansion",
        ));
    }
    let p = input.p_ghz;
    let g = g_function(n, &input.keep_params)?;
    let channel_sum = channel_subset_sum(&input.keep_params);

    let mut fidelity = p.powi(n as i32) * g + 0.5f64.powi(n as i32) * (1.0 - p).powi(n as i32);
    let lo = match rule {
        SubsetRule::ExcludeSingletons => 2,
        SubsetRule::IncludeSingletons => 1,
    };
    for ghz_count in lo..n {
        let weight = binomial_f64(n, ghz_count)
            * p.powi(ghz_count as i32)
            * ((1.0 - p) / 2.0).powi((n - ghz_count) as i32);
        fidelity += 0.5 * weight * channel_sum;
    }

    if !(0.0..=1.0).contains(&fidelity) {
        log::warn!("fusion fidelity {fidelity} outside [0, 1]; clamping");
        fidelity = fidelity.clamp(0.0, 1.0);
    }
    Ok(fidelity)
}

/// One outcome class of the post-fusion state decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetClassWeight {
    /// Number of parents in the GHZ component for this class.
    pub ghz_parents: usize,
    /// How many subsets fall in the class.
    pub subset_count: u64,
    /// Weight of each subset, including the 1/2 prefactor.
    pub weight_each: f64,
    pub weight_total: f64,
}

/// Weights of the post-fusion state over its outcome classes, reported
/// as transcribed. `raw_sum` makes any normalization shortfall visible
/// instead of hiding it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostMeasurementWeights {
    pub all_ghz: f64,
    pub all_mixed: f64,
    pub mixed_subsets: Vec<SubsetClassWeight>,
    pub raw_sum: f64,
}

pub fn post_measurement_weights(n_users: usize, p_ghz: f64) -> Result<PostMeasurementWeights> {
    post_measurement_weights_with(n_users, p_ghz, SubsetRule::default())
}

pub fn post_measurement_weights_with(
    n_users: usize,
    p_ghz: f64,
    rule: SubsetRule,
) -> Result<PostMeasurementWeights> {
    if !(2..=MAX_SUBSET_USERS).contains(&n_users) {
        return Err(Error::domain("n_users", n_users as f64, "2..=24"));
    }
    if !(0.0..=1.0).contains(&p_ghz) || !p_ghz.is_finite() {
        return Err(Error::domain("p_ghz", p_ghz, "[0, 1]"));
    }
    let all_ghz = p_ghz.powi(n_users as i32);
    let all_mixed = (1.0 - p_ghz).powi(n_users as i32);
    let lo = match rule {
        SubsetRule::ExcludeSingletons => 2,
        SubsetRule::IncludeSingletons => 1,
    };
    let mut mixed_subsets = Vec::new();
    let mut raw_sum = all_ghz + all_mixed;
    for ghz_count in lo..n_users {
        let count = binomial_f64(n_users, ghz_count);
        let each = 0.5
            * p_ghz.powi(ghz_count as i32)
            * (1.0 - p_ghz).powi((n_users - ghz_count) as i32);
        let total = count * each;
        raw_sum += total;
        mixed_subsets.push(SubsetClassWeight {
            ghz_parents: ghz_count,
            subset_count: count as u64,
            weight_each: each,
            weight_total: total,
        });
    }
    Ok(PostMeasurementWeights {
        all_ghz,
        all_mixed,
        mixed_subsets,
        raw_sum,
    })
}

/// Memoized evaluator of the recursive readiness CDF.
///
/// Level 1 is the closed-form parent completion CDF. Level `m > 1` raises
/// the clamped child sum to the N-th power:
/// `child(k, m-1) = clamp( sum_{u=1..k} F(floor(k/u), m-1) * factor )`,
/// where `factor` is the expected teleportation time (transcribed mode) or
/// its inverse.
pub struct ReadinessCdf {
    n_users: usize,
    q_eff: f64,
    kind: SwitchKind,
    factor: f64,
    memo: RefCell<HashMap<(u64, u32), f64>>,
    clamp_events: Cell<u64>,
    max_clamp_excess: Cell<f64>,
}

impl ReadinessCdf {
    pub fn new(params: &NetworkParams, mode: TeleportFactorMode) -> Result<Self> {
        params.validate()?;
        let q_eff = params.q_eff()?;
        if q_eff <= 0.0 {
            return Err(Error::Divergent("q_eff = 0: links never succeed".into()));
        }
        let e_teleport = teleport_expected_time(params.n_users, params.q_bsm)?;
        let factor = match mode {
            TeleportFactorMode::ExpectedTime => e_teleport,
            TeleportFactorMode::InverseExpectedTime => 1.0 / e_teleport,
        };
        Ok(ReadinessCdf {
            n_users: params.n_users,
            q_eff,
            kind: params.switch_kind,
            factor,
            memo: RefCell::new(HashMap::new()),
            clamp_events: Cell::new(0),
            max_clamp_excess: Cell::new(0.0),
        })
    }

    /// Probability that one level-`level` state is ready within `k` rounds.
    pub fn eval(&self, k: u64, level: u32) -> Result<f64> {
        if level == 0 {
            return Err(Error::domain("level", 0.0, ">= 1"));
        }
        if level == 1 {
            return Ok(parent::completion_cdf(k, self.n_users, self.q_eff, self.kind));
        }
        Ok(self
            .child_total(k, level - 1)?
            .powi(self.n_users as i32))
    }

    /// Clamped CDF of one child's total time (its own readiness plus its
    /// teleportation), as transcribed.
    pub fn child_total(&self, k: u64, child_level: u32) -> Result<f64> {
        if let Some(&v) = self.memo.borrow().get(&(k, child_level)) {
            return Ok(v);
        }
        let mut sum = 0.0f64;
        for u in 1..=k {
            let term = self.eval(k / u, child_level)? * self.factor;
            if k / u == 1 {
                // Every remaining divisor floors to 1; close the sum exactly.
                sum += (k - u + 1) as f64 * term;
                break;
            }
            sum += term;
        }
        let clamped = if sum > 1.0 {
            self.clamp_events.set(self.clamp_events.get() + 1);
            self.max_clamp_excess
                .set(self.max_clamp_excess.get().max(sum - 1.0));
            1.0
        } else {
            sum
        };
        self.memo.borrow_mut().insert((k, child_level), clamped);
        Ok(clamped)
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events.get()
    }

    pub fn max_clamp_excess(&self) -> f64 {
        self.max_clamp_excess.get()
    }
}

/// Readiness CDF at the default (transcribed) teleport factor.
pub fn cdf_parent_ready(k: u64, level: u32, params: &NetworkParams) -> Result<f64> {
    ReadinessCdf::new(params, TeleportFactorMode::default())?.eval(k, level)
}

fn tail_sum<F: FnMut(u64) -> Result<f64>>(mut summand: F, tail_tol: f64) -> Result<(f64, u64, f64)> {
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(Error::domain("tail_tol", tail_tol, "> 0"));
    }
    let mut sum = 0.0f64;
    let mut prev = f64::INFINITY;
    let mut k = 0u64;
    loop {
        let s = summand(k)?;
        sum += s;
        if k >= 1 && s < tail_tol {
            if s <= 0.0 {
                return Ok((sum, k + 1, 0.0));
            }
            let ratio = s / prev;
            if ratio < 1.0 {
                let tail = s * ratio / (1.0 - ratio);
                return Ok((sum + tail, k + 1, tail));
            }
        }
        if k >= MAX_TAIL_TERMS {
            return Err(Error::Divergent(format!(
                "tail sum not converged after {MAX_TAIL_TERMS} terms (last summand {s:.3e})"
            )));
        }
        prev = s;
        k += 1;
    }
}

/// Expected readiness rounds at the given nesting level: the tail sum
/// `sum_k (1 - F(k, level))`, truncated once the summand drops below
/// `tail_tol` and closed with a geometric tail estimate.
pub fn expected_t_max(level: u32, params: &NetworkParams, tail_tol: f64) -> Result<TailSum> {
    expected_t_max_with(level, params, tail_tol, TeleportFactorMode::default())
}

pub fn expected_t_max_with(
    level: u32,
    params: &NetworkParams,
    tail_tol: f64,
    mode: TeleportFactorMode,
) -> Result<TailSum> {
    if level == 0 {
        return Err(Error::domain("level", 0.0, ">= 1"));
    }
    let cdf = ReadinessCdf::new(params, mode)?;
    let (value, terms, tail_estimate) = tail_sum(
        |k| {
            Ok(if level == 1 {
                parent::completion_tail(k, cdf.n_users, cdf.q_eff, cdf.kind)
            } else {
                1.0 - cdf.eval(k, level)?
            })
        },
        tail_tol,
    )?;
    Ok(TailSum {
        value,
        terms,
        tail_estimate,
        clamp_events: cdf.clamp_events(),
        max_clamp_excess: cdf.max_clamp_excess(),
    })
}

/// Total expected distribution time at `params.nesting_level`: readiness
/// rounds times teleportation rounds times the step duration.
pub fn total_distribution_time(params: &NetworkParams) -> Result<RateResult> {
    total_distribution_time_with(params, DEFAULT_TAIL_TOL, TeleportFactorMode::default())
}

pub fn total_distribution_time_with(
    params: &NetworkParams,
    tail_tol: f64,
    mode: TeleportFactorMode,
) -> Result<RateResult> {
    let t_max = expected_t_max_with(params.nesting_level, params, tail_tol, mode)?;
    let t_teleport = teleport_expected_time(params.n_users, params.q_bsm)?;
    let total_time_s = t_max.value * t_teleport * params.delta_t_s;
    Ok(RateResult {
        expected_t_max: t_max.value,
        expected_t_teleport: t_teleport,
        total_time_s,
        rate_hz: 1.0 / total_time_s,
    })
}

/// Expected residual wait of one fused constituent at nesting `stage`: how
/// long the average child sits in memory between its own completion and the
/// slowest sibling's, derived from the same readiness CDFs.
pub fn stage_residual_wait(
    stage: u32,
    params: &NetworkParams,
    tail_tol: f64,
    mode: TeleportFactorMode,
) -> Result<f64> {
    if stage < 2 {
        return Err(Error::domain("stage", stage as f64, ">= 2"));
    }
    let cdf = ReadinessCdf::new(params, mode)?;
    let child_level = stage - 1;
    let (e_max, _, _) = tail_sum(|k| Ok(1.0 - cdf.eval(k, stage)?), tail_tol)?;
    let (e_single, _, _) = tail_sum(|k| Ok(1.0 - cdf.child_total(k, child_level)?), tail_tol)?;
    Ok((e_max - e_single).max(0.0))
}

/// End-to-end fidelity of the distributed state at `params.nesting_level`.
///
/// Level 1 is the parent fidelity. Each further level re-expresses the
/// previous output as a GHZ mixture of matching fidelity, then fuses N
/// copies with per-final-qubit keeps combining one fusion BSM (`p_bsm`) and
/// the expected sibling wait in memory.
pub fn repeater_fidelity(params: &NetworkParams) -> Result<f64> {
    repeater_fidelity_with(
        params,
        SubsetRule::default(),
        TeleportFactorMode::default(),
        DEFAULT_TAIL_TOL,
    )
}

pub fn repeater_fidelity_with(
    params: &NetworkParams,
    rule: SubsetRule,
    mode: TeleportFactorMode,
    tail_tol: f64,
) -> Result<f64> {
    params.validate()?;
    let n = params.n_users;
    let mut fidelity = parent::parent_fidelity(params, params.switch_kind)?;
    for stage in 2..=params.nesting_level {
        let wait = stage_residual_wait(stage, params, tail_tol, mode)?;
        let keep = params
            .p_bsm_param()
            .compose(memory_keep_after_mean_wait(params.p_mem_param(), wait)?);
        let floor = 0.5f64.powi(n as i32);
        let p_ghz = if fidelity < floor {
            // The transcribed fusion formula can dip below the fully mixed
            // floor; treat such inputs as fully mixed.
            log::warn!("stage {stage}: fidelity {fidelity} below 2^-{n}; using p_ghz = 0");
            0.0
        } else {
            parent::mixture_weight_from_fidelity(n, fidelity)?
        };
        fidelity = final_fidelity_with(
            &FusionFidelityInput {
                n_users: n,
                p_ghz,
                keep_params: vec![keep; n],
            },
            rule,
        )?;
    }
    Ok(fidelity)
}
