//! Rate and fidelity of single-switch ("parent") GHZ distribution.
//!
//! Two switch architectures are modeled. The source-based switch stores a
//! Bell-pair qubit per client in memory until every link has succeeded, then
//! teleports a locally prepared GHZ state through the stored pairs (one
//! Bell-state measurement per client). The measurement-based switch keeps no
//! memory: all links must succeed within the same time step, after which a
//! GHZ projective measurement entangles the clients directly.
//!
//! Rates are wall-clock expectations over the link-generation rounds; the
//! fidelity models express each noise source as a per-final-qubit
//! depolarizing keep parameter and evaluate the GHZ overlap through
//! [`crate::repeater::g_function`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    effective_success_probability, memory_keep_after_mean_wait, NetworkParams,
};
use crate::repeater::{g_function, mixture_fidelity};

/// Which parent architecture the switch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchKind {
    /// Memory-assisted: store Bell pairs, then teleport a local GHZ state.
    SourceBased,
    /// Memoryless: simultaneous link success, then a GHZ projective
    /// measurement.
    MeasurementBased,
}

/// Outcome of the closed-form parent evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParentResult {
    /// Expected link-generation rounds until the switch can act.
    pub expected_rounds: f64,
    /// Fidelity of the distributed N-qubit GHZ state.
    pub fidelity: f64,
    /// Distributed states per second, including the switch's own
    /// measurement overhead.
    pub rate_hz: f64,
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn check_q_eff(q_eff: f64) -> Result<()> {
    if !q_eff.is_finite() || !(0.0..=1.0).contains(&q_eff) {
        return Err(Error::domain("q_eff", q_eff, "[0, 1]"));
    }
    if q_eff == 0.0 {
        return Err(Error::Divergent(
            "q_eff = 0: links never succeed, expected rounds are infinite".into(),
        ));
    }
    Ok(())
}

/// Expected number of rounds until all `n_users` links have succeeded at
/// least once, each link succeeding with `q_eff` per round:
/// the inclusion-exclusion sum over the maximum of N geometric variables.
pub fn expected_rounds_all_links(n_users: usize, q_eff: f64) -> Result<f64> {
    if n_users == 0 {
        return Err(Error::domain("n_users", 0.0, ">= 1"));
    }
    check_q_eff(q_eff)?;
    let mut sum = 0.0;
    let log_miss = f64::ln_1p(-q_eff);
    for j in 1..=n_users {
        // 1 - (1-q)^j, kept precise for small q.
        let denom = -f64::exp_m1(j as f64 * log_miss);
        let term = binomial_f64(n_users, j) / denom;
        if j % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}

/// Expected rounds in the ideal limit of unbounded parallel attempts.
pub fn ideal_rounds() -> f64 {
    1.0
}

/// `expected_rounds_all_links(n, q_eff) - 1`, evaluated as the positive tail
/// series `sum_k>=1 (1 - (1 - (1-q)^k)^N)` so that gaps far below 1 are not
/// lost to cancellation.
pub fn rounds_gap_to_ideal(n_users: usize, q_eff: f64) -> Result<f64> {
    if n_users == 0 {
        return Err(Error::domain("n_users", 0.0, ">= 1"));
    }
    check_q_eff(q_eff)?;
    if q_eff == 1.0 {
        return Ok(0.0);
    }
    let mut gap = 0.0;
    let log_miss = f64::ln_1p(-q_eff);
    for k in 1..=10_000_000u64 {
        let miss = (k as f64 * log_miss).exp();
        let term = -f64::exp_m1(n_users as f64 * f64::ln_1p(-miss));
        gap += term;
        if term < 1e-18 * (1.0 + gap) {
            return Ok(gap);
        }
    }
    Err(Error::Divergent(format!(
        "gap series did not converge for n_users={n_users}, q_eff={q_eff}"
    )))
}

/// Smallest number of parallel attempts whose expected-rounds gap to the
/// ideal limit is at most `epsilon`.
pub fn min_parallel_attempts(n_users: usize, q_link: f64, epsilon: f64) -> Result<u32> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::domain("epsilon", epsilon, "> 0"));
    }
    if !(q_link > 0.0 && q_link <= 1.0) {
        return Err(Error::domain("q_link", q_link, "(0, 1]"));
    }
    let mut attempts = 1u32;
    loop {
        let q_eff = effective_success_probability(q_link, attempts)?;
        if rounds_gap_to_ideal(n_users, q_eff)? <= epsilon {
            return Ok(attempts);
        }
        attempts = attempts.checked_add(1).ok_or_else(|| {
            Error::Divergent("no attempt count satisfies the requested gap".into())
        })?;
    }
}

/// Expected rounds until all `n_users` links succeed within the same time
/// step: geometric waiting with per-round probability `q_eff^N`.
pub fn measurement_based_expected_rounds(n_users: usize, q_eff: f64) -> Result<f64> {
    if n_users == 0 {
        return Err(Error::domain("n_users", 0.0, ">= 1"));
    }
    check_q_eff(q_eff)?;
    Ok(q_eff.powi(-(n_users as i32)))
}

/// Expected residual memory wait per stored qubit: how long the average
/// link sits in memory between its own success and the last link's success.
pub fn expected_residual_wait(n_users: usize, q_eff: f64) -> Result<f64> {
    let all = expected_rounds_all_links(n_users, q_eff)?;
    Ok((all - 1.0 / q_eff).max(0.0))
}

/// Completion-time CDF of the parent protocol: probability that the switch
/// is ready to act within `k` rounds.
pub fn completion_cdf(k: u64, n_users: usize, q_eff: f64, kind: SwitchKind) -> f64 {
    1.0 - completion_tail(k, n_users, q_eff, kind)
}

/// `1 - completion_cdf(k)`, computed without cancellation.
pub fn completion_tail(k: u64, n_users: usize, q_eff: f64, kind: SwitchKind) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if q_eff >= 1.0 {
        return 0.0;
    }
    match kind {
        SwitchKind::SourceBased => {
            // max of N geometrics: F = (1 - (1-q)^k)^N.
            let miss = (k as f64 * f64::ln_1p(-q_eff)).exp();
            -f64::exp_m1(n_users as f64 * f64::ln_1p(-miss))
        }
        SwitchKind::MeasurementBased => {
            // geometric with success q^N: 1 - F = (1 - q^N)^k.
            let p_all = q_eff.powi(n_users as i32);
            (k as f64 * f64::ln_1p(-p_all)).exp()
        }
    }
}

/// Mixture weight of a GHZ/maximally-mixed blend whose fidelity equals `f`.
pub(crate) fn mixture_weight_from_fidelity(n_qubits: usize, fidelity: f64) -> Result<f64> {
    let floor = 0.5f64.powi(n_qubits as i32);
    if !(fidelity >= floor && fidelity <= 1.0) {
        return Err(Error::domain("fidelity", fidelity, "[1/2^N, 1]"));
    }
    Ok((fidelity - floor) / (1.0 - floor))
}

/// Fidelity of the source-based parent state.
///
/// Model: the local GHZ state is a mixture with fidelity `f_src`; each
/// stored Bell-pair qubit accumulates memory depolarization over its
/// expected residual wait; each teleportation applies the BSM keep `p_bsm`
/// to its destination qubit.
pub fn source_based_fidelity(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    let n = params.n_users;
    let q_eff = params.q_eff()?;
    let wait = expected_residual_wait(n, q_eff)?;
    let keep = params
        .p_bsm_param()
        .compose(memory_keep_after_mean_wait(params.p_mem_param(), wait)?);
    let p_ghz = mixture_weight_from_fidelity(n, params.f_src)?;
    mixture_fidelity(n, p_ghz, &vec![keep; n])
}

/// Fidelity of the measurement-based parent state: no memory, no local
/// preparation; the GHZ projective measurement applies `p_bsm` to each of
/// the N qubits.
pub fn measurement_based_fidelity(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    g_function(params.n_users, &vec![params.p_bsm_param(); params.n_users])
}

pub fn parent_fidelity(params: &NetworkParams, kind: SwitchKind) -> Result<f64> {
    match kind {
        SwitchKind::SourceBased => source_based_fidelity(params),
        SwitchKind::MeasurementBased => measurement_based_fidelity(params),
    }
}

/// Closed-form rate and fidelity of one parent architecture.
///
/// The rate divides the link-stage rounds by the switch's measurement
/// success: N Bell-state measurements for the source-based switch
/// (`q_bsm^-N` expected repetitions), one GHZ projective measurement for the
/// measurement-based switch (`1/q_ghz_meas`).
pub fn parent_rate(params: &NetworkParams, kind: SwitchKind) -> Result<ParentResult> {
    params.validate()?;
    let n = params.n_users;
    let q_eff = params.q_eff()?;
    let (rounds, overhead) = match kind {
        SwitchKind::SourceBased => (
            expected_rounds_all_links(n, q_eff)?,
            params.q_bsm.powi(-(n as i32)),
        ),
        SwitchKind::MeasurementBased => (
            measurement_based_expected_rounds(n, q_eff)?,
            1.0 / params.q_ghz_meas,
        ),
    };
    Ok(ParentResult {
        expected_rounds: rounds,
        fidelity: parent_fidelity(params, kind)?,
        rate_hz: 1.0 / (rounds * overhead * params.delta_t_s),
    })
}

/// Source-vs-measurement fidelity over a `(p_bsm, f_src)` plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityDifferenceGrid {
    pub p_bsm_values: Vec<f64>,
    pub f_src_values: Vec<f64>,
    /// Row-major over (p_bsm row, f_src column).
    pub source: Vec<f64>,
    pub measurement: Vec<f64>,
    /// `source - measurement`; positive cells favor the source-based switch.
    pub difference: Vec<f64>,
}

impl FidelityDifferenceGrid {
    pub fn index(&self, p_bsm_idx: usize, f_src_idx: usize) -> usize {
        p_bsm_idx * self.f_src_values.len() + f_src_idx
    }
}

pub fn parent_fidelity_difference_grid(
    params: &NetworkParams,
    p_bsm_values: &[f64],
    f_src_values: &[f64],
) -> Result<FidelityDifferenceGrid> {
    if p_bsm_values.is_empty() || f_src_values.is_empty() {
        return Err(Error::InvalidInput("empty sweep range".into()));
    }
    let cells = p_bsm_values.len() * f_src_values.len();
    let mut grid = FidelityDifferenceGrid {
        p_bsm_values: p_bsm_values.to_vec(),
        f_src_values: f_src_values.to_vec(),
        source: Vec::with_capacity(cells),
        measurement: Vec::with_capacity(cells),
        difference: Vec::with_capacity(cells),
    };
    for &p_bsm in p_bsm_values {
        for &f_src in f_src_values {
            let cell = NetworkParams {
                p_bsm,
                f_src,
                ..params.clone()
            };
            let src = source_based_fidelity(&cell)?;
            let meas = measurement_based_fidelity(&cell)?;
            grid.source.push(src);
            grid.measurement.push(meas);
            grid.difference.push(src - meas);
        }
    }
    Ok(grid)
}
