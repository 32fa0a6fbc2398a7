//! Physical and stochastic primitives shared by the higher-level modules:
//! link success probabilities, parallel-attempt boosting, and depolarizing
//! channel bookkeeping.
//!
//! Every depolarizing channel in this crate is parameterized by its *keep*
//! probability `p`: the qubit is untouched with probability `p` and replaced
//! by the single-qubit maximally mixed state otherwise. Composing two
//! channels multiplies their keep values. Memory decoherence is a per-time-
//! step depolarizing channel with keep `p_mem`, composed multiplicatively
//! over the steps a qubit waits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parent::SwitchKind;

/// Keep-probability of a single-qubit depolarizing channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepolarizingParam(f64);

impl DepolarizingParam {
    /// The noiseless channel.
    pub const IDENTITY: DepolarizingParam = DepolarizingParam(1.0);

    pub fn new(keep: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&keep) || !keep.is_finite() {
            return Err(Error::domain("keep", keep, "[0, 1]"));
        }
        Ok(DepolarizingParam(keep))
    }

    pub fn keep(self) -> f64 {
        self.0
    }

    /// Sequential application of `self` and `other`.
    pub fn compose(self, other: DepolarizingParam) -> DepolarizingParam {
        DepolarizingParam(self.0 * other.0)
    }
}

/// Composition of two depolarizing channels; keep values multiply.
pub fn compose_depolarizing(a: DepolarizingParam, b: DepolarizingParam) -> DepolarizingParam {
    a.compose(b)
}

/// Residual keep after a qubit waits `t_wait` time steps in memory.
pub fn memory_keep_after_wait(p_mem: DepolarizingParam, t_wait: u64) -> DepolarizingParam {
    DepolarizingParam(p_mem.0.powf(t_wait as f64))
}

/// Residual keep for a fractional (mean) waiting time, used by the
/// closed-form fidelity models where waits enter through their expectation.
pub fn memory_keep_after_mean_wait(p_mem: DepolarizingParam, t_wait: f64) -> Result<DepolarizingParam> {
    if !t_wait.is_finite() || t_wait < 0.0 {
        return Err(Error::domain("t_wait", t_wait, ">= 0"));
    }
    Ok(DepolarizingParam(p_mem.0.powf(t_wait)))
}

/// Success probability of a single Bell-pair generation attempt over a fiber
/// link of length `l0_in_km`: `0.5 * eta_c^2 * exp(-l0_in / l_att)`.
///
/// The 0.5 prefactor is a fixed protocol factor.
pub fn link_success_probability(l0_in_km: f64, eta_c: f64, l_att_km: f64) -> Result<f64> {
    if !l0_in_km.is_finite() || l0_in_km < 0.0 {
        return Err(Error::domain("l0_in_km", l0_in_km, ">= 0"));
    }
    if !l_att_km.is_finite() || l_att_km <= 0.0 {
        return Err(Error::domain("l_att_km", l_att_km, "> 0"));
    }
    if !(0.0..=1.0).contains(&eta_c) || !eta_c.is_finite() {
        return Err(Error::domain("eta_c", eta_c, "[0, 1]"));
    }
    Ok(0.5 * eta_c * eta_c * (-l0_in_km / l_att_km).exp())
}

/// Per-node success probability when each node fires `parallel_attempts`
/// independent attempts per time step: `1 - (1 - q_link)^attempts`.
///
/// Monotone nondecreasing in both arguments.
pub fn effective_success_probability(q_link: f64, parallel_attempts: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&q_link) || !q_link.is_finite() {
        return Err(Error::domain("q_link", q_link, "[0, 1]"));
    }
    if parallel_attempts == 0 {
        return Err(Error::domain("parallel_attempts", 0.0, ">= 1"));
    }
    // -expm1(a * ln(1-q)) keeps precision when q_link is small.
    Ok(-f64::exp_m1(f64::from(parallel_attempts) * f64::ln_1p(-q_link)))
}

/// All physical and protocol parameters of the network under study.
///
/// `l0_in_km` is the distance between neighbouring end nodes of the overall
/// protocol; at nesting level `m` the elementary links span
/// `l0_in_km / 2^(m-1)`. `nesting_level` (repeater recursion depth, 1 =
/// direct distribution) and `parallel_attempts` (per-round link multiplexing)
/// are distinct knobs. `q_bsm` is the Bell-state measurement *success*
/// probability (a rate quantity); `p_bsm` is its depolarizing keep parameter
/// (a fidelity quantity). The two are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    /// Number of end users N >= 2.
    pub n_users: usize,
    /// End-node spacing in kilometers.
    pub l0_in_km: f64,
    /// Fiber attenuation length in kilometers.
    pub l_att_km: f64,
    /// Source/detector coupling efficiency.
    pub eta_c: f64,
    /// Bell-state measurement success probability.
    pub q_bsm: f64,
    /// Bell-state measurement depolarizing keep parameter (1 = noiseless).
    pub p_bsm: f64,
    /// Per-time-step memory depolarizing keep parameter.
    pub p_mem: f64,
    /// Duration of one time step, seconds.
    pub delta_t_s: f64,
    /// Repeater nesting depth m >= 1; 1 means direct distribution.
    pub nesting_level: u32,
    /// Bell-pair generation attempts per node per time step.
    pub parallel_attempts: u32,
    /// Fidelity of the GHZ state prepared locally by a source-based switch.
    pub f_src: f64,
    /// Success probability of the measurement-based switch's GHZ projective
    /// measurement.
    pub q_ghz_meas: f64,
    /// Parent architecture used at the elementary level.
    pub switch_kind: SwitchKind,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            n_users: 3,
            l0_in_km: 50.0,
            l_att_km: 20.0,
            eta_c: 0.9,
            q_bsm: 0.9,
            p_bsm: 0.97,
            p_mem: 0.995,
            delta_t_s: 1e-6,
            nesting_level: 1,
            parallel_attempts: 1,
            f_src: 0.98,
            q_ghz_meas: 1.0,
            switch_kind: SwitchKind::SourceBased,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::domain("n_users", self.n_users as f64, ">= 2"));
        }
        if !self.l0_in_km.is_finite() || self.l0_in_km < 0.0 {
            return Err(Error::domain("l0_in_km", self.l0_in_km, ">= 0"));
        }
        if !self.l_att_km.is_finite() || self.l_att_km <= 0.0 {
            return Err(Error::domain("l_att_km", self.l_att_km, "> 0"));
        }
        if !(0.0..=1.0).contains(&self.eta_c) {
            return Err(Error::domain("eta_c", self.eta_c, "[0, 1]"));
        }
        if !(self.q_bsm > 0.0 && self.q_bsm <= 1.0) {
            return Err(Error::domain("q_bsm", self.q_bsm, "(0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p_bsm) {
            return Err(Error::domain("p_bsm", self.p_bsm, "[0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p_mem) {
            return Err(Error::domain("p_mem", self.p_mem, "[0, 1]"));
        }
        if !self.delta_t_s.is_finite() || self.delta_t_s <= 0.0 {
            return Err(Error::domain("delta_t_s", self.delta_t_s, "> 0"));
        }
        if self.nesting_level == 0 {
            return Err(Error::domain("nesting_level", 0.0, ">= 1"));
        }
        if self.parallel_attempts == 0 {
            return Err(Error::domain("parallel_attempts", 0.0, ">= 1"));
        }
        let f_min = 0.5f64.powi(self.n_users as i32);
        if !(self.f_src >= f_min && self.f_src <= 1.0) {
            return Err(Error::domain("f_src", self.f_src, "[1/2^N, 1]"));
        }
        if !(self.q_ghz_meas > 0.0 && self.q_ghz_meas <= 1.0) {
            return Err(Error::domain("q_ghz_meas", self.q_ghz_meas, "(0, 1]"));
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Elementary link length once the nesting level has subdivided the
    /// end-node spacing: `l0_in_km / 2^(nesting_level - 1)`.
    pub fn elementary_link_km(&self) -> f64 {
        self.l0_in_km / f64::powi(2.0, self.nesting_level as i32 - 1)
    }

    /// Single-attempt link success probability over one elementary link.
    pub fn q_link(&self) -> Result<f64> {
        link_success_probability(self.elementary_link_km(), self.eta_c, self.l_att_km)
    }

    /// Effective per-node per-step success probability including parallel
    /// attempts.
    pub fn q_eff(&self) -> Result<f64> {
        effective_success_probability(self.q_link()?, self.parallel_attempts)
    }

    pub fn p_mem_param(&self) -> DepolarizingParam {
        DepolarizingParam(self.p_mem)
    }

    pub fn p_bsm_param(&self) -> DepolarizingParam {
        DepolarizingParam(self.p_bsm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_probability_examples() {
        // Zero distance: the protocol factor times the coupling alone.
        assert_eq!(link_success_probability(0.0, 1.0, 20.0).unwrap(), 0.5);
        // Zero coupling kills the link entirely.
        assert_eq!(link_success_probability(123.0, 0.0, 20.0).unwrap(), 0.0);
        // One attenuation length: 0.5 / e.
        let q = link_success_probability(20.0, 1.0, 20.0).unwrap();
        assert!((q - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((q - 0.18393972058572117).abs() < 1e-12);
    }

    #[test]
    fn link_probability_strictly_decreasing_in_distance() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let l0 = f64::from(i) * 2.5;
            let q = link_success_probability(l0, 0.9, 20.0).unwrap();
            assert!(q < prev, "q must strictly decrease, l0={l0}");
            assert!((0.0..=0.5).contains(&q));
            prev = q;
        }
        // Value at l0 = 0 equals 0.5 * eta_c^2.
        let q0 = link_success_probability(0.0, 0.9, 20.0).unwrap();
        assert!((q0 - 0.5 * 0.81).abs() < 1e-15);
    }

    #[test]
    fn link_probability_rejects_bad_inputs() {
        assert!(link_success_probability(-1.0, 0.5, 20.0).is_err());
        assert!(link_success_probability(1.0, 1.5, 20.0).is_err());
        assert!(link_success_probability(1.0, 0.5, 0.0).is_err());
        assert!(link_success_probability(f64::NAN, 0.5, 20.0).is_err());
    }

    #[test]
    fn effective_probability_examples() {
        assert_eq!(effective_success_probability(0.3, 1).unwrap(), 0.3);
        assert_eq!(effective_success_probability(1.0, 7).unwrap(), 1.0);
        assert!((effective_success_probability(0.5, 2).unwrap() - 0.75).abs() < 1e-15);
        assert!(effective_success_probability(0.5, 0).is_err());
    }

    #[test]
    fn effective_probability_monotone_in_attempts() {
        for &q in &[0.0, 0.01, 0.1, 0.5, 0.9, 1.0] {
            let mut prev = 0.0;
            for a in 1..40 {
                let qe = effective_success_probability(q, a).unwrap();
                assert!(qe >= prev - 1e-15, "q={q} a={a}");
                assert!((0.0..=1.0).contains(&qe));
                prev = qe;
            }
        }
    }

    #[test]
    fn memory_keep_examples() {
        let p = DepolarizingParam::new(0.9).unwrap();
        assert_eq!(memory_keep_after_wait(p, 0).keep(), 1.0);
        assert_eq!(
            memory_keep_after_wait(DepolarizingParam::IDENTITY, 1000).keep(),
            1.0
        );
        assert!((memory_keep_after_wait(p, 2).keep() - 0.81).abs() < 1e-15);
        assert!(memory_keep_after_mean_wait(p, -0.5).is_err());
    }

    #[test]
    fn compose_examples() {
        let x = DepolarizingParam::new(0.37).unwrap();
        assert_eq!(compose_depolarizing(DepolarizingParam::IDENTITY, x), x);
        assert_eq!(
            compose_depolarizing(DepolarizingParam::new(0.0).unwrap(), x).keep(),
            0.0
        );
        let c = compose_depolarizing(
            DepolarizingParam::new(0.8).unwrap(),
            DepolarizingParam::new(0.5).unwrap(),
        );
        assert!((c.keep() - 0.4).abs() < 1e-15);
        // Commutative and associative.
        let (a, b) = (DepolarizingParam::new(0.7).unwrap(), x);
        assert_eq!(a.compose(b), b.compose(a));
    }

    #[test]
    fn depolarizing_param_range_checked() {
        assert!(DepolarizingParam::new(-0.1).is_err());
        assert!(DepolarizingParam::new(1.1).is_err());
        assert!(DepolarizingParam::new(f64::NAN).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(NetworkParams::default().validate().is_ok());
        let bad = NetworkParams {
            q_bsm: 0.0,
            ..NetworkParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = NetworkParams {
            n_users: 1,
            ..NetworkParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = NetworkParams {
            f_src: 0.05,
            ..NetworkParams::default()
        };
        assert!(bad.validate().is_err(), "f_src below 1/2^N must be rejected");
    }

    #[test]
    fn elementary_link_halves_per_level() {
        let mut p = NetworkParams {
            l0_in_km: 80.0,
            ..NetworkParams::default()
        };
        assert_eq!(p.elementary_link_km(), 80.0);
        p.nesting_level = 2;
        assert_eq!(p.elementary_link_km(), 40.0);
        p.nesting_level = 3;
        assert_eq!(p.elementary_link_km(), 20.0);
    }
}
