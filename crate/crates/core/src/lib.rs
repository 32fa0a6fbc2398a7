//! Analytical models and stochastic simulators for distributing N-qubit GHZ
//! states over a switched quantum network.
//!
//! The crate covers three layers:
//!
//! - single-switch ("parent") distribution, either source-based
//!   (memory-assisted teleportation of a locally prepared GHZ state) or
//!   measurement-based (a GHZ projective measurement on freshly generated
//!   Bell pairs), with closed-form rate and fidelity models ([`parent`]);
//! - the recursive two-dimensional repeater that fuses N parent states into
//!   one GHZ state spanning roughly twice the distance per nesting level,
//!   with rate and fidelity models ([`repeater`]);
//! - two independent reference implementations: a seeded, reproducible
//!   Monte Carlo protocol simulator ([`montecarlo`]) and an exact
//!   density-matrix calculator for small systems ([`oracle`]).
//!
//! Closed-form results are checked against both references; where a formula
//! and a reference disagree, the reference is the ground truth and the gap is
//! reported rather than hidden.

pub mod error;
pub mod models;
pub mod montecarlo;
pub mod oracle;
pub mod parent;
pub mod repeater;

pub use error::{Error, Result};
pub use models::{DepolarizingParam, NetworkParams};
pub use parent::SwitchKind;
