//! Grid-traffic simulation with emergency-vehicle (EMV) preemption.
//!
//! The crate combines four pieces that are usually studied separately:
//!
//! - [`net`] — road-network model: links, lanes, turn movements, signal phases;
//! - [`sim`] — discrete-time mesoscopic traffic dynamics with an EMV whose
//!   speed follows a fundamental-diagram model of the lane it preempts;
//! - [`routing`] — time-dependent shortest paths: Dijkstra pre-population
//!   plus cheap per-step relaxation, with static and periodic replanners;
//! - [`signal`] — lane/intersection pressure and the rule-based controllers
//!   (fixed time, max pressure, green wave);
//! - [`agents`], [`nn`], [`ma2c`] — the decentralized actor-critic layer:
//!   per-intersection agents with role-dependent rewards, a small
//!   reverse-mode numeric core, and the training loop;
//! - [`exp`] — scenario configs, episode runner, method comparisons and
//!   CSV emission used by the `emvgrid` binary.
//!
//! Start with the `examples/` directory; each example exercises one of the
//! capabilities above end to end.

pub mod error;
pub mod net;

pub use error::{Error, Result};
