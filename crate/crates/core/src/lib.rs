//! Agent-based transport simulation for sizing a Robo-Taxi fleet.
//!
//! The crate covers the whole pipeline: a synthetic population is drawn from
//! household microdata ([`synthpop`]), each person receives a daily activity
//! plan ([`activitygen`]), plans are executed over a capacitated queue network
//! together with a dispatched Robo-Taxi fleet ([`mobsim`], [`fleet`]), scored
//! with a socio-professional scoring function including user trust and
//! willingness-to-use factors ([`scoring`]), and evolved until the mean score
//! settles ([`replanning`]). [`metrics`] computes the fleet KPIs and
//! [`scenario`] wires everything into runs and fleet-size sweeps.

pub mod activitygen;
pub mod csvio;
pub mod error;
pub mod fleet;
pub mod ids;
pub mod metrics;
pub mod mobsim;
pub mod network;
pub mod plan;
pub mod replanning;
pub mod rng;
pub mod scenario;
pub mod scoring;
pub mod synthpop;
pub mod types;

pub use error::{Error, Result};
