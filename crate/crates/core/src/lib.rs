//! Equilibria, bifurcation sets and critical transitions for binary-choice
//! market models: logit choice, social decision theory, two-player quantal
//! response equilibrium, the cusp catastrophe, coupled "twin crises" markets,
//! and an agent-based price simulator.

pub mod abm;
pub mod cusp;
pub mod error;
pub mod fixedpoint;
pub mod game;
pub mod logit;
pub mod qre;
pub mod quad;
pub mod sdt;
pub mod twin;
pub mod verify;

pub use error::{Error, Result};
