//! Model-based reinforcement learning played as a two-player game.
//!
//! The policy player maximizes return inside a learned dynamics model while the
//! model player minimizes prediction error under the policy's state visitation.
//! The crate provides:
//!
//! - [`mdp`]: exact tabular MDP machinery (policy evaluation, value iteration,
//!   visitation distributions, TV/KL distances).
//! - [`envs`]: desk-scale worlds (goal gridworld, point reacher, pendulum) with
//!   perturbation hooks and a line-delimited trajectory record format.
//! - [`nn`]: small fully connected networks with manual backpropagation and Adam.
//! - [`dynamics`]: the model player, an ensemble of delta-parameterized one-step models.
//! - [`policy`]: the policy player, model-based natural policy gradient.
//! - [`game`]: the PAL, MAL, GDA and BR solvers sharing one training loop.
//! - [`verify`]: DP-based certification of the simulation, error-amplification,
//!   performance-difference and equilibrium bounds.
//! - [`cli`]: configuration, run manifests and the `train`/`verify`/`diagnose` commands.

pub mod cli;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod game;
pub mod mdp;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
