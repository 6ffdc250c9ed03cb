//! An agent-based simulation of cultural evolution on a spatial grid.
//!
//! Agents occupy cells of a toroidal or bounded grid. Each performs one
//! "action": a combination of six body parts (arms, legs, head, hips) each
//! held still or moved left or right, giving 729 possibilities. Every
//! iteration an agent either *invents* — perturbing its own action part by
//! part, steered by learned biases toward movement and symmetry — or
//! *imitates*, scanning its neighbours (and any broadcasters) for a fitter
//! action. Fitness comes from a fixed landscape that rewards configurable
//! trends such as moving many parts or opposing arm movements.
//!
//! The crate exposes the model layers individually ([`action`], [`fitness`],
//! [`agent`], [`world`], [`engine`], [`metrics`]) plus a plain-text
//! configuration format ([`config`]) and batch experiment execution
//! ([`experiments`]); the `culture-grid` binary wraps those in a CLI.

pub mod action;
pub mod agent;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod fitness;
pub mod metrics;
pub mod rng;
pub mod world;

pub use action::{Action, BodyPart, Posture};
pub use engine::{run, run_with, RunOptions, RunResult, SimConfig, Simulation};
pub use fitness::{FitnessSpec, Landscape};
