//! Nash equilibrium seeking with output regulation for networks of
//! uncertain nonlinear agents.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod checks;
pub mod config;
pub mod controller;
pub mod error;
pub mod expr;
pub mod game;
pub mod generator;
pub mod graph;
pub mod internal_model;
pub mod numerics;
pub mod plant;
pub mod simulation;

pub use controller::{control_law, escalate_gains, ControllerGains, EscalationPolicy};
pub use error::{Error, Result};
pub use game::{GameKind, GameSpec, GradientConstants};
pub use generator::{min_gamma2, GeneratorGains, GeneratorState};
pub use graph::CommGraph;
pub use internal_model::{InternalModelBank, InternalModelConfig, StabilizerPreset};
pub use numerics::Matrix;
pub use plant::{example_plant, Exosystem, PlantModel};
pub use simulation::{metrics, run, simulate, ClosedLoopTrajectory, Metrics, Scenario, ScenarioParts, SimSettings};
