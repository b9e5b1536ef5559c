//! Simulation and design toolkit for kinesin-driven microtubule
//! molecular-communication channels.
//!
//! * [`geometry`]: rectangle, regular-polygon and polygon-ring cross-sections.
//! * [`motility`]: the stochastic gliding model with wall following.
//! * [`transport`]: zones, particle loading and complete channel uses.
//! * [`infotheory`]: empirical `f(y|x)`, mutual information, Blahut–Arimoto.
//! * [`optimizer`]: trip-rate model and closed-form optimal shapes.
//! * [`experiment`]: seeded trial farming, figure sweeps and file outputs.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod infotheory;
pub mod motility;
pub mod optimizer;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{ChannelShape, Point, ShapeKind};
pub use motility::{MotilityParams, MtPose};
