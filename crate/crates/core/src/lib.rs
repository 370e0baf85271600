//! Two-vehicle unsignalized-intersection negotiation.
//!
//! The crate builds clothoid turn trajectories parameterized by a pair of
//! free waypoints per vehicle, scores joint strategies with safety and
//! efficiency indicators, and solves the resulting generalized Nash
//! equilibrium problem with a seeded particle swarm over the joint waypoint
//! space. The `sim` module ties everything together behind scenario files
//! and deterministic CSV/JSON/SVG artifacts.

pub mod collision;
pub mod game;
pub mod geometry;
pub mod motion;
pub mod numeric;
pub mod payoff;
pub mod sim;
