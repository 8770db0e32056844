//! Particle solver for measure sweeping processes.
//!
//! A crowd is an equal-weight empirical measure ([`transport::ParticleCloud`])
//! moved by a nonlocal velocity field ([`fields::NonlocalField`]) while being
//! kept inside a moving prox-regular region ([`geometry::MovingSet`]). The
//! [`sweeper`] module implements the catching-up scheme that alternates a
//! transport half-step with a projection onto the region, together with the
//! invariant checks used to validate runs. [`scenarios`] holds the bundled
//! experiments and the obstacle search, and [`cli`] the file formats.

pub mod cli;
pub mod fields;
pub mod geometry;
pub mod scenarios;
pub mod sweeper;
pub mod transport;

/// Points and vectors in the plane.
pub type Point = nalgebra::Vector2<f64>;
