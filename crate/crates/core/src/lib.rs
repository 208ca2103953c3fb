//! Simulation and analysis toolkit for a tendon-driven, ball-and-socket tarsus.
//!
//! The crate is organised by subsystem:
//!
//! * [`chain`]: string-pull to bend kinematics of the five-segment tarsal chain,
//!   inverse pull solve, restoring spring force, stiffness curves and claw opening.
//! * [`leg`]: Denavit-Hartenberg forward/inverse kinematics of the 4-joint leg
//!   and retargeting of recorded trajectories onto it.
//! * [`contact`]: quasi-static hook/release simulation of the leg and tarsus on a
//!   compliant mesh.
//! * [`gait`]: motion-capture metrics, step-cycle segmentation and pooled
//!   two-sample t-tests.
//! * [`config`], [`io`], [`plot`], [`manifest`] and [`cli`]: the command-line
//!   plumbing around them.
//!
//! Angles are radians everywhere inside the library. Degrees appear only in
//! configuration files, CSV output and the CLI.

pub mod chain;
pub mod cli;
pub mod config;
pub mod contact;
pub mod error;
pub mod gait;
pub mod io;
pub mod leg;
pub mod manifest;
pub mod plot;

pub use error::{Error, Result};
