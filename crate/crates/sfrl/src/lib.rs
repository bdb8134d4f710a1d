//! Constructive one-shot coding schemes built on the Poisson functional
//! representation: exact channel simulation with common randomness,
//! variable-length lossy source coding, multiple description and Gray-Wyner
//! schemes, a Gelfand-Pinsker reduction, and excess-functional-information
//! bound calculators, together with the numerical machinery (Blahut-Arimoto,
//! convex mixing) the constructions require.

pub mod chansim;
pub mod coding;
pub mod efi;
pub mod error;
pub mod gp;
pub mod lossy;
pub mod multiterminal;
pub mod numopt;
pub mod pfr;
pub mod probspace;

pub use error::{Result, SfrlError};
