//! Numerical toolkit for commuting matrix tuples in noncommutative polydomains.
//!
//! The crate is organised bottom-up: [`words`] supplies the free-monoid combinatorics,
//! [`cpmap`] the completely positive map engine, [`cone`] membership tests, [`fock`]
//! the truncated universal model, [`berezin`] kernels and transforms, and
//! [`similarity`] the similarity solvers with their certificates.

pub mod berezin;
pub mod cone;
pub mod config;
pub mod cpmap;
pub mod error;
pub mod fock;
pub mod gen;
pub mod linalg;
pub mod poly;
pub mod similarity;
pub mod words;

pub use config::Tolerances;
pub use error::{Error, Result};
