//! Simulation and verification toolkit for entrywise nonlinear transforms of
//! symmetric invariant random matrix ensembles.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! ensemble (polynomials in GOE letters)
//!     -> entrywise nonlinearity  -> spectra -> empirical cumulants
//!     -> gaussian surrogate      -> spectra -> comparison report
//! ```
//!
//! with a combinatorial core (set partitions, classical/free cumulant
//! transforms, Wick calculus) that supplies both the analytic predictions and
//! the independent oracles used in tests.

pub mod cumulant;
pub mod ensemble;
pub mod gaussian;
pub mod lab;
pub mod matrix;
pub mod partition;
pub mod spectral;
