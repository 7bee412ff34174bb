//! Multipartite nonclassicality witness `||[rho, rho_A1 (x) ... (x) rho_AN]||_1`
//! with the spin-chain machinery needed to evaluate it on XY and
//! Ashkin-Teller ground states.

pub mod eigensolver;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod selftest;
pub mod spin_models;
pub mod states;
pub mod sweep;
pub mod witness;
pub mod xy_fermion;

pub use error::{Error, Result};
