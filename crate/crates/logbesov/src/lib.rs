//! Log-refined Besov norms, log-weighted Kato path norms and mild Navier-Stokes
//! solutions on the periodic torus, with a desk-scale norm-inflation laboratory.

pub mod besov_norms;
pub mod cli;
pub mod core_field;
pub mod error;
pub mod inflation;
pub mod littlewood_paley;
pub mod navier_stokes;
pub mod path_norms;

pub use error::{Error, Result};
