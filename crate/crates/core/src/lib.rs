//! Thermodynamic binding-energy models for transcription factors, fitted to
//! multi-round SELEX counts and checked against ChIP-seq peaks.

pub mod chipeval;
pub mod energy;
pub mod error;
pub mod fit;
pub mod io;
pub mod rng;
pub mod seq;
pub mod simulate;
pub mod thermo;

pub use energy::{EnergyMatrix, Naming, SiteScore};
pub use error::{Error, Result};
pub use seq::{Sequence, SequencePool, Strand};
pub use thermo::{DenominatorEstimate, SelexModel};
