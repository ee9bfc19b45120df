//! Quantum gate verification (QGV) and process tomography (QPT) simulation.
//!
//! * [`linalg`]: dense complex matrices and a Hermitian eigensolver.
//! * [`channels`]: Kraus channels, noise models, chi matrices, fidelities.
//! * [`verification`]: probing strategies, Ω and its spectral gap.
//! * [`certify`]: confidence bounds and their inversion, log-log fits.
//! * [`simulate`]: seeded Monte-Carlo sampling of verification runs and tomography counts.
//! * [`tomography`]: linear inversion and maximum-likelihood process reconstruction.
//! * [`io`]: the JSON/JSONL/CSV file formats.
//! * [`cli`]: the `qgv` command-line front end.

pub mod certify;
pub mod channels;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod simulate;
pub mod tomography;
pub mod verification;

pub use error::{Error, Result};
