//! Spectral analysis of real-valued time series through a coherent-state
//! embedding.
//!
//! Each observation is mapped to a Gaussian coherent-state amplitude; the
//! normalized matrix of pairwise state overlaps is a unit-trace Gram
//! matrix whose eigenvalues form the entanglement spectrum of the series.
//! Entropies of that spectrum count the effective number of distinguishable
//! values visited, majorization of consecutive spectra classifies evolution
//! regimes, and per-window entropies act as volatility indicators that can
//! be compared against reference indices.
//!
//! Modules follow the pipeline order:
//!
//! * [`timeseries`] — CSV ingestion, calendar partitioning, date alignment
//! * [`coherent`] — amplitude embedding and pairwise overlap kernels
//! * [`eigen`] — dense symmetric eigensolvers (Jacobi, Householder + QL)
//! * [`gram`] — normalized overlap matrices, spectra, Schmidt clock basis
//! * [`entropy`] — von Neumann / Rényi / Tsallis functionals and closed forms
//! * [`majorization`] — partial sums, spectrum comparison, regime labels
//! * [`analysis`] — cumulative and windowed experiments, reports, emission
//! * [`selfcheck`] — embedded fixtures behind the CLI `selfcheck` command

pub mod analysis;
pub mod coherent;
pub mod eigen;
pub mod entropy;
pub mod gram;
pub mod majorization;
pub mod selfcheck;
pub mod timeseries;
pub mod tolerances;

mod util;

pub use tolerances::Tolerances;
