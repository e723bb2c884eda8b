//! Lindblad dynamics of the seven-site FMO complex and the correlation
//! measures evaluated on bipartite cuts of its single-excitation state.

#![allow(clippy::needless_range_loop)]

pub mod correlations;
pub mod cut;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
mod optim;
pub mod ree;
pub mod sampling;

pub use correlations::{
    classical_correlation, coherent_information, mutual_information, quantum_discord,
    single_excitation_ree, DiscordResult, MeasurementBasis, MeasurementOptions,
};
pub use cut::{
    block_decompose, delta_bar, embed_full, reduce_to_cut, BipartiteCut, CutState, Side,
};
pub use dynamics::{evolve, liouvillian, FmoState, InitialState, Method, Trajectory};
pub use error::{Error, Result};
pub use harness::{emit, run, standard_grid, CorrelationTrace, Measure, OutputFormat, RunConfig};
pub use linalg::{
    eig_hermitian, partial_trace_full, relative_entropy, von_neumann_entropy, CMatrix,
    DensityOperator, EigenDecomposition, HermitianOperator,
};
pub use model::{
    dephasing_rate_from_temperature, load_model, DecoherenceRates, FmoHamiltonian, FmoModel,
};
pub use ree::{doubly_excited_fraction, full_ree, FullReeOptions, FullReeResult, SeparableAnsatz};
