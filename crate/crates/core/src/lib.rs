//! Simulation and robustness analysis of Rydberg-blockade controlled-phase
//! gates built from global square pulses.
//!
//! The crate propagates pulse sequences on the blockaded two- and three-atom
//! state space, evaluates the gate fidelity `F`, the return probability `P` and
//! the conditional fidelity `C = F/P` under coherent error models, and extracts
//! susceptibilities and series coefficients in the error strength.

pub mod angle;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod metrics;
pub mod optimize;
pub mod protocols;
pub mod refgates;
pub mod tables;

pub use angle::parse_angle;
pub use dynamics::{
    bloch_trajectory, build_hamiltonian, propagate, propagate_series, propagate_with, pulse_unitary, BlochSample,
    DopplerSign, DriveSpec, ErrorKind, ErrorModel, PulseSpec, Trajectory, UnitaryReport,
};
pub use error::{Error, Result};
pub use hilbert::{AtomLevel, BlockadedBasis, CMatrix, CVector, Config, Projector, StateVector};
pub use metrics::{
    cross_susceptibility, fidelity_triple, series_expansion, series_fit, susceptibilities, Evaluator,
    FidelityReport, Metric, SeriesFit, SusceptibilityTriple,
};
pub use optimize::{polish, s3_objective, search_s3, verify_ccz, ObjectiveReport, SearchResult};
pub use protocols::{
    ccz_sequence, parse_sequence, protocol_i, protocol_ia, protocol_ii, protocol_iia, protocol_iib, protocol_iii,
    serialize_sequence, ProtocolId, S3Params, Sequence, TargetGate, Variant,
};
pub use tables::{compute_table, paper_table, PaperRow, TableRow};
pub use refgates::{jaksch_sequence, levine_calibrate, levine_sequence, LevineParams};
