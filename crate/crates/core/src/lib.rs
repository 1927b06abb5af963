//! Rotor walks on periodic trees: offspring moments, spectral quantities and
//! simulation.

pub mod bundled;
pub mod experiments;
pub mod generator;
pub mod law;
pub mod mbp;
pub mod rotor;
pub mod spectral;

pub use bundled::bundled;
pub use generator::{parse_generator, parse_law, Generator, GeneratorError, GeneratorFile};
pub use law::{LawError, RotorLaw};
pub use mbp::{analyze, range_limit, Classification, MbpError, MomentData};
pub use rotor::{new_walk, sample_good_tree, Position, RunStatus, SinkReturnRecord, Violation, WalkState};
pub use spectral::{Matrix, RationalMatrix, SpectralError};
