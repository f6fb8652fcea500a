//! Matrix cotranslations over left translations groupoids: construction,
//! law verification, continuous-time evolutions and partial cotranslations.

pub mod cotranslation;
pub mod error;
pub mod eval;
pub mod evolution;
pub mod group;
pub mod matrix;
pub mod partial;
pub mod random;
pub mod report;
mod svd;

pub use error::{Error, Result};
pub use eval::{ElementMap, MatrixCocycle, PairMap};
pub use group::{FiniteTable, GroupElement, GroupHandle, GroupKind, Word};
pub use matrix::{Mat, RankInfo, SubspaceBasis, Svd};
pub use report::{laws, LawEntry, Verdict, VerificationReport};
pub use cotranslation::{Cotranslation, CotranslationKind, DifferenceSeq, Hull};
pub use evolution::{CoeffFn, EvolutionGrid, Interp};
pub use partial::{ConjugationMap, PartialCotranslation, PartialKind, ProjectorMap};
