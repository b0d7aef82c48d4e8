//! Thermodynamic formalism for subshifts of finite type carrying a real roof
//! function and a `Z^d`-valued cocycle.
//!
//! The crate is organized bottom-up:
//!
//! * [`sft`]: admissible words, cylinders, mixing and bridge words;
//! * [`model`]: roof, transfer term and cocycle, with validation and the
//!   roof refinement;
//! * [`transfer`]: the Ruelle operator on cylinders and its leading eigendata;
//! * [`pressure`]: the implicit pressure `P(u)`, `Ξ = ∇P`, and the rate
//!   function `H`;
//! * [`measure`]: cylinder and basic-set masses of the horocycle-invariant
//!   measures;
//! * [`flow`]: orbit simulation of the skew-product suspension and the
//!   block/suffix exchange surgeries;
//! * [`horosum`]: exact and Monte-Carlo preimage sums and the experiments
//!   built on them.

pub mod error;
pub mod flow;
pub mod horosum;
pub mod measure;
pub mod model;
pub mod pressure;
pub mod refs;
pub mod sft;
pub mod transfer;

pub use error::{Error, ErrorKind, Result};
pub use flow::{OrbitRecord, SymbolGenerator, SymbolicState};
pub use horosum::JQuery;
pub use measure::{BasicSet, BlMeasure, Density};
pub use model::{CocycleFn, FlowModel, ModelFile, RealFn, Validation};
pub use pressure::{PressureConfig, PressurePoint, RateValue};
pub use sft::{BridgeTable, TransitionStructure, Word};
pub use transfer::{GibbsData, Kernel, TransferMatrix};
