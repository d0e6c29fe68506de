//! Angular-momentum algebra: Wigner symbols, channel enumeration and the
//! transformations between the case-(e), case-(c) and product bases.

pub mod block;
pub mod channels;
pub mod halfint;
pub mod product;
pub mod wigner;

use thiserror::Error;

pub use block::{enumerate_channels, Basis, ChannelBlock};
pub use channels::{
    allowed_excited_blocks, case_e_channels, CaseCChannel, CaseEChannel, Manifold, Parity, PartialWave,
    ProductChannel,
};
pub use halfint::HalfInt;
pub use product::ProductSpace;
pub use wigner::{clebsch_gordan, wigner3j, wigner6j, wigner9j};

#[derive(Debug, Error)]
pub enum AngularError {
    #[error("total angular momentum must be non-negative, got T={0}")]
    NegativeT(i32),
    #[error("invalid label: {0}")]
    BadLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
