//! Geometry of HNN extensions of `Z^n`: Britton normal forms, the Bass-Serre
//! tree, the warped strip space `Y`, their fibre product `M`, and empirical
//! compression-exponent estimates for explicit embeddings into `l^p`.

pub mod bass_serre;
pub mod compression;
pub mod envelope;
pub mod error;
pub mod group;
pub mod lattice;
pub mod millefeuille;
pub mod sampling;
pub mod y_grid;
pub mod y_space;

pub use error::{Error, Result};
pub use group::{GroupElement, Letter, NTilde, Presentation, WordBall};
