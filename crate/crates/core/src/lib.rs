//! Finite quotient rings of monogenic number-field integers, measures and
//! characters on them, and sum-product / Fourier-decay experiments.

pub mod audit;
pub mod error;
pub mod expansion;
pub mod field;
pub mod fourier;
pub mod glueing;
pub mod group;
pub mod identities;
pub mod ideal;
pub mod lattice;
pub mod measure;
pub mod poly;
pub mod ring;
pub mod set;
pub mod subring;

pub use error::{LabError, Result};
pub use field::NumberFieldSpec;
pub use ring::{Elem, FiniteQuotientRing};
pub use set::ElementSet;
