//! Exact Calderón–Zygmund theory on the homogeneous tree of order `m + 1`
//! with the weighted measure `mu({x}) = m^l(x)`.
//!
//! All measures, integrals and most norms are exact rationals. Suprema over
//! infinite set families are computed with cutoffs that carry a
//! certificate of where the enumeration stopped and why.

pub mod bmo;
pub mod error;
pub mod func;
pub mod hardy;
pub mod maximal;
pub mod runner;
pub mod scalar;
pub mod sets;
pub mod tree;

pub use error::{Error, Result};
pub use func::{Exponent, FinFunc};
pub use scalar::{NormValue, Scalar};
pub use sets::{AdmissibleTrapezoid, Band, CzSet};
pub use tree::{Tree, Vertex, Window};
