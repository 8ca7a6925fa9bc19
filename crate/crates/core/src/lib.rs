//! Differential and Feistel boomerang tables (DDT, BCT, FBCT, FBDT, FBET) of
//! S-boxes over GF(2^n), computed by exhaustive enumeration, together with
//! closed-form predictions for the power map `x^(2^(m+1)-1)` and a
//! verification engine that checks one against the other.

pub mod closedform;
pub mod error;
pub mod gf2n;
pub mod sbox;
pub mod spectrum;
pub mod tables;
pub mod verify;

pub use closedform::{ClosedForm, EntryClassification};
pub use error::{Error, Result};
pub use gf2n::{Elem, FieldSpec};
pub use sbox::SBox;
pub use spectrum::{Domain, Spectrum};
pub use tables::{SparseTable, Table2D, TableKind};
pub use verify::{Mismatch, Verifier, VerifyReport};
