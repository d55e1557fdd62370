//! Numerical toolkit for regularity and sublinear Morse properties of
//! sequences and discrete subgroups in SL(d,R).

pub mod cartan;
pub mod controls;
pub mod error;
pub mod flags;
pub mod groups;
pub mod hilbert;
pub mod io;
pub mod matrix;
pub mod morse;
pub mod pipeline;
pub mod sublinear;
pub mod trajectory;
pub mod weyl;

pub use error::{Error, Result};
