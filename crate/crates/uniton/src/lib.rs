//! Loop-group factorizations and the DPW construction of harmonic maps of finite uniton
//! type into inner symmetric spaces.

pub mod dpw;
pub mod error;
pub mod factor;
pub mod io;
pub mod laurent;
pub mod liectx;
pub mod linalg;
pub mod roots;
pub mod sample;
pub mod verify;
pub mod willmore;

pub use error::{Error, Result};
