pub mod baseline;
pub mod error;
pub mod harness;
pub mod model;
pub mod personalizer;
pub mod plant;
pub mod sysid;
pub mod trace;

pub use error::{Error, Result};
