pub mod autoenc;
pub mod baseline;
pub mod datasets;
pub mod error;
pub mod mappers;
pub mod neural;
pub mod ot;
pub mod points;

pub use error::{Error, Result};
pub use points::PointSet;
