pub mod acceptance;
pub mod control;
pub mod error;
pub mod experiments;
pub mod fde;
pub mod hopfield;
pub mod lkf;
pub mod plot;
pub mod report;
pub mod rows;
pub mod sdp;
pub mod specfun;
pub mod stability;

pub use error::{Error, Result};
