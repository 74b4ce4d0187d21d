pub mod error;
pub mod fixtures;
pub mod gmwm;
pub mod implied;
pub mod inference;
pub mod models;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod wavelet;
pub mod wv;

pub use error::{Error, Result};
