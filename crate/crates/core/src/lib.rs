#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod enumerate;
pub mod error;
pub mod exact;
pub mod gadget;
pub mod glauber;
pub mod graph;
pub mod io;
pub mod meanfield;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod reduction;
pub mod spectral;

pub use error::{Error, Result};
