//! Structure-preserving model reduction of second-order network systems
//! `M x'' + D x' + L x = F u` by clustering vertices with H2 dissimilarities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod gramian;
pub mod linalg;
pub mod matrixeq;
pub mod network;
pub mod pipeline;
pub mod reduce;
pub mod sys2;

pub use error::{Error, Result};
