//! LDPC decoding on Tanner graphs: belief propagation, min-sum variants,
//! and weighted neural min-sum decoders trained by unrolled backpropagation.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod channel;
pub mod codes;
pub mod decode;
pub mod error;
pub mod learn;
pub mod tanner;
pub mod traindata;

pub use error::{Error, Result};
