//! Numeric kernels behind graph operations. Forward kernels write their
//! output buffer; backward kernels accumulate into gradient buffers.

pub mod attention;
pub mod conv;
pub mod elementwise;
pub mod norm;
