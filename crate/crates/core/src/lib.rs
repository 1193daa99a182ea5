//! Exact and numeric toolkit for polynomial-in-momenta first integrals
//! (Killing tensors) of geodesic flows, with product-manifold
//! decomposition into ladder terms.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod numeric;
pub mod product;
pub mod spaces;
