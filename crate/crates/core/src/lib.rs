//! Exact finite-window computations of Hochschild, cyclic, periodic and
//! co-periodic cyclic homology over prime fields.

pub mod complex;
pub mod conjugate;
pub mod cyclic;
pub mod gf_linalg;
pub mod oracle;
pub mod periodic;
pub mod tate;
