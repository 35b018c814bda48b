//! Nonlinear 3D hexahedral finite elements.
//!
//! The crate provides a fully integrated trilinear hexahedron (`Q1`) and two
//! single-integration-point variants with enhanced assumed strains and
//! analytically integrated hourglass stabilization. They differ only in how
//! the inverse Jacobian is expanded about the element center: `Q1STc` uses a
//! linearized expansion, `Q1STcPlus` carries the exact inverse through a
//! truncated Taylor arithmetic.
//!
//! Derivatives are obtained with forward-mode automatic differentiation
//! ([`autodiff`]). Constitutive models live in [`material`], element kernels
//! in [`element`], mesh builders and exporters in [`mesh`], and the global
//! Newton solver in [`solver`].

pub mod autodiff;
pub mod element;
pub mod error;
pub mod material;
pub mod mesh;
pub mod solver;
pub mod tensor;

pub use error::{FemError, Result};
