//! Local modular Hamiltonians of the free scalar field on a ball.
//!
//! The crate has three layers. [`modular`] is a finite-dimensional standard
//! subspace calculus. [`field`], [`conformal`], [`massive`] and [`entropy`]
//! implement Klein-Gordon wave packets, the ball generators and the entropy
//! formula on spectral grids. [`oracle`] ties both together by discretizing
//! the ball subspace and comparing its modular Hamiltonian with the closed form.

pub mod ball;
pub mod conformal;
pub mod entropy;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod massive;
pub mod modular;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod tolerances;
pub mod verify;
pub mod wavespec;

pub use error::{Error, Result};
