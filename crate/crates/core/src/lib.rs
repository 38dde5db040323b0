//! Spectral Galerkin solver for the sublinear elliptic problem
//!
//! ```text
//! -Delta v = lambda v^q + f(v)   in Omega
//!        v > 0                   in Omega
//!        v = 0                   on the boundary
//! ```
//!
//! with 0 < q < 1 and a continuous f satisfying the sign and growth
//! conditions s f(s) >= 0 and s f(s) <= C |s|^{p+1}. The solver
//!
//! 1. replaces f by its Lipschitz difference-quotient approximations f_n,
//! 2. derives an explicit certificate (ball radius r, margin rho, threshold
//!    lambda_star, index n_star) under which the Galerkin map F has a zero
//!    inside |xi| <= r,
//! 3. finds that zero by a ball-constrained damped Newton method,
//! 4. drives the inner limit (basis dimension) and the outer limit
//!    (regularization index) to a verified positive solution, checked
//!    against the pure sublinear reference solution.
//!
//! Model domains are the interval (0, L) and rectangles (0, L1) x (0, L2),
//! where the Dirichlet eigenbasis is explicit.

pub mod certificate;
pub mod cli;
pub mod domain;
pub mod error;
pub mod galerkin;
pub mod nonlinearity;
pub mod numeric;
pub mod reference;
pub mod pipeline;
pub mod quadrature;
pub mod strauss;

pub use error::{Error, Result};
