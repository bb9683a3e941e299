//! Numerical laboratory for solitary waves of the variable-bottom generalized
//! KdV equation `u_t = -(u_xx + f(u) - b(t,x) u)_x` on a periodic box.
//!
//! The pieces, bottom-up:
//!
//! * [`grid`]: periodic fields and Fourier-multiplier calculus.
//! * [`soliton`]: the profiles `Q_{c,a}`, tangent vectors and `delta(c)`.
//! * [`regsym`]: the antiderivative `K` and its regularization `(d_x + alpha)^{-1}`.
//! * [`functionals`]: Hamiltonian, momentum, Lyapunov functional, remainders.
//! * [`hessian`]: the linearized operator, its spectrum and constrained coercivity.
//! * [`modulation`]: the symplectic decomposition `u = Q_{c,a} + xi`.
//! * [`pde`]: bottom profiles and the exponential time stepper.
//! * [`effective`]: the reduced ODE for `(a, c)`.
//! * [`noise`]: seeded band-limited perturbations.
//! * [`oracles`]: slow independent references for the pinned constants.
//! * [`experiment`]: configuration, verification suites and PDE/ODE comparisons.

pub mod effective;
pub mod error;
pub mod experiment;
pub mod functionals;
pub mod grid;
pub mod hessian;
pub mod modulation;
pub mod noise;
pub mod oracles;
pub mod parallel;
pub mod pde;
pub mod regsym;
pub mod soliton;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
