//! Analysis on Sierpinski-gasket type fractals.
//!
//! The crate covers three D3-symmetric post-critically finite fractals (the
//! Sierpinski gasket, the hexagasket and the level-3 gasket) and builds, for a
//! point `x` and a level `k`, a set `B_k(x)` on which every harmonic function
//! averages to its value at `x`. On the gasket it also evaluates the constants
//! `c_B = M_B(v) - v(x)` for the function `v` with `Δv = 1` and runs the
//! convergence experiment `(M_B(u) - u(x)) / c_B -> Δu(x)`.
//!
//! Module map:
//! - [`fractal`]: descriptors, addresses, cells, neighbors, vertex meshes.
//! - [`harmonic`]: extension matrices, renormalization, energies, Laplacians,
//!   the discrete Dirichlet solver.
//! - [`green`]: splines, the truncated Green's function and the series for `v`.
//! - [`integrate`]: exact and interval integration over cells and cutoff regions.
//! - [`meanvalue`]: the coefficient map, the neighborhood solver and `c_B`.
//! - [`io`]: CSV and JSON formats.

pub mod error;
pub mod fractal;
pub mod green;
pub mod harmonic;
pub mod integrate;
pub mod interval;
pub mod io;
pub mod meanvalue;

pub use error::{Error, Result};
pub use fractal::{Address, CellRef, Fractal, PcfDescriptor, PointClass};
pub use interval::IntervalValue;
