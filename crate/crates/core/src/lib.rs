//! Matrix-free lattice QCD compute kit.
//!
//! The crate provides the building blocks of a Wilson-fermion solver pipeline
//! together with an analytical performance model for FPGA deployments of the
//! same kernel:
//!
//! * [`geometry`]: 4D periodic lattice addressing (site indexing, neighbours).
//! * [`algebra`]: complex, colour (SU(3)) and spin arithmetic, generic over
//!   the working precision.
//! * [`su3`]: 10-parameter gauge-link compression with trig-free
//!   reconstruction.
//! * [`fields`]: gauge and spinor fields, deterministic random
//!   initialization, global reductions.
//! * [`io`]: a bit-exact binary file format for fields.
//! * [`dslash`]: the Wilson Dirac stencil operator, its adjoint, the normal
//!   operator, and exact operation accounting.
//! * [`solver`]: plain and residual-guided (mixed-precision) conjugate
//!   gradient solvers for the normal equations.
//! * [`perf`]: the embedded-memory vs. DDR-streaming performance model.

// Index loops over fixed spin/colour ranges mirror the component notation
// the kernels are written in.
#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod dslash;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod perf;
pub mod solver;
pub mod su3;
