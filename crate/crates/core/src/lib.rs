//! Quaternion quadratic equations `x^2 + bx + c = 0`.
//!
//! * [`quat`]: Hamilton quaternion arithmetic and the complex projections.
//! * [`qpoly`]: monic quadratics, prescribed-root construction, the companion
//!   real quartic `F = P conj(P)`.
//! * [`quartic`]: complex roots of `F` and recovery of the quaternion roots.
//! * [`iterfun`]: Left/Right-Newton and Halley iterations, orbits, cycles.
//! * [`invplane`]: finite-difference Jacobians and locally invariant planes.
//! * [`render`]: 2D polynomiographs written as PPM/PNG images.
//! * [`config`], [`bench`]: the reproducible job format and the timing table.

pub mod quat;
pub mod qpoly;
pub mod quartic;
pub mod iterfun;
pub mod invplane;
pub mod render;
pub mod config;
pub mod bench;

pub use iterfun::IterationMethod;
pub use qpoly::{QuadraticPoly, RealQuartic};
pub use quat::Quaternion;
pub use render::{RenderJob, Tracing};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Quat(#[from] quat::QuatError),
    #[error(transparent)]
    Poly(#[from] qpoly::PolyError),
    #[error(transparent)]
    Quartic(#[from] quartic::QuarticError),
    #[error(transparent)]
    InvPlane(#[from] invplane::InvPlaneError),
}
