//! Numerical laboratory for ℓ² decoupling experiments on hypersurfaces of
//! finite type.
//!
//! The library is organized around the objects the experiments manipulate:
//!
//! - [`dyadic`] — exact nonnegative dyadic rationals (`mantissa * 2^exponent`),
//!   the backbone of all cap geometry.
//! - [`geometry`] — intervals, caps, and boxes built from dyadic endpoints.
//! - [`surface`] — separable polynomial hypersurfaces `(ξ, Σφ_j(ξ_j))` and the
//!   `m`-nondegeneracy check for their one-dimensional phases.
//! - [`partition`] — anisotropic dyadic cap families covering `[0,1]^{n-1}`,
//!   the Ω-region splitting, coarse caps, and exact cover verification.
//! - [`rescale`] — the affine change of variables attached to a cap, the
//!   rescaled surface and caps, and the exact membership check for rescaled
//!   fine caps.
//! - [`extension`] — numerical evaluation of the Fourier extension operator
//!   on tensor lattices and point clouds, with a direct path and a fast
//!   separable path.
//! - [`analysis`] — L^p and weighted L^p norms, decoupling ratios, the
//!   trivial decoupling check at coarse scale, sharpness experiments, and
//!   power-law slope fits.
//!
//! Floating-point numerics are generic over the scalar type via [`Scalar`];
//! the concrete aliases below fix `f64` as the working precision.

pub mod analysis;
pub mod dyadic;
pub mod extension;
pub mod geometry;
pub mod partition;
pub mod rescale;
pub mod scalar;
pub mod surface;

pub use dyadic::DyadicRational;
pub use scalar::Scalar;

/// Working floating-point precision for the experiment pipeline.
pub type Real = f64;
/// Complex values at the working precision.
pub type Cplx = num_complex::Complex<Real>;
/// Axis-aligned box in physical space at the working precision.
pub type Box64 = geometry::RealBox<Real>;

/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("scale {got} is not of the form 2^(m*l) with m={m}, l>=1")]
    InvalidScale { got: String, m: u32 },
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("polynomial degree {degree} exceeds m={m}")]
    DegreeExceedsM { degree: usize, m: u32 },
    #[error("interval endpoints must satisfy lo < hi (lo={lo}, hi={hi})")]
    EmptyInterval { lo: String, hi: String },
    #[error("half-widths must be strictly positive")]
    NonPositiveHalfWidth,
    #[error(
        "quadrature resolution below the Nyquist rule in coordinate {coord}: \
         {got} nodes over length {len:.6e} but the lattice drives up to \
         {cycles:.3e} cycles across it (need >= {required})"
    )]
    NyquistViolation {
        coord: usize,
        got: usize,
        required: usize,
        len: f64,
        cycles: f64,
    },
    #[error("lattice step {got} exceeds the Nyquist bound 1/2")]
    StepTooLarge { got: f64 },
    #[error("operation requires a tensor lattice, got a point-cloud lattice")]
    NonTensorLattice,
    #[error("lattice does not cover the requested domain ({context})")]
    LatticeTooSmall { context: String },
    #[error("L^p norm requires p >= 1, got {got}")]
    InvalidP { got: f64 },
    #[error("cap family is empty")]
    EmptyFamily,
    #[error("cap is not contained in the rescaling cap ({context})")]
    CapNotInParent { context: String },
    #[error("cap does not match surface: {context}")]
    CapSurfaceMismatch { context: String },
    #[error("phase fails the nondegeneracy check at derivative order {order}")]
    Degenerate { order: u32 },
    #[error("slope fit requires at least 3 scales, got {got}")]
    TooFewScales { got: usize },
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
