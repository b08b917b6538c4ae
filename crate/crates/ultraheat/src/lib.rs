//! Numerical machinery for heat flow and stochastic heat equations over the
//! ultrametric spaces `Q_p^N`.
//!
//! The crate is organised in layers:
//!
//! * [`padic`] — exact arithmetic on `Q_p`: valuations, norms, fractional
//!   parts and the additive character `chi_p(y) = exp(2*pi*i*{y}_p)`.
//! * [`lattice`] — finite ball-coset discretisations of `Q_p^N` and fields
//!   (complex-valued step functions) living on them.
//! * [`transform`] — the Fourier transform between a position lattice and its
//!   dual, both as a naive character sum and as a radix-`p` fast transform.
//! * [`kernels`] — elliptic symbols `|a(xi)|_p^beta`, heat multipliers and
//!   heat kernels, Riesz kernels and Bessel potentials.
//! * [`spectral`] — radial spectral measures, their shell masses and the
//!   integrability criteria that decide which noises are admissible.
//! * [`noise`] — spectral sampling of the spatially homogeneous Gaussian
//!   noise, cylindrical Brownian motions and the Ito isometry.
//! * [`solver`] — mild-solution machinery: Picard iteration, an exponential
//!   Euler time stepper, the additive-noise variance oracle and hypothesis
//!   checks.
//!
//! All lattice coordinates and symbol evaluations are exact (big integer /
//! rational); floating point enters only through transcendental functions
//! and the final complex summations.

pub mod kernels;
pub mod lattice;
pub mod noise;
pub mod padic;
pub mod solver;
pub mod spectral;
pub mod stats;
pub mod transform;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice of p^{{N(M+m)}} = {cells} cells exceeds the cap of {cap}")]
    TooLarge { cells: u128, cap: u128 },
    #[error("lattice parameters invalid: {0}")]
    BadLattice(String),
    #[error("field is on the {found:?} side, expected {expected:?}")]
    SideMismatch {
        expected: lattice::Side,
        found: lattice::Side,
    },
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("polynomial is not homogeneous: monomial of degree {found} among degree {expected}")]
    NotHomogeneous { expected: u32, found: u32 },
    #[error("polynomial is not elliptic: |a|_p vanishes at working precision on the unit shell (cell {cell}, valuation {valuation:?})")]
    NotElliptic {
        cell: usize,
        valuation: Option<i64>,
    },
    #[error("symbol evaluation exceeded the working precision; raise the digit budget")]
    PrecisionOverflow,
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("shell masses are undefined for atomic measures; use the atom list")]
    UseAtoms,
    #[error("kernel descriptor is not radial")]
    NotRadial,
    #[error("integrand revealed increment {0} before it was set; step processes must be predictable")]
    NotPredictable(usize),
    #[error("time grids differ")]
    GridMismatch,
    #[error("coefficient {name} violates its declared Lipschitz constant {declared} (observed slope {observed})")]
    LipschitzViolation {
        name: String,
        declared: f64,
        observed: f64,
    },
    #[error("operation requires an additive-noise model (constant sigma, zero b)")]
    NotAdditive,
    #[error("Picard iteration diverged: M_n increased for 3 consecutive iterations: {0:?}")]
    PicardDiverged(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;
