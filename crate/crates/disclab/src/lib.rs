//! Power-series laboratory for linear differential equations on the unit disc.
//!
//! Equations `f^(k) + A_{k-1} f^(k-1) + … + A_0 f = 0` with analytic
//! coefficients are solved by truncated Taylor series ([`ode`]). The solutions
//! and the coefficients are measured on polar quadrature grids ([`norms`]),
//! against coefficient conditions ([`conditions`]), weighted Bergman kernels
//! ([`weights`]) and Hardy-space identities ([`hardy`]). Point sequences and
//! disc automorphisms live in [`geometry`]; [`cli`] drives everything from
//! the command line with reproducible JSON reports.
//!
//! ```
//! use disclab::conditions::nehari_sup;
//! use disclab::norms::QuadratureGrid;
//! use disclab::ode::{solve_series, NamedExample};
//!
//! let ex = NamedExample::Hille { gamma: 1.0 };
//! let f = solve_series(&ex.problem(128)).series;
//! assert!(f.coeff(0).norm() < 1e-15);
//! let rep = nehari_sup(&ex.coefficient(256), &QuadratureGrid::for_order(256));
//! assert!((rep.value - 5.0).abs() < 0.05 && !rep.divergence_flag);
//! ```
//!
//! The guide chapters below are compiled and run as doc-tests.

pub mod cli;
pub mod conditions;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod hardy;
pub mod norms;
pub mod ode;
pub mod series;
pub mod weights;

pub use error::{Error, Result};
pub use series::PowerSeries;

/// Guide chapters.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/ch01-series.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/ch02-geometry.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/ch03-norms.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/ch04-conditions.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/ch05-weights.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/ch06-hardy.md")]
    pub mod chapter6 {}
    #[doc = include_str!("../../../book/src/ch07-cli.md")]
    pub mod chapter7 {}
    #[doc = include_str!("../../../book/src/ch08-limits.md")]
    pub mod chapter8 {}
}
