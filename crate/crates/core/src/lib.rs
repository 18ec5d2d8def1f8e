//! Faithful Haar systems adapted to operators with a large Haar diagonal,
//! computed at finite dyadic resolution.
//!
//! The crate is organised bottom-up:
//!
//! * [`dyadic`]: dyadic intervals, their enumeration, Haar and signed Rademacher functions;
//! * [`stepfn`]: step functions on `D_N`, distributions, the fast Haar transform;
//! * [`rinorm`]: rearrangement-invariant norms and Köthe duals;
//! * [`operator`]: bounded operators on step functions, adjoints, Haar diagonals, a seeded zoo;
//! * [`faithful`]: faithful Haar systems and the operator-adapted builder;
//! * [`factorize`]: the approximate factorization `D ≈ BTA` and the identity factorization;
//! * [`diagnostics`]: finite-scale evidence about weakly null Rademacher sequences.

// `!(x > 0.0)` guards are kept so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dyadic;
pub mod error;
pub mod factorize;
pub mod faithful;
pub mod operator;
pub mod rinorm;
pub mod rng;
pub mod stepfn;

pub use dyadic::{haar, index_of, interval_of, rademacher, DyadicInterval};
pub use error::{HaarError, Result};
pub use rinorm::{DualCertificate, RiNormSpec};
pub use stepfn::{equidistributed, Distribution, StepFunction};
