//! Factorisations of matrix-group elements along words of charted
//! subvarieties.
//!
//! A *letter* is a parametrised subvariety `X_a` of a matrix group `G` that
//! contains the identity. A *word* `w = a_1 ... a_l` defines the
//! multiplication map `mu_w(x_1, ..., x_l) = x_1 ... x_l`. This crate
//! evaluates and differentiates these maps, certifies word properties
//! (dominant, surjective, open, birational, irreducible) from a small set of
//! registered facts, solves for factorisations of concrete targets, examines
//! fibres, and tracks curves of targets through `mu_w`.
//!
//! ```
//! use matword::catalog::catalog_sl2;
//! use matword::factor::sl2_121;
//! use matword::numeric::{real_matrix, Tolerances};
//!
//! let g = real_matrix(&[&[3.0, 10.0], &[2.0, 7.0]]);
//! let f = sl2_121(&g, &Tolerances::default()).unwrap();
//! assert!(f.residual < 1e-12);
//! ```

pub mod catalog;
pub mod certify;
pub mod curve;
pub mod error;
pub mod factor;
pub mod fiber;
pub mod group;
pub mod io;
pub mod letter;
pub mod numeric;
pub mod random;
pub mod word;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/words.md")]
    mod words {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/factorizations.md")]
    mod factorizations {}
    #[doc = include_str!("../../../book/src/fibers.md")]
    mod fibers {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
}
