//! Exact finite-span Fock representations of a nonlocal scalar Fermi field,
//! with numerical probes of its locality and nonlocality properties.
//!
//! The one-particle space is sampled on the positive mass shell
//! ([`mass_shell`]), smearing functions are momentum-space evaluators with
//! declared supports ([`testfn`]), the CAR algebra over the span of a working
//! set is represented exactly by dense matrices ([`fock_car`]), and the
//! operator-algebraic experiments live in [`algebra_probes`] and
//! [`modular`]. [`experiments`] bundles them into the named runs used by the
//! command line tool and the acceptance suite.

pub mod algebra_probes;
pub mod error;
pub mod experiments;
pub mod fock_car;
pub mod mass_shell;
pub mod modular;
pub mod quadrature;
pub mod testfn;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
