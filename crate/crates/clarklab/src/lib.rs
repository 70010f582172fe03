//! Numerical laboratory for finite-rank perturbations of unitary operators.
//!
//! A unitary `U` with discrete matrix-valued spectral data is perturbed to
//! `T = U + B(Γ − I)B*U`. The crate evaluates the characteristic function of
//! `T`, builds its Sz.-Nagy–Foiaş model space when the function is inner, and
//! realizes the Clark operator intertwining `T` with the model operator.
//!
//! Module map:
//! - [`linalg`]: dense complex helpers (Hermitian square roots, pseudoinverse, structured inverses)
//! - [`measure`]: atoms, the isometry `B`, embedding into `ℂⁿ`
//! - [`cauchy`]: Cauchy and Poisson transforms, regularized operators, radial limits
//! - [`perturbation`]: `T_Γ`, defect operators, complete non-unitarity
//! - [`charfn`]: characteristic function evaluation and linear fractional relations
//! - [`taylor`], [`model`]: power-series coordinates and the model space `K_θ`
//! - [`clark`]: the Clark operator and its adjoint
//! - [`dilation`]: truncated minimal unitary dilation
//! - [`scenario`], [`verify`]: scenario files and verification suites used by the CLI

pub mod cauchy;
pub mod charfn;
pub mod clark;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod perturbation;
pub mod scenario;
pub mod taylor;
pub mod verify;

pub use error::{ClarkError, Result};
pub use linalg::{CMatrix, CVector, C64};
