//! Desk-scale numerical laboratory for effective-medium limits of elliptic
//! PDEs posed outside a large number of small spheres.
//!
//! The crate covers the full pipeline:
//!
//! * [`geometry`] — sphere configurations (periodic / i.i.d. / hardcore /
//!   Poisson), limit densities and their Newtonian and Oseen potentials,
//!   and ball cubature rules;
//! * [`kernels`] — the free-space and truncated Green kernels of `-Δ` and
//!   `-PΔ`, their gradients, and fast (treecode) pairwise summation;
//! * [`hypotheses`] — computable evaluation of the separation functionals
//!   that control the homogenization limits, plus the pair-correlation
//!   criterion for stationary point processes;
//! * [`microsolver`] — singularity collocation for the perforated-domain
//!   problems (monopoles, Stokeslets, dipoles) and the explicit correctors;
//! * [`macrosolver`] — independent solvers for the effective PDEs (screened
//!   Poisson, Brinkman, dilute permittivity) in volume-potential form.

pub mod boxint;
pub mod geometry;
pub mod hypotheses;
pub mod kernels;
pub mod macrosolver;
pub mod mat3;
pub mod microsolver;
pub mod vec3;

pub use vec3::Vec3;
