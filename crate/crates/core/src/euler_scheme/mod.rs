//! Euler-type approximation of nonlinear Lévy-driven Markov processes by an
//! interacting particle system: on each step the law is frozen at the
//! empirical measure of the particles and every particle takes one exact
//! Lévy increment of the triplet evaluated at its position.

mod ensemble;
mod field;
mod scheme;

pub use ensemble::{LawRecord, PathEnsemble};
pub use field::{audit_field, CoefficientField, FieldAudit, TheoryOrder};
pub use scheme::{
    euler_step, feller_map, paired_moment, prepare_cloud, run, run_coupled_initials, run_coupled_subdivision,
    CouplingMode, FellerEstimate, SchemeConfig, SubdivisionPair,
};
