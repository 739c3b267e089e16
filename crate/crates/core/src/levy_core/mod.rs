//! Lévy triplets, their increment samplers and characteristic exponents,
//! and couplings of two Lévy processes through a joint jump measure.

mod coupling;
mod jumps;
mod radial;
mod triplet;

pub use coupling::{
    coupled_moment, coupled_moment_w1_bound, couple_increments, couple_increments_w1, JointJumps,
    LevyCoupling,
};
pub use jumps::{AngularAtom, Atom, JumpMeasure};
pub use radial::{RadialFamily, RadialTail, TailTable};
pub use triplet::{
    characteristic_exponent, sample_increment, sample_increment_first_order, split_generator,
    LevyTriplet,
};
