//! Unipotent automorphisms: exact periodic approximants inside invariant
//! subsets, periodic orbit measures converging to a given ergodic measure,
//! and the box-matching permutation between a periodic and a generic orbit.

mod approximants;
mod descriptor;
mod interval;
mod symbolic;

pub use approximants::{
    is_periodic_with, periodic_approximants, reduce_period, strong_dpm_sequence, unipotent_power, Approximant,
    Approximator, StrongDpm,
};
pub use descriptor::{ClosureData, SubtorusBasis, SupportDescriptor};
pub use interval::{interval_permutation, interval_permutation_with, IntervalMatch, IntervalOptions};
pub use symbolic::{Param, SymbolicPoint};
