//! Points, subtori, automorphisms, metrics and periodic points on `T^d`.

mod automorphism;
mod metric;
mod point;
mod subtorus;

pub use automorphism::{
    exact_period, orbit, orbit_exact, periodic_points, restrict_to_subtorus, solve_periodic_in_coset,
    ToralAutomorphism, DEFAULT_SPLITTING_TOL,
};
pub use metric::{centered, difference_f64, quotient_distance, torus_distance, QUOTIENT_TOLERANCE};
pub(crate) use metric::sup_circle;
pub use point::{reduce_f64, ExactPoint, TorusPoint};
pub use subtorus::Subtorus;
