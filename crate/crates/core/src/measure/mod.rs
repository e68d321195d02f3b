//! Empirical measures, the weak-* metric on them, and the construction of
//! periodic orbit measures for extensions of unipotent systems by
//! hyperbolic ones.

mod empirical;
mod metric;
mod pipeline;

pub use empirical::{average_pushforwards, birkhoff_periodic_sum, EmpiricalMeasure};
pub use metric::{
    calibrate_delta, fixed_point_coords, pairing_distance_bound_check, torus_integrals, weak_star_distance,
    weighted_sum, DeltaCalibration, Distance, MetricFamily, PairingCheck, TORUS_TERMS,
};
pub use pipeline::{dpm_pipeline, fiber_grid_reference, pipeline_bound, PipelineOptions, PipelineResult};
