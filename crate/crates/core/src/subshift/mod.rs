//! Thue-Morse words, the `X_p` subshifts and their periodic points, cylinder
//! measures, and the product of `X_2` and `X_3` without dense periodic
//! measures.

mod cylinder;
mod product;
mod word;

pub use cylinder::{cylinder_empirical, index_word, shift_distance, word_index, CylinderMeasure};
pub use product::{
    product_counterexample_report, product_diagonal_distance, tm_reference, xp_window_check, Budgets, FactorCurve,
    FactorPoint, ProductReport, TM_REFERENCE_LEN,
};
pub use word::{thue_morse, tm_substitute, xp_periodic_point, Word, MARKER};
