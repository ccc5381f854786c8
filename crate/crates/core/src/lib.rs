//! Exact computation with asymptotic pairs on low-complexity shift spaces:
//! bi-infinite eventually periodic points, block-map automorphisms, the
//! induced action on calibrated pairs, drift cocycles, and the stage-wise
//! empirical measures that average them into a homomorphism to the reals.

mod alphabet;
mod asymptotic;
mod automorphism;
mod drift;
mod error;
mod gallery;
mod measure;
mod point;
mod space;

pub use alphabet::{Alphabet, SymbolId, Word};
pub use asymptotic::{
    act, act_with_drift, calibrate, cocycle_bound, drift_cocycle, locality_radius, make_pair,
    AsymptoticPair, CalibratedPair,
};
pub use automorphism::{verify_automorphism, Automorphism, BlockMap, OrbitCocycle, RuleView};
pub use drift::{
    additivity_defect, check_action_homomorphism, check_cocycle_relation, drift_estimate,
    drift_pipeline, DriftCertificate, DriftEstimate, PipelineConfig, PipelineReport, StageReport,
};
pub use error::{Error, Result};
pub use gallery::{
    all_zero_point, alternating_point, alternating_space, always_step_rule, builtin,
    builtin_names, counter_exchange_rule, embed_marker_rule, exchange_rule, full_shift_space,
    hop_rule, orbit_cocycle_expectation, product_with_marker_lane, single_marker_point,
    slide_rule, sunny_side_up, BaseMeasure, GalleryEntry,
};
pub use measure::{
    check_family_soundness, completeness_gap, invariance_defect, select_window_sequence,
    shadow_word_pairs, CAFamily, Cylinder, EmpiricalMeasure, PairSchema, Slot, WordPair,
};
pub use point::{first_difference, parse_point, FirstDifference, Point, RawPoint};
pub use space::{
    orbit_limit_points, ComplexityReport, EnumLimits, Presentation, ShiftSpace, SoficAutomaton,
    ZeroEntropyCertificate,
};
