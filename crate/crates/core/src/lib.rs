//! Design-space exploration for inductively degenerated common-source CMOS LNAs.
//!
//! For each (gain target, bias current, width) point the engine synthesizes the
//! input-stage and output-network passives, snaps inductors to a realizable
//! spiral library, evaluates gain, matching, noise figure and IIP3, and records
//! which technology limit (if any) makes the point infeasible.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Small dense eliminations read better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod explorer;
pub mod inductors;
pub mod mosmodel;
pub mod netsolver;
pub mod parallel;
pub mod report;
pub mod synth;
pub mod techcard;

pub use explorer::{run_sweep, SpecFilter, SweepKind, SweepPlan, SweepResult};
pub use inductors::{InductorGeometry, InductorSpec};
pub use mosmodel::{device_point, DeviceMode, DevicePoint};
pub use netsolver::{Circuit, EvalMode, Metrics, PassiveSet};
pub use synth::{synthesize, Binding, DesignCandidate, FeasibilityVerdict, SynthTarget};
pub use techcard::{load_card, Limit, TechnologyCard};
