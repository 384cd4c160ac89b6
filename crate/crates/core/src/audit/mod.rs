//! Offline analysis: relative-inexactness studies, Gauss-Newton bound checks
//! and theory reports over persisted traces.

mod delta;
mod ggn_bounds;
mod report;

pub use delta::{delta_study, DeltaDriver, DeltaRow, DeltaSeries, DELTA_CSV_COLUMNS};
pub use ggn_bounds::{verify_ggn_bounds, GgnBoundPoint, GgnBoundReport, GgnLoss, Optimum};
pub use report::{theory_report, SectionStatus, TheoryReport, TheorySection};
