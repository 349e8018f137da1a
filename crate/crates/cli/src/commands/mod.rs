//! One module per subcommand.

pub mod cd;
pub mod design;
pub mod flow;
pub mod sweep;
pub mod verify;

use serde_json::Value;
use sta_core::VerificationReport;

pub(crate) fn report_json(report: &VerificationReport) -> Value {
    // NaN phase errors (skipped reconstruction) serialize as null.
    serde_json::to_value(report).expect("report fields are plain data")
}
