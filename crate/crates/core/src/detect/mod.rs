//! Difference images, change maps and accuracy metrics.

mod difference;
mod metrics;
mod threshold;

pub use difference::{difference_image, vdf_difference, DifferenceImage, VdfShift};
pub use metrics::{
    area_under_pr, area_under_roc, confusion_report, curves_csv, evaluate, threshold_sweep,
    CurvePoint, EvalReport,
};
pub use threshold::{
    otsu_bin, otsu_cut, segment_threshold, ChangeMap, Segmented, ThresholdMethod, OTSU_BINS,
};
