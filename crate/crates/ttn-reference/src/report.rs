//! Error records for a computed trajectory against a reference function.

use tensor_core::DenseTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub h: f64,
    pub label: String,
}

/// One record per trajectory point, ordered by t. The relative error is
/// measured against the reference norm, floored at machine epsilon.
pub fn error_report<R>(
    trajectory: &[(f64, DenseTensor)],
    reference: R,
    h: f64,
    label: &str,
) -> Vec<ErrorRecord>
where
    R: Fn(f64) -> DenseTensor,
{
    let mut records: Vec<ErrorRecord> = trajectory
        .iter()
        .map(|(t, y)| {
            let reference_value = reference(*t);
            let abs_error = y
                .sub(&reference_value)
                .expect("trajectory and reference share dims")
                .norm();
            let rel_error = abs_error / reference_value.norm().max(f64::EPSILON);
            ErrorRecord { t: *t, abs_error, rel_error, h, label: label.to_string() }
        })
        .collect();
    records.sort_by(|a, b| a.t.total_cmp(&b.t));
    records
}
