//! Length conversions. Rubric thresholds are in inches, scene lengths in meters.

/// Exact international inch.
pub const METERS_PER_INCH: f64 = 0.0254;
pub const CM_PER_INCH: f64 = 2.54;

pub fn meters_to_inches(m: f64) -> f64 {
    m / METERS_PER_INCH
}

pub fn inches_to_meters(inches: f64) -> f64 {
    inches * METERS_PER_INCH
}

pub fn inches_to_cm(inches: f64) -> f64 {
    inches * CM_PER_INCH
}

pub fn cm_to_inches(cm: f64) -> f64 {
    cm / CM_PER_INCH
}
