//! Numeric formatting for reports: twelve significant digits, shortest form.

/// `x` rounded to twelve significant digits and printed without trailing
/// zeros. Very large or small magnitudes switch to exponent notation.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let a = rounded.abs();
    if rounded == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
