//! Deterministic numeric formatting for report files.

/// Formats `v` with six significant digits in plain decimal notation.
///
/// Used by every CSV report so that outputs are stable byte-for-byte across
/// runs and platforms. Zero prints as `0`; non-finite values print via the
/// standard formatter (they never appear in validated outputs).
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    // Decimal places needed so total significant digits come to six.
    let places = (5 - magnitude).clamp(0, 30) as usize;
    format!("{v:.places$}")
}
