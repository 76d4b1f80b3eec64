//! Decimal rendering for tables and CSV output.

/// Renders `x` as a plain decimal that parses back to exactly `x`, padded
/// with trailing zeros to at least `min_significant` significant digits.
pub fn decimal(x: f64, min_significant: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let mut s = format!("{x}");
    let digits = significant_digits(&s);
    let pad = if x == 0.0 {
        min_significant.saturating_sub(1)
    } else {
        min_significant.saturating_sub(digits)
    };
    if pad > 0 {
        if !s.contains('.') {
            s.push('.');
        }
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

fn significant_digits(s: &str) -> usize {
    let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').len()
}
