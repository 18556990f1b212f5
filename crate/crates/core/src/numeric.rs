/// Bracketing bisection for an increasing predicate.
///
/// `below(x)` must be `true` at `lo` side and `false` at `hi` side of the sought point.
/// Returns the midpoint of the final bracket, whose width is at most `width`.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, width: f64, mut below: impl FnMut(f64) -> bool) -> f64 {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Like [`bisect`] but returns the final bracket `(lo, hi)`.
pub(crate) fn bisect_bracket(
    mut lo: f64,
    mut hi: f64,
    width: f64,
    mut below: impl FnMut(f64) -> bool,
) -> (f64, f64) {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
