//! Log-space helpers.

/// Stand-in for minus infinity inside dynamic programs. Values at or below
/// [`DEAD_THRESHOLD`] are treated as "no derivation".
pub(crate) const NEG_SENTINEL: f64 = -1e18;
pub(crate) const DEAD_THRESHOLD: f64 = -1e17;

#[inline]
pub(crate) fn is_dead(v: f64) -> bool {
    v <= DEAD_THRESHOLD
}

/// `log(exp(a) + exp(b))`, honouring the dead sentinel on either side.
#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if is_dead(a) {
        return b;
    }
    if is_dead(b) {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

#[inline]
pub(crate) fn exp(v: f64) -> f64 {
    libm::exp(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_skips_dead_terms() {
        assert_eq!(log_add(NEG_SENTINEL, 1.5), 1.5);
        assert_eq!(log_add(-3.0, NEG_SENTINEL), -3.0);
        assert!(is_dead(log_add(NEG_SENTINEL, NEG_SENTINEL)));
        let v = log_add(0.0, 0.0);
        assert!((v - libm::log(2.0)).abs() < 1e-15);
    }
}
