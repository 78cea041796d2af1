//! CSV number formatting shared by every writer.

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // keep the sign bit out of the output
        return format!("{:.16e}", 0.0f64);
    }
    format!("{x:.16e}")
}

/// Parses a value produced by [`num`].
pub fn parse(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn format_shape() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.0), "0.0000000000000000e0");
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }

    proptest! {
        #[test]
        fn roundtrips_exactly(x in proptest::num::f64::NORMAL) {
            prop_assert_eq!(parse(&num(x)).unwrap(), x);
        }
    }
}
