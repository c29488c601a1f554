//! Number formatting shared by the CSV and report writers.

/// Decimal text with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Shortest text that parses back to the same `f64`.
pub fn exact(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(0.3312504), "0.331250");
        assert_eq!(sig6(33.125), "33.1250");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(-0.025), "-0.0250000");
    }

    #[test]
    fn exact_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2017.0, 1e-300] {
            assert_eq!(exact(x).parse::<f64>().unwrap(), x);
        }
    }
}
