//! Number formatting shared by every text export.

/// Format with 12 significant digits, `%g`-style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn formats() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.95), "-2.95");
        assert_eq!(sig12(1e-13), "1e-13");
        assert_eq!(sig12(123456.0), "123456");
        assert_eq!(sig12(0.2 / 0.7), "0.285714285714");
        assert_eq!(sig12(1.5e20), "1.5e20");
        assert_eq!(sig12(0.00012345), "0.00012345");
    }
}
