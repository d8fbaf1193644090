//! Number formatting shared by the CSV writers.

/// Scientific notation with 17 significant digits, so every double
/// round-trips through its text form.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.329e-17, 1.0, 0.0, 4.4167e-13, -2.5e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }
}
