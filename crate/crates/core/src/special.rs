//! Euler Gamma via the Lanczos approximation (g = 7, nine terms) with the
//! reflection formula for arguments below one half.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: f64) -> bool {
    z <= 0.0 && z == z.floor()
}

fn lanczos(z: f64) -> f64 {
    // valid for z >= 0.5
    let z = z - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Euler Gamma. Fails at `0, −1, −2, …`.
pub fn gamma(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma({z})")));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::GammaPole(z));
    }
    if z == z.floor() && z <= 171.0 {
        // exact factorials for small positive integers
        let mut f = 1.0;
        let mut k = 2.0;
        while k < z {
            f *= k;
            k += 1.0;
        }
        return Ok(f);
    }
    if z < 0.5 {
        Ok(PI / ((PI * z).sin() * lanczos(1.0 - z)))
    } else {
        Ok(lanczos(z))
    }
}

/// `1/Γ(z)`, entire; zero at the nonpositive integers.
pub fn recip_gamma(z: f64) -> f64 {
    if is_nonpositive_integer(z) {
        return 0.0;
    }
    match gamma(z) {
        Ok(g) => 1.0 / g,
        Err(_) => f64::NAN,
    }
}

pub fn factorial(k: usize) -> f64 {
    (2..=k).map(|v| v as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_values() {
        let sqrt_pi = PI.sqrt();
        assert!(rel(gamma(0.5).unwrap(), sqrt_pi) < 1e-14);
        assert!(rel(gamma(-0.5).unwrap(), -2.0 * sqrt_pi) < 1e-14);
        assert!(rel(gamma(1.5).unwrap(), 0.5 * sqrt_pi) < 1e-14);
        assert!(rel(gamma(-3.5).unwrap(), 16.0 * sqrt_pi / 105.0) < 1e-13);
    }

    #[test]
    fn integers_are_factorials() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert_eq!(gamma(11.0).unwrap(), 3_628_800.0);
    }

    #[test]
    fn functional_equation() {
        for &z in &[0.1, 0.37, 1.7, 2.5, 4.2, -0.3, -1.7, -2.45, -5.5] {
            let r = gamma(z + 1.0).unwrap() / (z * gamma(z).unwrap());
            assert!((r - 1.0).abs() < 1e-13, "z = {z}, ratio = {r}");
        }
    }

    #[test]
    fn poles() {
        assert!(matches!(gamma(0.0), Err(Error::GammaPole(_))));
        assert!(matches!(gamma(-3.0), Err(Error::GammaPole(_))));
        assert_eq!(recip_gamma(-2.0), 0.0);
        assert!(rel(recip_gamma(-1.0 + 1e-9), -1e-9) < 1e-6);
    }
}
