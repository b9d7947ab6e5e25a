//! Small helpers around [`BigRational`]: the `"num/den"` text form used in
//! every JSON artefact, and conversions from machine integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse rational `{0}`")]
pub struct ParseRationalError(pub String);

pub fn int(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Always writes both parts, so `3` becomes `"3/1"`.
pub fn to_fraction_string(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Accepts `"a/b"` or a bare integer `"a"`.
pub fn parse_fraction(text: &str) -> Result<BigRational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(BigRational::new(num, den))
}

pub fn dot_with_support(values: &[BigRational], support: &[usize]) -> BigRational {
    support
        .iter()
        .fold(BigRational::zero(), |acc, &i| acc + &values[i])
}

pub fn pow2_inverse(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_strings() {
        assert_eq!(to_fraction_string(&ratio(6, -4)), "-3/2");
        assert_eq!(to_fraction_string(&int(7)), "7/1");
        assert_eq!(parse_fraction("-3/2").unwrap(), ratio(-3, 2));
        assert_eq!(parse_fraction(" 12 ").unwrap(), int(12));
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("x/2").is_err());
    }
}
