//! Exact rational arithmetic used for every probability in the crate.
//!
//! All equivalence checks compare probabilities for equality, so floating
//! point is banned everywhere; `Rat` keeps values in lowest terms with a
//! positive denominator.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rat = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Parses `INT`, `INT/INT`, or a finite decimal literal such as `0.25`.
/// Decimals are converted exactly (`0.5` becomes `1/2`).
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty probability literal".to_string());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{num}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{den}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal literal `{s}`"));
        }
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let whole: BigInt = int_part
            .parse()
            .map_err(|_| format!("bad decimal literal `{s}`"))?;
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| format!("bad decimal literal `{s}`"))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = if whole.is_negative() { -frac } else { frac };
        return Ok(Rat::new(whole * &scale + frac, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad integer `{s}`"))?;
    Ok(Rat::from_integer(n))
}

/// Lowest-terms rendering: `1/2`, `1`, `0`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rat("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("0.4").unwrap(), rat(2, 5));
        assert_eq!(parse_rat("1").unwrap(), rat_one());
        assert_eq!(parse_rat("0").unwrap(), rat_zero());
    }

    #[test]
    fn rejects_malformed_literals() {
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("0.5.1").is_err());
        assert!(parse_rat("x").is_err());
        assert!(parse_rat("1.").is_err());
    }

    #[test]
    fn formats_in_lowest_terms() {
        assert_eq!(format_rat(&rat(2, 4)), "1/2");
        assert_eq!(format_rat(&rat(3, 1)), "3");
        assert_eq!(format_rat(&rat(2, 5)), "2/5");
    }
}
