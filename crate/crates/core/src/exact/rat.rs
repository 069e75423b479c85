use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number. Always stored in lowest terms with a positive denominator.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator individually overflow f64; divide in big-int space first
        let scale = BigInt::from(10u32).pow(300);
        let scaled = (r.numer() * &scale) / r.denom();
        scaled.to_f64().unwrap_or(f64::NAN) * 1e-300
    })
}

/// Parses `"a/b"`, an integer, or a base-10 decimal literal such as `"-0.125"`
/// or `"2.5e-3"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let bad = || Error::InvalidRational(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(k) => {
            let e: i32 = t[k + 1..].parse().map_err(|_| bad())?;
            (&t[..k], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{ip}{fp}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let ten = BigInt::from(10u32);
    let scale = exp - fp.len() as i32;
    let mut r = Rat::from_integer(all);
    if scale >= 0 {
        r *= Rat::from_integer(ten.pow(scale as u32));
    } else {
        r /= Rat::from_integer(ten.pow((-scale) as u32));
    }
    Ok(if neg { -r } else { r })
}

/// Renders `a` or `a/b`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Scales a rational vector to the primitive integer vector on the same ray
/// (gcd of entries 1, first nonzero entry positive). The zero vector maps to zeros.
pub fn primitive_integer_vector(v: &[Rat]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints: Vec<BigInt> = v.iter().map(|r| (r * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|x| x / &g * &sign).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rat("-3/1").unwrap(), int(-3));
        assert_eq!(parse_rat("6/4").unwrap(), rat(3, 2));
        assert_eq!(parse_rat("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rat("2.5e-3").unwrap(), rat(1, 400));
        assert_eq!(parse_rat("1e2").unwrap(), int(100));
        assert_eq!(parse_rat("7").unwrap(), int(7));
        assert_eq!(parse_rat(".25").unwrap(), rat(1, 4));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1/0", "abc", "1.2.3", "-", "1/x", "0x10"] {
            assert!(parse_rat(s).is_err(), "{s}");
        }
    }

    #[test]
    fn normal_form() {
        let r = rat(4, -6);
        assert_eq!(r.numer(), &BigInt::from(-2));
        assert_eq!(r.denom(), &BigInt::from(3));
        assert!(rat(0, 5).denom().is_one());
    }

    #[test]
    fn primitive_vectors() {
        let v = primitive_integer_vector(&[rat(-1, 2), rat(1, 3), int(0)]);
        assert_eq!(v, vec![BigInt::from(3), BigInt::from(-2), BigInt::from(0)]);
    }
}
