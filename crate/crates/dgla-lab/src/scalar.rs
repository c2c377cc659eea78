//! Scalars: exact rationals over arbitrary-precision integers.
//!
//! Every computation in this crate is over the field of rationals; there is
//! no floating point and no epsilon anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratq(num: i64, den: i64) -> Rat {
    assert!(den != 0, "zero denominator");
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// a! b! / (a+b+1)!
pub fn beta_integral(a: u64, b: u64) -> Rat {
    Rat::new(factorial(a) * factorial(b), factorial(a + b + 1))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactness() {
        let a = ratq(1, 3);
        let b = ratq(1, 6);
        assert_eq!(&a + &b, ratq(1, 2));
        assert_eq!((&a + &b) - &a, b);
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta_integral(0, 0), rat(1));
        assert_eq!(beta_integral(1, 1), ratq(1, 6));
        assert_eq!(beta_integral(2, 3), ratq(2 * 6, 720));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(6, 0), BigInt::from(1));
        assert_eq!(binomial(3, 5), BigInt::from(0));
    }
}
