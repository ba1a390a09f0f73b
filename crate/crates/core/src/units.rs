//! Fixed-point and exact-rational numeric types.
//!
//! Prices (cents per kWh) and energies (kWh) are integers scaled by 10^4,
//! so every realized quantity has an exact representation. Money (cents)
//! is an exact rational: products of prices with energies, and empirical
//! expectations (sums divided by day counts), stay exact. Budget-balance
//! identities are therefore checked with `==`, never with a tolerance.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num::rational::Ratio;
use num::{Signed, Zero};

/// Fractional resolution of prices and energies: 4 decimal digits.
pub const FIXED_SCALE: i64 = 10_000;

const MONEY_DEN: i128 = (FIXED_SCALE as i128) * (FIXED_SCALE as i128);

/// A price in cents per kWh (or cents per kWh per day for capital costs),
/// fixed point with 4 fractional digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Price(i64);

impl Price {
    pub const ZERO: Price = Price(0);

    pub fn from_raw(raw: i64) -> Price {
        Price(raw)
    }

    /// Rounds to the nearest representable value.
    pub fn from_cents(cents: f64) -> Price {
        Price((cents * FIXED_SCALE as f64).round() as i64)
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn as_cents(self) -> f64 {
        self.0 as f64 / FIXED_SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// price × energy, exact.
    pub fn times(self, e: Energy) -> Money {
        Money(Ratio::new(self.0 as i128 * e.0 as i128, MONEY_DEN))
    }

    /// price × an exact energy amount in kWh, exact.
    pub fn times_kwh(self, kwh: Kwh) -> Money {
        Money(Ratio::new(self.0 as i128, FIXED_SCALE as i128) * kwh)
    }
}

impl Sub for Price {
    type Output = Price;
    fn sub(self, rhs: Price) -> Price {
        Price(self.0 - rhs.0)
    }
}

impl Add for Price {
    type Output = Price;
    fn add(self, rhs: Price) -> Price {
        Price(self.0 + rhs.0)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_fixed(self.0 as i128, FIXED_SCALE as i128))
    }
}

/// An exact amount of energy in kWh, as a rational. Used for empirical
/// means and conditional means, which divide by day counts.
pub type Kwh = Ratio<i128>;

/// An energy in kWh, fixed point with 4 fractional digits, nonnegative
/// by construction in all public entry points.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Energy(i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub fn from_raw(raw: i64) -> Energy {
        Energy(raw)
    }

    /// Rounds to the nearest representable value and clamps at zero.
    pub fn from_kwh(kwh: f64) -> Energy {
        Energy(((kwh * FIXED_SCALE as f64).round() as i64).max(0))
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn as_kwh(self) -> f64 {
        self.0 as f64 / FIXED_SCALE as f64
    }

    pub fn to_kwh_exact(self) -> Kwh {
        Ratio::new(self.0 as i128, FIXED_SCALE as i128)
    }

    /// (self − other)⁺, the positive part of the difference.
    pub fn surplus_over(self, other: Energy) -> Energy {
        Energy((self.0 - other.0).max(0))
    }

    pub fn min(self, other: Energy) -> Energy {
        Energy(self.0.min(other.0))
    }

    /// Exact scaling by a nonnegative rational; `None` when the result is
    /// not representable in the fixed-point grid.
    pub fn checked_scale(self, factor: Frac) -> Option<Energy> {
        let num = factor.0.numer();
        let den = factor.0.denom();
        let scaled = self.0 as i128 * num;
        if scaled % den != 0 {
            return None;
        }
        i64::try_from(scaled / den).ok().map(Energy)
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_fixed(self.0 as i128, FIXED_SCALE as i128))
    }
}

/// An exact amount of money in cents.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Money(Ratio<i128>);

impl Money {
    pub const fn zero() -> Money {
        // Ratio::new_raw is const; 0/1 is already reduced.
        Money(Ratio::new_raw(0, 1))
    }

    pub fn from_cents(cents: i64) -> Money {
        Money(Ratio::from_integer(cents as i128))
    }

    /// cents expressed as the exact fraction `num/den`.
    pub fn from_ratio(num: i128, den: i128) -> Money {
        Money(Ratio::new(num, den))
    }

    pub(crate) fn from_inner(r: Ratio<i128>) -> Money {
        Money(r)
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }

    pub fn as_cents(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Exact scaling by a rational factor.
    pub fn scale(self, num: i128, den: i128) -> Money {
        Money(self.0 * Ratio::new(num, den))
    }

    /// The dimensionless ratio self/denominator; `None` when the
    /// denominator is zero.
    pub fn ratio_to(self, denominator: Money) -> Option<Frac> {
        if denominator.is_zero() {
            None
        } else {
            Some(Frac(self.0 / denominator.0))
        }
    }

    pub fn mul_frac(self, f: Frac) -> Money {
        Money(self.0 * f.0)
    }

    /// Exact division by a positive count.
    pub fn div_count(self, n: usize) -> Money {
        Money(self.0 / Ratio::from_integer(n as i128))
    }

    pub fn abs(self) -> Money {
        Money(self.0.abs())
    }

    pub fn max(self, other: Money) -> Money {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Decimal rendering with `dp` fractional digits, rounding half away
    /// from zero. Deterministic; used for all report output.
    pub fn to_decimal_string(self, dp: u32) -> String {
        let pow = 10i128.pow(dp);
        let num = self.0.numer() * pow;
        let den = *self.0.denom(); // always positive after reduction
        let neg = num < 0;
        let n = num.abs();
        let mut q = n / den;
        if 2 * (n % den) >= den {
            q += 1;
        }
        let sign = if neg && q != 0 { "-" } else { "" };
        if dp == 0 {
            return format!("{sign}{q}");
        }
        format!("{sign}{}.{:0width$}", q / pow, q % pow, width = dp as usize)
    }
}

impl Default for Money {
    fn default() -> Money {
        Money::zero()
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string(4))
    }
}

/// A dimensionless exact fraction: probabilities, CDF values, arbitrage
/// constants, proportional weights.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Frac(Ratio<i128>);

impl Frac {
    pub const fn zero() -> Frac {
        Frac(Ratio::new_raw(0, 1))
    }

    pub const fn one() -> Frac {
        Frac(Ratio::new_raw(1, 1))
    }

    /// `num/den`; panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Frac {
        Frac(Ratio::new(num, den))
    }

    pub fn numer(self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn in_unit_interval(self) -> bool {
        !self.0.is_negative() && self.0 <= Ratio::new_raw(1, 1)
    }

    /// 1 − self.
    pub fn complement(self) -> Frac {
        Frac(Ratio::new_raw(1, 1) - self.0)
    }

    /// Scales an exact kWh amount by this fraction.
    pub fn scale_kwh(self, kwh: Kwh) -> Kwh {
        self.0 * kwh
    }

    /// Decimal rendering with `dp` fractional digits, rounding half away
    /// from zero. Deterministic; used for report output.
    pub fn to_decimal_string(self, dp: u32) -> String {
        Money::from_inner(self.0).to_decimal_string(dp)
    }
}

impl Add for Frac {
    type Output = Frac;
    fn add(self, rhs: Frac) -> Frac {
        Frac(self.0 + rhs.0)
    }
}

impl Sub for Frac {
    type Output = Frac;
    fn sub(self, rhs: Frac) -> Frac {
        Frac(self.0 - rhs.0)
    }
}

impl Sum for Frac {
    fn sum<I: Iterator<Item = Frac>>(iter: I) -> Frac {
        iter.fold(Frac::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

fn format_fixed(raw: i128, scale: i128) -> String {
    let neg = raw < 0;
    let n = raw.abs();
    let digits = scale.ilog10() as usize;
    format!(
        "{}{}.{:0width$}",
        if neg { "-" } else { "" },
        n / scale,
        n % scale,
        width = digits
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_energy_product_is_exact() {
        let p = Price::from_cents(55.0);
        let e = Energy::from_kwh(10.0);
        assert_eq!(p.times(e), Money::from_cents(550));
    }

    #[test]
    fn fractional_product_stays_exact() {
        // 0.0001 c/kWh × 0.0001 kWh = 1e-8 cents.
        let p = Price::from_raw(1);
        let e = Energy::from_raw(1);
        assert_eq!(p.times(e), Money::from_ratio(1, 100_000_000));
    }

    #[test]
    fn surplus_and_min() {
        let x = Energy::from_kwh(10.0);
        let c = Energy::from_kwh(4.0);
        assert_eq!(x.surplus_over(c), Energy::from_kwh(6.0));
        assert_eq!(c.surplus_over(x), Energy::ZERO);
        assert_eq!(x.min(c), c);
    }

    #[test]
    fn checked_scale_requires_representability() {
        let e = Energy::from_raw(3);
        assert_eq!(e.checked_scale(Frac::new(1, 3)), Some(Energy::from_raw(1)));
        assert_eq!(e.checked_scale(Frac::new(1, 2)), None);
    }

    #[test]
    fn decimal_rendering_rounds_half_away_from_zero() {
        assert_eq!(Money::from_ratio(5, 2).to_decimal_string(0), "3");
        assert_eq!(Money::from_ratio(-5, 2).to_decimal_string(0), "-3");
        assert_eq!(Money::from_ratio(585, 2).to_decimal_string(4), "292.5000");
        assert_eq!(Money::from_ratio(1, 3).to_decimal_string(4), "0.3333");
    }

    #[test]
    fn frac_display_is_reduced() {
        assert_eq!(Frac::new(20, 35).to_string(), "4/7");
    }
}
