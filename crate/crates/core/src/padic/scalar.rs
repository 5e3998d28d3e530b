use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::val::Val;
use crate::error::{Error, Result};

thread_local! {
    static POWERS: RefCell<HashMap<u64, Vec<Rc<BigUint>>>> = RefCell::new(HashMap::new());
}

/// p^k from a per-thread cache.
pub(crate) fn pow_p(p: u64, k: i64) -> Rc<BigUint> {
    assert!(k >= 0, "negative power of p");
    let k = k as usize;
    POWERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let table = map
            .entry(p)
            .or_insert_with(|| vec![Rc::new(BigUint::one())]);
        while table.len() <= k {
            let next = table.last().unwrap().as_ref() * p;
            table.push(Rc::new(next));
        }
        table[k].clone()
    })
}

/// x mod p^k; bit truncation when p = 2.
pub(crate) fn reduce(p: u64, x: BigUint, k: i64) -> BigUint {
    let k = k.max(0) as u64;
    if p == 2 {
        if x.bits() <= k {
            return x;
        }
        let mut words: Vec<u32> = x.iter_u32_digits().take(k.div_ceil(32) as usize).collect();
        if !k.is_multiple_of(32) {
            *words.last_mut().unwrap() &= (1u32 << (k % 32)) - 1;
        }
        return BigUint::new(words);
    }
    x % pow_p(p, k as i64).as_ref()
}

/// u⁻¹ mod p^k for a unit u, by Newton's iteration x ← x·(2 − u·x).
fn inverse_mod_pk(u: &BigUint, p: u64, k: i64) -> BigUint {
    let u0 = (u % p).to_u64().expect("small");
    // u0^(p−2) mod p.
    let (mut base, mut e, mut x0) = (u0 as u128, p - 2, 1u128);
    while e > 0 {
        if e & 1 == 1 {
            x0 = x0 * base % p as u128;
        }
        base = base * base % p as u128;
        e >>= 1;
    }
    let mut x = BigUint::from(x0 as u64);
    let mut prec = 1;
    while prec < k {
        prec = (2 * prec).min(k);
        let m = pow_p(p, prec);
        let ux = reduce(p, u * &x, prec);
        let e = reduce(p, m.as_ref() + 2u32 - ux, prec);
        x = reduce(p, x * e, prec);
    }
    reduce(p, x, k)
}

/// Splits a nonzero x into (v_p(x), x / p^v).
pub(crate) fn split_p(x: &BigUint, p: u64) -> (i64, BigUint) {
    debug_assert!(!x.is_zero());
    if p == 2 {
        let tz = x.trailing_zeros().unwrap_or(0);
        return (tz as i64, x >> tz);
    }
    let mut v = 0;
    let mut x = x.clone();
    loop {
        let (q, r) = x.div_rem(&BigUint::from(p));
        if !r.is_zero() {
            return (v, x);
        }
        x = q;
        v += 1;
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The prime p and absolute precision N shared by every scalar of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Context {
    p: u64,
    precision: i64,
}

impl Context {
    pub fn new(p: u64, precision: i64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if precision <= 0 {
            return Err(Error::BadPrecision(precision));
        }
        Ok(Context { p, precision })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn with_precision(&self, precision: i64) -> Result<Self> {
        Context::new(self.p, precision)
    }

    /// Valuation threshold above which a scalar is treated as zero by the
    /// heuristics (integer detection, ranks, eigenspace splitting).
    pub fn zero_threshold(&self) -> i64 {
        (self.precision + 1) / 2
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar {
            ctx: *self,
            val: None,
            unit: BigUint::zero(),
        }
    }

    pub fn one(&self) -> PadicScalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> PadicScalar {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> PadicScalar {
        if n.is_zero() {
            return self.zero();
        }
        let (v, u) = split_p(n.magnitude(), self.p);
        self.build(v, u, n.sign() == Sign::Minus)
    }

    /// num/den as a p-adic number.
    pub fn from_rational(&self, num: &BigInt, den: &BigInt) -> Result<PadicScalar> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(self.zero());
        }
        let (vn, un) = split_p(num.magnitude(), self.p);
        let (vd, ud) = split_p(den.magnitude(), self.p);
        let v = vn - vd;
        if v >= self.precision {
            return Ok(self.zero());
        }
        let m = pow_p(self.p, self.precision - v);
        let inv = (&ud % m.as_ref())
            .modinv(m.as_ref())
            .expect("unit part is invertible");
        let u = (un * inv) % m.as_ref();
        Ok(self.build(v, u, (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus)))
    }

    pub fn from_ratio(&self, r: &BigRational) -> PadicScalar {
        self.from_rational(r.numer(), r.denom())
            .expect("ratio has nonzero denominator")
    }

    /// Parses "n", "-n" or "num/den".
    pub fn parse_rational(&self, s: &str) -> Result<PadicScalar> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        let den: BigInt = den
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        self.from_rational(&num, &den)
    }

    /// Scalar from a valuation and unit digits (reduced here).
    pub fn from_parts(&self, v: i64, unit: &BigUint) -> Result<PadicScalar> {
        if unit.is_zero() {
            return Ok(self.zero());
        }
        if (unit % self.p).is_zero() {
            return Err(Error::Parse("unit digits divisible by p".into()));
        }
        Ok(self.build(v, unit.clone(), false))
    }

    /// Sum of d_i p^i for p-adic digits d_i.
    pub fn from_digits(&self, digits: &[u64]) -> Result<PadicScalar> {
        let mut acc = BigUint::zero();
        for (i, &d) in digits.iter().enumerate() {
            if d >= self.p {
                return Err(Error::Parse(format!("digit {d} out of range for p = {}", self.p)));
            }
            acc += pow_p(self.p, i as i64).as_ref() * d;
        }
        Ok(self.from_bigint(&BigInt::from(acc)))
    }

    fn build(&self, v: i64, u: BigUint, negative: bool) -> PadicScalar {
        if v >= self.precision {
            return self.zero();
        }
        let mut u = reduce(self.p, u, self.precision - v);
        if negative {
            u = pow_p(self.p, self.precision - v).as_ref() - u;
        }
        PadicScalar {
            ctx: *self,
            val: Some(v),
            unit: u,
        }
    }
}

/// An element of Q_p known modulo p^N: p^v · u with u a unit mod p^(N−v),
/// or "at least N" (zero at this precision).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    ctx: Context,
    val: Option<i64>,
    unit: BigUint,
}

impl PadicScalar {
    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn p(&self) -> u64 {
        self.ctx.p
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    /// Valuation as an integer, None for AT_LEAST_N.
    pub fn v(&self) -> Option<i64> {
        self.val
    }

    pub fn valuation(&self) -> Val {
        match self.val {
            Some(v) => Val::exact(v),
            None => Val::at_least(self.ctx.precision),
        }
    }

    /// v, or N for AT_LEAST_N; handy for min/max bookkeeping.
    pub fn v_or_n(&self) -> i64 {
        self.val.unwrap_or(self.ctx.precision)
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    fn check(&self, other: &PadicScalar) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::MixedContext(format!(
                "(p={}, N={}) vs (p={}, N={})",
                self.ctx.p, self.ctx.precision, other.ctx.p, other.ctx.precision
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn try_sub(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.check(other)?;
        Ok(self.add_unchecked(&other.neg_ref()))
    }

    pub fn try_mul(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &PadicScalar) -> Result<PadicScalar> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.inv()?))
    }

    fn add_unchecked(&self, other: &PadicScalar) -> PadicScalar {
        let (vx, vy) = match (self.val, other.val) {
            (None, _) => return other.clone(),
            (_, None) => return self.clone(),
            (Some(a), Some(b)) => (a, b),
        };
        let p = self.ctx.p;
        let n = self.ctx.precision;
        let v = vx.min(vy);
        let mut s = BigUint::zero();
        for (vi, ui) in [(vx, &self.unit), (vy, &other.unit)] {
            if vi == v {
                s += ui;
            } else if vi - v < n - v {
                s += ui * pow_p(p, vi - v).as_ref();
            }
        }
        let s = reduce(p, s, n - v);
        if s.is_zero() {
            return self.ctx.zero();
        }
        let (w, u) = split_p(&s, p);
        self.ctx.build(v + w, u, false)
    }

    fn mul_unchecked(&self, other: &PadicScalar) -> PadicScalar {
        match (self.val, other.val) {
            (Some(a), Some(b)) => {
                let v = a + b;
                if v >= self.ctx.precision {
                    return self.ctx.zero();
                }
                let u = reduce(self.ctx.p, &self.unit * &other.unit, self.ctx.precision - v);
                PadicScalar {
                    ctx: self.ctx,
                    val: Some(v),
                    unit: u,
                }
            }
            _ => self.ctx.zero(),
        }
    }

    fn neg_ref(&self) -> PadicScalar {
        match self.val {
            None => self.clone(),
            Some(v) => {
                let m = pow_p(self.ctx.p, self.ctx.precision - v);
                PadicScalar {
                    ctx: self.ctx,
                    val: Some(v),
                    unit: m.as_ref() - &self.unit,
                }
            }
        }
    }

    pub fn inv(&self) -> Result<PadicScalar> {
        let v = self
            .val
            .ok_or_else(|| Error::PrecisionExhausted("inverting a scalar that is zero at precision".into()))?;
        let w = -v;
        if w >= self.ctx.precision {
            return Ok(self.ctx.zero());
        }
        let u = inverse_mod_pk(&self.unit, self.ctx.p, self.ctx.precision - w);
        Ok(PadicScalar {
            ctx: self.ctx,
            val: Some(w),
            unit: u,
        })
    }

    /// Multiplication by p^k (exact shift of the valuation).
    pub fn mul_pow_p(&self, k: i64) -> PadicScalar {
        match self.val {
            None => self.clone(),
            Some(v) => self.ctx.build(v + k, self.unit.clone(), false),
        }
    }

    pub fn mul_i64(&self, k: i64) -> PadicScalar {
        self.mul_unchecked(&self.ctx.from_i64(k))
    }

    pub fn add_i64(&self, k: i64) -> PadicScalar {
        self.add_unchecked(&self.ctx.from_i64(k))
    }

    /// The same number in another precision: truncated when lowering.
    /// Raising lifts the balanced representative (unit in (−p^k/2, p^k/2]),
    /// so that small negative integers and negated values stay exact.
    pub fn with_precision(&self, ctx: &Context) -> PadicScalar {
        assert_eq!(ctx.p, self.ctx.p, "cannot change the prime");
        let Some(v) = self.val else {
            return ctx.zero();
        };
        if ctx.precision > self.ctx.precision {
            let m = pow_p(self.ctx.p, self.ctx.precision - v);
            if &self.unit * 2u32 > *m.as_ref() {
                return ctx.build(v, m.as_ref() - &self.unit, true);
            }
        }
        ctx.build(v, self.unit.clone(), false)
    }

    /// The exact rational p^v·u this scalar stores.
    pub fn to_rational(&self) -> BigRational {
        match self.val {
            None => BigRational::zero(),
            Some(v) => {
                let u = BigInt::from(self.unit.clone());
                if v >= 0 {
                    BigRational::from_integer(u * BigInt::from(pow_p(self.ctx.p, v).as_ref().clone()))
                } else {
                    BigRational::new(u, BigInt::from(pow_p(self.ctx.p, -v).as_ref().clone()))
                }
            }
        }
    }

    /// The integer m with |m| ≤ window and v(self − m) ≥ N/2, if any.
    pub fn nearest_integer(&self, window: i64) -> Option<i64> {
        let v = match self.val {
            None => return Some(0),
            Some(v) => v,
        };
        if v < 0 {
            return None;
        }
        let h = self.ctx.zero_threshold();
        let ph = pow_p(self.ctx.p, h);
        if ph.as_ref() <= &BigUint::from((2 * window + 1) as u64) {
            // Tiny precision: pick the best candidate by brute force.
            return (-window..=window)
                .filter(|&m| self.add_i64(-m).v_or_n() >= h)
                .max_by_key(|&m| (self.add_i64(-m).v_or_n(), -m.abs()));
        }
        let rep = &self.unit * pow_p(self.ctx.p, v).as_ref();
        let r = rep % ph.as_ref();
        if let Some(r) = r.to_i64() {
            if r <= window {
                return Some(r);
            }
        }
        let neg = ph.as_ref() - &r;
        match neg.to_i64() {
            Some(k) if k <= window => Some(-k),
            _ => None,
        }
    }

    /// A small rational with the same p-adic expansion to precision,
    /// found by rational reconstruction, if numerator and denominator
    /// are both below `height`.
    pub fn small_rational(&self, height: u64) -> Option<BigRational> {
        self.small_rational_at(self.ctx.precision, height)
    }

    /// As [`small_rational`](Self::small_rational), trusting only the
    /// digits below absolute precision `prec`.
    pub fn small_rational_at(&self, prec: i64, height: u64) -> Option<BigRational> {
        let v = match self.val {
            Some(v) if v < prec => v,
            _ => return Some(BigRational::zero()),
        };
        let m = pow_p(self.ctx.p, prec - v);
        let m_int = BigInt::from(m.as_ref().clone());
        let h = BigInt::from(height);
        let (mut r0, mut r1) = (m_int, BigInt::from(&self.unit % m.as_ref()));
        let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
        while r1 >= h {
            let q = &r0 / &r1;
            let r2 = &r0 - &q * &r1;
            let t2 = &t0 - &q * &t1;
            r0 = std::mem::replace(&mut r1, r2);
            t0 = std::mem::replace(&mut t1, t2);
        }
        if t1.is_zero() || t1.abs() >= h || (&t1 % BigInt::from(self.ctx.p)).is_zero() {
            return None;
        }
        // r1 ≡ t1·u mod m, so u ≡ r1/t1.
        let q = BigRational::new(r1, t1);
        let scaled = if v >= 0 {
            q * BigRational::from_integer(BigInt::from(pow_p(self.ctx.p, v).as_ref().clone()))
        } else {
            q / BigRational::from_integer(BigInt::from(pow_p(self.ctx.p, -v).as_ref().clone()))
        };
        Some(scaled)
    }

    /// Short human form: a small rational when one matches, else p^v*u.
    pub fn short(&self) -> String {
        if let Some(q) = self.small_rational(1 << 20) {
            if q.is_integer() {
                return q.numer().to_string();
            }
            return format!("{}/{}", q.numer(), q.denom());
        }
        self.to_string()
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.val {
            None => write!(f, "O({}^{})", self.ctx.p, self.ctx.precision),
            Some(0) => write!(f, "{}", self.unit),
            Some(v) => write!(f, "{}^{}*{}", self.ctx.p, v, self.unit),
        }
    }
}

impl Serialize for PadicScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PadicScalar", 2)?;
        match self.val {
            Some(v) => st.serialize_field("v", &v)?,
            None => st.serialize_field("v", &format!(">={}", self.ctx.precision))?,
        }
        st.serialize_field("u", &self.unit.to_string())?;
        st.end()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a PadicScalar> for &'a PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: &'a PadicScalar) -> PadicScalar {
                assert_eq!(self.ctx, rhs.ctx, "mixed p-adic contexts");
                $body(self, rhs)
            }
        }
        impl $tr<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a: &PadicScalar, b: &PadicScalar| a.add_unchecked(b));
binop!(Sub, sub, |a: &PadicScalar, b: &PadicScalar| a.add_unchecked(&b.neg_ref()));
binop!(Mul, mul, |a: &PadicScalar, b: &PadicScalar| a.mul_unchecked(b));

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_ref()
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(ctx: &Context, n: i64, d: i64) -> PadicScalar {
        ctx.from_rational(&n.into(), &d.into()).unwrap()
    }

    /// Extended Euclid, independent of BigUint::modinv.
    fn euclid_inverse(a: i64, m: i64) -> i64 {
        let (mut r0, mut r1, mut s0, mut s1) = (m, a.rem_euclid(m), 0i64, 1i64);
        while r1 != 0 {
            let t = r0 / r1;
            (r0, r1) = (r1, r0 - t * r1);
            (s0, s1) = (s1, s0 - t * s1);
        }
        assert_eq!(r0, 1);
        s0.rem_euclid(m)
    }

    #[test]
    fn from_rational_examples() {
        let c3 = Context::new(3, 10).unwrap();
        let x = q(&c3, 6, 1);
        assert_eq!(x.v(), Some(1));
        assert_eq!(x.unit(), &BigUint::from(2u32));

        let c2 = Context::new(2, 8).unwrap();
        let third = q(&c2, 1, 3);
        assert_eq!(third.v(), Some(0));
        assert_eq!(third.unit(), &BigUint::from(euclid_inverse(3, 256) as u64));
        assert_eq!(euclid_inverse(3, 256), 171);

        let c5 = Context::new(5, 6).unwrap();
        assert!(q(&c5, 0, 5).is_zero());
        assert_eq!(
            c5.from_rational(&1.into(), &0.into()),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn arith_examples() {
        let c3 = Context::new(3, 10).unwrap();
        let a = c3.from_parts(1, &BigUint::from(2u32)).unwrap();
        let b = c3.from_parts(2, &BigUint::from(1u32)).unwrap();
        assert_eq!((&a * &b).v(), Some(3));
        assert!((&a + &(-&a)).is_zero());

        let c2 = Context::new(2, 8).unwrap();
        let inv = c2.from_i64(3).inv().unwrap();
        assert_eq!(inv.v(), Some(0));
        assert_eq!(inv.unit(), &BigUint::from(171u32));
        assert!(matches!(c2.zero().inv(), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn mixed_context_rejected() {
        let a = Context::new(2, 8).unwrap().one();
        let b = Context::new(2, 9).unwrap().one();
        let c = Context::new(3, 8).unwrap().one();
        assert!(matches!(a.try_add(&b), Err(Error::MixedContext(_))));
        assert!(matches!(a.try_mul(&c), Err(Error::MixedContext(_))));
    }

    #[test]
    fn context_validation() {
        assert_eq!(Context::new(4, 8), Err(Error::NotPrime(4)));
        assert_eq!(Context::new(2, 0), Err(Error::BadPrecision(0)));
    }

    #[test]
    fn negative_valuations_round_trip() {
        let c = Context::new(3, 12).unwrap();
        let x = q(&c, 7, 81);
        assert_eq!(x.v(), Some(-4));
        assert_eq!(x.to_rational(), BigRational::new(7.into(), 81.into()));
        let y = &x * &c.from_i64(81);
        assert_eq!(y, c.from_i64(7));
    }

    #[test]
    fn digits_and_parts() {
        let c = Context::new(5, 6).unwrap();
        assert_eq!(c.from_digits(&[1, 2, 3]).unwrap(), c.from_i64(1 + 10 + 75));
        assert!(c.from_digits(&[5]).is_err());
        assert!(c.from_parts(0, &BigUint::from(10u32)).is_err());
        assert_eq!(c.parse_rational(" -4/10 ").unwrap(), q(&c, -2, 5));
    }

    #[test]
    fn nearest_integer_detection() {
        let c = Context::new(2, 64).unwrap();
        assert_eq!(c.from_i64(5).nearest_integer(64), Some(5));
        assert_eq!(c.from_i64(-7).nearest_integer(64), Some(-7));
        assert_eq!(c.from_i64(100).nearest_integer(64), None);
        assert_eq!(q(&c, 1, 3).nearest_integer(64), None);
        assert_eq!(q(&c, 1, 2).nearest_integer(64), None);
        assert_eq!(c.zero().nearest_integer(64), Some(0));
        // 3 + 2^40: within 2^-40 of 3, but N/2 = 32 so it counts as 3.
        let near = &c.from_i64(3) + &c.one().mul_pow_p(40);
        assert_eq!(near.nearest_integer(64), Some(3));
        let far = &c.from_i64(3) + &c.one().mul_pow_p(20);
        assert_eq!(far.nearest_integer(64), None);
    }

    #[test]
    fn small_rational_reconstructs() {
        let c = Context::new(2, 64).unwrap();
        let x = q(&c, -5, 12);
        assert_eq!(x.small_rational(1 << 20), Some(BigRational::new((-5).into(), 12.into())));
        assert_eq!(x.short(), "-5/12");
        assert_eq!(c.from_i64(-3).short(), "-3");
    }

    #[test]
    fn serialization_shape() {
        let c = Context::new(2, 8).unwrap();
        let s = serde_json::to_string(&c.from_i64(12)).unwrap();
        assert_eq!(s, r#"{"v":2,"u":"3"}"#);
        let z = serde_json::to_string(&c.zero()).unwrap();
        assert_eq!(z, r#"{"v":">=8","u":"0"}"#);
    }

    fn ctx_strategy() -> impl Strategy<Value = Context> {
        (prop_oneof![Just(2u64), Just(3), Just(5), Just(7)], 4i64..40)
            .prop_map(|(p, n)| Context::new(p, n).unwrap())
    }

    proptest! {
        #[test]
        fn valuation_axioms(ctx in ctx_strategy(), a in -10_000i64..10_000, b in 1i64..500,
                            c in -10_000i64..10_000, d in 1i64..500) {
            let x = q(&ctx, a, b);
            let y = q(&ctx, c, d);
            let n = ctx.precision();
            if let (Some(vx), Some(vy)) = (x.v(), y.v()) {
                let prod = &x * &y;
                if vx + vy < n {
                    prop_assert_eq!(prod.v(), Some(vx + vy));
                } else {
                    prop_assert!(prod.is_zero());
                }
                let s = &x + &y;
                prop_assert!(s.v_or_n() >= vx.min(vy));
                if vx != vy && vx.min(vy) < n {
                    prop_assert_eq!(s.v(), Some(vx.min(vy)));
                }
            }
        }

        #[test]
        fn matches_rational_arithmetic(ctx in ctx_strategy(), a in -1000i64..1000, b in 1i64..100,
                                       c in -1000i64..1000, d in 1i64..100) {
            let x = q(&ctx, a, b);
            let y = q(&ctx, c, d);
            prop_assert_eq!(&x + &y, q(&ctx, a * d + b * c, b * d));
            prop_assert_eq!(&x - &y, q(&ctx, a * d - b * c, b * d));
            // Exact on representatives; products agree to precision N once
            // both factors are integral.
            if x.v_or_n() >= 0 && y.v_or_n() >= 0 {
                prop_assert_eq!(&x * &y, q(&ctx, a * c, b * d));
            }
            if !x.is_zero() && x.v_or_n() == 0 {
                let one = &x * &x.inv().unwrap();
                prop_assert_eq!(one, ctx.one());
            }
        }
    }
}
