//! p-adic Liouville type: type(λ) is the radius of convergence of
//! Σ z^m/(λ−m), i.e. p^(−limsup v(λ−m)/m). Finite horizons only give upper
//! bounds; nothing here ever certifies positive type.

use num_bigint::BigInt;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::padic::scalar::pow_p;
use crate::padic::val::ratio_to_f64;
use crate::padic::{Context, PadicScalar};
use crate::profile::{detect_jump, windowed_max, Jump, JumpRule, WindowSlope};

pub const DEFAULT_HORIZON: u64 = 300;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Σ_{j≤k} p^(e_j) with e_1 = 1, e_(j+1) = j·p^(e_j).
#[derive(Clone, Debug, Serialize)]
pub struct GapNumber {
    pub value: PadicScalar,
    pub exponents: Vec<i64>,
}

impl GapNumber {
    /// (m, v(λ − m)) at the partial sums m = Σ_{i≤j} p^(e_i), j < k, that
    /// are ≤ `max_m`: the places where the spikes must appear.
    pub fn spike_positions(&self, max_m: u64) -> Vec<(u64, i64)> {
        let p = self.value.p();
        let mut out = Vec::new();
        let mut sum = BigInt::from(0);
        for j in 0..self.exponents.len().saturating_sub(1) {
            sum += BigInt::from(pow_p(p, self.exponents[j]).as_ref().clone());
            match u64::try_from(&sum) {
                Ok(m) if m <= max_m => out.push((m, self.exponents[j + 1])),
                _ => break,
            }
        }
        out
    }
}

pub fn gap_number(ctx: &Context, k: usize) -> Result<GapNumber> {
    if k == 0 {
        return Err(Error::Parse("gap number depth must be ≥ 1".into()));
    }
    let p = ctx.p() as i64;
    let too_small = |needed: i64| Error::PrecisionTooSmall {
        needed,
        precision: ctx.precision(),
    };
    let mut exponents = vec![1i64];
    for j in 1..k {
        let e = *exponents.last().unwrap();
        let pe = u32::try_from(e)
            .ok()
            .and_then(|e| p.checked_pow(e))
            .and_then(|pe| pe.checked_mul(j as i64))
            .ok_or_else(|| too_small(i64::MAX))?;
        exponents.push(pe);
    }
    let top = *exponents.last().unwrap();
    if top >= ctx.precision() {
        return Err(too_small(top));
    }
    let mut value = ctx.zero();
    for &e in &exponents {
        value = &value + &ctx.one().mul_pow_p(e);
    }
    Ok(GapNumber { value, exponents })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TypeOptions {
    pub horizon: u64,
    /// First m used for the supremum; None means ⌈M/8⌉. The limsup defining
    /// the type ignores any finite prefix, while tiny m inflate v(λ−m)/m.
    pub burn_in: Option<u64>,
}

impl Default for TypeOptions {
    fn default() -> Self {
        TypeOptions {
            horizon: DEFAULT_HORIZON,
            burn_in: None,
        }
    }
}

impl TypeOptions {
    pub fn with_horizon(horizon: u64) -> Self {
        TypeOptions {
            horizon,
            burn_in: None,
        }
    }

    pub fn effective_burn_in(&self) -> u64 {
        self.burn_in
            .unwrap_or_else(|| self.horizon.div_ceil(8))
            .max(1)
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct Spike {
    pub m: u64,
    pub valuation: i64,
}

fn ser_ratio<S: Serializer>(r: &Option<Ratio<i64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        None => s.serialize_none(),
        Some(r) if r.is_integer() => s.serialize_str(&r.numer().to_string()),
        Some(r) => s.serialize_str(&format!("{}/{}", r.numer(), r.denom())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeEstimate {
    pub lambda: PadicScalar,
    pub lambda_short: String,
    pub p: u64,
    pub precision: i64,
    pub horizon: u64,
    pub burn_in: u64,
    /// max over burn_in ≤ m ≤ M of v(λ−m)/m, excluding saturated m.
    #[serde(serialize_with = "ser_ratio")]
    pub observed_sup: Option<Ratio<i64>>,
    pub observed_sup_value: Option<f64>,
    pub argmax: Option<u64>,
    /// min(1, p^(−observed_sup)).
    pub type_upper_bound: f64,
    /// The same supremum over all 1 ≤ m ≤ M.
    #[serde(serialize_with = "ser_ratio")]
    pub raw_sup: Option<Ratio<i64>>,
    pub raw_argmax: Option<u64>,
    /// Spikes are m with v(λ−m) ≥ spike_floor = max(1, ⌈log_p M⌉).
    pub spike_floor: i64,
    pub spikes: Vec<Spike>,
    /// m with v(λ−m) ≥ N: "λ may equal m at precision".
    pub excluded: Vec<u64>,
    pub saturated: bool,
}

fn ceil_log(p: u64, m: u64) -> i64 {
    let mut k = 0;
    let mut acc = 1u128;
    while acc < m as u128 {
        acc *= p as u128;
        k += 1;
    }
    k
}

pub fn estimate_type(lambda: &PadicScalar, opts: TypeOptions) -> TypeEstimate {
    let ctx = *lambda.ctx();
    let p = ctx.p();
    let m_max = opts.horizon;
    let burn_in = opts.effective_burn_in();
    let spike_floor = ceil_log(p, m_max).max(1);
    let mut best: Option<(Ratio<i64>, u64)> = None;
    let mut raw: Option<(Ratio<i64>, u64)> = None;
    let mut spikes = Vec::new();
    let mut excluded = Vec::new();
    for m in 1..=m_max {
        let d = lambda.add_i64(-(m as i64));
        let Some(v) = d.v() else {
            excluded.push(m);
            continue;
        };
        let r = Ratio::new(v, m as i64);
        if raw.is_none_or(|(b, _)| r > b) {
            raw = Some((r, m));
        }
        if m >= burn_in && best.is_none_or(|(b, _)| r > b) {
            best = Some((r, m));
        }
        if v >= spike_floor {
            spikes.push(Spike { m, valuation: v });
        }
    }
    let bound = match best {
        Some((r, _)) => (p as f64).powf(-ratio_to_f64(&r)).min(1.0),
        None => 1.0,
    };
    TypeEstimate {
        lambda: lambda.clone(),
        lambda_short: lambda.short(),
        p,
        precision: ctx.precision(),
        horizon: m_max,
        burn_in,
        observed_sup: best.map(|b| b.0),
        observed_sup_value: best.map(|(r, _)| ratio_to_f64(&r)),
        argmax: best.map(|b| b.1),
        type_upper_bound: bound,
        raw_sup: raw.map(|b| b.0),
        raw_argmax: raw.map(|b| b.1),
        spike_floor,
        spikes,
        saturated: !excluded.is_empty(),
        excluded,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SlopeVerdict {
    PositiveTypeConsistent,
    LiouvilleSuspect { evidence: Jump },
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub lambda_short: String,
    pub horizon: u64,
    /// V_m = Σ_{j≤m} v(λ−j), for m = 0..=M (saturated factors skipped).
    pub cumulative: Vec<i64>,
    pub s_star: f64,
    pub s_star_at: u64,
    pub windows: Vec<WindowSlope>,
    pub verdict: SlopeVerdict,
    pub excluded: Vec<u64>,
}

/// Growth of v(Π_{j=0}^m (λ−j)) against m.
pub fn slope_criterion(lambda: &PadicScalar, horizon: u64) -> SlopeReport {
    let mut cumulative = Vec::with_capacity(horizon as usize + 1);
    let mut excluded = Vec::new();
    let mut acc = 0i64;
    for j in 0..=horizon {
        match lambda.add_i64(-(j as i64)).v() {
            Some(v) => acc += v,
            None => excluded.push(j),
        }
        cumulative.push(acc);
    }
    let ratio = |m: usize| Some(cumulative[m] as f64 / m as f64);
    let (mut s_star, mut s_star_at) = (f64::NEG_INFINITY, 0);
    for m in 1..=horizon as usize {
        let r = ratio(m).unwrap();
        if r > s_star {
            s_star = r;
            s_star_at = m as u64;
        }
    }
    let windows = windowed_max(horizon as usize, 10, ratio);
    let verdict = match detect_jump(&windows, JumpRule::default()) {
        Some(evidence) => SlopeVerdict::LiouvilleSuspect { evidence },
        None => SlopeVerdict::PositiveTypeConsistent,
    };
    SlopeReport {
        lambda_short: lambda.short(),
        horizon,
        cumulative,
        s_star: if horizon == 0 { 0.0 } else { s_star },
        s_star_at,
        windows,
        verdict,
        excluded,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NlEntry {
    pub index: usize,
    pub suspect: bool,
    pub estimate: TypeEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct NldEntry {
    pub i: usize,
    pub j: usize,
    pub suspect: bool,
    pub estimate: TypeEstimate,
}

/// Heuristic (N-T0-L) / (N-T0-LD) classification: finite data can only
/// flag Liouville suspects, never certify positive type.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub threshold: f64,
    pub horizon: u64,
    pub heuristic: bool,
    pub nl_suspect: bool,
    pub nld_suspect: bool,
    /// type(−λ_i) per exponent.
    pub nl: Vec<NlEntry>,
    /// type(λ_i − λ_j) for every ordered pair.
    pub nld: Vec<NldEntry>,
}

pub fn classify_exponents(exponents: &[PadicScalar], opts: TypeOptions, threshold: f64) -> Classification {
    let nl: Vec<NlEntry> = exponents
        .iter()
        .enumerate()
        .map(|(index, l)| {
            let estimate = estimate_type(&-l, opts);
            NlEntry {
                index,
                suspect: estimate.type_upper_bound < threshold,
                estimate,
            }
        })
        .collect();
    let mut nld = Vec::new();
    for (i, a) in exponents.iter().enumerate() {
        for (j, b) in exponents.iter().enumerate() {
            let estimate = estimate_type(&(a - b), opts);
            nld.push(NldEntry {
                i,
                j,
                suspect: estimate.type_upper_bound < threshold,
                estimate,
            });
        }
    }
    Classification {
        threshold,
        horizon: opts.horizon,
        heuristic: true,
        nl_suspect: nl.iter().any(|e| e.suspect),
        nld_suspect: nld.iter().any(|e| e.suspect),
        nl,
        nld,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, n: i64) -> Context {
        Context::new(p, n).unwrap()
    }

    #[test]
    fn gap_number_examples() {
        let c = ctx(2, 1024);
        let g = gap_number(&c, 4).unwrap();
        assert_eq!(g.exponents, vec![1, 2, 8, 768]);
        // λ − 262 = 2^768 exactly.
        assert_eq!(g.value.add_i64(-262), c.one().mul_pow_p(768));
        assert_eq!(gap_number(&c, 1).unwrap().value, c.from_i64(2));
        assert_eq!(gap_number(&ctx(3, 100), 3).unwrap().exponents, vec![1, 3, 54]);
        assert!(matches!(gap_number(&ctx(2, 700), 4), Err(Error::PrecisionTooSmall { .. })));
        assert!(matches!(gap_number(&c, 5), Err(Error::PrecisionTooSmall { .. })));
    }

    #[test]
    fn gap_spikes_at_partial_sums() {
        let c = ctx(2, 1024);
        let g = gap_number(&c, 4).unwrap();
        let positions = g.spike_positions(300);
        assert_eq!(positions, vec![(2, 2), (6, 8), (262, 768)]);
        for (m, v) in positions {
            assert_eq!(g.value.add_i64(-(m as i64)).v(), Some(v));
        }
        let est = estimate_type(&g.value, TypeOptions::with_horizon(300));
        assert!(est.spikes.contains(&Spike { m: 262, valuation: 768 }));
        assert_eq!(est.observed_sup, Some(Ratio::new(768, 262)));
        assert!(est.type_upper_bound <= 2f64.powf(-768.0 / 262.0) + 1e-12);
    }

    #[test]
    fn negated_gap_has_no_large_spikes() {
        let c = ctx(2, 1024);
        let g = gap_number(&c, 4).unwrap();
        let est = estimate_type(&-&g.value, TypeOptions::with_horizon(300));
        assert!(est.type_upper_bound >= 0.9, "{}", est.type_upper_bound);
        assert!(est.spikes.iter().all(|s| s.valuation < 20));
    }

    #[test]
    fn integer_lambda_excludes_itself() {
        let c = ctx(3, 200);
        let est = estimate_type(&c.from_i64(5), TypeOptions::with_horizon(200));
        assert_eq!(est.excluded, vec![5]);
        assert!(est.saturated);
        assert!(est.type_upper_bound > 0.85, "{}", est.type_upper_bound);
    }

    #[test]
    fn literal_definition_with_burn_in_one() {
        let c = ctx(2, 1024);
        let g = gap_number(&c, 4).unwrap();
        let opts = TypeOptions {
            horizon: 300,
            burn_in: Some(1),
        };
        let est = estimate_type(&-&g.value, opts);
        // m = 2: v(−λ − 2) = v(λ + 2) = v(8 + …) = 3.
        assert_eq!(est.raw_sup, Some(Ratio::new(3, 2)));
        assert_eq!(est.observed_sup, est.raw_sup);
    }

    #[test]
    fn slope_examples() {
        let c = ctx(2, 1024);
        let third = c.from_rational(&1.into(), &3.into()).unwrap();
        let r = slope_criterion(&third, 300);
        assert_eq!(r.verdict, SlopeVerdict::PositiveTypeConsistent);
        assert!(r.s_star < 2.5);

        let g = gap_number(&c, 4).unwrap();
        let r = slope_criterion(&g.value, 300);
        match &r.verdict {
            SlopeVerdict::LiouvilleSuspect { evidence } => {
                assert!(evidence.start <= 262 && 262 <= evidence.end)
            }
            v => panic!("expected a jump, got {v:?}"),
        }
        assert_eq!(r.s_star_at, 262);

        let r = slope_criterion(&c.from_i64(7), 5);
        assert!(r.s_star <= 1.0);
        assert!(r.excluded.is_empty());
    }

    #[test]
    fn classification_examples() {
        let c = ctx(2, 1024);
        let third = c.from_rational(&1.into(), &3.into()).unwrap();
        let cl = classify_exponents(&[c.zero(), third], TypeOptions::default(), DEFAULT_THRESHOLD);
        assert!(!cl.nl_suspect && !cl.nld_suspect);
        let cl = classify_exponents(&[c.zero()], TypeOptions::default(), DEFAULT_THRESHOLD);
        assert!(!cl.nl_suspect && !cl.nld_suspect);

        let lam = -&gap_number(&c, 4).unwrap().value;
        let cl = classify_exponents(&[lam.clone(), lam.add_i64(1)], TypeOptions::default(), DEFAULT_THRESHOLD);
        assert!(cl.nl_suspect);
        assert!(!cl.nld_suspect);
        assert_eq!(cl.nld.len(), 4);
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// type(λ) = type(λ + s): spike tables agree after shifting m by s.
        #[test]
        fn shift_invariance(num in -500i64..500, den in 1i64..40, s in 1i64..30) {
            let c = ctx(2, 256);
            let lam = c.from_rational(&num.into(), &den.into()).unwrap();
            let shifted = lam.add_i64(s);
            let opts = TypeOptions { horizon: 200, burn_in: Some(1) };
            let a = estimate_type(&lam, opts);
            let b = estimate_type(&shifted, opts);
            let floor = a.spike_floor;
            let from_a: Vec<(u64, i64)> = a.spikes.iter()
                .filter(|sp| sp.m as i64 + s <= 200)
                .map(|sp| ((sp.m as i64 + s) as u64, sp.valuation)).collect();
            let from_b: Vec<(u64, i64)> = b.spikes.iter()
                .filter(|sp| sp.m as i64 > s && sp.valuation >= floor)
                .map(|sp| (sp.m, sp.valuation)).collect();
            prop_assert_eq!(from_a, from_b);
        }

        /// Monotonicity: observed_sup non-decreasing, bound non-increasing in M.
        #[test]
        fn monotone_in_horizon(num in -500i64..500, den in 1i64..40, m1 in 10u64..150, extra in 0u64..150) {
            let c = ctx(3, 256);
            let lam = c.from_rational(&num.into(), &den.into()).unwrap();
            let a = estimate_type(&lam, TypeOptions { horizon: m1, burn_in: Some(5) });
            let b = estimate_type(&lam, TypeOptions { horizon: m1 + extra, burn_in: Some(5) });
            prop_assert!(b.observed_sup >= a.observed_sup);
            prop_assert!(b.type_upper_bound <= a.type_upper_bound + 1e-15);
        }
    }
}
