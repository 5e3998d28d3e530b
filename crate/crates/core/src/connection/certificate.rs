//! Convergence certificates for computed solutions: a line
//! v(a_i) ≥ c − s·i fitted to the valuation profile, or evidence of a late
//! jump in the windowed slopes.

use serde::Serialize;

use crate::padic::{Matrix, Val};
use crate::profile::{detect_jump, windowed_max, Jump, JumpRule, WindowSlope};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertOptions {
    pub windows: usize,
    pub rule: JumpRule,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            windows: 10,
            rule: JumpRule::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProfileEntry {
    pub degree: usize,
    pub valuation: Val,
    pub precision: i64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Every known coefficient lies on or above the fitted line up to D.
    ConvergentUpToD { slope: f64 },
    DivergenceSuspect { evidence: Jump },
    /// Coefficient `at` is unknown and its precision lies below the line.
    PrecisionExhausted { at: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveCertificate {
    pub degree: usize,
    /// Valuation of the first known nonzero coefficient.
    pub c0: Option<i64>,
    pub slope: f64,
    pub intercept: f64,
    pub windows: Vec<WindowSlope>,
    pub profile: Vec<ProfileEntry>,
    pub verdict: Verdict,
}

impl SolveCertificate {
    pub fn is_convergent(&self) -> bool {
        matches!(self.verdict, Verdict::ConvergentUpToD { .. })
    }

    pub fn is_divergence_suspect(&self) -> bool {
        matches!(self.verdict, Verdict::DivergenceSuspect { .. })
    }

    pub fn profile_pairs(&self) -> Vec<(usize, Val)> {
        self.profile.iter().map(|e| (e.degree, e.valuation)).collect()
    }
}

/// Minimal entry valuation of a coefficient known to absolute precision
/// `prec`: exact when some entry is nonzero below `prec`.
fn known_valuation(m: &Matrix, prec: i64) -> Val {
    match m.min_v() {
        Some(v) if v < prec => Val::exact(v),
        _ => Val::at_least(prec),
    }
}

pub fn certify(terms: &[Matrix], precision: &[i64], opts: &CertOptions) -> SolveCertificate {
    let d = terms.len().saturating_sub(1);
    let profile: Vec<ProfileEntry> = terms
        .iter()
        .zip(precision)
        .enumerate()
        .map(|(degree, (m, &p))| ProfileEntry {
            degree,
            valuation: known_valuation(m, p),
            precision: p,
        })
        .collect();
    let exact = |i: usize| -> Option<i64> {
        profile[i]
            .valuation
            .exact_value()
            .map(|r| r.to_integer())
    };
    let c0 = (0..=d).find_map(exact);
    let Some(c0) = c0 else {
        // Nothing nonzero is known; decide on precision alone.
        let verdict = match profile.iter().find(|e| e.precision <= 0) {
            Some(e) => Verdict::PrecisionExhausted { at: e.degree },
            None => Verdict::ConvergentUpToD { slope: 0.0 },
        };
        return SolveCertificate {
            degree: d,
            c0: None,
            slope: 0.0,
            intercept: f64::INFINITY,
            windows: Vec::new(),
            profile,
            verdict,
        };
    };
    let windows = windowed_max(d, opts.windows, |i| {
        exact(i).map(|v| (c0 - v) as f64 / i as f64)
    });
    let half = windows.len() / 2;
    let slope = windows[half..]
        .iter()
        .filter_map(|w| w.slope)
        .fold(0.0f64, f64::max);
    let intercept = (0..=d)
        .filter_map(|i| exact(i).map(|v| v as f64 + slope * i as f64))
        .fold(f64::INFINITY, f64::min);
    let verdict = if let Some(evidence) = detect_jump(&windows, opts.rule) {
        Verdict::DivergenceSuspect { evidence }
    } else if let Some(e) = profile.iter().find(|e| {
        !e.valuation.is_exact() && (e.precision as f64) < intercept - slope * e.degree as f64
    }) {
        Verdict::PrecisionExhausted { at: e.degree }
    } else {
        Verdict::ConvergentUpToD { slope }
    };
    SolveCertificate {
        degree: d,
        c0: Some(c0),
        slope,
        intercept,
        windows,
        profile,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Context;

    fn column(ctx: &Context, vals: &[Option<i64>]) -> Vec<Matrix> {
        vals.iter()
            .map(|v| {
                Matrix::from_fn(ctx, 1, 1, |_, _| match v {
                    Some(v) => ctx.one().mul_pow_p(*v),
                    None => ctx.zero(),
                })
            })
            .collect()
    }

    #[test]
    fn bounded_profile_is_convergent() {
        let ctx = Context::new(2, 64).unwrap();
        let vals: Vec<Option<i64>> = (0..=100).map(|i| Some(-((i as i64) % 3))).collect();
        let t = column(&ctx, &vals);
        let c = certify(&t, &vec![64; 101], &CertOptions::default());
        assert!(c.is_convergent(), "{:?}", c.verdict);
        assert!(c.slope < 0.1);
        // The certified line is below every coefficient.
        for (i, v) in vals.iter().enumerate() {
            assert!(v.unwrap() as f64 >= c.intercept - c.slope * i as f64 - 1e-9);
        }
    }

    #[test]
    fn late_spike_is_divergence() {
        let ctx = Context::new(2, 1024).unwrap();
        let mut vals: Vec<Option<i64>> = (0..=300).map(|_| Some(0)).collect();
        vals[262] = Some(-768);
        let c = certify(&column(&ctx, &vals), &vec![1024; 301], &CertOptions::default());
        match c.verdict {
            Verdict::DivergenceSuspect { evidence } => {
                assert!(evidence.start <= 262 && 262 <= evidence.end);
                assert!(evidence.slope > 2.5);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn unknown_tail_below_line_is_exhausted() {
        let ctx = Context::new(2, 64).unwrap();
        let vals: Vec<Option<i64>> = (0..=50).map(|_| Some(0)).collect();
        let mut prec = vec![64; 51];
        let mut t = column(&ctx, &vals);
        t[40] = Matrix::zeros(&ctx, 1, 1);
        prec[40] = -3;
        let c = certify(&t, &prec, &CertOptions::default());
        assert_eq!(c.verdict, Verdict::PrecisionExhausted { at: 40 });
    }
}
