use serde::Serialize;

use super::RegularConnection;
use crate::error::{Error, Result};
use crate::liouville::{classify_exponents, Classification, TypeOptions, DEFAULT_THRESHOLD};
use crate::padic::{charpoly, roots_with_multiplicity, PadicScalar};

#[derive(Clone, Debug)]
pub struct ExponentOptions {
    /// Integers are searched in [−window, window].
    pub window: i64,
    /// Attach a Liouville classification of the exponents.
    pub types: Option<TypeOptions>,
    pub threshold: f64,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions {
            window: 64,
            types: None,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ExponentOptions {
    pub fn with_types(types: TypeOptions) -> Self {
        ExponentOptions {
            types: Some(types),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentEntry {
    pub value: PadicScalar,
    pub short: String,
    pub multiplicity: usize,
    /// Absolute precision to which the value is trusted.
    pub precision: i64,
    pub integer: Option<i64>,
}

/// λ_i − λ_j = difference for distinct entries i ≠ j.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct IntegerDifference {
    pub i: usize,
    pub j: usize,
    pub difference: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub source: &'static str,
    pub window: i64,
    pub exponents: Vec<ExponentEntry>,
    pub integer_differences: Vec<IntegerDifference>,
    /// No two exponents differ by a nonzero integer.
    pub weakly_prepared: bool,
    /// Least k with k'+1+(λ_i−λ_j) ≠ 0 for all k' ≥ k.
    pub min_weak_preparation: usize,
    pub types: Option<Classification>,
}

impl ExponentReport {
    /// Whether k'+1+(λ_i−λ_j) ≠ 0 for every k' ≥ k, i.e. no difference
    /// is ≤ −(k+1).
    pub fn k_weakly_prepared_for(&self, k: usize) -> bool {
        k >= self.min_weak_preparation
    }

    /// Exponents listed with multiplicity.
    pub fn values(&self) -> Vec<PadicScalar> {
        self.exponents
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value.clone(), e.multiplicity))
            .collect()
    }

    /// Integer exponents (with multiplicity).
    pub fn integers(&self) -> Vec<i64> {
        self.exponents
            .iter()
            .filter_map(|e| e.integer.map(|n| (n, e.multiplicity)))
            .flat_map(|(n, m)| std::iter::repeat_n(n, m))
            .collect()
    }
}

/// Eigenvalues of the residue with multiplicities, from the declared list
/// when present, otherwise from the characteristic polynomial.
pub fn exponents(m: &RegularConnection, opts: &ExponentOptions) -> Result<ExponentReport> {
    let ctx = *m.ctx();
    let h = ctx.zero_threshold();
    let (source, mut entries) = match m.declared_exponents() {
        Some(decl) => {
            let mut out: Vec<ExponentEntry> = Vec::new();
            for l in decl {
                match out.iter_mut().find(|e| (&e.value - l).v_or_n() >= h) {
                    Some(e) => e.multiplicity += 1,
                    None => out.push(entry(l.clone(), 1, ctx.precision(), opts.window)),
                }
            }
            ("declared", out)
        }
        None => {
            let search = roots_with_multiplicity(&charpoly(&m.residue()))?;
            if search.missing > 0 {
                return Err(Error::UnsupportedExponentField {
                    missing: search.missing,
                });
            }
            let out = search
                .roots
                .into_iter()
                .map(|r| entry(r.value, r.multiplicity, r.precision, opts.window))
                .collect();
            ("characteristic_polynomial", out)
        }
    };
    // Stable order: integers ascending first, then the rest as found.
    entries.sort_by_key(|e| (e.integer.is_none(), e.integer));

    let mut diffs = Vec::new();
    for (i, a) in entries.iter().enumerate() {
        for (j, b) in entries.iter().enumerate() {
            if i == j {
                continue;
            }
            let trust = a.precision.min(b.precision).min(h);
            if let Some(d) = near_integer(&(&a.value - &b.value), 2 * opts.window, trust) {
                diffs.push(IntegerDifference { i, j, difference: d });
            }
        }
    }
    let min_k = diffs
        .iter()
        .filter(|d| d.difference < 0)
        .map(|d| (-d.difference) as usize)
        .max()
        .unwrap_or(0);
    let weakly_prepared = diffs.iter().all(|d| d.difference == 0);
    let types = opts.types.map(|t| {
        let vals: Vec<PadicScalar> = entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value.clone(), e.multiplicity))
            .collect();
        classify_exponents(&vals, t, opts.threshold)
    });
    Ok(ExponentReport {
        source,
        window: opts.window,
        exponents: entries,
        integer_differences: diffs,
        weakly_prepared,
        min_weak_preparation: min_k,
        types,
    })
}

/// The integer n with |n| ≤ window and v(x − n) ≥ trust, if any.
fn near_integer(x: &PadicScalar, window: i64, trust: i64) -> Option<i64> {
    if x.v_or_n() < 0 {
        return None;
    }
    (-window..=window).find(|&n| x.add_i64(-n).v_or_n() >= trust)
}

fn entry(value: PadicScalar, multiplicity: usize, precision: i64, window: i64) -> ExponentEntry {
    let trust = precision.min(value.ctx().zero_threshold());
    let integer = near_integer(&value, window, trust);
    let short = match integer {
        Some(n) => n.to_string(),
        None => crate::padic::Root {
            value: value.clone(),
            multiplicity,
            certified: false,
            precision,
        }
        .short(),
    };
    ExponentEntry {
        value,
        short,
        multiplicity,
        precision,
        integer,
    }
}
