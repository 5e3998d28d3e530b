//! The triangular recursion behind every solver here:
//!
//!   (C_0 + mI)·x_m = b_m − Σ_{i=1..m} C_i·x_(m−i),   m ≥ s,
//!
//! with x_0..x_(s−1) prescribed. Clark solutions use C = A; the Fuchs
//! splitting and gauge equivalences use C = the Hom connection matrix.

use crate::error::Error;
use crate::padic::{Lu, Matrix};
use crate::series::MatSeries;

pub(crate) struct Recurrence<'a> {
    pub ops: &'a MatSeries,
    pub rhs: Option<&'a MatSeries>,
    /// Exact initial terms x_0..x_(s−1).
    pub prefix: Vec<Matrix>,
    pub degree: usize,
    /// Precision N of the data. The operators may live at a wider
    /// context, built there from the lifted data, so that their
    /// combinations stay exact against terms of negative valuation.
    pub data_precision: i64,
}

pub(crate) struct Solution {
    /// At the operators' context.
    pub terms: Vec<Matrix>,
    /// Absolute precision of each term, counting the data as exact
    /// rationals rounded at p^N.
    pub precision: Vec<i64>,
    /// Digits of N lost to the linear solves.
    pub residual_loss: i64,
    pub forward_loss: i64,
}

pub(crate) enum Failure {
    /// C_0 + mI is singular at precision.
    Singular(usize),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Other(e)
    }
}

impl Recurrence<'_> {
    pub fn solve(&self) -> Result<Solution, Failure> {
        let ops = self.ops;
        let ctx = *ops.ctx();
        let work = ctx.precision();
        let n_prec = self.data_precision;
        let n = ops.rows();
        let d = self.degree;
        let s = self.prefix.len();
        let limit = ops.trunc().min(self.rhs.map_or(usize::MAX, |b| b.trunc()));
        if d > limit {
            return Err(Error::IndexBeyondTruncation { index: d, trunc: limit }.into());
        }
        let op_val: Vec<Option<i64>> = (0..=d).map(|i| ops.coeff(i).min_v()).collect();

        let mut lus = Vec::with_capacity(d + 1);
        for m in s..=d {
            let shifted = ops.coeff(0).add(&Matrix::scalar(&ctx, n, &ctx.from_i64(m as i64)));
            let lu = Lu::factor(&shifted).map_err(|e| match e {
                Error::SingularAtPrecision => Failure::Singular(m),
                other => Failure::Other(other),
            })?;
            if lu.max_pivot() >= n_prec {
                return Err(Failure::Singular(m));
            }
            lus.push(lu);
        }

        // A-priori budget from the pivots alone; refuse to start if some
        // term would be known to no digits at all.
        let mut apriori = vec![n_prec; d + 1];
        for m in s..=d {
            let e_rhs = (1..=m)
                .filter_map(|i| op_val[i].map(|v| apriori[m - i] + v))
                .fold(n_prec, i64::min);
            apriori[m] = e_rhs.min(n_prec) - lus[m - s].max_pivot();
            if apriori[m] <= 0 {
                return Err(Error::PrecisionExhausted(format!(
                    "precision budget exceeds N = {n_prec} at degree {m}"
                ))
                .into());
            }
        }

        let mut terms = self.prefix.clone();
        let mut precision = vec![n_prec; s];
        let mut residual_loss = 0;
        for m in s..=d {
            let mut rhs = match self.rhs {
                Some(b) => b.coeff(m).clone(),
                None => Matrix::zeros(&ctx, n, 1),
            };
            // Errors in the right side: propagated errors of earlier terms,
            // and the data's own rounding (at p^N) times those terms.
            let mut e_rhs = n_prec;
            for i in 1..=m {
                let Some(v) = op_val[i] else { continue };
                let x = &terms[m - i];
                if x.is_zero() && precision[m - i] >= n_prec {
                    continue;
                }
                let vx = x.min_v().unwrap_or(n_prec).min(0);
                e_rhs = e_rhs.min(precision[m - i] + v).min(n_prec + vx);
                rhs = rhs.sub(&ops.coeff(i).mul(x));
            }
            let sol = lus[m - s].solve(&rhs)?;
            let solved_to = work - sol.residual_loss;
            residual_loss = residual_loss.max(n_prec - solved_to);
            // δx = (C_0 + m)⁻¹·(δrhs − δC_0·x).
            let vx = sol.x.min_v().unwrap_or(n_prec).min(0);
            let e = (e_rhs.min(solved_to).min(n_prec + vx) - sol.max_pivot).min(n_prec);
            terms.push(sol.x);
            precision.push(e);
        }
        let forward_loss = precision.iter().map(|e| n_prec - e).max().unwrap_or(0).max(0);
        Ok(Solution {
            terms,
            precision,
            residual_loss,
            forward_loss,
        })
    }
}

/// The same system assembled as one block lower-triangular linear system
/// and solved densely at raised precision: an independent check of the
/// recursion. Returns the terms at the caller's precision and the guard
/// digits used.
pub(crate) fn dense_solve(
    ops: &MatSeries,
    rhs: Option<&MatSeries>,
    prefix: &[Matrix],
    degree: usize,
) -> Result<(Vec<Matrix>, i64), Error> {
    let ctx = *ops.ctx();
    let n = ops.rows();
    let s = prefix.len();
    if degree > ops.trunc() {
        return Err(Error::IndexBeyondTruncation {
            index: degree,
            trunc: ops.trunc(),
        });
    }
    if degree < s {
        return Ok((prefix[..=degree].to_vec(), 0));
    }
    let blocks = degree + 1 - s;
    let mut guard = 0i64;
    for _ in 0..6 {
        let wide = ctx.with_precision(ctx.precision() + guard)?;
        let c: Vec<Matrix> = (0..=degree).map(|i| ops.coeff(i).with_precision(&wide)).collect();
        let pre: Vec<Matrix> = prefix.iter().map(|x| x.with_precision(&wide)).collect();
        let mut big = Matrix::zeros(&wide, n * blocks, n * blocks);
        let mut b = Matrix::zeros(&wide, n * blocks, 1);
        for m in s..=degree {
            let row = (m - s) * n;
            for j in s..=m {
                let mut blk = c[m - j].clone();
                if j == m {
                    blk = blk.add(&Matrix::scalar(&wide, n, &wide.from_i64(m as i64)));
                }
                big.set_block(row, (j - s) * n, &blk);
            }
            let mut r = match rhs {
                Some(rhs) => rhs.coeff(m).with_precision(&wide),
                None => Matrix::zeros(&wide, n, 1),
            };
            for (j, x) in pre.iter().enumerate() {
                r = r.sub(&c[m - j].mul(x));
            }
            b.set_block(row, 0, &r);
        }
        let sol = big.solve(&b)?;
        if sol.forward_loss <= guard {
            let mut terms = prefix.to_vec();
            for m in s..=degree {
                let blk = sol.x.submatrix((m - s) * n..(m - s + 1) * n, 0..1);
                terms.push(blk.with_precision(&ctx));
            }
            return Ok((terms, guard));
        }
        guard = (2 * sol.forward_loss).max(guard + 16);
    }
    Err(Error::PrecisionExhausted(format!(
        "dense solve needs more than {guard} guard digits"
    )))
}
