use serde::Serialize;

use super::exponents::{exponents, ExponentOptions, ExponentReport};
use super::RegularConnection;
use crate::error::{Error, Result};
use crate::padic::Matrix;

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CohomologyDims {
    pub h0: usize,
    pub h1: usize,
    /// φ is computed on M / z^n M.
    pub n_used: usize,
    pub rank_of_phi: usize,
}

/// Smallest n with no exponent in {−n, −n−1, …}: past it φ is bijective
/// on z^n·M, so M / z^n M carries all of the cohomology.
pub fn default_cut(report: &ExponentReport) -> usize {
    report
        .integers()
        .into_iter()
        .filter(|&l| l <= 0)
        .map(|l| (1 - l) as usize)
        .max()
        .unwrap_or(0)
}

/// dim ker and dim coker of φ on M / z^n M, with the rank decided at the
/// zero threshold.
pub fn cohomology_dims(m: &RegularConnection, n: Option<usize>, opts: &ExponentOptions) -> Result<CohomologyDims> {
    let n = match n {
        Some(n) => n,
        None => default_cut(&exponents(m, opts)?),
    };
    let r = m.rank();
    if n == 0 {
        return Ok(CohomologyDims {
            h0: 0,
            h1: 0,
            n_used: 0,
            rank_of_phi: 0,
        });
    }
    if n - 1 > m.trunc() {
        return Err(Error::IndexBeyondTruncation {
            index: n - 1,
            trunc: m.trunc(),
        });
    }
    let ctx = *m.ctx();
    let size = r * n;
    // Basis e_j z^i, block (i', i) = A_(i'−i) + i·δ.
    let mut phi = Matrix::zeros(&ctx, size, size);
    for col in 0..n {
        for row in col..n {
            let mut blk = m.matrix().coeff(row - col).clone();
            if row == col {
                blk = blk.add(&Matrix::scalar(&ctx, r, &ctx.from_i64(col as i64)));
            }
            phi.set_block(row * r, col * r, &blk);
        }
    }
    let ech = phi.echelon(ctx.zero_threshold());
    // Digits above N − Σ pivots are rounding; anything nonzero below that
    // but above the threshold makes the rank undecidable here.
    let slack: i64 = ech.pivot_valuations().iter().sum();
    if let Some(v) = ech.ambiguous {
        if v < ctx.precision() - slack {
            return Err(Error::RankAmbiguousAtPrecision { valuation: v });
        }
    }
    Ok(CohomologyDims {
        h0: size - ech.rank,
        h1: size - ech.rank,
        n_used: n,
        rank_of_phi: ech.rank,
    })
}
