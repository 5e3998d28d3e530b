//! Shearing: move the generalized eigenspace of one exponent c by z,
//! which raises c to c+1 and leaves the other exponents alone.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::exponents::{exponents, ExponentOptions};
use super::RegularConnection;
use crate::error::{Error, Result};
use crate::padic::{Matrix, PadicScalar, Val};
use crate::series::MatSeries;

#[derive(Clone, Debug)]
pub struct ShearStep {
    pub connection: RegularConnection,
    /// New basis = old basis · T, with A·T + θT = T·A'. Held at twice the
    /// working precision.
    pub transform: MatSeries,
    pub block_size: usize,
}

impl ShearStep {
    pub fn residual(&self, original: &RegularConnection) -> Val {
        gauge_residual(original, &self.transform, &self.connection)
    }
}

/// Valuation, at the working precision of `a`, of A·T + θT − T·B. The
/// connections are lifted to T's precision so that rounding of T's
/// representatives does not leak into the check.
pub fn gauge_residual(a: &RegularConnection, t: &MatSeries, b: &RegularConnection) -> Val {
    let wide = *t.ctx();
    let d = a.trunc().min(b.trunc()).min(t.trunc());
    let lift = |m: &RegularConnection| m.matrix().truncate(d).with_precision(&wide);
    let t = t.truncate(d);
    lift(a)
        .mul(&t)
        .add(&t.theta())
        .sub(&t.mul(&lift(b)))
        .with_precision(a.ctx())
        .valuation()
}

#[derive(Clone, Debug, Serialize)]
pub struct StepInfo {
    pub exponent: String,
    pub block_size: usize,
    pub exponents_after: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ShearReport {
    pub connection: RegularConnection,
    pub transform: MatSeries,
    pub steps: Vec<StepInfo>,
}

impl ShearReport {
    /// Valuation of A·T + θT − T·A' against the original A.
    pub fn residual(&self, original: &RegularConnection) -> Val {
        gauge_residual(original, &self.transform, &self.connection)
    }
}

/// One shear at the exponent `c`. The basis is first adapted to
/// ker (A_0 − c)^r ⊕ im (A_0 − c)^r; the first block is then multiplied
/// by z. The truncation drops by one when both blocks are nonempty.
pub fn shear_step(m: &RegularConnection, c: &PadicScalar) -> Result<ShearStep> {
    let ctx = *m.ctx();
    let r = m.rank();
    let h = ctx.zero_threshold();
    // The eigenbasis is computed at doubled precision, and made exact when
    // its columns are small rationals; otherwise zeroing the off-diagonal
    // residue blocks below would cost digits.
    let wide = ctx.with_precision(2 * ctx.precision())?;
    let hw = wide.zero_threshold();
    let a0 = m.residue().with_precision(&wide);
    let k = a0.sub(&Matrix::scalar(&wide, r, &c.with_precision(&wide))).pow(r as u32);
    let ker = k.kernel(hw)?;
    let s = ker.cols();
    if s == 0 {
        return Err(Error::EigenspaceSplitFailure(format!("{} is not an exponent", c.short())));
    }
    let ech = k.echelon(hw);
    if s + ech.rank != r {
        return Err(Error::EigenspaceSplitFailure("kernel and image do not span".into()));
    }
    let mut parts: Vec<Matrix> = (0..s).map(|j| exact_column(&ker.column(j))).collect();
    parts.extend(ech.pivot_cols.iter().map(|&j| exact_column(&k.column(j))));
    let p_wide = Matrix::hstack(&parts);
    let lu = p_wide
        .lu()
        .map_err(|_| Error::EigenspaceSplitFailure("kernel meets image".into()))?;
    if lu.det_valuation() >= h {
        return Err(Error::EigenspaceSplitFailure("kernel meets image".into()));
    }
    let p_inv = p_wide.inverse()?;
    let d = m.trunc();
    let mut conj: Vec<Matrix> = (0..=d)
        .map(|i| {
            p_inv
                .mul(&m.matrix().coeff(i).with_precision(&wide))
                .mul(&p_wide)
                .with_precision(&ctx)
        })
        .collect();
    // The residue is block diagonal up to rounding; make it exactly so.
    for i in 0..r {
        for j in 0..r {
            if (i < s) != (j < s) {
                if conj[0][(i, j)].v_or_n() < h {
                    return Err(Error::EigenspaceSplitFailure("residue is not block diagonal".into()));
                }
                conj[0][(i, j)] = ctx.zero();
            }
        }
    }
    let new_d = if s < r { d - 1 } else { d };
    if s < r && d == 0 {
        return Err(Error::IndexBeyondTruncation { index: 1, trunc: 0 });
    }
    let one = ctx.one();
    let coeffs: Vec<Matrix> = (0..=new_d)
        .map(|i| {
            Matrix::from_fn(&ctx, r, r, |a, b| match (a < s, b < s) {
                (true, true) if i == 0 && a == b => &conj[0][(a, b)] + &one,
                (true, true) | (false, false) => conj[i][(a, b)].clone(),
                (true, false) => conj[i + 1][(a, b)].clone(),
                (false, true) if i >= 1 => conj[i - 1][(a, b)].clone(),
                (false, true) => ctx.zero(),
            })
        })
        .collect();
    let declared = m.declared_exponents().map(|ds| {
        let mut left = s;
        ds.iter()
            .map(|l| {
                if left > 0 && (l - c).v_or_n() >= h {
                    left -= 1;
                    l.add_i64(1)
                } else {
                    l.clone()
                }
            })
            .collect::<Vec<_>>()
    });
    let mut connection = RegularConnection::new(MatSeries::new(coeffs))?;
    if let Some(ds) = declared {
        connection = connection.with_declared_exponents(ds)?;
    }
    // T = P·diag(z·I_s, I_(r−s)), kept at the doubled precision where
    // integer entries of P are exact.
    let t0 = Matrix::from_fn(&wide, r, r, |a, b| if b < s { wide.zero() } else { p_wide[(a, b)].clone() });
    let t1 = Matrix::from_fn(&wide, r, r, |a, b| if b < s { p_wide[(a, b)].clone() } else { wide.zero() });
    let mut tc = vec![Matrix::zeros(&wide, r, r); new_d + 1];
    tc[0] = t0;
    if new_d >= 1 {
        tc[1] = t1;
    }
    Ok(ShearStep {
        connection,
        transform: MatSeries::new(tc),
        block_size: s,
    })
}

/// Shears until no two exponents differ by a nonzero integer. Each step
/// takes the largest exponent c (within its class mod Z) that has another
/// exponent c + d, d > 0.
pub fn shear_to_prepared(m: &RegularConnection, max_steps: usize, opts: &ExponentOptions) -> Result<ShearReport> {
    let opts = ExponentOptions {
        types: None,
        ..opts.clone()
    };
    let mut cur = m.clone();
    let wide = m.ctx().with_precision(2 * m.ctx().precision())?;
    let mut transform = MatSeries::identity(&wide, m.rank(), m.trunc());
    let mut steps = Vec::new();
    loop {
        let report = exponents(&cur, &opts)?;
        if report.weakly_prepared {
            return Ok(ShearReport {
                connection: cur,
                transform,
                steps,
            });
        }
        if steps.len() == max_steps {
            return Err(Error::MaxStepsExceeded(max_steps));
        }
        // Entries i with λ_j − λ_i = d > 0 for some j.
        let below: Vec<usize> = report
            .integer_differences
            .iter()
            .filter(|d| d.difference < 0)
            .map(|d| d.i)
            .collect();
        let pick = below
            .iter()
            .copied()
            .find(|&i| {
                !report
                    .integer_differences
                    .iter()
                    .any(|d| d.j == i && d.difference > 0 && below.contains(&d.i))
            })
            .expect("a maximal element exists");
        let c = report.exponents[pick].value.clone();
        let step = shear_step(&cur, &c)?;
        transform = transform.truncate(step.connection.trunc()).mul(&step.transform);
        cur = step.connection;
        let after = exponents(&cur, &opts)?;
        steps.push(StepInfo {
            exponent: report.exponents[pick].short.clone(),
            block_size: step.block_size,
            exponents_after: after
                .exponents
                .iter()
                .flat_map(|e| std::iter::repeat_n(e.short.clone(), e.multiplicity))
                .collect(),
        });
    }
}

/// The column scaled to a primitive vector: integral with a unit entry,
/// and with integer entries when every entry is a small rational.
fn exact_column(col: &Matrix) -> Matrix {
    let ctx = *col.ctx();
    let rats: Option<Vec<BigRational>> = col.entries().iter().map(|x| x.small_rational(1 << 20)).collect();
    if let Some(rats) = rats {
        let l = rats.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
        let ints: Vec<BigInt> = rats.iter().map(|q| (q * BigRational::from_integer(l.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_zero() {
            return Matrix::from_fn(&ctx, col.rows(), 1, |i, _| ctx.from_bigint(&(&ints[i] / &g)));
        }
    }
    match col.min_v() {
        Some(v) => col.map(|x| x.mul_pow_p(-v)),
        None => col.clone(),
    }
}
