use serde::Serialize;

use super::certificate::{certify, CertOptions, SolveCertificate};
use super::recursion::{dense_solve, Failure, Recurrence, Solution};
use super::RegularConnection;
use crate::error::{Error, Result};
use crate::padic::{Context, Matrix, PadicScalar, Val};
use crate::series::MatSeries;

/// Σ_i (1,…,1)ᵀ z^i.
pub fn ones_rhs(ctx: &Context, rank: usize, trunc: usize) -> MatSeries {
    MatSeries::new(vec![Matrix::from_fn(ctx, rank, 1, |_, _| ctx.one()); trunc + 1])
}

/// a with θa + A·a = b.
#[derive(Clone, Debug, Serialize)]
pub struct ClarkSolution {
    #[serde(skip)]
    pub a: MatSeries,
    pub precision: Vec<i64>,
    pub residual_loss: i64,
    pub forward_loss: i64,
    /// Valuation of φ(a) − b recomputed from the output.
    pub residual: Val,
    pub certificate: SolveCertificate,
}

/// Fundamental solution U with U_0 = I and A·U + θU = U·A_0.
#[derive(Clone, Debug, Serialize)]
pub struct FuchsSolution {
    #[serde(skip)]
    pub u: MatSeries,
    pub precision: Vec<i64>,
    pub residual_loss: i64,
    pub forward_loss: i64,
    /// Valuation of A·U + θU − U·A_0.
    pub residual: Val,
    pub certificate: SolveCertificate,
}

/// T with T ≡ I mod z^(k+1) and B·T − T·A + θT = 0.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeSolution {
    #[serde(skip)]
    pub t: MatSeries,
    pub k: usize,
    pub precision: Vec<i64>,
    pub residual_loss: i64,
    pub forward_loss: i64,
    pub residual: Val,
    pub det_constant: PadicScalar,
    pub unit_determinant: bool,
    pub certificate: SolveCertificate,
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub terms: MatSeries,
    pub guard: i64,
}

fn min_degree(a: &MatSeries, b: &MatSeries) -> usize {
    a.trunc().min(b.trunc())
}

type Built = (MatSeries, Option<MatSeries>, Vec<Matrix>);

/// Runs the recursion at W = N + guard on operators built from the lifted
/// data. Terms can have very negative valuation, and a combination of the
/// data rounded at p^N (a difference of exponents, say) would then carry
/// its rounding far above p^N. The guard grows until every term has
/// valuation ≥ 16 − guard.
fn run_widened(ctx: &Context, degree: usize, build: impl Fn(&Context) -> Result<Built>) -> std::result::Result<(Solution, Context), Failure> {
    let n = ctx.precision();
    let mut guard = (n / 2).max(32);
    loop {
        let wide = ctx.with_precision(n + guard)?;
        let (ops, rhs, prefix) = build(&wide)?;
        let sol = Recurrence {
            ops: &ops,
            rhs: rhs.as_ref(),
            prefix,
            degree,
            data_precision: n,
        }
        .solve()?;
        let low = sol.terms.iter().filter_map(|t| t.min_v()).min().unwrap_or(0);
        if low + guard >= 16 {
            return Ok((sol, wide));
        }
        guard = 2 * (16 - low);
    }
}

/// The computed terms rounded to N, and the same lifted back to `wide`
/// for residual checks against the lifted data.
fn rounded(terms: Vec<Matrix>, ctx: &Context, wide: &Context) -> (MatSeries, MatSeries) {
    let out = MatSeries::new(terms).with_precision(ctx);
    let lifted = out.with_precision(wide);
    (out, lifted)
}

/// Valuation at N of a residual computed at the wide precision, and the
/// loss it shows.
fn read_residual(r: MatSeries, ctx: &Context) -> (Val, i64) {
    let v = r.with_precision(ctx).valuation();
    let loss = match v.exact_value() {
        Some(x) => ctx.precision() - x.floor().to_integer(),
        None => 0,
    };
    (v, loss.max(0))
}

/// Solves φ(a) = b to the common truncation. Exponents in {0, −1, −2, …}
/// make some C_0 + m singular; twist first.
pub fn clark_solve(m: &RegularConnection, b: &MatSeries) -> Result<ClarkSolution> {
    if b.rows() != m.rank() || b.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "rhs is {}x{}, expected {}x1",
            b.rows(),
            b.cols(),
            m.rank()
        )));
    }
    let ctx = *m.ctx();
    let d = min_degree(m.matrix(), b);
    let (m, b) = (m.truncate(d), b.truncate(d));
    let (sol, wide) = run_widened(&ctx, d, |w| Ok((m.matrix().with_precision(w), Some(b.with_precision(w)), Vec::new())))
        .map_err(|f| match f {
            Failure::Singular(m) => Error::ResidueShiftSingular { m },
            Failure::Other(e) => e,
        })?;
    let (a, a_w) = rounded(sol.terms, &ctx, &wide);
    let certificate = certify(a.coeffs(), &sol.precision, &CertOptions::default());
    let (residual, seen) = read_residual(m.with_precision(&wide).apply(&a_w).sub(&b.with_precision(&wide)), &ctx);
    Ok(ClarkSolution {
        a,
        precision: sol.precision,
        residual_loss: sol.residual_loss.max(seen),
        forward_loss: sol.forward_loss,
        residual,
        certificate,
    })
}

/// The splitting of M ≅ (constant connection A_0): a horizontal section
/// of Hom(const(A_0), M) with constant term I.
pub fn fuchs_solution(m: &RegularConnection) -> Result<FuchsSolution> {
    let ctx = *m.ctx();
    let r = m.rank();
    let d = m.trunc();
    let (sol, wide) = run_widened(&ctx, d, |w| {
        let mw = m.with_precision(w);
        let hom = RegularConnection::constant(&mw.residue(), d)?.hom(&mw)?;
        Ok((hom.matrix().clone(), None, vec![Matrix::identity(w, r).vec()]))
    })
    .map_err(|f| match f {
        Failure::Singular(i) => Error::SylvesterSingular { degree: i },
        Failure::Other(e) => e,
    })?;
    let (u, u_w) = rounded(sol.terms, &ctx, &wide);
    let certificate = certify(u.coeffs(), &sol.precision, &CertOptions::default());
    let (u, u_w) = (u.unvec(r, r), u_w.unvec(r, r));
    let mw = m.with_precision(&wide);
    let (residual, seen) = read_residual(mw.apply(&u_w).sub(&u_w.mul_const_right(&mw.residue())), &ctx);
    Ok(FuchsSolution {
        u,
        precision: sol.precision,
        residual_loss: sol.residual_loss.max(seen),
        forward_loss: sol.forward_loss,
        residual,
        certificate,
    })
}

/// Gauge transformation between two connections that agree mod z^(k+1)
/// and whose exponents are (k+1)-weakly prepared.
pub fn gauge_equivalence(ma: &RegularConnection, mb: &RegularConnection, k: usize) -> Result<GaugeSolution> {
    if ma.rank() != mb.rank() {
        return Err(Error::DimensionMismatch(format!(
            "ranks {} and {}",
            ma.rank(),
            mb.rank()
        )));
    }
    if !ma.congruent_mod(mb, k) {
        return Err(Error::NotCongruentModZk(k + 1));
    }
    let ctx = *ma.ctx();
    let r = ma.rank();
    let d = ma.trunc().min(mb.trunc());
    let (ma, mb) = (ma.truncate(d), mb.truncate(d));
    let (sol, wide) = run_widened(&ctx, d, |w| {
        let hom = ma.with_precision(w).hom(&mb.with_precision(w))?;
        let mut prefix = vec![Matrix::identity(w, r).vec()];
        prefix.extend((0..k.min(d)).map(|_| Matrix::zeros(w, r * r, 1)));
        Ok((hom.matrix().clone(), None, prefix))
    })
    .map_err(|f| match f {
        Failure::Singular(i) => Error::SylvesterSingular { degree: i },
        Failure::Other(e) => e,
    })?;
    let (t, t_w) = rounded(sol.terms, &ctx, &wide);
    let certificate = certify(t.coeffs(), &sol.precision, &CertOptions::default());
    let (t, t_w) = (t.unvec(r, r), t_w.unvec(r, r));
    let (residual, seen) = read_residual(
        mb.with_precision(&wide)
            .apply(&t_w)
            .sub(&t_w.mul(ma.with_precision(&wide).matrix())),
        &ctx,
    );
    let det_constant = t.coeff(0).det();
    Ok(GaugeSolution {
        unit_determinant: det_constant.v() == Some(0),
        t,
        k,
        precision: sol.precision,
        residual_loss: sol.residual_loss.max(seen),
        forward_loss: sol.forward_loss,
        residual,
        det_constant,
        certificate,
    })
}

/// Clark's equation solved as one dense linear system.
pub fn dense_oracle_solve(m: &RegularConnection, b: &MatSeries) -> Result<OracleSolution> {
    let d = min_degree(m.matrix(), b);
    let (terms, guard) = dense_solve(m.matrix(), Some(b), &[], d)?;
    Ok(OracleSolution {
        terms: MatSeries::new(terms),
        guard,
    })
}

/// The Fuchs splitting U solved as one dense linear system; terms are
/// r×r.
pub fn dense_oracle_fuchs(m: &RegularConnection) -> Result<OracleSolution> {
    let ctx = *m.ctx();
    let r = m.rank();
    let hom = RegularConnection::constant(&m.residue(), m.trunc())?.hom(m)?;
    let (terms, guard) = dense_solve(hom.matrix(), None, &[Matrix::identity(&ctx, r).vec()], m.trunc())?;
    Ok(OracleSolution {
        terms: MatSeries::new(terms).unvec(r, r),
        guard,
    })
}
