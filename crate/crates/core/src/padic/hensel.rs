//! Roots in Z_p (and, after rescaling, Q_p) of monic polynomials: a digit
//! tree search guided by Newton-polygon cluster counts, finished by Newton
//! iteration once a root is isolated.

use serde::Serialize;

use super::poly::{derivative, eval, roots_with_valuation_at_least, taylor_shift};
use super::scalar::{Context, PadicScalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Root {
    pub value: PadicScalar,
    pub multiplicity: usize,
    /// Newton-certified simple root; an m-fold cluster is only known to
    /// depth about N/m.
    pub certified: bool,
    /// Absolute precision to which the root is known.
    pub precision: i64,
}

impl Root {
    /// Short form using only the trusted digits.
    pub fn short(&self) -> String {
        match self.value.small_rational_at(self.precision, 1 << 16) {
            Some(q) if q.is_integer() => q.numer().to_string(),
            Some(q) => format!("{}/{}", q.numer(), q.denom()),
            None => self.value.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RootSearch {
    pub roots: Vec<Root>,
    /// Degree minus the multiplicities found: roots outside Q_p.
    pub missing: usize,
}

/// All simple roots in Z_p of a monic polynomial with Z_p coefficients,
/// lifted to precision N.
pub fn hensel_zp_roots(poly: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
    check_monic(poly)?;
    if poly.iter().any(|c| c.v_or_n() < 0) {
        return Err(Error::Parse("coefficients must lie in Z_p".into()));
    }
    let roots = tree_search(poly)?;
    let mut out = Vec::new();
    for r in roots {
        if r.multiplicity > 1 {
            return Err(Error::UnresolvedFactor {
                depth: r.value.ctx().zero_threshold(),
            });
        }
        out.push(r.value);
    }
    Ok(out)
}

/// Roots in Q_p with multiplicities, for characteristic polynomials.
/// Non-integral coefficients are handled by the substitution x = y/p^s.
pub fn roots_with_multiplicity(poly: &[PadicScalar]) -> Result<RootSearch> {
    check_monic(poly)?;
    let d = poly.len() - 1;
    let mut s = 0i64;
    for (j, c) in poly.iter().enumerate().take(d) {
        if let Some(v) = c.v() {
            if v < 0 {
                let k = (d - j) as i64;
                s = s.max((-v + k - 1) / k);
            }
        }
    }
    let scaled: Vec<PadicScalar> = poly
        .iter()
        .enumerate()
        .map(|(j, c)| c.mul_pow_p(s * (d - j) as i64))
        .collect();
    let mut roots = tree_search(&scaled)?;
    for r in &mut roots {
        r.value = r.value.mul_pow_p(-s);
        r.precision -= s;
    }
    let found: usize = roots.iter().map(|r| r.multiplicity).sum();
    Ok(RootSearch {
        roots,
        missing: d.saturating_sub(found),
    })
}

fn check_monic(poly: &[PadicScalar]) -> Result<()> {
    match poly.last() {
        Some(c) if c == &c.ctx().one() && poly.len() >= 2 => Ok(()),
        _ => Err(Error::Parse("polynomial must be monic of degree ≥ 1".into())),
    }
}

/// Newton iteration from an approximate simple root.
fn newton(poly: &[PadicScalar], start: &PadicScalar) -> PadicScalar {
    let df = derivative(poly);
    let mut x = start.clone();
    for _ in 0..2 * (64 - (x.ctx().precision() as u64).leading_zeros()) + 4 {
        let fx = eval(poly, &x);
        if fx.is_zero() {
            break;
        }
        let Ok(step) = fx.try_div(&eval(&df, &x)) else { break };
        let next = &x - &step;
        if next == x {
            break;
        }
        x = next;
    }
    x
}

struct Node {
    r: PadicScalar,
    depth: i64,
    shifted: Vec<PadicScalar>,
}

fn tree_search(poly: &[PadicScalar]) -> Result<Vec<Root>> {
    let ctx: Context = *poly[0].ctx();
    let p = ctx.p();
    let h = ctx.zero_threshold();
    let mut roots = Vec::new();
    let mut stack = vec![Node {
        r: ctx.zero(),
        depth: 0,
        shifted: poly.to_vec(),
    }];
    while let Some(node) = stack.pop() {
        let m = roots_with_valuation_at_least(&node.shifted, node.depth);
        if m == 0 {
            continue;
        }
        // r itself is a root of multiplicity m at precision.
        if node.shifted[..m].iter().all(|c| c.is_zero()) {
            roots.push(Root {
                value: node.r,
                multiplicity: m,
                certified: m == 1,
                precision: ctx.precision(),
            });
            continue;
        }
        if m == 1 {
            let v0 = node.shifted[0].v_or_n();
            let v1 = node.shifted[1].v_or_n();
            if v0 > 2 * v1 {
                let value = newton(poly, &node.r);
                let slope = eval(&derivative(poly), &value).v_or_n();
                roots.push(Root {
                    value,
                    multiplicity: 1,
                    certified: true,
                    precision: ctx.precision() - slope,
                });
                continue;
            }
        }
        // An m-fold cluster moves by p^(−N/m) under perturbations at
        // precision, so it cannot be resolved below that depth.
        if node.depth >= h || (m >= 2 && node.depth * m as i64 >= ctx.precision()) {
            roots.push(Root {
                value: node.r,
                multiplicity: m,
                certified: false,
                precision: node.depth,
            });
            continue;
        }
        let step = ctx.one().mul_pow_p(node.depth);
        for d in 0..p {
            let a = step.mul_i64(d as i64);
            let shifted = taylor_shift(&node.shifted, &a);
            if roots_with_valuation_at_least(&shifted, node.depth + 1) > 0 {
                stack.push(Node {
                    r: &node.r + &a,
                    depth: node.depth + 1,
                    shifted,
                });
            }
        }
    }
    Ok(roots)
}
