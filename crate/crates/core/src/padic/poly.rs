//! Polynomials as coefficient vectors, lowest degree first.

use super::scalar::PadicScalar;

pub fn eval(poly: &[PadicScalar], x: &PadicScalar) -> PadicScalar {
    let mut acc = x.ctx().zero();
    for c in poly.iter().rev() {
        acc = &(&acc * x) + c;
    }
    acc
}

pub fn derivative(poly: &[PadicScalar]) -> Vec<PadicScalar> {
    poly.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c.mul_i64(i as i64))
        .collect()
}

/// Coefficients of f(t + a).
pub fn taylor_shift(poly: &[PadicScalar], a: &PadicScalar) -> Vec<PadicScalar> {
    let mut c = poly.to_vec();
    let n = c.len();
    if a.is_zero() || n < 2 {
        return c;
    }
    for i in 0..n - 1 {
        for j in (i..n - 1).rev() {
            let t = a * &c[j + 1];
            c[j] = &c[j] + &t;
        }
    }
    c
}

/// Number of roots (over an algebraic closure, with multiplicity) of
/// valuation ≥ s: the largest index attaining min_j v(c_j) + j·s on the
/// Newton polygon. Coefficients that are zero at precision count as +∞.
pub fn roots_with_valuation_at_least(poly: &[PadicScalar], s: i64) -> usize {
    let mut best: Option<(i64, usize)> = None;
    for (j, c) in poly.iter().enumerate() {
        if let Some(v) = c.v() {
            let w = v + j as i64 * s;
            if best.is_none_or(|(bw, _)| w <= bw) {
                best = Some((w, j));
            }
        }
    }
    best.map_or(0, |(_, j)| j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Context;

    fn poly(c: &Context, xs: &[i64]) -> Vec<PadicScalar> {
        xs.iter().map(|&x| c.from_i64(x)).collect()
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let c = Context::new(5, 20).unwrap();
        let f = poly(&c, &[3, -1, 4, 1, -5]);
        let a = c.from_i64(7);
        let g = taylor_shift(&f, &a);
        for t in -3..=3 {
            let t = c.from_i64(t);
            assert_eq!(eval(&g, &t), eval(&f, &(&t + &a)));
        }
    }

    #[test]
    fn newton_polygon_counts() {
        let c = Context::new(2, 40).unwrap();
        // (t − 4)(t − 1)·t: valuations of roots 2, 0, ∞.
        let f = poly(&c, &[0, 4, -5, 1]);
        assert_eq!(roots_with_valuation_at_least(&f, 0), 3);
        assert_eq!(roots_with_valuation_at_least(&f, 1), 2);
        assert_eq!(roots_with_valuation_at_least(&f, 2), 2);
        assert_eq!(roots_with_valuation_at_least(&f, 3), 1);
        // t − 2
        assert_eq!(roots_with_valuation_at_least(&poly(&c, &[-2, 1]), 2), 0);
        assert_eq!(derivative(&f), poly(&c, &[4, -10, 3]));
    }
}
