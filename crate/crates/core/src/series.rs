//! Truncated power series over Q_p with the Gauss / v_n / v^(r) valuation
//! calculus, plus matrix-valued series used by the connection module.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{Context, Matrix, PadicScalar, Val};

/// a_0 + a_1 z + … + a_D z^D, known modulo z^(D+1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValuedSeries {
    #[serde(skip)]
    ctx: Context,
    coeffs: Vec<PadicScalar>,
}

impl ValuedSeries {
    pub fn new(ctx: &Context, coeffs: Vec<PadicScalar>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        ValuedSeries { ctx: *ctx, coeffs }
    }

    pub fn zero(ctx: &Context, trunc: usize) -> Self {
        Self::new(ctx, vec![ctx.zero(); trunc + 1])
    }

    pub fn constant(c: &PadicScalar, trunc: usize) -> Self {
        let mut s = Self::zero(c.ctx(), trunc);
        s.coeffs[0] = c.clone();
        s
    }

    /// z^k truncated at degree `trunc`.
    pub fn monomial(ctx: &Context, k: usize, trunc: usize) -> Self {
        let mut s = Self::zero(ctx, trunc);
        if k <= trunc {
            s.coeffs[k] = ctx.one();
        }
        s
    }

    pub fn from_i64(ctx: &Context, xs: &[i64]) -> Self {
        Self::new(ctx, xs.iter().map(|&x| ctx.from_i64(x)).collect())
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Result<&PadicScalar> {
        self.coeffs.get(i).ok_or(Error::IndexBeyondTruncation {
            index: i,
            trunc: self.trunc(),
        })
    }

    pub fn truncate(&self, trunc: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(trunc + 1, self.ctx.zero());
        ValuedSeries { ctx: self.ctx, coeffs: c }
    }

    /// Gauss valuation inf_i v(a_i).
    pub fn gauss(&self) -> Val {
        self.coeffs
            .iter()
            .map(|c| c.valuation())
            .min()
            .expect("nonempty")
    }

    /// v_n: valuation of the truncation mod z^(n+1).
    pub fn vn(&self, n: usize) -> Result<Val> {
        if n > self.trunc() {
            return Err(Error::IndexBeyondTruncation {
                index: n,
                trunc: self.trunc(),
            });
        }
        Ok(self.coeffs[..=n]
            .iter()
            .map(|c| c.valuation())
            .min()
            .expect("nonempty"))
    }

    /// v^(r) by the termwise formula, with the witnessing index (the first
    /// index attaining the infimum).
    pub fn vr(&self, r: Ratio<i64>) -> (Val, usize) {
        assert!(r > Ratio::from_integer(0), "v^(r) needs r > 0");
        let mut best = (Val::at_least(self.ctx.precision()), 0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let v = c.valuation().shift(r * Ratio::from_integer(i as i64));
            if i == 0 || v < best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Membership in the v^(r)-integral subring up to truncation.
    pub fn is_r_integral(&self, r: Ratio<i64>) -> bool {
        self.vr(r).0 >= Val::exact(0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::MixedContext("series".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.add(other))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul(other))
    }

    /// Coefficientwise sum, truncated at the smaller degree.
    pub fn add(&self, other: &Self) -> Self {
        let d = self.trunc().min(other.trunc());
        Self::new(
            &self.ctx,
            (0..=d).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.ctx, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &PadicScalar) -> Self {
        Self::new(&self.ctx, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Cauchy product truncated at min(D_f, D_g).
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.trunc().min(other.trunc());
        let mut out = vec![self.ctx.zero(); d + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(d + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(d + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(&self.ctx, out)
    }

    /// θ = z·d/dz.
    pub fn theta(&self) -> Self {
        Self::new(
            &self.ctx,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c.mul_i64(i as i64))
                .collect(),
        )
    }

    /// z^k·f, keeping the truncation degree.
    pub fn shift(&self, k: usize) -> Self {
        let d = self.trunc();
        let mut out = vec![self.ctx.zero(); d + 1];
        for i in 0..=d {
            if i + k <= d {
                out[i + k] = self.coeffs[i].clone();
            }
        }
        Self::new(&self.ctx, out)
    }

    /// Multiplicative inverse mod z^(D+1).
    pub fn invert(&self) -> Result<Inverted> {
        let a0 = &self.coeffs[0];
        let inv0 = a0.inv().map_err(|_| Error::NonUnitConstantTerm)?;
        let d = self.trunc();
        let mut g = vec![self.ctx.zero(); d + 1];
        g[0] = inv0.clone();
        for n in 1..=d {
            let mut acc = self.ctx.zero();
            for i in 1..=n {
                if self.coeffs[i].is_zero() || g[n - i].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[i] * &g[n - i]);
            }
            g[n] = -&(&acc * &inv0);
        }
        let series = Self::new(&self.ctx, g);
        // Each g_n is a_0^{-1} times a sum of products of earlier terms; the
        // residual f·g − 1 is bounded by the most negative valuation reached.
        let floor = series
            .coeffs
            .iter()
            .chain(self.coeffs.iter())
            .filter_map(|c| c.v())
            .min()
            .unwrap_or(0);
        let loss = (-floor).max(0) + (-a0.v().unwrap_or(0)).max(0) + a0.v().unwrap_or(0).max(0);
        Ok(Inverted { series, loss })
    }

    /// Valuation profile (i, v(a_i)).
    pub fn profile(&self) -> Vec<(usize, Val)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.valuation()))
            .collect()
    }

    /// Whether v(a_n) ≥ w_n for every n, and the factorization witnesses
    /// a_n = p^(w_n)·c_n with c_n integral (None when some a_n fails).
    pub fn factor_through(&self, w: &[i64]) -> Option<Vec<PadicScalar>> {
        self.coeffs
            .iter()
            .zip(w)
            .map(|(a, &wn)| {
                let c = a.mul_pow_p(-wn);
                (c.v_or_n() >= 0).then_some(c)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Inverted {
    pub series: ValuedSeries,
    pub loss: i64,
}

/// Lem "infimum" helper: for a real matrix (x_{ij}) with each row
/// bounded below, inf over all entries equals inf over i of the row
/// infima, and equals inf over j of the column infima.
pub fn column_infima(m: &[Vec<f64>]) -> Vec<f64> {
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| m.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn row_infima(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Σ_i M_i z^i with matrix coefficients (connection matrices, solution
/// matrices, vectors as r×1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatSeries {
    coeffs: Vec<Matrix>,
}

impl MatSeries {
    pub fn new(coeffs: Vec<Matrix>) -> Self {
        assert!(!coeffs.is_empty());
        let (r, c) = (coeffs[0].rows(), coeffs[0].cols());
        assert!(coeffs.iter().all(|m| m.rows() == r && m.cols() == c));
        MatSeries { coeffs }
    }

    pub fn zero(ctx: &Context, rows: usize, cols: usize, trunc: usize) -> Self {
        Self::new(vec![Matrix::zeros(ctx, rows, cols); trunc + 1])
    }

    pub fn constant(m: &Matrix, trunc: usize) -> Self {
        let mut s = Self::zero(m.ctx(), m.rows(), m.cols(), trunc);
        s.coeffs[0] = m.clone();
        s
    }

    pub fn identity(ctx: &Context, n: usize, trunc: usize) -> Self {
        Self::constant(&Matrix::identity(ctx, n), trunc)
    }

    /// Assembles from entry series (all with the same truncation).
    pub fn from_entries(ctx: &Context, entries: &[Vec<ValuedSeries>]) -> Self {
        let rows = entries.len();
        let cols = entries[0].len();
        let d = entries[0][0].trunc();
        Self::new(
            (0..=d)
                .map(|k| Matrix::from_fn(ctx, rows, cols, |i, j| entries[i][j].coeffs()[k].clone()))
                .collect(),
        )
    }

    pub fn entry(&self, i: usize, j: usize) -> ValuedSeries {
        ValuedSeries::new(
            self.ctx(),
            self.coeffs.iter().map(|m| m[(i, j)].clone()).collect(),
        )
    }

    pub fn ctx(&self) -> &Context {
        self.coeffs[0].ctx()
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].cols()
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Matrix {
        &self.coeffs[i]
    }

    pub fn coeffs_mut(&mut self) -> &mut Vec<Matrix> {
        &mut self.coeffs
    }

    pub fn truncate(&self, trunc: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(trunc + 1, Matrix::zeros(self.ctx(), self.rows(), self.cols()));
        MatSeries { coeffs: c }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.trunc().min(other.trunc());
        Self::new((0..=d).map(|i| self.coeffs[i].add(&other.coeffs[i])).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.trunc().min(other.trunc());
        Self::new((0..=d).map(|i| self.coeffs[i].sub(&other.coeffs[i])).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.trunc().min(other.trunc());
        let mut out = vec![Matrix::zeros(self.ctx(), self.rows(), other.cols()); d + 1];
        for i in 0..=d {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=d - i {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        Self::new(out)
    }

    /// Product with a constant matrix on the right.
    pub fn mul_const_right(&self, m: &Matrix) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(m)).collect())
    }

    pub fn mul_const_left(&self, m: &Matrix) -> Self {
        Self::new(self.coeffs.iter().map(|c| m.mul(c)).collect())
    }

    pub fn theta(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c.scale(&c.ctx().from_i64(i as i64)))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| m.is_zero())
    }

    /// Minimal valuation over all entries and degrees.
    pub fn valuation(&self) -> Val {
        self.coeffs.iter().map(|m| m.valuation()).min().expect("nonempty")
    }

    /// Per-degree minimal entry valuation.
    pub fn profile(&self) -> Vec<(usize, Val)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, m)| (i, m.valuation()))
            .collect()
    }

    /// Column-major flattening of each coefficient.
    pub fn vec(&self) -> Self {
        Self::new(self.coeffs.iter().map(|m| m.vec()).collect())
    }

    pub fn unvec(&self, rows: usize, cols: usize) -> Self {
        Self::new(self.coeffs.iter().map(|m| Matrix::unvec(m, rows, cols)).collect())
    }

    pub fn with_precision(&self, ctx: &Context) -> Self {
        Self::new(self.coeffs.iter().map(|m| m.with_precision(ctx)).collect())
    }

    /// det as a series, by cofactor expansion over series (small ranks).
    pub fn det(&self) -> ValuedSeries {
        assert_eq!(self.rows(), self.cols());
        let n = self.rows();
        let entries: Vec<Vec<ValuedSeries>> = (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j)).collect())
            .collect();
        det_series(self.ctx(), &entries, self.trunc())
    }
}

fn det_series(ctx: &Context, m: &[Vec<ValuedSeries>], trunc: usize) -> ValuedSeries {
    let n = m.len();
    if n == 0 {
        return ValuedSeries::constant(&ctx.one(), trunc);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ValuedSeries::zero(ctx, trunc);
    for j in 0..n {
        let minor: Vec<Vec<ValuedSeries>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, s)| s.clone())
                    .collect()
            })
            .collect();
        let term = m[0][j].mul(&det_series(ctx, &minor, trunc));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(c: &Context, n: i64, d: i64) -> PadicScalar {
        c.from_rational(&n.into(), &d.into()).unwrap()
    }

    fn example(c: &Context) -> ValuedSeries {
        ValuedSeries::new(c, vec![c.from_i64(3), c.from_i64(9), q(c, 1, 3)])
    }

    #[test]
    fn vn_examples() {
        let c = Context::new(3, 20).unwrap();
        let f = example(&c);
        assert_eq!(f.vn(1).unwrap(), Val::exact(1));
        assert_eq!(f.vn(2).unwrap(), Val::exact(-1));
        assert!(matches!(f.vn(3), Err(Error::IndexBeyondTruncation { .. })));
        let zk = ValuedSeries::monomial(&c, 5, 8);
        assert_eq!(zk.vn(4).unwrap(), Val::at_least(20));
    }

    #[test]
    fn vr_examples() {
        let c = Context::new(3, 20).unwrap();
        assert_eq!(example(&c).vr(Ratio::from_integer(2)), (Val::exact(1), 0));
        let z = ValuedSeries::monomial(&c, 1, 4);
        let r = Ratio::new(3, 7);
        assert_eq!(z.vr(r).0, Val::Exact(r));
        assert!(z.is_r_integral(r));
    }

    #[test]
    fn arithmetic_examples() {
        let c = Context::new(5, 16).unwrap();
        let a = ValuedSeries::from_i64(&c, &[1, 1, 0]);
        let b = ValuedSeries::from_i64(&c, &[1, -1, 0]);
        assert_eq!(a.mul(&b), ValuedSeries::from_i64(&c, &[1, 0, -1]));
        assert_eq!(a.add(&a.neg()).gauss(), Val::at_least(16));
        assert_eq!(ValuedSeries::monomial(&c, 3, 5).theta(), ValuedSeries::from_i64(&c, &[0, 0, 0, 3, 0, 0]));
        assert_eq!(ValuedSeries::constant(&c.from_i64(7), 3).theta().gauss(), Val::at_least(16));
        let other = Context::new(5, 17).unwrap();
        assert!(matches!(a.try_add(&ValuedSeries::zero(&other, 2)), Err(Error::MixedContext(_))));
    }

    #[test]
    fn invert_examples() {
        let c = Context::new(3, 40).unwrap();
        let g = ValuedSeries::from_i64(&c, &[1, -1, 0, 0, 0]).invert().unwrap().series;
        assert_eq!(g, ValuedSeries::from_i64(&c, &[1, 1, 1, 1, 1]));
        let f = ValuedSeries::new(&c, vec![c.one(), -q(&c, 1, 3), c.zero(), c.zero()]);
        let g = f.invert().unwrap().series;
        for (i, a) in g.coeffs().iter().enumerate() {
            assert_eq!(a.v(), Some(-(i as i64)));
        }
        assert!(matches!(
            ValuedSeries::from_i64(&c, &[0, 1]).invert(),
            Err(Error::NonUnitConstantTerm)
        ));
    }

    #[test]
    fn factorization_through_decreasing_bounds() {
        let c = Context::new(2, 32).unwrap();
        let f = ValuedSeries::new(&c, vec![c.from_i64(8), c.from_i64(12), c.from_i64(2), q(&c, 1, 2)]);
        let w = [3, 2, 1, -1];
        let witnesses = f.factor_through(&w).unwrap();
        for (n, cn) in witnesses.iter().enumerate() {
            assert_eq!(&cn.mul_pow_p(w[n]), &f.coeffs()[n]);
        }
        // v_n(f) ≥ w_n for the decreasing w.
        for n in 0..4 {
            assert!(f.vn(n).unwrap() >= Val::exact(w[n]));
        }
        assert!(f.factor_through(&[4, 2, 1, -1]).is_none());
    }

    #[test]
    fn weak_multiplicativity_of_z() {
        let c = Context::new(7, 20).unwrap();
        let f = ValuedSeries::new(&c, vec![q(&c, 1, 49), c.from_i64(7), c.zero(), c.zero()]);
        assert_eq!(f.shift(2).gauss(), f.gauss());
    }

    #[test]
    fn matrix_series_det() {
        let c = Context::new(5, 20).unwrap();
        // [[1+z, z],[0, 2]] → det = 2 + 2z
        let m = MatSeries::new(vec![
            Matrix::from_i64(&c, &[vec![1, 0], vec![0, 2]]),
            Matrix::from_i64(&c, &[vec![1, 1], vec![0, 0]]),
            Matrix::zeros(&c, 2, 2),
        ]);
        assert_eq!(m.det(), ValuedSeries::from_i64(&c, &[2, 2, 0]));
    }

    #[test]
    fn infimum_lemma_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (r, k) = (rng.random_range(1..6), rng.random_range(1..6));
            let m: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..k).map(|_| rng.random_range(-50.0..50.0)).collect())
                .collect();
            let total = m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let via_rows = row_infima(&m).into_iter().fold(f64::INFINITY, f64::min);
            let via_cols = column_infima(&m).into_iter().fold(f64::INFINITY, f64::min);
            assert_eq!(total, via_rows);
            assert_eq!(total, via_cols);
        }
    }

    fn series_strategy(ctx: Context, d: usize) -> impl Strategy<Value = ValuedSeries> {
        proptest::collection::vec((-200i64..200, 0u32..3, -3i64..4), d + 1).prop_map(move |xs| {
            ValuedSeries::new(
                &ctx,
                xs.into_iter()
                    .map(|(n, dpow, s)| {
                        ctx.from_rational(&n.into(), &(3i64.pow(dpow)).into())
                            .unwrap()
                            .mul_pow_p(s)
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn leibniz(f in series_strategy(Context::new(2, 64).unwrap(), 12),
                   g in series_strategy(Context::new(2, 64).unwrap(), 12)) {
            let lhs = f.mul(&g).theta();
            let rhs = f.theta().mul(&g).add(&f.mul(&g.theta()));
            // Exact on representatives up to the rounding of products with
            // negative valuations.
            let floor = f.gauss().bound().min(Ratio::from_integer(0)) + g.gauss().bound().min(Ratio::from_integer(0));
            let diff = lhs.sub(&rhs).gauss();
            prop_assert!(diff.bound() >= Ratio::from_integer(64) + floor);
        }

        #[test]
        fn invert_residual(f in series_strategy(Context::new(3, 80).unwrap(), 10)) {
            let c = *f.ctx();
            let mut f = f;
            let mut coeffs = f.coeffs().to_vec();
            coeffs[0] = c.one();
            f = ValuedSeries::new(&c, coeffs);
            let inv = f.invert().unwrap();
            let resid = f.mul(&inv.series).sub(&ValuedSeries::constant(&c.one(), f.trunc()));
            prop_assert!(resid.gauss() >= Val::at_least(80 - 2 * inv.loss).min(Val::exact(80 - 2 * inv.loss)));
        }
    }
}
