use std::fmt;
use std::ops::{Index, IndexMut};

use super::scalar::{Context, PadicScalar};
use super::val::Val;
use crate::error::{Error, Result};

/// Dense matrix of p-adic scalars, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    ctx: Context,
    rows: usize,
    cols: usize,
    data: Vec<PadicScalar>,
}

impl Matrix {
    pub fn zeros(ctx: &Context, rows: usize, cols: usize) -> Self {
        Matrix {
            ctx: *ctx,
            rows,
            cols,
            data: vec![ctx.zero(); rows * cols],
        }
    }

    pub fn identity(ctx: &Context, n: usize) -> Self {
        Self::scalar(ctx, n, &ctx.one())
    }

    pub fn scalar(ctx: &Context, n: usize, s: &PadicScalar) -> Self {
        let mut m = Self::zeros(ctx, n, n);
        for i in 0..n {
            m[(i, i)] = s.clone();
        }
        m
    }

    pub fn from_fn(ctx: &Context, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> PadicScalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix {
            ctx: *ctx,
            rows,
            cols,
            data,
        }
    }

    pub fn from_i64(ctx: &Context, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(ctx, r, c, |i, j| ctx.from_i64(rows[i][j]))
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[PadicScalar] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Minimal entry valuation (AT_LEAST(N) for the zero matrix).
    pub fn valuation(&self) -> Val {
        self.data
            .iter()
            .map(|x| x.valuation())
            .min()
            .unwrap_or(Val::at_least(self.ctx.precision()))
    }

    pub fn min_v(&self) -> Option<i64> {
        self.data.iter().filter_map(|x| x.v()).min()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.ctx, self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn map(&self, f: impl FnMut(&PadicScalar) -> PadicScalar) -> Self {
        Matrix {
            ctx: self.ctx,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &PadicScalar) -> Self {
        self.map(|x| x * s)
    }

    fn same_shape(&self, other: &Matrix, what: &str) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "{what}: shape {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }

    pub fn add(&self, other: &Matrix) -> Self {
        self.same_shape(other, "add");
        Matrix {
            ctx: self.ctx,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        self.same_shape(other, "sub");
        Matrix {
            ctx: self.ctx,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "mul: inner dimensions");
        let mut out = Self::zeros(&self.ctx, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let t = a * b;
                    let cell = &mut out[(i, j)];
                    *cell = &*cell + &t;
                }
            }
        }
        out
    }

    pub fn try_mul(&self, other: &Matrix) -> Result<Self> {
        if self.ctx != other.ctx {
            return Err(Error::MixedContext("matrix product".into()));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul(other))
    }

    /// Kronecker product: (X ⊗ Y)[(a·rY + b), (c·cY + d)] = X[a,c]·Y[b,d].
    pub fn kron(&self, other: &Matrix) -> Self {
        let (rx, cx, ry, cy) = (self.rows, self.cols, other.rows, other.cols);
        Self::from_fn(&self.ctx, rx * ry, cx * cy, |i, j| {
            let x = &self[(i / ry, j / cy)];
            if x.is_zero() {
                return self.ctx.zero();
            }
            x * &other[(i % ry, j % cy)]
        })
    }

    /// Column-major flattening into an (rows·cols)×1 column.
    pub fn vec(&self) -> Self {
        Self::from_fn(&self.ctx, self.rows * self.cols, 1, |k, _| {
            self[(k % self.rows, k / self.rows)].clone()
        })
    }

    /// Inverse of `vec`.
    pub fn unvec(column: &Matrix, rows: usize, cols: usize) -> Self {
        assert_eq!(column.rows, rows * cols);
        Self::from_fn(&column.ctx, rows, cols, |i, j| column[(i + j * rows, 0)].clone())
    }

    pub fn column(&self, j: usize) -> Self {
        Self::from_fn(&self.ctx, self.rows, 1, |i, _| self[(i, j)].clone())
    }

    pub fn hstack(parts: &[Matrix]) -> Self {
        let ctx = parts[0].ctx;
        let rows = parts[0].rows;
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut out = Self::zeros(&ctx, rows, cols);
        let mut off = 0;
        for m in parts {
            assert_eq!(m.rows, rows);
            for i in 0..rows {
                for j in 0..m.cols {
                    out[(i, off + j)] = m[(i, j)].clone();
                }
            }
            off += m.cols;
        }
        out
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(&self.ctx, rows.len(), cols.len(), |i, j| {
            self[(rows.start + i, cols.start + j)].clone()
        })
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn with_precision(&self, ctx: &Context) -> Self {
        Matrix {
            ctx: *ctx,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.with_precision(ctx)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(&self.ctx, self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn trace(&self) -> PadicScalar {
        (0..self.rows.min(self.cols)).fold(self.ctx.zero(), |acc, i| &acc + &self[(i, i)])
    }

    /// Factor once, reuse for many right-hand sides.
    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Solves A·X = B. See [`Solved`] for the precision contract.
    pub fn solve(&self, b: &Matrix) -> Result<Solved> {
        if self.ctx != b.ctx {
            return Err(Error::MixedContext("matrix solve".into()));
        }
        if !self.is_square() || b.rows != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "solve {}x{} with rhs {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        self.lu()?.solve(b)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        Ok(self.solve(&Matrix::identity(&self.ctx, self.rows))?.x)
    }

    /// Valuation of the determinant (via pivots), or None when singular.
    pub fn det_valuation(&self) -> Option<i64> {
        self.lu().ok().map(|lu| lu.det_valuation())
    }

    /// Determinant by elimination (exact on representatives).
    pub fn det(&self) -> PadicScalar {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => self.ctx.zero(),
        }
    }

    /// Row echelon data with entries of valuation ≥ `threshold` treated as 0.
    pub fn echelon(&self, threshold: i64) -> Echelon {
        Echelon::compute(self, threshold)
    }

    /// Rank with entries of valuation ≥ threshold treated as zero.
    pub fn rank(&self, threshold: i64) -> usize {
        self.echelon(threshold).rank
    }

    /// Basis of the kernel (columns), with the same zero threshold.
    pub fn kernel(&self, threshold: i64) -> Result<Matrix> {
        self.echelon(threshold).kernel()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = PadicScalar;
    fn index(&self, (i, j): (usize, usize)) -> &PadicScalar {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut PadicScalar {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].short()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Solution of A·X = B together with its precision bookkeeping.
///
/// `residual_loss` is measured, not estimated: the residual A·X − B is
/// computed and every entry is at least AT_LEAST(N − residual_loss). The
/// declared `loss` is max(residual_loss, v(det A), 0). Since
/// v(A⁻¹) ≥ −max_pivot for complete pivoting, X is correct mod
/// p^(N − forward_loss) with forward_loss = max(residual_loss, −v(X)) +
/// max_pivot; the −v(X) term is the data's own rounding at p^N times X.
#[derive(Clone, Debug)]
pub struct Solved {
    pub x: Matrix,
    pub det_valuation: i64,
    pub max_pivot: i64,
    pub loss: i64,
    pub residual_loss: i64,
    pub forward_loss: i64,
}

/// PAQ = LU with complete pivoting on minimal valuation.
#[derive(Clone, Debug)]
pub struct Lu {
    ctx: Context,
    n: usize,
    /// Combined factors: strictly lower part holds L's multipliers.
    lu: Matrix,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    pivot_inv: Vec<PadicScalar>,
    swaps: usize,
    original: Matrix,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!("LU of {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut m = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut pivot_inv = Vec::with_capacity(n);
        let mut swaps = 0;
        for k in 0..n {
            let mut best: Option<(i64, usize, usize)> = None;
            for i in k..n {
                for j in k..n {
                    if let Some(v) = m[(i, j)].v() {
                        if best.is_none_or(|(bv, _, _)| v < bv) {
                            best = Some((v, i, j));
                        }
                    }
                }
            }
            let (_, pi, pj) = best.ok_or(Error::SingularAtPrecision)?;
            if pi != k {
                for j in 0..n {
                    m.data.swap(pi * n + j, k * n + j);
                }
                row_perm.swap(pi, k);
                swaps += 1;
            }
            if pj != k {
                for i in 0..n {
                    m.data.swap(i * n + pj, i * n + k);
                }
                col_perm.swap(pj, k);
                swaps += 1;
            }
            let inv = m[(k, k)].inv()?;
            for i in k + 1..n {
                if m[(i, k)].is_zero() {
                    continue;
                }
                let f = &m[(i, k)] * &inv;
                for j in k + 1..n {
                    if m[(k, j)].is_zero() {
                        continue;
                    }
                    let t = &f * &m[(k, j)];
                    m[(i, j)] = &m[(i, j)] - &t;
                }
                m[(i, k)] = f;
            }
            pivot_inv.push(inv);
        }
        Ok(Lu {
            ctx: a.ctx,
            n,
            lu: m,
            row_perm,
            col_perm,
            pivot_inv,
            swaps,
            original: a.clone(),
        })
    }

    pub fn pivot_valuations(&self) -> Vec<i64> {
        (0..self.n).map(|k| self.lu[(k, k)].v_or_n()).collect()
    }

    pub fn max_pivot(&self) -> i64 {
        self.pivot_valuations().into_iter().max().unwrap_or(0)
    }

    pub fn det_valuation(&self) -> i64 {
        self.pivot_valuations().into_iter().sum()
    }

    pub fn det(&self) -> PadicScalar {
        let mut d = self.ctx.one();
        for k in 0..self.n {
            d = &d * &self.lu[(k, k)];
        }
        if self.swaps % 2 == 1 {
            d = -d;
        }
        d
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.original
    }

    pub fn solve(&self, b: &Matrix) -> Result<Solved> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::DimensionMismatch(format!("rhs has {} rows, expected {n}", b.rows)));
        }
        let cols = b.cols;
        let mut x = Matrix::zeros(&self.ctx, n, cols);
        for c in 0..cols {
            // Forward substitution with the unit-lower factor.
            let mut y: Vec<PadicScalar> = (0..n).map(|i| b[(self.row_perm[i], c)].clone()).collect();
            for i in 0..n {
                for k in 0..i {
                    let l = &self.lu[(i, k)];
                    if l.is_zero() || y[k].is_zero() {
                        continue;
                    }
                    let t = l * &y[k];
                    y[i] = &y[i] - &t;
                }
            }
            for k in (0..n).rev() {
                let mut acc = y[k].clone();
                for j in k + 1..n {
                    let u = &self.lu[(k, j)];
                    if u.is_zero() || y[j].is_zero() {
                        continue;
                    }
                    let t = u * &y[j];
                    acc = &acc - &t;
                }
                y[k] = &acc * &self.pivot_inv[k];
            }
            for k in 0..n {
                x[(self.col_perm[k], c)] = y[k].clone();
            }
        }
        let max_pivot = self.max_pivot();
        let n_prec = self.ctx.precision();
        let residual_loss = match self.original.mul(&x).sub(b).min_v() {
            Some(v) => (n_prec - v).max(0),
            None => 0,
        };
        let det_valuation = self.det_valuation();
        // Data known mod p^N contributes δA·x with v ≥ N + v(x).
        let low = x.min_v().unwrap_or(0).min(0);
        let forward_loss = residual_loss.max(-low) + max_pivot;
        Ok(Solved {
            x,
            det_valuation,
            max_pivot,
            loss: residual_loss.max(det_valuation).max(0),
            residual_loss,
            forward_loss,
        })
    }
}

/// Echelon form under a zero threshold: everything at or above the
/// threshold is treated as 0. `ambiguous` records the smallest valuation
/// of an entry that was discarded although it is nonzero at precision.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rank: usize,
    /// Original column index of each pivot.
    pub pivot_cols: Vec<usize>,
    pub ambiguous: Option<i64>,
    reduced: Matrix,
    col_perm: Vec<usize>,
}

impl Echelon {
    fn compute(a: &Matrix, threshold: i64) -> Echelon {
        let (rows, cols) = (a.rows, a.cols);
        let mut m = a.clone();
        let mut col_perm: Vec<usize> = (0..cols).collect();
        let mut rank = 0;
        for k in 0..rows.min(cols) {
            let mut best: Option<(i64, usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if let Some(v) = m[(i, j)].v() {
                        if v < threshold && best.is_none_or(|(bv, _, _)| v < bv) {
                            best = Some((v, i, j));
                        }
                    }
                }
            }
            let Some((_, pi, pj)) = best else { break };
            if pi != k {
                for j in 0..cols {
                    m.data.swap(pi * cols + j, k * cols + j);
                }
            }
            if pj != k {
                for i in 0..rows {
                    m.data.swap(i * cols + pj, i * cols + k);
                }
                col_perm.swap(pj, k);
            }
            let inv = m[(k, k)].inv().expect("pivot is nonzero");
            for i in k + 1..rows {
                if m[(i, k)].is_zero() {
                    continue;
                }
                let f = &m[(i, k)] * &inv;
                for j in k..cols {
                    if m[(k, j)].is_zero() {
                        continue;
                    }
                    let t = &f * &m[(k, j)];
                    m[(i, j)] = &m[(i, j)] - &t;
                }
            }
            rank += 1;
        }
        let ambiguous = (rank..rows)
            .flat_map(|i| (rank..cols).map(move |j| (i, j)))
            .filter_map(|(i, j)| m[(i, j)].v())
            .min();
        Echelon {
            rank,
            pivot_cols: col_perm[..rank].to_vec(),
            ambiguous,
            reduced: m,
            col_perm,
        }
    }

    pub fn pivot_valuations(&self) -> Vec<i64> {
        (0..self.rank).map(|k| self.reduced[(k, k)].v_or_n()).collect()
    }

    /// Kernel basis: for each free column, solve the pivot block by back
    /// substitution.
    pub fn kernel(&self) -> Result<Matrix> {
        let ctx = self.reduced.ctx;
        let cols = self.reduced.cols;
        let r = self.rank;
        let free = cols - r;
        let mut basis = Matrix::zeros(&ctx, cols, free);
        for (f, fc) in (r..cols).enumerate() {
            let mut y = vec![ctx.zero(); cols];
            y[fc] = ctx.one();
            for k in (0..r).rev() {
                let mut acc = ctx.zero();
                for j in k + 1..cols {
                    if y[j].is_zero() {
                        continue;
                    }
                    acc = &acc - &(&self.reduced[(k, j)] * &y[j]);
                }
                y[k] = &acc * &self.reduced[(k, k)].inv()?;
            }
            for k in 0..cols {
                basis[(self.col_perm[k], f)] = y[k].clone();
            }
        }
        Ok(basis)
    }
}

/// Characteristic polynomial det(xI − A), coefficients low to high,
/// by Berkowitz's division-free algorithm.
pub fn charpoly(a: &Matrix) -> Vec<PadicScalar> {
    assert!(a.is_square());
    let ctx = a.ctx;
    let n = a.rows;
    // Coefficients high to low while iterating.
    let mut poly = vec![ctx.one()];
    for i in 1..=n {
        let sub = a.submatrix(0..i - 1, 0..i - 1);
        let r = a.submatrix(i - 1..i, 0..i - 1);
        let c = a.submatrix(0..i - 1, i - 1..i);
        let d = &a[(i - 1, i - 1)];
        // First column of the Toeplitz factor: 1, −d, −R·C, −R·S·C, ...
        let mut col = vec![ctx.one(), -d];
        let mut sc = c.clone();
        for _ in 0..i.saturating_sub(1) {
            if r.cols() == 0 {
                break;
            }
            col.push(-&r.mul(&sc)[(0, 0)]);
            sc = sub.mul(&sc);
        }
        let mut next = vec![ctx.zero(); i + 1];
        for (row, out) in next.iter_mut().enumerate() {
            for (k, pk) in poly.iter().enumerate() {
                if row >= k && row - k < col.len() {
                    *out = &*out + &(&col[row - k] * pk);
                }
            }
        }
        poly = next;
    }
    poly.reverse();
    poly
}
