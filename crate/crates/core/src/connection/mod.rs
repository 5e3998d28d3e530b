//! Regular connections over truncated power series.
//!
//! A rank-r connection is given by A(z) = Σ A_i z^i and acts on column
//! vectors by φ(e⃗·a) = e⃗·(A·a + θa), θ = z·d/dz. A truncation-degree-D
//! connection is known modulo z^(D+1).

mod certificate;
mod cohomology;
mod exponents;
mod recursion;
mod shear;
mod solvers;

pub use certificate::{certify, CertOptions, ProfileEntry, SolveCertificate, Verdict};
pub use cohomology::{cohomology_dims, default_cut, CohomologyDims};
pub use exponents::{exponents, ExponentEntry, ExponentOptions, ExponentReport, IntegerDifference};
pub use shear::{gauge_residual, shear_step, shear_to_prepared, ShearReport, ShearStep, StepInfo};
pub use solvers::{
    clark_solve, dense_oracle_fuchs, dense_oracle_solve, fuchs_solution, gauge_equivalence, ones_rhs,
    ClarkSolution, FuchsSolution, GaugeSolution, OracleSolution,
};

use crate::error::{Error, Result};
use crate::padic::{charpoly, Context, Matrix, PadicScalar};
use crate::series::MatSeries;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularConnection {
    matrix: MatSeries,
    declared: Option<Vec<PadicScalar>>,
}

impl RegularConnection {
    pub fn new(matrix: MatSeries) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "connection matrix must be square and nonempty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(RegularConnection {
            matrix,
            declared: None,
        })
    }

    /// Constant connection A(z) = A_0 truncated at `trunc`.
    pub fn constant(a0: &Matrix, trunc: usize) -> Result<Self> {
        Self::new(MatSeries::constant(a0, trunc))
    }

    /// Rank 1 with A(z) = Σ coeffs_i z^i.
    pub fn rank_one(coeffs: &[PadicScalar]) -> Result<Self> {
        let ctx = *coeffs[0].ctx();
        Self::new(MatSeries::new(
            coeffs
                .iter()
                .map(|c| Matrix::from_fn(&ctx, 1, 1, |_, _| c.clone()))
                .collect(),
        ))
    }

    /// Attaches exponents, checked against the characteristic polynomial
    /// of the residue to the zero threshold.
    pub fn with_declared_exponents(mut self, exps: Vec<PadicScalar>) -> Result<Self> {
        if exps.len() != self.rank() {
            return Err(Error::BadDeclaredExponents(format!(
                "{} exponents for rank {}",
                exps.len(),
                self.rank()
            )));
        }
        let ctx = *self.ctx();
        let mut prod = vec![ctx.one()];
        for l in &exps {
            let mut next = vec![ctx.zero(); prod.len() + 1];
            for (i, c) in prod.iter().enumerate() {
                next[i + 1] = &next[i + 1] + c;
                next[i] = &next[i] - &(c * l);
            }
            prod = next;
        }
        let cp = charpoly(&self.residue());
        let h = ctx.zero_threshold();
        for (a, b) in prod.iter().zip(&cp) {
            if (a - b).v_or_n() < h {
                return Err(Error::BadDeclaredExponents(
                    "product of (x − λ_i) differs from the characteristic polynomial".into(),
                ));
            }
        }
        self.declared = Some(exps);
        Ok(self)
    }

    pub fn declared_exponents(&self) -> Option<&[PadicScalar]> {
        self.declared.as_deref()
    }

    pub fn matrix(&self) -> &MatSeries {
        &self.matrix
    }

    pub fn ctx(&self) -> &Context {
        self.matrix.ctx()
    }

    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trunc(&self) -> usize {
        self.matrix.trunc()
    }

    pub fn residue(&self) -> Matrix {
        self.matrix.coeff(0).clone()
    }

    /// The lattice z^n·M: A(z) + nI.
    pub fn twist(&self, n: i64) -> Self {
        let ctx = *self.ctx();
        let mut m = self.matrix.clone();
        m.coeffs_mut()[0] = m.coeff(0).add(&Matrix::scalar(&ctx, self.rank(), &ctx.from_i64(n)));
        RegularConnection {
            matrix: m,
            declared: self
                .declared
                .as_ref()
                .map(|d| d.iter().map(|l| l.add_i64(n)).collect()),
        }
    }

    /// The same data at another precision; raising lifts balanced
    /// representatives.
    pub fn with_precision(&self, ctx: &Context) -> Self {
        RegularConnection {
            matrix: self.matrix.with_precision(ctx),
            declared: self
                .declared
                .as_ref()
                .map(|ds| ds.iter().map(|x| x.with_precision(ctx)).collect()),
        }
    }

    pub fn truncate(&self, trunc: usize) -> Self {
        RegularConnection {
            matrix: self.matrix.truncate(trunc),
            declared: self.declared.clone(),
        }
    }

    /// φ applied to a vector (or matrix of column vectors): A·x + θx.
    pub fn apply(&self, x: &MatSeries) -> MatSeries {
        self.matrix.mul(x).add(&x.theta())
    }

    /// Matrix of φ_Hom(T) = B·T − T·A + θT on vec(T) (column-major), where
    /// `self` is M (matrix A) and `target` is N (matrix B).
    pub fn hom(&self, target: &RegularConnection) -> Result<Self> {
        if self.ctx() != target.ctx() {
            return Err(Error::MixedContext("hom of connections".into()));
        }
        let (rm, rn) = (self.rank(), target.rank());
        let ctx = *self.ctx();
        let d = self.trunc().min(target.trunc());
        let im = Matrix::identity(&ctx, rm);
        let inn = Matrix::identity(&ctx, rn);
        let coeffs = (0..=d)
            .map(|i| {
                im.kron(target.matrix.coeff(i))
                    .sub(&self.matrix.coeff(i).transpose().kron(&inn))
            })
            .collect();
        let declared = match (&self.declared, &target.declared) {
            (Some(a), Some(b)) => Some(
                a.iter()
                    .flat_map(|l| b.iter().map(move |m| m - l))
                    .collect(),
            ),
            _ => None,
        };
        Ok(RegularConnection {
            matrix: MatSeries::new(coeffs),
            declared,
        })
    }

    /// hom(M, trivial rank-one connection): matrix −Aᵀ.
    pub fn dual(&self) -> Self {
        let ctx = *self.ctx();
        let trivial = RegularConnection::constant(&Matrix::zeros(&ctx, 1, 1), self.trunc())
            .expect("rank one")
            .with_declared_exponents(vec![ctx.zero()])
            .expect("zero exponent");
        self.hom(&trivial).expect("same context")
    }

    /// A ⊗ I + I ⊗ B.
    pub fn tensor(&self, other: &RegularConnection) -> Result<Self> {
        if self.ctx() != other.ctx() {
            return Err(Error::MixedContext("tensor of connections".into()));
        }
        let ctx = *self.ctx();
        let d = self.trunc().min(other.trunc());
        let ia = Matrix::identity(&ctx, self.rank());
        let ib = Matrix::identity(&ctx, other.rank());
        let coeffs = (0..=d)
            .map(|i| {
                self.matrix
                    .coeff(i)
                    .kron(&ib)
                    .add(&ia.kron(other.matrix.coeff(i)))
            })
            .collect();
        let declared = match (&self.declared, &other.declared) {
            (Some(a), Some(b)) => Some(a.iter().flat_map(|l| b.iter().map(move |m| l + m)).collect()),
            _ => None,
        };
        Ok(RegularConnection {
            matrix: MatSeries::new(coeffs),
            declared,
        })
    }

    /// Σ_{i≤k} A_i z^i, padded with zeros to the same truncation. Requires
    /// the exponents to be (k+1)-weakly prepared, which makes the model
    /// isomorphic to the original.
    pub fn polynomial_model(&self, k: usize, opts: &ExponentOptions) -> Result<Self> {
        let report = exponents(self, opts)?;
        if !report.k_weakly_prepared_for(k) {
            return Err(Error::NotKWeaklyPrepared(k + 1));
        }
        let ctx = *self.ctx();
        let r = self.rank();
        let coeffs = (0..=self.trunc())
            .map(|i| {
                if i <= k {
                    self.matrix.coeff(i).clone()
                } else {
                    Matrix::zeros(&ctx, r, r)
                }
            })
            .collect();
        Ok(RegularConnection {
            matrix: MatSeries::new(coeffs),
            declared: self.declared.clone(),
        })
    }

    /// Whether A ≡ B mod z^(k+1) at precision.
    pub fn congruent_mod(&self, other: &RegularConnection, k: usize) -> bool {
        self.rank() == other.rank()
            && self.trunc() >= k
            && other.trunc() >= k
            && (0..=k).all(|i| self.matrix.coeff(i) == other.matrix.coeff(i))
    }
}
