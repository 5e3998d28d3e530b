//! File formats. Connections are JSON:
//!
//! ```json
//! {"p": 2, "precision": 512, "trunc": 1, "rank": 2,
//!  "matrix": [[["0", "1"], ["0", "1/3"]], [["1", "0"], ["0", "1"]]],
//!  "exponents": ["0", "1/3"]}
//! ```
//!
//! `matrix[i]` is the coefficient of z^i. Scalars are strings: "n",
//! "num/den", the printed form "p^v*u", or bare JSON integers. Profiles are
//! CSV with header "degree,valuation".

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::connection::RegularConnection;
use crate::error::{Error, Result};
use crate::liouville::gap_number;
use crate::padic::{Context, Matrix, PadicScalar, Val};
use crate::series::MatSeries;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum ScalarText {
    Int(i64),
    Text(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ConnectionFile {
    pub p: u64,
    pub precision: i64,
    pub trunc: usize,
    pub rank: usize,
    pub matrix: Vec<Vec<Vec<ScalarText>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<ScalarText>>,
}

/// Parses a scalar: "n", "num/den", "p^v*u", "O(p^N)", "gap:k" (the
/// Liouville gap number of depth k) or "digits:d0,d1,…" (p-adic digits,
/// lowest first). A leading '-' negates any of these.
pub fn parse_scalar(ctx: &Context, text: &str) -> Result<PadicScalar> {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix('-') {
        if rest.starts_with("gap:") || rest.starts_with("digits:") || rest.contains('^') {
            return Ok(-parse_scalar(ctx, rest)?);
        }
    }
    if let Some(k) = t.strip_prefix("gap:") {
        let k: usize = k.trim().parse().map_err(|_| Error::Parse(format!("bad gap depth in {t:?}")))?;
        return Ok(gap_number(ctx, k)?.value);
    }
    if let Some(ds) = t.strip_prefix("digits:") {
        let digits = ds
            .split(',')
            .filter(|d| !d.trim().is_empty())
            .map(|d| d.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse(format!("bad digit list in {t:?}")))?;
        return ctx.from_digits(&digits);
    }
    if t.starts_with("O(") {
        return Ok(ctx.zero());
    }
    if let Some((pv, u)) = t.split_once('*') {
        let bad = || Error::Parse(format!("bad scalar {t:?}"));
        let (p, v) = pv.split_once('^').ok_or_else(bad)?;
        if p.trim().parse::<u64>().map_err(|_| bad())? != ctx.p() {
            return Err(Error::MixedContext(format!("{t:?} is not written in base {}", ctx.p())));
        }
        let v: i64 = v.trim().parse().map_err(|_| bad())?;
        let u: BigUint = u.trim().parse().map_err(|_| bad())?;
        return ctx.from_parts(v, &u);
    }
    ctx.parse_rational(t)
}

fn scalar(ctx: &Context, s: &ScalarText) -> Result<PadicScalar> {
    match s {
        ScalarText::Int(n) => Ok(ctx.from_i64(*n)),
        ScalarText::Text(t) => parse_scalar(ctx, t),
    }
}

/// A small rational when one matches, else the exact "p^v*u" form; both
/// parse back to the same scalar.
pub fn scalar_text(x: &PadicScalar) -> String {
    x.short()
}

impl ConnectionFile {
    pub fn to_connection(&self) -> Result<RegularConnection> {
        let ctx = Context::new(self.p, self.precision)?;
        if self.matrix.len() != self.trunc + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient matrices for truncation degree {}",
                self.matrix.len(),
                self.trunc
            )));
        }
        let r = self.rank;
        let mut coeffs = Vec::with_capacity(self.matrix.len());
        for (i, rows) in self.matrix.iter().enumerate() {
            if rows.len() != r || rows.iter().any(|row| row.len() != r) {
                return Err(Error::DimensionMismatch(format!("coefficient {i} is not {r}x{r}")));
            }
            let mut m = Matrix::zeros(&ctx, r, r);
            for (a, row) in rows.iter().enumerate() {
                for (b, x) in row.iter().enumerate() {
                    m[(a, b)] = scalar(&ctx, x)?;
                }
            }
            coeffs.push(m);
        }
        let conn = RegularConnection::new(MatSeries::new(coeffs))?;
        match &self.exponents {
            Some(es) => conn.with_declared_exponents(es.iter().map(|e| scalar(&ctx, e)).collect::<Result<_>>()?),
            None => Ok(conn),
        }
    }

    pub fn from_connection(m: &RegularConnection) -> Self {
        let ctx = m.ctx();
        let r = m.rank();
        let text = |x: &PadicScalar| ScalarText::Text(scalar_text(x));
        ConnectionFile {
            p: ctx.p(),
            precision: ctx.precision(),
            trunc: m.trunc(),
            rank: r,
            matrix: m
                .matrix()
                .coeffs()
                .iter()
                .map(|c| (0..r).map(|a| (0..r).map(|b| text(&c[(a, b)])).collect()).collect())
                .collect(),
            exponents: m.declared_exponents().map(|es| es.iter().map(text).collect()),
        }
    }
}

pub fn load_connection(path: &Path) -> Result<RegularConnection> {
    let file: ConnectionFile = serde_json::from_reader(File::open(path).map_err(|e| io_err(path, e))?)?;
    file.to_connection()
}

pub fn save_connection(path: &Path, m: &RegularConnection) -> Result<()> {
    write_json(Some(path), &ConnectionFile::from_connection(m))
}

/// A right side: a JSON list of degree-indexed vectors.
pub fn load_rhs(path: &Path, ctx: &Context, rank: usize) -> Result<MatSeries> {
    let rows: Vec<Vec<ScalarText>> = serde_json::from_reader(File::open(path).map_err(|e| io_err(path, e))?)?;
    if rows.is_empty() {
        return Err(Error::Parse("empty right side".into()));
    }
    let mut coeffs = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != rank {
            return Err(Error::DimensionMismatch(format!("rhs degree {i} has {} entries, expected {rank}", row.len())));
        }
        let mut m = Matrix::zeros(ctx, rank, 1);
        for (a, x) in row.iter().enumerate() {
            m[(a, 0)] = scalar(ctx, x)?;
        }
        coeffs.push(m);
    }
    Ok(MatSeries::new(coeffs))
}

/// Coefficients as text, degree by degree. With `precision`, an entry that
/// agrees with a small rational to its degree's precision prints as that
/// rational.
pub fn series_text(s: &MatSeries, precision: Option<&[i64]>) -> Vec<Vec<Vec<String>>> {
    s.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let text = |x: &PadicScalar| match precision.and_then(|p| p.get(i)).and_then(|&e| x.small_rational_at(e, 1 << 20)) {
                Some(q) if q.is_integer() => q.numer().to_string(),
                Some(q) => format!("{}/{}", q.numer(), q.denom()),
                None => scalar_text(x),
            };
            (0..c.rows())
                .map(|a| (0..c.cols()).map(|b| text(&c[(a, b)])).collect())
                .collect()
        })
        .collect()
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
            writeln!(f, "{text}")?;
            f.flush()?;
        }
        None => {
            // A closed pipe (`pconn … | head`) is not an error.
            if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

pub fn write_csv(path: &Path, profile: &[(usize, Val)]) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    crate::profile::write_profile_csv(f, profile)
}
