//! Word sets as linear subspaces.
//!
//! A [`Subspace`] stores an orthonormal row basis. Union is the sum space,
//! intersection is recovered from the canonical angles between the two
//! bases, and complement is the orthogonal complement. Membership of a
//! vector is either a hard residual test or the soft indicator: the cosine
//! of the smallest angle between the vector and the subspace.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::{
    self, full_left_singular_vectors, orthonormal_rows, orthonormality_error, projector_of,
    thin_svd, DenseMatrix, DenseVector, DEFAULT_REL_TOL,
};

/// Default threshold on `|σ − 1|` for a canonical direction to count as shared.
pub const DEFAULT_ALPHA: f64 = 1e-6;

const BASIS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DenseMatrix,
}

impl Subspace {
    /// Wraps an existing basis after checking that its rows are orthonormal.
    pub fn from_basis(basis: DenseMatrix) -> Result<Self> {
        if basis.rows() > basis.cols() {
            return Err(Error::invalid(format!(
                "rank {} exceeds ambient dimension {}",
                basis.rows(),
                basis.cols()
            )));
        }
        let err = orthonormality_error(&basis);
        if err > BASIS_TOL {
            return Err(Error::invalid(format!(
                "basis rows are not orthonormal (Gram deviation {err:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    /// The zero subspace of `ℝ^d`.
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: DenseMatrix::zeros(0, ambient_dim),
        }
    }

    /// The whole of `ℝ^d`.
    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DenseMatrix::identity(ambient_dim),
        }
    }

    /// Span of a collection of vectors. Empty or all-zero input gives the
    /// zero subspace; duplicates are absorbed by the rank cut.
    pub fn span(ambient_dim: usize, vectors: &[DenseVector]) -> Result<Self> {
        let rows: Vec<&[f64]> = vectors.iter().map(DenseVector::as_slice).collect();
        Subspace::span_rows(ambient_dim, &rows)
    }

    pub fn span_rows<R: AsRef<[f64]>>(ambient_dim: usize, rows: &[R]) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        let m = DenseMatrix::from_rows(ambient_dim, rows)?;
        Ok(Subspace {
            basis: orthonormal_rows(&m, DEFAULT_REL_TOL)?,
        })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> DenseMatrix {
        projector_of(&self.basis).expect("subspace basis is orthonormal")
    }

    fn check_same_space(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        Ok(())
    }

    fn check_vector(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: v.len(),
            });
        }
        let n = linalg::norm(v);
        if n == 0.0 {
            return Err(Error::invalid("membership of the zero vector"));
        }
        Ok(n)
    }

    /// Sum space: the bases are stacked and re-orthonormalized.
    pub fn union(&self, other: &Subspace) -> Result<Subspace> {
        self.check_same_space(other)?;
        let d = self.ambient_dim();
        let mut data = Vec::with_capacity((self.rank() + other.rank()) * d);
        data.extend_from_slice(self.basis.as_slice());
        data.extend_from_slice(other.basis.as_slice());
        let stacked = DenseMatrix::new(self.rank() + other.rank(), d, data)?;
        Ok(Subspace {
            basis: orthonormal_rows(&stacked, DEFAULT_REL_TOL)?,
        })
    }

    /// Intersection via canonical angles.
    ///
    /// With `Â` the smaller basis and `B̂` the larger, the SVD of `Â·B̂ᵀ` gives
    /// the cosines of the canonical angles. Each left singular vector `uᵢ`
    /// whose `|σᵢ − 1| ≤ alpha` maps to the shared direction `uᵢᵀ·Â`.
    pub fn intersection(&self, other: &Subspace, alpha: f64) -> Result<Subspace> {
        self.check_same_space(other)?;
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::invalid(format!("alpha {alpha} not in [0, 0.5)")));
        }
        let (small, large) = if self.rank() <= other.rank() {
            (self, other)
        } else {
            (other, self)
        };
        let d = self.ambient_dim();
        if small.rank() == 0 {
            return Ok(Subspace::zero(d));
        }
        let cosines = small.basis.matmul(&large.basis.transpose())?;
        let svd = thin_svd(&cosines)?;
        let k = small.rank();
        let p = svd.singular_values.len();

        let mut directions = Vec::new();
        for (i, &sigma) in svd.singular_values.iter().enumerate() {
            if (sigma - 1.0).abs() > alpha {
                continue;
            }
            let mut dir = vec![0.0; d];
            for j in 0..k {
                let coeff = svd.u.as_slice()[j * p + i];
                for (x, &b) in dir.iter_mut().zip(small.basis.row(j)) {
                    *x += coeff * b;
                }
            }
            directions.extend(dir);
        }
        let m = DenseMatrix::new(directions.len() / d, d, directions)?;
        Ok(Subspace {
            basis: orthonormal_rows(&m, DEFAULT_REL_TOL)?,
        })
    }

    /// Orthogonal complement, taken from the trailing left singular vectors
    /// of `Âᵀ`.
    pub fn complement(&self) -> Subspace {
        let d = self.ambient_dim();
        let r = self.rank();
        if r == 0 {
            return Subspace::full(d);
        }
        if r == d {
            return Subspace::zero(d);
        }
        let (u, _) = full_left_singular_vectors(&self.basis.transpose())
            .expect("SVD of an orthonormal basis");
        let mut data = Vec::with_capacity((d - r) * d);
        for col in r..d {
            data.extend((0..d).map(|i| u.get(i, col)));
        }
        Subspace {
            basis: DenseMatrix::new(d - r, d, data).expect("finite singular vectors"),
        }
    }

    /// Soft membership: the cosine of the first canonical angle between `v`
    /// and the subspace, i.e. the single singular value of `Â·v̂ᵀ`.
    pub fn soft_membership(&self, v: &DenseVector) -> Result<f64> {
        self.soft_membership_slice(v.as_slice())
    }

    pub fn soft_membership_slice(&self, v: &[f64]) -> Result<f64> {
        let n = self.check_vector(v)?;
        if self.rank() == 0 {
            return Ok(0.0);
        }
        // Â·v̂ᵀ is a k×1 matrix; its only singular value is its 2-norm.
        let coords: Vec<f64> = self.basis.mul_vec(v).into_iter().map(|c| c / n).collect();
        Ok(linalg::norm(&coords).min(1.0))
    }

    /// Hard membership: `v̂` is within `tol` of its projection onto the subspace.
    pub fn hard_membership(&self, v: &DenseVector, tol: f64) -> Result<bool> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid(format!("tol {tol} not in (0, 1)")));
        }
        let n = self.check_vector(v.as_slice())?;
        let unit: Vec<f64> = v.as_slice().iter().map(|x| x / n).collect();
        let coords = self.basis.mul_vec(&unit);
        let mut residual = unit;
        for (c, row) in coords.iter().zip(self.basis.row_iter()) {
            for (x, &b) in residual.iter_mut().zip(row) {
                *x -= c * b;
            }
        }
        Ok(linalg::norm(&residual) <= tol)
    }

    /// Frobenius distance between the two orthogonal projectors.
    pub fn projector_distance(&self, other: &Subspace) -> Result<f64> {
        self.check_same_space(other)?;
        self.projector().frobenius_distance(&other.projector())
    }

    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> Result<bool> {
        Ok(self.projector_distance(other)? <= tol)
    }

    /// Writes `subspace <d> <r>` followed by one basis row per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "subspace {} {}", self.ambient_dim(), self.rank())?;
        for row in self.basis.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Subspace> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty subspace file"))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (d, r) = match fields.as_slice() {
            ["subspace", d, r] => (
                d.parse::<usize>()
                    .map_err(|_| Error::parse(line_no, "bad ambient dimension"))?,
                r.parse::<usize>()
                    .map_err(|_| Error::parse(line_no, "bad rank"))?,
            ),
            _ => return Err(Error::parse(line_no, "expected `subspace <dim> <rank>`")),
        };
        if d == 0 || r > d {
            return Err(Error::parse(line_no, "rank/dimension out of range"));
        }
        let mut data = Vec::with_capacity(r * d);
        let mut last_line = line_no;
        for _ in 0..r {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| Error::parse(last_line + 1, "missing basis row"))?;
            last_line = line_no;
            let row = parse_floats(&line?, line_no)?;
            if row.len() != d {
                return Err(Error::parse(
                    line_no,
                    format!("expected {d} values, found {}", row.len()),
                ));
            }
            data.extend(row);
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::parse(line_no, "trailing content after basis"));
        }
        let basis = DenseMatrix::new(r, d, data).map_err(|e| Error::parse(line_no, e.to_string()))?;
        Subspace::from_basis(basis).map_err(|e| Error::parse(line_no, e.to_string()))
    }
}

pub(crate) fn parse_floats(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Error::parse(line_no, format!("invalid number `{tok}`"))),
        })
        .collect()
}

/// Reads one vector per non-blank line; lines starting with `#` are skipped.
pub fn read_vectors<R: BufRead>(r: R) -> Result<Vec<DenseVector>> {
    let mut out: Vec<DenseVector> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let values = parse_floats(trimmed, i + 1)?;
        if let Some(first) = out.first() {
            if first.dim() != values.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {} values, found {}", first.dim(), values.len()),
                ));
            }
        }
        out.push(DenseVector::new(values).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn span(ambient_dim: usize, vectors: &[DenseVector]) -> Result<Subspace> {
    Subspace::span(ambient_dim, vectors)
}

pub fn union(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    a.union(b)
}

pub fn intersection(a: &Subspace, b: &Subspace, alpha: f64) -> Result<Subspace> {
    a.intersection(b, alpha)
}

pub fn complement(a: &Subspace) -> Subspace {
    a.complement()
}

pub fn soft_membership(v: &DenseVector, a: &Subspace) -> Result<f64> {
    a.soft_membership(v)
}

pub fn hard_membership(v: &DenseVector, a: &Subspace, tol: f64) -> Result<bool> {
    a.hard_membership(v, tol)
}

pub fn subspace_equal(a: &Subspace, b: &Subspace, tol: f64) -> Result<bool> {
    a.approx_eq(b, tol)
}
