//! Dense row-major vectors and matrices, plus the handful of kernels the
//! subspace code needs: thin SVD, rank-revealing orthonormalization and
//! orthogonal projectors.

use std::fmt;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Default relative rank tolerance: singular values `σ ≤ rel_tol · σ_max`
/// are treated as zero.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// A finite, non-empty vector of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseVector {
    entries: Vec<f64>,
}

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must have at least one entry"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector has non-finite entries"));
        }
        Ok(DenseVector { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    /// Returns `c · self`.
    pub fn scaled(&self, c: f64) -> Result<DenseVector> {
        DenseVector::new(self.entries.iter().map(|x| x * c).collect())
    }
}

impl fmt::Debug for DenseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.entries).finish()
    }
}

/// A finite row-major matrix. Zero rows are allowed, zero columns are not.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::invalid("matrix must have at least one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries do not fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols > 0, "matrix must have at least one column");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Stacks rows of equal length. `cols` is needed for the empty case.
    pub fn from_rows<R: AsRef<[f64]>>(cols: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Transpose. Panics on a zero-row matrix, whose transpose would have no columns.
    pub fn transpose(&self) -> DenseMatrix {
        assert!(self.rows > 0, "transpose of a zero-row matrix");
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let lhs = self.row(i);
            let dst = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in lhs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    /// `self · selfᵀ`, the Gram matrix of the rows.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.rows.max(1);
        let mut out = vec![0.0; self.rows * self.rows];
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot(self.row(i), self.row(j));
                out[i * self.rows + j] = v;
                out[j * self.rows + i] = v;
            }
        }
        DenseMatrix {
            rows: self.rows,
            cols: n,
            data: if self.rows == 0 { vec![] } else { out },
        }
    }

    /// Multiplies every row by `v`: returns the vector `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|row| dot(row, v)).collect()
    }

    /// Frobenius norm of `self − other`.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    fn from_faer(m: MatRef<'_, f64>) -> DenseMatrix {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        DenseMatrix { rows, cols, data }
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} ", self.rows, self.cols)?;
        f.debug_list().entries(self.row_iter()).finish()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity. Either argument being zero yields `InvalidInput`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine of a zero vector"));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Thin singular value decomposition `m = U · diag(σ) · Vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × p` with orthonormal columns, `p = min(rows, cols)`.
    pub u: DenseMatrix,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// `p × cols` with orthonormal rows.
    pub vt: DenseMatrix,
}

pub fn thin_svd(m: &DenseMatrix) -> Result<Svd> {
    if m.rows == 0 {
        return Err(Error::invalid("SVD of a matrix with zero rows"));
    }
    if m.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let svd = m
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let v = svd.V();
    let vt = DenseMatrix::from_faer(v.transpose());
    let u = DenseMatrix::from_faer(svd.U());
    // faer already returns them in descending order.
    let singular_values: Vec<f64> = svd.S().column_vector().iter().map(|s| s.max(0.0)).collect();
    if singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericalFailure("non-finite singular value".into()));
    }
    Ok(Svd {
        u,
        singular_values,
        vt,
    })
}

/// Full left singular basis: an orthogonal `rows × rows` matrix whose columns
/// pair with the singular values of `m` in descending order, zero-padded to
/// `rows` entries.
pub(crate) fn full_left_singular_vectors(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    if m.rows == 0 {
        return Err(Error::invalid("SVD of a matrix with zero rows"));
    }
    let svd = m
        .to_faer()
        .svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let u = DenseMatrix::from_faer(svd.U());
    let mut singular_values: Vec<f64> = svd.S().column_vector().iter().map(|s| s.max(0.0)).collect();
    singular_values.resize(m.rows, 0.0);
    Ok((u, singular_values))
}

/// Orthonormal basis (as rows) of the row space of `m`.
///
/// The rank is the number of singular values above `rel_tol · σ_max`. Zero-row
/// and all-zero inputs give a `0 × cols` result.
pub fn orthonormal_rows(m: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol {rel_tol} not in (0, 1)")));
    }
    if m.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if m.rows == 0 || m.data.iter().all(|&x| x == 0.0) {
        return Ok(DenseMatrix::zeros(0, m.cols));
    }
    let svd = thin_svd(m)?;
    let cutoff = rel_tol * svd.singular_values[0];
    let rank = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > cutoff)
        .count();
    Ok(DenseMatrix {
        rows: rank,
        cols: m.cols,
        data: svd.vt.data[..rank * m.cols].to_vec(),
    })
}

/// Largest deviation of the row Gram matrix from the identity.
pub fn orthonormality_error(basis: &DenseMatrix) -> f64 {
    let g = basis.gram();
    let mut worst: f64 = 0.0;
    for i in 0..basis.rows {
        for j in 0..basis.rows {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}

/// Orthogonal projector `Bᵀ·B` onto the row space of an orthonormal basis.
pub fn projector_of(basis: &DenseMatrix) -> Result<DenseMatrix> {
    let err = orthonormality_error(basis);
    if err > ORTHONORMAL_TOL {
        return Err(Error::invalid(format!(
            "basis rows are not orthonormal (Gram deviation {err:e})"
        )));
    }
    let d = basis.cols;
    let mut p = DenseMatrix::zeros(d, d);
    for row in basis.row_iter() {
        for i in 0..d {
            if row[i] == 0.0 {
                continue;
            }
            let dst = &mut p.data[i * d..(i + 1) * d];
            for (x, &r) in dst.iter_mut().zip(row) {
                *x += row[i] * r;
            }
        }
    }
    Ok(p)
}
