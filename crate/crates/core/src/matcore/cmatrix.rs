use ndarray::Array2;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Dense square complex matrix, the carrier for every operator in the crate.
///
/// Wire format (JSON): `{"dim": d, "entries": [[[re, im], ...], ...]}`,
/// row-major. Deserialization rejects ragged rows and non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    data: Array2<Complex64>,
}

impl CMatrix {
    /// Wraps a square `ndarray` array, checking shape and finiteness.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::DimMismatch { left: r, right: c });
        }
        if r == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        for ((i, j), z) in data.indexed_iter() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        Ok(Self { data })
    }

    /// Builds from nested rows; rejects ragged input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::RaggedRows { row: i, len: row.len(), dim });
            }
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((dim, dim), flat)
            .expect("shape checked above");
        Self::new(data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: Array2::zeros((dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: Array2::eye(dim) }
    }

    /// Diagonal matrix from real entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[[i, i]] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Rank-one outer product `v v*`.
    pub fn from_outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[[i, j]] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[[i, j]] = z;
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    /// Conjugate transpose `M*`.
    pub fn adjoint(&self) -> Self {
        Self { data: self.data.t().mapv(|z| z.conj()) }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.t().to_owned() }
    }

    pub fn conjugate(&self) -> Self {
        Self { data: self.data.mapv(|z| z.conj()) }
    }

    /// Matrix product `self · other`. Panics on dimension mismatch; public
    /// entry points validate dimensions before multiplying.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "matmul dimension mismatch");
        Self { data: self.data.dot(&other.data) }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "add dimension mismatch");
        Self { data: &self.data + &other.data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sub dimension mismatch");
        Self { data: &self.data - &other.data }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self { data: self.data.mapv(|x| x * z) }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.data[[i, i]]).sum()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(M + M*)/2`, the Hermitian part.
    pub fn hermitize(&self) -> Self {
        let adj = self.adjoint();
        self.add(&adj).scale_re(0.5)
    }

    /// Frobenius norm of `M − M*`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).fro_norm()
    }

    /// `self · v` for a column vector.
    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "mat_vec dimension mismatch");
        (0..n)
            .map(|i| (0..n).map(|j| self.data[[i, j]] * v[j]).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut out = Self::zeros(n * m);
        for i1 in 0..n {
            for j1 in 0..n {
                let a = self.data[[i1, j1]];
                for i2 in 0..m {
                    for j2 in 0..m {
                        out.data[[i1 * m + i2, j1 * m + j2]] = a * other.data[[i2, j2]];
                    }
                }
            }
        }
        out
    }

    /// Row-major vectorization: `v[i*dim + j] = M[i][j]`.
    pub fn vec_row(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(self.data[[i, j]]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vec_row`].
    pub fn from_vec_row(dim: usize, v: &[Complex64]) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(Error::DimMismatch { left: v.len(), right: dim * dim });
        }
        let data = Array2::from_shape_vec((dim, dim), v.to_vec())
            .expect("length checked above");
        Self::new(data)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.dim();
        let entries = (0..dim)
            .map(|i| (0..dim).map(|j| [self.data[[i, j]].re, self.data[[i, j]].im]).collect())
            .collect();
        MatrixWire { dim, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = MatrixWire::deserialize(deserializer)?;
        if wire.entries.len() != wire.dim {
            return Err(D::Error::custom(format!(
                "expected {} rows, got {}",
                wire.dim,
                wire.entries.len()
            )));
        }
        let rows: Vec<Vec<Complex64>> = wire
            .entries
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != wire.dim {
                return Err(D::Error::custom(format!(
                    "ragged rows: row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    wire.dim
                )));
            }
        }
        CMatrix::from_rows(rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}
