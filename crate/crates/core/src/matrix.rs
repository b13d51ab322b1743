//! Dense complex matrices standing for bounded operators between
//! finite-dimensional Hilbert spaces, plus the handful of vector helpers the
//! frame computations need.
//!
//! Entries are `Complex<T>`; a real operator is the degenerate case with all
//! imaginary parts zero, recorded in the [`Field`] tag. The adjoint is always
//! the conjugate transpose.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{c_re, c_zero, Scalar, C};

/// Scalar field of an operator. Purely descriptive: storage is always complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

/// Dense row-major matrix over `Complex<T>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
    field: Field,
}

/// Column vector as a plain buffer of complex entries.
pub type ColVec<T> = Vec<C<T>>;

impl<T: Scalar> MatrixOperator<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![c_zero(); rows * cols],
            field: Field::Real,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c_re(T::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            data,
            field: Field::Complex,
        }
    }

    /// Build from row slices of complex entries.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
            field: Field::Complex,
        }
    }

    /// Build a real matrix from `f64`-style literals.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend(row.iter().map(|&x| c_re(x)));
        }
        Self {
            rows: r,
            cols: c,
            data,
            field: Field::Real,
        }
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m.field = Field::Complex;
        m
    }

    pub fn real_diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = c_re(e);
        }
        m
    }

    /// Stack column vectors into an n x k matrix.
    pub fn from_columns(n: usize, cols: &[ColVec<T>]) -> Self {
        assert!(cols.iter().all(|v| v.len() == n), "column length mismatch");
        let mut m = Self::zeros(n, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m.field = Field::Complex;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.data
    }

    /// All entries finite (no NaN/Inf in either component).
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::Validation(format!("{what} has non-finite entries")))
        }
    }

    pub fn column(&self, j: usize) -> ColVec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C<T>]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    /// Concatenate blocks side by side. All blocks must share the row count;
    /// zero-column blocks are legal and contribute nothing.
    pub fn hstack(n: usize, blocks: &[MatrixOperator<T>]) -> Self {
        let total: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(n, total);
        m.field = Field::Complex;
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, n, "hstack row mismatch");
            for j in 0..b.cols {
                for i in 0..n {
                    m[(i, off + j)] = b[(i, j)];
                }
            }
            off += b.cols;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out.field = self.field;
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= s;
        }
        out.field = Field::Complex;
        out
    }

    pub fn scale_re(&self, s: T) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z = C::new(z.re * s, z.im * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z += *w;
        }
        out.field = Field::Complex;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z -= *w;
        }
        out.field = Field::Complex;
        out
    }

    /// Matrix product. Inner dimensions must agree; empty operands yield the
    /// zero matrix of the composed shape.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        out.field = Field::Complex;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> ColVec<T> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        let mut out = vec![c_zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = c_zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Apply the adjoint without forming it.
    pub fn adjoint_matvec(&self, v: &[C<T>]) -> ColVec<T> {
        assert_eq!(self.rows, v.len(), "adjoint matvec shape mismatch");
        let mut out = vec![c_zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)].conj() * vi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// (A + A*)/2, defensible only for square matrices.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let adj = self.adjoint();
        let mut out = self.add(&adj);
        let half = T::of(0.5);
        for z in &mut out.data {
            *z = C::new(z.re * half, z.im * half);
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).fold(c_zero(), |a, b| a + b)
    }
}

impl<T: Scalar> Index<(usize, usize)> for MatrixOperator<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for MatrixOperator<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// ⟨x, y⟩ = Σ x_i conj(y_i), linear in the first argument.
pub fn inner<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| a * b.conj())
        .fold(c_zero(), |acc, z| acc + z)
}

pub fn vec_norm<T: Scalar>(x: &[C<T>]) -> T {
    x.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

pub fn vec_sub<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> ColVec<T> {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn vec_add<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> ColVec<T> {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn vec_scale<T: Scalar>(s: C<T>, x: &[C<T>]) -> ColVec<T> {
    x.iter().map(|a| a * s).collect()
}

pub fn normalize<T: Scalar>(x: &[C<T>]) -> Option<ColVec<T>> {
    let n = vec_norm(x);
    if n == T::zero() {
        return None;
    }
    Some(x.iter().map(|a| a / n).collect())
}

/// Rank-one operator x y*.
pub fn outer<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> MatrixOperator<T> {
    let mut m = MatrixOperator::zeros(x.len(), y.len());
    for i in 0..x.len() {
        for j in 0..y.len() {
            m[(i, j)] = x[i] * y[j].conj();
        }
    }
    m.with_field(Field::Complex)
}

/// Relative Frobenius distance ‖A - B‖_F / max(‖B‖_F, floor).
pub fn rel_fro_dist<T: Scalar>(a: &MatrixOperator<T>, b: &MatrixOperator<T>) -> T {
    let denom = b.frobenius_norm();
    let num = a.sub(b).frobenius_norm();
    if denom == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        num / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    type M = MatrixOperator<f64>;

    #[test]
    fn adjoint_involution_is_entry_exact() {
        let a = M::from_rows(&[
            vec![Complex::new(1.0, 2.0), Complex::new(-0.5, 0.25)],
            vec![Complex::new(0.0, -1.0), Complex::new(3.0, 0.0)],
            vec![Complex::new(2.5, 2.5), Complex::new(-1.0, -4.0)],
        ]);
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn empty_products_have_zero_entries() {
        let a = M::zeros(3, 0);
        let b = M::zeros(0, 2);
        let p = a.mul(&b);
        assert_eq!((p.rows(), p.cols()), (3, 2));
        assert_eq!(p.frobenius_norm(), 0.0);
    }

    #[test]
    fn inner_product_conjugates_second_argument() {
        let x = vec![Complex::new(0.0, 1.0)];
        let y = vec![Complex::new(0.0, 1.0)];
        let ip = inner(&x, &y);
        assert_eq!(ip, Complex::new(1.0, 0.0));
    }

    #[test]
    fn hermitian_part_is_self_adjoint() {
        let a = M::from_rows(&[
            vec![Complex::new(1.0, 1.0), Complex::new(2.0, -3.0)],
            vec![Complex::new(0.5, 0.5), Complex::new(-1.0, 2.0)],
        ]);
        let h = a.hermitian_part();
        assert!(h.sub(&h.adjoint()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn matvec_matches_mul() {
        let a = M::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let v = vec![Complex::new(1.0, -1.0), Complex::new(0.5, 2.0)];
        let as_mat = a.mul(&M::from_columns(2, std::slice::from_ref(&v)));
        let direct = a.matvec(&v);
        for i in 0..3 {
            assert!((as_mat[(i, 0)] - direct[i]).norm() < 1e-15);
        }
    }
}
