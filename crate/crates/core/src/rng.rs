//! Deterministic seeded randomness. Everything downstream (instances, test
//! batteries, oracles) draws from [`SeededRng`], so a fixed seed reproduces a
//! run bit for bit.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{ColVec, Field, MatrixOperator};
use crate::scalar::{Scalar, C};

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent generator; used to advance deterministically on
    /// generation retries.
    pub fn fork(&mut self) -> SeededRng {
        SeededRng::new(self.inner.random::<u64>())
    }

    pub fn pick(&mut self, n: usize) -> usize {
        assert!(n > 0);
        self.inner.random_range(0..n)
    }

    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::of(self.inner.random::<f64>())
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian<T: Scalar>(&mut self) -> T {
        let u1: f64 = self.inner.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = self.inner.random();
        T::of((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
    }

    pub fn gaussian_scalar<T: Scalar>(&mut self, field: Field) -> C<T> {
        match field {
            Field::Real => Complex::new(self.gaussian(), T::zero()),
            Field::Complex => Complex::new(self.gaussian(), self.gaussian()),
        }
    }

    pub fn gaussian_vec<T: Scalar>(&mut self, n: usize, field: Field) -> ColVec<T> {
        (0..n).map(|_| self.gaussian_scalar(field)).collect()
    }

    pub fn gaussian_matrix<T: Scalar>(
        &mut self,
        rows: usize,
        cols: usize,
        field: Field,
    ) -> MatrixOperator<T> {
        let mut m = MatrixOperator::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.gaussian_scalar(field);
            }
        }
        m.with_field(field)
    }

    /// Gaussian matrix of the given rank (product of thin factors).
    pub fn gaussian_matrix_of_rank<T: Scalar>(
        &mut self,
        n: usize,
        rank: usize,
        field: Field,
    ) -> MatrixOperator<T> {
        assert!(rank <= n);
        if rank == 0 {
            return MatrixOperator::zeros(n, n);
        }
        if rank == n {
            return self.gaussian_matrix(n, n, field);
        }
        let a = self.gaussian_matrix::<T>(n, rank, field);
        let b = self.gaussian_matrix::<T>(rank, n, field);
        a.mul(&b).with_field(field)
    }

    pub fn unit_vector<T: Scalar>(&mut self, n: usize, field: Field) -> ColVec<T> {
        loop {
            let v = self.gaussian_vec::<T>(n, field);
            if let Some(u) = crate::matrix::normalize(&v) {
                return u;
            }
        }
    }
}

/// Standard battery for inequality checks: `count` seeded unit vectors plus
/// every eigenvector of the supplied Hermitian operators. Eigenvectors
/// witness extremal Rayleigh quotients, so inequalities that fail anywhere
/// fail on the battery.
pub fn unit_battery<T: Scalar>(
    seed: u64,
    n: usize,
    count: usize,
    ops: &[&MatrixOperator<T>],
) -> Vec<ColVec<T>> {
    let mut rng = SeededRng::new(seed);
    let mut battery: Vec<ColVec<T>> = (0..count)
        .map(|_| rng.unit_vector::<T>(n, Field::Complex))
        .collect();
    for op in ops {
        debug_assert_eq!(op.rows(), n);
        let (_, v) = crate::factor::eigh(op);
        for j in 0..v.cols() {
            if let Some(u) = crate::matrix::normalize(&v.column(j)) {
                battery.push(u);
            }
        }
    }
    battery
}
