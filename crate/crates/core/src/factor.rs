//! Dense factorizations: one-sided Jacobi SVD and two-sided Jacobi Hermitian
//! eigendecomposition.
//!
//! Jacobi methods are used on purpose: at the dimensions this crate targets
//! they are exact enough to support rank decisions at 1e-10 relative, and a
//! fixed cyclic sweep order plus deterministic sorting and phase normalization
//! makes repeated runs bit-identical.

use num_complex::Complex;

use crate::matrix::MatrixOperator;
use crate::scalar::{c_re, Scalar, C};

const MAX_SWEEPS: usize = 128;

/// Thin singular value decomposition M = U diag(sigma) V*.
///
/// `sigma` is sorted descending and has length min(rows, cols). Columns of `u`
/// whose singular value is exactly zero are zero vectors; every column with a
/// nonzero singular value is unit length, and those columns are mutually
/// orthonormal. `v` always has orthonormal columns.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: MatrixOperator<T>,
    pub sigma: Vec<T>,
    pub v: MatrixOperator<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    /// Numerical rank at the relative threshold `rank_rel`.
    pub fn rank(&self, rank_rel: T) -> usize {
        let cut = self.sigma_max() * rank_rel;
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}

/// Complex Jacobi rotation parameters zeroing the off-diagonal of the
/// Hermitian 2x2 block [[a, z],[conj(z), b]] (a, b real).
/// The rotation is J = [[c, s],[-s*e^{-i phi}, c*e^{-i phi}]] with
/// phi = arg(z); J* B J is diagonal.
fn jacobi_rotation<T: Scalar>(a: T, b: T, z: C<T>) -> (T, T, C<T>) {
    let r = z.norm();
    let phase = if r > T::zero() {
        z / r
    } else {
        c_re(T::one())
    };
    let tau = (b - a) / (r + r);
    let t = if tau.is_finite() {
        let sign = if tau < T::zero() { -T::one() } else { T::one() };
        sign / (tau.abs() + (T::one() + tau * tau).sqrt())
    } else {
        // r == 0 never reaches here; defensively treat huge tau as no-op.
        T::zero()
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = c * t;
    (c, s, phase)
}

/// One-sided Jacobi SVD. Deterministic for fixed input.
pub fn svd<T: Scalar>(m: &MatrixOperator<T>) -> Svd<T> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < cols {
        let t = svd(&m.adjoint());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let k = cols;
    if k == 0 {
        return Svd {
            u: MatrixOperator::zeros(rows, 0),
            sigma: Vec::new(),
            v: MatrixOperator::zeros(cols, 0),
        };
    }

    let mut b = m.clone();
    let mut v = MatrixOperator::identity(k);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                // Gram entries of the (p, q) column pair.
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = Complex::new(T::zero(), T::zero());
                for i in 0..rows {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    app += bp.norm_sqr();
                    aqq += bq.norm_sqr();
                    apq += bp.conj() * bq;
                }
                if apq.norm() <= eps * (app * aqq).sqrt() || apq.norm() == T::zero() {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(app, aqq, apq);
                let se = phase.conj().scale(s);
                let ce = phase.conj().scale(c);
                for i in 0..rows {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = bp.scale(c) - bq * se;
                    b[(i, q)] = bp.scale(s) + bq * ce;
                }
                for i in 0..k {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp.scale(c) - vq * se;
                    v[(i, q)] = vp.scale(s) + vq * ce;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<T> = (0..k)
        .map(|j| {
            (0..rows)
                .map(|i| b[(i, j)].norm_sqr())
                .fold(T::zero(), |a, x| a + x)
                .sqrt()
        })
        .collect();
    order.sort_by(|&x, &y| {
        norms[y]
            .partial_cmp(&norms[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });

    let mut u = MatrixOperator::zeros(rows, k);
    let mut vs = MatrixOperator::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (slot, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        if norms[j] > T::zero() {
            for i in 0..rows {
                u[(i, slot)] = b[(i, j)] / norms[j];
            }
        }
        for i in 0..k {
            vs[(i, slot)] = v[(i, j)];
        }
    }

    // Deterministic phases: the largest-modulus entry of each u column (v
    // column when sigma is zero) is made real positive; the matching column of
    // the other factor absorbs the conjugate phase so u sigma v* is unchanged.
    for j in 0..k {
        let source = if sigma[j] > T::zero() { &u } else { &vs };
        let n_src = source.rows();
        let mut best = T::zero();
        let mut best_i = 0;
        for i in 0..n_src {
            let a = source[(i, j)].norm();
            if a > best {
                best = a;
                best_i = i;
            }
        }
        if best > T::zero() {
            let ph = source[(best_i, j)] / best;
            let conj_ph = ph.conj();
            for i in 0..rows {
                u[(i, j)] *= conj_ph;
            }
            for i in 0..k {
                vs[(i, j)] *= conj_ph;
            }
        }
    }

    Svd { u, sigma, v: vs }
}

/// Hermitian eigendecomposition H = V diag(lambda) V*.
///
/// Only the Hermitian part of the input is used. Eigenvalues come back
/// ascending; `v` has orthonormal columns with deterministic phases.
pub fn eigh<T: Scalar>(h: &MatrixOperator<T>) -> (Vec<T>, MatrixOperator<T>) {
    assert!(h.is_square(), "eigh needs a square matrix");
    let n = h.rows();
    if n == 0 {
        return (Vec::new(), MatrixOperator::zeros(0, 0));
    }
    let mut a = h.hermitian_part();
    let mut v = MatrixOperator::identity(n);
    let scale = a.frobenius_norm();
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }
    let thresh = T::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let z = a[(p, q)];
                if z.norm() <= thresh {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, z);
                let se = phase.conj().scale(s);
                let ce = phase.conj().scale(c);
                // A <- A J (columns), then A <- J* A (rows); V <- V J.
                for i in 0..n {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    a[(i, p)] = ap.scale(c) - aq * se;
                    a[(i, q)] = ap.scale(s) + aq * ce;
                }
                let se_r = se.conj();
                let ce_r = ce.conj();
                for j in 0..n {
                    let ap = a[(p, j)];
                    let aq = a[(q, j)];
                    a[(p, j)] = ap.scale(c) - aq * se_r;
                    a[(q, j)] = ap.scale(s) + aq * ce_r;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp.scale(c) - vq * se;
                    v[(i, q)] = vp.scale(s) + vq * ce;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| {
        diag[x]
            .partial_cmp(&diag[y])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });

    let mut lambda = Vec::with_capacity(n);
    let mut vs = MatrixOperator::zeros(n, n);
    for (slot, &j) in order.iter().enumerate() {
        lambda.push(diag[j]);
        for i in 0..n {
            vs[(i, slot)] = v[(i, j)];
        }
    }
    for j in 0..n {
        let mut best = T::zero();
        let mut best_i = 0;
        for i in 0..n {
            let m = vs[(i, j)].norm();
            if m > best {
                best = m;
                best_i = i;
            }
        }
        if best > T::zero() {
            let ph = (vs[(best_i, j)] / best).conj();
            for i in 0..n {
                vs[(i, j)] *= ph;
            }
        }
    }
    (lambda, vs)
}

/// Largest singular value; zero for empty shapes.
pub fn spectral_norm<T: Scalar>(m: &MatrixOperator<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    svd(m).sigma_max()
}

/// Smallest and largest eigenvalue of the Hermitian part.
pub fn eigh_extremes<T: Scalar>(h: &MatrixOperator<T>) -> (T, T) {
    let (lambda, _) = eigh(h);
    match (lambda.first(), lambda.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (T::zero(), T::zero()),
    }
}

/// H^{-1/2} for Hermitian positive semidefinite H, pseudo-inverting
/// eigenvalues at or below `rank_rel * lambda_max`.
pub fn psd_inv_sqrt<T: Scalar>(h: &MatrixOperator<T>, rank_rel: T) -> MatrixOperator<T> {
    let n = h.rows();
    let (lambda, v) = eigh(h);
    let lmax = lambda.last().copied().unwrap_or_else(T::zero);
    let cut = lmax * rank_rel;
    let inv_sqrt: Vec<T> = lambda
        .iter()
        .map(|&l| if l > cut && l > T::zero() { T::one() / l.sqrt() } else { T::zero() })
        .collect();
    let d = MatrixOperator::real_diag(&inv_sqrt);
    let vd = v.mul(&d);
    vd.mul(&v.adjoint()).hermitian_part()
        // Exact Hermitian output regardless of rounding in the products.
        .with_field(if n == 0 { crate::matrix::Field::Real } else { crate::matrix::Field::Complex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixOperator;
    use num_complex::Complex;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = MatrixOperator<f64>;

    fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
        M::from_fn(rows, cols, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn reconstruct(s: &Svd<f64>) -> M {
        let d = M::real_diag(&s.sigma);
        s.u.mul(&d).mul(&s.v.adjoint())
    }

    #[test]
    fn svd_identity() {
        let s = svd(&M::identity(3));
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
        assert!(reconstruct(&s).sub(&M::identity(3)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(r, c) in &[(5, 3), (3, 5), (4, 4), (6, 2), (1, 4)] {
            let m = random_complex(&mut rng, r, c);
            let s = svd(&m);
            let err = reconstruct(&s).sub(&m).frobenius_norm() / m.frobenius_norm();
            assert!(err < 1e-13, "reconstruction err {err} for {r}x{c}");
            // nonzero-sigma columns of u orthonormal
            let k = s.sigma.iter().filter(|&&x| x > 1e-12).count();
            for i in 0..k {
                for j in 0..k {
                    let ip = crate::matrix::inner(&s.u.column(j), &s.u.column(i));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - Complex::new(want, 0.0)).norm() < 1e-13);
                }
            }
            let vtv = s.v.adjoint().mul(&s.v);
            assert!(vtv.sub(&M::identity(s.v.cols())).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn svd_detects_exact_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = random_complex(&mut rng, 6, 3);
        let g = random_complex(&mut rng, 3, 6);
        let m = f.mul(&g);
        let s = svd(&m);
        assert_eq!(s.rank(1e-10), 3);
        assert!(s.sigma[3] < 1e-13 * s.sigma[0]);
    }

    #[test]
    fn svd_zero_matrix() {
        let s = svd(&M::zeros(4, 2));
        assert_eq!(s.sigma, vec![0.0, 0.0]);
        assert_eq!(s.rank(1e-10), 0);
    }

    #[test]
    fn svd_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_complex(&mut rng, 5, 4);
        let a = svd(&m);
        let b = svd(&m);
        assert_eq!(a.u.entries(), b.u.entries());
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.v.entries(), b.v.entries());
    }

    #[test]
    fn eigh_diagonal() {
        let h = M::real_diag(&[3.0, -1.0, 2.0]);
        let (l, v) = eigh(&h);
        assert_eq!(l, vec![-1.0, 2.0, 3.0]);
        let back = v.mul(&M::real_diag(&l)).mul(&v.adjoint());
        assert!(back.sub(&h).frobenius_norm() < 1e-14);
    }

    #[test]
    fn eigh_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=8 {
            let a = random_complex(&mut rng, n, n);
            let h = a.add(&a.adjoint()).scale_re(0.5);
            let (l, v) = eigh(&h);
            assert!(l.windows(2).all(|w| w[0] <= w[1]));
            let back = v.mul(&M::real_diag(&l)).mul(&v.adjoint());
            assert!(back.sub(&h).frobenius_norm() < 1e-12 * (1.0 + h.frobenius_norm()));
            let vtv = v.adjoint().mul(&v);
            assert!(vtv.sub(&M::identity(n)).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn eigh_indefinite_signs_survive() {
        // SVD would report |lambda|; eigh must keep the sign.
        let h = M::from_real_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]);
        let (l, _) = eigh(&h);
        assert!((l[0] + 2.0).abs() < 1e-14);
        assert!((l[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn psd_inv_sqrt_inverts_on_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_complex(&mut rng, 4, 3);
        let h = a.mul(&a.adjoint()); // PSD rank 3
        let w = psd_inv_sqrt(&h, 1e-10);
        let should_be_proj = w.mul(&h).mul(&w);
        // W H W = orthogonal projector onto range(H)
        let p2 = should_be_proj.mul(&should_be_proj);
        assert!(p2.sub(&should_be_proj).frobenius_norm() < 1e-10);
        assert!((should_be_proj.trace().re - 3.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_of_projector_is_one() {
        let h = M::real_diag(&[1.0, 1.0, 0.0]);
        assert!((spectral_norm(&h) - 1.0).abs() < 1e-14);
    }
}
