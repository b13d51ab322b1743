//! Matrix substrate shared by every frame computation: rank decisions,
//! orthonormal range bases, Moore-Penrose pseudo-inverses, projectors, the
//! Douglas range-inclusion test, and the generalized-eigenvalue lower bound
//! used for optimal frame constants.

use crate::error::{Error, Result};
use crate::factor::{eigh, psd_inv_sqrt, svd};
use crate::matrix::MatrixOperator;
use crate::scalar::Scalar;

/// Rank and residual thresholds. One consistent rank rule feeds every
/// subspace decision downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Scalar> {
    /// Singular values at or below `rank_rel * sigma_max` count as zero.
    pub rank_rel: T,
    /// Relative Frobenius residual accepted as equality.
    pub residual_rel: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rank_rel: T::of(1e-10),
            residual_rel: T::of(1e-8),
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    pub fn new(rank_rel: T, residual_rel: T) -> Result<Self> {
        if !(rank_rel > T::zero() && rank_rel < T::one()) {
            return Err(Error::Validation(format!(
                "rank_rel must be in (0, 1), got {rank_rel}"
            )));
        }
        if residual_rel <= T::zero() {
            return Err(Error::Validation(format!(
                "residual_rel must be positive, got {residual_rel}"
            )));
        }
        Ok(Self {
            rank_rel,
            residual_rel,
        })
    }
}

/// Orthonormal basis of the column space of `m` at the rank decision
/// `tol.rank_rel`. The zero matrix yields an n x 0 basis.
pub fn orthonormal_range_basis<T: Scalar>(
    m: &MatrixOperator<T>,
    tol: &Tolerances<T>,
) -> MatrixOperator<T> {
    let s = svd(m);
    range_from_svd(&s, s.sigma_max() * tol.rank_rel, m.rows())
}

/// Range basis with an absolute singular-value floor; used for submatrices
/// whose rank decision must inherit the scale of a parent problem.
pub fn orthonormal_range_basis_abs<T: Scalar>(
    m: &MatrixOperator<T>,
    cut: T,
) -> MatrixOperator<T> {
    let s = svd(m);
    range_from_svd(&s, cut, m.rows())
}

fn range_from_svd<T: Scalar>(
    s: &crate::factor::Svd<T>,
    cut: T,
    rows: usize,
) -> MatrixOperator<T> {
    let r = s.sigma.iter().filter(|&&x| x > cut).count();
    let mut u = MatrixOperator::zeros(rows, r);
    for j in 0..r {
        for i in 0..rows {
            u[(i, j)] = s.u[(i, j)];
        }
    }
    u
}

/// Orthogonal projector U U* onto the span of an orthonormal basis.
pub fn projector<T: Scalar>(basis: &MatrixOperator<T>) -> MatrixOperator<T> {
    basis.mul(&basis.adjoint())
}

/// Orthonormal basis of the orthogonal complement of span(U) in the ambient
/// space. Computed as the range of I - U U*, whose singular values are exact
/// zeros and ones.
pub fn complement_basis<T: Scalar>(
    basis: &MatrixOperator<T>,
    tol: &Tolerances<T>,
) -> MatrixOperator<T> {
    let n = basis.rows();
    let p = MatrixOperator::identity(n).sub(&projector(basis));
    orthonormal_range_basis(&p, tol)
}

/// ‖(I - U U*) B‖_F: how far the columns of `b` stick out of span(U).
pub fn membership_residual<T: Scalar>(b: &MatrixOperator<T>, basis: &MatrixOperator<T>) -> T {
    let pb = basis.mul(&basis.adjoint().mul(b));
    b.sub(&pb).frobenius_norm()
}

/// Moore-Penrose inverse at the rank decision `tol.rank_rel`. The zero matrix
/// maps to the zero matrix of transposed shape.
pub fn pseudo_inverse<T: Scalar>(
    m: &MatrixOperator<T>,
    tol: &Tolerances<T>,
) -> MatrixOperator<T> {
    let s = svd(m);
    pinv_from_svd(&s, s.sigma_max() * tol.rank_rel, m.rows(), m.cols())
}

/// Pseudo-inverse with an absolute singular-value floor, for submatrices
/// measured against a parent scale.
pub fn pseudo_inverse_abs<T: Scalar>(m: &MatrixOperator<T>, cut: T) -> MatrixOperator<T> {
    let s = svd(m);
    pinv_from_svd(&s, cut, m.rows(), m.cols())
}

fn pinv_from_svd<T: Scalar>(
    s: &crate::factor::Svd<T>,
    cut: T,
    rows: usize,
    cols: usize,
) -> MatrixOperator<T> {
    let r = s.sigma.iter().filter(|&&x| x > cut).count();
    let mut out = MatrixOperator::zeros(cols, rows);
    for k in 0..r {
        let inv = T::one() / s.sigma[k];
        for i in 0..cols {
            let vik = s.v[(i, k)];
            for j in 0..rows {
                out[(i, j)] += (vik * s.u[(j, k)].conj()).scale(inv);
            }
        }
    }
    out
}

/// An operator bundled with the numerically determined data of its range:
/// orthonormal basis of R(K), pseudo-inverse, ‖K†‖ and rank.
#[derive(Debug, Clone)]
pub struct RangedOperator<T: Scalar> {
    pub op: MatrixOperator<T>,
    pub range_basis: MatrixOperator<T>,
    pub pinv: MatrixOperator<T>,
    pub pinv_norm: T,
    pub rank: usize,
}

impl<T: Scalar> RangedOperator<T> {
    pub fn new(op: MatrixOperator<T>, tol: &Tolerances<T>) -> Result<Self> {
        if !op.is_square() {
            return Err(Error::Dimension(format!(
                "ranged operator must be square, got {}x{}",
                op.rows(),
                op.cols()
            )));
        }
        op.ensure_finite("operator")?;
        let s = svd(&op);
        let rank = s.rank(tol.rank_rel);
        let mut range_basis = MatrixOperator::zeros(op.rows(), rank);
        for j in 0..rank {
            for i in 0..op.rows() {
                range_basis[(i, j)] = s.u[(i, j)];
            }
        }
        let pinv = pseudo_inverse(&op, tol);
        let pinv_norm = if rank == 0 {
            T::zero()
        } else {
            T::one() / s.sigma[rank - 1]
        };
        Ok(Self {
            op,
            range_basis,
            pinv,
            pinv_norm,
            rank,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            op: MatrixOperator::identity(n),
            range_basis: MatrixOperator::identity(n),
            pinv: MatrixOperator::identity(n),
            pinv_norm: T::one(),
            rank: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.rows()
    }

    /// Orthogonal projector onto R(K).
    pub fn range_projector(&self) -> MatrixOperator<T> {
        projector(&self.range_basis)
    }

    /// The adjoint operator with its own range data.
    pub fn adjoint(&self, tol: &Tolerances<T>) -> Result<Self> {
        Self::new(self.op.adjoint(), tol)
    }
}

/// Outcome of the Douglas range-inclusion test for a pair (L1, L2). The three
/// equivalent criteria are evaluated independently:
/// (i) column-space membership R(L1) ⊆ R(L2),
/// (ii) existence of lambda ≥ 0 with L1 L1* ≼ lambda² L2 L2*,
/// (iii) a factor X with L2 X = L1.
#[derive(Debug, Clone)]
pub struct DouglasReport<T: Scalar> {
    pub holds: bool,
    /// X = L2† L1, present when the test holds.
    pub factor: Option<MatrixOperator<T>>,
    /// Smallest lambda making lambda² L2 L2* - L1 L1* PSD, present when the
    /// test holds.
    pub lambda: Option<T>,
    pub inclusion_residual: T,
    pub psd_min_eig: T,
    pub factor_residual: T,
    pub holds_inclusion: bool,
    pub holds_psd: bool,
    pub holds_factor: bool,
}

/// Douglas factorization test. `holds` reports criterion (iii); disagreement
/// among the three criteria is a diagnostic failure, never a verdict.
pub fn douglas_check<T: Scalar>(
    l1: &MatrixOperator<T>,
    l2: &MatrixOperator<T>,
    tol: &Tolerances<T>,
) -> Result<DouglasReport<T>> {
    if l1.rows() != l2.rows() {
        return Err(Error::Dimension(format!(
            "douglas operands must share the row count: {} vs {}",
            l1.rows(),
            l2.rows()
        )));
    }
    l1.ensure_finite("L1")?;
    l2.ensure_finite("L2")?;

    let n1 = l1.frobenius_norm();
    let trivial = n1 == T::zero();

    // (i) membership of the columns of L1 in R(L2).
    let u2 = orthonormal_range_basis(l2, tol);
    let inclusion_residual = if trivial {
        T::zero()
    } else {
        membership_residual(l1, &u2) / n1
    };
    let holds_inclusion = inclusion_residual <= tol.residual_rel;

    // (ii) smallest lambda via the pencil restricted to R(L2), then a global
    // PSD verification of lambda² L2 L2* - L1 L1*.
    let r2 = u2.cols();
    let gram1 = l1.mul(&l1.adjoint()).hermitian_part();
    let gram2 = l2.mul(&l2.adjoint()).hermitian_part();
    let (lambda_sq, psd_min_eig) = if trivial {
        (T::zero(), T::zero())
    } else if r2 == 0 {
        let (lo, _) = crate::factor::eigh_extremes(&gram1.scale_re(-T::one()));
        (T::zero(), lo)
    } else {
        let a1 = u2.adjoint().mul(&gram1.mul(&u2)).hermitian_part();
        let a2 = u2.adjoint().mul(&gram2.mul(&u2)).hermitian_part();
        // A2's eigenvalues are squared singular values of L2; the eigenvalue
        // cut consistent with the sigma-based rank rule is rank_rel².
        let w = psd_inv_sqrt(&a2, tol.rank_rel * tol.rank_rel);
        let pencil = w.mul(&a1).mul(&w).hermitian_part();
        let (lam, _) = eigh(&pencil);
        let lmax = lam.last().copied().unwrap_or_else(T::zero).max(T::zero());
        let diff = gram2.scale_re(lmax).sub(&gram1).hermitian_part();
        let (lo, _) = crate::factor::eigh_extremes(&diff);
        (lmax, lo)
    };
    let psd_scale = n1 * n1;
    let holds_psd = trivial || psd_min_eig >= -tol.residual_rel * psd_scale;

    // (iii) explicit factor.
    let x = pseudo_inverse(l2, tol).mul(l1);
    let factor_residual = if trivial {
        T::zero()
    } else {
        l2.mul(&x).sub(l1).frobenius_norm() / n1
    };
    let holds_factor = factor_residual <= tol.residual_rel;

    if holds_inclusion != holds_factor || holds_psd != holds_factor {
        return Err(Error::Diagnostic(format!(
            "douglas criteria disagree: inclusion={holds_inclusion} (res {inclusion_residual:e}), \
             psd={holds_psd} (min eig {psd_min_eig:e}), factor={holds_factor} (res {factor_residual:e})"
        )));
    }

    let holds = holds_factor;
    Ok(DouglasReport {
        holds,
        factor: holds.then_some(x),
        lambda: holds.then(|| lambda_sq.max(T::zero()).sqrt()),
        inclusion_residual,
        psd_min_eig,
        factor_residual,
        holds_inclusion,
        holds_psd,
        holds_factor,
    })
}

/// Optimal lower bound of the quotient ⟨S f, f⟩ / ‖K* f‖² over f outside
/// ker K*, with S Hermitian PSD.
#[derive(Debug, Clone, Copy)]
pub struct PencilBound<T: Scalar> {
    pub a_opt: T,
    /// True when K = 0: the bound is +inf and the frame condition vacuous.
    pub vacuous: bool,
}

/// Evaluates the infimum exactly as a generalized eigenvalue of the pencil
/// (S, K K*) reduced to R(K): split f = u + v with u in R(K), v ⊥ R(K),
/// minimize over v via the PSD Schur complement S_uu - S_uv S_vv† S_vu, then
/// whiten by G = U* K K* U. If the Schur range condition R(S_vu) ⊆ R(S_vv)
/// fails numerically the infimum is zero.
pub fn optimal_lower_bound<T: Scalar>(
    s: &MatrixOperator<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> PencilBound<T> {
    if k.rank == 0 {
        return PencilBound {
            a_opt: T::infinity(),
            vacuous: true,
        };
    }
    let u = &k.range_basis;
    let n = s.rows();
    let r = k.rank;
    let kk = k.op.mul(&k.op.adjoint()).hermitian_part();
    let g = u.adjoint().mul(&kk.mul(u)).hermitian_part();

    let s_uu = u.adjoint().mul(&s.mul(u)).hermitian_part();
    let schur = if r < n {
        let uc = complement_basis(u, tol);
        let s_uv = u.adjoint().mul(&s.mul(&uc));
        let s_vu = s_uv.adjoint();
        let s_vv = uc.adjoint().mul(&s.mul(&uc)).hermitian_part();
        // Rank decisions for the S_vv block inherit the scale of S itself:
        // a block that is rounding dust relative to S must count as zero even
        // though it is "full rank" relative to its own largest entry.
        let block_cut = tol.rank_rel * s.frobenius_norm();
        if s_vu.frobenius_norm() > T::zero() {
            let range_vv = orthonormal_range_basis_abs(&s_vv, block_cut);
            let outside = membership_residual(&s_vu, &range_vv);
            let scale = s.frobenius_norm().max(T::one());
            if outside > tol.residual_rel * scale {
                return PencilBound {
                    a_opt: T::zero(),
                    vacuous: false,
                };
            }
        }
        let pinv_vv = pseudo_inverse_abs(&s_vv, block_cut);
        s_uu.sub(&s_uv.mul(&pinv_vv).mul(&s_vu)).hermitian_part()
    } else {
        s_uu
    };

    // G's spectrum consists of squared kept singular values of K, so the
    // eigenvalue cut consistent with the sigma-based rank rule is rank_rel².
    let gih = psd_inv_sqrt(&g, tol.rank_rel * tol.rank_rel);
    let pencil = gih.mul(&schur).mul(&gih).hermitian_part();
    let (lam, _) = eigh(&pencil);
    let lo = lam.first().copied().unwrap_or_else(T::zero);
    let hi = lam.last().copied().unwrap_or_else(T::zero);
    // A degenerate instance produces lambda_min at the eigensolve noise floor
    // (possibly negative); anything clearly above it is a genuine bound. The
    // pencil's top eigenvalue sets the noise scale, not the rank tolerance:
    // whitening by an ill-conditioned G legitimately stretches the spectrum.
    let cut = T::epsilon() * T::of(64.0) * hi.max(T::zero());
    let a_opt = if lo <= cut { T::zero() } else { lo };
    PencilBound {
        a_opt,
        vacuous: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{inner, Field};
    use crate::scalar::C;
    use num_complex::Complex;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = MatrixOperator<f64>;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
        M::from_fn(rows, cols, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Independent 3x3 complex inverse by cofactors, for oracle projectors.
    fn inv3(m: &M) -> M {
        assert_eq!((m.rows(), m.cols()), (3, 3));
        let a = |i: usize, j: usize| m[(i, j)];
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        let cof = |i: usize, j: usize| -> C<f64> {
            let (r1, r2) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c1, c2) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = a(r1, c1) * a(r2, c2) - a(r1, c2) * a(r2, c1);
            let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
            minor * Complex::new(sign, 0.0)
        };
        M::from_fn(3, 3, |i, j| cof(j, i) / det)
    }

    #[test]
    fn range_basis_identity() {
        let u = orthonormal_range_basis(&M::identity(3), &tol());
        assert_eq!(u.cols(), 3);
        let p = projector(&u);
        assert!(p.sub(&M::identity(3)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn range_basis_rank_one_diag() {
        let u = orthonormal_range_basis(&M::real_diag(&[1.0, 0.0]), &tol());
        assert_eq!(u.cols(), 1);
        assert!((u[(0, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn range_basis_zero_matrix_is_empty() {
        let u = orthonormal_range_basis(&M::zeros(4, 4), &tol());
        assert_eq!(u.cols(), 0);
    }

    #[test]
    fn range_projector_matches_independent_oracle() {
        // Constructed rank 3 in dimension 6; the oracle projector is
        // F (F*F)^{-1} F* with the 3x3 inverse done by cofactors.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = random_complex(&mut rng, 6, 3);
        let g = random_complex(&mut rng, 3, 6);
        let m = f.mul(&g);
        let u = orthonormal_range_basis(&m, &tol());
        assert_eq!(u.cols(), 3);
        let gram = f.adjoint().mul(&f);
        let oracle = f.mul(&inv3(&gram)).mul(&f.adjoint());
        assert!(projector(&u).sub(&oracle).frobenius_norm() < 1e-10);
    }

    #[test]
    fn projector_laws_hold_for_seeded_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let n = 2 + (trial % 5);
            let m = random_complex(&mut rng, n, 1 + (trial % n));
            let u = orthonormal_range_basis(&m, &tol());
            let p = projector(&u);
            assert!(p.mul(&p).sub(&p).frobenius_norm() < 1e-12);
            assert!(p.adjoint().sub(&p).frobenius_norm() < 1e-12);
            assert!(p.mul(&m).sub(&m).frobenius_norm() < 1e-12 * (1.0 + m.frobenius_norm()));
        }
    }

    #[test]
    fn pinv_diagonal() {
        let p = pseudo_inverse(&M::real_diag(&[2.0, 0.0]), &tol());
        assert!((p[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(p[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn pinv_of_unitary_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_complex(&mut rng, 4, 4);
        let q = orthonormal_range_basis(&m, &tol()); // unitary a.s.
        assert_eq!(q.cols(), 4);
        let p = pseudo_inverse(&q, &tol());
        assert!(p.sub(&q.adjoint()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn penrose_identities_for_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_complex(&mut rng, 5, 2);
        let g = random_complex(&mut rng, 2, 4);
        let m = f.mul(&g); // 5x4 of rank 2
        let p = pseudo_inverse(&m, &tol());
        let scale = 1.0 + m.frobenius_norm();
        assert!(m.mul(&p).mul(&m).sub(&m).frobenius_norm() / scale < 1e-10);
        assert!(p.mul(&m).mul(&p).sub(&p).frobenius_norm() / (1.0 + p.frobenius_norm()) < 1e-10);
        let mp = m.mul(&p);
        assert!(mp.adjoint().sub(&mp).frobenius_norm() < 1e-10);
        let pm = p.mul(&m);
        assert!(pm.adjoint().sub(&pm).frobenius_norm() < 1e-10);
    }

    #[test]
    fn pinv_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(r, c, inner_rank) in &[(4usize, 4usize, 4usize), (5, 3, 2), (3, 5, 3)] {
            let f = random_complex(&mut rng, r, inner_rank);
            let g = random_complex(&mut rng, inner_rank, c);
            let m = f.mul(&g);
            let back = pseudo_inverse(&pseudo_inverse(&m, &tol()), &tol());
            assert!(back.sub(&m).frobenius_norm() / m.frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn ranged_operator_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let f = random_complex(&mut rng, 5, 3);
        let g = random_complex(&mut rng, 3, 5);
        let k = RangedOperator::new(f.mul(&g), &tol()).unwrap();
        assert_eq!(k.rank, 3);
        let utu = k.range_basis.adjoint().mul(&k.range_basis);
        assert!(utu.sub(&M::identity(3)).frobenius_norm() < 1e-12);
        // columns of op live in span(range_basis)
        assert!(membership_residual(&k.op, &k.range_basis) < 1e-10);
        // ‖K†‖ = 1 / smallest nonzero singular value
        let s = svd(&k.op);
        assert!((k.pinv_norm - 1.0 / s.sigma[2]).abs() < 1e-12);
    }

    #[test]
    fn douglas_identity_pair() {
        let r = douglas_check(&M::identity(3), &M::identity(3), &tol()).unwrap();
        assert!(r.holds);
        assert!((r.lambda.unwrap() - 1.0).abs() < 1e-12);
        let x = r.factor.unwrap();
        assert!(x.sub(&M::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn douglas_disjoint_ranges_fail() {
        let l1 = M::real_diag(&[1.0, 0.0]);
        let l2 = M::real_diag(&[0.0, 1.0]);
        let r = douglas_check(&l1, &l2, &tol()).unwrap();
        assert!(!r.holds);
        assert!(r.factor.is_none());
        assert!(r.lambda.is_none());
    }

    #[test]
    fn douglas_seeded_positive_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_complex(&mut rng, 6, 4);
        let b = random_complex(&mut rng, 4, 6);
        let l2 = a.mul(&b); // rank 4
        let g = random_complex(&mut rng, 6, 6);
        let l1 = l2.mul(&g);
        let r = douglas_check(&l1, &l2, &tol()).unwrap();
        assert!(r.holds);
        let x = r.factor.as_ref().unwrap();
        assert!(l2.mul(x).sub(&l1).frobenius_norm() / l1.frobenius_norm() < 1e-10);

        // lambda² dominates a sampled generalized Rayleigh quotient on R(L2).
        let lam_sq = r.lambda.unwrap().powi(2);
        let u2 = orthonormal_range_basis(&l2, &tol());
        let g1 = l1.mul(&l1.adjoint());
        let g2 = l2.mul(&l2.adjoint());
        let mut max_q = 0.0f64;
        for _ in 0..2000 {
            let coeffs: Vec<C<f64>> = (0..u2.cols())
                .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let x = u2.matvec(&coeffs);
            let num = inner(&g1.matvec(&x), &x).re;
            let den = inner(&g2.matvec(&x), &x).re;
            if den > 1e-12 {
                max_q = max_q.max(num / den);
            }
        }
        assert!(lam_sq >= max_q - 1e-9, "lambda²={lam_sq} vs sampled {max_q}");
    }

    #[test]
    fn douglas_zero_l1_holds_trivially() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let l2 = random_complex(&mut rng, 4, 4);
        let r = douglas_check(&M::zeros(4, 4), &l2, &tol()).unwrap();
        assert!(r.holds);
        assert_eq!(r.lambda.unwrap(), 0.0);
    }

    #[test]
    fn pencil_bound_identity_case() {
        let k = RangedOperator::<f64>::identity(2);
        let b = optimal_lower_bound(&M::identity(2), &k, &tol());
        assert!(!b.vacuous);
        assert!((b.a_opt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_bound_vacuous_for_zero_operator() {
        let k = RangedOperator::new(M::zeros(3, 3), &tol()).unwrap();
        let b = optimal_lower_bound(&M::identity(3), &k, &tol());
        assert!(b.vacuous);
        assert!(b.a_opt.is_infinite());
    }

    #[test]
    fn pencil_bound_detects_missing_directions() {
        // S supported on e1 only, K the identity: no positive lower bound.
        let k = RangedOperator::<f64>::identity(2);
        let s = M::real_diag(&[1.0, 0.0]);
        let b = optimal_lower_bound(&s, &k, &tol());
        assert_eq!(b.a_opt, 0.0);
    }

    #[test]
    fn tolerances_reject_bad_values() {
        assert!(Tolerances::new(0.0, 1e-8).is_err());
        assert!(Tolerances::new(1e-10, 0.0).is_err());
        assert!(Tolerances::new(2.0, 1e-8).is_err());
        assert!(Tolerances::<f64>::new(1e-12, 1e-9).is_ok());
    }

    #[test]
    fn field_tag_is_descriptive_only() {
        let m = M::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(m.field(), Field::Real);
        assert_eq!(m.with_field(Field::Complex).field(), Field::Complex);
    }
}
