//! Vector-level K-frames: optimal bounds, the frame operator restricted
//! inverse, K-duals and the canonical K-dual.

use crate::error::{Error, Result};
use crate::factor::{eigh_extremes, svd};
use crate::matrix::{outer, MatrixOperator};
use crate::numerics::{optimal_lower_bound, pseudo_inverse, RangedOperator, Tolerances};
use crate::scalar::Scalar;
use crate::spaces::VectorFamily;

/// Result of analyzing a vector family against an operator K.
#[derive(Debug, Clone)]
pub struct KFrameAnalysis<T: Scalar> {
    /// Frame operator S = sum_i f_i f_i*, symmetrized.
    pub frame_operator: MatrixOperator<T>,
    /// Optimal lower K-frame bound; +inf sentinel when K = 0.
    pub lower_bound: T,
    /// Optimal upper bound, the largest eigenvalue of S.
    pub upper_bound: T,
    pub is_kframe: bool,
    /// K = 0: the lower inequality is vacuous and `lower_bound` is a sentinel
    /// that must never enter a division.
    pub vacuous: bool,
}

/// Optimal bounds for `A ‖K* f‖² ≤ Σ |⟨f, f_i⟩|² ≤ B ‖f‖²`.
pub fn kframe_analyze<T: Scalar>(
    family: &VectorFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<KFrameAnalysis<T>> {
    if family.is_empty() {
        return Err(Error::Validation("empty vector family".into()));
    }
    if family.ambient_dim() != k.dim() {
        return Err(Error::Dimension(format!(
            "family dimension {} vs operator dimension {}",
            family.ambient_dim(),
            k.dim()
        )));
    }
    let s = family.frame_operator();
    let (_, b_opt) = eigh_extremes(&s);
    let bound = optimal_lower_bound(&s, k, tol);
    Ok(KFrameAnalysis {
        frame_operator: s,
        lower_bound: bound.a_opt,
        upper_bound: b_opt.max(T::zero()),
        is_kframe: bound.vacuous || bound.a_opt > T::zero(),
        vacuous: bound.vacuous,
    })
}

/// The matrix realization of S⁻¹ π_{S(R(K))} for a frame operator S that is
/// injective on R(K): with U a basis of R(K), D = U (S U)†. Then D S u = u on
/// R(K) and D annihilates the orthogonal complement of S(R(K)).
pub(crate) fn restricted_inverse<T: Scalar>(
    s: &MatrixOperator<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<MatrixOperator<T>> {
    let u = &k.range_basis;
    let s_r = s.mul(u);
    if k.rank > 0 {
        let f = svd(&s_r);
        if f.rank(tol.rank_rel) < k.rank {
            return Err(Error::NotKFrame(format!(
                "frame operator drops rank on R(K): rank {} < {}",
                f.rank(tol.rank_rel),
                k.rank
            )));
        }
    }
    Ok(u.mul(&pseudo_inverse(&s_r, tol)))
}

/// S_F⁻¹ π_{S_F(R(K))} for a K-frame family.
pub fn restricted_inverse_vec<T: Scalar>(
    family: &VectorFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<MatrixOperator<T>> {
    let analysis = kframe_analyze(family, k, tol)?;
    if !analysis.is_kframe {
        return Err(Error::NotKFrame(
            "restricted inverse needs a K-frame (optimal lower bound is zero)".into(),
        ));
    }
    restricted_inverse(&analysis.frame_operator, k, tol)
}

/// Canonical K-dual {K* S⁻¹ π_{S(R(K))} f_i}, grouping preserved.
pub fn canonical_kdual_vec<T: Scalar>(
    family: &VectorFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<VectorFamily<T>> {
    let d = restricted_inverse_vec(family, k, tol)?;
    let kd = k.op.adjoint().mul(&d);
    Ok(family.map(&kd))
}

/// Relative residual of the K-dual identity
/// `K f = Σ ⟨f, g_i⟩ π_{R(K)} f_i`, in matrix form
/// ‖K - Σ π_{R(K)} f_i g_i*‖_F / ‖K‖_F.
pub fn verify_kdual_vec<T: Scalar>(
    family: &VectorFamily<T>,
    dual: &VectorFamily<T>,
    k: &RangedOperator<T>,
) -> Result<T> {
    if family.len() != dual.len() {
        return Err(Error::Dimension(format!(
            "family sizes differ: {} vs {}",
            family.len(),
            dual.len()
        )));
    }
    if family.ambient_dim() != dual.ambient_dim() {
        return Err(Error::Dimension("ambient dimensions differ".into()));
    }
    let k_norm = k.op.frobenius_norm();
    if k_norm == T::zero() {
        return Err(Error::UndefinedResidual(
            "K = 0 admits no relative duality residual".into(),
        ));
    }
    let pi = k.range_projector();
    let n = family.ambient_dim();
    let mut sum = MatrixOperator::zeros(n, n);
    for (f, g) in family.flat().zip(dual.flat()) {
        sum = sum.add(&outer(&pi.matvec(f), g));
    }
    Ok(k.op.sub(&sum).frobenius_norm() / k_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{inner, vec_norm, Field, MatrixOperator};
    use crate::rng::SeededRng;
    use crate::scalar::C;
    use num_complex::Complex;

    type M = MatrixOperator<f64>;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn e(n: usize, i: usize) -> Vec<C<f64>> {
        let mut v = vec![Complex::new(0.0, 0.0); n];
        v[i] = Complex::new(1.0, 0.0);
        v
    }

    fn ranged(m: M) -> RangedOperator<f64> {
        RangedOperator::new(m, &tol()).unwrap()
    }

    #[test]
    fn parseval_basis_has_unit_bounds() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let k = RangedOperator::<f64>::identity(2);
        let a = kframe_analyze(&fam, &k, &tol()).unwrap();
        assert!((a.lower_bound - 1.0).abs() < 1e-12);
        assert!((a.upper_bound - 1.0).abs() < 1e-12);
        assert!(a.is_kframe && !a.vacuous);
    }

    #[test]
    fn rank_one_alignment() {
        // F = {e1}, K = diag(1,0): only the e1 direction is constrained.
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0)]).unwrap();
        let k = ranged(M::real_diag(&[1.0, 0.0]));
        let a = kframe_analyze(&fam, &k, &tol()).unwrap();
        assert!((a.lower_bound - 1.0).abs() < 1e-12);
        assert!((a.upper_bound - 1.0).abs() < 1e-12);
        assert!(a.is_kframe);
    }

    #[test]
    fn zero_k_is_vacuous() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0)]).unwrap();
        let k = ranged(M::zeros(2, 2));
        let a = kframe_analyze(&fam, &k, &tol()).unwrap();
        assert!(a.vacuous);
        assert!(a.is_kframe);
        assert!(a.lower_bound.is_infinite());
    }

    #[test]
    fn lower_bound_is_valid_on_sample_battery() {
        let mut rng = SeededRng::new(40);
        let vs: Vec<_> = (0..6).map(|_| rng.gaussian_vec::<f64>(4, Field::Complex)).collect();
        let fam = VectorFamily::from_vectors(4, vs).unwrap();
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(4, 2, Field::Complex));
        let a = kframe_analyze(&fam, &k, &tol()).unwrap();
        assert!(a.is_kframe, "generic spanning family is a K-frame");
        let s = &a.frame_operator;
        let mut sampled_min = f64::INFINITY;
        for _ in 0..1000 {
            let f = rng.unit_vector::<f64>(4, Field::Complex);
            let num = inner(&s.matvec(&f), &f).re;
            let den = {
                let kf = k.op.adjoint_matvec(&f);
                vec_norm(&kf).powi(2)
            };
            // validity: A_opt ‖K*f‖² ≤ ⟨Sf,f⟩ + slack
            assert!(a.lower_bound * den <= num + 1e-9);
            if den > 1e-12 {
                sampled_min = sampled_min.min(num / den);
            }
        }
        assert!(a.lower_bound <= sampled_min + 1e-9);
    }

    #[test]
    fn restricted_inverse_identity_case() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let k = RangedOperator::<f64>::identity(2);
        let d = restricted_inverse_vec(&fam, &k, &tol()).unwrap();
        assert!(d.sub(&M::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn restricted_inverse_one_dimensional_range() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0)]).unwrap();
        let k = ranged(M::real_diag(&[1.0, 0.0]));
        let d = restricted_inverse_vec(&fam, &k, &tol()).unwrap();
        assert!(d.sub(&M::real_diag(&[1.0, 0.0])).frobenius_norm() < 1e-12);
    }

    #[test]
    fn restricted_inverse_rejects_non_kframe() {
        // F spans only e1 but K has full range.
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0)]).unwrap();
        let k = RangedOperator::<f64>::identity(2);
        assert!(matches!(
            restricted_inverse_vec(&fam, &k, &tol()),
            Err(Error::NotKFrame(_))
        ));
    }

    #[test]
    fn restricted_inverse_contract_on_seeded_instance() {
        let mut rng = SeededRng::new(41);
        let vs: Vec<_> = (0..7).map(|_| rng.gaussian_vec::<f64>(4, Field::Complex)).collect();
        let fam = VectorFamily::from_vectors(4, vs).unwrap();
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(4, 2, Field::Complex));
        let a = kframe_analyze(&fam, &k, &tol()).unwrap();
        let d = restricted_inverse_vec(&fam, &k, &tol()).unwrap();
        let s = &a.frame_operator;

        // D(S u) = u for u in R(K)
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let coeff = rng.gaussian_vec::<f64>(k.rank, Field::Complex);
            let u = k.range_basis.matvec(&coeff);
            let err = crate::matrix::vec_sub(&d.matvec(&s.matvec(&u)), &u);
            worst = worst.max(vec_norm(&err) / vec_norm(&u).max(1e-300));
        }
        assert!(worst <= 1e-9, "worst D S u - u residual {worst}");

        // D annihilates the complement of S(R(K)).
        let s_range = crate::numerics::orthonormal_range_basis(&s.mul(&k.range_basis), &tol());
        let comp = crate::numerics::complement_basis(&s_range, &tol());
        for j in 0..comp.cols() {
            let y = comp.column(j);
            assert!(vec_norm(&d.matvec(&y)) < 1e-10);
        }

        // Sandwich on f = S u: B⁻¹‖f‖ ≤ ‖D f‖ ≤ A⁻¹ ‖K†‖² ‖f‖.
        for _ in 0..100 {
            let coeff = rng.gaussian_vec::<f64>(k.rank, Field::Complex);
            let f = s.matvec(&k.range_basis.matvec(&coeff));
            let df = vec_norm(&d.matvec(&f));
            let nf = vec_norm(&f);
            assert!(df >= nf / a.upper_bound - 1e-9);
            assert!(df <= nf * k.pinv_norm.powi(2) / a.lower_bound + 1e-9);
        }
    }

    #[test]
    fn canonical_dual_of_parseval_onb_is_itself() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let k = RangedOperator::<f64>::identity(2);
        let g = canonical_kdual_vec(&fam, &k, &tol()).unwrap();
        for (f, gg) in fam.flat().zip(g.flat()) {
            assert!(vec_norm(&crate::matrix::vec_sub(f, gg)) < 1e-12);
        }
        assert!(verify_kdual_vec(&fam, &g, &k).unwrap() < 1e-12);
    }

    #[test]
    fn canonical_dual_with_rank_one_k() {
        // K = diag(1,0), F = {e1, e2}: dual is {e1, 0} by direct evaluation
        // of D = diag(1,0).
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let k = ranged(M::real_diag(&[1.0, 0.0]));
        let g = canonical_kdual_vec(&fam, &k, &tol()).unwrap();
        let got: Vec<_> = g.flat().cloned().collect();
        assert!(vec_norm(&crate::matrix::vec_sub(&got[0], &e(2, 0))) < 1e-12);
        assert!(vec_norm(&got[1]) < 1e-12);
        assert!(verify_kdual_vec(&fam, &g, &k).unwrap() < 1e-12);
    }

    #[test]
    fn canonical_dual_matches_classical_dual_for_ordinary_frames() {
        let mut rng = SeededRng::new(55);
        let vs: Vec<_> = (0..5).map(|_| rng.gaussian_vec::<f64>(3, Field::Complex)).collect();
        let fam = VectorFamily::from_vectors(3, vs).unwrap();
        let k = RangedOperator::<f64>::identity(3);
        let g = canonical_kdual_vec(&fam, &k, &tol()).unwrap();
        let s_inv = pseudo_inverse(&fam.frame_operator(), &tol());
        for (f, gg) in fam.flat().zip(g.flat()) {
            let classical = s_inv.matvec(f);
            assert!(vec_norm(&crate::matrix::vec_sub(&classical, gg)) < 1e-10);
        }
    }

    #[test]
    fn seeded_canonical_dual_residual() {
        let mut rng = SeededRng::new(56);
        for dim in 3..=6 {
            let vs: Vec<_> = (0..dim + 2)
                .map(|_| rng.gaussian_vec::<f64>(dim, Field::Complex))
                .collect();
            let fam = VectorFamily::from_vectors(dim, vs).unwrap();
            let k = ranged(rng.gaussian_matrix_of_rank::<f64>(dim, dim / 2 + 1, Field::Complex));
            let g = canonical_kdual_vec(&fam, &k, &tol()).unwrap();
            let res = verify_kdual_vec(&fam, &g, &k).unwrap();
            assert!(res <= 1e-9, "duality residual {res} at dim {dim}");
        }
    }

    #[test]
    fn zero_dual_family_gives_unit_residual() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let zeros =
            VectorFamily::from_vectors(2, vec![vec![Complex::new(0.0, 0.0); 2]; 2]).unwrap();
        let k = RangedOperator::<f64>::identity(2);
        let res = verify_kdual_vec(&fam, &zeros, &k).unwrap();
        assert!((res - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_k_duality_residual_is_undefined() {
        let fam = VectorFamily::from_vectors(2, vec![e(2, 0)]).unwrap();
        let k = ranged(M::zeros(2, 2));
        assert!(matches!(
            verify_kdual_vec(&fam, &fam, &k),
            Err(Error::UndefinedResidual(_))
        ));
    }

    #[test]
    fn duality_in_both_orders_is_reported_not_asserted() {
        // Duality is not interchangeable for K-frames; both orders are
        // computable and may differ.
        let mut rng = SeededRng::new(57);
        let vs: Vec<_> = (0..5).map(|_| rng.gaussian_vec::<f64>(3, Field::Complex)).collect();
        let fam = VectorFamily::from_vectors(3, vs).unwrap();
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(3, 2, Field::Complex));
        let g = canonical_kdual_vec(&fam, &k, &tol()).unwrap();
        let forward = verify_kdual_vec(&fam, &g, &k).unwrap();
        let reverse = verify_kdual_vec(&g, &fam, &k).unwrap();
        assert!(forward < 1e-9);
        assert!(reverse.is_finite());
    }
}
