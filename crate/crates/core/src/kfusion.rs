//! K-fusion frames: analysis, reconstruction of R(K), the coordinate operator
//! between two fusion sequences, K-duality and the canonical K-dual, the
//! local-frame equivalence, local dual identities, and image families.

use crate::error::{Error, Result};
use crate::factor::{eigh_extremes, spectral_norm};
use crate::kframes::{kframe_analyze, restricted_inverse_vec, KFrameAnalysis};
use crate::matrix::{outer, vec_norm, vec_sub, ColVec, MatrixOperator};
use crate::numerics::{
    douglas_check, optimal_lower_bound, orthonormal_range_basis, projector, RangedOperator,
    Tolerances,
};
use crate::rng::unit_battery;
use crate::scalar::Scalar;
use crate::spaces::{map_subspace, Subspace, VectorFamily, WeightedFamily};

const BATTERY_SEED: u64 = 0x0ba7_7e21;
const BATTERY_COUNT: usize = 200;

/// Everything `fusion_analyze` produces for a weighted family against K.
#[derive(Debug, Clone)]
pub struct FusionAnalysis<T: Scalar> {
    /// Synthesis operator, block columns w_i B_i.
    pub synthesis: MatrixOperator<T>,
    /// S_W = sum w_i² P_{W_i} = T_W T_W*.
    pub frame_operator: MatrixOperator<T>,
    /// Optimal lower K-fusion bound; +inf sentinel when K = 0.
    pub lower_bound: T,
    /// Optimal upper bound, lambda_max(S_W).
    pub upper_bound: T,
    pub is_bessel: bool,
    pub is_kfusion: bool,
    pub vacuous: bool,
    /// D = U (S_W U)†, the realization of S_W⁻¹ π_{S_W(R(K))}. Only a
    /// two-sided inverse of the restriction when `is_kfusion` holds.
    pub restricted_inverse: MatrixOperator<T>,
}

impl<T: Scalar> FusionAnalysis<T> {
    /// ‖S_W⁻¹‖ in the finite-dimensional reading: the spectral norm of D.
    pub fn restricted_inverse_norm(&self) -> T {
        spectral_norm(&self.restricted_inverse)
    }
}

/// Optimal bounds for `A ‖K* f‖² ≤ sum_i w_i² ‖pi_{W_i} f‖² ≤ B ‖f‖²`, the
/// restricted inverse, and the Douglas cross-check of the lower bound
/// criterion against R(K) ⊆ R(T_W).
pub fn fusion_analyze<T: Scalar>(
    family: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<FusionAnalysis<T>> {
    if family.ambient_dim() != k.dim() {
        return Err(Error::Dimension(format!(
            "family dimension {} vs operator dimension {}",
            family.ambient_dim(),
            k.dim()
        )));
    }
    let t_w = family.synthesis();
    let s_w = family.frame_operator();
    let (_, b_opt) = eigh_extremes(&s_w);
    let bound = optimal_lower_bound(&s_w, k, tol);
    let is_kfusion = bound.vacuous || bound.a_opt > T::zero();

    let douglas = douglas_check(&k.op, &t_w, tol)?;
    if douglas.holds != is_kfusion {
        return Err(Error::Diagnostic(format!(
            "lower-bound criterion (A_opt = {:e}) disagrees with the Douglas range test \
             (holds = {}, inclusion residual {:e})",
            bound.a_opt, douglas.holds, douglas.inclusion_residual
        )));
    }

    let d = restricted_inverse_total(&s_w, k, tol);
    Ok(FusionAnalysis {
        synthesis: t_w,
        frame_operator: s_w,
        lower_bound: bound.a_opt,
        upper_bound: b_opt.max(T::zero()),
        is_bessel: b_opt.is_finite(),
        is_kfusion,
        vacuous: bound.vacuous,
        restricted_inverse: d,
    })
}

/// D = U (S U)† without the injectivity gate; total on every input.
fn restricted_inverse_total<T: Scalar>(
    s: &MatrixOperator<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> MatrixOperator<T> {
    let s_r = s.mul(&k.range_basis);
    k.range_basis.mul(&crate::numerics::pseudo_inverse(&s_r, tol))
}

/// One reconstruction of R(K):
/// `K f = sum_i w_i² pi_{R(K)} pi_{W_i} D* K f`.
pub fn reconstruct<T: Scalar>(
    family: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    analysis: &FusionAnalysis<T>,
    f: &[ColVec<T>],
) -> Result<Vec<(ColVec<T>, T)>> {
    if !analysis.is_kfusion {
        return Err(Error::Precondition(
            "reconstruction needs a K-fusion frame".into(),
        ));
    }
    let pi = k.range_projector();
    let d_adj_k = analysis.restricted_inverse.adjoint().mul(&k.op);
    let mut op = MatrixOperator::zeros(k.dim(), k.dim());
    for (sub, w) in family.iter() {
        let term = pi.mul(&sub.projector()).mul(&d_adj_k).scale_re(*w * *w);
        op = op.add(&term);
    }
    let eps = T::epsilon();
    Ok(f.iter()
        .map(|v| {
            let kf = k.op.matvec(v);
            let hat = op.matvec(v);
            let res = vec_norm(&vec_sub(&hat, &kf)) / vec_norm(&kf).max(eps);
            (hat, res)
        })
        .collect())
}

/// The coordinate operator psi mapping V-coordinates to W-coordinates,
/// block i = B_{W_i}* D* K B_{V_i}.
#[derive(Debug, Clone)]
pub struct PsiOperator<T: Scalar> {
    pub blocks: Vec<MatrixOperator<T>>,
    /// Block-diagonal assembly, (sum dim W_i) x (sum dim V_i).
    pub assembled: MatrixOperator<T>,
}

pub fn psi_operator<T: Scalar>(
    w: &WeightedFamily<T>,
    v: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    analysis_w: &FusionAnalysis<T>,
) -> Result<PsiOperator<T>> {
    if w.len() != v.len() {
        return Err(Error::Dimension(format!(
            "family lengths differ: {} vs {}",
            w.len(),
            v.len()
        )));
    }
    let d_adj_k = analysis_w.restricted_inverse.adjoint().mul(&k.op);
    let blocks: Vec<MatrixOperator<T>> = (0..w.len())
        .map(|i| {
            w.subspace(i)
                .basis()
                .adjoint()
                .mul(&d_adj_k)
                .mul(v.subspace(i).basis())
        })
        .collect();
    let total_w: usize = w.total_coord_dim();
    let total_v: usize = v.total_coord_dim();
    let mut assembled = MatrixOperator::zeros(total_w, total_v);
    let mut row = 0;
    let mut col = 0;
    for b in &blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                assembled[(row + i, col + j)] = b[(i, j)];
            }
        }
        row += b.rows();
        col += b.cols();
    }
    Ok(PsiOperator { blocks, assembled })
}

/// Both forms of the K-duality residual: the definition as a sum and the
/// factorization through the synthesis/analysis operators. They are the same
/// operator, so the two residuals agree to rounding.
#[derive(Debug, Clone, Copy)]
pub struct KDualFusionReport<T: Scalar> {
    pub residual_sum: T,
    pub residual_factored: T,
}

pub fn verify_kdual_fusion<T: Scalar>(
    w: &WeightedFamily<T>,
    v: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    analysis_w: &FusionAnalysis<T>,
) -> Result<KDualFusionReport<T>> {
    if w.len() != v.len() {
        return Err(Error::Dimension(format!(
            "family lengths differ: {} vs {}",
            w.len(),
            v.len()
        )));
    }
    let k_norm = k.op.frobenius_norm();
    if k_norm == T::zero() {
        return Err(Error::UndefinedResidual(
            "K = 0 admits no relative duality residual".into(),
        ));
    }
    let n = k.dim();
    let pi = k.range_projector();
    let d_adj_k = analysis_w.restricted_inverse.adjoint().mul(&k.op);

    let mut sum = MatrixOperator::zeros(n, n);
    for i in 0..w.len() {
        let coeff = w.weight(i) * v.weight(i);
        let term = pi
            .mul(&w.subspace(i).projector())
            .mul(&d_adj_k)
            .mul(&v.subspace(i).projector())
            .scale_re(coeff);
        sum = sum.add(&term);
    }
    let residual_sum = k.op.sub(&sum).frobenius_norm() / k_norm;

    let psi = psi_operator(w, v, k, analysis_w)?;
    let factored = pi
        .mul(&w.synthesis())
        .mul(&psi.assembled)
        .mul(&v.synthesis().adjoint());
    let residual_factored = k.op.sub(&factored).frobenius_norm() / k_norm;

    Ok(KDualFusionReport {
        residual_sum,
        residual_factored,
    })
}

/// Canonical K-dual {(K* S_W⁻¹ pi_{S_W(R(K))} W_i, w_i)}. Requires every
/// member to lie inside S_W(R(K)).
pub fn canonical_kdual_fusion<T: Scalar>(
    w: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    analysis_w: &FusionAnalysis<T>,
    tol: &Tolerances<T>,
) -> Result<WeightedFamily<T>> {
    if !analysis_w.is_kfusion {
        return Err(Error::Precondition(
            "canonical K-dual needs a K-fusion frame".into(),
        ));
    }
    let s_range = orthonormal_range_basis(
        &analysis_w.frame_operator.mul(&k.range_basis),
        tol,
    );
    for (i, (sub, _)) in w.iter().enumerate() {
        let resid = crate::numerics::membership_residual(sub.basis(), &s_range);
        if resid > tol.residual_rel {
            return Err(Error::Precondition(format!(
                "member {i} is not inside S_W(R(K)): membership residual {resid:e}"
            )));
        }
    }
    let kd = k.op.adjoint().mul(&analysis_w.restricted_inverse);
    let members: Vec<(Subspace<T>, T)> = w
        .iter()
        .map(|(sub, weight)| (map_subspace(&kd, sub, tol), *weight))
        .collect();
    WeightedFamily::new(members)
}

/// Lower K*-fusion bound certified for any K-dual V of W, with the sampled
/// verification of `sum_i v_i² ‖pi_{V_i} f‖² ≥ predicted_A ‖K f‖²`.
#[derive(Debug, Clone, Copy)]
pub struct KStarLowerBound<T: Scalar> {
    pub predicted_a: T,
    pub holds: bool,
    /// Most negative sampled slack of the inequality.
    pub min_slack: T,
}

pub fn kstar_lower_bound_check<T: Scalar>(
    v: &WeightedFamily<T>,
    w: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    analysis_w: &FusionAnalysis<T>,
    tol: &Tolerances<T>,
) -> Result<KStarLowerBound<T>> {
    let dual = verify_kdual_fusion(w, v, k, analysis_w)?;
    if dual.residual_sum > tol.residual_rel {
        return Err(Error::Precondition(format!(
            "V is not a K-dual of W: duality residual {:e}",
            dual.residual_sum
        )));
    }
    let d_adj_k = analysis_w.restricted_inverse.adjoint().mul(&k.op);
    let norm = spectral_norm(&d_adj_k);
    let denom = norm * norm * analysis_w.upper_bound;
    if denom <= T::zero() {
        return Err(Error::Precondition(
            "degenerate bound: ‖D* K‖² B_W vanishes".into(),
        ));
    }
    let predicted_a = T::one() / denom;

    let s_v = v.frame_operator();
    let ksk = k.op.adjoint().mul(&k.op).hermitian_part();
    let battery = unit_battery(BATTERY_SEED, k.dim(), BATTERY_COUNT, &[&s_v, &ksk]);
    let mut min_slack = T::infinity();
    for f in &battery {
        let lhs: T = v
            .iter()
            .map(|(sub, weight)| {
                let p = sub.projector().matvec(f);
                *weight * *weight * vec_norm(&p).powi(2)
            })
            .fold(T::zero(), |a, b| a + b);
        let kf = vec_norm(&k.op.matvec(f)).powi(2);
        let slack = lhs - predicted_a * kf;
        if slack < min_slack {
            min_slack = slack;
        }
    }
    Ok(KStarLowerBound {
        predicted_a,
        holds: min_slack >= -T::of(1e-9),
        min_slack,
    })
}

/// Local-to-global equivalence: joining weighted local frames of the members
/// yields a K-frame exactly when the family is a K-fusion frame.
#[derive(Debug, Clone)]
pub struct LocalToGlobal<T: Scalar> {
    pub joined: VectorFamily<T>,
    pub equiv: bool,
    pub frame: KFrameAnalysis<T>,
    pub fusion: FusionAnalysis<T>,
    /// Optimal local frame bounds (A_i, B_i) per nondegenerate member.
    pub local_bounds: Vec<(T, T)>,
}

pub fn local_to_global<T: Scalar>(
    w: &WeightedFamily<T>,
    locals: &VectorFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<LocalToGlobal<T>> {
    let local_bounds = check_local_frames(w, locals, tol)?;

    // Uniform local-bound condition: finitely many nondegenerate locals
    // always satisfy it, but it is part of the hypothesis and checked anyway.
    let inf_a = local_bounds
        .iter()
        .map(|&(a, _)| a)
        .fold(T::infinity(), |x, y| x.min(y));
    let sup_b = local_bounds
        .iter()
        .map(|&(_, b)| b)
        .fold(T::zero(), |x, y| x.max(y));
    if !local_bounds.is_empty() && !(inf_a > T::zero() && sup_b.is_finite()) {
        return Err(Error::Precondition(format!(
            "local bounds violate 0 < inf A_i ≤ sup B_i < ∞: inf A = {inf_a}, sup B = {sup_b}"
        )));
    }

    let joined_groups: Vec<Vec<ColVec<T>>> = (0..w.len())
        .map(|i| {
            let weight = w.weight(i);
            locals
                .group(i)
                .iter()
                .map(|f| crate::matrix::vec_scale(crate::scalar::c_re(weight), f))
                .collect()
        })
        .collect();
    let joined = VectorFamily::from_groups(w.ambient_dim(), joined_groups)?;

    let frame = kframe_analyze(&joined, k, tol)?;
    let fusion = fusion_analyze(w, k, tol)?;
    let equiv = frame.is_kframe == fusion.is_kfusion;
    Ok(LocalToGlobal {
        joined,
        equiv,
        frame,
        fusion,
        local_bounds,
    })
}

/// Validate that group i is a frame for W_i (contained and spanning) and
/// return the optimal local bounds.
fn check_local_frames<T: Scalar>(
    w: &WeightedFamily<T>,
    locals: &VectorFamily<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<(T, T)>> {
    if locals.group_count() != w.len() {
        return Err(Error::Dimension(format!(
            "{} local groups for {} subspaces",
            locals.group_count(),
            w.len()
        )));
    }
    if locals.ambient_dim() != w.ambient_dim() {
        return Err(Error::Dimension("ambient dimensions differ".into()));
    }
    let mut bounds = Vec::new();
    for i in 0..w.len() {
        let sub = w.subspace(i);
        let group = locals.group(i);
        let d = sub.dim();
        if d == 0 {
            for f in group {
                if vec_norm(f) > tol.residual_rel {
                    return Err(Error::Precondition(format!(
                        "group {i} has a nonzero vector for a zero-dimensional subspace"
                    )));
                }
            }
            continue;
        }
        if group.is_empty() {
            return Err(Error::Precondition(format!(
                "group {i} is empty but W_{i} has dimension {d}"
            )));
        }
        // Containment f_ij ∈ W_i.
        let basis = sub.basis();
        let p = sub.projector();
        for (j, f) in group.iter().enumerate() {
            let out = vec_norm(&vec_sub(f, &p.matvec(f)));
            if out > tol.residual_rel * (T::one() + vec_norm(f)) {
                return Err(Error::Precondition(format!(
                    "vector {j} of group {i} is not inside its subspace (residual {out:e})"
                )));
            }
        }
        // Local frame operator in coordinates.
        let mut s_local = MatrixOperator::zeros(d, d);
        for f in group {
            let coords = basis.adjoint_matvec(f);
            s_local = s_local.add(&outer(&coords, &coords));
        }
        let (a_i, b_i) = eigh_extremes(&s_local.hermitian_part());
        if a_i <= tol.rank_rel * b_i.max(T::one()) {
            return Err(Error::Precondition(format!(
                "group {i} does not span its subspace (lambda_min = {a_i:e})"
            )));
        }
        bounds.push((a_i, b_i));
    }
    Ok(bounds)
}

/// Residuals of the two local-dual reconstruction identities plus, for
/// Parseval locals, the distance between the fusion-level and global
/// canonical duals (they coincide because S_F = S_W).
#[derive(Debug, Clone, Copy)]
pub struct LocalDualReport<T: Scalar> {
    pub res1: T,
    pub res2: T,
    pub coincide: Option<T>,
}

pub fn local_dual_identities<T: Scalar>(
    w: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    locals: &VectorFamily<T>,
    local_duals: &VectorFamily<T>,
    tol: &Tolerances<T>,
) -> Result<LocalDualReport<T>> {
    check_local_frames(w, locals, tol)?;
    if local_duals.group_count() != locals.group_count() {
        return Err(Error::Dimension("group counts differ".into()));
    }
    let k_norm = k.op.frobenius_norm();
    if k_norm == T::zero() {
        return Err(Error::UndefinedResidual(
            "K = 0 admits no relative duality residual".into(),
        ));
    }

    // The duals must reproduce pi_{W_i}: sum_j f~_ij f_ij* = P_{W_i}.
    let n = w.ambient_dim();
    let mut parseval = true;
    for i in 0..w.len() {
        let group = locals.group(i);
        let duals = local_duals.group(i);
        if group.len() != duals.len() {
            return Err(Error::Dimension(format!(
                "group {i}: {} locals vs {} duals",
                group.len(),
                duals.len()
            )));
        }
        let mut mix = MatrixOperator::zeros(n, n);
        for (f, g) in group.iter().zip(duals) {
            mix = mix.add(&outer(g, f));
        }
        let p = w.subspace(i).projector();
        let resid = mix.sub(&p).frobenius_norm();
        if resid > tol.residual_rel * T::of(10.0) {
            return Err(Error::Precondition(format!(
                "group {i} duals are not the canonical local duals (residual {resid:e})"
            )));
        }
        for (f, g) in group.iter().zip(duals) {
            if vec_norm(&vec_sub(f, g)) > tol.residual_rel {
                parseval = false;
            }
        }
    }

    let analysis = fusion_analyze(w, k, tol)?;
    if !analysis.is_kfusion {
        return Err(Error::Precondition(
            "local dual identities need a K-fusion frame".into(),
        ));
    }
    let d = &analysis.restricted_inverse;
    let pi = k.range_projector();
    let k_adj = k.op.adjoint();

    // res1: K = sum_ij pi (D w_i f~_ij) (K* w_i f_ij)*
    // res2: K = sum_ij pi (w_i f_ij) (K* D w_i f~_ij)*
    let mut sum1 = MatrixOperator::zeros(n, n);
    let mut sum2 = MatrixOperator::zeros(n, n);
    for i in 0..w.len() {
        let weight = w.weight(i);
        let w2 = weight * weight;
        for (f, g) in locals.group(i).iter().zip(local_duals.group(i)) {
            let df = d.matvec(g);
            let kf = k_adj.matvec(f);
            sum1 = sum1.add(&outer(&pi.matvec(&df), &kf).scale_re(w2));
            let kdg = k_adj.matvec(&d.matvec(g));
            sum2 = sum2.add(&outer(&pi.matvec(f), &kdg).scale_re(w2));
        }
    }
    let res1 = k.op.sub(&sum1).frobenius_norm() / k_norm;
    let res2 = k.op.sub(&sum2).frobenius_norm() / k_norm;

    // With Parseval locals the joined family has S_F = S_W, so the global
    // canonical K-dual built from D_F coincides with K* D applied locally.
    let coincide = if parseval {
        let joined_groups: Vec<Vec<ColVec<T>>> = (0..w.len())
            .map(|i| {
                let weight = w.weight(i);
                locals
                    .group(i)
                    .iter()
                    .map(|f| crate::matrix::vec_scale(crate::scalar::c_re(weight), f))
                    .collect()
            })
            .collect();
        let joined = VectorFamily::from_groups(n, joined_groups)?;
        let d_f = restricted_inverse_vec(&joined, k, tol)?;
        let mut worst = T::zero();
        for f in joined.flat() {
            let a = k_adj.matvec(&d.matvec(f));
            let b = k_adj.matvec(&d_f.matvec(f));
            worst = worst.max(vec_norm(&vec_sub(&a, &b)));
        }
        Some(worst)
    } else {
        None
    };

    Ok(LocalDualReport {
        res1,
        res2,
        coincide,
    })
}

/// Which image-family theorem to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// {(K W_i, w_i)} is a K-fusion frame when W is a fusion frame for a
    /// space containing the members and W_i ⊆ R(K†).
    Kw,
    /// {(T W_i, w_i)} is a TK-fusion frame when W is a K-fusion frame and
    /// W_i ⊆ R((TK)†).
    Tk,
}

/// The mapped family plus its analysis against the effective operator (K for
/// `Kw`, TK for `Tk`).
#[derive(Debug)]
pub struct MappedFamily<T: Scalar> {
    pub mapped: WeightedFamily<T>,
    pub check: FusionAnalysis<T>,
    pub effective: RangedOperator<T>,
}

pub fn map_family<T: Scalar>(
    t_op: Option<&MatrixOperator<T>>,
    w: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    mode: MapMode,
    tol: &Tolerances<T>,
) -> Result<MappedFamily<T>> {
    let n = w.ambient_dim();
    match mode {
        MapMode::Kw => {
            // Membership W_i ⊆ R(K†) = R(K*).
            let coimage = orthonormal_range_basis(&k.op.adjoint(), tol);
            for (i, (sub, _)) in w.iter().enumerate() {
                let r = crate::numerics::membership_residual(sub.basis(), &coimage);
                if r > tol.residual_rel {
                    return Err(Error::Precondition(format!(
                        "member {i} is not inside R(K†): membership residual {r:e}"
                    )));
                }
            }
            // W must be a fusion frame for the space its members live in. In
            // finite dimensions that space is R(K*): the lower fusion bound is
            // tested against the projector onto it.
            let pi_coimage = RangedOperator::new(projector(&coimage), tol)?;
            let bound = optimal_lower_bound(&w.frame_operator(), &pi_coimage, tol);
            if !(bound.vacuous || bound.a_opt > T::zero()) {
                return Err(Error::Precondition(
                    "W is not a fusion frame for R(K†)".into(),
                ));
            }
            let members: Vec<(Subspace<T>, T)> = w
                .iter()
                .map(|(sub, weight)| (map_subspace(&k.op, sub, tol), *weight))
                .collect();
            let mapped = WeightedFamily::new(members)?;
            let check = fusion_analyze(&mapped, k, tol)?;
            Ok(MappedFamily {
                mapped,
                check,
                effective: k.clone(),
            })
        }
        MapMode::Tk => {
            let t = t_op.ok_or_else(|| {
                Error::Validation("TK mode needs the operator T".into())
            })?;
            if t.rows() != n || t.cols() != n {
                return Err(Error::Dimension("T must act on the ambient space".into()));
            }
            let tk = RangedOperator::new(t.mul(&k.op), tol)?;
            let coimage = orthonormal_range_basis(&tk.op.adjoint(), tol);
            for (i, (sub, _)) in w.iter().enumerate() {
                let r = crate::numerics::membership_residual(sub.basis(), &coimage);
                if r > tol.residual_rel {
                    return Err(Error::Precondition(format!(
                        "member {i} is not inside R((TK)†): membership residual {r:e}"
                    )));
                }
            }
            let analysis = fusion_analyze(w, k, tol)?;
            if !analysis.is_kfusion {
                return Err(Error::Precondition("W is not a K-fusion frame".into()));
            }
            let members: Vec<(Subspace<T>, T)> = w
                .iter()
                .map(|(sub, weight)| (map_subspace(t, sub, tol), *weight))
                .collect();
            let mapped = WeightedFamily::new(members)?;
            let check = fusion_analyze(&mapped, &tk, tol)?;
            Ok(MappedFamily {
                mapped,
                check,
                effective: tk,
            })
        }
    }
}

/// ‖pi_V T* - pi_V T* pi_{TV}‖_F; zero for every closed subspace V and
/// bounded T.
pub fn lemma_v_residual<T: Scalar>(
    v: &Subspace<T>,
    t_op: &MatrixOperator<T>,
    tol: &Tolerances<T>,
) -> T {
    let p_v = v.projector();
    let tv = map_subspace(t_op, v, tol);
    let p_tv = tv.projector();
    let lhs = p_v.mul(&t_op.adjoint());
    lhs.sub(&lhs.mul(&p_tv)).frobenius_norm()
}
