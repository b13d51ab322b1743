//! K-fusion frame multipliers: construction, the synthesis/analysis
//! factorization, ordinary vector multipliers, K-sided inverses, the
//! invertibility criterion on R(K), and the composition identities.

use crate::error::{Error, Result};
use crate::factor::{eigh_extremes, spectral_norm, svd};
use crate::kfusion::{fusion_analyze, psi_operator, FusionAnalysis};
use crate::matrix::{outer, ColVec, MatrixOperator};
use crate::numerics::{
    douglas_check, orthonormal_range_basis, pseudo_inverse, RangedOperator, Tolerances,
};
use crate::rng::unit_battery;
use crate::scalar::{c_re, Scalar, C};
use crate::spaces::{VectorFamily, WeightedFamily};

const BATTERY_SEED: u64 = 0x5ca1_ab1e;
const BATTERY_COUNT: usize = 200;

/// Symbol and operand families of a K-fusion frame multiplier.
#[derive(Debug, Clone)]
pub struct MultiplierSpec<'a, T: Scalar> {
    pub symbol: Vec<C<T>>,
    pub w: &'a WeightedFamily<T>,
    pub v: &'a WeightedFamily<T>,
    pub k: &'a RangedOperator<T>,
}

impl<'a, T: Scalar> MultiplierSpec<'a, T> {
    pub fn new(
        symbol: Vec<C<T>>,
        w: &'a WeightedFamily<T>,
        v: &'a WeightedFamily<T>,
        k: &'a RangedOperator<T>,
    ) -> Result<Self> {
        if symbol.len() != w.len() || w.len() != v.len() {
            return Err(Error::Dimension(format!(
                "symbol/family lengths differ: {} / {} / {}",
                symbol.len(),
                w.len(),
                v.len()
            )));
        }
        if symbol.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(Error::Validation("non-finite symbol entry".into()));
        }
        Ok(Self { symbol, w, v, k })
    }

    pub fn unit_symbol(
        w: &'a WeightedFamily<T>,
        v: &'a WeightedFamily<T>,
        k: &'a RangedOperator<T>,
    ) -> Result<Self> {
        Self::new(vec![c_re(T::one()); w.len()], w, v, k)
    }

    pub fn sup_symbol(&self) -> T {
        self.symbol
            .iter()
            .map(|m| m.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn is_unit(&self) -> bool {
        self.symbol
            .iter()
            .all(|m| (*m - c_re(T::one())).norm() == T::zero())
    }
}

/// A built multiplier with its measured spectral norm and the certified
/// upper bound sup|m| ‖S_W⁻¹‖ ‖K‖ sqrt(B_W B_V).
#[derive(Debug, Clone)]
pub struct MultiplierMatrix<T: Scalar> {
    pub matrix: MatrixOperator<T>,
    pub norm: T,
    pub norm_bound: T,
    /// norm_bound - norm; reported, never asserted small.
    pub slack: T,
}

/// M = sum_i m_i w_i v_i pi_{W_i} D* K pi_{V_i}.
pub fn build_multiplier<T: Scalar>(
    spec: &MultiplierSpec<'_, T>,
    analysis_w: &FusionAnalysis<T>,
) -> Result<MultiplierMatrix<T>> {
    if !analysis_w.is_kfusion {
        return Err(Error::Precondition(
            "multiplier needs W to be a K-fusion frame".into(),
        ));
    }
    let n = spec.k.dim();
    let d_adj_k = analysis_w.restricted_inverse.adjoint().mul(&spec.k.op);
    let mut m = MatrixOperator::zeros(n, n);
    for i in 0..spec.w.len() {
        let coeff = spec.symbol[i].scale(spec.w.weight(i) * spec.v.weight(i));
        let term = spec
            .w
            .subspace(i)
            .projector()
            .mul(&d_adj_k)
            .mul(&spec.v.subspace(i).projector())
            .scale(coeff);
        m = m.add(&term);
    }
    let norm = spectral_norm(&m);
    let (_, b_v) = eigh_extremes(&spec.v.frame_operator());
    let norm_bound = spec.sup_symbol()
        * analysis_w.restricted_inverse_norm()
        * spectral_norm(&spec.k.op)
        * (analysis_w.upper_bound * b_v.max(T::zero())).sqrt();
    if norm > norm_bound + T::of(1e-9) * (T::one() + norm_bound) {
        return Err(Error::Diagnostic(format!(
            "multiplier norm {norm:e} exceeds its certified bound {norm_bound:e}"
        )));
    }
    Ok(MultiplierMatrix {
        matrix: m,
        norm,
        norm_bound,
        slack: norm_bound - norm,
    })
}

/// Residual of M_{1,W,V} = T_W psi T_V*; the two sides are the same operator
/// assembled along different routes.
pub fn factorization_check<T: Scalar>(
    spec: &MultiplierSpec<'_, T>,
    analysis_w: &FusionAnalysis<T>,
) -> Result<T> {
    if !spec.is_unit() {
        return Err(Error::Validation(
            "factorization check is stated for the unit symbol".into(),
        ));
    }
    let m = build_multiplier(spec, analysis_w)?;
    let psi = psi_operator(spec.w, spec.v, spec.k, analysis_w)?;
    let factored = spec
        .w
        .synthesis()
        .mul(&psi.assembled)
        .mul(&spec.v.synthesis().adjoint());
    let denom = m.matrix.frobenius_norm().max(T::epsilon());
    Ok(m.matrix.sub(&factored).frobenius_norm() / denom)
}

/// Ordinary vector multiplier M f = sum_i m_i ⟨f, psi_i⟩ phi_i with the
/// Bessel-bound certificate sqrt(B_Phi B_Psi) ‖m‖_inf.
pub fn ordinary_multiplier<T: Scalar>(
    symbol: &[C<T>],
    phi: &VectorFamily<T>,
    psi: &VectorFamily<T>,
) -> Result<MultiplierMatrix<T>> {
    if symbol.len() != phi.len() || phi.len() != psi.len() {
        return Err(Error::Dimension(format!(
            "symbol/family lengths differ: {} / {} / {}",
            symbol.len(),
            phi.len(),
            psi.len()
        )));
    }
    if phi.ambient_dim() != psi.ambient_dim() {
        return Err(Error::Dimension("ambient dimensions differ".into()));
    }
    let n = phi.ambient_dim();
    let mut m = MatrixOperator::zeros(n, n);
    for ((f, g), c) in phi.flat().zip(psi.flat()).zip(symbol) {
        m = m.add(&outer(f, g).scale(*c));
    }
    let norm = spectral_norm(&m);
    let (_, b_phi) = eigh_extremes(&phi.frame_operator());
    let (_, b_psi) = eigh_extremes(&psi.frame_operator());
    let sup = symbol
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), |a, b| a.max(b));
    let norm_bound = sup * (b_phi.max(T::zero()) * b_psi.max(T::zero())).sqrt();
    if norm > norm_bound + T::of(1e-9) * (T::one() + norm_bound) {
        return Err(Error::Diagnostic(format!(
            "ordinary multiplier norm {norm:e} exceeds its bound {norm_bound:e}"
        )));
    }
    Ok(MultiplierMatrix {
        matrix: m,
        norm,
        norm_bound,
        slack: norm_bound - norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseSide {
    Left,
    Right,
}

/// Existence and construction of a K-sided inverse of M: a right inverse R
/// with M R = K exists iff R(K) ⊆ R(M); a left inverse L with L M = K exists
/// iff R(K*) ⊆ R(M*).
#[derive(Debug, Clone)]
pub struct KSideInverse<T: Scalar> {
    pub exists: bool,
    pub inverse: Option<MatrixOperator<T>>,
    pub residual: Option<T>,
}

pub fn k_side_inverse<T: Scalar>(
    m: &MatrixOperator<T>,
    k: &RangedOperator<T>,
    side: InverseSide,
    tol: &Tolerances<T>,
) -> Result<KSideInverse<T>> {
    if !m.is_square() || m.rows() != k.dim() {
        return Err(Error::Dimension("multiplier must act on the ambient space".into()));
    }
    let k_norm = k.op.frobenius_norm();
    if k_norm == T::zero() {
        return Err(Error::UndefinedResidual(
            "K = 0 admits no relative inverse residual".into(),
        ));
    }
    let (douglas, candidate, defect) = match side {
        InverseSide::Right => {
            let d = douglas_check(&k.op, m, tol)?;
            let x = pseudo_inverse(m, tol).mul(&k.op);
            let defect = m.mul(&x).sub(&k.op).frobenius_norm() / k_norm;
            (d, x, defect)
        }
        InverseSide::Left => {
            let d = douglas_check(&k.op.adjoint(), &m.adjoint(), tol)?;
            let x = k.op.mul(&pseudo_inverse(m, tol));
            let defect = x.mul(m).sub(&k.op).frobenius_norm() / k_norm;
            (d, x, defect)
        }
    };
    if douglas.holds != (defect <= tol.residual_rel) {
        return Err(Error::Diagnostic(format!(
            "inverse existence flags disagree: douglas {} vs defect {defect:e}",
            douglas.holds
        )));
    }
    Ok(if douglas.holds {
        KSideInverse {
            exists: true,
            inverse: Some(candidate),
            residual: Some(defect),
        }
    } else {
        KSideInverse {
            exists: false,
            inverse: None,
            residual: None,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBoundCase {
    /// M_{m,W,V} = K.
    MEqualsK,
    /// L M_{m,W,V} = K for a supplied K-left inverse L.
    LeftInverse,
}

/// Lower K*-fusion bound for V certified by a multiplier identity, verified
/// on the standard battery.
#[derive(Debug, Clone, Copy)]
pub struct DualLowerBound<T: Scalar> {
    pub predicted_a: T,
    pub holds: bool,
    pub min_slack: T,
}

pub fn dual_lower_bound_from_multiplier<T: Scalar>(
    spec: &MultiplierSpec<'_, T>,
    analysis_w: &FusionAnalysis<T>,
    case: LowerBoundCase,
    left_inverse: Option<&MatrixOperator<T>>,
    tol: &Tolerances<T>,
) -> Result<DualLowerBound<T>> {
    let k = spec.k;
    let k_norm = k.op.frobenius_norm();
    if k_norm == T::zero() {
        return Err(Error::UndefinedResidual("K = 0".into()));
    }
    let m = build_multiplier(spec, analysis_w)?;
    let sup = spec.sup_symbol();
    let d = &analysis_w.restricted_inverse;
    let sqrt_bw = analysis_w.upper_bound.sqrt();

    let predicted_a = match case {
        LowerBoundCase::MEqualsK => {
            let defect = m.matrix.sub(&k.op).frobenius_norm() / k_norm;
            if defect > tol.residual_rel {
                return Err(Error::Precondition(format!(
                    "M_{{m,W,V}} differs from K by {defect:e}"
                )));
            }
            let factor = sup * spectral_norm(&d.adjoint().mul(&k.op)) * sqrt_bw;
            T::one() / (factor * factor)
        }
        LowerBoundCase::LeftInverse => {
            let l = left_inverse.ok_or_else(|| {
                Error::Validation("left-inverse case needs the operator L".into())
            })?;
            let defect = l.mul(&m.matrix).sub(&k.op).frobenius_norm() / k_norm;
            if defect > tol.residual_rel {
                return Err(Error::Precondition(format!(
                    "L is not a K-left inverse of M: residual {defect:e}"
                )));
            }
            let factor =
                sup * spectral_norm(l) * spectral_norm(d) * spectral_norm(&k.op) * sqrt_bw;
            T::one() / (factor * factor)
        }
    };

    let s_v = spec.v.frame_operator();
    let ksk = k.op.adjoint().mul(&k.op).hermitian_part();
    let battery = unit_battery(BATTERY_SEED, k.dim(), BATTERY_COUNT, &[&s_v, &ksk]);
    let mut min_slack = T::infinity();
    for f in &battery {
        let lhs: T = spec
            .v
            .iter()
            .map(|(sub, weight)| {
                let p = sub.projector().matvec(f);
                *weight * *weight * crate::matrix::vec_norm(&p).powi(2)
            })
            .fold(T::zero(), |a, b| a + b);
        let kf = crate::matrix::vec_norm(&k.op.matvec(f)).powi(2);
        let slack = lhs - predicted_a * kf;
        if slack < min_slack {
            min_slack = slack;
        }
    }
    Ok(DualLowerBound {
        predicted_a,
        holds: min_slack >= -T::of(1e-9),
        min_slack,
    })
}

/// All measured quantities of the invertibility criterion for M_{1,V,W} on
/// R(K).
#[derive(Debug, Clone)]
pub struct InvertibilityReport<T: Scalar> {
    /// sum_i ‖pi_{R(K)} D_V* K pi_{W_i} - pi_{V_i}‖², spectral norms.
    pub lhs: T,
    /// A_V² / (B_V ‖K†‖⁴).
    pub rhs: T,
    pub criterion_holds: bool,
    /// Same sum without the leading projector, reported for comparison.
    pub lhs_unprojected: T,
    /// Singular values of the restriction of M to R(K) -> S_V(R(K)).
    pub sigma_min_restricted: T,
    pub sigma_max_restricted: T,
    /// sigma_min > n eps sigma_max: basis-independent invertibility call.
    pub invertible_on_range: bool,
    /// ‖I - pi M D_V‖ on S_V(R(K)): the Neumann contraction factor.
    pub neumann: T,
    /// ‖(I - pi_{S_V(R(K))}) M U‖: how far M leaks out of S_V(R(K)).
    pub leakage: T,
    pub multiplier: MatrixOperator<T>,
}

pub fn invertibility_check<T: Scalar>(
    v: &WeightedFamily<T>,
    w: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<InvertibilityReport<T>> {
    if !v.all_unit_weights() || !w.all_unit_weights() {
        return Err(Error::Precondition(
            "the invertibility criterion assumes unit weights in both families".into(),
        ));
    }
    if v.len() != w.len() {
        return Err(Error::Dimension("family lengths differ".into()));
    }
    let analysis_v = fusion_analyze(v, k, tol)?;
    let analysis_w = fusion_analyze(w, k, tol)?;
    if !analysis_v.is_kfusion || !analysis_w.is_kfusion {
        return Err(Error::Precondition(
            "both families must be K-fusion frames".into(),
        ));
    }
    if analysis_v.vacuous {
        return Err(Error::Precondition(
            "K = 0 makes invertibility on R(K) vacuous".into(),
        ));
    }

    let d_v = &analysis_v.restricted_inverse;
    let d_adj_k = d_v.adjoint().mul(&k.op);
    let pi = k.range_projector();
    let mut lhs = T::zero();
    let mut lhs_unprojected = T::zero();
    for i in 0..v.len() {
        let p_w = w.subspace(i).projector();
        let p_v = v.subspace(i).projector();
        let term = pi.mul(&d_adj_k).mul(&p_w).sub(&p_v);
        let nrm = spectral_norm(&term);
        lhs += nrm * nrm;
        let term_u = d_adj_k.mul(&p_w).sub(&p_v);
        let nrm_u = spectral_norm(&term_u);
        lhs_unprojected += nrm_u * nrm_u;
    }
    let a_v = analysis_v.lower_bound;
    let b_v = analysis_v.upper_bound;
    let rhs = a_v * a_v / (b_v * k.pinv_norm.powi(4));
    let criterion_holds = lhs < rhs;

    // M_{1,V,W}: the first slot is V.
    let spec = MultiplierSpec::unit_symbol(v, w, k)?;
    let m = build_multiplier(&spec, &analysis_v)?.matrix;

    // Restrict M from R(K) to S_V(R(K)).
    let u = &k.range_basis;
    let c = orthonormal_range_basis(&analysis_v.frame_operator.mul(u), tol);
    let m_hat = c.adjoint().mul(&m).mul(u);
    let f = svd(&m_hat);
    let sigma_max = f.sigma_max();
    let sigma_min = f.sigma.last().copied().unwrap_or_else(T::zero);
    let n_eps = T::of(k.dim() as f64) * T::epsilon();
    let invertible_on_range = sigma_min > n_eps * sigma_max;

    let ic = MatrixOperator::identity(c.cols());
    let neumann = spectral_norm(&ic.sub(&c.adjoint().mul(&m).mul(d_v).mul(&c)));
    let pc = c.mul(&c.adjoint());
    let leak = MatrixOperator::identity(k.dim()).sub(&pc).mul(&m).mul(u);
    let leakage = spectral_norm(&leak);

    Ok(InvertibilityReport {
        lhs,
        rhs,
        criterion_holds,
        lhs_unprojected,
        sigma_min_restricted: sigma_min,
        sigma_max_restricted: sigma_max,
        invertible_on_range,
        neumann,
        leakage,
        multiplier: m,
    })
}

fn check_unit_weights<T: Scalar>(name: &str, fam: &WeightedFamily<T>) -> Result<()> {
    if !fam.all_unit_weights() {
        return Err(Error::Precondition(format!(
            "family {name} must have unit weights"
        )));
    }
    Ok(())
}

/// Largest spectral norm of a cross projector product pi_{A_i} pi_{B_j},
/// i != j. Zero exactly for block-orthogonal constructions.
pub fn biorthogonality_defect<T: Scalar>(
    a: &WeightedFamily<T>,
    b: &WeightedFamily<T>,
) -> T {
    let mut worst = T::zero();
    for i in 0..a.len() {
        for j in 0..b.len() {
            if i == j {
                continue;
            }
            let prod = a.subspace(i).projector().mul(&b.subspace(j).projector());
            worst = worst.max(spectral_norm(&prod));
        }
    }
    worst
}

/// Composition identity: M_{1,W,V} M_{1,Z,X} equals the ordinary multiplier
/// with Phi_{ij} = pi_{W_i} D_W* K pi_{V_i} pi_{Z_i} e_j and
/// Psi_{ij} = pi_{X_i} L* D_Z e_j over the standard basis {e_j}.
#[derive(Debug, Clone)]
pub struct CompositionReport<T: Scalar> {
    pub residual: T,
    pub lhs: MatrixOperator<T>,
    pub rhs: MatrixOperator<T>,
}

#[allow(clippy::too_many_arguments)]
pub fn composition_check<T: Scalar>(
    w: &WeightedFamily<T>,
    v: &WeightedFamily<T>,
    z: &WeightedFamily<T>,
    x: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    l: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<CompositionReport<T>> {
    for (name, fam) in [("W", w), ("V", v), ("Z", z), ("X", x)] {
        check_unit_weights(name, fam)?;
        if fam.len() != w.len() {
            return Err(Error::Dimension("all four families must share the index set".into()));
        }
    }
    let biorth = biorthogonality_defect(v, z).max(biorthogonality_defect(x, z));
    if biorth > tol.residual_rel {
        return Err(Error::Precondition(format!(
            "families are not biorthogonal: cross projector norm {biorth:e}"
        )));
    }
    let analysis_w = fusion_analyze(w, k, tol)?;
    if !analysis_w.is_kfusion {
        return Err(Error::Precondition("W is not a K-fusion frame".into()));
    }
    let analysis_z = fusion_analyze(z, l, tol)?;
    if !analysis_z.is_kfusion {
        return Err(Error::Precondition("Z is not an L-fusion frame".into()));
    }

    let spec_wv = MultiplierSpec::unit_symbol(w, v, k)?;
    let m_wv = build_multiplier(&spec_wv, &analysis_w)?.matrix;
    let spec_zx = MultiplierSpec::unit_symbol(z, x, l)?;
    let m_zx = build_multiplier(&spec_zx, &analysis_z)?.matrix;
    let lhs = m_wv.mul(&m_zx);

    let n = k.dim();
    let d_w_adj_k = analysis_w.restricted_inverse.adjoint().mul(&k.op);
    let l_adj_dz = l.op.adjoint().mul(&analysis_z.restricted_inverse);
    let mut phi_groups: Vec<Vec<ColVec<T>>> = Vec::with_capacity(w.len());
    let mut psi_groups: Vec<Vec<ColVec<T>>> = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let phi_map = w
            .subspace(i)
            .projector()
            .mul(&d_w_adj_k)
            .mul(&v.subspace(i).projector())
            .mul(&z.subspace(i).projector());
        let psi_map = x.subspace(i).projector().mul(&l_adj_dz);
        let mut phis = Vec::with_capacity(n);
        let mut psis = Vec::with_capacity(n);
        for j in 0..n {
            phis.push(phi_map.column(j));
            psis.push(psi_map.column(j));
        }
        phi_groups.push(phis);
        psi_groups.push(psis);
    }
    let phi = VectorFamily::from_groups(n, phi_groups)?;
    let psi = VectorFamily::from_groups(n, psi_groups)?;
    let ones = vec![c_re(T::one()); phi.len()];
    let rhs = ordinary_multiplier(&ones, &phi, &psi)?.matrix;

    let denom = lhs.frobenius_norm().max(T::epsilon());
    let residual = lhs.sub(&rhs).frobenius_norm() / denom;
    Ok(CompositionReport { residual, lhs, rhs })
}

/// Orthonormal-fusion-basis composition: with V an orthonormal fusion basis
/// and H_i ⊆ V_i, M_{1,W,V} M_{1,V,H} = M_{1,W,H}.
pub fn onb_composition_check<T: Scalar>(
    w: &WeightedFamily<T>,
    v: &WeightedFamily<T>,
    h: &WeightedFamily<T>,
    k: &RangedOperator<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    for (name, fam) in [("W", w), ("V", v), ("H", h)] {
        check_unit_weights(name, fam)?;
        if fam.len() != w.len() {
            return Err(Error::Dimension("families must share the index set".into()));
        }
    }
    let n = k.dim();
    // V must be an orthonormal fusion basis: mutually orthogonal members
    // whose projectors sum to the identity.
    let s_v = v.frame_operator();
    let defect = s_v.sub(&MatrixOperator::identity(n)).frobenius_norm();
    if defect > tol.residual_rel * T::of(10.0) {
        return Err(Error::Precondition(format!(
            "V is not an orthonormal fusion basis: ‖S_V - I‖ = {defect:e}"
        )));
    }
    let cross = biorthogonality_defect(v, v);
    if cross > tol.residual_rel {
        return Err(Error::Precondition(format!(
            "V members are not mutually orthogonal: cross norm {cross:e}"
        )));
    }
    for i in 0..h.len() {
        let r = h.subspace(i).containment_residual(v.subspace(i));
        if r > tol.residual_rel {
            return Err(Error::Precondition(format!(
                "H_{i} is not inside V_{i}: membership residual {r:e}"
            )));
        }
    }
    let analysis_w = fusion_analyze(w, k, tol)?;
    if !analysis_w.is_kfusion {
        return Err(Error::Precondition("W is not a K-fusion frame".into()));
    }
    let analysis_v = fusion_analyze(v, k, tol)?;

    let m_wv = build_multiplier(&MultiplierSpec::unit_symbol(w, v, k)?, &analysis_w)?.matrix;
    let m_vh = build_multiplier(&MultiplierSpec::unit_symbol(v, h, k)?, &analysis_v)?.matrix;
    let m_wh = build_multiplier(&MultiplierSpec::unit_symbol(w, h, k)?, &analysis_w)?.matrix;

    let denom = m_wh.frobenius_norm().max(T::epsilon());
    Ok(m_wv.mul(&m_vh).sub(&m_wh).frobenius_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{vec_norm, Field};
    use crate::numerics::membership_residual;
    use crate::rng::SeededRng;
    use crate::spaces::{make_subspace, random_instance, InstanceParams, Structure, Subspace};
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

    fn axis_basis(n: usize) -> WeightedFamily<f64> {
        WeightedFamily::unit_weights(
            (0..n)
                .map(|i| make_subspace(&[e(n, i)], &tol()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn spanning_family(rng: &mut SeededRng, n: usize, count: usize) -> WeightedFamily<f64> {
        loop {
            let members: Vec<_> = (0..count)
                .map(|_| {
                    let d = 1 + rng.pick(n.min(3));
                    let vs: Vec<_> = (0..d)
                        .map(|_| rng.gaussian_vec::<f64>(n, Field::Complex))
                        .collect();
                    (make_subspace(&vs, &tol()).unwrap(), 1.0)
                })
                .collect();
            let fam = WeightedFamily::new(members).unwrap();
            let span = orthonormal_range_basis(&fam.synthesis(), &tol());
            if span.cols() == n {
                return fam;
            }
        }
    }

    #[test]
    fn unit_symbol_identity_case() {
        let fam = axis_basis(2);
        let k = RangedOperator::<f64>::identity(2);
        let a = fusion_analyze(&fam, &k, &tol()).unwrap();
        let spec = MultiplierSpec::unit_symbol(&fam, &fam, &k).unwrap();
        let m = build_multiplier(&spec, &a).unwrap();
        assert!(m.matrix.sub(&M::identity(2)).frobenius_norm() < 1e-13);
        assert!((m.norm - 1.0).abs() < 1e-10);
        assert!(m.slack >= -1e-9);
    }

    #[test]
    fn zero_symbol_gives_zero_multiplier() {
        let fam = axis_basis(2);
        let k = RangedOperator::<f64>::identity(2);
        let a = fusion_analyze(&fam, &k, &tol()).unwrap();
        let spec =
            MultiplierSpec::new(vec![Complex::new(0.0, 0.0); 2], &fam, &fam, &k).unwrap();
        let m = build_multiplier(&spec, &a).unwrap();
        assert_eq!(m.matrix.frobenius_norm(), 0.0);
        assert_eq!(m.norm, 0.0);
    }

    #[test]
    fn multiplier_matches_term_by_term_oracle() {
        let mut rng = SeededRng::new(80);
        let w = spanning_family(&mut rng, 4, 3);
        let v = spanning_family(&mut rng, 4, 3);
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(4, 3, Field::Complex));
        let a = fusion_analyze(&w, &k, &tol()).unwrap();
        let symbol: Vec<C<f64>> = (0..3)
            .map(|_| Complex::new(rng.gaussian::<f64>(), rng.gaussian::<f64>()))
            .collect();
        let spec = MultiplierSpec::new(symbol.clone(), &w, &v, &k).unwrap();
        let m = build_multiplier(&spec, &a).unwrap();
        // Re-evaluate the definition on every standard basis vector with
        // matrix-vector products only.
        let d_adj_k = a.restricted_inverse.adjoint().mul(&k.op);
        for b in 0..4 {
            let eb = e(4, b);
            let mut expected = vec![Complex::new(0.0, 0.0); 4];
            for (i, m_i) in symbol.iter().enumerate() {
                let step = v.subspace(i).projector().matvec(&eb);
                let step = d_adj_k.matvec(&step);
                let step = w.subspace(i).projector().matvec(&step);
                let coeff = m_i * (w.weight(i) * v.weight(i));
                for (acc, s) in expected.iter_mut().zip(&step) {
                    *acc += s * coeff;
                }
            }
            let got = m.matrix.column(b);
            assert!(vec_norm(&crate::matrix::vec_sub(&got, &expected)) <= 1e-12);
        }
        assert!(m.norm <= m.norm_bound + 1e-9);
    }

    #[test]
    fn factorization_residual_is_rounding_level() {
        let fam = axis_basis(3);
        let k = RangedOperator::<f64>::identity(3);
        let a = fusion_analyze(&fam, &k, &tol()).unwrap();
        let spec = MultiplierSpec::unit_symbol(&fam, &fam, &k).unwrap();
        assert!(factorization_check(&spec, &a).unwrap() < 1e-14);

        let mut rng = SeededRng::new(81);
        let w = spanning_family(&mut rng, 5, 3);
        let v = spanning_family(&mut rng, 5, 3);
        let kk = ranged(rng.gaussian_matrix_of_rank::<f64>(5, 3, Field::Complex));
        let aw = fusion_analyze(&w, &kk, &tol()).unwrap();
        let spec2 = MultiplierSpec::unit_symbol(&w, &v, &kk).unwrap();
        assert!(factorization_check(&spec2, &aw).unwrap() <= 1e-12);
    }

    #[test]
    fn factorization_with_zero_dimensional_member() {
        let mut rng = SeededRng::new(82);
        let w = spanning_family(&mut rng, 4, 3);
        let v = WeightedFamily::new(vec![
            (Subspace::zero(4), 1.0),
            (make_subspace(&[e(4, 1)], &tol()).unwrap(), 1.0),
            (make_subspace(&[e(4, 2), e(4, 3)], &tol()).unwrap(), 1.0),
        ])
        .unwrap();
        let k = ranged(rng.gaussian_matrix::<f64>(4, 4, Field::Complex));
        let a = fusion_analyze(&w, &k, &tol()).unwrap();
        let spec = MultiplierSpec::unit_symbol(&w, &v, &k).unwrap();
        assert!(factorization_check(&spec, &a).unwrap() <= 1e-12);
    }

    #[test]
    fn factorization_requires_unit_symbol() {
        let fam = axis_basis(2);
        let k = RangedOperator::<f64>::identity(2);
        let a = fusion_analyze(&fam, &k, &tol()).unwrap();
        let spec = MultiplierSpec::new(
            vec![Complex::new(2.0, 0.0), Complex::new(1.0, 0.0)],
            &fam,
            &fam,
            &k,
        )
        .unwrap();
        assert!(matches!(
            factorization_check(&spec, &a),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn ordinary_multiplier_identity_and_rank_one() {
        let onb = VectorFamily::from_vectors(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let ones = vec![Complex::new(1.0, 0.0); 2];
        let m = ordinary_multiplier(&ones, &onb, &onb).unwrap();
        assert!(m.matrix.sub(&M::identity(2)).frobenius_norm() < 1e-14);

        let first = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        let m1 = ordinary_multiplier(&first, &onb, &onb).unwrap();
        let s = svd(&m1.matrix);
        assert_eq!(s.rank(1e-10), 1);
    }

    #[test]
    fn ordinary_multiplier_norm_bound_on_seeded_families() {
        let mut rng = SeededRng::new(83);
        for _ in 0..10 {
            let n = 3 + rng.pick(3);
            let count = 2 + rng.pick(4);
            let phi = VectorFamily::from_vectors(
                n,
                (0..count).map(|_| rng.gaussian_vec::<f64>(n, Field::Complex)).collect(),
            )
            .unwrap();
            let psi = VectorFamily::from_vectors(
                n,
                (0..count).map(|_| rng.gaussian_vec::<f64>(n, Field::Complex)).collect(),
            )
            .unwrap();
            let symbol: Vec<C<f64>> = (0..count)
                .map(|_| Complex::new(rng.gaussian::<f64>(), rng.gaussian::<f64>()))
                .collect();
            let m = ordinary_multiplier(&symbol, &phi, &psi).unwrap();
            assert!(m.norm <= m.norm_bound + 1e-9);
            assert!(m.slack >= -1e-9);
        }
    }

    #[test]
    fn self_inverse_case() {
        let mut rng = SeededRng::new(84);
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(4, 2, Field::Complex));
        let right = k_side_inverse(&k.op, &k, InverseSide::Right, &tol()).unwrap();
        assert!(right.exists);
        assert!(right.residual.unwrap() <= 1e-10);
        // The canonical right inverse acts like K† K up to the factor choice.
        let x = right.inverse.unwrap();
        assert!(k.op.mul(&x).sub(&k.op).frobenius_norm() / k.op.frobenius_norm() <= 1e-10);
        let left = k_side_inverse(&k.op, &k, InverseSide::Left, &tol()).unwrap();
        assert!(left.exists);
        assert!(left.residual.unwrap() <= 1e-10);
    }

    #[test]
    fn zero_multiplier_has_no_inverses() {
        let mut rng = SeededRng::new(85);
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(3, 2, Field::Complex));
        let zero = M::zeros(3, 3);
        for side in [InverseSide::Right, InverseSide::Left] {
            let out = k_side_inverse(&zero, &k, side, &tol()).unwrap();
            assert!(!out.exists);
            assert!(out.inverse.is_none());
        }
    }

    #[test]
    fn invertible_multiplier_has_both_inverses() {
        let mut rng = SeededRng::new(86);
        let m = rng.gaussian_matrix::<f64>(4, 4, Field::Complex);
        let k = ranged(rng.gaussian_matrix_of_rank::<f64>(4, 3, Field::Complex));
        for side in [InverseSide::Right, InverseSide::Left] {
            let out = k_side_inverse(&m, &k, side, &tol()).unwrap();
            assert!(out.exists);
            assert!(out.residual.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn lower_bound_identity_case() {
        let fam = axis_basis(2);
        let k = RangedOperator::<f64>::identity(2);
        let a = fusion_analyze(&fam, &k, &tol()).unwrap();
        let spec = MultiplierSpec::unit_symbol(&fam, &fam, &k).unwrap();
        let out = dual_lower_bound_from_multiplier(
            &spec,
            &a,
            LowerBoundCase::MEqualsK,
            None,
            &tol(),
        )
        .unwrap();
        assert!((out.predicted_a - 1.0).abs() < 1e-10);
        assert!(out.holds);
    }

    #[test]
    fn lower_bound_with_canonical_dual_as_v() {
        // Invertible K: M_{1,W,W~} = S D* K = K exactly.
        let mut rng = SeededRng::new(87);
        let w = spanning_family(&mut rng, 4, 3);
        let k = ranged(rng.gaussian_matrix::<f64>(4, 4, Field::Complex));
        let a = fusion_analyze(&w, &k, &tol()).unwrap();
        let dual = crate::kfusion::canonical_kdual_fusion(&w, &k, &a, &tol()).unwrap();
        let spec = MultiplierSpec::unit_symbol(&w, &dual, &k).unwrap();
        let out = dual_lower_bound_from_multiplier(
            &spec,
            &a,
            LowerBoundCase::MEqualsK,
            None,
            &tol(),
        )
        .unwrap();
        assert!(out.holds, "slack {}", out.min_slack);
    }

    #[test]
    fn lower_bound_via_left_inverse() {
        let mut rng = SeededRng::new(88);
        // Draw until the multiplier is comfortably invertible.
        loop {
            let w = spanning_family(&mut rng, 4, 3);
            let v = spanning_family(&mut rng, 4, 3);
            let k = ranged(rng.gaussian_matrix::<f64>(4, 4, Field::Complex));
            let a = fusion_analyze(&w, &k, &tol()).unwrap();
            let spec = MultiplierSpec::unit_symbol(&w, &v, &k).unwrap();
            let m = build_multiplier(&spec, &a).unwrap();
            let s = svd(&m.matrix);
            if s.sigma.last().copied().unwrap_or(0.0) < 0.05 * s.sigma_max() {
                continue;
            }
            let inv = k_side_inverse(&m.matrix, &k, InverseSide::Left, &tol()).unwrap();
            assert!(inv.exists);
            let l = inv.inverse.unwrap();
            let out = dual_lower_bound_from_multiplier(
                &spec,
                &a,
                LowerBoundCase::LeftInverse,
                Some(&l),
                &tol(),
            )
            .unwrap();
            assert!(out.holds, "slack {}", out.min_slack);
            break;
        }
    }

    #[test]
    fn invertibility_trivial_onb_case() {
        let fam = axis_basis(3);
        let k = RangedOperator::<f64>::identity(3);
        let rep = invertibility_check(&fam, &fam, &k, &tol()).unwrap();
        assert!(rep.lhs < 1e-20);
        assert!((rep.rhs - 1.0).abs() < 1e-10);
        assert!(rep.criterion_holds);
        assert!(rep.invertible_on_range);
        assert!((rep.sigma_min_restricted - 1.0).abs() < 1e-10);
        assert!(rep.neumann < 1e-10);
        assert!(rep.multiplier.sub(&M::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn invertibility_v_equals_w_with_k_equal_s() {
        // With K = S_V the multiplier coincides with S_V and the criterion
        // left side vanishes.
        let mut rng = SeededRng::new(89);
        let v = spanning_family(&mut rng, 4, 3);
        let k = ranged(v.frame_operator());
        let rep = invertibility_check(&v, &v, &k, &tol()).unwrap();
        assert!(rep.lhs <= 1e-16, "lhs {}", rep.lhs);
        assert!(rep.criterion_holds);
        assert!(rep.invertible_on_range);
        assert!(rep.neumann < 1.0);
        assert!(
            rep.multiplier.sub(&v.frame_operator()).frobenius_norm()
                / v.frame_operator().frobenius_norm()
                < 1e-10
        );
    }

    #[test]
    fn invertibility_small_perturbation_keeps_criterion() {
        let mut rng = SeededRng::new(90);
        let v = spanning_family(&mut rng, 4, 3);
        let k = ranged(v.frame_operator());
        // Rotate every member by a small angle in a random plane.
        let mut theta = 0.05f64;
        loop {
            let mut members = Vec::new();
            let mut plane_rng = SeededRng::new(91);
            for (sub, _) in v.iter() {
                let a = plane_rng.gaussian_matrix::<f64>(4, 4, Field::Complex);
                let skew = a.sub(&a.adjoint()).scale_re(0.5 * theta);
                // Cayley-like rotation: (I + S/2)(I - S/2)^{-1} is unitary for
                // skew-Hermitian S; a first-order version suffices here.
                let rot = M::identity(4).add(&skew);
                let cols: Vec<_> = (0..sub.dim()).map(|j| rot.mul(sub.basis()).column(j)).collect();
                members.push((make_subspace(&cols, &tol()).unwrap(), 1.0));
            }
            let w = WeightedFamily::new(members).unwrap();
            let rep = invertibility_check(&v, &w, &k, &tol()).unwrap();
            if rep.lhs < rep.rhs / 2.0 {
                assert!(rep.criterion_holds);
                assert!(rep.invertible_on_range, "sigma_min {}", rep.sigma_min_restricted);
                assert!(rep.neumann < 1.0, "neumann {}", rep.neumann);
                break;
            }
            theta /= 2.0;
            assert!(theta > 1e-8, "could not find a small enough perturbation");
        }
    }

    #[test]
    fn invertibility_rejects_non_unit_weights() {
        let mut rng = SeededRng::new(92);
        let v = spanning_family(&mut rng, 3, 2);
        let scaled = v.scale_weights(2.0).unwrap();
        let k = RangedOperator::<f64>::identity(3);
        assert!(matches!(
            invertibility_check(&scaled, &v, &k, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn composition_single_block_identity() {
        let whole = WeightedFamily::unit_weights(vec![Subspace::<f64>::full(3)]).unwrap();
        let k = RangedOperator::<f64>::identity(3);
        let l = RangedOperator::<f64>::identity(3);
        let rep = composition_check(&whole, &whole, &whole, &whole, &k, &l, &tol()).unwrap();
        assert!(rep.residual < 1e-13);
        assert!(rep.lhs.sub(&M::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn composition_on_block_orthogonal_instance() {
        let params = InstanceParams {
            dim: 4,
            n_subspaces: 2,
            subspace_dims: Some(vec![2, 2]),
            k_rank: 2,
            structure: Structure::BlockOrthogonal,
            field: Field::Complex,
        };
        let inst = random_instance::<f64>(93, &params).unwrap();
        let k = ranged(inst.k.clone());
        let l = ranged(inst.l.clone().unwrap());
        let rep = composition_check(
            &inst.families["W"],
            &inst.families["V"],
            &inst.families["Z"],
            &inst.families["X"],
            &k,
            &l,
            &tol(),
        )
        .unwrap();
        assert!(rep.residual <= 1e-9, "residual {}", rep.residual);
    }

    #[test]
    fn composition_with_aligned_families() {
        // X = Z = V = the blocks themselves, K = L.
        let params = InstanceParams {
            dim: 6,
            n_subspaces: 3,
            subspace_dims: Some(vec![2, 2, 2]),
            k_rank: 3,
            structure: Structure::BlockOrthogonal,
            field: Field::Complex,
        };
        let inst = random_instance::<f64>(94, &params).unwrap();
        let v = &inst.families["V"];
        let mut rng = SeededRng::new(95);
        let w = spanning_family(&mut rng, 6, 3);
        let k = ranged(rng.gaussian_matrix::<f64>(6, 6, Field::Complex));
        let rep = composition_check(&w, v, v, v, &k, &k, &tol()).unwrap();
        assert!(rep.residual <= 1e-9, "residual {}", rep.residual);
    }

    #[test]
    fn composition_rejects_non_biorthogonal_families() {
        let mut rng = SeededRng::new(96);
        let w = spanning_family(&mut rng, 4, 3);
        let v = spanning_family(&mut rng, 4, 3);
        let z = spanning_family(&mut rng, 4, 3);
        let x = spanning_family(&mut rng, 4, 3);
        let k = RangedOperator::<f64>::identity(4);
        assert!(matches!(
            composition_check(&w, &v, &z, &x, &k, &k, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn onb_composition_h_equals_v_with_identity_k() {
        let mut rng = SeededRng::new(97);
        let w = spanning_family(&mut rng, 4, 4);
        let v = axis_basis(4);
        let k = RangedOperator::<f64>::identity(4);
        let res = onb_composition_check(&w, &v, &v, &k, &tol()).unwrap();
        assert!(res <= 1e-10, "residual {res}");
    }

    #[test]
    fn onb_composition_zero_h_members() {
        let mut rng = SeededRng::new(98);
        let w = spanning_family(&mut rng, 3, 3);
        let v = axis_basis(3);
        let h = WeightedFamily::unit_weights(vec![
            Subspace::zero(3),
            Subspace::zero(3),
            Subspace::zero(3),
        ])
        .unwrap();
        let k = ranged(rng.gaussian_matrix::<f64>(3, 3, Field::Complex));
        let res = onb_composition_check(&w, &v, &h, &k, &tol()).unwrap();
        // Both sides vanish; the residual is 0/eps-floored.
        assert_eq!(res, 0.0);
    }

    #[test]
    fn onb_composition_on_engineered_instance() {
        let params = InstanceParams {
            dim: 6,
            n_subspaces: 3,
            subspace_dims: Some(vec![2, 2, 2]),
            k_rank: 2,
            structure: Structure::BlockOrthogonal,
            field: Field::Complex,
        };
        let inst = random_instance::<f64>(99, &params).unwrap();
        let k = ranged(inst.k.clone());
        let res = onb_composition_check(
            &inst.families["W"],
            &inst.families["V"],
            &inst.families["H"],
            &k,
            &tol(),
        )
        .unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn onb_composition_rejects_h_outside_v() {
        let mut rng = SeededRng::new(100);
        let w = spanning_family(&mut rng, 4, 2);
        let v = WeightedFamily::unit_weights(vec![
            make_subspace(&[e(4, 0), e(4, 1)], &tol()).unwrap(),
            make_subspace(&[e(4, 2), e(4, 3)], &tol()).unwrap(),
        ])
        .unwrap();
        let h = WeightedFamily::unit_weights(vec![
            make_subspace(&[e(4, 2)], &tol()).unwrap(), // not inside V_0
            make_subspace(&[e(4, 3)], &tol()).unwrap(),
        ])
        .unwrap();
        let k = RangedOperator::<f64>::identity(4);
        assert!(matches!(
            onb_composition_check(&w, &v, &h, &k, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn membership_is_tracked_through_instance_generation() {
        let params = InstanceParams {
            dim: 4,
            n_subspaces: 2,
            subspace_dims: Some(vec![2, 2]),
            k_rank: 2,
            structure: Structure::BlockOrthogonal,
            field: Field::Complex,
        };
        let inst = random_instance::<f64>(101, &params).unwrap();
        let v = &inst.families["V"];
        let h = &inst.families["H"];
        for i in 0..v.len() {
            assert!(h.subspace(i).containment_residual(v.subspace(i)) < 1e-12);
        }
        let z_cols: Vec<M> = inst.families["Z"].iter().map(|(s, _)| s.basis().clone()).collect();
        let z_span = orthonormal_range_basis(&M::hstack(4, &z_cols), &tol());
        assert!(membership_residual(inst.l.as_ref().unwrap(), &z_span) < 1e-10);
    }
}
