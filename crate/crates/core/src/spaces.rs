//! Subspaces, weighted fusion families, vector families, and seeded random
//! generation of structured instances.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::{ColVec, Field, MatrixOperator};
use crate::numerics::{membership_residual, orthonormal_range_basis, projector, Tolerances};
use crate::rng::SeededRng;
use crate::scalar::{c_re, Scalar, C};

/// Closed subspace stored through an orthonormal basis; the projector is
/// always reconstructed as B B*, which keeps it Hermitian-idempotent.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Scalar> {
    ambient_dim: usize,
    basis: MatrixOperator<T>,
}

impl<T: Scalar> Subspace<T> {
    /// Wrap a basis that is already orthonormal (validated).
    pub fn from_orthonormal(basis: MatrixOperator<T>, tol: &Tolerances<T>) -> Result<Self> {
        basis.ensure_finite("subspace basis")?;
        let d = basis.cols();
        let gram = basis.adjoint().mul(&basis);
        let err = gram.sub(&MatrixOperator::identity(d)).frobenius_norm();
        if err > tol.residual_rel * T::of(10.0).max(T::one()) {
            return Err(Error::Validation(format!(
                "basis is not orthonormal (defect {err:e})"
            )));
        }
        Ok(Self {
            ambient_dim: basis.rows(),
            basis,
        })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: MatrixOperator::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: MatrixOperator::identity(ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &MatrixOperator<T> {
        &self.basis
    }

    pub fn projector(&self) -> MatrixOperator<T> {
        projector(&self.basis)
    }

    /// ‖(I - P_other) B_self‖_F; zero when self ⊆ other.
    pub fn containment_residual(&self, other: &Subspace<T>) -> T {
        membership_residual(&self.basis, &other.basis)
    }
}

/// Orthonormalize the span of a list of vectors. All-zero input yields the
/// zero-dimensional subspace.
pub fn make_subspace<T: Scalar>(vectors: &[ColVec<T>], tol: &Tolerances<T>) -> Result<Subspace<T>> {
    if vectors.is_empty() {
        return Err(Error::Validation("make_subspace needs vectors".into()));
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::Dimension("inconsistent vector dimensions".into()));
    }
    let m = MatrixOperator::from_columns(n, vectors);
    m.ensure_finite("subspace vectors")?;
    Ok(Subspace {
        ambient_dim: n,
        basis: orthonormal_range_basis(&m, tol),
    })
}

/// Image of a subspace under an operator, re-orthonormalized.
pub fn map_subspace<T: Scalar>(
    op: &MatrixOperator<T>,
    w: &Subspace<T>,
    tol: &Tolerances<T>,
) -> Subspace<T> {
    let mapped = op.mul(w.basis());
    Subspace {
        ambient_dim: op.rows(),
        basis: orthonormal_range_basis(&mapped, tol),
    }
}

/// Fusion sequence {(W_i, w_i)} with strictly positive weights. Owns the
/// coordinate conventions of the direct sum: member i contributes a block of
/// coordinates with respect to its stored basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFamily<T: Scalar> {
    ambient_dim: usize,
    members: Vec<(Subspace<T>, T)>,
}

impl<T: Scalar> WeightedFamily<T> {
    pub fn new(members: Vec<(Subspace<T>, T)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("family needs at least one member".into()));
        }
        let ambient_dim = members[0].0.ambient_dim();
        for (idx, (s, w)) in members.iter().enumerate() {
            if s.ambient_dim() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "member {idx} lives in dimension {}, expected {ambient_dim}",
                    s.ambient_dim()
                )));
            }
            if *w <= T::zero() || !w.is_finite() {
                return Err(Error::Validation(format!(
                    "member {idx} has non-positive weight {w}"
                )));
            }
        }
        Ok(Self {
            ambient_dim,
            members,
        })
    }

    pub fn unit_weights(subspaces: Vec<Subspace<T>>) -> Result<Self> {
        Self::new(subspaces.into_iter().map(|s| (s, T::one())).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn subspace(&self, i: usize) -> &Subspace<T> {
        &self.members[i].0
    }

    pub fn weight(&self, i: usize) -> T {
        self.members[i].1
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Subspace<T>, T)> {
        self.members.iter()
    }

    pub fn coord_dims(&self) -> Vec<usize> {
        self.members.iter().map(|(s, _)| s.dim()).collect()
    }

    pub fn total_coord_dim(&self) -> usize {
        self.members.iter().map(|(s, _)| s.dim()).sum()
    }

    pub fn all_unit_weights(&self) -> bool {
        self.members.iter().all(|(_, w)| *w == T::one())
    }

    /// Synthesis operator as the block-column matrix [w_1 B_1 | ... | w_N B_N],
    /// so that the adjoint stacks the local coordinates w_i B_i* f.
    pub fn synthesis(&self) -> MatrixOperator<T> {
        let blocks: Vec<MatrixOperator<T>> = self
            .members
            .iter()
            .map(|(s, w)| s.basis().scale_re(*w))
            .collect();
        MatrixOperator::hstack(self.ambient_dim, &blocks)
    }

    /// Fusion frame operator sum_i w_i² P_{W_i}, symmetrized.
    pub fn frame_operator(&self) -> MatrixOperator<T> {
        let mut s = MatrixOperator::zeros(self.ambient_dim, self.ambient_dim);
        for (sub, w) in &self.members {
            s = s.add(&sub.projector().scale_re(*w * *w));
        }
        s.hermitian_part()
    }

    /// Same subspaces with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: T) -> Result<Self> {
        Self::new(
            self.members
                .iter()
                .map(|(s, w)| (s.clone(), *w * factor))
                .collect(),
        )
    }
}

/// Vectors organized in groups; group i holds the local vectors attached to
/// the i-th subspace. Plain K-frame operations use the flattened view.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFamily<T: Scalar> {
    ambient_dim: usize,
    groups: Vec<Vec<ColVec<T>>>,
}

impl<T: Scalar> VectorFamily<T> {
    pub fn from_vectors(ambient_dim: usize, vectors: Vec<ColVec<T>>) -> Result<Self> {
        Self::from_groups(ambient_dim, vec![vectors])
    }

    pub fn from_groups(ambient_dim: usize, groups: Vec<Vec<ColVec<T>>>) -> Result<Self> {
        for g in &groups {
            for v in g {
                if v.len() != ambient_dim {
                    return Err(Error::Dimension(format!(
                        "vector of length {} in dimension {ambient_dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Validation("non-finite vector entry".into()));
                }
            }
        }
        Ok(Self {
            ambient_dim,
            groups,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, i: usize) -> &[ColVec<T>] {
        &self.groups[i]
    }

    pub fn flat(&self) -> impl Iterator<Item = &ColVec<T>> {
        self.groups.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Columns are the flattened vectors.
    pub fn synthesis(&self) -> MatrixOperator<T> {
        let cols: Vec<ColVec<T>> = self.flat().cloned().collect();
        MatrixOperator::from_columns(self.ambient_dim, &cols)
    }

    /// Frame operator sum_i f_i f_i*, symmetrized.
    pub fn frame_operator(&self) -> MatrixOperator<T> {
        let f = self.synthesis();
        f.mul(&f.adjoint()).hermitian_part()
    }

    pub fn map(&self, op: &MatrixOperator<T>) -> Self {
        Self {
            ambient_dim: op.rows(),
            groups: self
                .groups
                .iter()
                .map(|g| g.iter().map(|v| op.matvec(v)).collect())
                .collect(),
        }
    }
}

/// Structure modes for seeded instance generation; each mode guarantees the
/// hypotheses of a group of theorems by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Gaussian subspaces and an operator of prescribed rank.
    Generic,
    /// K invertible and well conditioned; the W family spans, so canonical
    /// K-duals exist.
    KInvertible,
    /// Every W_i drawn inside R(K*) = R(K†).
    InsidePinvRange,
    /// Axis-aligned orthogonal blocks H_i with V_i = H_i (an orthonormal
    /// fusion basis), Z_i, X_i ⊆ H_i, an H family with H_i ⊆ V_i, and
    /// engineered K, L so both composition identities are exercisable.
    BlockOrthogonal,
}

impl Structure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Structure::Generic => "generic",
            Structure::KInvertible => "k_invertible",
            Structure::InsidePinvRange => "inside_pinv_range",
            Structure::BlockOrthogonal => "block_orthogonal",
        }
    }
}

impl std::str::FromStr for Structure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Structure::Generic),
            "k_invertible" => Ok(Structure::KInvertible),
            "inside_pinv_range" => Ok(Structure::InsidePinvRange),
            "block_orthogonal" => Ok(Structure::BlockOrthogonal),
            other => Err(Error::Validation(format!(
                "unknown structure '{other}' (expected generic | k_invertible | inside_pinv_range | block_orthogonal)"
            ))),
        }
    }
}

/// Parameters for [`random_instance`].
#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub dim: usize,
    pub n_subspaces: usize,
    /// Subspace dims (block dims for `BlockOrthogonal`). When `None`, picked
    /// deterministically from the seed.
    pub subspace_dims: Option<Vec<usize>>,
    pub k_rank: usize,
    pub structure: Structure,
    pub field: Field,
}

/// A fully materialized instance: one operator K (plus L when the structure
/// provides it), named families, an optional multiplier symbol, tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T: Scalar> {
    pub dim: usize,
    pub field: Field,
    pub seed: u64,
    pub structure: Structure,
    pub k: MatrixOperator<T>,
    pub l: Option<MatrixOperator<T>>,
    pub families: BTreeMap<String, WeightedFamily<T>>,
    pub symbol: Option<Vec<C<T>>>,
    pub tol: Tolerances<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn family(&self, name: &str) -> Result<&WeightedFamily<T>> {
        self.families.get(name).ok_or_else(|| {
            Error::Validation(format!("instance has no family named '{name}'"))
        })
    }
}

const MAX_RETRIES: usize = 100;

/// Smallest acceptable ratio between the relevant extreme singular values of
/// generated operators and family synthesis matrices. Keeps instances away
/// from the region where rank decisions at `rank_rel` become ambiguous.
const MIN_COND_RATIO: f64 = 1e-4;

/// Rank-`rank` Gaussian operator redrawn until its nonzero singular values
/// are well separated from the rank cut.
pub fn well_conditioned_of_rank<T: Scalar>(
    rng: &mut SeededRng,
    n: usize,
    rank: usize,
    field: Field,
) -> Result<MatrixOperator<T>> {
    if rank == 0 {
        return Ok(MatrixOperator::zeros(n, n));
    }
    for _ in 0..MAX_RETRIES {
        let cand = rng.gaussian_matrix_of_rank::<T>(n, rank, field);
        let s = crate::factor::svd(&cand);
        if s.sigma[rank - 1] > T::of(MIN_COND_RATIO) * s.sigma[0] {
            return Ok(cand);
        }
    }
    Err(Error::Diagnostic(
        "could not draw a well-conditioned operator of the requested rank".into(),
    ))
}

/// True when the operator's numerical rank is unambiguous: every kept
/// singular value is well above the rank cut and every discarded one is well
/// below it.
pub fn unambiguous_rank<T: Scalar>(m: &MatrixOperator<T>, tol: &Tolerances<T>) -> bool {
    let s = crate::factor::svd(m);
    let smax = s.sigma_max();
    if smax == T::zero() {
        return true;
    }
    let r = s.rank(tol.rank_rel);
    let kept_ok = r == 0 || s.sigma[r - 1] > T::of(MIN_COND_RATIO) * smax;
    let dropped_ok = r == s.sigma.len() || s.sigma[r] < T::of(1e-13) * smax;
    kept_ok && dropped_ok
}

/// True when the nonzero singular values of the family synthesis operator are
/// comfortably above the rank cut, so spanning/rank decisions are unambiguous.
/// `expected_rank` is the structural rank of the synthesis operator (the
/// ambient dimension for families meant to span, the carrier dimension for
/// families confined to a subspace).
fn family_well_conditioned<T: Scalar>(fam: &WeightedFamily<T>, expected_rank: usize) -> bool {
    let relevant = expected_rank.min(fam.total_coord_dim());
    if relevant == 0 {
        return true;
    }
    let s = crate::factor::svd(&fam.synthesis());
    s.sigma[relevant - 1] > T::of(1e-3) * s.sigma[0]
}

fn random_subspace<T: Scalar>(
    rng: &mut SeededRng,
    n: usize,
    dim: usize,
    field: Field,
    tol: &Tolerances<T>,
) -> Result<Subspace<T>> {
    if dim == 0 {
        return Ok(Subspace::zero(n));
    }
    for _ in 0..MAX_RETRIES {
        let m = rng.gaussian_matrix::<T>(n, dim, field);
        let basis = orthonormal_range_basis(&m, tol);
        if basis.cols() == dim {
            return Ok(Subspace {
                ambient_dim: n,
                basis,
            });
        }
    }
    Err(Error::Diagnostic(
        "random subspace generation failed to reach full rank".into(),
    ))
}

/// Random subspace inside the span of an orthonormal basis `range` (n x k).
fn random_subspace_inside<T: Scalar>(
    rng: &mut SeededRng,
    range: &MatrixOperator<T>,
    dim: usize,
    field: Field,
    tol: &Tolerances<T>,
) -> Result<Subspace<T>> {
    let n = range.rows();
    if dim == 0 {
        return Ok(Subspace::zero(n));
    }
    for _ in 0..MAX_RETRIES {
        let coeffs = rng.gaussian_matrix::<T>(range.cols(), dim, field);
        let basis = orthonormal_range_basis(&range.mul(&coeffs), tol);
        if basis.cols() == dim {
            return Ok(Subspace {
                ambient_dim: n,
                basis,
            });
        }
    }
    Err(Error::Diagnostic(
        "random subspace-in-range generation failed to reach full rank".into(),
    ))
}

fn default_dims(rng: &mut SeededRng, params: &InstanceParams) -> Vec<usize> {
    let ceiling = match params.structure {
        Structure::InsidePinvRange => params.k_rank.max(1),
        _ => params.dim,
    }
    .clamp(1, 3);
    let mut dims: Vec<usize> = (0..params.n_subspaces)
        .map(|_| 1 + rng.pick(ceiling))
        .collect();
    // The canonical-dual structure needs a spanning family; top dims up until
    // they can cover the space.
    if params.structure == Structure::KInvertible {
        let count = dims.len();
        let mut i = 0;
        // Oversample: identities checked at 1e-12 need the frame operator
        // comfortably invertible, which mild redundancy buys.
        let target = (params.dim + 2).min(count * params.dim);
        while dims.iter().sum::<usize>() < target {
            let slot = i % count;
            if dims[slot] < params.dim {
                dims[slot] += 1;
            }
            i += 1;
        }
    }
    dims
}

/// Deterministic structured instance generation. Fixed (seed, params) always
/// produce the same instance.
pub fn random_instance<T: Scalar>(seed: u64, params: &InstanceParams) -> Result<Instance<T>> {
    let tol = Tolerances::default();
    let n = params.dim;
    if n == 0 {
        return Err(Error::Validation("dimension must be positive".into()));
    }
    if params.n_subspaces == 0 {
        return Err(Error::Validation("need at least one subspace".into()));
    }
    if params.k_rank > n {
        return Err(Error::Infeasible(format!(
            "k_rank {} exceeds dimension {n}",
            params.k_rank
        )));
    }
    let mut rng = SeededRng::new(seed ^ 0x6b66_7573_696f_6e00);
    let dims = match &params.subspace_dims {
        Some(d) => {
            if d.len() != params.n_subspaces {
                return Err(Error::Infeasible(format!(
                    "{} subspace dims given for {} subspaces",
                    d.len(),
                    params.n_subspaces
                )));
            }
            if let Some(bad) = d.iter().find(|&&x| x > n) {
                return Err(Error::Infeasible(format!(
                    "subspace dimension {bad} exceeds ambient dimension {n}"
                )));
            }
            d.clone()
        }
        None => default_dims(&mut rng, params),
    };

    match params.structure {
        Structure::Generic => build_generic(&mut rng, seed, params, &dims, &tol),
        Structure::KInvertible => build_k_invertible(&mut rng, seed, params, &dims, &tol),
        Structure::InsidePinvRange => build_inside_pinv(&mut rng, seed, params, &dims, &tol),
        Structure::BlockOrthogonal => build_block_orthogonal(&mut rng, seed, params, &dims, &tol),
    }
}

fn random_symbol<T: Scalar>(rng: &mut SeededRng, count: usize, field: Field) -> Vec<C<T>> {
    (0..count)
        .map(|_| {
            let z = rng.gaussian_scalar::<T>(field);
            z.scale(T::of(0.5))
        })
        .collect()
}

fn family_of<T: Scalar>(
    rng: &mut SeededRng,
    n: usize,
    dims: &[usize],
    field: Field,
    tol: &Tolerances<T>,
) -> Result<WeightedFamily<T>> {
    for _ in 0..MAX_RETRIES {
        let mut members = Vec::with_capacity(dims.len());
        for &d in dims {
            let s = random_subspace(rng, n, d, field, tol)?;
            let w = T::of(0.25) + rng.uniform::<T>() * T::of(1.75);
            members.push((s, w));
        }
        let fam = WeightedFamily::new(members)?;
        if family_well_conditioned(&fam, n) {
            return Ok(fam);
        }
    }
    Err(Error::Diagnostic(
        "could not draw a well-conditioned family".into(),
    ))
}

fn build_generic<T: Scalar>(
    rng: &mut SeededRng,
    seed: u64,
    params: &InstanceParams,
    dims: &[usize],
    tol: &Tolerances<T>,
) -> Result<Instance<T>> {
    let n = params.dim;
    let field = params.field;
    let w = family_of(rng, n, dims, field, tol)?;
    let v = family_of(rng, n, dims, field, tol)?;
    let k = well_conditioned_of_rank::<T>(rng, n, params.k_rank, field)?;
    let symbol = random_symbol(rng, params.n_subspaces, field);
    let mut families = BTreeMap::new();
    families.insert("W".to_string(), w);
    families.insert("V".to_string(), v);
    Ok(Instance {
        dim: n,
        field,
        seed,
        structure: params.structure,
        k,
        l: None,
        families,
        symbol: Some(symbol),
        tol: *tol,
    })
}

fn build_k_invertible<T: Scalar>(
    rng: &mut SeededRng,
    seed: u64,
    params: &InstanceParams,
    dims: &[usize],
    tol: &Tolerances<T>,
) -> Result<Instance<T>> {
    let n = params.dim;
    let field = params.field;

    // Well-conditioned invertible K.
    let mut k = None;
    for _ in 0..MAX_RETRIES {
        let cand = rng.gaussian_matrix::<T>(n, n, field);
        let s = crate::factor::svd(&cand);
        if s.sigma[n - 1] > T::of(0.05) * s.sigma[0] {
            k = Some(cand);
            break;
        }
        *rng = rng.fork();
    }
    let k = k.ok_or_else(|| {
        Error::Diagnostic("could not draw a well-conditioned invertible operator".into())
    })?;

    // Spanning W family so that S_W(R(K)) = H covers every member. The
    // synthesis conditioning floor keeps the restricted inverse tame enough
    // for the 1e-12 identity checks downstream.
    let spanning_expected = dims.iter().sum::<usize>() >= n;
    let mut w = None;
    for _ in 0..MAX_RETRIES {
        let cand = family_of(rng, n, dims, field, tol)?;
        if !spanning_expected {
            w = Some(cand);
            break;
        }
        let sv = crate::factor::svd(&cand.synthesis());
        if sv.rank(tol.rank_rel) == n && sv.sigma[n - 1] > T::of(0.03) * sv.sigma[0] {
            w = Some(cand);
            break;
        }
        *rng = rng.fork();
    }
    let w = w.ok_or_else(|| Error::Diagnostic("could not draw a spanning family".into()))?;

    let v = family_of(rng, n, dims, field, tol)?;
    let symbol = random_symbol(rng, params.n_subspaces, field);
    let mut families = BTreeMap::new();
    families.insert("W".to_string(), w);
    families.insert("V".to_string(), v);
    Ok(Instance {
        dim: n,
        field,
        seed,
        structure: params.structure,
        k,
        l: None,
        families,
        symbol: Some(symbol),
        tol: *tol,
    })
}

fn build_inside_pinv<T: Scalar>(
    rng: &mut SeededRng,
    seed: u64,
    params: &InstanceParams,
    dims: &[usize],
    tol: &Tolerances<T>,
) -> Result<Instance<T>> {
    let n = params.dim;
    let field = params.field;
    let k_rank = params.k_rank;
    if k_rank == 0 {
        return Err(Error::Infeasible(
            "inside_pinv_range needs k_rank >= 1".into(),
        ));
    }
    if let Some(bad) = dims.iter().find(|&&d| d > k_rank) {
        return Err(Error::Infeasible(format!(
            "subspace dimension {bad} exceeds k_rank {k_rank}; subspaces must fit inside R(K†)"
        )));
    }
    let k = well_conditioned_of_rank::<T>(rng, n, k_rank, field)?;
    let coimage = orthonormal_range_basis(&k.adjoint(), tol);
    let mut w = None;
    for _ in 0..MAX_RETRIES {
        let mut members = Vec::with_capacity(dims.len());
        for &d in dims {
            let s = random_subspace_inside(rng, &coimage, d, field, tol)?;
            let weight = T::of(0.25) + rng.uniform::<T>() * T::of(1.75);
            members.push((s, weight));
        }
        let cand = WeightedFamily::new(members)?;
        if family_well_conditioned(&cand, k_rank) {
            w = Some(cand);
            break;
        }
    }
    let w = w.ok_or_else(|| {
        Error::Diagnostic("could not draw a well-conditioned family inside R(K*)".into())
    })?;
    let v = family_of(rng, n, dims, field, tol)?;
    let symbol = random_symbol(rng, params.n_subspaces, field);
    let mut families = BTreeMap::new();
    families.insert("W".to_string(), w);
    families.insert("V".to_string(), v);
    Ok(Instance {
        dim: n,
        field,
        seed,
        structure: params.structure,
        k,
        l: None,
        families,
        symbol: Some(symbol),
        tol: *tol,
    })
}

fn build_block_orthogonal<T: Scalar>(
    rng: &mut SeededRng,
    seed: u64,
    params: &InstanceParams,
    block_dims: &[usize],
    tol: &Tolerances<T>,
) -> Result<Instance<T>> {
    let n = params.dim;
    let field = params.field;
    let total: usize = block_dims.iter().sum();
    if total > n {
        return Err(Error::Infeasible(format!(
            "block dims sum to {total} > dimension {n}"
        )));
    }
    if total < n {
        return Err(Error::Infeasible(format!(
            "block dims sum to {total} < dimension {n}; blocks must decompose the whole space"
        )));
    }
    if block_dims.contains(&0) {
        return Err(Error::Infeasible("zero-dimensional block".into()));
    }

    // Axis-aligned blocks: exact orthogonality between anything drawn inside
    // different blocks, entrywise zero cross products included.
    let mut offset = 0;
    let mut v_members = Vec::new();
    let mut z_members = Vec::new();
    let mut x_members = Vec::new();
    let mut h_members = Vec::new();
    for &h in block_dims {
        let mut block_basis = MatrixOperator::zeros(n, h);
        for j in 0..h {
            block_basis[(offset + j, j)] = c_re(T::one());
        }
        let block = Subspace {
            ambient_dim: n,
            basis: block_basis.clone(),
        };
        let z_dim = 1 + rng.pick(h);
        let x_dim = 1 + rng.pick(h);
        let h_dim = rng.pick(h + 1); // may be zero-dimensional
        z_members.push((
            random_subspace_inside(rng, &block_basis, z_dim, field, tol)?,
            T::one(),
        ));
        x_members.push((
            random_subspace_inside(rng, &block_basis, x_dim, field, tol)?,
            T::one(),
        ));
        h_members.push((
            random_subspace_inside(rng, &block_basis, h_dim, field, tol)?,
            T::one(),
        ));
        v_members.push((block, T::one()));
        offset += h;
    }

    // Spanning W family, unit weights (the multiplier theorems assume them).
    // Member dims are drawn large enough that the family covers the space.
    let n_blocks = block_dims.len();
    let base = n.div_ceil(n_blocks);
    let w_dims: Vec<usize> = (0..n_blocks)
        .map(|_| (base + rng.pick(2)).min(n))
        .collect();
    let mut w = None;
    for _ in 0..MAX_RETRIES {
        let members: Result<Vec<_>> = w_dims
            .iter()
            .map(|&d| Ok((random_subspace(rng, n, d, field, tol)?, T::one())))
            .collect();
        let cand = WeightedFamily::new(members?)?;
        let span = orthonormal_range_basis(&cand.synthesis(), tol);
        if span.cols() == n && family_well_conditioned(&cand, n) {
            w = Some(cand);
            break;
        }
        *rng = rng.fork();
    }
    let w = w.ok_or_else(|| Error::Diagnostic("could not draw a spanning W family".into()))?;

    // K acts as the identity on the span of the H family and arbitrarily on
    // its complement; L has range inside span(Z).
    let h_span_cols: Vec<MatrixOperator<T>> = h_members
        .iter()
        .map(|(s, _)| s.basis().clone())
        .collect();
    let h_span = orthonormal_range_basis(&MatrixOperator::hstack(n, &h_span_cols), tol);
    let p_h = projector(&h_span);
    let mut k = None;
    for _ in 0..MAX_RETRIES {
        let c = well_conditioned_of_rank::<T>(rng, n, params.k_rank.max(1), field)?;
        let cand = p_h.add(&c.mul(&MatrixOperator::identity(n).sub(&p_h)));
        if unambiguous_rank(&cand, tol) {
            k = Some(cand);
            break;
        }
    }
    let k = k.ok_or_else(|| {
        Error::Diagnostic("could not engineer an operator fixing the H span".into())
    })?;

    let z_span_cols: Vec<MatrixOperator<T>> = z_members
        .iter()
        .map(|(s, _)| s.basis().clone())
        .collect();
    let z_span = orthonormal_range_basis(&MatrixOperator::hstack(n, &z_span_cols), tol);
    let mut l = None;
    for _ in 0..MAX_RETRIES {
        let cand = z_span.mul(&z_span.adjoint().mul(&rng.gaussian_matrix::<T>(n, n, field)));
        let s = crate::factor::svd(&cand);
        let r = z_span.cols();
        if r == 0 || s.sigma[r - 1] > T::of(MIN_COND_RATIO) * s.sigma[0] {
            l = Some(cand);
            break;
        }
    }
    let l = l.ok_or_else(|| {
        Error::Diagnostic("could not draw a well-conditioned L with range in span(Z)".into())
    })?;

    let symbol = random_symbol(rng, block_dims.len(), field);
    let mut families = BTreeMap::new();
    families.insert("W".to_string(), w);
    families.insert("V".to_string(), WeightedFamily::new(v_members)?);
    families.insert("Z".to_string(), WeightedFamily::new(z_members)?);
    families.insert("X".to_string(), WeightedFamily::new(x_members)?);
    families.insert("H".to_string(), WeightedFamily::new(h_members)?);
    Ok(Instance {
        dim: n,
        field,
        seed,
        structure: params.structure,
        k,
        l: Some(l),
        families,
        symbol: Some(symbol),
        tol: *tol,
    })
}
