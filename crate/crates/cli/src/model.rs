//! Instance file model: JSON with complex entries as [re, im] pairs and
//! matrices row-major. Parsing validates every structural invariant so the
//! core never sees malformed data.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use kfusion_core::error::{Error, Result};
use kfusion_core::matrix::{Field, MatrixOperator};
use kfusion_core::numerics::Tolerances;
use kfusion_core::spaces::{make_subspace, Instance, Structure, Subspace, WeightedFamily};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub dim: usize,
    pub field: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_structure")]
    pub structure: String,
    pub k: MatrixData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<MatrixData>,
    pub families: BTreeMap<String, Vec<FamilyMemberData>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Vec<[f64; 2]>>,
    pub tol: TolData,
}

fn default_structure() -> String {
    "generic".to_string()
}

/// Row-major matrix with [re, im] entries.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FamilyMemberData {
    pub weight: f64,
    /// Basis vectors of the subspace, each of length `dim`.
    pub basis: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TolData {
    pub rank_rel: f64,
    pub residual_rel: f64,
}

fn entry_to_complex(e: [f64; 2], field: Field, what: &str) -> Result<Complex<f64>> {
    if !e[0].is_finite() || !e[1].is_finite() {
        return Err(Error::Validation(format!("{what}: non-finite entry")));
    }
    if field == Field::Real && e[1] != 0.0 {
        return Err(Error::Validation(format!(
            "{what}: nonzero imaginary part {} in a real-field instance",
            e[1]
        )));
    }
    Ok(Complex::new(e[0], e[1]))
}

impl MatrixData {
    fn to_matrix(&self, field: Field, what: &str) -> Result<MatrixOperator<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Validation(format!(
                "{what}: {}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let mut m = MatrixOperator::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] =
                    entry_to_complex(self.data[i * self.cols + j], field, what)?;
            }
        }
        Ok(m.with_field(field))
    }

    fn from_matrix(m: &MatrixOperator<f64>) -> Self {
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data,
        }
    }
}

pub fn parse_field(s: &str) -> Result<Field> {
    match s {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        other => Err(Error::Validation(format!(
            "field must be 'real' or 'complex', got '{other}'"
        ))),
    }
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance<f64>) -> Self {
        let families = inst
            .families
            .iter()
            .map(|(name, fam)| {
                let members = fam
                    .iter()
                    .map(|(sub, weight)| {
                        let b = sub.basis();
                        let basis = (0..b.cols())
                            .map(|j| {
                                (0..b.rows())
                                    .map(|i| {
                                        let z = b[(i, j)];
                                        [z.re, z.im]
                                    })
                                    .collect()
                            })
                            .collect();
                        FamilyMemberData {
                            weight: *weight,
                            basis,
                        }
                    })
                    .collect();
                (name.clone(), members)
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            dim: inst.dim,
            field: inst.field.to_string(),
            seed: inst.seed,
            structure: inst.structure.as_str().to_string(),
            k: MatrixData::from_matrix(&inst.k),
            l: inst.l.as_ref().map(MatrixData::from_matrix),
            families,
            symbol: inst
                .symbol
                .as_ref()
                .map(|m| m.iter().map(|z| [z.re, z.im]).collect()),
            tol: TolData {
                rank_rel: inst.tol.rank_rel,
                residual_rel: inst.tol.residual_rel,
            },
        }
    }

    pub fn into_instance(self) -> Result<Instance<f64>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.dim == 0 {
            return Err(Error::Validation("dim must be positive".into()));
        }
        let field = parse_field(&self.field)?;
        let tol = Tolerances::new(self.tol.rank_rel, self.tol.residual_rel)?;
        let structure: Structure = self
            .structure
            .parse()
            .unwrap_or(Structure::Generic);

        let k = self.k.to_matrix(field, "operator K")?;
        if !k.is_square() || k.rows() != self.dim {
            return Err(Error::Validation(format!(
                "operator K must be {0}x{0}, got {1}x{2}",
                self.dim,
                k.rows(),
                k.cols()
            )));
        }
        let l = match &self.l {
            Some(data) => {
                let m = data.to_matrix(field, "operator L")?;
                if !m.is_square() || m.rows() != self.dim {
                    return Err(Error::Validation(format!(
                        "operator L must be {0}x{0}, got {1}x{2}",
                        self.dim,
                        m.rows(),
                        m.cols()
                    )));
                }
                Some(m)
            }
            None => None,
        };

        let mut families = BTreeMap::new();
        for (name, members) in &self.families {
            let mut out = Vec::with_capacity(members.len());
            for (idx, member) in members.iter().enumerate() {
                if member.weight <= 0.0 || !member.weight.is_finite() {
                    return Err(Error::Validation(format!(
                        "family {name}, member {idx}: weight must be strictly positive, got {}",
                        member.weight
                    )));
                }
                let sub = member_to_subspace(member, self.dim, field, &tol, name, idx)?;
                out.push((sub, member.weight));
            }
            families.insert(
                name.clone(),
                WeightedFamily::new(out).map_err(|e| {
                    Error::Validation(format!("family {name}: {e}"))
                })?,
            );
        }
        if families.is_empty() {
            return Err(Error::Validation("instance needs at least one family".into()));
        }

        let symbol = match &self.symbol {
            Some(entries) => Some(
                entries
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| entry_to_complex(e, field, &format!("symbol[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };

        Ok(Instance {
            dim: self.dim,
            field,
            seed: self.seed,
            structure,
            k,
            l,
            families,
            symbol,
            tol,
        })
    }
}

/// Adopt an already-orthonormal basis verbatim (so serialization round-trips
/// bit-exactly); orthonormalize anything else.
fn member_to_subspace(
    member: &FamilyMemberData,
    dim: usize,
    field: Field,
    tol: &Tolerances<f64>,
    family: &str,
    idx: usize,
) -> Result<Subspace<f64>> {
    let mut columns = Vec::with_capacity(member.basis.len());
    for (v_idx, vector) in member.basis.iter().enumerate() {
        if vector.len() != dim {
            return Err(Error::Validation(format!(
                "family {family}, member {idx}, vector {v_idx}: length {} != dim {dim}",
                vector.len()
            )));
        }
        let col: Vec<Complex<f64>> = vector
            .iter()
            .map(|&e| {
                entry_to_complex(e, field, &format!("family {family}, member {idx}"))
            })
            .collect::<Result<_>>()?;
        columns.push(col);
    }
    if columns.is_empty() {
        return Ok(Subspace::zero(dim));
    }
    let stacked = MatrixOperator::from_columns(dim, &columns);
    let gram = stacked.adjoint().mul(&stacked);
    let defect = gram
        .sub(&MatrixOperator::identity(columns.len()))
        .frobenius_norm();
    if defect <= 1e-12 {
        Subspace::from_orthonormal(stacked, tol)
    } else {
        make_subspace(&columns, tol).map_err(|e| {
            Error::Validation(format!("family {family}, member {idx}: {e}"))
        })
    }
}

pub fn read_instance(path: &std::path::Path) -> Result<Instance<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Validation(format!("cannot read {}: {e}", path.display()))
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| {
        Error::Validation(format!("cannot parse {}: {e}", path.display()))
    })?;
    file.into_instance()
}

/// Serialize and write atomically (write-temp-rename).
pub fn write_instance(path: &std::path::Path, inst: &Instance<f64>) -> Result<()> {
    let file = InstanceFile::from_instance(inst);
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| {
        Error::Validation(format!("serialization failed: {e}"))
    })?;
    text.push('\n');
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    std::fs::write(&tmp, &text).map_err(|e| {
        Error::Validation(format!("cannot write {}: {e}", tmp.display()))
    })?;
    std::fs::rename(&tmp, path).map_err(|e| {
        Error::Validation(format!("cannot rename into {}: {e}", path.display()))
    })?;
    Ok(())
}
