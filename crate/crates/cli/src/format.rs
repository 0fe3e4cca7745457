//! JSON problem, result and certificate files.
//!
//! Complex entries are `[re, im]` pairs and matrices are arrays of rows.
//! Floats are written in their shortest round-trip decimal form.

use anyhow::{anyhow, bail, Context, Result};
use cbnorm::dnorm::CertificateCheck;
use cbnorm::superop::{ChannelReport, Representation};
use cbnorm::{Hermitian, Matrix, NormCertificate, StinespringPair, SuperOp};
use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const FORMAT_VERSION: &str = "1";
const KNOWN_VERSIONS: &[&str] = &[FORMAT_VERSION];

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Choi,
    Kraus,
    StinespringPair,
    ChannelPair,
    Fidelity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: String,
    pub kind: Kind,
    pub dim_in: usize,
    pub dim_out: usize,
    pub payload: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiPayload {
    pub choi: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausPayload {
    pub kraus: Vec<JsonMatrix>,
    /// Right-hand operators for maps `X ↦ Σ L_k X R_k^*`; omitted when equal
    /// to `kraus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Vec<JsonMatrix>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StinespringPayload {
    pub a: JsonMatrix,
    pub b: JsonMatrix,
    pub dim_env: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operand {
    pub kind: Kind,
    pub payload: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPairPayload {
    pub first: Operand,
    pub second: Operand,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityPayload {
    pub p: JsonMatrix,
    pub q: JsonMatrix,
}

/// A parsed problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Map(SuperOp),
    Fidelity { p: Hermitian, q: Hermitian },
}

/// Deserializes `text`, reporting the JSON path of the first offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("at `{path}`: {}", e.into_inner())
    })
}

fn from_value<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{path}")
        };
        anyhow!("at `{path}`: {}", e.into_inner())
    })
}

pub fn to_json_matrix(m: &Matrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_json_matrix(rows: &JsonMatrix, shape: (usize, usize), path: &str) -> Result<Matrix> {
    let (r, c) = shape;
    if rows.len() != r {
        bail!("at `{path}`: expected {r} rows, found {}", rows.len());
    }
    let mut data = Vec::with_capacity(r * c);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            bail!("at `{path}[{i}]`: expected {c} entries, found {}", row.len());
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                bail!("at `{path}[{i}][{j}]`: entry is not finite");
            }
            data.push(Complex::new(re, im));
        }
    }
    Ok(Matrix::new(r, c, data)?)
}

fn check_version(version: &str) -> Result<()> {
    if !KNOWN_VERSIONS.contains(&version) {
        bail!("at `version`: unsupported format version {version:?} (known: {KNOWN_VERSIONS:?})");
    }
    Ok(())
}

fn parse_map(kind: Kind, payload: &Value, n: usize, m: usize, prefix: &str) -> Result<SuperOp> {
    match kind {
        Kind::Choi => {
            let p: ChoiPayload = from_value(payload, prefix)?;
            let j = from_json_matrix(&p.choi, (n * m, n * m), &format!("{prefix}.choi"))?;
            Ok(SuperOp::from_choi(n, m, j)?)
        }
        Kind::Kraus => {
            let p: KrausPayload = from_value(payload, prefix)?;
            if p.kraus.is_empty() {
                bail!("at `{prefix}.kraus`: at least one operator is required");
            }
            let read = |ops: &[JsonMatrix], field: &str| -> Result<Vec<Matrix>> {
                ops.iter()
                    .enumerate()
                    .map(|(k, op)| from_json_matrix(op, (m, n), &format!("{prefix}.{field}[{k}]")))
                    .collect()
            };
            let left = read(&p.kraus, "kraus")?;
            match p.right {
                None => Ok(SuperOp::from_kraus(left)?),
                Some(right) => {
                    if right.len() != left.len() {
                        bail!(
                            "at `{prefix}.right`: expected {} operators, found {}",
                            left.len(),
                            right.len()
                        );
                    }
                    Ok(SuperOp::from_kraus_pair(left, read(&right, "right")?)?)
                }
            }
        }
        Kind::StinespringPair => {
            let p: StinespringPayload = from_value(payload, prefix)?;
            let r = p.dim_env;
            if r == 0 {
                bail!("at `{prefix}.dim_env`: must be positive");
            }
            let a = from_json_matrix(&p.a, (m * r, n), &format!("{prefix}.a"))?;
            let b = from_json_matrix(&p.b, (m * r, n), &format!("{prefix}.b"))?;
            Ok(SuperOp::from_stinespring(StinespringPair::new(a, b, n, m, r)?))
        }
        Kind::ChannelPair => {
            let p: ChannelPairPayload = from_value(payload, prefix)?;
            let first = parse_operand(&p.first, n, m, &format!("{prefix}.first"))?;
            let second = parse_operand(&p.second, n, m, &format!("{prefix}.second"))?;
            SuperOp::channel_difference(first, second).with_context(|| format!("at `{prefix}`"))
        }
        Kind::Fidelity => bail!("at `{prefix}`: a fidelity payload does not describe a map"),
    }
}

fn parse_operand(op: &Operand, n: usize, m: usize, prefix: &str) -> Result<SuperOp> {
    if matches!(op.kind, Kind::ChannelPair | Kind::Fidelity) {
        bail!("at `{prefix}.kind`: operands must be choi, kraus or stinespring_pair");
    }
    parse_map(op.kind, &op.payload, n, m, &format!("{prefix}.payload"))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ProblemFile = parse_json(text)?;
        check_version(&file.version)?;
        if file.dim_in == 0 || file.dim_out == 0 {
            bail!("at `dim_in`/`dim_out`: dimensions must be positive");
        }
        Ok(file)
    }

    pub fn problem(&self) -> Result<Problem> {
        let (n, m) = (self.dim_in, self.dim_out);
        if self.kind == Kind::Fidelity {
            if n != m {
                bail!("at `dim_out`: a fidelity problem needs dim_in = dim_out");
            }
            let p: FidelityPayload = from_value(&self.payload, "payload")?;
            let read = |x: &JsonMatrix, field: &str| -> Result<Hermitian> {
                let path = format!("payload.{field}");
                let mat = from_json_matrix(x, (n, n), &path)?;
                Hermitian::new(mat).with_context(|| format!("at `{path}`"))
            };
            return Ok(Problem::Fidelity {
                p: read(&p.p, "p")?,
                q: read(&p.q, "q")?,
            });
        }
        parse_map(self.kind, &self.payload, n, m, "payload").map(Problem::Map)
    }

    pub fn map(&self) -> Result<SuperOp> {
        match self.problem()? {
            Problem::Map(op) => Ok(op),
            Problem::Fidelity { .. } => bail!("at `kind`: expected a map, found a fidelity problem"),
        }
    }

    /// Serializes `op` as a problem file of the requested kind. Channel pairs
    /// keep their structure and convert each operand.
    pub fn from_map(op: &SuperOp, kind: Kind, rank_tol: f64) -> Result<Self> {
        let (n, m) = op.dims();
        let (kind, payload) = match (op.representation(), kind) {
            (Representation::ChannelDifference(p0, p1), _) => {
                let operand = |o: &SuperOp| -> Result<Operand> {
                    let (kind, payload) = map_payload(o, kind, rank_tol)?;
                    Ok(Operand { kind, payload })
                };
                let payload = ChannelPairPayload {
                    first: operand(p0)?,
                    second: operand(p1)?,
                };
                (Kind::ChannelPair, serde_json::to_value(payload)?)
            }
            _ => map_payload(op, kind, rank_tol)?,
        };
        Ok(ProblemFile {
            version: FORMAT_VERSION.into(),
            kind,
            dim_in: n,
            dim_out: m,
            payload,
        })
    }
}

fn map_payload(op: &SuperOp, kind: Kind, rank_tol: f64) -> Result<(Kind, Value)> {
    let value = match kind {
        Kind::Choi => serde_json::to_value(ChoiPayload {
            choi: to_json_matrix(&op.to_choi()),
        })?,
        Kind::Kraus => {
            let (left, right) = op.to_kraus();
            let same = left.iter().zip(&right).all(|(l, r)| {
                let scale = 1.0 + cbnorm::linalg::frobenius_norm(l);
                cbnorm::linalg::frobenius_norm(&(l - r)) <= 1e-12 * scale
            });
            serde_json::to_value(KrausPayload {
                kraus: left.iter().map(to_json_matrix).collect(),
                right: (!same).then(|| right.iter().map(to_json_matrix).collect()),
            })?
        }
        Kind::StinespringPair => {
            let pair = op.to_stinespring(rank_tol);
            serde_json::to_value(StinespringPayload {
                a: to_json_matrix(pair.a()),
                b: to_json_matrix(pair.b()),
                dim_env: pair.dim_env(),
            })?
        }
        Kind::ChannelPair | Kind::Fidelity => bail!("cannot convert a map to {kind:?}"),
    };
    Ok((kind, value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Diamond,
    CbSpectral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CertificateData {
    GeneralSdp {
        rho: JsonMatrix,
        w: JsonMatrix,
        lambda: f64,
        z: JsonMatrix,
        a: JsonMatrix,
        b: JsonMatrix,
        dim_env: usize,
    },
    ChannelDiffSdp {
        rho: JsonMatrix,
        w: JsonMatrix,
        z: JsonMatrix,
    },
}

/// A certificate together with the map it certifies: `dim_in`, `dim_out`
/// describe the problem map, and `norm` says whether the witnesses refer to
/// the map itself or to its adjoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub version: String,
    pub norm: NormKind,
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(flatten)]
    pub data: CertificateData,
}

impl CertificateFile {
    pub fn new(norm: NormKind, dims: (usize, usize), cert: &NormCertificate) -> Self {
        let data = match cert {
            NormCertificate::General {
                rho,
                w,
                lambda,
                z,
                pair,
            } => CertificateData::GeneralSdp {
                rho: to_json_matrix(rho),
                w: to_json_matrix(w),
                lambda: *lambda,
                z: to_json_matrix(z),
                a: to_json_matrix(pair.a()),
                b: to_json_matrix(pair.b()),
                dim_env: pair.dim_env(),
            },
            NormCertificate::ChannelDiff { rho, w, z } => CertificateData::ChannelDiffSdp {
                rho: to_json_matrix(rho),
                w: to_json_matrix(w),
                z: to_json_matrix(z),
            },
        };
        CertificateFile {
            version: FORMAT_VERSION.into(),
            norm,
            dim_in: dims.0,
            dim_out: dims.1,
            data,
        }
    }

    /// Accepts a bare certificate or a result file that embeds one.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = parse_json(text)?;
        let (value, prefix) = match value.get("certificate") {
            Some(inner) => (inner.clone(), "certificate"),
            None => (value, ""),
        };
        let file: CertificateFile = from_value(&value, prefix)?;
        check_version(&file.version)?;
        Ok(file)
    }

    /// Rebuilds the certificate for the map `(n, m)` it is checked against.
    pub fn certificate(&self, n: usize, m: usize) -> Result<NormCertificate> {
        let shape = |x: &JsonMatrix, field: &str| -> Result<(usize, usize)> {
            let rows = x.len();
            let cols = x.first().map_or(0, Vec::len);
            if rows == 0 || cols == 0 {
                bail!("at `{field}`: empty matrix");
            }
            Ok((rows, cols))
        };
        Ok(match &self.data {
            CertificateData::GeneralSdp {
                rho,
                w,
                lambda,
                z,
                a,
                b,
                dim_env,
            } => {
                let r = *dim_env;
                let pair = StinespringPair::new(
                    from_json_matrix(a, (m * r, n), "a")?,
                    from_json_matrix(b, (m * r, n), "b")?,
                    n,
                    m,
                    r,
                )?;
                NormCertificate::General {
                    rho: from_json_matrix(rho, shape(rho, "rho")?, "rho")?,
                    w: from_json_matrix(w, shape(w, "w")?, "w")?,
                    lambda: *lambda,
                    z: from_json_matrix(z, shape(z, "z")?, "z")?,
                    pair,
                }
            }
            CertificateData::ChannelDiffSdp { rho, w, z } => NormCertificate::ChannelDiff {
                rho: from_json_matrix(rho, shape(rho, "rho")?, "rho")?,
                w: from_json_matrix(w, shape(w, "w")?, "w")?,
                z: from_json_matrix(z, shape(z, "z")?, "z")?,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub tool: String,
    pub version: String,
    pub norm: NormKind,
    pub method: String,
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub status: String,
    pub iterations: usize,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_lower_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    pub certificate: CertificateFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub valid: bool,
    pub lower_bound: f64,
    pub upper_bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl From<CertificateCheck<f64>> for CertifyReport {
    fn from(c: CertificateCheck<f64>) -> Self {
        CertifyReport {
            valid: c.valid,
            lower_bound: c.lower,
            upper_bound: c.upper,
            violations: c.violations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityReport {
    pub tool: String,
    pub version: String,
    pub fidelity: f64,
    pub fidelity_squared: f64,
    pub closed_form_fidelity: f64,
    pub status: String,
    pub gap: f64,
    /// `⟨P, Z⟩⟨Q, Z⁻¹⟩` for the dual operator below.
    pub alberti_bound: f64,
    pub certificate: AlbertiCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlbertiCertificate {
    pub z: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelReportFile {
    pub is_cp: bool,
    pub is_tp: bool,
    pub is_channel: bool,
    pub min_choi_eigenvalue: f64,
    pub tp_residual: f64,
}

impl From<ChannelReport> for ChannelReportFile {
    fn from(r: ChannelReport) -> Self {
        ChannelReportFile {
            is_cp: r.is_cp,
            is_tp: r.is_tp,
            is_channel: r.is_channel(),
            min_choi_eigenvalue: r.min_choi_eigenvalue,
            tp_residual: r.tp_residual,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
