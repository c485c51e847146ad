//! JSON documents for instances and embeddings: exact rationals as
//! strings, strict schemas, and deterministic serialization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedder::{Block, BlockKind, EmbeddedSpace, GermRecord, RepairRecord};
use crate::kernel::{KernelError, PLFunction, PLPath};
use crate::mapping::{MapPiece, PLMapping, PieceGeom, RayGeom};
use crate::scalar::{Point, Scalar};
use crate::space::{Arc, EndSpec, PointEntry, SpaceDescription, TauTarget};
use crate::unbounded::{ExtendedSpace, UnboundedArc, UnboundedEmbedding};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed document: {0}")]
    Parse(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Parse(msg.into())
}

/// A parsed instance: a bounded space, or one with unbounded arcs.
#[derive(Clone, Debug)]
pub enum Instance {
    Bounded(SpaceDescription),
    Unbounded(ExtendedSpace),
}

impl Instance {
    pub fn core(&self) -> &SpaceDescription {
        match self {
            Instance::Bounded(s) => s,
            Instance::Unbounded(e) => &e.core,
        }
    }
}

/// A rational in a document: a `"p/q"` string, or an integer shorthand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatDoc {
    Int(i64),
    Str(String),
}

impl RatDoc {
    fn of(s: &Scalar) -> RatDoc {
        RatDoc::Str(s.to_string())
    }

    fn to_scalar(&self, ctx: &str, warnings: &mut Vec<String>) -> Result<Scalar, IoError> {
        match self {
            RatDoc::Int(v) => Ok(Scalar::from_int(*v)),
            RatDoc::Str(s) => {
                let (val, canonical) =
                    Scalar::parse(s).map_err(|e| bad(format!("{ctx}: {e}")))?;
                if !canonical {
                    warnings.push(format!("normalized rational {s:?} to {val} at {ctx}"));
                }
                Ok(val)
            }
        }
    }
}

fn rats_of(p: &Point) -> Vec<RatDoc> {
    p.coords().iter().map(RatDoc::of).collect()
}

fn point_of(
    rats: &[RatDoc],
    n: usize,
    ctx: &str,
    warnings: &mut Vec<String>,
) -> Result<Point, IoError> {
    if rats.len() != n {
        return Err(bad(format!(
            "{ctx}: expected {n} coordinates, found {}",
            rats.len()
        )));
    }
    Ok(Point(
        rats.iter()
            .enumerate()
            .map(|(i, r)| r.to_scalar(&format!("{ctx}[{i}]"), warnings))
            .collect::<Result<Vec<_>, _>>()?,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub id: String,
    pub coords: Vec<RatDoc>,
    #[serde(rename = "in_X")]
    pub in_x: bool,
    #[serde(rename = "in_G")]
    pub in_g: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauDoc {
    Name(String),
    Glue {
        glue: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndDoc {
    pub limit: String,
    pub member: bool,
    pub tau: TauDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcDoc {
    pub id: String,
    pub vertices: Vec<Vec<RatDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<RatDoc>>,
    pub ends: Vec<EndDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayEndDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attach: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayDoc {
    pub id: String,
    pub prefix: Vec<Vec<RatDoc>>,
    pub ray_dir: Vec<RatDoc>,
    /// Second asymptotic direction of a full line; defaults to the
    /// negation of `ray_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray_dir_low: Option<Vec<RatDoc>>,
    /// `"half"` for a half line, `"line"` for a full line.
    pub shape: String,
    pub end: RayEndDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub ambient_dim: usize,
    #[serde(
        rename = "scale_R",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub scale_r: Option<RatDoc>,
    pub points: Vec<PointDoc>,
    pub arcs: Vec<ArcDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unbounded_arcs: Vec<RayDoc>,
    #[serde(
        rename = "declared_K",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub declared_k: Option<usize>,
}

/// Parses an instance document; returns the instance together with any
/// normalization notes for non-canonical rationals.
pub fn document_to_instance(
    doc: &InstanceDocument,
) -> Result<(Instance, Vec<String>), IoError> {
    let mut warnings = Vec::new();
    let n = doc.ambient_dim;
    let r = doc
        .scale_r
        .as_ref()
        .map(|v| v.to_scalar("scale_R", &mut warnings))
        .transpose()?;

    let points = doc
        .points
        .iter()
        .map(|p| {
            Ok(PointEntry {
                id: p.id.clone(),
                coords: point_of(
                    &p.coords,
                    n,
                    &format!("points[{}].coords", p.id),
                    &mut warnings,
                )?,
                in_x: p.in_x,
                in_g: p.in_g,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;

    let mut arcs = Vec::new();
    for a in &doc.arcs {
        if a.ends.len() != 2 {
            return Err(bad(format!(
                "arcs[{}]: expected 2 ends, found {}",
                a.id,
                a.ends.len()
            )));
        }
        let ends: Vec<EndSpec> = a
            .ends
            .iter()
            .map(|e| {
                let tau = match &e.tau {
                    TauDoc::Name(s) if s == "affine" => TauTarget::Affine,
                    TauDoc::Name(s) if s == "none" => TauTarget::NoLimit,
                    TauDoc::Name(s) => {
                        return Err(bad(format!(
                            "arcs[{}]: unknown tau {s:?} (expected \"affine\", \
                             \"none\" or {{\"glue\": id}})",
                            a.id
                        )))
                    }
                    TauDoc::Glue { glue } => TauTarget::Glue(glue.clone()),
                };
                Ok(EndSpec {
                    limit: e.limit.clone(),
                    member: e.member,
                    tau,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let left_open = !ends[0].member;
        let right_open = !ends[1].member;
        let vertices = a
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                point_of(
                    v,
                    n,
                    &format!("arcs[{}].vertices[{i}]", a.id),
                    &mut warnings,
                )
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let path = match &a.params {
            Some(params) => {
                let params = params
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        p.to_scalar(&format!("arcs[{}].params[{i}]", a.id), &mut warnings)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                PLPath::new(params, vertices, left_open, right_open)
                    .map_err(|e| bad(format!("arcs[{}]: {e}", a.id)))?
            }
            None => PLPath::from_vertices(vertices, left_open, right_open)
                .map_err(|e| bad(format!("arcs[{}]: {e}", a.id)))?,
        };
        arcs.push(Arc {
            id: a.id.clone(),
            path,
            ends: [ends[0].clone(), ends[1].clone()],
        });
    }

    let core = SpaceDescription {
        n,
        r,
        points,
        arcs,
        declared_k: doc.declared_k,
        shift: None,
    };

    if doc.unbounded_arcs.is_empty() {
        return Ok((Instance::Bounded(core), warnings));
    }

    let mut rays = Vec::new();
    for ray in &doc.unbounded_arcs {
        let vertices = ray
            .prefix
            .iter()
            .enumerate()
            .map(|(i, v)| {
                point_of(
                    v,
                    n,
                    &format!("unbounded_arcs[{}].prefix[{i}]", ray.id),
                    &mut warnings,
                )
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let prefix = PLPath::from_vertices(vertices, false, false)
            .map_err(|e| bad(format!("unbounded_arcs[{}]: {e}", ray.id)))?;
        let dir = point_of(
            &ray.ray_dir,
            n,
            &format!("unbounded_arcs[{}].ray_dir", ray.id),
            &mut warnings,
        )?;
        let low_dir = match ray.shape.as_str() {
            "half" => {
                if ray.ray_dir_low.is_some() {
                    return Err(bad(format!(
                        "unbounded_arcs[{}]: ray_dir_low is only valid for shape \"line\"",
                        ray.id
                    )));
                }
                None
            }
            "line" => Some(match &ray.ray_dir_low {
                Some(v) => point_of(
                    v,
                    n,
                    &format!("unbounded_arcs[{}].ray_dir_low", ray.id),
                    &mut warnings,
                )?,
                None => dir.scale(&-Scalar::one()),
            }),
            other => {
                return Err(bad(format!(
                    "unbounded_arcs[{}]: unknown shape {other:?}",
                    ray.id
                )))
            }
        };
        let geom = RayGeom::new(prefix, dir, low_dir)
            .map_err(|e| bad(format!("unbounded_arcs[{}]: {e}", ray.id)))?;
        rays.push(UnboundedArc {
            id: ray.id.clone(),
            geom,
            attach: ray.end.attach.clone(),
        });
    }
    Ok((Instance::Unbounded(ExtendedSpace { core, rays }), warnings))
}

pub fn instance_to_document(inst: &Instance) -> InstanceDocument {
    let core = inst.core();
    let arcs = core
        .arcs
        .iter()
        .map(|a| ArcDoc {
            id: a.id.clone(),
            vertices: a.path.vertices().iter().map(rats_of).collect(),
            params: Some(a.path.params().iter().map(RatDoc::of).collect()),
            ends: a
                .ends
                .iter()
                .map(|e| EndDoc {
                    limit: e.limit.clone(),
                    member: e.member,
                    tau: match &e.tau {
                        TauTarget::Affine => TauDoc::Name("affine".into()),
                        TauTarget::NoLimit => TauDoc::Name("none".into()),
                        TauTarget::Glue(g) => TauDoc::Glue { glue: g.clone() },
                    },
                })
                .collect(),
        })
        .collect();
    let unbounded_arcs = match inst {
        Instance::Bounded(_) => Vec::new(),
        Instance::Unbounded(ext) => ext
            .rays
            .iter()
            .map(|r| RayDoc {
                id: r.id.clone(),
                prefix: r.geom.prefix.vertices().iter().map(rats_of).collect(),
                ray_dir: rats_of(&r.geom.dir),
                ray_dir_low: r.geom.low_dir.as_ref().map(rats_of),
                shape: if r.geom.low_dir.is_some() {
                    "line".into()
                } else {
                    "half".into()
                },
                end: RayEndDoc {
                    attach: r.attach.clone(),
                },
            })
            .collect(),
    };
    InstanceDocument {
        ambient_dim: core.n,
        scale_r: core.r.as_ref().map(RatDoc::of),
        points: core
            .points
            .iter()
            .map(|p| PointDoc {
                id: p.id.clone(),
                coords: rats_of(&p.coords),
                in_x: p.in_x,
                in_g: p.in_g,
            })
            .collect(),
        arcs,
        unbounded_arcs,
        declared_k: core.declared_k,
    }
}

pub fn parse_instance(text: &str) -> Result<(Instance, Vec<String>), IoError> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    document_to_instance(&doc)
}

pub fn render_instance(inst: &Instance) -> String {
    let doc = instance_to_document(inst);
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable document");
    out.push('\n');
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub params: Vec<RatDoc>,
    pub vertices: Vec<Vec<RatDoc>>,
    pub left_open: bool,
    pub right_open: bool,
}

impl PathDoc {
    fn of(path: &PLPath) -> PathDoc {
        PathDoc {
            params: path.params().iter().map(RatDoc::of).collect(),
            vertices: path.vertices().iter().map(rats_of).collect(),
            left_open: path.left_open,
            right_open: path.right_open,
        }
    }

    fn to_path(&self, dim: usize, ctx: &str, warnings: &mut Vec<String>) -> Result<PLPath, IoError> {
        let params = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| p.to_scalar(&format!("{ctx}.params[{i}]"), warnings))
            .collect::<Result<Vec<_>, _>>()?;
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| point_of(v, dim, &format!("{ctx}.vertices[{i}]"), warnings))
            .collect::<Result<Vec<_>, _>>()?;
        if params.len() == 1 {
            return Ok(PLPath::point(vertices[0].clone()));
        }
        PLPath::new(params, vertices, self.left_open, self.right_open)
            .map_err(|e| bad(format!("{ctx}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayGeomDoc {
    pub prefix: PathDoc,
    pub dir: Vec<RatDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_dir: Option<Vec<RatDoc>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeomDoc {
    Point(Vec<RatDoc>),
    Path(PathDoc),
    Ray(RayGeomDoc),
}

impl GeomDoc {
    fn of(geom: &PieceGeom) -> GeomDoc {
        match geom {
            PieceGeom::Point(p) => GeomDoc::Point(rats_of(p)),
            PieceGeom::Path(p) => GeomDoc::Path(PathDoc::of(p)),
            PieceGeom::Ray(r) => GeomDoc::Ray(RayGeomDoc {
                prefix: PathDoc::of(&r.prefix),
                dir: rats_of(&r.dir),
                low_dir: r.low_dir.as_ref().map(rats_of),
            }),
        }
    }

    fn to_geom(
        &self,
        dim: usize,
        ctx: &str,
        warnings: &mut Vec<String>,
    ) -> Result<PieceGeom, IoError> {
        Ok(match self {
            GeomDoc::Point(p) => PieceGeom::Point(point_of(p, dim, ctx, warnings)?),
            GeomDoc::Path(p) => PieceGeom::Path(p.to_path(dim, ctx, warnings)?),
            GeomDoc::Ray(r) => PieceGeom::Ray(
                RayGeom::new(
                    r.prefix.to_path(dim, &format!("{ctx}.prefix"), warnings)?,
                    point_of(&r.dir, dim, &format!("{ctx}.dir"), warnings)?,
                    r.low_dir
                        .as_ref()
                        .map(|d| point_of(d, dim, &format!("{ctx}.low_dir"), warnings))
                        .transpose()?,
                )
                .map_err(|e| bad(format!("{ctx}: {e}")))?,
            ),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrDoc {
    pub params: Vec<RatDoc>,
    pub values: Vec<RatDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub name: String,
    pub source: GeomDoc,
    pub target: GeomDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub name: String,
    /// `"residual"`, `"surgery"` or `"no-limit"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<u8>,
    /// Index into `certificate.germs` for surgery and no-limit blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub germ: Option<usize>,
    pub path: PathDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairDoc {
    pub arc: String,
    pub base: String,
    pub from_slot: usize,
    pub to_slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermDoc {
    pub arc: String,
    pub base: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub class: usize,
    pub slot: usize,
    pub v: RatDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<RatDoc>>,
    pub thresholds: Vec<RatDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n_classes: usize,
    pub base_dim: usize,
    pub u: RatDoc,
    #[serde(rename = "R")]
    pub r: RatDoc,
    pub repairs: Vec<RepairDoc>,
    pub checks: Vec<String>,
    pub germs: Vec<GermDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorDoc {
    pub ray: String,
    pub point: Vec<RatDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingDocument {
    pub ambient_dim: usize,
    pub blocks: Vec<BlockDoc>,
    pub map: Vec<PieceDoc>,
    pub certificate: CertificateDoc,
    pub source_shift: Vec<RatDoc>,
    /// Anchor points of unbounded rays; empty for bounded instances.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<AnchorDoc>,
}

fn kind_rank(kind: &BlockKind) -> u8 {
    match kind {
        BlockKind::Residual => 0,
        BlockKind::Surgery { .. } => 1,
        BlockKind::NoLimit { .. } => 2,
    }
}

fn block_docs(blocks: &[Block], germs: &[GermRecord]) -> Vec<BlockDoc> {
    // sorted by block kind, then by name (which embeds the germ base)
    let mut sorted: Vec<&Block> = blocks.iter().collect();
    sorted.sort_by(|a, b| (kind_rank(&a.kind), &a.name).cmp(&(kind_rank(&b.kind), &b.name)));
    let germ_index = |gi: usize| -> Option<usize> {
        // block kinds index into the germ table; certificate rows only
        // carry treated germs, so match by arc id
        germs.iter().position(|g| {
            blocks.iter().any(|b| match &b.kind {
                BlockKind::Surgery { germ, .. } | BlockKind::NoLimit { germ } => {
                    *germ == gi && b.name.contains(&format!("{}@{}", g.arc_id, g.base_id))
                }
                BlockKind::Residual => false,
            })
        })
    };
    sorted
        .into_iter()
        .map(|b| {
            let (kind, branch, germ) = match &b.kind {
                BlockKind::Residual => ("residual", None, None),
                BlockKind::Surgery { germ, branch } => {
                    ("surgery", Some(*branch), germ_index(*germ))
                }
                BlockKind::NoLimit { germ } => ("no-limit", None, germ_index(*germ)),
            };
            BlockDoc {
                name: b.name.clone(),
                kind: kind.into(),
                branch,
                germ,
                path: PathDoc::of(&b.path),
            }
        })
        .collect()
}

fn piece_docs(map: &PLMapping) -> Vec<PieceDoc> {
    map.pieces
        .iter()
        .map(|p| PieceDoc {
            name: p.name.clone(),
            source: GeomDoc::of(&p.source),
            target: GeomDoc::of(&p.target),
            corr: p.corr.as_ref().map(|f| CorrDoc {
                params: f.params().iter().map(RatDoc::of).collect(),
                values: f.values().iter().map(RatDoc::of).collect(),
            }),
        })
        .collect()
}

fn certificate_doc(emb: &EmbeddedSpace, checks: Vec<String>) -> CertificateDoc {
    CertificateDoc {
        k: emb.k,
        n_classes: emb.n_classes,
        base_dim: emb.n,
        u: RatDoc::of(&emb.u),
        r: RatDoc::of(&emb.r),
        repairs: emb
            .repairs
            .iter()
            .map(|r| RepairDoc {
                arc: r.arc_id.clone(),
                base: r.base_id.clone(),
                from_slot: r.from_slot,
                to_slot: r.to_slot,
            })
            .collect(),
        checks,
        germs: emb
            .germs
            .iter()
            .map(|g| GermDoc {
                arc: g.arc_id.clone(),
                base: g.base_id.clone(),
                target: g.target_id.clone(),
                class: g.class,
                slot: g.slot,
                v: RatDoc::of(&g.v),
                q: g.q.as_ref().map(rats_of),
                thresholds: g.thresholds.iter().map(RatDoc::of).collect(),
            })
            .collect(),
    }
}

fn shift_doc(space: &SpaceDescription) -> Vec<RatDoc> {
    match &space.shift {
        Some(p) => rats_of(p),
        None => vec![RatDoc::of(&Scalar::zero()); space.n],
    }
}

pub fn embedding_to_document(emb: &EmbeddedSpace) -> EmbeddingDocument {
    let checks = vec![
        "structural-validation".into(),
        "affineness-criterion".into(),
        "germ-table".into(),
        "collision-scan".into(),
        "dimension-law".into(),
    ];
    EmbeddingDocument {
        ambient_dim: emb.ambient,
        blocks: block_docs(&emb.blocks, &emb.germs),
        map: piece_docs(&emb.map),
        certificate: certificate_doc(emb, checks),
        source_shift: shift_doc(&emb.space),
        anchors: Vec::new(),
    }
}

pub fn unbounded_to_document(emb: &UnboundedEmbedding) -> EmbeddingDocument {
    let checks = vec![
        "structural-validation".into(),
        "ray-validation".into(),
        "affineness-criterion".into(),
        "germ-table".into(),
        "collision-scan".into(),
        "dimension-law".into(),
    ];
    EmbeddingDocument {
        ambient_dim: emb.ambient,
        blocks: block_docs(&emb.core.blocks, &emb.core.germs),
        map: piece_docs(&emb.map),
        certificate: certificate_doc(&emb.core, checks),
        source_shift: shift_doc(&emb.core.space),
        anchors: emb
            .anchors
            .iter()
            .map(|(ray, p)| AnchorDoc {
                ray: ray.clone(),
                point: rats_of(p),
            })
            .collect(),
    }
}

pub fn render_embedding(doc: &EmbeddingDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("serializable document");
    out.push('\n');
    out
}

pub fn parse_embedding(text: &str) -> Result<EmbeddingDocument, IoError> {
    Ok(serde_json::from_str(text)?)
}

fn cert_records(
    cert: &CertificateDoc,
    n: usize,
    warnings: &mut Vec<String>,
) -> Result<(Vec<GermRecord>, Vec<RepairRecord>), IoError> {
    let germs = cert
        .germs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let ctx = format!("certificate.germs[{i}]");
            Ok(GermRecord {
                arc_id: g.arc.clone(),
                base_id: g.base.clone(),
                target_id: g.target.clone(),
                class: g.class,
                slot: g.slot,
                v: g.v.to_scalar(&format!("{ctx}.v"), warnings)?,
                q: g
                    .q
                    .as_ref()
                    .map(|q| point_of(q, n, &format!("{ctx}.q"), warnings))
                    .transpose()?,
                thresholds: g
                    .thresholds
                    .iter()
                    .enumerate()
                    .map(|(j, t)| t.to_scalar(&format!("{ctx}.thresholds[{j}]"), warnings))
                    .collect::<Result<Vec<_>, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let repairs = cert
        .repairs
        .iter()
        .map(|r| RepairRecord {
            arc_id: r.arc.clone(),
            base_id: r.base.clone(),
            from_slot: r.from_slot,
            to_slot: r.to_slot,
        })
        .collect();
    Ok((germs, repairs))
}

fn pieces_from_docs(
    docs: &[PieceDoc],
    source_dim: usize,
    target_dim: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<MapPiece>, IoError> {
    docs.iter()
        .map(|p| {
            let ctx = format!("map[{}]", p.name);
            Ok(MapPiece {
                name: p.name.clone(),
                source: p
                    .source
                    .to_geom(source_dim, &format!("{ctx}.source"), warnings)?,
                target: p
                    .target
                    .to_geom(target_dim, &format!("{ctx}.target"), warnings)?,
                corr: p
                    .corr
                    .as_ref()
                    .map(|c| {
                        let params = c
                            .params
                            .iter()
                            .enumerate()
                            .map(|(i, v)| {
                                v.to_scalar(&format!("{ctx}.corr.params[{i}]"), warnings)
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        let values = c
                            .values
                            .iter()
                            .enumerate()
                            .map(|(i, v)| {
                                v.to_scalar(&format!("{ctx}.corr.values[{i}]"), warnings)
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        PLFunction::new(params, values).map_err(|e| bad(format!("{ctx}: {e}")))
                    })
                    .transpose()?,
            })
        })
        .collect()
}

fn blocks_from_docs(
    docs: &[BlockDoc],
    ambient: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<Block>, IoError> {
    docs.iter()
        .map(|b| {
            let kind = match b.kind.as_str() {
                "residual" => BlockKind::Residual,
                "surgery" => BlockKind::Surgery {
                    germ: b.germ.unwrap_or(0),
                    branch: b.branch.unwrap_or(1),
                },
                "no-limit" => BlockKind::NoLimit {
                    germ: b.germ.unwrap_or(0),
                },
                other => return Err(bad(format!("blocks[{}]: unknown kind {other:?}", b.name))),
            };
            Ok(Block {
                name: b.name.clone(),
                kind,
                path: b
                    .path
                    .to_path(ambient, &format!("blocks[{}]", b.name), warnings)?,
            })
        })
        .collect()
}

/// Reconstructs a bounded embedding from its document against the instance
/// it was produced from. The instance is re-normalized; the recorded
/// `source_shift` must match.
pub fn document_to_embedding(
    space: &SpaceDescription,
    doc: &EmbeddingDocument,
) -> Result<EmbeddedSpace, IoError> {
    let mut warnings = Vec::new();
    let space = if space.r.is_some() {
        space.clone()
    } else {
        crate::space::normalize_shift(space)
    };
    let n = doc.certificate.base_dim;
    if n != space.n {
        return Err(bad(format!(
            "certificate.base_dim {} does not match the instance dimension {}",
            n, space.n
        )));
    }
    let recorded = point_of(&doc.source_shift, n, "source_shift", &mut warnings)?;
    let actual = space
        .shift
        .clone()
        .unwrap_or_else(|| Point::origin(n));
    if recorded != actual {
        return Err(bad(format!(
            "source_shift {recorded:?} does not match the instance normalization {actual:?}"
        )));
    }
    let (germs, repairs) = cert_records(&doc.certificate, n, &mut warnings)?;
    let blocks = blocks_from_docs(&doc.blocks, doc.ambient_dim, &mut warnings)?;
    let pieces = pieces_from_docs(&doc.map, n, doc.ambient_dim, &mut warnings)?;
    Ok(EmbeddedSpace {
        space,
        n,
        ambient: doc.ambient_dim,
        k: doc.certificate.k,
        n_classes: doc.certificate.n_classes,
        u: doc.certificate.u.to_scalar("certificate.u", &mut warnings)?,
        r: doc.certificate.r.to_scalar("certificate.R", &mut warnings)?,
        blocks,
        map: PLMapping {
            pieces,
            source_dim: n,
            target_dim: doc.ambient_dim,
        },
        germs,
        repairs,
    })
}

/// Reconstructs an unbounded embedding from its document. Core map pieces
/// are recovered by dropping the appended zero coordinate from non-ray
/// targets.
pub fn document_to_unbounded(
    ext: &ExtendedSpace,
    doc: &EmbeddingDocument,
) -> Result<UnboundedEmbedding, IoError> {
    let mut warnings = Vec::new();
    let n = doc.certificate.base_dim;
    let core_ambient = doc
        .ambient_dim
        .checked_sub(1)
        .ok_or_else(|| bad("ambient_dim of an unbounded embedding must be positive"))?;
    let full_pieces = pieces_from_docs(&doc.map, n, doc.ambient_dim, &mut warnings)?;
    let drop_last = |p: &Point| -> Point { Point(p.coords()[..core_ambient].to_vec()) };
    let mut core_pieces = Vec::new();
    let mut anchors = Vec::new();
    for (piece, docp) in full_pieces.iter().zip(&doc.map) {
        if matches!(piece.source, PieceGeom::Ray(_)) {
            continue;
        }
        let target = match &piece.target {
            PieceGeom::Point(p) => {
                if !p.coords()[core_ambient].is_zero() {
                    return Err(bad(format!(
                        "map[{}]: core target has a nonzero final coordinate",
                        docp.name
                    )));
                }
                PieceGeom::Point(drop_last(p))
            }
            PieceGeom::Path(p) => {
                if p.vertices().iter().any(|v| !v.coords()[core_ambient].is_zero()) {
                    return Err(bad(format!(
                        "map[{}]: core target has a nonzero final coordinate",
                        docp.name
                    )));
                }
                PieceGeom::Path(p.map_vertices(&drop_last))
            }
            PieceGeom::Ray(_) => {
                return Err(bad(format!(
                    "map[{}]: bounded source with a ray target",
                    docp.name
                )))
            }
        };
        core_pieces.push(MapPiece {
            name: piece.name.clone(),
            source: piece.source.clone(),
            target,
            corr: piece.corr.clone(),
        });
    }
    for a in &doc.anchors {
        anchors.push((
            a.ray.clone(),
            point_of(
                &a.point,
                core_ambient,
                &format!("anchors[{}]", a.ray),
                &mut warnings,
            )?,
        ));
    }

    let core_doc = EmbeddingDocument {
        ambient_dim: core_ambient,
        blocks: doc.blocks.clone(),
        map: Vec::new(),
        certificate: doc.certificate.clone(),
        source_shift: doc.source_shift.clone(),
        anchors: Vec::new(),
    };
    let mut core = document_to_embedding(&ext.core, &core_doc)?;
    core.map = PLMapping {
        pieces: core_pieces,
        source_dim: n,
        target_dim: core_ambient,
    };
    Ok(UnboundedEmbedding {
        core,
        ambient: doc.ambient_dim,
        map: PLMapping {
            pieces: full_pieces,
            source_dim: n,
            target_dim: doc.ambient_dim,
        },
        anchors,
    })
}

/// Reads an embedding document back as an affine instance: blocks become
/// points and arcs of a new space with no re-gluing.
pub fn embedding_to_instance(doc: &EmbeddingDocument) -> Result<InstanceDocument, IoError> {
    let mut warnings = Vec::new();
    let ambient = doc.ambient_dim;
    let mut points: Vec<PointDoc> = Vec::new();
    let mut arcs: Vec<ArcDoc> = Vec::new();
    let mut coords_seen: Vec<(Point, String)> = Vec::new();
    let mut fresh = 0usize;

    let mut intern = |p: &Point,
                      in_x: bool,
                      id_hint: Option<&str>,
                      coords_seen: &mut Vec<(Point, String)>,
                      points: &mut Vec<PointDoc>|
     -> String {
        if let Some((_, id)) = coords_seen.iter().find(|(q, _)| q == p) {
            return id.clone();
        }
        let id = match id_hint {
            Some(h) => h.to_string(),
            None => {
                fresh += 1;
                format!("y{fresh}")
            }
        };
        coords_seen.push((p.clone(), id.clone()));
        points.push(PointDoc {
            id: id.clone(),
            coords: rats_of(p),
            in_x,
            in_g: false,
        });
        id
    };

    for b in &doc.blocks {
        let path = b
            .path
            .to_path(ambient, &format!("blocks[{}]", b.name), &mut warnings)?;
        if path.is_point() {
            let hint = b.name.strip_prefix("point:").map(|s| s.to_string());
            intern(
                &path.vertices()[0],
                true,
                hint.as_deref(),
                &mut coords_seen,
                &mut points,
            );
            continue;
        }
        let mut ends = Vec::new();
        for (vertex, open) in [
            (path.vertices().first().unwrap(), path.left_open),
            (path.vertices().last().unwrap(), path.right_open),
        ] {
            let id = intern(vertex, !open, None, &mut coords_seen, &mut points);
            ends.push(EndDoc {
                limit: id,
                member: !open,
                tau: TauDoc::Name(if open { "none".into() } else { "affine".into() }),
            });
        }
        arcs.push(ArcDoc {
            id: format!("arc:{}", b.name),
            vertices: path.vertices().iter().map(rats_of).collect(),
            params: Some(path.params().iter().map(RatDoc::of).collect()),
            ends,
        });
    }

    Ok(InstanceDocument {
        ambient_dim: ambient,
        scale_r: None,
        points,
        arcs,
        unbounded_arcs: Vec::new(),
        declared_k: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"ambient_dim": 1, "points": [], "arcs": [], "bogus": 3}"#;
        assert!(matches!(parse_instance(text), Err(IoError::Json(_))));
    }

    #[test]
    fn canonicalizes_non_reduced_rationals_with_a_note() {
        let text = r#"{
            "ambient_dim": 1,
            "points": [{"id": "p", "coords": ["2/4"], "in_X": true, "in_G": false}],
            "arcs": []
        }"#;
        let (inst, warnings) = parse_instance(text).unwrap();
        assert_eq!(
            inst.core().points[0].coords.coords()[0],
            Scalar::ratio(1, 2)
        );
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("2/4"));
    }

    #[test]
    fn integer_shorthand_is_accepted() {
        let text = r#"{
            "ambient_dim": 1,
            "points": [{"id": "p", "coords": [3], "in_X": true, "in_G": false}],
            "arcs": []
        }"#;
        let (inst, warnings) = parse_instance(text).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(inst.core().points[0].coords.coords()[0], Scalar::from_int(3));
    }

    #[test]
    fn instance_round_trip_is_stable() {
        let text = r#"{
            "ambient_dim": 1,
            "scale_R": "16",
            "points": [
                {"id": "g", "coords": ["1"], "in_X": true, "in_G": true},
                {"id": "e", "coords": ["9"], "in_X": false, "in_G": false}
            ],
            "arcs": [{
                "id": "a",
                "vertices": [["1"], ["9"]],
                "ends": [
                    {"limit": "g", "member": true, "tau": "affine"},
                    {"limit": "e", "member": false, "tau": {"glue": "g"}}
                ]
            }]
        }"#;
        let (inst, _) = parse_instance(text).unwrap();
        let rendered = render_instance(&inst);
        let (again, warnings) = parse_instance(&rendered).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(render_instance(&again), rendered);
    }

    #[test]
    fn floats_are_rejected() {
        let text = r#"{
            "ambient_dim": 1,
            "points": [{"id": "p", "coords": [0.5], "in_X": true, "in_G": false}],
            "arcs": []
        }"#;
        assert!(parse_instance(text).is_err());
    }
}
