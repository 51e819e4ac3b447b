//! Serialized decomposition traces.

use std::path::Path;

use hypertess::decompose::{leaf_density, DecompositionTrace};
use hypertess::hyperball::Clearance;
use hypertess::polytope::FacetTag;
use hypertess::volume::polytope_volume;
use hypertess::HVec4;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scene::VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub version: u32,
    pub summary: Summary,
    pub vertex: [f64; 4],
    pub balls: Vec<BallRecord>,
    /// Distinct cut planes by pole; nodes refer to them by index.
    pub cut_planes: Vec<[f64; 4]>,
    pub nodes: Vec<NodeRecord>,
    pub leaves: Vec<LeafRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub initial_n: usize,
    /// Distinct cut planes.
    pub cuts: usize,
    /// Split operations; a plane can split more than one node.
    pub splits: usize,
    pub leaves: usize,
    pub all_leaves_tt: bool,
    pub lemma_passed: bool,
    pub height: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallRecord {
    pub label: String,
    pub pole: [f64; 4],
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub n: usize,
    pub split: Option<SplitRecord>,
    pub leaf: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub cut: usize,
    /// The outer point whose polar is the cut.
    pub point: [f64; 4],
    pub ball_ids: Vec<usize>,
    pub children: [usize; 2],
    pub lemma: LemmaRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaRecord {
    pub passed: bool,
    /// Smallest gap between the cut and a ball it must avoid; `null` when there is none.
    pub min_margin: Option<f64>,
    pub incident: Vec<ClearanceRecord>,
    pub other: Vec<ClearanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClearanceRecord {
    Disjoint { margin: f64 },
    Tangent,
    Intersecting,
}

impl From<&Clearance> for ClearanceRecord {
    fn from(c: &Clearance) -> Self {
        match c {
            Clearance::Disjoint(margin) => ClearanceRecord::Disjoint { margin: *margin },
            Clearance::Tangent => ClearanceRecord::Tangent,
            Clearance::Intersecting => ClearanceRecord::Intersecting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafRecord {
    pub node: usize,
    /// Homogeneous vertex coordinates.
    pub vertices: Vec<[f64; 4]>,
    pub facets: Vec<FacetRecord>,
    pub truncations: usize,
    pub volume: f64,
    /// Hyperball share of the leaf; `null` when the base facets are not pairwise separated.
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetRecord {
    /// `base`, `polar` or `cut`.
    pub kind: String,
    pub id: usize,
    pub pole: [f64; 4],
    /// Side of the plane containing the leaf: `sign * <pole, x> >= 0`.
    pub sign: f64,
    /// Vertex indices, cyclically ordered.
    pub vertices: Vec<usize>,
}

fn arr(x: &HVec4) -> [f64; 4] {
    x.to_array()
}

impl TraceFile {
    pub fn from_trace(
        trace: &DecompositionTrace,
        vertex: &HVec4,
        tol: f64,
    ) -> Result<TraceFile, CliError> {
        let height = trace.balls.height();
        let balls = trace
            .balls
            .balls
            .iter()
            .zip(&trace.balls.labels)
            .map(|(b, l)| BallRecord {
                label: l.clone(),
                pole: arr(&b.base.pole()),
                height: b.height,
            })
            .collect();
        let nodes = trace
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                parent: n.parent,
                depth: n.depth,
                n: n.n,
                leaf: n.leaf,
                split: n.split.as_ref().map(|s| SplitRecord {
                    cut: s.cut_id,
                    point: arr(&s.point.point),
                    ball_ids: s.point.ball_ids.clone(),
                    children: s.children,
                    lemma: LemmaRecord {
                        passed: s.lemma.passed,
                        min_margin: Some(s.lemma.min_margin).filter(|m| m.is_finite()),
                        incident: s.lemma.incident.iter().map(Into::into).collect(),
                        other: s.lemma.other.iter().map(Into::into).collect(),
                    },
                }),
            })
            .collect();
        let mut leaves = Vec::with_capacity(trace.leaves.len());
        for (node, leaf) in trace.leaf_nodes().zip(&trace.leaves) {
            let p = &leaf.polyhedron;
            let facets = p
                .halfspaces()
                .iter()
                .enumerate()
                .map(|(f, h)| {
                    let (kind, id) = match h.tag {
                        FacetTag::Base(i) => ("base", i),
                        FacetTag::PolarOfOuterVertex(i) => ("polar", i),
                        FacetTag::Cut(i) => ("cut", i),
                    };
                    FacetRecord {
                        kind: kind.to_string(),
                        id,
                        pole: arr(&h.plane.pole()),
                        sign: h.sign,
                        vertices: p.facet_vertices(f).to_vec(),
                    }
                })
                .collect();
            let volume = polytope_volume(p, tol)?.value;
            let density = match height {
                Some(h) => leaf_density(leaf, h, tol)?,
                None => None,
            };
            leaves.push(LeafRecord {
                node: node.id,
                vertices: p.vertices().iter().map(|v| arr(&v.point)).collect(),
                facets,
                truncations: leaf.truncation_count(),
                volume,
                density,
            });
        }
        Ok(TraceFile {
            version: VERSION,
            summary: Summary {
                initial_n: trace.root().n,
                cuts: trace.cut_count(),
                splits: trace.split_count(),
                leaves: trace.leaves.len(),
                all_leaves_tt: trace.leaf_nodes().count() == trace.leaves.len(),
                lemma_passed: trace.all_lemmas_pass(),
                height,
            },
            vertex: arr(vertex),
            balls,
            cut_planes: trace.cut_planes.iter().map(|p| arr(&p.pole())).collect(),
            nodes,
            leaves,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }
}

pub fn parse_trace(text: &str) -> Result<TraceFile, String> {
    let t: TraceFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if t.version != VERSION {
        return Err(format!("unsupported version {}", t.version));
    }
    Ok(t)
}

pub fn read_trace(path: &Path) -> Result<TraceFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace(&text).map_err(|message| CliError::Parse {
        path: path.display().to_string(),
        message,
    })
}
