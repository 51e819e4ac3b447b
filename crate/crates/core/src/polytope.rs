//! Compact convex polyhedra of the projective model.
//!
//! A polyhedron is an intersection of tagged halfspaces together with a strictly interior
//! proper point. Vertex enumeration runs in the chart obtained by moving the interior point
//! to the model center, where the polyhedron is an ordinary bounded convex polytope. Points
//! that only matter projectively (outer incidence points, which may sit on the ideal plane of
//! any chart) are computed homogeneously.
//!
//! Facet tags record where each bounding plane came from: a hyperball base plane, the polar
//! plane of an outer vertex (truncation), or a polar cut made during decomposition.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::lorentz::{
    classify, compare_to_zero, incident, intersect_three, minkowski, polar, GeometryError, HVec4,
    Isometry, Plane, PointClass, DEGENERATE_RATIO, EPS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolytopeError {
    #[error("interior point is not strictly inside every halfspace (halfspace {0})")]
    EmptyInterior(usize),
    #[error("halfspace intersection is unbounded in the chart centered at the interior point")]
    UnboundedPolyhedron,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("facet id {0} is invalid")]
    BadFacetId(usize),
    #[error("polar plane of outer vertex {0} passes through the interior point")]
    PolarThroughInterior(usize),
    #[error("vertex {0} lies on the absolute and cannot be truncated")]
    IdealVertex(usize),
    #[error("truncation left {0} non-proper vertices")]
    OuterVertexAfterTruncation(usize),
    #[error("cut plane does not strictly separate any two vertices")]
    CutMissesPolyhedron,
    #[error("inconsistent incidence lattice: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacetTag {
    /// Base plane of the hyperball with this index.
    Base(usize),
    /// Polar plane of the outer vertex with this index (in the polyhedron that was truncated).
    PolarOfOuterVertex(usize),
    /// Polar cut with this id.
    Cut(usize),
}

impl FacetTag {
    pub fn is_base(&self) -> bool {
        matches!(self, FacetTag::Base(_))
    }

    pub fn base_id(&self) -> Option<usize> {
        match self {
            FacetTag::Base(i) => Some(*i),
            _ => None,
        }
    }
}

/// `{x : sign * <pole, x> >= 0}` for representatives oriented like the interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub plane: Plane,
    pub tag: FacetTag,
    /// `+1` or `-1`.
    pub sign: f64,
}

impl HalfSpace {
    /// The side of `plane` containing `interior` (which must not lie on the plane).
    pub fn toward(plane: Plane, tag: FacetTag, interior: &HVec4) -> Option<HalfSpace> {
        let x = orient(interior, interior);
        match compare_to_zero(plane.eval(&x), x.norm() * plane.pole().norm()) {
            Ordering::Greater => Some(HalfSpace {
                plane,
                tag,
                sign: 1.0,
            }),
            Ordering::Less => Some(HalfSpace {
                plane,
                tag,
                sign: -1.0,
            }),
            Ordering::Equal => None,
        }
    }

    /// Signed value, positive inside, for a representative already oriented.
    #[inline]
    pub fn value(&self, x: &HVec4) -> f64 {
        self.sign * self.plane.eval(x)
    }
}

/// Representative of `x` on the same side of the interior point's polar as the interior point,
/// i.e. with `<x, interior> <= 0`.
fn orient(x: &HVec4, interior: &HVec4) -> HVec4 {
    let s = minkowski(x, interior) * interior.c(0).signum();
    if s > 0.0 {
        x.neg()
    } else {
        *x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    /// Homogeneous coordinates oriented like the interior point.
    pub point: HVec4,
    pub class: PointClass,
    /// Incident facet indices, ascending.
    pub facets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ConvexPolyhedron {
    halfspaces: Vec<HalfSpace>,
    vertices: Vec<Vertex>,
    /// Per facet, vertex indices in counter-clockwise order seen from outside.
    facet_vertices: Vec<Vec<usize>>,
    interior: HVec4,
    frame: Isometry,
    chart: Vec<Vector3<f64>>,
}

/// Affine form `a . x <= b` of a halfspace in the centered chart.
#[derive(Debug, Clone, Copy)]
struct AffineHalfSpace {
    a: Vector3<f64>,
    b: f64,
    /// Euclidean norm of the homogeneous coefficient vector.
    scale: f64,
}

impl AffineHalfSpace {
    fn from_halfspace(h: &HalfSpace, frame: &Isometry) -> Self {
        let e = frame.apply(&h.plane.pole());
        // inside: sign * (-e0 + n . x) >= 0  <=>  (-sign n) . x <= -sign e0
        let n = Vector3::new(e.c(1), e.c(2), e.c(3));
        let a = -h.sign * n;
        let b = -h.sign * e.c(0);
        AffineHalfSpace {
            a,
            b,
            scale: (a.norm_squared() + b * b).sqrt(),
        }
    }

    #[inline]
    fn slack(&self, x: &Vector3<f64>) -> f64 {
        self.b - self.a.dot(x)
    }

    #[inline]
    fn tol(&self, x: &Vector3<f64>) -> f64 {
        EPS * self.scale * (1.0 + x.norm_squared()).sqrt()
    }
}

pub fn build_polyhedron(
    halfspaces: Vec<HalfSpace>,
    interior: HVec4,
) -> Result<ConvexPolyhedron, PolytopeError> {
    let interior = interior.normalized_proper()?;
    for (i, h) in halfspaces.iter().enumerate() {
        if compare_to_zero(h.value(&interior), interior.norm() * h.plane.pole().norm())
            != Ordering::Greater
        {
            return Err(PolytopeError::EmptyInterior(i));
        }
    }
    for i in 0..halfspaces.len() {
        for j in (i + 1)..halfspaces.len() {
            if halfspaces[i].plane.same_plane(&halfspaces[j].plane) {
                return Err(PolytopeError::DegenerateInput(format!(
                    "halfspaces {i} and {j} share a plane"
                )));
            }
        }
    }
    let frame = Isometry::to_origin(&interior)?;
    let affine: Vec<AffineHalfSpace> = halfspaces
        .iter()
        .map(|h| AffineHalfSpace::from_halfspace(h, &frame))
        .collect();
    if !is_bounded(&affine) {
        return Err(PolytopeError::UnboundedPolyhedron);
    }

    // vertex enumeration over all triples
    let mut points: Vec<Vector3<f64>> = Vec::new();
    let n = affine.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (p, q, r) = (&affine[i], &affine[j], &affine[k]);
                let m = Matrix3::from_rows(&[p.a.transpose(), q.a.transpose(), r.a.transpose()]);
                let det = m.determinant();
                if det.abs() <= DEGENERATE_RATIO * p.a.norm() * q.a.norm() * r.a.norm() {
                    continue;
                }
                let Some(x) = m.lu().solve(&Vector3::new(p.b, q.b, r.b)) else {
                    continue;
                };
                if affine.iter().all(|h| h.slack(&x) >= -h.tol(&x)) {
                    if !points
                        .iter()
                        .any(|y| (y - x).norm() <= 1e-8 * (1.0 + x.norm()))
                    {
                        points.push(x);
                    }
                }
            }
        }
    }
    if points.len() < 4 {
        return Err(PolytopeError::Inconsistent(format!(
            "only {} vertices found",
            points.len()
        )));
    }

    // facets: halfspaces touched by a 2-dimensional set of vertices
    let touching = |h: &AffineHalfSpace| -> Vec<usize> {
        (0..points.len())
            .filter(|&v| h.slack(&points[v]).abs() <= 10.0 * h.tol(&points[v]))
            .collect()
    };
    let mut kept_hs = Vec::new();
    let mut kept_aff = Vec::new();
    let mut facet_sets = Vec::new();
    for (h, a) in halfspaces.iter().zip(&affine) {
        let vs = touching(a);
        if spans_polygon(&vs, &points) {
            kept_hs.push(*h);
            kept_aff.push(*a);
            facet_sets.push(vs);
        }
    }

    let inverse = frame.inverse();
    let mut vertices: Vec<Vertex> = points
        .iter()
        .map(|x| {
            let point = inverse.apply(&HVec4::from_chart(*x));
            Vertex {
                point,
                class: classify(&point),
                facets: Vec::new(),
            }
        })
        .collect();
    for (f, vs) in facet_sets.iter().enumerate() {
        for &v in vs {
            vertices[v].facets.push(f);
        }
    }
    if let Some((v, _)) = vertices
        .iter()
        .enumerate()
        .find(|(_, v)| v.facets.len() < 3)
    {
        return Err(PolytopeError::Inconsistent(format!(
            "vertex {v} has fewer than 3 facets"
        )));
    }

    let facet_vertices: Vec<Vec<usize>> = facet_sets
        .iter()
        .zip(&kept_aff)
        .map(|(vs, a)| order_polygon(vs, &points, &a.a))
        .collect();

    let poly = ConvexPolyhedron {
        halfspaces: kept_hs,
        vertices,
        facet_vertices,
        interior,
        frame,
        chart: points,
    };
    let chi = poly.euler_characteristic();
    if chi != 2 {
        return Err(PolytopeError::Inconsistent(format!(
            "Euler characteristic {chi}"
        )));
    }
    Ok(poly)
}

/// The recession cone `{x : a_i . x <= 0}` is trivial. Normals must span space, and no
/// candidate extreme ray (a crossing of two boundary planes) may satisfy all constraints.
fn is_bounded(hs: &[AffineHalfSpace]) -> bool {
    if hs.len() < 4 {
        return false;
    }
    let normals: Vec<Vector3<f64>> = hs.iter().map(|h| h.a / h.a.norm()).collect();
    let rank_ok = (0..normals.len()).any(|i| {
        (i + 1..normals.len()).any(|j| {
            (j + 1..normals.len())
                .any(|k| normals[i].dot(&normals[j].cross(&normals[k])).abs() > 1e-9)
        })
    });
    if !rank_ok {
        return false;
    }
    for i in 0..normals.len() {
        for j in (i + 1)..normals.len() {
            let d = normals[i].cross(&normals[j]);
            if d.norm() < 1e-12 {
                continue;
            }
            let d = d / d.norm();
            for ray in [d, -d] {
                if normals.iter().all(|n| n.dot(&ray) <= 1e-12) {
                    return false;
                }
            }
        }
    }
    true
}

fn spans_polygon(vs: &[usize], pts: &[Vector3<f64>]) -> bool {
    if vs.len() < 3 {
        return false;
    }
    let p0 = pts[vs[0]];
    let mut best = 0.0f64;
    for &a in &vs[1..] {
        for &b in &vs[1..] {
            best = best.max((pts[a] - p0).cross(&(pts[b] - p0)).norm());
        }
    }
    best > 1e-12
}

/// Sort polygon vertices counter-clockwise around the outward normal.
fn order_polygon(vs: &[usize], pts: &[Vector3<f64>], normal: &Vector3<f64>) -> Vec<usize> {
    let n = normal.normalize();
    let c: Vector3<f64> = vs.iter().map(|&v| pts[v]).sum::<Vector3<f64>>() / vs.len() as f64;
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = n.cross(&helper).normalize();
    let w = n.cross(&u);
    let mut keyed: Vec<(f64, usize)> = vs
        .iter()
        .map(|&v| {
            let d = pts[v] - c;
            (d.dot(&w).atan2(d.dot(&u)), v)
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    keyed.into_iter().map(|(_, v)| v).collect()
}

impl ConvexPolyhedron {
    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn facet_count(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn facet_vertices(&self, f: usize) -> &[usize] {
        &self.facet_vertices[f]
    }

    pub fn interior_point(&self) -> HVec4 {
        self.interior
    }

    /// Isometry taking the interior point to the model center.
    pub fn frame(&self) -> &Isometry {
        &self.frame
    }

    /// Vertex coordinates in the chart centered at the interior point.
    pub fn centered_chart(&self) -> &[Vector3<f64>] {
        &self.chart
    }

    /// Outward unit normal and offset `(n, d)` of facet `f` in the centered chart (`n . x <= d`).
    pub fn centered_facet_plane(&self, f: usize) -> (Vector3<f64>, f64) {
        let a = AffineHalfSpace::from_halfspace(&self.halfspaces[f], &self.frame);
        let s = a.a.norm();
        (a.a / s, a.b / s)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.vertices.len() {
            for v in (u + 1)..self.vertices.len() {
                let shared = self.vertices[u]
                    .facets
                    .iter()
                    .filter(|f| self.vertices[v].facets.contains(f))
                    .count();
                if shared >= 2 {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.halfspaces.len() as i64
    }

    /// Closed membership test for any projective point representable in the centered chart.
    pub fn contains(&self, x: &HVec4) -> bool {
        let y = orient(x, &self.interior);
        self.halfspaces.iter().all(|h| {
            compare_to_zero(h.value(&y), y.norm() * h.plane.pole().norm()) != Ordering::Less
        })
    }

    pub fn base_facets(&self) -> Vec<usize> {
        (0..self.halfspaces.len())
            .filter(|&f| self.halfspaces[f].tag.is_base())
            .collect()
    }

    pub fn facet_with_tag(&self, tag: FacetTag) -> Option<usize> {
        self.halfspaces.iter().position(|h| h.tag == tag)
    }

    /// Index of a facet whose plane coincides with `p`.
    pub fn facet_on_plane(&self, p: &Plane) -> Option<usize> {
        self.halfspaces.iter().position(|h| h.plane.same_plane(p))
    }

    /// Signed side of each vertex relative to `p`: `Greater`, `Less`, or `Equal` (on the plane).
    pub fn vertex_sides(&self, p: &Plane) -> Vec<Ordering> {
        self.vertices
            .iter()
            .map(|v| compare_to_zero(p.eval(&v.point), v.point.norm() * p.pole().norm()))
            .collect()
    }

    /// `p` has vertices strictly on both sides.
    pub fn is_split_by(&self, p: &Plane) -> bool {
        let sides = self.vertex_sides(p);
        sides.contains(&Ordering::Greater) && sides.contains(&Ordering::Less)
    }

    /// The image under an isometry, rebuilt from the mapped halfspaces.
    pub fn transformed(&self, m: &Isometry) -> Result<ConvexPolyhedron, PolytopeError> {
        let interior = m.apply(&self.interior);
        let hs = self
            .halfspaces
            .iter()
            .map(|h| {
                let plane = m.apply_plane(&h.plane);
                HalfSpace::toward(plane, h.tag, &interior).ok_or(PolytopeError::EmptyInterior(0))
            })
            .collect::<Result<Vec<_>, _>>()?;
        build_polyhedron(hs, interior)
    }
}

pub fn facets_adjacent(p: &ConvexPolyhedron, f: usize, g: usize) -> Result<bool, PolytopeError> {
    let n = p.facet_count();
    if f >= n {
        return Err(PolytopeError::BadFacetId(f));
    }
    if g >= n || g == f {
        return Err(PolytopeError::BadFacetId(g));
    }
    Ok(p.vertices
        .iter()
        .any(|v| v.facets.contains(&f) && v.facets.contains(&g)))
}

/// An outer point where three or more base planes of a polyhedron meet away from its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterIncidencePoint {
    pub point: HVec4,
    /// Facet indices (into the polyhedron) of every base facet whose plane passes through `point`.
    pub facets: Vec<usize>,
    /// Ball ids of those facets, ascending; the ordering key for cut selection.
    pub ball_ids: Vec<usize>,
}

impl OuterIncidencePoint {
    pub fn polar_plane(&self) -> Plane {
        polar(&self.point).expect("outer incidence point is outer")
    }
}

/// All outer incidence points of `p`, sorted by their ball-id sets.
///
/// A point qualifies when it is outer, lies on at least three base facet planes with no vertex
/// of `p` common to all of them, its polar is not already a facet plane, and the polar cuts `p`.
/// Planes through one point are merged into a single entry.
pub fn outer_incidence_points(p: &ConvexPolyhedron) -> Vec<OuterIncidencePoint> {
    let base = p.base_facets();
    let mut found: Vec<OuterIncidencePoint> = Vec::new();
    let mut rejected: Vec<HVec4> = Vec::new();
    for (a, &i) in base.iter().enumerate() {
        for (b, &j) in base.iter().enumerate().skip(a + 1) {
            for &k in base.iter().skip(b + 1) {
                let hs = &p.halfspaces;
                let Some(x) = intersect_three(&hs[i].plane, &hs[j].plane, &hs[k].plane) else {
                    continue;
                };
                if classify(&x) != PointClass::Outer {
                    continue;
                }
                if found.iter().any(|o| o.point.proj_eq(&x))
                    || rejected.iter().any(|r| r.proj_eq(&x))
                {
                    continue;
                }
                let facets: Vec<usize> = base
                    .iter()
                    .copied()
                    .filter(|&f| incident(&x, &hs[f].plane))
                    .collect();
                let at_vertex = p
                    .vertices
                    .iter()
                    .any(|v| facets.iter().all(|f| v.facets.contains(f)));
                let cut = polar(&x).expect("outer");
                if at_vertex || p.facet_on_plane(&cut).is_some() || !p.is_split_by(&cut) {
                    rejected.push(x);
                    continue;
                }
                let mut ball_ids: Vec<usize> =
                    facets.iter().filter_map(|&f| hs[f].tag.base_id()).collect();
                ball_ids.sort_unstable();
                found.push(OuterIncidencePoint {
                    point: x,
                    facets,
                    ball_ids,
                });
            }
        }
    }
    found.sort_by(|a, b| a.ball_ids.cmp(&b.ball_ids));
    found
}

/// Cut off every outer vertex by its polar plane.
pub fn truncate_outer_vertices(p: &ConvexPolyhedron) -> Result<ConvexPolyhedron, PolytopeError> {
    let mut hs = p.halfspaces.clone();
    let mut any = false;
    for (vi, v) in p.vertices.iter().enumerate() {
        match v.class {
            PointClass::Proper => {}
            PointClass::Boundary => return Err(PolytopeError::IdealVertex(vi)),
            PointClass::Outer => {
                any = true;
                let plane = polar(&v.point)?;
                let h = HalfSpace::toward(plane, FacetTag::PolarOfOuterVertex(vi), &p.interior)
                    .ok_or(PolytopeError::PolarThroughInterior(vi))?;
                hs.push(h);
            }
        }
    }
    if !any {
        return Ok(p.clone());
    }
    let q = build_polyhedron(hs, p.interior)?;
    let bad = q
        .vertices
        .iter()
        .filter(|v| v.class != PointClass::Proper)
        .count();
    if bad > 0 {
        return Err(PolytopeError::OuterVertexAfterTruncation(bad));
    }
    Ok(q)
}

/// Split by `cut`; the first child lies on the side where `<pole, x> >= 0`.
pub fn split(
    p: &ConvexPolyhedron,
    cut: &Plane,
    cut_id: usize,
) -> Result<(ConvexPolyhedron, ConvexPolyhedron), PolytopeError> {
    let sides = p.vertex_sides(cut);
    if !(sides.contains(&Ordering::Greater) && sides.contains(&Ordering::Less)) {
        return Err(PolytopeError::CutMissesPolyhedron);
    }
    let values: Vec<f64> = p.vertices.iter().map(|v| cut.eval(&v.point)).collect();
    let mut crossings = Vec::new();
    for (u, v) in p.edges() {
        if sides[u] == Ordering::Greater && sides[v] == Ordering::Less
            || sides[u] == Ordering::Less && sides[v] == Ordering::Greater
        {
            let (xu, xv) = (p.vertices[u].point, p.vertices[v].point);
            let w = xv.scaled(values[u]).sub(xu.scaled(values[v]));
            let w = if values[u] > 0.0 { w } else { w.neg() };
            crossings.push(w);
        }
    }
    let child = |sign: f64| -> Result<ConvexPolyhedron, PolytopeError> {
        let want = if sign > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        let mut sum = Vector3::zeros();
        let mut count = 0.0;
        let pts = p
            .vertices
            .iter()
            .zip(&sides)
            .filter(|(_, s)| **s == want || **s == Ordering::Equal)
            .map(|(v, _)| v.point)
            .chain(crossings.iter().copied());
        for x in pts {
            let c = p
                .frame
                .apply(&x)
                .chart()
                .ok_or_else(|| PolytopeError::Inconsistent("vertex at infinity".into()))?;
            sum += c;
            count += 1.0;
        }
        let interior = p.frame.inverse().apply(&HVec4::from_chart(sum / count));
        let mut hs = p.halfspaces.clone();
        hs.push(HalfSpace {
            plane: *cut,
            tag: FacetTag::Cut(cut_id),
            sign,
        });
        build_polyhedron(hs, interior)
    };
    Ok((child(1.0)?, child(-1.0)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum NotTT {
    BaseFacetCount(usize),
    DegenerateCorner([usize; 3]),
    IdealCorner([usize; 3]),
    MissingCorner([usize; 3]),
    UntruncatedOuterCorner([usize; 3]),
    NotOrthogonal(usize),
    ExtraFacet(usize),
}

impl fmt::Display for NotTT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotTT::BaseFacetCount(n) => write!(f, "{n} base facets instead of 4"),
            NotTT::DegenerateCorner(t) => write!(f, "base facets {t:?} do not meet in a point"),
            NotTT::IdealCorner(t) => write!(f, "base facets {t:?} meet on the absolute"),
            NotTT::MissingCorner(t) => {
                write!(f, "proper corner of base facets {t:?} is not a vertex")
            }
            NotTT::UntruncatedOuterCorner(t) => {
                write!(f, "outer corner of base facets {t:?} has no polar facet")
            }
            NotTT::NotOrthogonal(g) => write!(
                f,
                "truncation facet {g} is not orthogonal to its base facets"
            ),
            NotTT::ExtraFacet(g) => {
                write!(f, "facet {g} is neither a base facet nor a corner polar")
            }
        }
    }
}

/// One of the four corners of a truncated tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub enum Corner {
    /// Proper corner that is a vertex of the polyhedron.
    Vertex(usize),
    /// Outer corner cut off by the facet with this index.
    Truncated { point: HVec4, facet: usize },
}

#[derive(Debug, Clone)]
pub struct TruncatedTetrahedron {
    pub polyhedron: ConvexPolyhedron,
    pub base_facets: [usize; 4],
    /// `corners[i]` is the corner opposite base facet `base_facets[i]`.
    pub corners: [Corner; 4],
}

impl TruncatedTetrahedron {
    pub fn polar_facets(&self) -> Vec<usize> {
        self.corners
            .iter()
            .filter_map(|c| match c {
                Corner::Truncated { facet, .. } => Some(*facet),
                Corner::Vertex(_) => None,
            })
            .collect()
    }

    pub fn truncated_vertex_points(&self) -> Vec<HVec4> {
        self.corners
            .iter()
            .filter_map(|c| match c {
                Corner::Truncated { point, .. } => Some(*point),
                Corner::Vertex(_) => None,
            })
            .collect()
    }

    pub fn truncation_count(&self) -> usize {
        self.polar_facets().len()
    }
}

pub fn classify_truncated_tetrahedron(p: &ConvexPolyhedron) -> Result<TruncatedTetrahedron, NotTT> {
    let base = p.base_facets();
    if base.len() != 4 {
        return Err(NotTT::BaseFacetCount(base.len()));
    }
    let base_facets = [base[0], base[1], base[2], base[3]];
    let mut used = vec![false; p.facet_count()];
    for &b in &base_facets {
        used[b] = true;
    }
    let mut corners = Vec::with_capacity(4);
    for skip in 0..4 {
        let t: Vec<usize> = (0..4)
            .filter(|&i| i != skip)
            .map(|i| base_facets[i])
            .collect();
        let triple = [t[0], t[1], t[2]];
        let hs = p.halfspaces();
        let Some(x) = intersect_three(&hs[t[0]].plane, &hs[t[1]].plane, &hs[t[2]].plane) else {
            return Err(NotTT::DegenerateCorner(triple));
        };
        match classify(&x) {
            PointClass::Proper => {
                let v = p
                    .vertices
                    .iter()
                    .position(|v| v.point.proj_eq(&x))
                    .ok_or(NotTT::MissingCorner(triple))?;
                corners.push(Corner::Vertex(v));
            }
            PointClass::Boundary => return Err(NotTT::IdealCorner(triple)),
            PointClass::Outer => {
                let cut = polar(&x).expect("outer");
                let g = (0..p.facet_count())
                    .find(|&g| !hs[g].tag.is_base() && hs[g].plane.same_plane(&cut))
                    .ok_or(NotTT::UntruncatedOuterCorner(triple))?;
                let e = hs[g].plane.pole();
                if t.iter()
                    .any(|&b| minkowski(&e, &hs[b].plane.pole()).abs() > 1e3 * EPS)
                {
                    return Err(NotTT::NotOrthogonal(g));
                }
                used[g] = true;
                corners.push(Corner::Truncated { point: x, facet: g });
            }
        }
    }
    if let Some(g) = used.iter().position(|u| !u) {
        return Err(NotTT::ExtraFacet(g));
    }
    let corners: [Corner; 4] = corners.try_into().expect("four corners");
    Ok(TruncatedTetrahedron {
        polyhedron: p.clone(),
        base_facets,
        corners,
    })
}

/// Box `[-lo_x, hi_x] x [-lo_y, hi_y] x [-lo_z, hi_z]` in the chart, facets tagged `Base(0..6)` in
/// the order `+x, -x, +y, -y, +z, -z`, with the model center as interior point.
pub fn chart_box(extent: [[f64; 2]; 3]) -> Result<ConvexPolyhedron, PolytopeError> {
    let mut hs = Vec::with_capacity(6);
    for (axis, [lo, hi]) in extent.iter().enumerate() {
        for (k, (dir, off)) in [(1.0, *hi), (-1.0, *lo)].into_iter().enumerate() {
            let mut n = Vector3::zeros();
            n[axis] = dir;
            let plane = Plane::from_chart_equation(n, off)?;
            let tag = FacetTag::Base(2 * axis + k);
            hs.push(
                HalfSpace::toward(plane, tag, &HVec4::origin())
                    .ok_or(PolytopeError::EmptyInterior(2 * axis + k))?,
            );
        }
    }
    build_polyhedron(hs, HVec4::origin())
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 1.2;

    fn cube() -> ConvexPolyhedron {
        let a = 1.0 / C;
        chart_box([[a, a], [a, a], [a, a]]).unwrap()
    }

    fn simplex(scale: f64) -> ConvexPolyhedron {
        let dirs = [
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
            Vector3::new(-1.0, 1.0, -1.0),
            Vector3::new(-1.0, -1.0, 1.0),
        ];
        let hs = dirs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let plane = Plane::from_chart_equation(-d.normalize(), scale).unwrap();
                HalfSpace::toward(plane, FacetTag::Base(i), &HVec4::origin()).unwrap()
            })
            .collect();
        build_polyhedron(hs, HVec4::origin()).unwrap()
    }

    #[test]
    fn cube_has_eight_outer_vertices() {
        let p = cube();
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.facet_count(), 6);
        assert_eq!(p.euler_characteristic(), 2);
        for v in p.vertices() {
            assert_eq!(v.class, PointClass::Outer);
            let c = v.point.chart().unwrap();
            for k in 0..3 {
                assert!((c[k].abs() - 1.0 / C).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_combinatorics() {
        let p = simplex(0.2);
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.edges().len(), 6);
        assert_eq!(p.facet_count(), 4);
        for f in 0..4 {
            for g in 0..4 {
                if f != g {
                    assert!(facets_adjacent(&p, f, g).unwrap());
                }
            }
        }
    }

    #[test]
    fn three_halfspaces_unbounded() {
        let hs: Vec<HalfSpace> = (0..3)
            .map(|k| {
                let mut n = Vector3::zeros();
                n[k] = 1.0;
                let plane = Plane::from_chart_equation(n, 0.5).unwrap();
                HalfSpace::toward(plane, FacetTag::Base(k), &HVec4::origin()).unwrap()
            })
            .collect();
        assert_eq!(
            build_polyhedron(hs, HVec4::origin()).unwrap_err(),
            PolytopeError::UnboundedPolyhedron
        );
    }

    #[test]
    fn interior_outside_halfspace_rejected() {
        let p = cube();
        let mut hs = p.halfspaces().to_vec();
        hs[0].sign = -hs[0].sign;
        assert!(matches!(
            build_polyhedron(hs, HVec4::origin()),
            Err(PolytopeError::EmptyInterior(0))
        ));
    }

    #[test]
    fn coincident_planes_rejected() {
        let p = cube();
        let mut hs = p.halfspaces().to_vec();
        let mut dup = hs[0];
        dup.tag = FacetTag::Base(9);
        dup.plane = Plane::from_pole(dup.plane.pole().scaled(3.0)).unwrap();
        hs.push(dup);
        assert!(matches!(
            build_polyhedron(hs, HVec4::origin()),
            Err(PolytopeError::DegenerateInput(_))
        ));
    }

    #[test]
    fn cube_adjacency() {
        let p = cube();
        let f = |t| p.facet_with_tag(FacetTag::Base(t)).unwrap();
        assert!(facets_adjacent(&p, f(0), f(2)).unwrap());
        assert!(!facets_adjacent(&p, f(0), f(1)).unwrap());
        assert_eq!(facets_adjacent(&p, 0, 0), Err(PolytopeError::BadFacetId(0)));
        assert_eq!(
            facets_adjacent(&p, 0, 17),
            Err(PolytopeError::BadFacetId(17))
        );
    }

    #[test]
    fn cube_outer_incidence_points() {
        let pts = outer_incidence_points(&cube());
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].ball_ids, vec![0, 1, 2, 3]);
        assert!(pts[0].point.proj_eq(&HVec4::new(0.0, 0.0, 0.0, 1.0)));
        assert_eq!(pts[1].ball_ids, vec![0, 1, 4, 5]);
        assert_eq!(pts[2].ball_ids, vec![2, 3, 4, 5]);
        for o in &pts {
            let cut = o.polar_plane();
            for &f in &o.facets {
                assert!(incident(&cube().halfspaces()[f].plane.pole(), &cut));
            }
        }
    }

    #[test]
    fn proper_simplex_has_no_outer_points() {
        assert!(outer_incidence_points(&simplex(0.2)).is_empty());
        // corners outer (chart radius 3 * 0.5 = 1.5), still pairwise adjacent facets
        let p = simplex(0.5);
        assert!(p.vertices().iter().all(|v| v.class == PointClass::Outer));
        assert!(outer_incidence_points(&p).is_empty());
    }

    #[test]
    fn truncated_cube() {
        let t = truncate_outer_vertices(&cube()).unwrap();
        assert_eq!(t.facet_count(), 14);
        assert_eq!(t.base_facets().len(), 6);
        assert_eq!(t.vertices().len(), 24);
        assert_eq!(t.euler_characteristic(), 2);
        assert!(t.vertices().iter().all(|v| v.class == PointClass::Proper));
        // base facets are now pairwise separated by truncation facets
        for &f in &t.base_facets() {
            for &g in &t.base_facets() {
                if f != g {
                    assert!(!facets_adjacent(&t, f, g).unwrap());
                }
            }
        }
        assert_eq!(outer_incidence_points(&t).len(), 3);
        assert!(matches!(
            classify_truncated_tetrahedron(&t),
            Err(NotTT::BaseFacetCount(6))
        ));
    }

    #[test]
    fn truncation_is_identity_on_proper_polyhedra() {
        let p = simplex(0.2);
        let t = truncate_outer_vertices(&p).unwrap();
        assert_eq!(t.facet_count(), 4);
        assert_eq!(t.vertices().len(), 4);
    }

    #[test]
    fn truncated_simplex_is_tt() {
        let t = truncate_outer_vertices(&simplex(0.5)).unwrap();
        assert_eq!(t.facet_count(), 8);
        let tt = classify_truncated_tetrahedron(&t).unwrap();
        assert_eq!(tt.truncation_count(), 4);
        assert!(outer_incidence_points(&t).is_empty());
    }

    #[test]
    fn proper_simplex_is_tt_without_truncations() {
        let tt = classify_truncated_tetrahedron(&simplex(0.2)).unwrap();
        assert_eq!(tt.truncation_count(), 0);
    }

    #[test]
    fn split_truncated_cube_at_equator() {
        let t = truncate_outer_vertices(&cube()).unwrap();
        let z0 = Plane::from_pole(HVec4::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        let (up, down) = split(&t, &z0, 0).unwrap();
        for c in [&up, &down] {
            assert_eq!(c.euler_characteristic(), 2);
            assert!(c.facet_with_tag(FacetTag::Cut(0)).is_some());
        }
        assert_eq!(up.vertices().len(), down.vertices().len());
        assert_eq!(up.facet_count(), down.facet_count());
        let mirror = crate::lorentz::reflect_in_plane(&z0);
        for v in up.vertices() {
            assert!(down
                .vertices()
                .iter()
                .any(|w| w.point.proj_eq(&mirror.apply(&v.point))));
        }
        assert_eq!(outer_incidence_points(&up).len(), 2);
    }

    #[test]
    fn split_simplex_through_interior() {
        let p = simplex(0.2);
        let cut = Plane::from_pole(HVec4::new(0.0, 1.0, 0.3, 0.1)).unwrap();
        let (a, b) = split(&p, &cut, 3).unwrap();
        assert!(a.vertices().len() + b.vertices().len() >= p.vertices().len());
        assert_eq!(a.euler_characteristic(), 2);
        assert_eq!(b.euler_characteristic(), 2);
    }

    #[test]
    fn split_missing_plane_fails() {
        let p = simplex(0.2);
        let cut = Plane::from_chart_equation(Vector3::new(1.0, 0.0, 0.0), 0.95).unwrap();
        assert_eq!(
            split(&p, &cut, 0).unwrap_err(),
            PolytopeError::CutMissesPolyhedron
        );
    }
}
