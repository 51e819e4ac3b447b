//! Hyperbolic volumes and areas in the projective model, and packing densities of the regular
//! truncated tetrahedron family.
//!
//! Volumes are integrated in spherical coordinates about a point moved to the model center.
//! The radial part of `dV = dx / (1 - |x|^2)^2` has the closed form [`radial_integral`], so
//! only a surface integral remains. For polyhedra it runs over the facets (a smooth integrand
//! on each flat facet); for general star-shaped regions it runs over the direction sphere.
//! Both use the same adaptive triangle quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

use crate::hyperball::{bolyai_piece_volume, Hyperball};
use crate::lorentz::{
    incident, minkowski, plane_relation, GeometryError, HVec4, Isometry, Plane, PlaneRelation,
    PointClass,
};
use crate::polytope::{
    build_polyhedron, classify_truncated_tetrahedron, truncate_outer_vertices, ConvexPolyhedron,
    FacetTag, HalfSpace, NotTT, PolytopeError, TruncatedTetrahedron,
};

/// Default relative tolerance for volume integrals.
pub const DEFAULT_TOL: f64 = 1e-5;

/// Upper bound on quadrature triangles before giving up.
const MAX_TRIANGLES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolumeError {
    #[error("region reaches the absolute")]
    RegionTouchesBoundary,
    #[error("relative error {achieved:e} did not reach tolerance {tol:e}")]
    ToleranceNotReached { achieved: f64, tol: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("vertex {0} is not incident to the polygon plane")]
    NotIncident(usize),
    #[error("polygon is not a convex cycle")]
    NonConvexCycle,
    #[error("parameter {name} = {value} outside ({lo}, {hi})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("height {h} exceeds maximum {max}")]
    HeightExceedsMax { h: f64, max: f64 },
    #[error("cell is not a truncated tetrahedron: {0}")]
    NotTruncatedTetrahedron(NotTT),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeResult {
    pub value: f64,
    pub rel_error_estimate: f64,
    /// Number of quadrature triangles in the final subdivision.
    pub cell_count: usize,
}

/// `int_0^a rho^2 / (1 - rho^2)^2 d rho` for `0 <= a < 1`.
pub fn radial_integral(a: f64) -> f64 {
    if a < 0.1 {
        // a^3/3 + 2a^5/5 + 3a^7/7 + ...
        let a2 = a * a;
        let mut term = a * a2;
        let mut sum = 0.0;
        for n in 1..40 {
            let add = n as f64 * term / (2 * n + 1) as f64;
            sum += add;
            if add < 1e-18 * sum {
                break;
            }
            term *= a2;
        }
        sum
    } else {
        a / (2.0 * (1.0 - a * a)) - 0.25 * ((1.0 + a) / (1.0 - a)).ln()
    }
}

// ---------------------------------------------------------------------------------------------
// adaptive triangle quadrature

const RADON_CENTER_W: f64 = 9.0 / 40.0;

fn radon_nodes() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], RADON_CENTER_W),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

type Tri = [Vector3<f64>; 3];

fn radon<F: Fn(&Vector3<f64>, usize) -> f64>(
    t: &Tri,
    src: usize,
    f: &F,
    nodes: &[([f64; 3], f64); 7],
) -> f64 {
    let area = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
    let mut s = 0.0;
    for (b, w) in nodes {
        s += w * f(&(t[0] * b[0] + t[1] * b[1] + t[2] * b[2]), src);
    }
    s * area
}

fn subdivide(t: &Tri) -> [Tri; 4] {
    let m01 = (t[0] + t[1]) * 0.5;
    let m12 = (t[1] + t[2]) * 0.5;
    let m20 = (t[2] + t[0]) * 0.5;
    [
        [t[0], m01, m20],
        [m01, t[1], m12],
        [m20, m12, t[2]],
        [m01, m12, m20],
    ]
}

struct Pending {
    err: f64,
    seq: usize,
    src: usize,
    tri: Tri,
    value: f64,
}

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Pending {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then(o.seq.cmp(&self.seq))
    }
}

/// Integrate `f` over a set of flat triangles in space to relative tolerance `tol`.
/// The integrand also receives the index of the input triangle containing the point.
///
/// Each triangle is refined into four; the error estimate of a triangle is the difference
/// between its own rule and the sum over its children. The triangle with the largest estimate
/// is refined first.
pub fn integrate_triangles<F: Fn(&Vector3<f64>, usize) -> f64>(
    tris: &[Tri],
    f: F,
    tol: f64,
) -> Result<VolumeResult, VolumeError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(VolumeError::BadTolerance(tol));
    }
    let nodes = radon_nodes();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut push = |tri: Tri,
                    src: usize,
                    heap: &mut BinaryHeap<Pending>,
                    total: &mut f64,
                    total_err: &mut f64| {
        let coarse = radon(&tri, src, &f, &nodes);
        let fine: f64 = subdivide(&tri)
            .iter()
            .map(|c| radon(c, src, &f, &nodes))
            .sum();
        let err = (fine - coarse).abs();
        *total += fine;
        *total_err += err;
        heap.push(Pending {
            err,
            seq,
            src,
            tri,
            value: fine,
        });
        seq += 1;
    };
    for (src, t) in tris.iter().enumerate() {
        push(*t, src, &mut heap, &mut total, &mut total_err);
    }
    loop {
        if !total.is_finite() {
            return Err(VolumeError::RegionTouchesBoundary);
        }
        if total_err <= tol * total.abs() || heap.is_empty() {
            let rel = if total == 0.0 {
                0.0
            } else {
                total_err / total.abs()
            };
            return Ok(VolumeResult {
                value: total,
                rel_error_estimate: rel,
                cell_count: heap.len(),
            });
        }
        if heap.len() >= MAX_TRIANGLES {
            return Err(VolumeError::ToleranceNotReached {
                achieved: total_err / total.abs(),
                tol,
            });
        }
        let worst = heap.pop().expect("non-empty");
        total -= worst.value;
        total_err -= worst.err;
        for child in subdivide(&worst.tri) {
            push(child, worst.src, &mut heap, &mut total, &mut total_err);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// regions

/// A region of the chart, star-shaped about its interior point.
pub trait Region {
    fn contains(&self, x: &Vector3<f64>) -> bool;

    /// Axis-aligned bounding box `(min, max)` in chart coordinates.
    fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>);

    /// A point from which every boundary point is visible; `None` for the empty region.
    fn interior_point(&self) -> Option<Vector3<f64>>;

    /// Chart distance from `from` along unit direction `dir` to the boundary.
    fn ray_exit(&self, from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
        bisect_exit(self, from, dir)
    }
}

fn box_exit(lo: &Vector3<f64>, hi: &Vector3<f64>, from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let mut t = f64::INFINITY;
    for k in 0..3 {
        if dir[k] > 0.0 {
            t = t.min((hi[k] - from[k]) / dir[k]);
        } else if dir[k] < 0.0 {
            t = t.min((lo[k] - from[k]) / dir[k]);
        }
    }
    t.max(0.0)
}

/// Positive root of `|from + t dir|^2 = 1`.
fn sphere_exit(from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let b = from.dot(dir);
    let c = from.norm_squared() - 1.0;
    -b + (b * b - c).max(0.0).sqrt()
}

fn bisect_exit<R: Region + ?Sized>(r: &R, from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let (lo, hi) = r.bounding_box();
    let mut b = box_exit(&lo, &hi, from, dir).min(sphere_exit(from, dir));
    if r.contains(&(from + dir * b)) {
        return b;
    }
    let mut a = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if r.contains(&(from + dir * m)) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Hyperbolic ball of radius `radius` about a proper point.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicBall {
    pub center: HVec4,
    pub radius: f64,
}

impl HyperbolicBall {
    fn cosh_r(&self) -> f64 {
        self.radius.cosh()
    }

    fn center_n(&self) -> HVec4 {
        self.center.normalized_proper().expect("proper center")
    }
}

impl Region for HyperbolicBall {
    fn contains(&self, x: &Vector3<f64>) -> bool {
        if x.norm_squared() >= 1.0 {
            return false;
        }
        let p = HVec4::from_chart(*x);
        let c = self.center_n();
        // cosh d = -<p, c> / sqrt(-<p, p>)
        -minkowski(&p, &c) <= self.cosh_r() * (-minkowski(&p, &p)).sqrt()
    }

    fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        (Vector3::repeat(-1.0), Vector3::repeat(1.0))
    }

    fn interior_point(&self) -> Option<Vector3<f64>> {
        self.center.chart()
    }

    fn ray_exit(&self, from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
        // <X, c>^2 = cosh^2 r (-<X, X>) with X = (1, from + t dir): quadratic in t
        let c = self.center_n();
        let ch2 = self.cosh_r().powi(2);
        let x0 = HVec4::from_chart(*from);
        let d = HVec4::new(0.0, dir.x, dir.y, dir.z);
        let (p, q) = (minkowski(&x0, &c), minkowski(&d, &c));
        let a = q * q + ch2 * minkowski(&d, &d);
        let b = 2.0 * (p * q + ch2 * minkowski(&x0, &d));
        let cc = p * p + ch2 * minkowski(&x0, &x0);
        largest_root(a, b, cc)
    }
}

fn largest_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let r1 = (-b - disc) / (2.0 * a);
    let r2 = (-b + disc) / (2.0 * a);
    r1.max(r2)
}

/// The part of a hyperball on one side of its base plane, cut by further chart halfspaces
/// `n . x <= d`.
#[derive(Debug, Clone)]
pub struct HyperballPiece {
    pub ball: Hyperball,
    /// The piece lies where `side * <pole, x> >= 0`.
    pub side: f64,
    pub walls: Vec<(Vector3<f64>, f64)>,
    pub interior: Vector3<f64>,
}

impl HyperballPiece {
    fn pole(&self) -> HVec4 {
        self.ball.base.pole()
    }
}

impl Region for HyperballPiece {
    fn contains(&self, x: &Vector3<f64>) -> bool {
        if x.norm_squared() >= 1.0 {
            return false;
        }
        let p = HVec4::from_chart(*x);
        let v = minkowski(&self.pole(), &p);
        let sh = self.ball.height.sinh();
        self.side * v >= 0.0
            && v * v <= sh * sh * (-minkowski(&p, &p))
            && self.walls.iter().all(|(n, d)| n.dot(x) <= *d)
    }

    fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        (Vector3::repeat(-1.0), Vector3::repeat(1.0))
    }

    fn interior_point(&self) -> Option<Vector3<f64>> {
        Some(self.interior)
    }

    fn ray_exit(&self, from: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
        let e = self.pole();
        let x0 = HVec4::from_chart(*from);
        let d = HVec4::new(0.0, dir.x, dir.y, dir.z);
        let sh2 = self.ball.height.sinh().powi(2);
        let (p, q) = (minkowski(&e, &x0), minkowski(&e, &d));
        let a = q * q + sh2 * minkowski(&d, &d);
        let b = 2.0 * (p * q + sh2 * minkowski(&x0, &d));
        let c = p * p + sh2 * minkowski(&x0, &x0);
        let mut t = largest_root(a, b, c);
        if self.side * q < 0.0 {
            t = t.min(-p / q);
        }
        for (n, off) in &self.walls {
            let s = n.dot(dir);
            if s > 0.0 {
                t = t.min((off - n.dot(from)) / s);
            }
        }
        t
    }
}

/// Unit-sphere triangulation: octahedron faces refined `level` times, flat (not projected).
fn octahedron_triangles(level: usize) -> Vec<Tri> {
    let e = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut tris = Vec::new();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                let t = [e[0] * sx, e[1] * sy, e[2] * sz];
                // keep outward orientation irrelevant: the integrand uses |q . n|
                tris.push(t);
            }
        }
    }
    for _ in 0..level {
        tris = tris.iter().flat_map(subdivide).collect();
    }
    tris
}

/// Hyperbolic volume of a region of the chart.
pub fn klein_volume<R: Region + ?Sized>(region: &R, tol: f64) -> Result<VolumeResult, VolumeError> {
    let Some(p) = region.interior_point() else {
        return Ok(VolumeResult {
            value: 0.0,
            rel_error_estimate: 0.0,
            cell_count: 0,
        });
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(VolumeError::BadTolerance(tol));
    }
    if p.norm_squared() >= 1.0 {
        return Err(VolumeError::RegionTouchesBoundary);
    }
    let to_center = Isometry::to_origin(&HVec4::from_chart(p))?;
    let back = to_center.inverse();
    let radius = |q: &Vector3<f64>| -> f64 {
        // the centered ray through q is the chart line from p through the image of q/2
        let target = back
            .apply(&HVec4::from_chart(q.normalize() * 0.5))
            .chart()
            .expect("proper");
        let w = (target - p).normalize();
        let s = region.ray_exit(&p, &w);
        let exit = p + w * s;
        if exit.norm_squared() >= 1.0 - 1e-12 {
            return f64::INFINITY;
        }
        to_center
            .apply(&HVec4::from_chart(exit))
            .chart()
            .expect("proper")
            .norm()
    };
    let tris = octahedron_triangles(1);
    let res = integrate_triangles(
        &tris,
        |q, _| {
            let r = radius(q);
            if !r.is_finite() || r >= 1.0 {
                return f64::INFINITY;
            }
            // flat face of the octahedron: solid angle element (q . n) dA / |q|^3 with q . n = 1/sqrt(3)
            let qn = 1.0 / 3f64.sqrt();
            radial_integral(r) * qn / q.norm().powi(3)
        },
        tol,
    )?;
    Ok(res)
}

/// Hyperbolic volume of a compact polyhedron with proper vertices.
pub fn polytope_volume(p: &ConvexPolyhedron, tol: f64) -> Result<VolumeResult, VolumeError> {
    if p.vertices().iter().any(|v| v.class != PointClass::Proper) {
        return Err(VolumeError::RegionTouchesBoundary);
    }
    let chart = p.centered_chart();
    // the cone over each facet from the center: V = sum_f d_f int_F G(|y|) / |y|^3 dA
    let mut tris = Vec::new();
    let mut heights = Vec::new();
    for f in 0..p.facet_count() {
        let (_, d) = p.centered_facet_plane(f);
        let vs = p.facet_vertices(f);
        let c: Vector3<f64> = vs.iter().map(|&v| chart[v]).sum::<Vector3<f64>>() / vs.len() as f64;
        for k in 0..vs.len() {
            tris.push([c, chart[vs[k]], chart[vs[(k + 1) % vs.len()]]]);
            heights.push(d);
        }
    }
    integrate_triangles(
        &tris,
        |y, src| {
            let r = y.norm();
            heights[src] * radial_integral(r) / (r * r * r)
        },
        tol,
    )
}

// ---------------------------------------------------------------------------------------------
// polygon areas

/// Hyperbolic area of a convex polygon on `plane` by angle defect.
pub fn polygon_area(plane: &Plane, vertices: &[HVec4]) -> Result<f64, VolumeError> {
    let n = vertices.len();
    if n < 3 {
        return Err(VolumeError::NonConvexCycle);
    }
    let mut pts = Vec::with_capacity(n);
    for (i, v) in vertices.iter().enumerate() {
        if !incident(v, plane) {
            return Err(VolumeError::NotIncident(i));
        }
        pts.push(v.normalized_proper()?);
    }
    let e = plane.pole();
    let mut orientation = 0.0;
    let mut angle_sum = 0.0;
    for i in 0..n {
        let prev = pts[(i + n - 1) % n];
        let cur = pts[i];
        let next = pts[(i + 1) % n];
        let turn = nalgebra::Matrix4::from_columns(&[e.0, prev.0, cur.0, next.0]).determinant();
        if turn.abs() < 1e-14 {
            return Err(VolumeError::NonConvexCycle);
        }
        if orientation == 0.0 {
            orientation = turn.signum();
        } else if turn.signum() != orientation {
            return Err(VolumeError::NonConvexCycle);
        }
        let t1 = prev.add(cur.scaled(minkowski(&prev, &cur)));
        let t2 = next.add(cur.scaled(minkowski(&next, &cur)));
        let cos = minkowski(&t1, &t2) / (minkowski(&t1, &t1) * minkowski(&t2, &t2)).sqrt();
        angle_sum += cos.clamp(-1.0, 1.0).acos();
    }
    Ok((n as f64 - 2.0) * PI - angle_sum)
}

/// Area of facet `f` of a polyhedron with proper vertices.
pub fn facet_area(p: &ConvexPolyhedron, f: usize) -> Result<f64, VolumeError> {
    let pts: Vec<HVec4> = p
        .facet_vertices(f)
        .iter()
        .map(|&v| p.vertices()[v].point)
        .collect();
    polygon_area(&p.halfspaces()[f].plane, &pts)
}

// ---------------------------------------------------------------------------------------------
// the regular family

/// Unit directions of a regular tetrahedron's vertices.
pub fn tetrahedron_directions() -> [Vector3<f64>; 4] {
    let s = 1.0 / 3f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ]
}

/// Regular truncated tetrahedron whose four (outer) vertices sit at chart radius `r`.
#[derive(Debug, Clone)]
pub struct RegularTTCell {
    pub r: f64,
    pub cell: TruncatedTetrahedron,
}

/// Upper end of the admissible vertex radius, where neighboring truncation planes stop being
/// ultraparallel. Found by bisection on the plane relation.
pub fn r_max() -> f64 {
    let ok = |r: f64| {
        let u = tetrahedron_directions();
        let a = Plane::from_chart_equation(u[0], 1.0 / r);
        let b = Plane::from_chart_equation(u[1], 1.0 / r);
        match (a, b) {
            (Ok(a), Ok(b)) => matches!(plane_relation(&a, &b), PlaneRelation::Ultraparallel(_)),
            _ => false,
        }
    };
    let (mut lo, mut hi) = (1.0 + 1e-9, 4.0);
    while hi - lo > 1e-13 {
        let m = 0.5 * (lo + hi);
        if ok(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

pub fn regular_truncated_tetrahedron(r: f64) -> Result<RegularTTCell, VolumeError> {
    let hi = r_max();
    if !(r > 1.0 && r < hi) {
        return Err(VolumeError::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: 1.0,
            hi,
        });
    }
    let o = HVec4::origin();
    let hs = tetrahedron_directions()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let plane = Plane::from_chart_equation(-u, r / 3.0)?;
            Ok(HalfSpace::toward(plane, FacetTag::Base(i), &o).expect("center is interior"))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let raw = build_polyhedron(hs, o)?;
    let cell = truncate_outer_vertices(&raw)?;
    let cell =
        classify_truncated_tetrahedron(&cell).map_err(VolumeError::NotTruncatedTetrahedron)?;
    Ok(RegularTTCell { r, cell })
}

impl RegularTTCell {
    pub fn polyhedron(&self) -> &ConvexPolyhedron {
        &self.cell.polyhedron
    }

    /// Facet indices of the four truncation planes, where the hyperballs sit.
    pub fn truncation_facets(&self) -> Vec<usize> {
        self.cell.polar_facets()
    }

    pub fn truncation_planes(&self) -> Vec<Plane> {
        self.truncation_facets()
            .iter()
            .map(|&f| self.polyhedron().halfspaces()[f].plane)
            .collect()
    }

    /// Interior dihedral angle between two base facets sharing an edge.
    pub fn base_dihedral_angle(&self, i: usize, j: usize) -> f64 {
        let p = self.polyhedron();
        let outward = |f: usize| {
            let h = &p.halfspaces()[f];
            h.plane.pole().scaled(-h.sign)
        };
        let (a, b) = (self.cell.base_facets[i], self.cell.base_facets[j]);
        (-minkowski(&outward(a), &outward(b)))
            .clamp(-1.0, 1.0)
            .acos()
    }

    /// Hyperballs of height `h` on the four truncation planes.
    pub fn hyperballs(&self, h: f64) -> Result<Vec<Hyperball>, VolumeError> {
        self.truncation_planes()
            .into_iter()
            .map(|p| {
                Hyperball::new(p, h).map_err(|_| VolumeError::HeightExceedsMax { h, max: f64::NAN })
            })
            .collect()
    }

    /// The part of the hyperball on truncation facet `k` (0..4) inside the cell.
    pub fn piece(&self, k: usize, h: f64) -> Result<HyperballPiece, VolumeError> {
        let p = self.polyhedron();
        let f = self.truncation_facets()[k];
        let hs = p.halfspaces()[f];
        let walls = self
            .cell
            .base_facets
            .iter()
            .filter(|&&b| {
                p.facet_vertices(b)
                    .iter()
                    .any(|v| p.facet_vertices(f).contains(v))
            })
            .map(|&b| {
                let h = &p.halfspaces()[b];
                let (n, d) = h.plane.chart_equation();
                // inside: sign * (-d' + n . x) >= 0 in pole terms; express as n' . x <= d'
                let s = -h.sign;
                let lhs = n * s;
                let rhs = s * d;
                (lhs, rhs)
            })
            .collect();
        let verts = p.facet_vertices(f);
        let c: Vector3<f64> = verts
            .iter()
            .map(|&v| p.vertices()[v].point.chart().expect("proper"))
            .sum::<Vector3<f64>>()
            / verts.len() as f64;
        // nudge the facet centroid into the cell
        let into = p.interior_point().chart().expect("proper") - c;
        let interior = c + into * (1e-3 * h.min(1.0));
        Ok(HyperballPiece {
            ball: Hyperball::new(hs.plane, h)
                .map_err(|_| VolumeError::HeightExceedsMax { h, max: f64::NAN })?,
            side: hs.sign,
            walls,
            interior,
        })
    }
}

/// Vertex radius whose base dihedral angle equals `2 pi / p`.
pub fn r_for_p(p: u32) -> Result<f64, VolumeError> {
    let target = 2.0 * PI / p as f64;
    let hi = r_max();
    let angle = |r: f64| -> Result<f64, VolumeError> {
        Ok(regular_truncated_tetrahedron(r)?.base_dihedral_angle(0, 1))
    };
    let (mut a, mut b) = (1.0 + 1e-6, hi - 1e-6);
    let (fa, fb) = (angle(a)?, angle(b)?);
    if !(target < fa && target > fb) {
        return Err(VolumeError::ParameterOutOfRange {
            name: "p",
            value: p as f64,
            lo: 6.0,
            hi: f64::INFINITY,
        });
    }
    // the angle decreases in r
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if angle(m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn regular_tt_from_p(p: u32) -> Result<RegularTTCell, VolumeError> {
    regular_truncated_tetrahedron(r_for_p(p)?)
}

/// Largest congruent height for hyperballs on the truncation planes: half the smallest distance
/// between two of them.
pub fn max_height(cell: &RegularTTCell) -> f64 {
    let planes = cell.truncation_planes();
    let mut best = f64::INFINITY;
    for i in 0..planes.len() {
        for j in (i + 1)..planes.len() {
            if let PlaneRelation::Ultraparallel(d) = plane_relation(&planes[i], &planes[j]) {
                best = best.min(0.5 * d);
            } else {
                return 0.0;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    pub r: f64,
    pub h: f64,
    pub density: f64,
    pub cell_volume: f64,
    /// Total volume of the four hyperball pieces inside the cell.
    pub piece_volume: f64,
}

pub fn density_report(
    cell: &RegularTTCell,
    h: f64,
    tol: f64,
) -> Result<DensityReport, VolumeError> {
    let max = max_height(cell);
    if h > max * (1.0 + 1e-12) {
        return Err(VolumeError::HeightExceedsMax { h, max });
    }
    if !(h > 0.0) {
        return Err(VolumeError::ParameterOutOfRange {
            name: "h",
            value: h,
            lo: 0.0,
            hi: max,
        });
    }
    let p = cell.polyhedron();
    let mut piece_volume = 0.0;
    for f in cell.truncation_facets() {
        piece_volume +=
            bolyai_piece_volume(facet_area(p, f)?, h, 1.0).expect("non-negative inputs");
    }
    let cell_volume = polytope_volume(p, tol)?.value;
    Ok(DensityReport {
        r: cell.r,
        h,
        density: piece_volume / cell_volume,
        cell_volume,
        piece_volume,
    })
}

pub fn cell_density(cell: &RegularTTCell, h: f64, tol: f64) -> Result<f64, VolumeError> {
    Ok(density_report(cell, h, tol)?.density)
}

/// Density at `r` with the height pinned to its maximum.
pub fn density_at_max_height(r: f64, tol: f64) -> Result<DensityReport, VolumeError> {
    let cell = regular_truncated_tetrahedron(r)?;
    let h = max_height(&cell);
    density_report(&cell, h, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub report: DensityReport,
    /// Finite-difference derivative of the density in `h` at the optimum (one-sided, inward).
    pub dh_gradient: f64,
    /// No point of a small `(r, h)` grid around the optimum beats it.
    pub grid_confirms: bool,
}

/// Maximize the density over the regular family: a coarse scan over `r`, golden-section
/// refinement with `h = max_height(r)`, then a local `(r, h)` grid check.
pub fn optimize_regular_family(tol: f64) -> Result<Optimum, VolumeError> {
    let lo = 1.0 + 5e-3;
    let hi = r_max() - 5e-3;
    let f = |r: f64| density_at_max_height(r, tol).map(|d| d.density);

    let steps = 24;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let values = grid.iter().map(|&r| f(r)).collect::<Result<Vec<_>, _>>()?;
    let best = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty grid");
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(steps)];

    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-6 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        }
    }
    let r = 0.5 * (a + b);
    let report = density_at_max_height(r, tol)?;

    let cell = regular_truncated_tetrahedron(r)?;
    let dh = 1e-3 * report.h;
    let dh_gradient = (report.density - cell_density(&cell, report.h - dh, tol)?) / dh;

    let mut grid_confirms = true;
    for dr in [-2e-3, -1e-3, 1e-3, 2e-3] {
        let rr = r + dr;
        let c = regular_truncated_tetrahedron(rr)?;
        let hm = max_height(&c);
        for frac in [0.98, 0.99, 1.0] {
            if cell_density(&c, hm * frac, tol)? > report.density + 10.0 * tol {
                grid_confirms = false;
            }
        }
    }
    Ok(Optimum {
        report,
        dh_gradient,
        grid_confirms,
    })
}

/// Density on `steps + 1` equally spaced values of `r` in `[r_min, r_max]`, at height `h` if
/// given (capped to each cell's maximum) or at the maximum height.
pub fn sweep(
    r_min: f64,
    r_max_: f64,
    steps: usize,
    h: Option<f64>,
    tol: f64,
) -> Result<Vec<DensityReport>, VolumeError> {
    let n = steps.max(1);
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let r = r_min * (1.0 - t) + r_max_ * t;
            let cell = regular_truncated_tetrahedron(r)?;
            let hm = max_height(&cell);
            density_report(&cell, h.map_or(hm, |h| h.min(hm)), tol)
        })
        .collect()
}
