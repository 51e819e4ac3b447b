//! The local cell around a Dirichlet–Voronoi vertex and its recursive polar cutting into
//! truncated tetrahedra.
//!
//! Starting from the cell bounded by the base planes around a proper vertex `P` (with outer
//! corners truncated by their polars), every outer point where three or more base planes meet
//! away from the cell's vertices is a candidate cut. The polar plane of the lexicographically
//! first candidate splits the cell; the halves are processed the same way until no candidates
//! remain. Each cut is checked against the hyperballs: it must cross exactly the balls whose
//! base planes pass through the candidate point.

use std::f64::consts::SQRT_2;

use nalgebra::Vector3;
use thiserror::Error;

use crate::hyperball::{
    check_packing, verify_cut_clearance, Hyperball, HyperballError, LemmaReport, PackingConfig,
};
use crate::lorentz::{
    classify, incident, plane_relation, point_plane_distance, GeometryError, HVec4, Isometry,
    Plane, PlaneRelation, PointClass,
};
use crate::polytope::{
    build_polyhedron, classify_truncated_tetrahedron, outer_incidence_points, split,
    truncate_outer_vertices, ConvexPolyhedron, FacetTag, HalfSpace, NotTT, OuterIncidencePoint,
    PolytopeError, TruncatedTetrahedron,
};
use crate::volume::{self, max_height, regular_truncated_tetrahedron, VolumeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("cell vertex must be a proper point")]
    VertexNotProper,
    #[error("hyperballs {i} and {j} are not separated by twice their height")]
    Inadmissible { i: usize, j: usize },
    #[error("cell vertex lies inside the open hyperball {0}")]
    VertexInsideBall(usize),
    #[error("parameter {name} = {value} outside ({lo}, {hi})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cut {cut_id} at node {node} intersects a hyperball it should avoid or misses one it should cross")]
    LemmaViolation {
        node: usize,
        cut_id: usize,
        report: LemmaReport,
    },
    #[error("decomposition did not terminate within {cap} levels")]
    NonterminatingGuard { cap: usize },
    #[error("leaf at node {node} is not a truncated tetrahedron: {reason}")]
    LeafNotTT { node: usize, reason: NotTT },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Hyperball(#[from] HyperballError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

/// Hyperballs whose Dirichlet–Voronoi cells meet at a proper vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCellInput {
    pub vertex: HVec4,
    pub balls: PackingConfig,
}

impl LocalCellInput {
    pub fn new(vertex: HVec4, balls: PackingConfig) -> Result<Self, DecomposeError> {
        if classify(&vertex) != PointClass::Proper {
            return Err(DecomposeError::VertexNotProper);
        }
        let report = check_packing(&balls);
        if let Some(v) = report.violations.first() {
            return Err(DecomposeError::Inadmissible { i: v.i, j: v.j });
        }
        for (i, b) in balls.balls.iter().enumerate() {
            if point_plane_distance(&vertex, &b.base)? < b.height * (1.0 - 1e-9) {
                return Err(DecomposeError::VertexInsideBall(i));
            }
        }
        Ok(LocalCellInput { vertex, balls })
    }

    pub fn transformed(&self, m: &Isometry) -> LocalCellInput {
        LocalCellInput {
            vertex: m.apply(&self.vertex),
            balls: self.balls.transformed(m),
        }
    }
}

/// The mirror plane swapping the base planes of two congruent ultraparallel hyperballs.
pub fn radical_plane(a: &Hyperball, b: &Hyperball) -> Result<Plane, DecomposeError> {
    if (a.height - b.height).abs() > 1e-12 * a.height.max(b.height) {
        return Err(HyperballError::NotCongruent(a.height, b.height).into());
    }
    let rel = plane_relation(&a.base, &b.base);
    let PlaneRelation::Ultraparallel(_) = rel else {
        return Err(GeometryError::NotUltraparallel(rel).into());
    };
    // the reflection in the plane with pole e_a +- e_b swaps the two unit poles
    let (ea, eb) = (a.base.pole(), b.base.pole());
    let t = crate::lorentz::minkowski(&ea, &eb);
    Ok(Plane::from_pole(ea.add(eb.scaled(t.signum())))?)
}

/// `D(P)`: the intersection of the base-plane halfspaces containing `P`, with every outer
/// corner cut off by its polar plane.
pub fn local_cell(input: &LocalCellInput) -> Result<ConvexPolyhedron, DecomposeError> {
    let hs = input
        .balls
        .balls
        .iter()
        .enumerate()
        .map(|(i, b)| {
            HalfSpace::toward(b.base, FacetTag::Base(i), &input.vertex)
                .ok_or(PolytopeError::EmptyInterior(i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let raw = build_polyhedron(hs, input.vertex)?;
    Ok(truncate_outer_vertices(&raw)?)
}

#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub point: OuterIncidencePoint,
    pub cut: Plane,
    /// Cuts on the same plane share an id.
    pub cut_id: usize,
    pub lemma: LemmaReport,
    pub children: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct TraceNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Number of outer incidence points of this node's polyhedron.
    pub n: usize,
    pub polyhedron: ConvexPolyhedron,
    /// `Some` for internal nodes.
    pub split: Option<SplitRecord>,
    /// Index into [`DecompositionTrace::leaves`] for terminal nodes.
    pub leaf: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DecompositionTrace {
    pub balls: PackingConfig,
    /// Depth-first, parent before children, positive side first.
    pub nodes: Vec<TraceNode>,
    pub leaves: Vec<TruncatedTetrahedron>,
    pub cut_planes: Vec<Plane>,
}

impl DecompositionTrace {
    pub fn root(&self) -> &TraceNode {
        &self.nodes[0]
    }

    /// Number of distinct cut planes.
    pub fn cut_count(&self) -> usize {
        self.cut_planes.len()
    }

    /// Number of split operations (a plane may split several nodes).
    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_some()).count()
    }

    pub fn leaf_nodes(&self) -> impl Iterator<Item = &TraceNode> {
        self.nodes.iter().filter(|n| n.leaf.is_some())
    }

    pub fn all_lemmas_pass(&self) -> bool {
        self.nodes
            .iter()
            .filter_map(|n| n.split.as_ref())
            .all(|s| s.lemma.passed)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

/// Cut `cell` along polars of outer incidence points until every piece is a truncated
/// tetrahedron.
///
/// Each piece is re-examined from scratch after a split. The depth is capped at the root's
/// count plus one.
pub fn decompose(
    cell: &ConvexPolyhedron,
    balls: &PackingConfig,
) -> Result<DecompositionTrace, DecomposeError> {
    let root_points = outer_incidence_points(cell);
    let mut state = State {
        balls,
        cap: root_points.len() + 1,
        trace: DecompositionTrace {
            balls: balls.clone(),
            nodes: Vec::new(),
            leaves: Vec::new(),
            cut_planes: Vec::new(),
        },
    };
    state.visit(cell.clone(), root_points, None, 0)?;
    Ok(state.trace)
}

struct State<'a> {
    balls: &'a PackingConfig,
    cap: usize,
    trace: DecompositionTrace,
}

impl State<'_> {
    fn visit(
        &mut self,
        poly: ConvexPolyhedron,
        points: Vec<OuterIncidencePoint>,
        parent: Option<usize>,
        depth: usize,
    ) -> Result<usize, DecomposeError> {
        if depth > self.cap {
            return Err(DecomposeError::NonterminatingGuard { cap: self.cap });
        }
        if let Some(p) = parent {
            if points.len() >= self.trace.nodes[p].n {
                return Err(DecomposeError::NonterminatingGuard { cap: self.cap });
            }
        }
        let id = self.trace.nodes.len();
        self.trace.nodes.push(TraceNode {
            id,
            parent,
            depth,
            n: points.len(),
            polyhedron: poly.clone(),
            split: None,
            leaf: None,
        });

        let Some(chosen) = points.into_iter().next() else {
            let tt = classify_truncated_tetrahedron(&poly)
                .map_err(|reason| DecomposeError::LeafNotTT { node: id, reason })?;
            self.trace.nodes[id].leaf = Some(self.trace.leaves.len());
            self.trace.leaves.push(tt);
            return Ok(id);
        };

        let cut = chosen.polar_plane();
        let cut_id = match self
            .trace
            .cut_planes
            .iter()
            .position(|p| p.same_plane(&cut))
        {
            Some(k) => k,
            None => {
                self.trace.cut_planes.push(cut);
                self.trace.cut_planes.len() - 1
            }
        };
        let (inc, other): (Vec<Hyperball>, Vec<Hyperball>) = self
            .balls
            .balls
            .iter()
            .partition(|b| incident(&chosen.point, &b.base));
        let lemma = verify_cut_clearance(&cut, &inc, &other);
        if !lemma.passed {
            return Err(DecomposeError::LemmaViolation {
                node: id,
                cut_id,
                report: lemma,
            });
        }
        let (a, b) = split(&poly, &cut, cut_id)?;
        let pa = outer_incidence_points(&a);
        let pb = outer_incidence_points(&b);
        let ca = self.visit(a, pa, Some(id), depth + 1)?;
        let cb = self.visit(b, pb, Some(id), depth + 1)?;
        self.trace.nodes[id].split = Some(SplitRecord {
            point: chosen,
            cut,
            cut_id,
            lemma,
            children: [ca, cb],
        });
        Ok(id)
    }
}

/// Ratio of the hyperball pieces inside a leaf to the leaf volume, when the leaf's base facets
/// are pairwise separated so that each piece is a prism over its facet. `None` otherwise.
pub fn leaf_density(
    leaf: &TruncatedTetrahedron,
    h: f64,
    tol: f64,
) -> Result<Option<f64>, DecomposeError> {
    let p = &leaf.polyhedron;
    for (k, &f) in leaf.base_facets.iter().enumerate() {
        for &g in &leaf.base_facets[k + 1..] {
            if crate::polytope::facets_adjacent(p, f, g)? {
                return Ok(None);
            }
        }
    }
    let mut pieces = 0.0;
    for &f in &leaf.base_facets {
        pieces += crate::hyperball::bolyai_piece_volume(volume::facet_area(p, f)?, h, 1.0)?;
    }
    Ok(Some(pieces / volume::polytope_volume(p, tol)?.value))
}

/// Six hyperballs on the polars of `(1, +-c, 0, 0)`, `(1, 0, +-c, 0)`, `(1, 0, 0, +-c)` around the
/// model center, with the largest admissible common height. Ball ids follow the order
/// `+x, -x, +y, -y, +z, -z`. Also returns the expected number of cut planes.
pub fn octahedron_example(c: f64) -> Result<(LocalCellInput, usize), DecomposeError> {
    if !(c > 1.0 && c < SQRT_2) {
        return Err(DecomposeError::ParameterOutOfRange {
            name: "c",
            value: c,
            lo: 1.0,
            hi: SQRT_2,
        });
    }
    let a = 1.0 / c;
    let input = box_cell_input([[a, a], [a, a], [a, a]], None)?;
    Ok((input, 2))
}

/// Hyperballs on the six chart planes `x = hi_x, x = -lo_x, y = hi_y, ...` around the model
/// center, ids in the order `+x, -x, +y, -y, +z, -z`. Without an explicit height, the largest
/// one keeping the balls apart and away from the center is used.
pub fn box_cell_input(
    extent: [[f64; 2]; 3],
    height: Option<f64>,
) -> Result<LocalCellInput, DecomposeError> {
    let mut planes = Vec::with_capacity(6);
    for (axis, [lo, hi]) in extent.iter().enumerate() {
        for (dir, off) in [(1.0, *hi), (-1.0, *lo)] {
            let mut n = Vector3::zeros();
            n[axis] = dir;
            planes.push((n, off));
        }
    }
    let labels = ["+x", "-x", "+y", "-y", "+z", "-z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    chart_planes_input(&planes, labels, height)
}

/// Hyperballs on the chart planes `n . x = d` (with `d > 0`) around the model center.
/// Without an explicit height, the largest one keeping the balls apart and away from the
/// center is used.
pub fn chart_planes_input(
    planes: &[(Vector3<f64>, f64)],
    labels: Vec<String>,
    height: Option<f64>,
) -> Result<LocalCellInput, DecomposeError> {
    let planes = planes
        .iter()
        .map(|(n, d)| Plane::from_chart_equation(*n, *d))
        .collect::<Result<Vec<_>, _>>()?;
    let h = match height {
        Some(h) => h,
        None => {
            let mut h = f64::INFINITY;
            for i in 0..planes.len() {
                h = h.min(point_plane_distance(&HVec4::origin(), &planes[i])?);
                for j in (i + 1)..planes.len() {
                    match plane_relation(&planes[i], &planes[j]) {
                        PlaneRelation::Ultraparallel(d) => h = h.min(0.5 * d),
                        _ => return Err(DecomposeError::Inadmissible { i, j }),
                    }
                }
            }
            h
        }
    };
    let balls = planes
        .into_iter()
        .map(|p| Hyperball::new(p, h))
        .collect::<Result<Vec<_>, _>>()?;
    LocalCellInput::new(HVec4::origin(), PackingConfig::with_labels(balls, labels)?)
}

/// Hyperballs of maximal height on the four truncation planes of the regular truncated
/// tetrahedron with vertex radius `r`, around the model center. The local cell is again a
/// regular truncated tetrahedron, so the decomposition has no cuts.
pub fn regular_tt_input(r: f64) -> Result<LocalCellInput, DecomposeError> {
    let cell = regular_truncated_tetrahedron(r)?;
    let h = max_height(&cell);
    let balls = cell
        .truncation_planes()
        .into_iter()
        .map(|p| Hyperball::new(p, h))
        .collect::<Result<Vec<_>, _>>()?;
    LocalCellInput::new(HVec4::origin(), PackingConfig::new(balls)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::reflect_in_plane;

    fn pole(c: [f64; 4]) -> Plane {
        Plane::from_pole(HVec4::from_array(c)).unwrap()
    }

    #[test]
    fn radical_plane_examples() {
        let (s, c) = (1f64.sinh(), 1f64.cosh());
        let a = Hyperball::new(pole([-s, c, 0.0, 0.0]), 0.3).unwrap();
        let b = Hyperball::new(pole([s, c, 0.0, 0.0]), 0.3).unwrap();
        let m = radical_plane(&a, &b).unwrap();
        assert!(m.same_plane(&pole([0.0, 1.0, 0.0, 0.0])));
        assert!(reflect_in_plane(&m)
            .apply_plane(&a.base)
            .same_plane(&b.base));

        let iso = Isometry::translation(2, 0.4).compose(&Isometry::rotation(0, 2, 0.7));
        let m2 = radical_plane(&a.transformed(&iso), &b.transformed(&iso)).unwrap();
        assert!(m2.same_plane(&iso.apply_plane(&m)));

        let x = Hyperball::new(pole([0.0, 1.0, 0.0, 0.0]), 0.3).unwrap();
        let y = Hyperball::new(pole([0.0, 0.0, 1.0, 0.0]), 0.3).unwrap();
        assert!(matches!(
            radical_plane(&x, &y),
            Err(DecomposeError::Geometry(GeometryError::NotUltraparallel(_)))
        ));
        let z = Hyperball::new(b.base, 0.4).unwrap();
        assert!(matches!(
            radical_plane(&a, &z),
            Err(DecomposeError::Hyperball(HyperballError::NotCongruent(..)))
        ));
    }

    #[test]
    fn radical_plane_of_generic_pair_swaps_bases() {
        let iso = Isometry::translation(0, 0.8)
            .compose(&Isometry::rotation(1, 2, 1.1))
            .compose(&Isometry::translation(1, -0.3));
        let a = Hyperball::new(
            iso.apply_plane(&Plane::from_chart_equation(Vector3::new(1.0, 0.0, 0.0), 0.6).unwrap()),
            0.2,
        )
        .unwrap();
        let b = Hyperball::new(
            iso.apply_plane(
                &Plane::from_chart_equation(Vector3::new(0.6, 0.8, 0.0), -0.7).unwrap(),
            ),
            0.2,
        )
        .unwrap();
        let m = radical_plane(&a, &b).unwrap();
        assert!(reflect_in_plane(&m)
            .apply_plane(&a.base)
            .same_plane(&b.base));
    }

    #[test]
    fn octahedron_local_cell() {
        let (input, cuts) = octahedron_example(1.2).unwrap();
        assert_eq!(cuts, 2);
        let h = input.balls.height().unwrap();
        assert!((h - 0.5 * (1.0 / (1.2f64 * 1.2 - 1.0)).acosh()).abs() < 1e-12);
        let cell = local_cell(&input).unwrap();
        assert_eq!(cell.facet_count(), 14);
        assert_eq!(cell.base_facets().len(), 6);
        assert_eq!(cell.vertices().len(), 24);
    }

    #[test]
    fn octahedron_parameter_range() {
        assert!(octahedron_example(2.0).is_err());
        assert!(octahedron_example(1.0).is_err());
        assert!(octahedron_example(1.05).is_ok());
        assert!(octahedron_example(1.4).is_ok());
    }

    #[test]
    fn octahedron_decomposition() {
        let (input, _) = octahedron_example(1.2).unwrap();
        let cell = local_cell(&input).unwrap();
        let trace = decompose(&cell, &input.balls).unwrap();
        assert_eq!(trace.root().n, 3);
        assert_eq!(trace.cut_count(), 2);
        assert_eq!(trace.split_count(), 3);
        assert_eq!(trace.leaves.len(), 4);
        assert!(trace.all_lemmas_pass());
        for leaf in &trace.leaves {
            assert_eq!(leaf.truncation_count(), 4);
        }
        for cut in &trace.cut_planes {
            assert!(incident(&HVec4::origin(), cut));
        }
        for node in &trace.nodes {
            if let Some(p) = node.parent {
                assert!(node.n < trace.nodes[p].n);
            }
        }
    }

    #[test]
    fn tt_cell_needs_no_cuts() {
        let input = regular_tt_input(1.3).unwrap();
        let cell = local_cell(&input).unwrap();
        let trace = decompose(&cell, &input.balls).unwrap();
        assert_eq!(trace.cut_count(), 0);
        assert_eq!(trace.leaves.len(), 1);
        assert_eq!(trace.leaves[0].truncation_count(), 4);
    }

    #[test]
    fn proper_simplex_is_single_leaf() {
        let u = volume::tetrahedron_directions();
        let balls = u
            .iter()
            .map(|d| Hyperball::new(Plane::from_chart_equation(-d, 0.2).unwrap(), 0.01).unwrap())
            .collect();
        let input = LocalCellInput::new(HVec4::origin(), PackingConfig::new(balls).unwrap());
        // the faces of a small simplex meet inside the model, so they are not a packing
        assert!(matches!(input, Err(DecomposeError::Inadmissible { .. })));
        let hs = u
            .iter()
            .enumerate()
            .map(|(i, d)| {
                HalfSpace::toward(
                    Plane::from_chart_equation(-d, 0.2).unwrap(),
                    FacetTag::Base(i),
                    &HVec4::origin(),
                )
                .unwrap()
            })
            .collect();
        let cell = build_polyhedron(hs, HVec4::origin()).unwrap();
        let trace = decompose(&cell, &PackingConfig::new(vec![]).unwrap()).unwrap();
        assert_eq!(trace.leaves.len(), 1);
        assert_eq!(trace.leaves[0].truncation_count(), 0);
    }

    #[test]
    fn empty_interior_around_vertex() {
        let (mut input, _) = octahedron_example(1.2).unwrap();
        input.vertex = HVec4::from_chart(Vector3::new(1.0 / 1.2, 0.1, 0.0));
        assert!(matches!(
            local_cell(&input),
            Err(DecomposeError::Polytope(PolytopeError::EmptyInterior(0)))
        ));
    }

    #[test]
    fn inadmissible_input_rejected() {
        let a = 1.0 / 1.2;
        assert!(matches!(
            box_cell_input([[a, a], [a, a], [a, a]], Some(2.0)),
            Err(DecomposeError::Inadmissible { .. })
        ));
        assert!(matches!(
            LocalCellInput::new(
                HVec4::new(0.0, 1.0, 0.0, 0.0),
                PackingConfig::new(vec![]).unwrap()
            ),
            Err(DecomposeError::VertexNotProper)
        ));
    }

    #[test]
    fn triangular_prism_splits_into_two_tts() {
        let mut planes: Vec<(Vector3<f64>, f64)> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                (Vector3::new(a.cos(), a.sin(), 0.0), 0.6)
            })
            .collect();
        planes.push((Vector3::new(0.0, 0.0, 1.0), 0.85));
        planes.push((Vector3::new(0.0, 0.0, -1.0), 0.9));
        let labels = (0..5).map(|i| format!("b{i}")).collect();
        let input = chart_planes_input(&planes, labels, None).unwrap();
        let trace = decompose(&local_cell(&input).unwrap(), &input.balls).unwrap();
        // the sides meet at the vertical ideal point; each side also meets both caps at infinity
        assert_eq!(trace.root().n, 4);
        assert_eq!(
            trace.root().split.as_ref().unwrap().point.ball_ids,
            vec![0, 1, 2]
        );
        assert_eq!(trace.cut_count(), 1);
        assert_eq!(trace.leaves.len(), 2);
        assert!(trace.leaves.iter().all(|l| l.truncation_count() == 4));
    }

    #[test]
    fn leaf_density_of_octahedron_pieces() {
        let (input, _) = octahedron_example(1.2).unwrap();
        let trace = decompose(&local_cell(&input).unwrap(), &input.balls).unwrap();
        let h = input.balls.height().unwrap();
        let d: Vec<f64> = trace
            .leaves
            .iter()
            .map(|l| leaf_density(l, h, 1e-6).unwrap().unwrap())
            .collect();
        for x in &d {
            assert!(*x > 0.0 && *x < 1.0);
            assert!((x - d[0]).abs() < 1e-6);
        }
    }
}
