//! Hyperballs: the solids of points within distance `h` of a base plane, on both sides.

use std::cmp::Ordering;

use thiserror::Error;

use crate::lorentz::{
    compare_to_zero, plane_relation, point_plane_distance, GeometryError, HVec4, Isometry, Plane,
    PlaneRelation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperballError {
    #[error("hyperball height must be positive and finite, got {0}")]
    BadHeight(f64),
    #[error("negative or non-finite input to the piece volume: {0}")]
    NegativeInput(&'static str),
    #[error("hyperball heights differ ({0} vs {1}); only congruent packings are supported")]
    NotCongruent(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperball {
    pub base: Plane,
    pub height: f64,
}

impl Hyperball {
    pub fn new(base: Plane, height: f64) -> Result<Self, HyperballError> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(HyperballError::BadHeight(height));
        }
        Ok(Hyperball { base, height })
    }

    pub fn transformed(&self, m: &Isometry) -> Hyperball {
        Hyperball {
            base: m.apply_plane(&self.base),
            height: self.height,
        }
    }
}

/// Membership in the closed solid; `x` must be proper.
pub fn contains(b: &Hyperball, x: &HVec4) -> Result<bool, GeometryError> {
    let d = point_plane_distance(x, &b.base)?;
    Ok(compare_to_zero(d - b.height, 1.0) != Ordering::Greater)
}

/// A congruent hyperball packing with one label per ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingConfig {
    pub balls: Vec<Hyperball>,
    pub labels: Vec<String>,
}

impl PackingConfig {
    /// Labels default to `b0, b1, ...`. Fails if the heights are not all equal within 1e-12.
    pub fn new(balls: Vec<Hyperball>) -> Result<Self, HyperballError> {
        let labels = (0..balls.len()).map(|i| format!("b{i}")).collect();
        Self::with_labels(balls, labels)
    }

    pub fn with_labels(balls: Vec<Hyperball>, labels: Vec<String>) -> Result<Self, HyperballError> {
        assert_eq!(balls.len(), labels.len(), "one label per ball");
        if let Some(first) = balls.first() {
            for b in &balls[1..] {
                if (b.height - first.height).abs() > 1e-12 {
                    return Err(HyperballError::NotCongruent(first.height, b.height));
                }
            }
        }
        Ok(PackingConfig { balls, labels })
    }

    /// Common height, `None` for an empty configuration.
    pub fn height(&self) -> Option<f64> {
        self.balls.first().map(|b| b.height)
    }

    pub fn transformed(&self, m: &Isometry) -> PackingConfig {
        PackingConfig {
            balls: self.balls.iter().map(|b| b.transformed(m)).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub relation: PlaneRelation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingReport {
    pub admissible: bool,
    /// Minimum distance over ultraparallel base-plane pairs (`+inf` with fewer than two balls).
    pub min_separation: f64,
    pub violations: Vec<Violation>,
}

/// Every pair of base planes must be ultraparallel at distance at least `2h`.
pub fn check_packing(cfg: &PackingConfig) -> PackingReport {
    let mut min_separation = f64::INFINITY;
    let mut violations = Vec::new();
    for i in 0..cfg.balls.len() {
        for j in (i + 1)..cfg.balls.len() {
            let (a, b) = (&cfg.balls[i], &cfg.balls[j]);
            let rel = plane_relation(&a.base, &b.base);
            match rel {
                PlaneRelation::Ultraparallel(d) => {
                    min_separation = min_separation.min(d);
                    let need = a.height + b.height;
                    if compare_to_zero(d - need, 1.0) == Ordering::Less {
                        violations.push(Violation {
                            i,
                            j,
                            relation: rel,
                        });
                    }
                }
                _ => violations.push(Violation {
                    i,
                    j,
                    relation: rel,
                }),
            }
        }
    }
    PackingReport {
        admissible: violations.is_empty(),
        min_separation,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clearance {
    /// Positive gap `d - h` between the plane and the hyperball.
    Disjoint(f64),
    Tangent,
    Intersecting,
}

impl Clearance {
    pub fn is_clear(&self) -> bool {
        !matches!(self, Clearance::Intersecting)
    }
}

pub fn plane_hyperball_disjoint(p: &Plane, b: &Hyperball) -> Clearance {
    match plane_relation(p, &b.base) {
        PlaneRelation::Ultraparallel(d) => match compare_to_zero(d - b.height, 1.0) {
            Ordering::Greater => Clearance::Disjoint(d - b.height),
            Ordering::Equal => Clearance::Tangent,
            Ordering::Less => Clearance::Intersecting,
        },
        PlaneRelation::Intersecting | PlaneRelation::Parallel => Clearance::Intersecting,
    }
}

/// Volume of the half-hyperball prism piece of height `h` over a base polygon of the given
/// area, curvature radius `k`: `area / 4 * (k sinh(2h/k) + 2h)`.
pub fn bolyai_piece_volume(area: f64, h: f64, k: f64) -> Result<f64, HyperballError> {
    if !(area >= 0.0 && area.is_finite()) {
        return Err(HyperballError::NegativeInput("area"));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(HyperballError::NegativeInput("height"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(HyperballError::NegativeInput("curvature radius"));
    }
    Ok(0.25 * area * (k * (2.0 * h / k).sinh() + 2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallGroup {
    Incident,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaFailure {
    pub group: BallGroup,
    pub index: usize,
    pub clearance: Clearance,
}

/// Outcome of checking a polar cut against the hyperballs around its outer point.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub passed: bool,
    pub incident: Vec<Clearance>,
    pub other: Vec<Clearance>,
    /// Smallest `Disjoint` margin over the other balls (`0` if one is tangent, `+inf` if none).
    pub min_margin: f64,
    pub failures: Vec<LemmaFailure>,
}

/// The cut must cross every incident ball and stay clear (disjoint or tangent) of the others.
pub fn verify_cut_clearance(
    cut: &Plane,
    incident_balls: &[Hyperball],
    other_balls: &[Hyperball],
) -> LemmaReport {
    let incident: Vec<Clearance> = incident_balls
        .iter()
        .map(|b| plane_hyperball_disjoint(cut, b))
        .collect();
    let other: Vec<Clearance> = other_balls
        .iter()
        .map(|b| plane_hyperball_disjoint(cut, b))
        .collect();
    let mut failures = Vec::new();
    for (index, c) in incident.iter().enumerate() {
        if c.is_clear() {
            failures.push(LemmaFailure {
                group: BallGroup::Incident,
                index,
                clearance: *c,
            });
        }
    }
    let mut min_margin = f64::INFINITY;
    for (index, c) in other.iter().enumerate() {
        match c {
            Clearance::Disjoint(m) => min_margin = min_margin.min(*m),
            Clearance::Tangent => min_margin = 0.0,
            Clearance::Intersecting => failures.push(LemmaFailure {
                group: BallGroup::Other,
                index,
                clearance: *c,
            }),
        }
    }
    LemmaReport {
        passed: failures.is_empty(),
        incident,
        other,
        min_margin,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(c: [f64; 4]) -> Plane {
        Plane::from_pole(HVec4::from_array(c)).unwrap()
    }

    fn z0() -> Plane {
        plane([0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn contains_examples() {
        let b = Hyperball::new(z0(), 0.5).unwrap();
        assert!(contains(&b, &HVec4::origin()).unwrap());
        assert!(contains(&b, &HVec4::new(1.0, 0.0, 0.0, 0.5f64.tanh())).unwrap());
        assert!(!contains(&b, &HVec4::new(1.0, 0.0, 0.0, 0.8f64.tanh())).unwrap());
        assert!(contains(&b, &HVec4::new(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    fn pair(h: f64) -> PackingConfig {
        let s = 1f64.sinh();
        let c = 1f64.cosh();
        PackingConfig::new(vec![
            Hyperball::new(plane([-s, c, 0.0, 0.0]), h).unwrap(),
            Hyperball::new(plane([s, c, 0.0, 0.0]), h).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn check_packing_examples() {
        let r = check_packing(&pair(1.0));
        assert!(r.admissible);
        assert!((r.min_separation - 2.0).abs() < 1e-12);

        let r = check_packing(&pair(1.1));
        assert!(!r.admissible);
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].i, r.violations[0].j), (0, 1));

        let single = PackingConfig::new(vec![Hyperball::new(z0(), 3.0).unwrap()]).unwrap();
        let r = check_packing(&single);
        assert!(r.admissible);
        assert!(r.min_separation.is_infinite());
    }

    #[test]
    fn intersecting_bases_are_violations() {
        let cfg = PackingConfig::new(vec![
            Hyperball::new(plane([0.0, 1.0, 0.0, 0.0]), 0.1).unwrap(),
            Hyperball::new(plane([0.0, 0.0, 1.0, 0.0]), 0.1).unwrap(),
        ])
        .unwrap();
        let r = check_packing(&cfg);
        assert!(!r.admissible);
        assert_eq!(r.violations[0].relation, PlaneRelation::Intersecting);
    }

    #[test]
    fn non_congruent_rejected() {
        let e = PackingConfig::new(vec![
            Hyperball::new(z0(), 0.1).unwrap(),
            Hyperball::new(plane([0.0, 1.0, 0.0, 0.0]), 0.2).unwrap(),
        ]);
        assert!(matches!(e, Err(HyperballError::NotCongruent(..))));
        assert!(Hyperball::new(z0(), 0.0).is_err());
    }

    #[test]
    fn clearance_examples() {
        let base = plane([0.0, 1.0, 0.0, 0.0]);
        let at = |d: f64| plane([d.sinh(), d.cosh(), 0.0, 0.0]);
        let b = Hyperball::new(base, 0.5).unwrap();
        match plane_hyperball_disjoint(&at(1.0), &b) {
            Clearance::Disjoint(m) => assert!((m - 0.5).abs() < 1e-12),
            c => panic!("{c:?}"),
        }
        assert_eq!(plane_hyperball_disjoint(&at(0.5), &b), Clearance::Tangent);
        assert_eq!(
            plane_hyperball_disjoint(&plane([0.0, 0.0, 1.0, 0.0]), &b),
            Clearance::Intersecting
        );
        assert_eq!(
            plane_hyperball_disjoint(&at(0.3), &b),
            Clearance::Intersecting
        );
    }

    #[test]
    fn bolyai_examples() {
        assert_eq!(bolyai_piece_volume(3.7, 0.0, 1.0).unwrap(), 0.0);
        let v = bolyai_piece_volume(2.0, 0.5, 1.0).unwrap();
        assert!((v - 0.5 * (1f64.sinh() + 1.0)).abs() < 1e-14);
        assert!((v - 1.087601).abs() < 1e-6);
        let v = bolyai_piece_volume(4.0, 1.0, 1.0).unwrap();
        assert!((v - (2f64.sinh() + 2.0)).abs() < 1e-14);
        assert!((v - 5.626860).abs() < 1e-6);
        assert!(bolyai_piece_volume(-1.0, 0.5, 1.0).is_err());
        assert!(bolyai_piece_volume(1.0, -0.5, 1.0).is_err());
        assert!(bolyai_piece_volume(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn lemma_single_incident_ball_crosses() {
        // base plane x = 0 passes through the outer point (0,0,0,1); its polar is z = 0
        let a = HVec4::new(0.0, 0.0, 0.0, 1.0);
        let cut = crate::lorentz::polar(&a).unwrap();
        let b = Hyperball::new(plane([0.0, 1.0, 0.0, 0.0]), 0.7).unwrap();
        let r = verify_cut_clearance(&cut, &[b], &[]);
        assert!(r.passed);
        assert_eq!(r.incident, vec![Clearance::Intersecting]);
    }

    #[test]
    fn lemma_flags_misclassified_ball() {
        let cut = z0();
        let through = Hyperball::new(plane([0.0, 1.0, 0.0, 0.0]), 0.2).unwrap();
        let far = Hyperball::new(plane([1.0, 0.0, 0.0, 2.0]), 0.2).unwrap();
        let r = verify_cut_clearance(&cut, &[], &[far, through]);
        assert!(!r.passed);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].group, BallGroup::Other);
        assert_eq!(r.failures[0].index, 1);
    }
}
