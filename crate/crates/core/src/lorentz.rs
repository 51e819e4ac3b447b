//! Projective model of hyperbolic 3-space over the Lorentz form of signature (1,3).
//!
//! Points and plane poles are homogeneous 4-vectors `(x0, x1, x2, x3)` taken up to a
//! nonzero factor. The form is `<x, y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3`:
//!
//! - `<x, x> < 0`: proper point (inside the absolute quadric),
//! - `<x, x> = 0`: boundary point (at infinity),
//! - `<x, x> > 0`: outer point; its polar `{y : <x, y> = 0}` is a plane meeting the model.
//!
//! Planes are stored by their poles, so polarity is the identity on coordinates.
//! Every sign decision goes through [`compare_to_zero`], which applies one relative
//! tolerance [`EPS`] against the Euclidean scale of the operands.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{Matrix4, Vector3, Vector4};
use thiserror::Error;

/// Relative tolerance of every geometric predicate.
pub const EPS: f64 = 1e-9;

/// The form matrix `diag(-1, 1, 1, 1)`.
pub fn form_matrix() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("the zero vector does not represent a projective point")]
    ZeroVector,
    #[error("point is not outer (self-product {0:e})")]
    NotOuter(f64),
    #[error("point is not proper (self-product {0:e})")]
    NotProper(f64),
    #[error("planes are not ultraparallel ({0})")]
    NotUltraparallel(PlaneRelation),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Three-way sign of `value` relative to `EPS * scale`.
///
/// `Equal` means `|value| <= EPS * scale`.
#[inline]
pub fn compare_to_zero(value: f64, scale: f64) -> Ordering {
    let tol = EPS * scale;
    if value > tol {
        Ordering::Greater
    } else if value < -tol {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Homogeneous coordinates of a projective point or a plane pole.
#[derive(Clone, Copy, PartialEq)]
pub struct HVec4(pub Vector4<f64>);

impl fmt::Debug for HVec4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        write!(f, "({}, {}, {}, {})", c[0], c[1], c[2], c[3])
    }
}

impl HVec4 {
    pub fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        HVec4(Vector4::new(c0, c1, c2, c3))
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        HVec4(Vector4::new(c[0], c[1], c[2], c[3]))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    /// The point with chart coordinates `p`, i.e. `(1, p)`.
    pub fn from_chart(p: Vector3<f64>) -> Self {
        HVec4::new(1.0, p.x, p.y, p.z)
    }

    /// Model center `(1, 0, 0, 0)`.
    pub fn origin() -> Self {
        HVec4::new(1.0, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn c(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Squared Euclidean norm of the coordinates.
    #[inline]
    pub fn scale(&self) -> f64 {
        self.0.norm_squared()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(self, s: f64) -> Self {
        HVec4(self.0 * s)
    }

    pub fn neg(self) -> Self {
        HVec4(-self.0)
    }

    pub fn add(self, o: Self) -> Self {
        HVec4(self.0 + o.0)
    }

    pub fn sub(self, o: Self) -> Self {
        HVec4(self.0 - o.0)
    }

    /// Unit Euclidean length; returns `ZeroVector` for the zero vector.
    pub fn euclid_normalized(self) -> Result<Self, GeometryError> {
        if !self.0.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = self.norm();
        if n == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(self.scaled(1.0 / n))
    }

    /// Canonical representative of a proper point: self-product -1 and `c0 > 0`.
    pub fn normalized_proper(self) -> Result<Self, GeometryError> {
        let q = minkowski(&self, &self);
        if classify(&self) != PointClass::Proper {
            return Err(GeometryError::NotProper(
                q / self.scale().max(f64::MIN_POSITIVE),
            ));
        }
        let s = 1.0 / (-q).sqrt();
        Ok(if self.0[0] < 0.0 {
            self.scaled(-s)
        } else {
            self.scaled(s)
        })
    }

    /// Chart coordinates `(x1, x2, x3) / x0`; `None` on the ideal plane `x0 = 0`.
    pub fn chart(&self) -> Option<Vector3<f64>> {
        let w = self.0[0];
        if w.abs() <= EPS * self.norm() {
            return None;
        }
        Some(Vector3::new(self.0[1] / w, self.0[2] / w, self.0[3] / w))
    }

    /// Projective equality: all 2x2 minors of the Euclidean-normalized pair vanish.
    pub fn proj_eq(&self, other: &HVec4) -> bool {
        let (Ok(a), Ok(b)) = (self.euclid_normalized(), other.euclid_normalized()) else {
            return false;
        };
        let tol = 1e3 * EPS;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (a.0[i] * b.0[j] - a.0[j] * b.0[i]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// `<x, y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3`.
#[inline]
pub fn minkowski(x: &HVec4, y: &HVec4) -> f64 {
    let (a, b) = (&x.0, &y.0);
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    Proper,
    Boundary,
    Outer,
}

pub fn classify(x: &HVec4) -> PointClass {
    match compare_to_zero(minkowski(x, x), x.scale()) {
        Ordering::Less => PointClass::Proper,
        Ordering::Equal => PointClass::Boundary,
        Ordering::Greater => PointClass::Outer,
    }
}

/// A plane of the model, stored by its pole normalized to self-product +1.
#[derive(Clone, Copy, PartialEq)]
pub struct Plane {
    pole: HVec4,
}

impl fmt::Debug for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Plane{:?}", self.pole)
    }
}

/// The polar plane of an outer point.
pub fn polar(x: &HVec4) -> Result<Plane, GeometryError> {
    Plane::from_pole(*x)
}

impl Plane {
    /// Plane whose pole is `x`; fails unless `x` is outer.
    pub fn from_pole(x: HVec4) -> Result<Self, GeometryError> {
        if !x.0.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if x.is_zero() {
            return Err(GeometryError::ZeroVector);
        }
        let q = minkowski(&x, &x);
        if classify(&x) != PointClass::Outer {
            return Err(GeometryError::NotOuter(q / x.scale()));
        }
        Ok(Plane {
            pole: x.scaled(1.0 / q.sqrt()),
        })
    }

    /// Chart plane `n . p = d`.
    pub fn from_chart_equation(n: Vector3<f64>, d: f64) -> Result<Self, GeometryError> {
        // <(d, n), (1, p)> = -d + n.p
        Plane::from_pole(HVec4::new(d, n.x, n.y, n.z))
    }

    /// Plane through three points (generic position required).
    pub fn through_points(a: &HVec4, b: &HVec4, c: &HVec4) -> Result<Self, GeometryError> {
        // pole e with <e, a> = <e, b> = <e, c> = 0, i.e. (J e) in the kernel of [a; b; c].
        let k = kernel_3x4([a.0, b.0, c.0]).ok_or(GeometryError::ZeroVector)?;
        Plane::from_pole(HVec4::new(-k[0], k[1], k[2], k[3]))
    }

    #[inline]
    pub fn pole(&self) -> HVec4 {
        self.pole
    }

    /// Chart equation `(n, d)` with `n . p = d`.
    pub fn chart_equation(&self) -> (Vector3<f64>, f64) {
        let e = self.pole.0;
        (Vector3::new(e[1], e[2], e[3]), e[0])
    }

    pub fn flipped(&self) -> Plane {
        Plane {
            pole: self.pole.neg(),
        }
    }

    /// Projective equality of the underlying point sets.
    pub fn same_plane(&self, other: &Plane) -> bool {
        self.pole.proj_eq(&other.pole)
    }

    /// Value of the linear form `<pole, x>`.
    #[inline]
    pub fn eval(&self, x: &HVec4) -> f64 {
        minkowski(&self.pole, x)
    }

    /// Orthogonal projection of a proper point onto the plane.
    pub fn foot_of(&self, x: &HVec4) -> Result<HVec4, GeometryError> {
        let a = x.normalized_proper()?;
        a.sub(self.pole.scaled(self.eval(&a))).normalized_proper()
    }

    /// Two vectors spanning the plane's directions at the proper point `at` (which must lie on
    /// the plane), orthonormal for the form.
    pub fn tangent_frame(&self, at: &HVec4) -> Result<[HVec4; 2], GeometryError> {
        let f = at.normalized_proper()?;
        let e = self.pole;
        let mut basis: Vec<HVec4> = Vec::with_capacity(2);
        for k in 0..4 {
            let mut v = HVec4(Vector4::from_fn(|i, _| if i == k { 1.0 } else { 0.0 }));
            // project out f (timelike, <f,f> = -1) and e (spacelike, <e,e> = 1)
            v = v.add(f.scaled(minkowski(&v, &f)));
            v = v.sub(e.scaled(minkowski(&v, &e)));
            for b in &basis {
                v = v.sub(b.scaled(minkowski(&v, b)));
            }
            let q = minkowski(&v, &v);
            if q > 1e-6 {
                basis.push(v.scaled(1.0 / q.sqrt()));
                if basis.len() == 2 {
                    return Ok([basis[0], basis[1]]);
                }
            }
        }
        Err(GeometryError::ZeroVector)
    }
}

/// Kernel vector of a 3x4 matrix with rows `r`, via signed 3x3 minors.
/// Returns `None` when the rows are (numerically) dependent.
pub(crate) fn kernel_3x4(r: [Vector4<f64>; 3]) -> Option<Vector4<f64>> {
    let minor = |c: [usize; 3]| {
        let m = nalgebra::Matrix3::new(
            r[0][c[0]], r[0][c[1]], r[0][c[2]], r[1][c[0]], r[1][c[1]], r[1][c[2]], r[2][c[0]],
            r[2][c[1]], r[2][c[2]],
        );
        m.determinant()
    };
    let k = Vector4::new(
        minor([1, 2, 3]),
        -minor([0, 2, 3]),
        minor([0, 1, 3]),
        -minor([0, 1, 2]),
    );
    let scale = r[0].norm() * r[1].norm() * r[2].norm();
    if scale == 0.0 || k.norm() <= DEGENERATE_RATIO * scale {
        None
    } else {
        Some(k)
    }
}

/// Triples of planes whose normalized volume factor is below this are treated as a pencil.
pub const DEGENERATE_RATIO: f64 = 1e-8;

/// Homogeneous common point of three planes, or `None` if they belong to one pencil.
pub fn intersect_three(a: &Plane, b: &Plane, c: &Plane) -> Option<HVec4> {
    let row = |p: &Plane| {
        let e = p.pole().0;
        Vector4::new(-e[0], e[1], e[2], e[3])
    };
    kernel_3x4([row(a), row(b), row(c)]).map(HVec4)
}

pub fn incident(x: &HVec4, p: &Plane) -> bool {
    compare_to_zero(p.eval(x), x.norm() * p.pole().norm()) == Ordering::Equal
}

/// Hyperbolic distance between two proper points.
pub fn point_distance(x: &HVec4, y: &HVec4) -> Result<f64, GeometryError> {
    let a = x.normalized_proper()?;
    let b = y.normalized_proper()?;
    let c = -minkowski(&a, &b);
    Ok(c.max(1.0).acosh())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneRelation {
    Intersecting,
    Parallel,
    Ultraparallel(f64),
}

impl fmt::Display for PlaneRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneRelation::Intersecting => write!(f, "intersecting"),
            PlaneRelation::Parallel => write!(f, "parallel"),
            PlaneRelation::Ultraparallel(d) => write!(f, "ultraparallel at distance {d}"),
        }
    }
}

pub fn plane_relation(p: &Plane, q: &Plane) -> PlaneRelation {
    let t = minkowski(&p.pole(), &q.pole()).abs();
    match compare_to_zero(t - 1.0, 1.0) {
        Ordering::Less => PlaneRelation::Intersecting,
        Ordering::Equal => PlaneRelation::Parallel,
        Ordering::Greater => PlaneRelation::Ultraparallel(t.acosh()),
    }
}

/// Distance from a proper point to a plane.
pub fn point_plane_distance(x: &HVec4, p: &Plane) -> Result<f64, GeometryError> {
    let a = x.normalized_proper()?;
    Ok(p.eval(&a).abs().asinh())
}

/// Feet `(on p, on q)` of the common perpendicular of two ultraparallel planes.
///
/// The perpendicular is the line through both poles; each foot is the point of that line
/// conjugate to the corresponding pole.
pub fn common_perpendicular(p: &Plane, q: &Plane) -> Result<(HVec4, HVec4), GeometryError> {
    let rel = plane_relation(p, q);
    if !matches!(rel, PlaneRelation::Ultraparallel(_)) {
        return Err(GeometryError::NotUltraparallel(rel));
    }
    let (a, b) = (p.pole(), q.pole());
    let t = minkowski(&a, &b);
    let foot_p = b.sub(a.scaled(t)).normalized_proper()?;
    let foot_q = a.sub(b.scaled(t)).normalized_proper()?;
    Ok((foot_p, foot_q))
}

/// A linear map preserving the form and the interior of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    m: Matrix4<f64>,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            m: Matrix4::identity(),
        }
    }

    /// Wraps a matrix after checking it preserves the form on the basis (tolerance 1e-10)
    /// and keeps the model center's time orientation.
    pub fn from_matrix(m: Matrix4<f64>) -> Option<Self> {
        let j = form_matrix();
        let g = m.transpose() * j * m;
        let scale = m.norm_squared().max(1.0);
        if (g - j).iter().any(|v| v.abs() > 1e-10 * scale) || m[(0, 0)] <= 0.0 {
            return None;
        }
        Some(Isometry { m })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn apply(&self, x: &HVec4) -> HVec4 {
        HVec4(self.m * x.0)
    }

    pub fn apply_plane(&self, p: &Plane) -> Plane {
        let e = self.apply(&p.pole());
        // form-preserving, so the image pole is still unit; renormalize against drift
        let q = minkowski(&e, &e);
        Plane {
            pole: e.scaled(1.0 / q.sqrt()),
        }
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            m: self.m * other.m,
        }
    }

    pub fn inverse(&self) -> Isometry {
        let j = form_matrix();
        Isometry {
            m: j * self.m.transpose() * j,
        }
    }

    /// An isometry taking the proper point `p` to the model center.
    pub fn to_origin(p: &HVec4) -> Result<Isometry, GeometryError> {
        let a = p.normalized_proper()?;
        let o = HVec4::origin();
        let diff = a.sub(o);
        if diff.norm() < 1e-14 {
            return Ok(Isometry::identity());
        }
        // reflection in the perpendicular bisector swaps a and o
        Ok(reflect_in_plane(&Plane::from_pole(diff)?))
    }

    /// Translation by `distance` along chart axis `axis` (0, 1, 2).
    pub fn translation(axis: usize, distance: f64) -> Isometry {
        let mut m = Matrix4::identity();
        let (c, s) = (distance.cosh(), distance.sinh());
        let k = axis + 1;
        m[(0, 0)] = c;
        m[(0, k)] = s;
        m[(k, 0)] = s;
        m[(k, k)] = c;
        Isometry { m }
    }

    /// Rotation by `angle` in the chart plane of axes `i`, `j`.
    pub fn rotation(i: usize, j: usize, angle: f64) -> Isometry {
        let mut m = Matrix4::identity();
        let (c, s) = (angle.cos(), angle.sin());
        let (a, b) = (i + 1, j + 1);
        m[(a, a)] = c;
        m[(a, b)] = -s;
        m[(b, a)] = s;
        m[(b, b)] = c;
        Isometry { m }
    }
}

/// Reflection `x -> x - 2 <x, e> e` in the plane with unit pole `e`.
pub fn reflect_in_plane(p: &Plane) -> Isometry {
    let e = p.pole().0;
    let je = Vector4::new(-e[0], e[1], e[2], e[3]);
    Isometry {
        m: Matrix4::identity() - 2.0 * e * je.transpose(),
    }
}
