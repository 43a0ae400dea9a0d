//! Analytic signed distance fields.
//!
//! A [`Shape`] is a tree of primitives combined by rigid transforms, hard
//! unions and exponential smooth unions. Distances are negative inside the
//! object and positive outside. Gradients are analytic; Hessians are analytic
//! for spheres and central differences of the analytic gradient otherwise.

use std::io::Write;

use nalgebra::{Isometry3, Matrix3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gradient returned where the field is not differentiable (e.g. a sphere center).
pub const FALLBACK_DIRECTION: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Central-difference step for numerical Hessians.
pub const HESSIAN_STEP: f64 = 1e-5;

pub const PROJECTION_MAX_ITERS: usize = 50;

const SINGULAR_EPS: f64 = 1e-12;
const SAMPLE_BAND: f64 = 0.05;
const SAMPLE_TOL: f64 = 1e-9;
const SAMPLE_MAX_CONSECUTIVE_REJECTS: usize = 1_000_000;

/// Rigid transform in the interchange format: translation plus a unit
/// quaternion stored as `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default = "identity_quaternion")]
    pub quaternion: [f64; 4],
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            quaternion: identity_quaternion(),
        }
    }
}

impl TransformSpec {
    pub fn to_isometry(&self) -> Result<Isometry3<f64>> {
        let [w, x, y, z] = self.quaternion;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "quaternion {:?} is not unit-norm (|q| = {n})",
                self.quaternion
            )));
        }
        if self.translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("non-finite translation".into()));
        }
        Ok(Isometry3::from_parts(
            Translation3::from(Vector3::from(self.translation)),
            UnitQuaternion::new_normalize(q),
        ))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let q = iso.rotation.quaternion();
        Self {
            translation: iso.translation.vector.into(),
            quaternion: [q.w, q.i, q.j, q.k],
        }
    }
}

/// JSON form of a shape node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: KindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KindSpec {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Capsule { half_length: f64, radius: f64 },
    Cylinder { half_length: f64, radius: f64 },
    Torus { major_radius: f64, minor_radius: f64 },
    Union { children: Vec<ShapeSpec> },
    SmoothUnion { k: f64, children: Vec<ShapeSpec> },
}

#[derive(Debug, Clone)]
enum Kind {
    Sphere { radius: f64 },
    Box { half_extents: Vector3<f64> },
    Capsule { half_length: f64, radius: f64 },
    Cylinder { half_length: f64, radius: f64 },
    Torus { major: f64, minor: f64 },
    Union(Vec<Shape>),
    SmoothUnion { k: f64, children: Vec<Shape> },
}

/// An immutable signed distance field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ShapeSpec", into = "ShapeSpec")]
pub struct Shape {
    kind: Kind,
    transform: Option<Isometry3<f64>>,
    bounding_radius: f64,
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    dist: f64,
    grad: Vector3<f64>,
    singular: bool,
}

impl Eval {
    fn regular(dist: f64, grad: Vector3<f64>) -> Self {
        Self {
            dist,
            grad,
            singular: false,
        }
    }

    fn singular(dist: f64) -> Self {
        Self {
            dist,
            grad: FALLBACK_DIRECTION,
            singular: true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TryFrom<ShapeSpec> for Shape {
    type Error = Error;

    fn try_from(spec: ShapeSpec) -> Result<Self> {
        let transform = spec.transform.as_ref().map(|t| t.to_isometry()).transpose()?;
        let kind = match spec.kind {
            KindSpec::Sphere { radius } => Kind::Sphere {
                radius: positive("sphere radius", radius)?,
            },
            KindSpec::Box { half_extents } => {
                for h in half_extents {
                    positive("box half extent", h)?;
                }
                Kind::Box {
                    half_extents: Vector3::from(half_extents),
                }
            }
            KindSpec::Capsule { half_length, radius } => Kind::Capsule {
                half_length: positive("capsule half length", half_length)?,
                radius: positive("capsule radius", radius)?,
            },
            KindSpec::Cylinder { half_length, radius } => Kind::Cylinder {
                half_length: positive("cylinder half length", half_length)?,
                radius: positive("cylinder radius", radius)?,
            },
            KindSpec::Torus {
                major_radius,
                minor_radius,
            } => Kind::Torus {
                major: positive("torus major radius", major_radius)?,
                minor: positive("torus minor radius", minor_radius)?,
            },
            KindSpec::Union { children } => {
                if children.is_empty() {
                    return Err(Error::InvalidConfig("union needs at least one child".into()));
                }
                Kind::Union(children.into_iter().map(Shape::try_from).collect::<Result<_>>()?)
            }
            KindSpec::SmoothUnion { k, children } => {
                if children.is_empty() {
                    return Err(Error::InvalidConfig(
                        "smooth_union needs at least one child".into(),
                    ));
                }
                Kind::SmoothUnion {
                    k: positive("smooth_union k", k)?,
                    children: children.into_iter().map(Shape::try_from).collect::<Result<_>>()?,
                }
            }
        };
        Ok(Shape::build(kind, transform))
    }
}

impl From<Shape> for ShapeSpec {
    fn from(shape: Shape) -> Self {
        (&shape).into()
    }
}

impl From<&Shape> for ShapeSpec {
    fn from(shape: &Shape) -> Self {
        let kind = match &shape.kind {
            Kind::Sphere { radius } => KindSpec::Sphere { radius: *radius },
            Kind::Box { half_extents } => KindSpec::Box {
                half_extents: (*half_extents).into(),
            },
            Kind::Capsule { half_length, radius } => KindSpec::Capsule {
                half_length: *half_length,
                radius: *radius,
            },
            Kind::Cylinder { half_length, radius } => KindSpec::Cylinder {
                half_length: *half_length,
                radius: *radius,
            },
            Kind::Torus { major, minor } => KindSpec::Torus {
                major_radius: *major,
                minor_radius: *minor,
            },
            Kind::Union(children) => KindSpec::Union {
                children: children.iter().map(ShapeSpec::from).collect(),
            },
            Kind::SmoothUnion { k, children } => KindSpec::SmoothUnion {
                k: *k,
                children: children.iter().map(ShapeSpec::from).collect(),
            },
        };
        ShapeSpec {
            kind,
            transform: shape.transform.as_ref().map(TransformSpec::from_isometry),
        }
    }
}

impl Shape {
    fn build(kind: Kind, transform: Option<Isometry3<f64>>) -> Self {
        let local = match &kind {
            Kind::Sphere { radius } => *radius,
            Kind::Box { half_extents } => half_extents.norm(),
            Kind::Capsule { half_length, radius } => half_length + radius,
            Kind::Cylinder { half_length, radius } => half_length.hypot(*radius),
            Kind::Torus { major, minor } => major + minor,
            Kind::Union(children) => children.iter().map(|c| c.bounding_radius).fold(0.0, f64::max),
            // smooth-min lies at most k·ln(n) below the hard min
            Kind::SmoothUnion { k, children } => {
                children.iter().map(|c| c.bounding_radius).fold(0.0, f64::max)
                    + k * (children.len() as f64).ln()
            }
        };
        let bounding_radius = local + transform.map_or(0.0, |t| t.translation.vector.norm());
        Self {
            kind,
            transform,
            bounding_radius,
        }
    }

    pub fn sphere(radius: f64) -> Self {
        Self::build(Kind::Sphere { radius }, None)
    }

    pub fn cuboid(half_extents: Vector3<f64>) -> Self {
        Self::build(Kind::Box { half_extents }, None)
    }

    pub fn capsule(half_length: f64, radius: f64) -> Self {
        Self::build(Kind::Capsule { half_length, radius }, None)
    }

    pub fn cylinder(half_length: f64, radius: f64) -> Self {
        Self::build(Kind::Cylinder { half_length, radius }, None)
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        Self::build(Kind::Torus { major, minor }, None)
    }

    pub fn union(children: Vec<Shape>) -> Self {
        Self::build(Kind::Union(children), None)
    }

    pub fn smooth_union(k: f64, children: Vec<Shape>) -> Self {
        Self::build(Kind::SmoothUnion { k, children }, None)
    }

    /// Returns this shape placed by `iso` (composed after any existing transform).
    pub fn transformed(self, iso: Isometry3<f64>) -> Self {
        let transform = Some(match self.transform {
            Some(t) => iso * t,
            None => iso,
        });
        Self::build(self.kind, transform)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("shape serialization is infallible")
    }

    /// Radius of a sphere about the world origin that contains the surface.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.eval(p).dist
    }

    /// `∇d(p)`; [`FALLBACK_DIRECTION`] at singular points.
    pub fn gradient(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.eval(p).grad
    }

    /// Distance and gradient in one pass.
    pub fn distance_and_gradient(&self, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let e = self.eval(p);
        (e.dist, e.grad)
    }

    /// `∇²d(p)`, symmetric; zero at singular points.
    pub fn hessian(&self, p: &Point3<f64>) -> Matrix3<f64> {
        if self.eval(p).singular {
            return Matrix3::zeros();
        }
        if let Some(h) = self.sphere_hessian(p) {
            return h;
        }
        let h = HESSIAN_STEP;
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let col = (self.eval(&(p + e)).grad - self.eval(&(p - e)).grad) / (2.0 * h);
            m.set_column(j, &col);
        }
        (m + m.transpose()) * 0.5
    }

    fn sphere_hessian(&self, p: &Point3<f64>) -> Option<Matrix3<f64>> {
        let Kind::Sphere { .. } = self.kind else {
            return None;
        };
        let local = match &self.transform {
            Some(t) => t.inverse_transform_point(p),
            None => *p,
        };
        let r = local.coords.norm();
        let n = local.coords / r;
        let h = (Matrix3::identity() - n * n.transpose()) / r;
        Some(match &self.transform {
            Some(t) => {
                let rot = t.rotation.to_rotation_matrix();
                let m = rot.matrix() * h * rot.matrix().transpose();
                (m + m.transpose()) * 0.5
            }
            None => h,
        })
    }

    fn eval(&self, p: &Point3<f64>) -> Eval {
        match &self.transform {
            Some(t) => {
                let local = t.inverse_transform_point(p);
                let e = self.eval_local(&local);
                Eval {
                    grad: t.rotation * e.grad,
                    ..e
                }
            }
            None => self.eval_local(p),
        }
    }

    fn eval_local(&self, p: &Point3<f64>) -> Eval {
        match &self.kind {
            Kind::Sphere { radius } => {
                let r = p.coords.norm();
                if r < SINGULAR_EPS {
                    Eval::singular(r - radius)
                } else {
                    Eval::regular(r - radius, p.coords / r)
                }
            }
            Kind::Box { half_extents } => box_eval(&p.coords, half_extents),
            Kind::Capsule { half_length, radius } => {
                let axis_point = Vector3::new(0.0, 0.0, p.z.clamp(-half_length, *half_length));
                let v = p.coords - axis_point;
                let l = v.norm();
                if l < SINGULAR_EPS {
                    Eval::singular(l - radius)
                } else {
                    Eval::regular(l - radius, v / l)
                }
            }
            Kind::Cylinder { half_length, radius } => {
                cylinder_eval(&p.coords, *half_length, *radius)
            }
            Kind::Torus { major, minor } => {
                let rxy = p.x.hypot(p.y);
                let qa = rxy - major;
                let l = qa.hypot(p.z);
                if l < SINGULAR_EPS || rxy < SINGULAR_EPS {
                    return Eval::singular(l - minor);
                }
                let radial = Vector3::new(p.x / rxy, p.y / rxy, 0.0);
                Eval::regular(l - minor, radial * (qa / l) + Vector3::z() * (p.z / l))
            }
            Kind::Union(children) => children
                .iter()
                .map(|c| c.eval(p))
                .min_by(|a, b| a.dist.total_cmp(&b.dist))
                .expect("union is non-empty"),
            Kind::SmoothUnion { k, children } => {
                let evals: Vec<Eval> = children.iter().map(|c| c.eval(p)).collect();
                let m = evals.iter().map(|e| e.dist).fold(f64::INFINITY, f64::min);
                let weights: Vec<f64> = evals.iter().map(|e| (-(e.dist - m) / k).exp()).collect();
                let total: f64 = weights.iter().sum();
                let dist = m - k * total.ln();
                let mut grad = Vector3::zeros();
                let mut singular = false;
                for (e, w) in evals.iter().zip(&weights) {
                    let w = w / total;
                    grad += e.grad * w;
                    singular |= e.singular && w > 1e-12;
                }
                if singular || grad.norm() < SINGULAR_EPS {
                    Eval::singular(dist)
                } else {
                    Eval::regular(dist, grad)
                }
            }
        }
    }

    /// Newton-style projection onto the zero level set.
    pub fn project_to_surface(&self, p: &Point3<f64>, tol: f64) -> Result<Point3<f64>> {
        let mut x = *p;
        let mut d = 0.0;
        for _ in 0..PROJECTION_MAX_ITERS {
            let (dist, grad) = self.distance_and_gradient(&x);
            d = dist;
            if d.abs() < tol {
                return Ok(x);
            }
            // identical to x - d∇d on eikonal fields; also handles |∇d| < 1 from smooth unions
            x -= grad * (d / grad.norm_squared());
        }
        d = if x.coords.iter().all(|c| c.is_finite()) {
            self.distance(&x)
        } else {
            d
        };
        if d.abs() < tol {
            Ok(x)
        } else {
            Err(Error::NonConvergent {
                residual: d.abs(),
                iterations: PROJECTION_MAX_ITERS,
            })
        }
    }

    /// Deterministic surface samples: rejection sampling of a thin band in the
    /// bounding cube, followed by projection onto the surface.
    pub fn sample_surface(&self, count: usize, seed: u64) -> Result<Vec<Point3<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.bounding_radius + 2.0 * SAMPLE_BAND;
        let mut out = Vec::with_capacity(count);
        let mut rejects = 0usize;
        while out.len() < count {
            let p = Point3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            );
            let accepted = self.distance(&p).abs() < SAMPLE_BAND
                && match self.project_to_surface(&p, SAMPLE_TOL) {
                    Ok(q) => {
                        out.push(q);
                        true
                    }
                    Err(_) => false,
                };
            if accepted {
                rejects = 0;
            } else {
                rejects += 1;
                if rejects >= SAMPLE_MAX_CONSECUTIVE_REJECTS {
                    return Err(Error::SamplingExhausted { attempts: rejects });
                }
            }
        }
        Ok(out)
    }
}

fn box_eval(p: &Vector3<f64>, b: &Vector3<f64>) -> Eval {
    let q = p.abs() - b;
    let sign = p.map(|c| if c < 0.0 { -1.0 } else { 1.0 });
    if q.iter().any(|&c| c > 0.0) {
        let o = q.map(|c| c.max(0.0));
        let d = o.norm();
        Eval::regular(d, sign.component_mul(&o) / d)
    } else {
        let j = q.imax();
        let mut g = Vector3::zeros();
        g[j] = sign[j];
        Eval::regular(q[j], g)
    }
}

fn cylinder_eval(p: &Vector3<f64>, half_length: f64, radius: f64) -> Eval {
    let rxy = p.x.hypot(p.y);
    let a = rxy - radius;
    let b = p.z.abs() - half_length;
    let zdir = Vector3::new(0.0, 0.0, if p.z < 0.0 { -1.0 } else { 1.0 });
    let radial = (rxy >= SINGULAR_EPS).then(|| Vector3::new(p.x / rxy, p.y / rxy, 0.0));
    if a > 0.0 || b > 0.0 {
        let oa = a.max(0.0);
        let ob = b.max(0.0);
        let d = oa.hypot(ob);
        match radial {
            Some(r) => Eval::regular(d, r * (oa / d) + zdir * (ob / d)),
            None if oa == 0.0 => Eval::regular(d, zdir),
            None => Eval::singular(d),
        }
    } else if a >= b {
        match radial {
            Some(r) => Eval::regular(a, r),
            None => Eval::singular(a),
        }
    } else {
        Eval::regular(b, zdir)
    }
}

/// Writes points as an OBJ point cloud (`v x y z` lines).
pub fn write_obj_points<W: Write>(mut w: W, points: &[Point3<f64>]) -> std::io::Result<()> {
    for p in points {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_sphere_blend() -> Shape {
        Shape::smooth_union(
            0.1,
            vec![
                Shape::sphere(0.6).transformed(Isometry3::translation(-0.4, 0.0, 0.0)),
                Shape::sphere(0.5).transformed(Isometry3::translation(0.45, 0.1, 0.0)),
            ],
        )
    }

    fn fd_gradient(shape: &Shape, p: &Point3<f64>, h: f64) -> Vector3<f64> {
        Vector3::from_fn(|j, _| {
            let mut e = Vector3::zeros();
            e[j] = h;
            (shape.distance(&(p + e)) - shape.distance(&(p - e))) / (2.0 * h)
        })
    }

    #[test]
    fn sphere_distance_and_gradient() {
        let s = Shape::sphere(1.0);
        assert_eq!(s.distance(&Point3::new(0.0, 0.0, 2.0)), 1.0);
        assert_eq!(s.distance(&Point3::origin()), -1.0);
        assert_eq!(s.gradient(&Point3::new(0.0, 0.0, 2.0)), Vector3::z());
        let g = s.gradient(&Point3::new(1.2, 1.6, 0.0));
        assert_relative_eq!(g, Vector3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn singular_points_fall_back() {
        let s = Shape::sphere(1.0);
        assert_eq!(s.gradient(&Point3::origin()), FALLBACK_DIRECTION);
        assert_eq!(s.hessian(&Point3::origin()), Matrix3::zeros());
        let c = Shape::capsule(0.5, 0.2);
        assert_eq!(c.gradient(&Point3::new(0.0, 0.0, 0.3)), FALLBACK_DIRECTION);
    }

    #[test]
    fn box_face_distance() {
        let b = Shape::cuboid(Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(b.distance(&Point3::new(2.0, 0.0, 0.0)), 1.0);
        assert_eq!(b.distance(&Point3::new(0.5, 0.0, 0.0)), -0.5);
        let h = b.hessian(&Point3::new(0.1, 0.2, 0.05));
        assert_eq!(h, Matrix3::zeros());
    }

    #[test]
    fn sphere_hessian_is_analytic() {
        let s = Shape::sphere(1.0);
        let h = s.hessian(&Point3::new(2.0, 0.0, 0.0));
        assert_relative_eq!(h, Matrix3::from_diagonal(&Vector3::new(0.0, 0.5, 0.5)), epsilon = 1e-15);
    }

    #[test]
    fn smooth_union_gradient_matches_finite_difference() {
        let s = two_sphere_blend();
        for p in [
            Point3::new(0.05, 0.4, 0.3),
            Point3::new(0.0, -0.7, 0.1),
            Point3::new(0.9, 0.3, -0.2),
        ] {
            let g = s.gradient(&p);
            let fd = fd_gradient(&s, &p, 1e-5);
            assert!((g - fd).norm() < 1e-6, "{g} vs {fd}");
            assert!(g.norm() <= 1.05 && g.norm() > 0.0);
        }
    }

    #[test]
    fn torus_hessian_matches_fd_of_gradient() {
        let t = Shape::torus(0.8, 0.25);
        let p = Point3::new(0.5, 0.6, 0.15);
        let h = t.hessian(&p);
        assert!((h - h.transpose()).amax() < 1e-9);
        let step = 1e-4;
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = step;
            let col = (t.gradient(&(p + e)) - t.gradient(&(p - e))) / (2.0 * step);
            assert!((h.column(j) - col).amax() < 1e-4);
        }
    }

    #[test]
    fn projection_examples() {
        let s = Shape::sphere(1.0);
        let q = s.project_to_surface(&Point3::new(0.0, 0.0, 2.0), 1e-8).unwrap();
        assert_relative_eq!(q, Point3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        let q = s.project_to_surface(&Point3::new(0.1, 0.0, 0.0), 1e-8).unwrap();
        assert_relative_eq!(q, Point3::new(1.0, 0.0, 0.0), epsilon = 1e-8);

        let blend = two_sphere_blend();
        let q = blend.project_to_surface(&Point3::new(0.2, 0.9, -0.4), 1e-8).unwrap();
        assert!(blend.distance(&q).abs() < 1e-8);
    }

    #[test]
    fn sampling_is_deterministic_and_on_surface() {
        let s = Shape::sphere(1.0);
        let a = s.sample_surface(100, 11).unwrap();
        let b = s.sample_surface(100, 11).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (p.coords.norm() - 1.0).abs() < 1e-6));
        assert_ne!(a, s.sample_surface(100, 12).unwrap());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let text = r#"{"type":"smooth_union","k":0.1,"children":[
            {"type":"sphere","radius":1.0,"transform":{"translation":[0.0,0.0,0.5],"quaternion":[1,0,0,0]}},
            {"type":"cylinder","half_length":0.5,"radius":0.3}]}"#;
        let s = Shape::from_json(text).unwrap();
        let back = Shape::from_json(&s.to_json()).unwrap();
        let p = Point3::new(0.3, -0.2, 0.9);
        assert_eq!(s.distance(&p), back.distance(&p));

        assert!(Shape::from_json(r#"{"type":"sphere","radius":-1}"#).is_err());
        assert!(Shape::from_json(r#"{"type":"blob"}"#).is_err());
        assert!(Shape::from_json(
            r#"{"type":"sphere","radius":1,"transform":{"quaternion":[2,0,0,0]}}"#
        )
        .is_err());
    }

    #[test]
    fn obj_export_writes_vertex_lines() {
        let mut buf = Vec::new();
        write_obj_points(&mut buf, &[Point3::new(1.0, 2.0, 3.0), Point3::origin()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("v 1 2 3"));
    }

    fn primitives() -> Vec<Shape> {
        vec![
            Shape::sphere(0.9),
            Shape::cuboid(Vector3::new(0.7, 0.4, 0.3)),
            Shape::capsule(0.4, 0.3),
            Shape::cylinder(0.5, 0.35),
            Shape::torus(0.7, 0.2),
        ]
    }

    fn unit_quaternion() -> impl Strategy<Value = UnitQuaternion<f64>> {
        proptest::array::uniform4(-1.0f64..1.0)
            .prop_filter("nonzero", |q| q.iter().map(|c| c * c).sum::<f64>() > 1e-3)
            .prop_map(|[w, x, y, z]| UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn primitive_gradients_match_fd(p in proptest::array::uniform3(-1.5f64..1.5), which in 0usize..5) {
            let shape = &primitives()[which];
            let p = Point3::from(p);
            let g = shape.gradient(&p);
            let fd = fd_gradient(shape, &p, 1e-6);
            // kinks of the box/cylinder fields are measure-zero; skip points within a step of one
            let kink = (shape.gradient(&(p + Vector3::repeat(1e-5))) - shape.gradient(&(p - Vector3::repeat(1e-5)))).norm() > 1e-2;
            prop_assume!(!kink);
            prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0), "{} vs {}", g, fd);
            prop_assert!((g.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn hessian_is_symmetric(p in proptest::array::uniform3(-1.5f64..1.5), which in 0usize..5) {
            let h = primitives()[which].hessian(&Point3::from(p));
            prop_assert!((h - h.transpose()).amax() < 1e-9);
        }

        #[test]
        fn rigid_invariance(p in proptest::array::uniform3(-2.0f64..2.0),
                            t in proptest::array::uniform3(-1.0f64..1.0),
                            q in unit_quaternion(), which in 0usize..5) {
            let base = primitives()[which].clone();
            let iso = Isometry3::from_parts(Translation3::from(Vector3::from(t)), q);
            let moved = base.clone().transformed(iso);
            let p = Point3::from(p);
            let expected = base.distance(&iso.inverse_transform_point(&p));
            prop_assert!((moved.distance(&p) - expected).abs() < 1e-12);
        }

        #[test]
        fn projection_lands_on_surface(p in proptest::array::uniform3(-1.5f64..1.5)) {
            let s = two_sphere_blend();
            if let Ok(q) = s.project_to_surface(&Point3::from(p), 1e-8) {
                prop_assert!(s.distance(&q).abs() < 1e-8);
            }
        }
    }
}
