//! Differentiable force-closure estimate.
//!
//! Contact forces are replaced by unit forces along the inward surface
//! normals, which turns the force-closure test into three soft terms: a
//! rank penalty on `GGᵀ`, the net wrench `‖Gc‖₂` of the normal forces, and
//! the distance of the contacts to the surface.

use nalgebra::{DMatrix, Matrix3, Matrix6, Point3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, skew};
use crate::sdf::Shape;

pub const MIN_CONTACTS: usize = 2;
pub const MAX_CONTACTS: usize = 1000;
const AXIS_NORM_TOL: f64 = 1e-9;
/// Residuals at or below this are treated as the kink of the norm at zero.
pub const RESIDUAL_KINK_TOL: f64 = 1e-12;
/// Contacts with `|d|` at or below this are treated as on the surface.
pub const SURFACE_KINK_TOL: f64 = 1e-12;

/// Contact points with their friction-cone axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContactSetSpec", into = "ContactSetSpec")]
pub struct ContactSet {
    points: Vec<Point3<f64>>,
    axes: Vec<Vector3<f64>>,
    mu: f64,
}

/// Interchange form: `{"points":[[x,y,z],..],"axes":[[..],..],"mu":0.5}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSetSpec {
    pub points: Vec<[f64; 3]>,
    pub axes: Vec<[f64; 3]>,
    #[serde(default)]
    pub mu: f64,
}

impl TryFrom<ContactSetSpec> for ContactSet {
    type Error = Error;

    fn try_from(spec: ContactSetSpec) -> Result<Self> {
        ContactSet::new(
            spec.points.into_iter().map(Point3::from).collect(),
            spec.axes.into_iter().map(Vector3::from).collect(),
            spec.mu,
        )
    }
}

impl From<ContactSet> for ContactSetSpec {
    fn from(c: ContactSet) -> Self {
        Self {
            points: c.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            axes: c.axes.iter().map(|a| [a.x, a.y, a.z]).collect(),
            mu: c.mu,
        }
    }
}

impl ContactSet {
    pub fn new(points: Vec<Point3<f64>>, axes: Vec<Vector3<f64>>, mu: f64) -> Result<Self> {
        let n = points.len();
        if !(MIN_CONTACTS..=MAX_CONTACTS).contains(&n) {
            return Err(Error::InvalidContacts(format!(
                "need {MIN_CONTACTS}..={MAX_CONTACTS} contacts, got {n}"
            )));
        }
        if axes.len() != n {
            return Err(Error::InvalidContacts(format!(
                "{n} points but {} cone axes",
                axes.len()
            )));
        }
        if let Some(i) = axes.iter().position(|a| (a.norm() - 1.0).abs() > AXIS_NORM_TOL) {
            return Err(Error::InvalidContacts(format!("cone axis {i} is not unit-norm")));
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidContacts("non-finite contact point".into()));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidContacts(format!("friction must be >= 0, got {mu}")));
        }
        Ok(Self { points, axes, mu })
    }

    /// Contacts at `points` with inward surface normals of `shape` as cone axes.
    pub fn from_surface(points: Vec<Point3<f64>>, shape: &Shape, mu: f64) -> Result<Self> {
        let axes = points.iter().map(|p| inward_normal(shape, p)).collect();
        Self::new(points, axes, mu)
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn axes(&self) -> &[Vector3<f64>] {
        &self.axes
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self {
            mu,
            ..self.clone()
        }
    }

    pub fn residual(&self) -> f64 {
        gc_residual(&self.points, &self.axes)
    }
}

/// Cone axis convention: `c = -∇d/|∇d|`, the direction a contact pushes.
pub fn inward_normal(shape: &Shape, p: &Point3<f64>) -> Vector3<f64> {
    -shape.gradient(p).normalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcConfig {
    /// Lower bound on the eigenvalues of `GGᵀ`.
    pub epsilon: f64,
    /// Weight of the surface-distance term.
    pub dist_weight: f64,
    /// Residual tolerance; reported, never enforced here.
    pub delta: f64,
}

impl Default for FcConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            dist_weight: 1.0,
            delta: 0.5,
        }
    }
}

impl FcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.dist_weight >= 0.0) || !(self.delta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "fc config requires epsilon > 0, dist_weight >= 0, delta >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FcBreakdown {
    pub rank_penalty: f64,
    pub residual: f64,
    /// `Σ|d(xᵢ)|`
    pub dist_sum: f64,
    /// `Σd(xᵢ)²`, the form used by the grasp filter.
    pub dist_sq_sum: f64,
    pub total: f64,
}

impl FcBreakdown {
    pub fn within_delta(&self, cfg: &FcConfig) -> bool {
        self.residual < cfg.delta
    }
}

/// `G = [I … I; [x₁]ₓ … [xₙ]ₓ]`, 6 × 3n.
pub fn grasp_matrix(points: &[Point3<f64>]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(6, 3 * points.len());
    for (i, p) in points.iter().enumerate() {
        g.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&Matrix3::identity());
        g.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&skew(&p.coords));
    }
    g
}

/// `GGᵀ` accumulated from `Σx` and `Σxxᵀ` without forming `G`.
pub fn grasp_gram(points: &[Point3<f64>]) -> Matrix6<f64> {
    let mut sum = Vector3::zeros();
    let mut outer = Matrix3::zeros();
    let mut sq = 0.0;
    for p in points {
        sum += p.coords;
        outer += p.coords * p.coords.transpose();
        sq += p.coords.norm_squared();
    }
    let n = points.len() as f64;
    let s = skew(&sum);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * n));
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-s));
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&s);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * sq - outer));
    m
}

/// `ReLU(-λ_min(GGᵀ - εI))`.
pub fn rank_penalty(g: &DMatrix<f64>, epsilon: f64) -> f64 {
    assert_eq!(g.nrows(), 6, "grasp matrix must have 6 rows");
    let gram: Matrix6<f64> = Matrix6::from_fn(|r, c| g.row(r).dot(&g.row(c)));
    rank_penalty_from_gram(&gram, epsilon)
}

pub fn rank_penalty_from_gram(gram: &Matrix6<f64>, epsilon: f64) -> f64 {
    (epsilon - jacobi_eigen(gram).min_value()).max(0.0)
}

/// Net wrench of the cone axes, `(Σcᵢ, Σxᵢ×cᵢ)`.
pub fn axis_wrench(points: &[Point3<f64>], axes: &[Vector3<f64>]) -> Vector6<f64> {
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for (p, c) in points.iter().zip(axes) {
        force += c;
        torque += p.coords.cross(c);
    }
    Vector6::new(force.x, force.y, force.z, torque.x, torque.y, torque.z)
}

/// `‖Gc‖₂`.
pub fn gc_residual(points: &[Point3<f64>], axes: &[Vector3<f64>]) -> f64 {
    axis_wrench(points, axes).norm()
}

/// Soft force-closure energy of contact points on `shape`.
pub fn fc_energy(points: &[Point3<f64>], shape: &Shape, cfg: &FcConfig) -> FcBreakdown {
    let mut axes = Vec::with_capacity(points.len());
    let mut dist_sum = 0.0;
    let mut dist_sq_sum = 0.0;
    for p in points {
        let (d, g) = shape.distance_and_gradient(p);
        axes.push(-g.normalize());
        dist_sum += d.abs();
        dist_sq_sum += d * d;
    }
    let rank_penalty = rank_penalty_from_gram(&grasp_gram(points), cfg.epsilon);
    let residual = gc_residual(points, &axes);
    FcBreakdown {
        rank_penalty,
        residual,
        dist_sum,
        dist_sq_sum,
        total: rank_penalty + residual + cfg.dist_weight * dist_sum,
    }
}

/// `∂FC/∂xᵢ` for each contact point.
pub fn fc_energy_grad(points: &[Point3<f64>], shape: &Shape, cfg: &FcConfig) -> Vec<Vector3<f64>> {
    fc_energy_with_grad(points, shape, cfg).1
}

/// Energy and gradient in one pass.
///
/// The rank term uses `∂λ_min = v₀ᵀ ∂(GGᵀ) v₀`; when the smallest eigenvalue
/// is repeated the solver's eigenvector is used as the subgradient. Where
/// `‖Gc‖ ≤ RESIDUAL_KINK_TOL` or `|d| ≤ SURFACE_KINK_TOL` the zero subgradient is taken.
pub fn fc_energy_with_grad(
    points: &[Point3<f64>],
    shape: &Shape,
    cfg: &FcConfig,
) -> (FcBreakdown, Vec<Vector3<f64>>) {
    let n = points.len();
    let mut dists = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    let mut axes = Vec::with_capacity(n);
    for p in points {
        let (d, g) = shape.distance_and_gradient(p);
        dists.push(d);
        grads.push(g);
        axes.push(-g.normalize());
    }

    let gram = grasp_gram(points);
    let eig = jacobi_eigen(&gram);
    let rank_penalty = (cfg.epsilon - eig.min_value()).max(0.0);
    let wrench = axis_wrench(points, &axes);
    let residual = wrench.norm();
    let dist_sum: f64 = dists.iter().map(|d| d.abs()).sum();
    let dist_sq_sum: f64 = dists.iter().map(|d| d * d).sum();
    let breakdown = FcBreakdown {
        rank_penalty,
        residual,
        dist_sum,
        dist_sq_sum,
        total: rank_penalty + residual + cfg.dist_weight * dist_sum,
    };

    let mut out: Vec<Vector3<f64>> = dists
        .iter()
        .zip(&grads)
        .map(|(d, g)| g * (cfg.dist_weight * kink_sign(*d)))
        .collect();

    if residual > RESIDUAL_KINK_TOL {
        let u = wrench / residual;
        let uf = Vector3::new(u[0], u[1], u[2]);
        let ut = Vector3::new(u[3], u[4], u[5]);
        for i in 0..n {
            let x = points[i].coords;
            let gnorm = grads[i].norm();
            let nrm = grads[i] / gnorm;
            let hess = shape.hessian(&points[i]);
            let jc = -(Matrix3::identity() - nrm * nrm.transpose()) * hess / gnorm;
            out[i] += jc.transpose() * (uf - x.cross(&ut)) + axes[i].cross(&ut);
        }
    }

    if rank_penalty > 0.0 {
        let v = eig.min_vector();
        let a = Vector3::new(v[0], v[1], v[2]);
        let b = Vector3::new(v[3], v[4], v[5]);
        for (i, p) in points.iter().enumerate() {
            let w = a + b.cross(&p.coords);
            out[i] -= w.cross(&b) * 2.0;
        }
    }

    (breakdown, out)
}

// sign(d) with a zero band of width SURFACE_KINK_TOL around the surface
fn kink_sign(x: f64) -> f64 {
    if x > SURFACE_KINK_TOL {
        1.0
    } else if x < -SURFACE_KINK_TOL {
        -1.0
    } else {
        0.0
    }
}
