//! Classic force-closure test used as ground truth for the estimator.
//!
//! Friction cones are replaced by inscribed k-edge pyramids. A contact set is
//! force closure iff its primitive wrenches span R⁶ and admit a strictly
//! positive combination summing to zero; the latter is decided by a small LP.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix6, Point3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcest::ContactSet;
use crate::linalg::jacobi_eigen;
use crate::lp::{self, LpResult, LpStatus};

pub const DEFAULT_CONE_EDGES: usize = 16;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-8;
/// Minimum positive weight required of the null combination.
pub const POSITIVE_WEIGHT_TOL: f64 = 1e-9;
pub const MAX_MU_CAP: f64 = 4.0;

/// Primitive wrenches `(f̂; x×f̂)` of all pyramid edges, one per column.
#[derive(Debug, Clone)]
pub struct WrenchSet {
    pub wrenches: DMatrix<f64>,
    pub k: usize,
}

impl WrenchSet {
    pub fn from_contacts(contacts: &ContactSet, k: usize) -> Self {
        let n = contacts.len();
        let mut w = DMatrix::zeros(6, n * k);
        let mut col = 0;
        for (p, axis) in contacts.points().iter().zip(contacts.axes()) {
            for f in discretize_cone(axis, contacts.mu(), k) {
                let tau = p.coords.cross(&f);
                w.set_column(col, &Vector6::new(f.x, f.y, f.z, tau.x, tau.y, tau.z));
                col += 1;
            }
        }
        Self { wrenches: w, k }
    }

    pub fn from_columns(columns: &[Vector6<f64>], k: usize) -> Self {
        Self {
            wrenches: DMatrix::from_fn(6, columns.len(), |r, c| columns[c][r]),
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.wrenches.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.wrenches.ncols() == 0
    }

    /// `rank(W) == 6` via singular values of the 6×6 Gram matrix.
    pub fn spans_wrench_space(&self) -> bool {
        let gram: Matrix6<f64> = Matrix6::from_fn(|r, c| {
            self.wrenches.row(r).dot(&self.wrenches.row(c))
        });
        let eig = jacobi_eigen(&gram);
        let smax = eig.values[5].max(0.0).sqrt();
        let smin = eig.values[0].max(0.0).sqrt();
        smax > 0.0 && smin > RANK_REL_TOL * smax
    }
}

/// Orthonormal tangent basis of `axis`, seeded by its smallest component.
pub fn tangent_basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let j = axis.iamin();
    let mut e = Vector3::zeros();
    e[j] = 1.0;
    let t1 = axis.cross(&e).normalize();
    let t2 = axis.cross(&t1);
    (t1, t2)
}

/// Edges of the k-sided pyramid inscribed in the cone of half-angle atan(μ).
pub fn discretize_cone(axis: &Vector3<f64>, mu: f64, k: usize) -> Vec<Vector3<f64>> {
    let (t1, t2) = tangent_basis(axis);
    (0..k)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / k as f64;
            (axis + (t1 * theta.cos() + t2 * theta.sin()) * mu).normalize()
        })
        .collect()
}

/// Maximizes `ε` subject to `Wλ = 0`, `Σλ = 1`, `λⱼ ≥ ε ≥ 0`.
///
/// Solved with `λ = s + ε·1`, `s ≥ 0`. The objective of an `Optimal` result
/// is `ε*`; its solution is `λ`.
pub fn lp_max_min_weight(w: &WrenchSet) -> Result<LpResult> {
    let m = w.len();
    if m == 0 {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            objective: f64::NEG_INFINITY,
            solution: vec![],
        });
    }
    let mut a = DMatrix::zeros(7, m + 1);
    a.view_mut((0, 0), (6, m)).copy_from(&w.wrenches);
    let row_sums = w.wrenches.column_sum();
    a.view_mut((0, m), (6, 1)).copy_from(&row_sums);
    for j in 0..m {
        a[(6, j)] = 1.0;
    }
    a[(6, m)] = m as f64;
    let mut b = DVector::zeros(7);
    b[6] = 1.0;
    let mut c = DVector::zeros(m + 1);
    c[m] = 1.0;

    let res = lp::maximize(&a, &b, &c)?;
    if res.status != LpStatus::Optimal {
        return Ok(LpResult {
            status: res.status,
            objective: res.objective,
            solution: vec![0.0; m],
        });
    }
    let eps = res.solution[m];
    let lambda = res.solution[..m].iter().map(|s| s + eps).collect();
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective: eps,
        solution: lambda,
    })
}

/// Force-closure verdict at the contact set's own friction coefficient.
pub fn is_force_closure(contacts: &ContactSet, k: usize) -> Result<bool> {
    if k < 4 {
        return Err(Error::InvalidConfig(format!("cone discretization needs k >= 4, got {k}")));
    }
    let w = WrenchSet::from_contacts(contacts, k);
    if !w.spans_wrench_space() {
        return Ok(false);
    }
    let res = lp_max_min_weight(&w)?;
    Ok(res.status == LpStatus::Optimal && res.objective > POSITIVE_WEIGHT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MinFriction {
    Mu(f64),
    NotForceClosure,
}

impl MinFriction {
    pub fn value(&self) -> Option<f64> {
        match self {
            MinFriction::Mu(m) => Some(*m),
            MinFriction::NotForceClosure => None,
        }
    }
}

/// Smallest friction coefficient in `[0, mu_cap]` making the contacts force
/// closure, by bisection to bracket width `tol`.
pub fn min_friction(contacts: &ContactSet, k: usize, tol: f64, mu_cap: f64) -> Result<MinFriction> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    if !(mu_cap > 0.0 && mu_cap <= MAX_MU_CAP) {
        return Err(Error::InvalidConfig(format!("mu cap must lie in (0, {MAX_MU_CAP}], got {mu_cap}")));
    }
    if !is_force_closure(&contacts.with_mu(mu_cap), k)? {
        return Ok(MinFriction::NotForceClosure);
    }
    if is_force_closure(&contacts.with_mu(0.0), k)? {
        return Ok(MinFriction::Mu(0.0));
    }
    let (mut lo, mut hi) = (0.0, mu_cap);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if is_force_closure(&contacts.with_mu(mid), k)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinFriction::Mu(0.5 * (lo + hi)))
}

/// Contacts on a shape-free sphere-like set: inward axes `-x/|x|`.
pub fn radial_contacts(points: &[Point3<f64>], mu: f64) -> Result<ContactSet> {
    let axes = points.iter().map(|p| -p.coords.normalize()).collect();
    ContactSet::new(points.to_vec(), axes, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equator_triangle() -> Vec<Point3<f64>> {
        (0..3)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 3.0;
                Point3::new(a.cos(), a.sin(), 0.0)
            })
            .collect()
    }

    #[test]
    fn degenerate_cone_is_the_axis() {
        let axis = Vector3::new(0.0, 0.6, 0.8);
        for f in discretize_cone(&axis, 0.0, 8) {
            assert!((f - axis).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_cone_edges_are_at_45_degrees() {
        let edges = discretize_cone(&Vector3::z(), 1.0, 4);
        for f in &edges {
            assert!((f.z - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((f.norm() - 1.0).abs() < 1e-15);
        }
        assert!((edges[0] + edges[2] - 2.0 * edges[0].z * Vector3::z()).norm() < 1e-15);
        assert!((edges[1] + edges[3] - 2.0 * edges[1].z * Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn cone_membership() {
        let axis = Vector3::new(0.3, -0.4, 0.866).normalize();
        for mu in [0.1, 0.5, 1.3] {
            for f in discretize_cone(&axis, mu, 16) {
                assert!(f.dot(&axis) >= 1.0 / (mu * mu + 1.0).sqrt() - 1e-12);
            }
        }
    }

    #[test]
    fn signed_basis_lp() {
        let mut cols = Vec::new();
        for i in 0..6 {
            let mut e = Vector6::zeros();
            e[i] = 1.0;
            cols.push(e);
            cols.push(-e);
        }
        let res = lp_max_min_weight(&WrenchSet::from_columns(&cols, 4)).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.objective - 1.0 / 12.0).abs() < 1e-12);
        assert!((res.solution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_column_is_infeasible() {
        let col = Vector6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let res = lp_max_min_weight(&WrenchSet::from_columns(&[col], 4)).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn antipodal_pair_is_never_closure() {
        let pts = [Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)];
        for mu in [0.0, 0.5, 2.0] {
            assert!(!is_force_closure(&radial_contacts(&pts, mu).unwrap(), 16).unwrap());
        }
        assert_eq!(
            min_friction(&radial_contacts(&pts, 0.0).unwrap(), 16, 1e-3, 4.0).unwrap(),
            MinFriction::NotForceClosure
        );
    }

    #[test]
    fn equator_triangle_needs_some_friction() {
        let c = radial_contacts(&equator_triangle(), 0.1).unwrap();
        assert!(is_force_closure(&c, 16).unwrap());
        assert!(!is_force_closure(&c.with_mu(0.0), 16).unwrap());
        let mu0 = min_friction(&c, 16, 1e-3, 2.0).unwrap().value().unwrap();
        assert!(mu0 < 1e-3, "{mu0}");
    }

    #[test]
    fn tetrahedron_min_friction() {
        let s = 1.0 / 3f64.sqrt();
        let pts = [
            Point3::new(s, s, s),
            Point3::new(s, -s, -s),
            Point3::new(-s, s, -s),
            Point3::new(-s, -s, s),
        ];
        let c = radial_contacts(&pts, 0.0).unwrap();
        let mu0 = min_friction(&c, 16, 1e-4, 2.0).unwrap().value().unwrap();
        assert!(mu0 > 0.0 && mu0 < 0.5, "{mu0}");
    }

    #[test]
    fn parameter_validation() {
        let c = radial_contacts(&equator_triangle(), 0.1).unwrap();
        assert!(is_force_closure(&c, 3).is_err());
        assert!(min_friction(&c, 16, 0.0, 2.0).is_err());
        assert!(min_friction(&c, 16, 1e-3, 5.0).is_err());
    }
}
