//! Config-defined articulated hands.
//!
//! A hand is a tree of rigid links joined by revolute joints (optionally
//! coupled to another joint), carrying surface sample points. The pose vector
//! is `[root translation (3), root rotation as exponential coordinates (3),
//! independent joint angles (q)]`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{
    DVector, Isometry3, Matrix3, Matrix3xX, Point3, Translation3, Unit, UnitQuaternion, Vector3,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::skew;
use crate::sdf::{Shape, TransformSpec};

pub const ROOT_DOF: usize = 6;

/// JSON form of a hand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandSpec {
    #[serde(default)]
    pub name: String,
    /// Palm approach direction in the root frame, used to face the object at
    /// initialization.
    #[serde(default = "default_approach")]
    pub approach: [f64; 3],
    pub links: Vec<LinkSpec>,
    pub rest_pose: Vec<f64>,
}

fn default_approach() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub origin: TransformSpec,
    /// Revolute joint axis in the joint frame; absent for a fixed link.
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    #[serde(default)]
    pub limits: Option<[f64; 2]>,
    /// Couples this joint to another link's joint: `q = multiplier·q_src + offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mimic: Option<MimicSpec>,
    #[serde(default)]
    pub samples: Vec<[f64; 3]>,
    #[serde(default)]
    pub contact_candidate: bool,
    /// Restricts candidacy to these sample indices; all samples when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_samples: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MimicSpec {
    pub joint: String,
    #[serde(default = "one")]
    pub multiplier: f64,
    #[serde(default)]
    pub offset: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy)]
enum Drive {
    Independent(usize),
    Mimic { source: usize, multiplier: f64, offset: f64 },
}

impl Drive {
    fn angle(&self, joints: &DVector<f64>) -> f64 {
        match *self {
            Drive::Independent(i) => joints[i],
            Drive::Mimic {
                source,
                multiplier,
                offset,
            } => multiplier * joints[source] + offset,
        }
    }

    fn column(&self) -> (usize, f64) {
        match *self {
            Drive::Independent(i) => (i, 1.0),
            Drive::Mimic {
                source, multiplier, ..
            } => (source, multiplier),
        }
    }
}

#[derive(Debug, Clone)]
struct Joint {
    axis: Unit<Vector3<f64>>,
    drive: Drive,
}

#[derive(Debug, Clone)]
struct Link {
    name: String,
    parent: Option<usize>,
    origin: Isometry3<f64>,
    joint: Option<Joint>,
    samples: Vec<Point3<f64>>,
    // links from the root down to and including this one
    chain: Vec<usize>,
}

/// Identifies one surface sample: link index + sample index within the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurfaceSampleIndex {
    pub link: usize,
    pub point: usize,
}

/// Immutable kinematic tree with surface samples.
#[derive(Debug, Clone)]
pub struct HandModel {
    name: String,
    links: Vec<Link>,
    joint_names: Vec<String>,
    limits: Vec<(f64, f64)>,
    rest_pose: DVector<f64>,
    candidates: Vec<SurfaceSampleIndex>,
    all_samples: Vec<SurfaceSampleIndex>,
    approach: Unit<Vector3<f64>>,
    spec: HandSpec,
}

impl HandModel {
    pub fn from_spec(spec: HandSpec) -> Result<Self> {
        let invalid = |m: String| Error::InvalidModel(m);
        let mut by_name = HashMap::new();
        for (i, l) in spec.links.iter().enumerate() {
            if by_name.insert(l.name.as_str(), i).is_some() {
                return Err(invalid(format!("duplicate link name {:?}", l.name)));
            }
        }
        let roots: Vec<_> = spec.links.iter().filter(|l| l.parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(invalid(format!("expected exactly one root link, found {}", roots.len())));
        }

        // parents before children
        let mut order = Vec::with_capacity(spec.links.len());
        let mut placed = vec![false; spec.links.len()];
        while order.len() < spec.links.len() {
            let before = order.len();
            for (i, l) in spec.links.iter().enumerate() {
                if placed[i] {
                    continue;
                }
                let ready = match &l.parent {
                    None => true,
                    Some(p) => {
                        let pi = *by_name
                            .get(p.as_str())
                            .ok_or_else(|| invalid(format!("link {:?} has unknown parent {p:?}", l.name)))?;
                        placed[pi]
                    }
                };
                if ready {
                    placed[i] = true;
                    order.push(i);
                }
            }
            if order.len() == before {
                return Err(invalid("link tree contains a cycle".into()));
            }
        }
        let new_index: HashMap<usize, usize> = order.iter().enumerate().map(|(n, &o)| (o, n)).collect();

        // independent joints are numbered in tree order
        let mut joint_names = Vec::new();
        let mut limits = Vec::new();
        let mut dof_of_link = HashMap::new();
        for &o in &order {
            let l = &spec.links[o];
            if l.axis.is_some() && l.mimic.is_none() {
                let [lo, hi] = l
                    .limits
                    .ok_or_else(|| invalid(format!("joint {:?} needs limits", l.name)))?;
                if !(lo < hi) {
                    return Err(invalid(format!("joint {:?} has limits lo >= hi", l.name)));
                }
                dof_of_link.insert(l.name.as_str(), joint_names.len());
                joint_names.push(l.name.clone());
                limits.push((lo, hi));
            }
        }

        let mut links: Vec<Link> = Vec::with_capacity(order.len());
        for &o in &order {
            let l = &spec.links[o];
            let joint = match l.axis {
                None => {
                    if l.mimic.is_some() {
                        return Err(invalid(format!("fixed link {:?} cannot mimic a joint", l.name)));
                    }
                    None
                }
                Some(axis) => {
                    let v = Vector3::from(axis);
                    if (v.norm() - 1.0).abs() > 1e-9 {
                        return Err(invalid(format!("joint axis of {:?} is not unit-norm", l.name)));
                    }
                    let drive = match &l.mimic {
                        None => Drive::Independent(dof_of_link[l.name.as_str()]),
                        Some(m) => Drive::Mimic {
                            source: *dof_of_link.get(m.joint.as_str()).ok_or_else(|| {
                                invalid(format!(
                                    "{:?} mimics {:?}, which is not an independent joint",
                                    l.name, m.joint
                                ))
                            })?,
                            multiplier: m.multiplier,
                            offset: m.offset,
                        },
                    };
                    Some(Joint {
                        axis: Unit::new_unchecked(v),
                        drive,
                    })
                }
            };
            let parent = l.parent.as_ref().map(|p| new_index[&by_name[p.as_str()]]);
            let mut chain = parent.map_or_else(Vec::new, |p| links[p].chain.clone());
            chain.push(links.len());
            links.push(Link {
                name: l.name.clone(),
                parent,
                origin: l.origin.to_isometry()?,
                joint,
                samples: l.samples.iter().map(|s| Point3::from(*s)).collect(),
                chain,
            });
        }

        let mut candidates = Vec::new();
        let mut all_samples = Vec::new();
        for (li, &o) in order.iter().enumerate() {
            let l = &spec.links[o];
            for p in 0..l.samples.len() {
                all_samples.push(SurfaceSampleIndex { link: li, point: p });
            }
            if l.contact_candidate {
                match &l.contact_samples {
                    None => candidates.extend((0..l.samples.len()).map(|p| SurfaceSampleIndex { link: li, point: p })),
                    Some(idx) => {
                        for &p in idx {
                            if p >= l.samples.len() {
                                return Err(invalid(format!("{:?}: contact sample {p} out of range", l.name)));
                            }
                            candidates.push(SurfaceSampleIndex { link: li, point: p });
                        }
                    }
                }
            }
        }
        if all_samples.len() < 3 {
            return Err(invalid("hand needs at least 3 surface samples".into()));
        }
        if spec.rest_pose.len() != joint_names.len() {
            return Err(Error::DimensionMismatch {
                expected: joint_names.len(),
                got: spec.rest_pose.len(),
            });
        }
        let approach = Vector3::from(spec.approach);
        if !(approach.norm() > 0.0) {
            return Err(invalid("approach direction must be nonzero".into()));
        }

        Ok(Self {
            name: spec.name.clone(),
            links,
            joint_names,
            limits,
            rest_pose: DVector::from_column_slice(&spec.rest_pose),
            candidates,
            all_samples,
            approach: Unit::new_normalize(approach),
            spec,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    pub fn spec(&self) -> &HandSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    /// Length of the full pose vector, `6 + q`.
    pub fn dof(&self) -> usize {
        ROOT_DOF + self.num_joints()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    pub fn rest_pose(&self) -> &DVector<f64> {
        &self.rest_pose
    }

    pub fn approach(&self) -> Vector3<f64> {
        self.approach.into_inner()
    }

    pub fn link_name(&self, link: usize) -> &str {
        &self.links[link].name
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    /// Samples eligible as contact points.
    pub fn contact_candidates(&self) -> &[SurfaceSampleIndex] {
        &self.candidates
    }

    /// Every surface sample, in link order.
    pub fn samples(&self) -> &[SurfaceSampleIndex] {
        &self.all_samples
    }

    pub fn validate_index(&self, idx: &SurfaceSampleIndex) -> Result<()> {
        match self.links.get(idx.link) {
            Some(l) if idx.point < l.samples.len() => Ok(()),
            _ => Err(Error::InvalidIndex(format!("{idx:?}"))),
        }
    }

    pub fn rest(&self) -> HandPose {
        HandPose {
            root_translation: Vector3::zeros(),
            root_rotation: Vector3::zeros(),
            joints: self.rest_pose.clone(),
        }
    }

    fn check_pose(&self, pose: &HandPose) -> Result<()> {
        if pose.joints.len() != self.num_joints() {
            return Err(Error::DimensionMismatch {
                expected: self.num_joints(),
                got: pose.joints.len(),
            });
        }
        Ok(())
    }

    /// World frames of every link for `pose`.
    pub fn frames(&self, pose: &HandPose) -> Result<Frames> {
        self.check_pose(pose)?;
        let root = pose.root_isometry();
        let mut link = Vec::with_capacity(self.links.len());
        let mut joint_origin = Vec::with_capacity(self.links.len());
        let mut joint_axis = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let pre = match l.parent {
                None => root * l.origin,
                Some(p) => link[p] * l.origin,
            };
            let (post, axis) = match &l.joint {
                Some(j) => {
                    let q = j.drive.angle(&pose.joints);
                    let rot = UnitQuaternion::from_axis_angle(&j.axis, q);
                    (pre * rot, pre.rotation * j.axis.into_inner())
                }
                None => (pre, Vector3::zeros()),
            };
            joint_origin.push(Point3::from(pre.translation.vector));
            joint_axis.push(axis);
            link.push(post);
        }
        Ok(Frames {
            root,
            root_rotation: pose.root_rotation,
            link,
            joint_origin,
            joint_axis,
        })
    }

    pub fn point(&self, frames: &Frames, idx: &SurfaceSampleIndex) -> Point3<f64> {
        frames.link[idx.link] * self.links[idx.link].samples[idx.point]
    }

    /// World positions of all surface samples, in [`Self::samples`] order.
    pub fn forward_points(&self, pose: &HandPose) -> Result<Vec<Point3<f64>>> {
        let frames = self.frames(pose)?;
        Ok(self.all_samples.iter().map(|i| self.point(&frames, i)).collect())
    }

    /// `∂p/∂H` for one surface sample, 3 × (6 + q).
    pub fn point_jacobian(&self, pose: &HandPose, idx: &SurfaceSampleIndex) -> Result<Matrix3xX<f64>> {
        self.validate_index(idx)?;
        let frames = self.frames(pose)?;
        let p = self.point(&frames, idx);
        let mut jac = Matrix3xX::zeros(self.dof());
        jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        let rot_block = -skew(&(p - frames.root.translation.vector).coords) * left_jacobian(&frames.root_rotation);
        jac.fixed_view_mut::<3, 3>(0, 3).copy_from(&rot_block);
        for &a in &self.links[idx.link].chain {
            if let Some(j) = &self.links[a].joint {
                let (dof, mult) = j.drive.column();
                let col = frames.joint_axis[a].cross(&(p - frames.joint_origin[a])) * mult;
                let mut c = jac.column_mut(ROOT_DOF + dof);
                c += col;
            }
        }
        Ok(jac)
    }

    /// Adds `Jᵀv` for the sample at `idx` into `grad` without forming `J`.
    pub fn accumulate_jacobian_transpose(
        &self,
        frames: &Frames,
        idx: &SurfaceSampleIndex,
        v: &Vector3<f64>,
        grad: &mut DVector<f64>,
    ) {
        let p = self.point(frames, idx);
        grad[0] += v.x;
        grad[1] += v.y;
        grad[2] += v.z;
        // (-[a]ₓ J_l)ᵀ v = J_lᵀ (a × v)
        let a = p.coords - frames.root.translation.vector;
        let rot = left_jacobian(&frames.root_rotation).transpose() * a.cross(v);
        grad[3] += rot.x;
        grad[4] += rot.y;
        grad[5] += rot.z;
        for &l in &self.links[idx.link].chain {
            if let Some(j) = &self.links[l].joint {
                let (dof, mult) = j.drive.column();
                grad[ROOT_DOF + dof] += mult * v.dot(&frames.joint_axis[l].cross(&(p - frames.joint_origin[l])));
            }
        }
    }

    pub fn prior_energy(&self, pose: &HandPose, w: &PriorWeights) -> Result<f64> {
        Ok(self.prior_with_grad(pose, w)?.0)
    }

    /// Prior energy and its gradient over the full pose vector.
    pub fn prior_with_grad(&self, pose: &HandPose, w: &PriorWeights) -> Result<(f64, DVector<f64>)> {
        self.check_pose(pose)?;
        let mut e = 0.0;
        let mut grad = DVector::zeros(self.dof());
        for (i, &(lo, hi)) in self.limits.iter().enumerate() {
            let q = pose.joints[i];
            let dev = q - self.rest_pose[i];
            let below = (lo - q).max(0.0);
            let above = (q - hi).max(0.0);
            e += w.rest * dev * dev + w.limit * (below * below + above * above);
            grad[ROOT_DOF + i] = 2.0 * w.rest * dev + 2.0 * w.limit * (above - below);
        }
        Ok((e, grad))
    }

    pub fn penetration_energy(&self, pose: &HandPose, shape: &Shape) -> Result<f64> {
        let frames = self.frames(pose)?;
        Ok(self
            .all_samples
            .iter()
            .map(|i| (-shape.distance(&self.point(&frames, i))).max(0.0))
            .sum())
    }

    /// `Σ σ(v)` over all samples with `σ = max(0, -d)`, and its pose gradient.
    /// Samples exactly on the surface contribute zero gradient.
    pub fn penetration_with_grad(&self, pose: &HandPose, shape: &Shape) -> Result<(f64, DVector<f64>)> {
        let frames = self.frames(pose)?;
        Ok(self.penetration_with_grad_at(&frames, shape))
    }

    pub fn penetration_with_grad_at(&self, frames: &Frames, shape: &Shape) -> (f64, DVector<f64>) {
        let mut e = 0.0;
        let mut grad = DVector::zeros(self.dof());
        for idx in &self.all_samples {
            let p = self.point(frames, idx);
            let d = shape.distance(&p);
            if d < 0.0 {
                e -= d;
                let g = -shape.gradient(&p);
                self.accumulate_jacobian_transpose(frames, idx, &g, &mut grad);
            }
        }
        (e, grad)
    }
}

/// World-frame kinematic state for one pose.
#[derive(Debug, Clone)]
pub struct Frames {
    pub root: Isometry3<f64>,
    pub root_rotation: Vector3<f64>,
    pub link: Vec<Isometry3<f64>>,
    pub joint_origin: Vec<Point3<f64>>,
    pub joint_axis: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorWeights {
    pub rest: f64,
    pub limit: f64,
}

impl Default for PriorWeights {
    fn default() -> Self {
        Self {
            rest: 0.1,
            limit: 10.0,
        }
    }
}

/// Hand configuration `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "HandPoseSpec", into = "HandPoseSpec")]
pub struct HandPose {
    pub root_translation: Vector3<f64>,
    /// Exponential coordinates (axis · angle).
    pub root_rotation: Vector3<f64>,
    pub joints: DVector<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandPoseSpec {
    pub root_translation: [f64; 3],
    pub root_rotation: [f64; 3],
    pub joints: Vec<f64>,
}

impl From<HandPoseSpec> for HandPose {
    fn from(s: HandPoseSpec) -> Self {
        Self {
            root_translation: Vector3::from(s.root_translation),
            root_rotation: Vector3::from(s.root_rotation),
            joints: DVector::from_vec(s.joints),
        }
    }
}

impl From<HandPose> for HandPoseSpec {
    fn from(p: HandPose) -> Self {
        Self {
            root_translation: p.root_translation.into(),
            root_rotation: p.root_rotation.into(),
            joints: p.joints.iter().copied().collect(),
        }
    }
}

impl HandPose {
    pub fn from_vector(h: &DVector<f64>) -> Self {
        Self {
            root_translation: Vector3::new(h[0], h[1], h[2]),
            root_rotation: Vector3::new(h[3], h[4], h[5]),
            joints: h.rows(ROOT_DOF, h.len() - ROOT_DOF).into_owned(),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(ROOT_DOF + self.joints.len());
        v.fixed_rows_mut::<3>(0).copy_from(&self.root_translation);
        v.fixed_rows_mut::<3>(3).copy_from(&self.root_rotation);
        v.rows_mut(ROOT_DOF, self.joints.len()).copy_from(&self.joints);
        v
    }

    pub fn root_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.root_translation),
            UnitQuaternion::from_scaled_axis(self.root_rotation),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.root_translation.iter().chain(self.root_rotation.iter()).chain(self.joints.iter()).all(|v| v.is_finite())
    }

    /// Maps the rotation vector to the equivalent one with angle in `[0, π]`.
    pub fn canonicalize(&mut self) {
        self.root_rotation = canonical_rotation(&self.root_rotation);
    }
}

pub fn canonical_rotation(r: &Vector3<f64>) -> Vector3<f64> {
    let theta = r.norm();
    if theta <= PI {
        return *r;
    }
    let mut wrapped = theta % (2.0 * PI);
    if wrapped > PI {
        wrapped -= 2.0 * PI;
    }
    r * (wrapped / theta)
}

/// Left Jacobian of SO(3): `exp([r + δ]) ≈ exp([J_l(r) δ]) exp([r])`.
pub fn left_jacobian(r: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = r.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(r);
    let (a, b) = if theta < 1e-4 {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_link() -> HandModel {
        HandModel::from_json(
            r#"{"links":[{"name":"palm","samples":[[1,0,0],[0,1,0],[0,0,1]]}],"rest_pose":[]}"#,
        )
        .unwrap()
    }

    // two links of length 1 along x, both rotating about z
    fn planar_finger() -> HandModel {
        HandModel::from_json(
            r#"{"links":[
                {"name":"base","samples":[[0,0,0],[0,0.1,0]]},
                {"name":"l1","parent":"base","axis":[0,0,1],"limits":[-3,3],"samples":[[0.5,0,0]]},
                {"name":"l2","parent":"l1","origin":{"translation":[1,0,0]},"axis":[0,0,1],"limits":[-3,3],
                 "samples":[[1,0,0]],"contact_candidate":true}
            ],"rest_pose":[0,0]}"#,
        )
        .unwrap()
    }

    #[test]
    fn identity_pose_and_shift() {
        let m = single_link();
        let mut pose = m.rest();
        assert_eq!(m.forward_points(&pose).unwrap()[0], Point3::new(1.0, 0.0, 0.0));
        pose.root_translation = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(m.forward_points(&pose).unwrap()[0], Point3::new(1.0, 0.0, 1.0));
    }

    #[test]
    fn two_link_fk_matches_closed_form() {
        let m = planar_finger();
        let mut pose = m.rest();
        let (q1, q2) = (std::f64::consts::FRAC_PI_2, -0.4);
        pose.joints = DVector::from_vec(vec![q1, q2]);
        let pts = m.forward_points(&pose).unwrap();
        let tip = pts[3];
        let expected = Point3::new(q1.cos() + (q1 + q2).cos(), q1.sin() + (q1 + q2).sin(), 0.0);
        assert_relative_eq!(tip, expected, epsilon = 1e-12);
        assert_eq!(m.contact_candidates(), &[SurfaceSampleIndex { link: 2, point: 0 }]);
    }

    #[test]
    fn jacobian_structure() {
        let m = planar_finger();
        let pose = m.rest();
        let j = m.point_jacobian(&pose, &SurfaceSampleIndex { link: 1, point: 0 }).unwrap();
        assert_eq!(j.fixed_view::<3, 3>(0, 0), Matrix3::identity());
        // l2's joint does not move l1
        assert_eq!(j.column(7).norm(), 0.0);
        assert!(j.column(6).norm() > 0.0);
    }

    #[test]
    fn prior_examples() {
        let m = planar_finger();
        let w = PriorWeights { rest: 0.1, limit: 1.0 };
        assert_eq!(m.prior_energy(&m.rest(), &w).unwrap(), 0.0);
        let mut pose = m.rest();
        pose.joints[1] = 3.1;
        let e = m.prior_energy(&pose, &w).unwrap();
        assert_relative_eq!(e, 0.01 + 0.1 * 3.1 * 3.1, epsilon = 1e-12);
    }

    #[test]
    fn penetration_examples() {
        let m = single_link();
        let sphere = Shape::sphere(1.0);
        let mut pose = m.rest();
        pose.root_translation = Vector3::new(5.0, 0.0, 0.0);
        assert_eq!(m.penetration_energy(&pose, &sphere).unwrap(), 0.0);

        let center = HandModel::from_json(
            r#"{"links":[{"name":"p","samples":[[0,0,0],[0,0,0.8],[5,5,5]]}],"rest_pose":[]}"#,
        )
        .unwrap();
        let e = center.penetration_energy(&center.rest(), &sphere).unwrap();
        assert_relative_eq!(e, 1.0 + 0.2, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let m = planar_finger();
        let mut pose = m.rest();
        pose.joints = DVector::zeros(3);
        assert!(matches!(m.forward_points(&pose), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn model_validation() {
        let bad = [
            r#"{"links":[{"name":"a"},{"name":"b"}],"rest_pose":[]}"#,
            r#"{"links":[{"name":"a","samples":[[0,0,0],[1,0,0],[2,0,0]]},{"name":"b","parent":"zz"}],"rest_pose":[]}"#,
            r#"{"links":[{"name":"a","samples":[[0,0,0],[1,0,0],[2,0,0]]},{"name":"b","parent":"a","axis":[0,0,2],"limits":[0,1]}],"rest_pose":[0]}"#,
            r#"{"links":[{"name":"a","samples":[[0,0,0],[1,0,0],[2,0,0]]},{"name":"b","parent":"a","axis":[0,0,1],"limits":[1,0]}],"rest_pose":[0]}"#,
            r#"{"links":[{"name":"a","samples":[[0,0,0]]}],"rest_pose":[]}"#,
            r#"{"links":[{"name":"a","samples":[[0,0,0],[1,0,0],[2,0,0]]}],"rest_pose":[1]}"#,
        ];
        for b in bad {
            assert!(HandModel::from_json(b).is_err(), "{b}");
        }
    }

    #[test]
    fn canonical_rotation_preserves_rotation() {
        let r = Vector3::new(4.0, -1.0, 2.5);
        let c = canonical_rotation(&r);
        assert!(c.norm() <= PI);
        let a = UnitQuaternion::from_scaled_axis(r);
        let b = UnitQuaternion::from_scaled_axis(c);
        assert!(a.angle_to(&b) < 1e-12);
    }
}
