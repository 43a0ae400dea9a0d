use fcgrasp::hand::{HandModel, HandPose, PriorWeights, SurfaceSampleIndex};
use fcgrasp::presets;
use fcgrasp::sdf::Shape;
use nalgebra::{DVector, Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<HandModel> {
    presets::HANDS.iter().map(|(n, _)| presets::hand(n).unwrap()).collect()
}

fn random_vector(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
}

fn random_pose(rng: &mut impl Rng, model: &HandModel) -> HandPose {
    let mut joints = model.rest_pose().clone();
    for q in joints.iter_mut() {
        *q += rng.random_range(-0.5..0.5);
    }
    HandPose {
        root_translation: random_vector(rng, 1.0),
        root_rotation: random_vector(rng, 1.7),
        joints,
    }
}

fn random_index(rng: &mut impl Rng, model: &HandModel) -> SurfaceSampleIndex {
    let s = model.samples();
    s[rng.random_range(0..s.len())]
}

#[test]
fn point_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let models = models();
    let h = 1e-6;
    for _ in 0..100 {
        let model = &models[rng.random_range(0..models.len())];
        let pose = random_pose(&mut rng, model);
        let idx = random_index(&mut rng, model);
        let jac = model.point_jacobian(&pose, &idx).unwrap();
        let base = pose.to_vector();
        let mut fd = jac.clone() * 0.0;
        for k in 0..model.dof() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += h;
            minus[k] -= h;
            let fp = model.frames(&HandPose::from_vector(&plus)).unwrap();
            let fm = model.frames(&HandPose::from_vector(&minus)).unwrap();
            let col = (model.point(&fp, &idx) - model.point(&fm, &idx)) / (2.0 * h);
            fd.set_column(k, &col);
        }
        let err = (&jac - &fd).norm() / jac.norm();
        assert!(err < 1e-5, "{} {:?}: relative error {err}", model.name(), idx);
    }
}

#[test]
fn jacobian_transpose_product_matches_dense_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for model in models() {
        let pose = random_pose(&mut rng, &model);
        let frames = model.frames(&pose).unwrap();
        for _ in 0..20 {
            let idx = random_index(&mut rng, &model);
            let v = random_vector(&mut rng, 1.0);
            let dense = model.point_jacobian(&pose, &idx).unwrap().transpose() * v;
            let mut acc = DVector::zeros(model.dof());
            model.accumulate_jacobian_transpose(&frames, &idx, &v, &mut acc);
            assert!((dense - acc).norm() < 1e-12);
        }
    }
}

#[test]
fn root_transform_moves_all_points_rigidly() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for model in models() {
        for _ in 0..20 {
            let pose = random_pose(&mut rng, &model);
            let t = Isometry3::from_parts(
                Translation3::from(random_vector(&mut rng, 2.0)),
                UnitQuaternion::from_scaled_axis(random_vector(&mut rng, 1.5)),
            );
            let moved_root = t * pose.root_isometry();
            let moved = HandPose {
                root_translation: moved_root.translation.vector,
                root_rotation: moved_root.rotation.scaled_axis(),
                joints: pose.joints.clone(),
            };
            let a = model.forward_points(&pose).unwrap();
            let b = model.forward_points(&moved).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((t * p - q).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn prior_is_nonnegative_and_zero_only_at_rest() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let w = PriorWeights::default();
    for model in models() {
        assert_eq!(model.prior_energy(&model.rest(), &w).unwrap(), 0.0);
        for _ in 0..100 {
            let pose = random_pose(&mut rng, &model);
            let e = model.prior_energy(&pose, &w).unwrap();
            assert!(e > 0.0);
        }
    }
}

#[test]
fn prior_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let w = PriorWeights::default();
    let h = 1e-5;
    for model in models() {
        for _ in 0..100 {
            let mut pose = random_pose(&mut rng, &model);
            // push some joints beyond their limits
            for (i, &(lo, hi)) in model.limits().iter().enumerate() {
                if rng.random_bool(0.3) {
                    pose.joints[i] = if rng.random_bool(0.5) { lo - rng.random_range(0.01..0.3) } else { hi + rng.random_range(0.01..0.3) };
                }
            }
            let (_, g) = model.prior_with_grad(&pose, &w).unwrap();
            let base = pose.to_vector();
            for k in 0..model.dof() {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[k] += h;
                minus[k] -= h;
                let fd = (model.prior_energy(&HandPose::from_vector(&plus), &w).unwrap()
                    - model.prior_energy(&HandPose::from_vector(&minus), &w).unwrap())
                    / (2.0 * h);
                assert!((g[k] - fd).abs() < 1e-8, "{}: dof {k}: {} vs {fd}", model.name(), g[k]);
            }
        }
    }
}

#[test]
fn penetration_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let shapes = [presets::shape("sphere").unwrap(), presets::shape("bottle").unwrap()];
    let h = 1e-6;
    let mut checked = 0;
    while checked < 100 {
        let model = presets::hand(["tripod", "gripper3"][checked % 2]).unwrap();
        let shape = &shapes[checked % 2];
        let mut pose = random_pose(&mut rng, &model);
        pose.root_translation = random_vector(&mut rng, 1.5);
        let pts = model.forward_points(&pose).unwrap();
        let near_surface = pts.iter().any(|p| shape.distance(p).abs() < 1e-3);
        let (e, g) = model.penetration_with_grad(&pose, shape).unwrap();
        if e == 0.0 || near_surface {
            continue;
        }
        let base = pose.to_vector();
        let fd = DVector::from_fn(model.dof(), |k, _| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += h;
            minus[k] -= h;
            (model.penetration_energy(&HandPose::from_vector(&plus), shape).unwrap()
                - model.penetration_energy(&HandPose::from_vector(&minus), shape).unwrap())
                / (2.0 * h)
        });
        let err = (&g - &fd).norm() / fd.norm().max(1e-12);
        assert!(err < 1e-4, "relative error {err}");
        checked += 1;
    }
}

#[test]
fn penetration_decreases_when_pulled_out_of_a_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let sphere = Shape::sphere(1.0);
    let mut checked = 0;
    while checked < 50 {
        let model = presets::hand(["tripod", "quad", "gripper3"][checked % 3]).unwrap();
        let mut pose = random_pose(&mut rng, &model);
        let pts = model.forward_points(&pose).unwrap();
        let centroid = pts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / pts.len() as f64;
        if centroid.norm() < 1e-6 {
            continue;
        }
        let dir = sphere.gradient(&centroid.into());
        // shift so every sample lies in the half-space where moving along dir leaves the sphere
        let lowest = pts.iter().map(|p| p.coords.dot(&dir)).fold(f64::INFINITY, f64::min);
        pose.root_translation += dir * (rng.random_range(0.0..0.5) - lowest);
        let mut prev = model.penetration_energy(&pose, &sphere).unwrap();
        if prev == 0.0 {
            continue;
        }
        for _ in 0..40 {
            pose.root_translation += dir * 0.05;
            let e = model.penetration_energy(&pose, &sphere).unwrap();
            assert!(e <= prev + 1e-12, "{e} > {prev}");
            prev = e;
        }
        assert_eq!(prev, 0.0);
        checked += 1;
    }
}

#[test]
fn mimic_joints_follow_their_source() {
    let g = presets::hand("gripper3").unwrap();
    let mut pose = g.rest();
    let b = g.joint_names().iter().position(|n| n == "b_scissor").unwrap();
    pose.joints[b] = 0.25;
    let frames = g.frames(&pose).unwrap();
    let bl = g.link_index("b_scissor").unwrap();
    let cl = g.link_index("c_scissor").unwrap();
    let (rb, rc) = (frames.link[bl].rotation, frames.link[cl].rotation);
    assert!((rb.angle() - 0.25).abs() < 1e-12 && (rc.angle() - 0.25).abs() < 1e-12);
    assert!((rb.axis().unwrap().z + rc.axis().unwrap().z).abs() < 1e-12);
}
