use fcgrasp::sdf::Shape;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn primitives() -> Vec<(&'static str, Shape)> {
    vec![
        ("sphere", Shape::sphere(1.0)),
        ("box", Shape::cuboid(Vector3::new(0.6, 0.4, 0.8))),
        ("capsule", Shape::capsule(0.5, 0.4)),
        ("cylinder", Shape::cylinder(0.6, 0.45)),
        ("torus", Shape::torus(0.8, 0.25)),
    ]
}

fn central_difference(shape: &Shape, p: &Point3<f64>, h: f64) -> Vector3<f64> {
    Vector3::from_fn(|i, _| {
        let mut e = Vector3::zeros();
        e[i] = h;
        (shape.distance(&(p + e)) - shape.distance(&(p - e))) / (2.0 * h)
    })
}

#[test]
fn gradients_match_finite_differences_on_1000_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, shape) in primitives() {
        let mut checked = 0;
        while checked < 1000 {
            let p = Point3::new(rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6));
            // skip the measure-zero creases of box/cylinder/torus fields
            let probe = Vector3::repeat(1e-4);
            if (shape.gradient(&(p + probe)) - shape.gradient(&(p - probe))).norm() > 1e-2 {
                continue;
            }
            let g = shape.gradient(&p);
            let fd = central_difference(&shape, &p, 1e-6);
            assert!((g - fd).norm() <= 1e-6 * g.norm(), "{name} at {p}: {g} vs {fd}");
            checked += 1;
        }
    }
}

#[test]
fn composed_shape_gradient_matches_finite_differences() {
    let bottle = fcgrasp::presets::shape("bottle").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let p = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.5));
        let probe = Vector3::repeat(1e-4);
        if (bottle.gradient(&(p + probe)) - bottle.gradient(&(p - probe))).norm() > 1e-2 {
            continue;
        }
        let g = bottle.gradient(&p);
        let fd = central_difference(&bottle, &p, 1e-6);
        assert!((g - fd).norm() <= 1e-6 * g.norm(), "{p}: {g} vs {fd}");
    }
}

#[test]
fn box_samples_are_area_proportional_per_face() {
    let h = Vector3::new(0.6, 0.4, 0.8);
    let shape = Shape::cuboid(h);
    let n = 10_000;
    let pts = shape.sample_surface(n, 5).unwrap();
    assert_eq!(pts.len(), n);

    let mut counts = [0usize; 6];
    for p in &pts {
        assert!(shape.distance(p).abs() < 1e-6);
        let axis = (0..3)
            .max_by(|&a, &b| (p[a].abs() - h[a]).total_cmp(&(p[b].abs() - h[b])))
            .unwrap();
        counts[2 * axis + usize::from(p[axis] < 0.0)] += 1;
    }
    let face_area = [h.y * h.z, h.x * h.z, h.x * h.y].map(|a| 4.0 * a);
    let total: f64 = 2.0 * face_area.iter().sum::<f64>();
    for (face, &c) in counts.iter().enumerate() {
        let prob = face_area[face / 2] / total;
        let expected = n as f64 * prob;
        let sigma = (n as f64 * prob * (1.0 - prob)).sqrt();
        assert!(
            (c as f64 - expected).abs() < 5.0 * sigma,
            "face {face}: {c} vs {expected:.0} ± {sigma:.1}"
        );
    }
}

#[test]
fn projection_reaches_tolerance_from_random_starts() {
    let bottle = fcgrasp::presets::shape("bottle").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let r = bottle.bounding_radius();
    for _ in 0..500 {
        let p = Point3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r));
        if let Ok(q) = bottle.project_to_surface(&p, 1e-8) {
            assert!(bottle.distance(&q).abs() < 1e-8);
        }
    }
}
