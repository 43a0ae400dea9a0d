use std::path::PathBuf;

use fcgrasp::fcest::{fc_energy, fc_energy_with_grad, ContactSet, FcBreakdown, FcConfig, SURFACE_KINK_TOL};
use fcgrasp::oracle::{self, DEFAULT_CONE_EDGES};
use fcgrasp::sdf::Shape;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::sample_seed;
use crate::error::{CliError, CliResult};
use crate::fc_test::load_fc_config;
use crate::inputs::load_shape;
use crate::manifest::{OutputDir, RunManifest};
use crate::worker_pool;

pub const MAX_ITERS: usize = 2000;
pub const TARGET_ENERGY: f64 = 1e-3;
pub const ORACLE_MU: f64 = 0.1;
/// Initial points sit within this fraction of the bounding radius of the surface.
pub const INIT_OFFSET: f64 = 0.05;
const ARMIJO: f64 = 1e-4;
const SURFACE_BAND: f64 = 1e-6;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ContactGenArgs {
    pub shape: String,
    pub n_contacts: usize,
    pub seeds: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub config: Option<PathBuf>,
    pub threads: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent {
    pub points: Vec<[f64; 3]>,
    pub breakdown: FcBreakdown,
    pub converged: bool,
    pub iterations: usize,
    /// Total energy at the start and after every accepted step.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactGenResult {
    pub index: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub breakdown: FcBreakdown,
    pub contacts: ContactSet,
    /// Classic verdict at μ = 0.1 with inward normals.
    pub oracle_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactGenSummary {
    pub n_contacts: usize,
    pub n_seeds: usize,
    pub n_converged: usize,
    pub success_fraction: f64,
    pub n_oracle_pass: usize,
    /// Among converged sets.
    pub oracle_pass_fraction: f64,
}

/// Points drawn on the surface and pushed off it by a random offset.
pub fn surface_adjacent_init(shape: &Shape, n: usize, seed: u64) -> CliResult<Vec<Point3<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on_surface = shape.sample_surface(n, rng.random())?;
    let scale = INIT_OFFSET * shape.bounding_radius();
    Ok(on_surface
        .into_iter()
        .map(|p| {
            let dir = Vector3::from(rng.sample::<[f64; 3], _>(UnitSphere));
            p + dir * rng.random_range(0.0..scale)
        })
        .collect())
}

/// Steepest-descent direction of the energy. Within `SURFACE_BAND` of the
/// surface the `|d|` term is treated as non-smooth and the minimum-norm
/// element of its subdifferential is used.
pub fn descent_direction(shape: &Shape, cfg: &FcConfig, points: &[Point3<f64>], grad: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let w = cfg.dist_weight;
    points
        .iter()
        .zip(grad)
        .map(|(p, g)| {
            let (d, n) = shape.distance_and_gradient(p);
            let n2 = n.norm_squared();
            if d.abs() > SURFACE_BAND || w == 0.0 || n2 == 0.0 {
                return *g;
            }
            let smooth = if d.abs() > SURFACE_KINK_TOL { g - n * (w * d.signum()) } else { *g };
            let s = (-smooth.dot(&n) / (w * n2)).clamp(-1.0, 1.0);
            smooth + n * (w * s)
        })
        .collect()
}

/// Descent with Armijo backtracking. The step doubles after every accepted
/// move and halves while the sufficient-decrease test fails.
pub fn descend(shape: &Shape, cfg: &FcConfig, init: Vec<Point3<f64>>, max_iters: usize) -> Descent {
    let mut x = init;
    let (mut e, mut g) = fc_energy_with_grad(&x, shape, cfg);
    let mut trace = vec![e.total];
    let mut step = INITIAL_STEP;
    let mut iterations = 0;
    while iterations < max_iters && e.total >= TARGET_ENERGY {
        let dir = descent_direction(shape, cfg, &x, &g);
        let g2: f64 = dir.iter().map(|v| v.norm_squared()).sum();
        if g2 == 0.0 {
            break;
        }
        let accepted = loop {
            let cand: Vec<Point3<f64>> = x.iter().zip(&dir).map(|(p, d)| p - d * step).collect();
            let ce = fc_energy(&cand, shape, cfg);
            if ce.total <= e.total - ARMIJO * step * g2 {
                break Some(cand);
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some(cand) = accepted else { break };
        x = cand;
        (e, g) = fc_energy_with_grad(&x, shape, cfg);
        trace.push(e.total);
        step *= 2.0;
        iterations += 1;
    }
    Descent {
        points: x.iter().map(|p| [p.x, p.y, p.z]).collect(),
        converged: e.total < TARGET_ENERGY,
        breakdown: e,
        iterations,
        trace,
    }
}

pub fn run_seed(
    shape: &Shape,
    cfg: &FcConfig,
    n_contacts: usize,
    index: usize,
    seed: u64,
    max_iters: usize,
) -> CliResult<(ContactGenResult, Vec<f64>)> {
    let init = surface_adjacent_init(shape, n_contacts, seed)?;
    let d = descend(shape, cfg, init, max_iters);
    let points = d.points.iter().map(|p| Point3::from(*p)).collect();
    let contacts = ContactSet::from_surface(points, shape, ORACLE_MU)?;
    let oracle_pass = oracle::is_force_closure(&contacts, DEFAULT_CONE_EDGES)?;
    Ok((
        ContactGenResult {
            index,
            seed,
            converged: d.converged,
            iterations: d.iterations,
            breakdown: d.breakdown,
            contacts,
            oracle_pass,
        },
        d.trace,
    ))
}

pub fn contact_gen(args: &ContactGenArgs) -> CliResult<ContactGenSummary> {
    if args.n_contacts < 3 {
        return Err(CliError::Input(format!("--n-contacts must be at least 3, got {}", args.n_contacts)));
    }
    if args.seeds == 0 {
        return Err(CliError::Input("--seeds must be positive".into()));
    }
    let (shape, shape_input) = load_shape(&args.shape)?;
    let (cfg, cfg_input) = load_fc_config(args.config.as_deref())?;
    let mut inputs = vec![shape_input.record("shape")];
    let config_hash = match &cfg_input {
        Some(c) => {
            inputs.push(c.record("config"));
            c.sha256()
        }
        None => RunManifest::hash_config_json(&cfg),
    };
    let mut out = OutputDir::create(&args.out, RunManifest::new("contact-gen", args.seed, config_hash, inputs))?;

    let runs: Vec<(ContactGenResult, Vec<f64>)> = worker_pool(args.threads)?.install(|| {
        (0..args.seeds)
            .into_par_iter()
            .map(|i| run_seed(&shape, &cfg, args.n_contacts, i, sample_seed(args.seed, i as u64), args.max_iters))
            .collect::<CliResult<_>>()
    })?;

    let results: Vec<&ContactGenResult> = runs.iter().map(|(r, _)| r).collect();
    out.write_jsonl("contacts.jsonl", &results)?;
    let mut w = out.csv_writer("traces.csv")?;
    w.write_record(["seed_index", "iter", "total"])?;
    for (r, trace) in &runs {
        for (it, e) in trace.iter().enumerate() {
            w.write_record([r.index.to_string(), it.to_string(), e.to_string()])?;
        }
    }
    w.flush().map_err(|e| CliError::io(out.path(), e))?;

    let n_converged = results.iter().filter(|r| r.converged).count();
    let n_oracle_pass = results.iter().filter(|r| r.converged && r.oracle_pass).count();
    let summary = ContactGenSummary {
        n_contacts: args.n_contacts,
        n_seeds: args.seeds,
        n_converged,
        success_fraction: n_converged as f64 / args.seeds as f64,
        n_oracle_pass,
        oracle_pass_fraction: if n_converged > 0 { n_oracle_pass as f64 / n_converged as f64 } else { 0.0 },
    };
    out.write_json("summary.json", &summary)?;
    out.finish()?;
    Ok(summary)
}
