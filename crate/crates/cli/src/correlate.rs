use std::path::PathBuf;

use fcgrasp::fcest::gc_residual;
use fcgrasp::oracle::{self, radial_contacts, MinFriction, DEFAULT_CONE_EDGES};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{OutputDir, RunManifest};
use crate::stats;
use crate::worker_pool;

pub const MIN_SAMPLES: usize = 100;
pub const MU_TOL: f64 = 1e-3;
pub const DEFAULT_MU_CAP: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelateArgs {
    pub n: usize,
    pub seed: u64,
    pub mu_cap: f64,
    pub threads: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub mu0: f64,
    pub residual: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateSummary {
    /// Through-origin least squares of residual on μ₀.
    pub slope: Option<f64>,
    pub affine_slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub spearman: Option<f64>,
    pub n_kept: usize,
    pub n_discarded: usize,
    pub degenerate: bool,
    pub mu_cap: f64,
}

/// splitmix64 finalizer, so neighbouring sample ids get unrelated seeds.
pub fn sample_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Three uniform points on the unit sphere with inward axes.
pub fn tripod(seed: u64) -> Vec<Point3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..3).map(|_| Point3::from(rng.sample::<[f64; 3], _>(UnitSphere))).collect()
}

/// `None` when the tripod is not force closure below the cap.
pub fn evaluate_sample(seed: u64, mu_cap: f64) -> CliResult<Option<Sample>> {
    let contacts = radial_contacts(&tripod(seed), 0.0)?;
    match oracle::min_friction(&contacts, DEFAULT_CONE_EDGES, MU_TOL, mu_cap)? {
        MinFriction::Mu(mu0) => Ok(Some(Sample {
            mu0,
            residual: gc_residual(contacts.points(), contacts.axes()),
            seed,
        })),
        MinFriction::NotForceClosure => Ok(None),
    }
}

pub fn summarize(samples: &[Sample], n_discarded: usize, mu_cap: f64) -> CorrelateSummary {
    let x: Vec<f64> = samples.iter().map(|s| s.mu0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.residual).collect();
    let slope = stats::slope_through_origin(&x, &y);
    let fit = stats::linear_fit(&x, &y);
    let spearman = stats::spearman(&x, &y);
    CorrelateSummary {
        slope,
        affine_slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        spearman,
        n_kept: samples.len(),
        n_discarded,
        degenerate: slope.is_none() || fit.is_none() || spearman.is_none(),
        mu_cap,
    }
}

pub fn correlate(args: &CorrelateArgs) -> CliResult<CorrelateSummary> {
    if args.n < MIN_SAMPLES {
        return Err(CliError::Input(format!("--n must be at least {MIN_SAMPLES}, got {}", args.n)));
    }
    if !(args.mu_cap > 0.0 && args.mu_cap <= oracle::MAX_MU_CAP) {
        return Err(CliError::Input(format!(
            "--mu-cap must lie in (0, {}], got {}",
            oracle::MAX_MU_CAP,
            args.mu_cap
        )));
    }
    let config_hash = RunManifest::hash_config_json(args);
    let mut out = OutputDir::create(&args.out, RunManifest::new("correlate", args.seed, config_hash, vec![]))?;

    let results: Vec<Option<Sample>> = worker_pool(args.threads)?.install(|| {
        (0..args.n as u64)
            .into_par_iter()
            .map(|i| evaluate_sample(sample_seed(args.seed, i), args.mu_cap))
            .collect::<CliResult<_>>()
    })?;
    let samples: Vec<Sample> = results.iter().flatten().copied().collect();
    let summary = summarize(&samples, args.n - samples.len(), args.mu_cap);

    let mut w = out.csv_writer("correlation.csv")?;
    for s in &samples {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| CliError::io(out.path(), e))?;
    out.write_json("summary.json", &summary)?;
    out.finish()?;
    Ok(summary)
}
