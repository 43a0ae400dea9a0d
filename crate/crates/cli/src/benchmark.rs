use std::hint::black_box;
use std::path::PathBuf;
use std::time::Instant;

use fcgrasp::fcest::{fc_energy, FcConfig, MAX_CONTACTS, MIN_CONTACTS};
use fcgrasp::sdf::Shape;
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{OutputDir, RunManifest};
use crate::stats::{self, LinearFit};

pub const DEFAULT_SIZES: [usize; 6] = [3, 5, 10, 20, 100, 1000];
pub const MIN_ITERS: usize = 100;
pub const WARMUP: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    pub sizes: Vec<usize>,
    pub iters: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n: usize,
    pub median_us: f64,
    pub p95_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub timings: Vec<Timing>,
    /// `median_us ≈ a·log₁₀n + b`
    pub log_fit: Option<LinearFit>,
    /// Median at the largest n over the median at the smallest.
    pub growth_ratio: f64,
}

/// Contacts spread over the unit sphere with small radial jitter.
pub fn contact_points(n: usize, seed: u64) -> Vec<Point3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point3::from(rng.sample::<[f64; 3], _>(UnitSphere)) * rng.random_range(0.95..1.05))
        .collect()
}

/// Times single `fc_energy` calls after a warm-up.
pub fn time_fc_energy(shape: &Shape, points: &[Point3<f64>], cfg: &FcConfig, iters: usize) -> Vec<f64> {
    for _ in 0..WARMUP {
        black_box(fc_energy(black_box(points), shape, cfg));
    }
    (0..iters)
        .map(|_| {
            let t = Instant::now();
            black_box(fc_energy(black_box(points), shape, cfg));
            t.elapsed().as_secs_f64() * 1e6
        })
        .collect()
}

pub fn summarize(timings: Vec<Timing>) -> BenchmarkSummary {
    let x: Vec<f64> = timings.iter().map(|t| (t.n as f64).log10()).collect();
    let y: Vec<f64> = timings.iter().map(|t| t.median_us).collect();
    let smallest = timings.iter().min_by_key(|t| t.n).map_or(f64::NAN, |t| t.median_us);
    let largest = timings.iter().max_by_key(|t| t.n).map_or(f64::NAN, |t| t.median_us);
    BenchmarkSummary {
        log_fit: stats::linear_fit(&x, &y),
        growth_ratio: largest / smallest,
        timings,
    }
}

pub fn benchmark(args: &BenchmarkArgs) -> CliResult<BenchmarkSummary> {
    if args.iters < MIN_ITERS {
        return Err(CliError::Input(format!("--iters must be at least {MIN_ITERS}, got {}", args.iters)));
    }
    if args.sizes.is_empty() {
        return Err(CliError::Input("--sizes must not be empty".into()));
    }
    if let Some(n) = args.sizes.iter().find(|n| !(MIN_CONTACTS..=MAX_CONTACTS).contains(*n)) {
        return Err(CliError::Input(format!("contact count {n} outside {MIN_CONTACTS}..={MAX_CONTACTS}")));
    }
    let config_hash = RunManifest::hash_config_json(args);
    let mut out = OutputDir::create(&args.out, RunManifest::new("benchmark", args.seed, config_hash, vec![]))?;

    let shape = Shape::sphere(1.0);
    let cfg = FcConfig::default();
    let timings: Vec<Timing> = args
        .sizes
        .iter()
        .map(|&n| {
            let pts = contact_points(n, args.seed ^ n as u64);
            let samples = time_fc_energy(&shape, &pts, &cfg, args.iters);
            Timing {
                n,
                median_us: stats::quantile(&samples, 0.5),
                p95_us: stats::quantile(&samples, 0.95),
            }
        })
        .collect();
    let summary = summarize(timings);

    let mut w = out.csv_writer("timings.csv")?;
    for t in &summary.timings {
        w.serialize(t)?;
    }
    w.flush().map_err(|e| CliError::io(out.path(), e))?;
    out.write_json("summary.json", &summary)?;
    out.finish()?;
    Ok(summary)
}
