use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fcgrasp::hand::HandModel;
use fcgrasp::sampler::{
    self, filter, refine, run_chain, stability_proxy, ChainConfig, ChainStats, GraspRecord, REFINE_ITERS, REFINE_LR,
};
use fcgrasp::sdf::{write_obj_points, Shape};
use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::inputs::{load_hand, load_shape, Input, InputRecord};
use crate::manifest::{OutputDir, RunManifest};
use crate::worker_pool;

pub const DEFAULT_OBJECT_SAMPLES: usize = 512;

#[derive(Debug, Clone)]
pub struct SynthesizeArgs {
    pub hand: String,
    pub shape: String,
    pub config: Option<PathBuf>,
    pub chains: usize,
    /// Overrides the config's step count.
    pub steps: Option<usize>,
    /// Overrides the config's seed.
    pub seed: Option<u64>,
    pub threads: usize,
    pub object_samples: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RefineArgs {
    pub hand: String,
    pub shape: String,
    pub records: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub object_samples: usize,
    pub out: PathBuf,
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub chain: u64,
    pub step: usize,
    pub fc_residual: f64,
    pub dist_sq: f64,
    pub pen: f64,
    pub total: f64,
    pub filter: bool,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: u64,
    pub stats: ChainStats,
    pub filter: bool,
    pub mean_distance_before: f64,
    pub total_before: f64,
    pub mean_distance_after: Option<f64>,
    pub total_after: Option<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeSummary {
    pub hand: String,
    pub chains: usize,
    pub steps: usize,
    pub n_filtered: usize,
    pub n_stable: usize,
    /// Earliest step at which any chain's current state passed the filter.
    pub first_success_step: Option<usize>,
    pub first_success_chain: Option<u64>,
    pub exports: Vec<String>,
    pub per_chain: Vec<ChainReport>,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub summary: SynthesizeSummary,
    /// Best-so-far record at the end of every chain.
    pub finals: Vec<GraspRecord>,
    /// Refined versions of the finals that passed the filter.
    pub refined: Vec<GraspRecord>,
}

pub fn load_chain_config(path: Option<&Path>) -> CliResult<(ChainConfig, Option<Input>)> {
    match path {
        None => Ok((ChainConfig::default(), None)),
        Some(p) => {
            let input = Input::read(p)?;
            Ok((input.parse_json()?, Some(input)))
        }
    }
}

fn manifest_inputs(hand: &Input, shape: &Input, cfg_input: &Option<Input>, cfg: &ChainConfig) -> (String, Vec<InputRecord>) {
    let mut inputs = vec![hand.record("hand"), shape.record("shape")];
    let hash = match cfg_input {
        Some(c) => {
            inputs.push(c.record("config"));
            c.sha256()
        }
        None => RunManifest::hash_config_json(cfg),
    };
    (hash, inputs)
}

fn summary_row(r: &GraspRecord, filter: bool, stable: bool) -> SummaryRow {
    SummaryRow {
        chain: r.chain,
        step: r.step,
        fc_residual: r.energy.fc.residual,
        dist_sq: r.energy.fc.dist_sq_sum,
        pen: r.energy.penetration,
        total: r.energy.total,
        filter,
        stable,
    }
}

/// Writes hand samples, contacts and object samples as three OBJ groups.
pub fn export_obj(path: &Path, model: &HandModel, record: &GraspRecord, object: &[Point3<f64>]) -> CliResult<()> {
    let hand = model.forward_points(&record.pose)?;
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "# chain {} step {}", record.chain, record.step)?;
        writeln!(w, "g hand")?;
        write_obj_points(&mut *w, &hand)?;
        writeln!(w, "g contacts")?;
        write_obj_points(&mut *w, &record.contact_points())?;
        writeln!(w, "g object")?;
        write_obj_points(&mut *w, object)?;
        w.flush()
    };
    write(&mut w).map_err(|e| CliError::io(path, e))
}

fn write_summary_csv(out: &mut OutputDir, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = out.csv_writer("summary.csv")?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(out.path(), e))
}

fn refine_and_check(
    record: &GraspRecord,
    model: &HandModel,
    shape: &Shape,
    cfg: &ChainConfig,
) -> CliResult<(GraspRecord, bool)> {
    let refined = refine(record, model, shape, cfg, REFINE_ITERS, REFINE_LR)?;
    let stable = stability_proxy(&refined, model, shape)?;
    Ok((refined, stable))
}

pub fn synthesize(args: &SynthesizeArgs) -> CliResult<Synthesis> {
    let (model, hand_input) = load_hand(&args.hand)?;
    let (shape, shape_input) = load_shape(&args.shape)?;
    let (mut cfg, cfg_input) = load_chain_config(args.config.as_deref())?;
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Input(format!("chain config: {e}")))?;
    if args.chains == 0 {
        return Err(CliError::Input("--chains must be positive".into()));
    }
    if model.contact_candidates().len() < cfg.n_contacts {
        return Err(CliError::Input(format!(
            "{}: {} contact candidates, config asks for {}",
            hand_input.source,
            model.contact_candidates().len(),
            cfg.n_contacts
        )));
    }
    let (config_hash, inputs) = manifest_inputs(&hand_input, &shape_input, &cfg_input, &cfg);
    let mut out = OutputDir::create(&args.out, RunManifest::new("synthesize", cfg.seed, config_hash, inputs))?;

    let pool = worker_pool(args.threads)?;
    let runs = pool.install(|| {
        (0..args.chains as u64)
            .into_par_iter()
            .map(|c| run_chain(&model, &shape, &cfg, c))
            .collect::<fcgrasp::Result<Vec<_>>>()
    })?;

    let finals: Vec<GraspRecord> = runs
        .iter()
        .map(|r| r.records.last().expect("a chain records at least its final state").clone())
        .collect();
    let passed: Vec<bool> = finals.iter().map(|r| filter(r, &shape)).collect();
    let refined: Vec<(GraspRecord, bool)> = pool.install(|| {
        finals
            .par_iter()
            .zip(&passed)
            .filter(|(_, &p)| p)
            .map(|(r, _)| refine_and_check(r, &model, &shape, &cfg))
            .collect::<CliResult<_>>()
    })?;

    let all_records: Vec<&GraspRecord> = runs.iter().flat_map(|r| &r.records).collect();
    out.write_jsonl("records.jsonl", &all_records)?;
    let refined_records: Vec<&GraspRecord> = refined.iter().map(|(r, _)| r).collect();
    out.write_jsonl("refined.jsonl", &refined_records)?;

    let object = shape.sample_surface(args.object_samples, cfg.seed)?;
    let mut exports = Vec::new();
    for (r, _) in &refined {
        let name = format!("grasp_{:04}.obj", r.chain);
        export_obj(&out.output(&name), &model, r, &object)?;
        exports.push(name);
    }

    let mut rows = Vec::with_capacity(finals.len());
    let mut per_chain = Vec::with_capacity(finals.len());
    let mut after = refined.iter().peekable();
    for ((run, r), &p) in runs.iter().zip(&finals).zip(&passed) {
        let refined_here = if p { after.next() } else { None };
        let stable = refined_here.is_some_and(|(_, s)| *s);
        rows.push(summary_row(r, p, stable));
        per_chain.push(ChainReport {
            chain: r.chain,
            stats: run.stats,
            filter: p,
            mean_distance_before: r.mean_surface_distance(),
            total_before: r.energy.total,
            mean_distance_after: refined_here.map(|(x, _)| x.mean_surface_distance()),
            total_after: refined_here.map(|(x, _)| x.energy.total),
            stable,
        });
    }
    write_summary_csv(&mut out, &rows)?;

    let first = runs
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.stats.first_pass_step.map(|s| (s, c as u64)))
        .min();
    let summary = SynthesizeSummary {
        hand: model.name().to_string(),
        chains: args.chains,
        steps: cfg.steps,
        n_filtered: refined.len(),
        n_stable: refined.iter().filter(|(_, s)| *s).count(),
        first_success_step: first.map(|(s, _)| s),
        first_success_chain: first.map(|(_, c)| c),
        exports,
        per_chain,
    };
    out.write_json("summary.json", &summary)?;
    out.finish()?;
    Ok(Synthesis {
        summary,
        finals,
        refined: refined.into_iter().map(|(r, _)| r).collect(),
    })
}

pub fn read_records(input: &Input) -> CliResult<Vec<GraspRecord>> {
    input
        .text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Input(format!("{}:{}: {e}", input.source, i + 1)))
        })
        .collect()
}

/// Refines every record of a JSON-lines file.
pub fn refine_records(args: &RefineArgs) -> CliResult<Vec<(GraspRecord, bool)>> {
    let (model, hand_input) = load_hand(&args.hand)?;
    let (shape, shape_input) = load_shape(&args.shape)?;
    let (mut cfg, cfg_input) = load_chain_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Input(format!("chain config: {e}")))?;
    let records_input = Input::read(&args.records)?;
    let records = read_records(&records_input)?;
    for r in &records {
        sampler::grasp_energy(&model, &r.pose, &r.contact_indices, &shape, &cfg)
            .map_err(|e| CliError::at(&records_input.source, e))?;
    }

    let (config_hash, mut inputs) = manifest_inputs(&hand_input, &shape_input, &cfg_input, &cfg);
    inputs.push(records_input.record("records"));
    let mut out = OutputDir::create(&args.out, RunManifest::new("refine", cfg.seed, config_hash, inputs))?;

    let refined: Vec<(GraspRecord, bool)> = worker_pool(args.threads)?.install(|| {
        records
            .par_iter()
            .map(|r| refine_and_check(r, &model, &shape, &cfg))
            .collect::<CliResult<_>>()
    })?;

    let refined_records: Vec<&GraspRecord> = refined.iter().map(|(r, _)| r).collect();
    out.write_jsonl("refined.jsonl", &refined_records)?;
    let object = shape.sample_surface(args.object_samples, cfg.seed)?;
    let mut rows = Vec::with_capacity(refined.len());
    for (i, (r, stable)) in refined.iter().enumerate() {
        let pass = filter(r, &shape);
        if pass {
            export_obj(&out.output(&format!("grasp_{i:04}.obj")), &model, r, &object)?;
        }
        rows.push(summary_row(r, pass, *stable));
    }
    write_summary_csv(&mut out, &rows)?;
    out.finish()?;
    Ok(refined)
}
