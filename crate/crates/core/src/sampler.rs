//! Grasp energy, Metropolis-adjusted Langevin sampling over hand pose and
//! contact selection, the empirical grasp filter and gradient refinement.

use std::f64::consts::PI;

use nalgebra::{DVector, Point3, Unit, UnitQuaternion, Vector3};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcest::{fc_energy, fc_energy_with_grad, ContactSet, FcBreakdown, FcConfig};
use crate::hand::{canonical_rotation, Frames, HandModel, HandPose, PriorWeights, SurfaceSampleIndex};
use crate::oracle::{self, MinFriction, DEFAULT_CONE_EDGES};
use crate::sdf::Shape;

pub const FILTER_RESIDUAL: f64 = 0.5;
pub const FILTER_DIST_SQ: f64 = 0.02;
pub const FILTER_PENETRATION: f64 = 0.02;

pub const STABILITY_MU: f64 = 0.5;
pub const STABILITY_MAX_DISPLACEMENT: f64 = 0.01;
const PROJECTION_TOL: f64 = 1e-10;

pub const RECORD_MU_TOL: f64 = 1e-3;
pub const RECORD_MU_CAP: f64 = 2.0;

pub const REFINE_ITERS: usize = 500;
pub const REFINE_LR: f64 = 0.01;
const MAX_HALVINGS: usize = 20;

const INIT_RADIUS_FACTOR: f64 = 1.5;
const INIT_JOINT_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub fc: FcBreakdown,
    pub prior: f64,
    pub penetration: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Mean unsigned contact-to-surface distance.
    pub fn mean_surface_distance(&self, n_contacts: usize) -> f64 {
        self.fc.dist_sum / n_contacts as f64
    }

    pub fn passes_filter(&self) -> bool {
        self.fc.residual < FILTER_RESIDUAL
            && self.fc.dist_sq_sum < FILTER_DIST_SQ
            && self.penetration < FILTER_PENETRATION
    }
}

/// Langevin noise multipliers per pose block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScales {
    pub translation: f64,
    pub rotation: f64,
    pub joints: f64,
}

impl Default for NoiseScales {
    fn default() -> Self {
        Self {
            translation: 1.0,
            rotation: 1.0,
            joints: 1.0,
        }
    }
}

impl NoiseScales {
    pub fn to_vector(&self, dof: usize) -> DVector<f64> {
        DVector::from_fn(dof, |i, _| match i {
            0..=2 => self.translation,
            3..=5 => self.rotation,
            _ => self.joints,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub eta: f64,
    pub switch_prob: f64,
    pub steps: usize,
    pub temperature: f64,
    pub n_contacts: usize,
    pub seed: u64,
    pub fc_config: FcConfig,
    pub prior: PriorWeights,
    pub noise: NoiseScales,
    /// Include the asymmetric-proposal term `q(s|s*)/q(s*|s)` for pose moves.
    pub mh_correction: bool,
    pub record_every: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            switch_prob: 0.85,
            steps: 10_000,
            temperature: 1.0,
            n_contacts: 3,
            seed: 0,
            fc_config: FcConfig::default(),
            prior: PriorWeights::default(),
            noise: NoiseScales::default(),
            mh_correction: true,
            record_every: 100,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("{m}: {self:?}")));
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        if !(0.0..=1.0).contains(&self.switch_prob) {
            return bad("switch_prob must lie in [0, 1]");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if self.n_contacts < 3 {
            return bad("n_contacts must be at least 3");
        }
        if self.record_every == 0 {
            return bad("record_every must be positive");
        }
        let n = &self.noise;
        if [n.translation, n.rotation, n.joints].iter().any(|s| !(*s >= 0.0))
            || (self.mh_correction && [n.translation, n.rotation, n.joints].iter().any(|s| *s == 0.0))
        {
            return bad("noise scales must be non-negative, and positive with the MH correction");
        }
        self.fc_config.validate()
    }

    pub fn mala_params(&self, dof: usize) -> MalaParams {
        MalaParams {
            eta: self.eta,
            switch_prob: self.switch_prob,
            temperature: self.temperature,
            noise: self.noise.to_vector(dof),
            mh_correction: self.mh_correction,
        }
    }
}

// ---------------------------------------------------------------------------
// grasp energy

fn check_indices(model: &HandModel, indices: &[SurfaceSampleIndex]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidContacts("no contact indices".into()));
    }
    for (i, idx) in indices.iter().enumerate() {
        model.validate_index(idx)?;
        if indices[..i].contains(idx) {
            return Err(Error::DuplicateContact(format!("{idx:?}")));
        }
    }
    Ok(())
}

fn evaluate(
    model: &HandModel,
    frames: &Frames,
    indices: &[SurfaceSampleIndex],
    shape: &Shape,
    fc_cfg: &FcConfig,
    prior_w: &PriorWeights,
    pose: &HandPose,
) -> Result<(EnergyBreakdown, DVector<f64>)> {
    let points: Vec<Point3<f64>> = indices.iter().map(|i| model.point(frames, i)).collect();
    let (fc, point_grads) = fc_energy_with_grad(&points, shape, fc_cfg);
    let (prior, mut grad) = model.prior_with_grad(pose, prior_w)?;
    let (penetration, pen_grad) = model.penetration_with_grad_at(frames, shape);
    grad += pen_grad;
    for (idx, g) in indices.iter().zip(&point_grads) {
        model.accumulate_jacobian_transpose(frames, idx, g, &mut grad);
    }
    Ok((
        EnergyBreakdown {
            fc,
            prior,
            penetration,
            total: fc.total + prior + penetration,
        },
        grad,
    ))
}

/// `FC(x, O) + E_prior(H) + E_pen(H, O)` with `x` read off the hand surface.
pub fn grasp_energy(
    model: &HandModel,
    pose: &HandPose,
    indices: &[SurfaceSampleIndex],
    shape: &Shape,
    cfg: &ChainConfig,
) -> Result<EnergyBreakdown> {
    check_indices(model, indices)?;
    let frames = model.frames(pose)?;
    let points: Vec<Point3<f64>> = indices.iter().map(|i| model.point(&frames, i)).collect();
    let fc = fc_energy(&points, shape, &cfg.fc_config);
    let prior = model.prior_energy(pose, &cfg.prior)?;
    let penetration = model.penetration_energy(pose, shape)?;
    Ok(EnergyBreakdown {
        fc,
        prior,
        penetration,
        total: fc.total + prior + penetration,
    })
}

/// `∂E/∂H` over the full pose vector.
pub fn grasp_energy_grad(
    model: &HandModel,
    pose: &HandPose,
    indices: &[SurfaceSampleIndex],
    shape: &Shape,
    cfg: &ChainConfig,
) -> Result<DVector<f64>> {
    Ok(grasp_energy_with_grad(model, pose, indices, shape, cfg)?.1)
}

pub fn grasp_energy_with_grad(
    model: &HandModel,
    pose: &HandPose,
    indices: &[SurfaceSampleIndex],
    shape: &Shape,
    cfg: &ChainConfig,
) -> Result<(EnergyBreakdown, DVector<f64>)> {
    check_indices(model, indices)?;
    let frames = model.frames(pose)?;
    evaluate(model, &frames, indices, shape, &cfg.fc_config, &cfg.prior, pose)
}

// ---------------------------------------------------------------------------
// generic MALA

/// An energy over continuous parameters plus a set of distinct discrete
/// selections drawn from `num_candidates()` options.
pub trait EnergyTarget {
    type Aux: Clone;

    fn dim(&self) -> usize;

    fn num_candidates(&self) -> usize {
        0
    }

    fn evaluate(&self, params: &DVector<f64>, selection: &[usize]) -> Result<Evaluation<Self::Aux>>;

    /// Maps accepted parameters to a canonical chart without changing the energy.
    fn canonicalize(&self, _params: &mut DVector<f64>) {}
}

#[derive(Debug, Clone)]
pub struct Evaluation<A> {
    pub energy: f64,
    pub grad: DVector<f64>,
    pub aux: A,
}

#[derive(Debug, Clone)]
pub struct ChainState<A> {
    pub params: DVector<f64>,
    pub selection: Vec<usize>,
    pub eval: Evaluation<A>,
}

impl<A> ChainState<A> {
    pub fn energy(&self) -> f64 {
        self.eval.energy
    }
}

pub fn initial_state<T: EnergyTarget>(
    target: &T,
    params: DVector<f64>,
    selection: Vec<usize>,
) -> Result<ChainState<T::Aux>> {
    let eval = target.evaluate(&params, &selection)?;
    Ok(ChainState { params, selection, eval })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalaParams {
    pub eta: f64,
    pub switch_prob: f64,
    pub temperature: f64,
    /// Per-coordinate noise scale `s`; the proposal is
    /// `x* = x − (η²/2)·s²⊙∇E + η·s⊙ξ`.
    pub noise: DVector<f64>,
    pub mh_correction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Pose,
    Contact,
}

#[derive(Debug, Clone)]
pub struct StepOutcome<A> {
    pub state: ChainState<A>,
    pub kind: MoveKind,
    pub accepted: bool,
}

fn langevin_mean(x: &DVector<f64>, grad: &DVector<f64>, p: &MalaParams) -> DVector<f64> {
    let half = 0.5 * p.eta * p.eta;
    DVector::from_fn(x.len(), |i, _| x[i] - half * p.noise[i] * p.noise[i] * grad[i])
}

/// `log q(to | from)` up to a constant shared by both directions.
fn log_proposal(to: &DVector<f64>, from_mean: &DVector<f64>, p: &MalaParams) -> f64 {
    let mut s = 0.0;
    for i in 0..to.len() {
        let z = (to[i] - from_mean[i]) / (p.eta * p.noise[i]);
        s += z * z;
    }
    -0.5 * s
}

fn metropolis_accept(log_alpha: f64, u: f64) -> bool {
    if log_alpha.is_nan() {
        return false;
    }
    log_alpha >= 0.0 || u < log_alpha.exp()
}

/// Langevin proposal with explicit noise `xi`, accepted when `u < α`.
pub fn pose_move<T: EnergyTarget>(
    target: &T,
    state: &ChainState<T::Aux>,
    p: &MalaParams,
    xi: &DVector<f64>,
    u: f64,
) -> StepOutcome<T::Aux> {
    let reject = || StepOutcome {
        state: state.clone(),
        kind: MoveKind::Pose,
        accepted: false,
    };
    let mean = langevin_mean(&state.params, &state.eval.grad, p);
    let proposal = DVector::from_fn(mean.len(), |i, _| mean[i] + p.eta * p.noise[i] * xi[i]);
    let Ok(eval) = target.evaluate(&proposal, &state.selection) else {
        return reject();
    };
    let mut log_alpha = (state.eval.energy - eval.energy) / p.temperature;
    if p.mh_correction {
        let back_mean = langevin_mean(&proposal, &eval.grad, p);
        log_alpha += log_proposal(&state.params, &back_mean, p) - log_proposal(&proposal, &mean, p);
    }
    if !eval.energy.is_finite() || !metropolis_accept(log_alpha, u) {
        return reject();
    }
    let mut params = proposal;
    target.canonicalize(&mut params);
    StepOutcome {
        state: ChainState {
            params,
            selection: state.selection.clone(),
            eval,
        },
        kind: MoveKind::Pose,
        accepted: true,
    }
}

/// One step of the sampler: with probability ρ a Langevin move on the
/// parameters, otherwise one selection entry is redrawn uniformly from the
/// candidates unused by the others. Rejected or failed proposals leave the
/// state unchanged.
pub fn mala_step<T: EnergyTarget, R: Rng + ?Sized>(
    target: &T,
    state: &ChainState<T::Aux>,
    p: &MalaParams,
    rng: &mut R,
) -> StepOutcome<T::Aux> {
    let is_pose = state.selection.is_empty() || rng.random::<f64>() < p.switch_prob;
    if is_pose {
        let xi = DVector::from_fn(state.params.len(), |_, _| rng.sample(StandardNormal));
        let u: f64 = rng.random();
        pose_move(target, state, p, &xi, u)
    } else {
        let slot = rng.random_range(0..state.selection.len());
        let free: Vec<usize> = (0..target.num_candidates())
            .filter(|c| !state.selection.iter().enumerate().any(|(j, s)| j != slot && s == c))
            .collect();
        let pick = free[rng.random_range(0..free.len())];
        let u: f64 = rng.random();
        let unchanged = |accepted| StepOutcome {
            state: state.clone(),
            kind: MoveKind::Contact,
            accepted,
        };
        if pick == state.selection[slot] {
            return unchanged(true);
        }
        let mut selection = state.selection.clone();
        selection[slot] = pick;
        let Ok(eval) = target.evaluate(&state.params, &selection) else {
            return unchanged(false);
        };
        let log_alpha = (state.eval.energy - eval.energy) / p.temperature;
        if !eval.energy.is_finite() || !metropolis_accept(log_alpha, u) {
            return unchanged(false);
        }
        StepOutcome {
            state: ChainState {
                params: state.params.clone(),
                selection,
                eval,
            },
            kind: MoveKind::Contact,
            accepted: true,
        }
    }
}

// ---------------------------------------------------------------------------
// grasp chains

/// The grasp energy as a sampling target; selections index the hand's
/// contact candidates.
pub struct GraspTarget<'a> {
    pub model: &'a HandModel,
    pub shape: &'a Shape,
    pub fc_config: FcConfig,
    pub prior: PriorWeights,
}

impl<'a> GraspTarget<'a> {
    pub fn new(model: &'a HandModel, shape: &'a Shape, cfg: &ChainConfig) -> Self {
        Self {
            model,
            shape,
            fc_config: cfg.fc_config,
            prior: cfg.prior,
        }
    }

    pub fn indices(&self, selection: &[usize]) -> Vec<SurfaceSampleIndex> {
        let cands = self.model.contact_candidates();
        selection.iter().map(|&s| cands[s]).collect()
    }
}

impl EnergyTarget for GraspTarget<'_> {
    type Aux = EnergyBreakdown;

    fn dim(&self) -> usize {
        self.model.dof()
    }

    fn num_candidates(&self) -> usize {
        self.model.contact_candidates().len()
    }

    fn evaluate(&self, params: &DVector<f64>, selection: &[usize]) -> Result<Evaluation<EnergyBreakdown>> {
        let pose = HandPose::from_vector(params);
        let frames = self.model.frames(&pose)?;
        let indices = self.indices(selection);
        let (aux, grad) = evaluate(self.model, &frames, &indices, self.shape, &self.fc_config, &self.prior, &pose)?;
        Ok(Evaluation {
            energy: aux.total,
            grad,
            aux,
        })
    }

    fn canonicalize(&self, params: &mut DVector<f64>) {
        let r = canonical_rotation(&Vector3::new(params[3], params[4], params[5]));
        params[3] = r.x;
        params[4] = r.y;
        params[5] = r.z;
    }
}

/// A persisted synthesis result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub chain: u64,
    pub seed: u64,
    /// Step at which the snapshot was taken.
    pub step: usize,
    /// Step at which this state was reached.
    pub found_step: usize,
    pub pose: HandPose,
    pub contact_indices: Vec<SurfaceSampleIndex>,
    pub contact_points: Vec<[f64; 3]>,
    pub energy: EnergyBreakdown,
    pub filter_pass: bool,
    pub oracle_mu0: MinFriction,
}

impl GraspRecord {
    /// Evaluates `(pose, indices)` afresh and fills every derived field.
    pub fn evaluate(
        model: &HandModel,
        shape: &Shape,
        cfg: &ChainConfig,
        pose: HandPose,
        contact_indices: Vec<SurfaceSampleIndex>,
    ) -> Result<Self> {
        let energy = grasp_energy(model, &pose, &contact_indices, shape, cfg)?;
        let frames = model.frames(&pose)?;
        let points: Vec<Point3<f64>> = contact_indices.iter().map(|i| model.point(&frames, i)).collect();
        let contacts = ContactSet::from_surface(points.clone(), shape, 0.0)?;
        let oracle_mu0 = oracle::min_friction(&contacts, DEFAULT_CONE_EDGES, RECORD_MU_TOL, RECORD_MU_CAP)?;
        Ok(Self {
            chain: 0,
            seed: cfg.seed,
            step: 0,
            found_step: 0,
            pose,
            contact_indices,
            contact_points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            filter_pass: energy.passes_filter(),
            energy,
            oracle_mu0,
        })
    }

    pub fn contact_points(&self) -> Vec<Point3<f64>> {
        self.contact_points.iter().map(|p| Point3::from(*p)).collect()
    }

    pub fn mean_surface_distance(&self) -> f64 {
        self.energy.mean_surface_distance(self.contact_indices.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainStats {
    pub pose_proposals: usize,
    pub pose_accepts: usize,
    pub contact_proposals: usize,
    pub contact_accepts: usize,
    /// First step whose current state passed the filter.
    pub first_pass_step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub records: Vec<GraspRecord>,
    pub stats: ChainStats,
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Root on a sphere of radius 1.5× the object's bounding radius, approach
/// axis pointing at the origin with a random roll; joints at rest plus
/// N(0, 0.1²); contacts drawn without replacement from the candidates.
pub fn initial_grasp_state<R: Rng + ?Sized>(
    model: &HandModel,
    shape: &Shape,
    n_contacts: usize,
    rng: &mut R,
) -> Result<(HandPose, Vec<usize>)> {
    let n_cand = model.contact_candidates().len();
    if n_contacts > n_cand {
        return Err(Error::InvalidConfig(format!(
            "{n_contacts} contacts requested but the hand has {n_cand} candidates"
        )));
    }
    let dir = random_unit(rng);
    let facing = -dir;
    let align = UnitQuaternion::rotation_between(&model.approach(), &facing).unwrap_or_else(|| {
        let a = model.approach();
        let perp = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(a.cross(&perp)), PI)
    });
    let roll = rng.random_range(0.0..2.0 * PI);
    let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(facing), roll) * align;
    let mut joints = model.rest_pose().clone();
    for q in joints.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *q += INIT_JOINT_STD * z;
    }
    let pose = HandPose {
        root_translation: dir * (INIT_RADIUS_FACTOR * shape.bounding_radius()),
        root_rotation: canonical_rotation(&rot.scaled_axis()),
        joints,
    };
    let selection = sample_indices(rng, n_cand, n_contacts).into_vec();
    Ok((pose, selection))
}

pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ chain)
}

/// Runs one chain for `cfg.steps` steps, snapshotting the lowest-energy
/// state seen every `cfg.record_every` steps and at the end.
pub fn run_chain(model: &HandModel, shape: &Shape, cfg: &ChainConfig, chain: u64) -> Result<ChainRun> {
    cfg.validate()?;
    let mut rng = chain_rng(cfg.seed, chain);
    let target = GraspTarget::new(model, shape, cfg);
    let params = cfg.mala_params(model.dof());
    let (pose, selection) = initial_grasp_state(model, shape, cfg.n_contacts, &mut rng)?;
    let mut state = initial_state(&target, pose.to_vector(), selection)?;
    let mut best = (state.clone(), 0usize);
    let mut stats = ChainStats::default();
    if state.eval.aux.passes_filter() {
        stats.first_pass_step = Some(0);
    }

    let snapshot = |best: &(ChainState<EnergyBreakdown>, usize), step: usize| -> Result<GraspRecord> {
        let (s, found) = best;
        let mut rec = GraspRecord::evaluate(
            model,
            shape,
            cfg,
            HandPose::from_vector(&s.params),
            target.indices(&s.selection),
        )?;
        rec.chain = chain;
        rec.step = step;
        rec.found_step = *found;
        Ok(rec)
    };

    let mut records = Vec::new();
    for step in 1..=cfg.steps {
        let out = mala_step(&target, &state, &params, &mut rng);
        match out.kind {
            MoveKind::Pose => {
                stats.pose_proposals += 1;
                stats.pose_accepts += out.accepted as usize;
            }
            MoveKind::Contact => {
                stats.contact_proposals += 1;
                stats.contact_accepts += out.accepted as usize;
            }
        }
        state = out.state;
        if out.accepted {
            if stats.first_pass_step.is_none() && state.eval.aux.passes_filter() {
                stats.first_pass_step = Some(step);
            }
            if state.energy() < best.0.energy() {
                best = (state.clone(), step);
            }
        }
        if step % cfg.record_every == 0 {
            records.push(snapshot(&best, step)?);
        }
    }
    if cfg.steps % cfg.record_every != 0 || cfg.steps == 0 {
        records.push(snapshot(&best, cfg.steps)?);
    }
    Ok(ChainRun { records, stats })
}

/// The empirical acceptance test: `‖Gc‖ < 0.5`, `Σd² < 0.02`, `E_pen < 0.02`.
/// Contact terms are re-evaluated on `shape`; penetration is taken from the record.
pub fn filter(record: &GraspRecord, shape: &Shape) -> bool {
    let fc = fc_energy(&record.contact_points(), shape, &FcConfig::default());
    fc.residual < FILTER_RESIDUAL && fc.dist_sq_sum < FILTER_DIST_SQ && record.energy.penetration < FILTER_PENETRATION
}

#[derive(Debug, Clone)]
pub struct RefineTrace {
    pub record: GraspRecord,
    /// Total energy before the first and after every accepted step.
    pub energies: Vec<f64>,
}

/// Gradient descent on the pose with contacts frozen. Each step starts at
/// `lr` and halves it until the energy does not increase, giving up after 20
/// halvings.
pub fn refine(
    record: &GraspRecord,
    model: &HandModel,
    shape: &Shape,
    cfg: &ChainConfig,
    iters: usize,
    lr: f64,
) -> Result<GraspRecord> {
    Ok(refine_with_trace(record, model, shape, cfg, iters, lr)?.record)
}

pub fn refine_with_trace(
    record: &GraspRecord,
    model: &HandModel,
    shape: &Shape,
    cfg: &ChainConfig,
    iters: usize,
    lr: f64,
) -> Result<RefineTrace> {
    let indices = &record.contact_indices;
    let mut h = record.pose.to_vector();
    let (mut energy, mut grad) = grasp_energy_with_grad(model, &record.pose, indices, shape, cfg)?;
    let mut energies = vec![energy.total];
    'outer: for _ in 0..iters {
        if grad.norm() == 0.0 {
            break;
        }
        let mut step = lr;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &h - &grad * step;
            let pose = HandPose::from_vector(&candidate);
            let (e, g) = grasp_energy_with_grad(model, &pose, indices, shape, cfg)?;
            if e.total <= energy.total {
                h = candidate;
                energy = e;
                grad = g;
                energies.push(energy.total);
                continue 'outer;
            }
            step *= 0.5;
        }
        break;
    }
    let mut out = GraspRecord::evaluate(model, shape, cfg, HandPose::from_vector(&h), indices.clone())?;
    out.chain = record.chain;
    out.seed = record.seed;
    out.step = record.step;
    out.found_step = record.found_step;
    Ok(RefineTrace { record: out, energies })
}

/// Static stand-in for a physics check: contacts snapped to the surface must
/// move less than 0.01 and be force closure at μ = 0.5.
pub fn stability_proxy(record: &GraspRecord, model: &HandModel, shape: &Shape) -> Result<bool> {
    let frames = model.frames(&record.pose)?;
    let mut projected = Vec::with_capacity(record.contact_indices.len());
    let mut max_disp: f64 = 0.0;
    for idx in &record.contact_indices {
        model.validate_index(idx)?;
        let p = model.point(&frames, idx);
        let q = shape.project_to_surface(&p, PROJECTION_TOL)?;
        max_disp = max_disp.max((q - p).norm());
        projected.push(q);
    }
    let contacts = ContactSet::from_surface(projected, shape, STABILITY_MU)?;
    Ok(max_disp < STABILITY_MAX_DISPLACEMENT && oracle::is_force_closure(&contacts, DEFAULT_CONE_EDGES)?)
}
