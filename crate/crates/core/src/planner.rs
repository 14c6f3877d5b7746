//! Sampling-based handhold planner.
//!
//! At every grab the planner draws `K` candidate plans of `H` holds on the
//! terrain, rolls the point-mass policy along each one from a projection of
//! the articulated state, scores them with the articulated critic and/or the
//! point-mass reward, and hands the best plan's holds to the articulated
//! policy until the next grab.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::full_env::{self, reference::ReferencePoint, FullConfig, FullState, Hand, ReferenceTrajectory};
use crate::math::Vec2;
use crate::nets::Agent;
use crate::physics2d::composite_com;
use crate::rng;
use crate::simple_env::{self, Events, SimpleAction, SimpleConfig, SimpleState, CONTROL_HZ};
use crate::terrain::{sample_plan, Handhold, HandholdSequence, Plan, Terrain};

/// Plans evaluated together in one batched forward pass.
const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    ValueOnly,
    RewardOnly,
    Combined,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::ValueOnly, Mode::RewardOnly, Mode::Combined];

    pub fn name(self) -> &'static str {
        match self {
            Mode::ValueOnly => "value-only",
            Mode::RewardOnly => "reward-only",
            Mode::Combined => "combined",
        }
    }

    /// Accepts `value-only`, `VALUE_ONLY`, `value_only` and so on.
    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::config(format!("unknown planner mode `{s}` (value-only, reward-only, combined)")))
    }

    pub fn score(self, v_full: f64, r_sum: f64) -> PlanScore {
        let j = match self {
            Mode::ValueOnly => v_full,
            Mode::RewardOnly => r_sum,
            Mode::Combined => v_full + r_sum,
        };
        PlanScore { v_full, r_sum, j }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Plans sampled per replan.
    pub k: usize,
    /// Point-mass rollout length in seconds.
    pub horizon: f64,
    /// Holds per plan; must exceed the articulated look-ahead.
    pub h: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Record real wall time in results; off by default so output is reproducible.
    pub record_wall_time: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            k: 10_000,
            horizon: 4.0,
            h: 4,
            mode: Mode::Combined,
            seed: 0,
            record_wall_time: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, full: &FullConfig) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("planner needs at least one plan (K >= 1)"));
        }
        if self.h <= full.lookahead {
            return Err(Error::config(format!(
                "plan length H = {} must exceed the look-ahead N = {}",
                self.h, full.lookahead
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("planning horizon must be a non-negative number of seconds"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanScore {
    pub v_full: f64,
    pub r_sum: f64,
    pub j: f64,
}

/// Anything that maps a batch of point-mass observations to actions.
pub trait SimpleController: Sync {
    fn act_batch(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>>;
}

impl SimpleController for Agent {
    fn act_batch(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.actor.means(self.normalizer.normalize_batch(obs).view())
    }
}

/// A point-mass rollout along one plan.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanRollout {
    pub r_sum: f64,
    pub points: Vec<ReferencePoint>,
    pub releases: Vec<f64>,
}

impl PlanRollout {
    pub fn into_reference(self, seq: HandholdSequence) -> ReferenceTrajectory {
        ReferenceTrajectory {
            seq,
            points: self.points,
            releases: self.releases,
        }
    }
}

/// The current hold followed by the plan's holds.
pub fn plan_sequence(current: Handhold, plan: &Plan) -> HandholdSequence {
    let mut holds = Vec::with_capacity(plan.holds.len() + 1);
    holds.push(current);
    holds.extend_from_slice(&plan.holds);
    HandholdSequence::new(holds, 0)
}

/// Hand whose grip the point mass inherits: the newer one when both hold on.
fn anchor_hand(state: &FullState) -> Option<Hand> {
    match (state.pinned(Hand::Left), state.pinned(Hand::Right)) {
        (true, true) => Some(if state.grabbed_at[1] >= state.grabbed_at[0] {
            Hand::Right
        } else {
            Hand::Left
        }),
        (true, false) => Some(Hand::Left),
        (false, true) => Some(Hand::Right),
        (false, false) => None,
    }
}

/// Point-mass stand-in for an articulated state: the whole-body centre of
/// mass, grabbing iff a hand is pinned, anchored at that hand's hold.
pub fn project_state(state: &FullState, scfg: &SimpleConfig) -> Result<SimpleState> {
    let all: Vec<usize> = (0..state.world.bodies.len()).collect();
    let (p, v) = composite_com(&state.world, &all)?;
    let hand = anchor_hand(state);
    let anchor = hand.and_then(|h| state.anchors[h.index()]);
    let s = SimpleState {
        p,
        v,
        grabbing: anchor.is_some(),
        anchor,
        arm_length: anchor.map_or(0.0, |a| (p - a.pos()).norm()),
        grab_steps: hand.map_or(0, |h| state.grab_steps[h.index()]),
        next_index: 1,
        steps: 0,
    };
    Ok(simple_env::enforce_length(&s, scfg))
}

/// Deterministic point-mass rollouts along many plans from one projected
/// state; `r_sum` counts handholds reached within the horizon.
pub fn rollout_plans<C: SimpleController + ?Sized>(
    ctrl: &C,
    scfg: &SimpleConfig,
    proj: &SimpleState,
    current: Handhold,
    plans: &[Plan],
    horizon: f64,
    keep_points: bool,
) -> Result<Vec<PlanRollout>> {
    let max_steps = (horizon * CONTROL_HZ).round().max(0.0) as usize;
    let seqs: Vec<HandholdSequence> = plans.iter().map(|p| plan_sequence(current, p)).collect();
    let chunks: Vec<Result<Vec<PlanRollout>>> = seqs
        .par_chunks(CHUNK)
        .map(|chunk| rollout_chunk(ctrl, scfg, proj, chunk, max_steps, keep_points))
        .collect();
    let mut out = Vec::with_capacity(plans.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn rollout_chunk<C: SimpleController + ?Sized>(
    ctrl: &C,
    scfg: &SimpleConfig,
    proj: &SimpleState,
    seqs: &[HandholdSequence],
    max_steps: usize,
    keep_points: bool,
) -> Result<Vec<PlanRollout>> {
    let point = |s: &SimpleState| ReferencePoint {
        t: s.episode_time(),
        p: s.p,
        grab: s.grabbing,
    };
    let mut states: Vec<SimpleState> = vec![proj.clone(); seqs.len()];
    let mut out: Vec<PlanRollout> = states
        .iter()
        .map(|s| PlanRollout {
            r_sum: 0.0,
            points: if keep_points { vec![point(s)] } else { Vec::new() },
            releases: Vec::new(),
        })
        .collect();
    let mut alive: Vec<usize> = (0..seqs.len()).collect();
    let obs_dim = scfg.obs_dim();
    for _ in 0..max_steps {
        if alive.is_empty() {
            break;
        }
        let mut obs = Array2::zeros((alive.len(), obs_dim));
        for (row, &i) in alive.iter().enumerate() {
            let o = simple_env::observe(&states[i], &seqs[i], scfg.lookahead, scfg).to_vec();
            obs.row_mut(row).assign(&ArrayView2::from_shape((1, obs_dim), &o).expect("obs shape").row(0));
        }
        let acts = ctrl.act_batch(obs.view())?;
        let mut still = Vec::with_capacity(alive.len());
        for (row, &i) in alive.iter().enumerate() {
            let a = acts.row(row);
            let t0 = states[i].episode_time();
            let r = match simple_env::step(&states[i], SimpleAction::new(a[0], a[1]), &seqs[i], scfg) {
                Ok(r) => r,
                Err(Error::Diverged(_)) => continue,
                Err(e) => return Err(e),
            };
            out[i].r_sum += r.reward;
            if keep_points {
                if r.events.contains(Events::RELEASE) {
                    out[i].releases.push(t0);
                }
                out[i].points.push(point(&r.next_state));
            }
            states[i] = r.next_state;
            if !r.terminated {
                still.push(i);
            }
        }
        alive = still;
    }
    Ok(out)
}

/// Handholds the point-mass policy reaches along `plan` within `horizon` seconds.
pub fn evaluate_plan<C: SimpleController + ?Sized>(
    ctrl: &C,
    scfg: &SimpleConfig,
    proj: &SimpleState,
    current: Handhold,
    plan: &Plan,
    horizon: f64,
) -> Result<f64> {
    let r = rollout_plans(ctrl, scfg, proj, current, std::slice::from_ref(plan), horizon, false)?;
    Ok(r[0].r_sum)
}

/// Index of the best finite score; ties go to the lowest index. Falls back
/// to plan 0 when no score is finite.
pub fn select_best(scores: &[PlanScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.j.is_finite() {
            continue;
        }
        match best {
            Some(b) if !(s.j > scores[b].j) => {}
            _ => best = Some(i),
        }
    }
    best.or((!scores.is_empty()).then_some(0))
}

/// Articulated sequence with the plan spliced in after the holds already taken.
fn spliced(history: &[Handhold], plan: &Plan) -> HandholdSequence {
    let mut holds = history.to_vec();
    holds.extend_from_slice(&plan.holds);
    HandholdSequence::new(holds, 0)
}

/// Scores every plan and returns the best index with all scores. The critic
/// reads the live observation rebuilt with each plan's holds (and, for the
/// reference-conditioned configurations, its point-mass rollout).
pub fn score_plans(
    full: &Agent,
    fcfg: &FullConfig,
    state: &FullState,
    history: &[Handhold],
    plans: &[Plan],
    rollouts: &[PlanRollout],
    mode: Mode,
) -> Result<(usize, Vec<PlanScore>)> {
    if plans.is_empty() || plans.len() != rollouts.len() {
        return Err(Error::config("score_plans needs one rollout per plan and at least one plan"));
    }
    let needs_ref = fcfg.config.reference_positions();
    let mut probe = state.clone();
    probe.ref_step = 0;
    let v: Vec<f64> = if mode == Mode::RewardOnly {
        vec![0.0; plans.len()]
    } else {
        let dim = fcfg.obs_dim();
        let mut obs = Array2::zeros((plans.len(), dim));
        for (i, (plan, ro)) in plans.iter().zip(rollouts).enumerate() {
            let seq = spliced(history, plan);
            let reference = needs_ref.then(|| ro.clone().into_reference(seq.clone()));
            let o = full_env::observe(&probe, &seq, reference.as_ref(), fcfg);
            for (d, x) in o.into_iter().enumerate() {
                obs[[i, d]] = x;
            }
        }
        full.critic
            .values(full.normalizer.normalize_batch(obs.view()).view())?
            .to_vec()
    };
    let scores: Vec<PlanScore> = v.iter().zip(rollouts).map(|(&v, r)| mode.score(v, r.r_sum)).collect();
    let best = select_best(&scores).expect("non-empty");
    Ok((best, scores))
}

/// One step of an executed episode.
#[derive(Clone, Debug, PartialEq)]
pub struct FullTraceRow {
    pub t: f64,
    pub root: Vec2,
    pub pitch: f64,
    pub hands: [Vec2; 2],
    pub grabs: [bool; 2],
    pub reward: f64,
}

impl FullTraceRow {
    pub fn from_state(s: &FullState, reward: f64) -> Self {
        FullTraceRow {
            t: s.episode_time(),
            root: s.root().pos,
            pitch: s.pitch(),
            hands: Hand::BOTH.map(|h| s.hand_tip(h)),
            grabs: Hand::BOTH.map(|h| s.pinned(h)),
            reward,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub terrain_seed: u64,
    pub mode: Mode,
    /// Per gap, whether a hold at or beyond its far edge was grabbed.
    pub gaps: Vec<bool>,
    pub holds_completed: usize,
    pub replans: usize,
    pub wall_ms: u64,
    pub terminated_early: bool,
    /// Holds actually grabbed, starting with the initial one.
    pub grabbed: Vec<Handhold>,
    pub trace: Vec<FullTraceRow>,
    /// Point-mass paths of the adopted plans, each cut at the next replan.
    pub reference: Vec<Vec2>,
}

impl EpisodeResult {
    pub fn gaps_passed(&self) -> usize {
        self.gaps.iter().filter(|g| **g).count()
    }
}

/// Runs the articulated policy on `terrain`, replanning at every grab.
pub fn run_mpc(
    full: &Agent,
    fcfg: &FullConfig,
    simple: &Agent,
    scfg: &SimpleConfig,
    terrain: &Terrain,
    pcfg: &PlannerConfig,
) -> Result<EpisodeResult> {
    pcfg.validate(fcfg)?;
    fcfg.validate()?;
    scfg.validate()?;
    if full.obs_dim() != fcfg.obs_dim() || full.act_dim() != fcfg.act_dim() {
        return Err(Error::config(format!(
            "full checkpoint expects {} observations, configuration {} produces {}",
            full.obs_dim(),
            fcfg.config.name(),
            fcfg.obs_dim()
        )));
    }
    if simple.obs_dim() != scfg.obs_dim() {
        return Err(Error::config("simple checkpoint does not match its look-ahead"));
    }
    let started = Instant::now();
    let mut rng = rng::stream(pcfg.seed, terrain.seed);
    let x0 = terrain.x_extent().0;
    let mut history = vec![terrain.hold_at(x0)];
    let mut gaps = vec![false; terrain.gaps.len()];
    let mut trace = Vec::new();
    let mut reference_path = Vec::new();
    let mut replans = 0;

    // The initial sequence only needs two holds for the reset; it is replaced at once.
    let boot = HandholdSequence::new(vec![history[0], terrain.hold_at(x0 + 1.0)], 0);
    let mut state = full_env::reset(&boot, fcfg)?;
    trace.push(FullTraceRow::from_state(&state, 0.0));
    let max_steps = (fcfg.episode_limit * CONTROL_HZ).round() as usize;
    let mut terminated_early = false;

    'episode: loop {
        let current = *history.last().expect("start hold");
        let plans: Vec<Plan> = match (0..pcfg.k)
            .map(|_| sample_plan(terrain, current, pcfg.h, &mut rng))
            .collect::<Result<Vec<_>>>()
        {
            Ok(p) => p,
            // No room left on the terrain for another hold.
            Err(Error::Config(_)) => break,
            Err(e) => return Err(e),
        };
        let proj = project_state(&state, scfg)?;
        let keep = fcfg.config.reference_positions();
        let rollouts = rollout_plans(simple, scfg, &proj, current, &plans, pcfg.horizon, keep)?;
        let (best, _) = score_plans(full, fcfg, &state, &history, &plans, &rollouts, pcfg.mode)?;
        replans += 1;

        let plan = plans[best].clone();
        let seq = spliced(&history, &plan);
        let adopted = if keep {
            rollouts[best].clone()
        } else {
            rollout_plans(simple, scfg, &proj, current, std::slice::from_ref(&plan), pcfg.horizon, true)?
                .remove(0)
        };
        let reference = adopted.into_reference(plan_sequence(current, &plan));
        let reference = (!reference.points.is_empty()).then_some(reference);
        state.ref_step = 0;

        loop {
            if state.steps as usize >= max_steps {
                break 'episode;
            }
            let obs = full_env::observe(&state, &seq, reference.as_ref(), fcfg);
            let action = full.act_deterministic(&obs)?;
            let r = match full_env::step(&state, &action, &seq, reference.as_ref(), fcfg) {
                Ok(r) => r,
                Err(Error::Diverged(_)) => {
                    terminated_early = true;
                    break 'episode;
                }
                Err(e) => return Err(e),
            };
            state = r.next_state;
            trace.push(FullTraceRow::from_state(&state, r.reward.total));
            if let Some(rf) = &reference {
                reference_path.push(rf.at(state.ref_step).p);
            }
            if r.events.contains(Events::GRAB_SUCCESS) {
                let hold = seq.holds[state.next_index - 1];
                history.push(hold);
                for (g, passed) in terrain.gaps.iter().zip(gaps.iter_mut()) {
                    *passed |= hold.x >= g.end;
                }
            }
            if r.terminated {
                terminated_early = !r.events.contains(Events::COMPLETED) && !r.events.contains(Events::TIME_LIMIT);
                break 'episode;
            }
            if r.events.contains(Events::GRAB_SUCCESS) {
                break;
            }
        }
    }

    Ok(EpisodeResult {
        terrain_seed: terrain.seed,
        mode: pcfg.mode,
        gaps,
        holds_completed: history.len() - 1,
        replans,
        wall_ms: if pcfg.record_wall_time {
            started.elapsed().as_millis() as u64
        } else {
            0
        },
        terminated_early,
        grabbed: history,
        trace,
        reference: reference_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::MlpSpec;
    use crate::terrain::{generate_terrain, TerrainConfig};

    /// Shortens the arm, lets go once the minimum grab time has passed and
    /// grabs whenever free.
    struct Scripted {
        min_grab: f64,
        max_grab: f64,
    }

    impl SimpleController for Scripted {
        fn act_batch(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
            let mut a = Array2::zeros((obs.nrows(), 2));
            for (i, o) in obs.rows().into_iter().enumerate() {
                let held = o[2] * self.max_grab;
                let release = o[2] > 0.0 && held >= self.min_grab;
                a[[i, 0]] = -1.0;
                a[[i, 1]] = if release { -1.0 } else { 1.0 };
            }
            Ok(a)
        }
    }

    fn hanging(scfg: &SimpleConfig, at: Handhold) -> SimpleState {
        let seq = HandholdSequence::new(vec![at, Handhold::new(at.x + 1.0, at.y)], 0);
        simple_env::reset(&seq, scfg).unwrap()
    }

    fn plan(holds: Vec<Handhold>) -> Plan {
        Plan {
            holds,
            score: None,
            short: false,
        }
    }

    #[test]
    fn scripted_traversal_counts_every_hold() {
        let scfg = SimpleConfig::default();
        let ctrl = Scripted {
            min_grab: scfg.min_grab,
            max_grab: scfg.max_grab,
        };
        let start = Handhold::new(0.0, 0.0);
        let proj = hanging(&scfg, start);
        let p = plan((1..=4).map(|k| Handhold::new(0.3 * k as f64, 0.0)).collect());
        assert_eq!(evaluate_plan(&ctrl, &scfg, &proj, start, &p, 4.0).unwrap(), 4.0);
        assert_eq!(evaluate_plan(&ctrl, &scfg, &proj, start, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hold_across_a_wide_gap_scores_zero() {
        // Released at rest, the mass only falls; nothing 2.5 m away is reachable.
        let scfg = SimpleConfig::default();
        let ctrl = Scripted {
            min_grab: scfg.min_grab,
            max_grab: scfg.max_grab,
        };
        let start = Handhold::new(0.0, 0.0);
        let proj = hanging(&scfg, start);
        let p = plan((0..4).map(|k| Handhold::new(2.5 + 1.2 * k as f64, 0.0)).collect());
        assert_eq!(evaluate_plan(&ctrl, &scfg, &proj, start, &p, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn batched_rollouts_match_single_ones() {
        let scfg = SimpleConfig::default();
        let ctrl = Scripted {
            min_grab: scfg.min_grab,
            max_grab: scfg.max_grab,
        };
        let start = Handhold::new(0.0, 0.0);
        let proj = hanging(&scfg, start);
        let plans: Vec<Plan> = (0..300)
            .map(|i| plan((1..=4).map(|k| Handhold::new((0.2 + 0.002 * i as f64) * k as f64, 0.0)).collect()))
            .collect();
        let batch = rollout_plans(&ctrl, &scfg, &proj, start, &plans, 2.0, true).unwrap();
        for i in [0, 17, 255, 256, 299] {
            let one = rollout_plans(&ctrl, &scfg, &proj, start, &plans[i..=i], 2.0, true).unwrap();
            assert_eq!(one[0], batch[i]);
        }
    }

    #[test]
    fn mode_scores() {
        let s = Mode::Combined.score(5.0, 3.0);
        assert_eq!(s.j, 8.0);
        assert_eq!(Mode::ValueOnly.score(5.0, 3.0).j, 5.0);
        assert_eq!(Mode::RewardOnly.score(5.0, 3.0).j, 3.0);
        assert_eq!(Mode::parse("VALUE_ONLY").unwrap(), Mode::ValueOnly);
        assert_eq!(Mode::parse("reward-only").unwrap(), Mode::RewardOnly);
        assert!(Mode::parse("greedy").is_err());
    }

    #[test]
    fn ties_keep_the_first_plan() {
        let s = |j| PlanScore { v_full: j, r_sum: 0.0, j };
        assert_eq!(select_best(&[s(1.0), s(3.0), s(3.0), s(2.0)]), Some(1));
        assert_eq!(select_best(&[s(f64::NAN), s(0.0)]), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn constant_reward_does_not_change_the_value_choice() {
        let v = [0.3, 2.0, -1.0, 2.0, 1.5];
        let value: Vec<_> = v.iter().map(|&v| Mode::ValueOnly.score(v, 7.0)).collect();
        let combined: Vec<_> = v.iter().map(|&v| Mode::Combined.score(v, 7.0)).collect();
        assert_eq!(select_best(&value), select_best(&combined));
        let reward: Vec<_> = v.iter().map(|&v| Mode::RewardOnly.score(v, 2.0)).collect();
        assert_eq!(select_best(&reward), Some(0));
    }

    #[test]
    fn plan_length_must_exceed_lookahead() {
        let f = FullConfig::default();
        let mut p = PlannerConfig::default();
        assert!(p.validate(&f).is_ok());
        p.h = f.lookahead;
        assert!(p.validate(&f).is_err());
        p.h = 4;
        p.k = 0;
        assert!(p.validate(&f).is_err());
    }

    #[test]
    fn projection_uses_the_centre_of_mass() {
        let fcfg = FullConfig::default();
        let scfg = SimpleConfig::default();
        let seq = HandholdSequence::new(vec![Handhold::new(0.0, 0.0), Handhold::new(1.2, 0.0)], 0);
        let state = full_env::reset(&seq, &fcfg).unwrap();
        let proj = project_state(&state, &scfg).unwrap();
        assert!(proj.grabbing);
        assert_eq!(proj.anchor, Some(seq.holds[0]));
        // Hanging horizontally behind the hold, so the COM is level with it.
        let all: Vec<usize> = (0..state.world.bodies.len()).collect();
        let (com, _) = composite_com(&state.world, &all).unwrap();
        assert_eq!(proj.p, com);
        assert!((proj.arm_length - com.norm()).abs() < 1e-12);
        assert!(proj.arm_length > scfg.r_min && proj.arm_length < scfg.r_max);
        assert!(proj.p.x < 0.0 && proj.p.y.abs() < 1e-9);
    }

    fn agents(fcfg: &FullConfig, scfg: &SimpleConfig) -> (Agent, Agent) {
        let full = Agent::new(
            "full",
            &MlpSpec::full_actor(fcfg.obs_dim(), fcfg.act_dim()),
            &MlpSpec::full_critic(fcfg.obs_dim()),
            3,
        )
        .unwrap();
        let simple = Agent::new(
            "simple",
            &MlpSpec::simple_actor(scfg.obs_dim(), 2),
            &MlpSpec::simple_critic(scfg.obs_dim()),
            4,
        )
        .unwrap();
        (full, simple)
    }

    #[test]
    fn mpc_is_deterministic_and_leaves_no_gap_passed_without_grabs() {
        let fcfg = FullConfig {
            episode_limit: 0.5,
            ..FullConfig::default()
        };
        let scfg = SimpleConfig::default();
        let (full, simple) = agents(&fcfg, &scfg);
        let terrain = generate_terrain(5, &TerrainConfig::default()).unwrap();
        let pcfg = PlannerConfig {
            k: 8,
            horizon: 0.5,
            ..PlannerConfig::default()
        };
        let a = run_mpc(&full, &fcfg, &simple, &scfg, &terrain, &pcfg).unwrap();
        let b = run_mpc(&full, &fcfg, &simple, &scfg, &terrain, &pcfg).unwrap();
        assert_eq!(a, b);
        assert!(a.replans >= 1);
        assert_eq!(a.gaps.len(), 3);
        assert_eq!(a.gaps_passed(), 0);
        assert_eq!(a.wall_ms, 0);
        assert_eq!(a.holds_completed + 1, a.grabbed.len());
    }

    #[test]
    fn live_state_is_untouched_by_scoring() {
        let fcfg = FullConfig::with_config(full_env::Configuration::D);
        let scfg = SimpleConfig::default();
        let (full, simple) = agents(&fcfg, &scfg);
        let terrain = Terrain::flat(30.0, 0.0);
        let start = terrain.hold_at(0.0);
        let seq = HandholdSequence::new(vec![start, terrain.hold_at(1.2)], 0);
        let state = full_env::reset(&seq, &fcfg).unwrap();
        let before = state.clone();
        let mut rng = rng::seeded(1);
        let plans: Vec<Plan> = (0..5).map(|_| sample_plan(&terrain, start, 4, &mut rng).unwrap()).collect();
        let proj = project_state(&state, &scfg).unwrap();
        let ro = rollout_plans(&simple, &scfg, &proj, start, &plans, 0.5, true).unwrap();
        let (best, scores) = score_plans(&full, &fcfg, &state, &[start], &plans, &ro, Mode::Combined).unwrap();
        assert_eq!(state, before);
        assert_eq!(scores.len(), 5);
        assert_eq!(Some(best), select_best(&scores));
        for s in &scores {
            assert_eq!(s.j, s.v_full + s.r_sum);
        }
    }
}
