use std::sync::Arc;

use rand::Rng as _;

use super::model::{body, hand_tip, hanging_pose, joint, wrap_angle, Hand, N_JOINTS};
use super::reference::ReferenceTrajectory;
use super::reward::{self, combine, RewardBreakdown, RewardTerms};
use super::FullConfig;
use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::physics2d::{RigidBody2D, World2D};
use crate::rng::{self, Rng};
use crate::rollout::{Environment, EpisodeStats, Transition};
use crate::simple_env::{Events, TerminationStatus, CONTROL_HZ, SUBSTEPS};
use crate::terrain::{Handhold, HandholdSequence};

/// Root velocity, pitch, joint cos/sin, joint rates, grab-arm height, grab flags.
pub const CHAR_OBS_DIM: usize = 2 + 1 + 2 * N_JOINTS + N_JOINTS + 1 + 2;

#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub world: World2D,
    /// Hold each hand is pinned to.
    pub anchors: [Option<Handhold>; 2],
    /// Control steps each hand has spent on its current grab.
    pub grab_steps: [u32; 2],
    /// Control step at which each hand last grabbed.
    pub grabbed_at: [u32; 2],
    pub next_index: usize,
    pub steps: u32,
    /// Cursor into the reference trajectory.
    pub ref_step: usize,
}

impl FullState {
    pub fn pinned(&self, hand: Hand) -> bool {
        self.anchors[hand.index()].is_some()
    }

    pub fn any_pinned(&self) -> bool {
        self.anchors.iter().any(Option::is_some)
    }

    pub fn root(&self) -> &RigidBody2D {
        &self.world.bodies[body::TORSO]
    }

    pub fn pitch(&self) -> f64 {
        wrap_angle(self.root().angle)
    }

    pub fn hand_tip(&self, hand: Hand) -> Vec2 {
        hand_tip(&self.world, hand)
    }

    pub fn episode_time(&self) -> f64 {
        self.steps as f64 / CONTROL_HZ
    }

    pub fn grab_elapsed(&self, hand: Hand) -> f64 {
        self.grab_steps[hand.index()] as f64 / CONTROL_HZ
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullStepResult {
    pub next_state: FullState,
    pub reward: RewardBreakdown,
    pub terminated: bool,
    pub events: Events,
    /// Hands released during this step (at its start time).
    pub released: Vec<Hand>,
}

/// Hangs the gibbon from hold 0 by its left hand, horizontal and at rest.
pub fn reset(seq: &HandholdSequence, cfg: &FullConfig) -> Result<FullState> {
    if seq.len() < 2 {
        return Err(Error::config("handhold sequence needs at least 2 holds"));
    }
    let hold = seq.holds[0];
    let mut world = hanging_pose(&cfg.spec, hold.pos())?;
    let tip = world.bodies[Hand::Left.body()].top();
    world.attach_pin(Hand::Left.body(), tip)?;
    Ok(FullState {
        world,
        anchors: [Some(hold), None],
        grab_steps: [0; 2],
        grabbed_at: [0; 2],
        next_index: 1,
        steps: 0,
        ref_step: 0,
    })
}

/// The hand expected to grab next: the free one when one hand holds on, the
/// older grip when both do, otherwise whichever is closer to the next hold.
pub fn next_grabbing_hand(state: &FullState, seq: &HandholdSequence) -> Hand {
    match (state.pinned(Hand::Left), state.pinned(Hand::Right)) {
        (true, false) => Hand::Right,
        (false, true) => Hand::Left,
        (true, true) => {
            if state.grabbed_at[1] < state.grabbed_at[0] {
                Hand::Right
            } else {
                Hand::Left
            }
        }
        (false, false) => {
            let target = seq.get_padded(state.next_index).pos();
            let dl = (state.hand_tip(Hand::Left) - target).norm_sq();
            let dr = (state.hand_tip(Hand::Right) - target).norm_sq();
            if dr < dl {
                Hand::Right
            } else {
                Hand::Left
            }
        }
    }
}

fn release(state: &mut FullState, hand: Hand) {
    state.world.detach(hand.body());
    state.anchors[hand.index()] = None;
    state.grab_steps[hand.index()] = 0;
}

pub fn step(
    state: &FullState,
    action: &[f64],
    seq: &HandholdSequence,
    reference: Option<&ReferenceTrajectory>,
    cfg: &FullConfig,
) -> Result<FullStepResult> {
    if action.len() != cfg.act_dim() {
        return Err(Error::Shape {
            what: "full action",
            expected: cfg.act_dim(),
            got: action.len(),
        });
    }
    let a: Vec<f64> = action
        .iter()
        .map(|x| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) })
        .collect();
    let mut s = state.clone();
    let mut events = Events::default();
    let mut released = Vec::new();
    let mut task = 0.0;

    let timed = cfg.config.reference_timing();
    let flags: [bool; 2] = if timed {
        let r = reference.ok_or_else(|| Error::config("configuration C needs a reference"))?;
        let g = r.at(s.ref_step + 1).grab;
        [g, g]
    } else {
        [a[N_JOINTS] > 0.0, a[N_JOINTS + 1] > 0.0]
    };

    for hand in Hand::BOTH {
        if s.pinned(hand) && !flags[hand.index()] {
            let gate = timed || !cfg.min_duration || s.grab_elapsed(hand) >= cfg.min_grab - 1e-9;
            if gate {
                release(&mut s, hand);
                released.push(hand);
                events.insert(Events::RELEASE);
            }
        }
    }
    for hand in Hand::BOTH {
        if s.pinned(hand) || !flags[hand.index()] || s.next_index >= seq.len() {
            continue;
        }
        let target = seq.holds[s.next_index];
        let tip = s.hand_tip(hand);
        if (tip - target.pos()).norm() < cfg.grab_radius {
            let local = s.world.bodies[hand.body()].top();
            s.world.attach_pin(hand.body(), local)?;
            s.anchors[hand.index()] = Some(target);
            s.grab_steps[hand.index()] = 0;
            s.grabbed_at[hand.index()] = s.steps;
            s.next_index += 1;
            task += 1.0;
            events.insert(Events::GRAB_SUCCESS);
        }
    }

    let spans: Vec<f64> = cfg.spec.joints().iter().map(|j| j.span).collect();
    let targets: Vec<f64> = (0..N_JOINTS)
        .map(|j| s.world.joint_angle(j) + a[j] * spans[j])
        .collect();
    for _ in 0..SUBSTEPS {
        s.world.step_world(&targets)?;
    }

    s.steps += 1;
    s.ref_step += 1;
    for hand in Hand::BOTH {
        if s.pinned(hand) {
            s.grab_steps[hand.index()] += 1;
        }
    }
    if !timed && cfg.max_duration {
        for hand in Hand::BOTH {
            if s.pinned(hand) && s.grab_elapsed(hand) >= cfg.max_grab - 1e-9 {
                release(&mut s, hand);
                events.insert(Events::RELEASE);
            }
        }
    }

    let reward = compute_reward(&s, seq, reference, task, cfg);
    let mut terminated = false;
    match check_termination(&s, seq, cfg) {
        TerminationStatus::Completed => {
            events.insert(Events::COMPLETED);
            terminated = true;
        }
        TerminationStatus::Unrecoverable if cfg.unrecoverable => {
            events.insert(Events::TERMINATED_UNRECOVERABLE);
            terminated = true;
        }
        _ => {}
    }
    if !terminated && s.episode_time() >= cfg.episode_limit - 1e-9 {
        events.insert(Events::TIME_LIMIT);
        terminated = true;
    }
    Ok(FullStepResult {
        next_state: s,
        reward,
        terminated,
        events,
        released,
    })
}

pub fn check_termination(state: &FullState, seq: &HandholdSequence, cfg: &FullConfig) -> TerminationStatus {
    if state.next_index >= seq.len() {
        return TerminationStatus::Completed;
    }
    let next = seq.holds[state.next_index];
    let root = state.root();
    if !state.any_pinned() && root.pos.y < next.y - cfg.reach_margin && root.vel.y < 0.0 {
        TerminationStatus::Unrecoverable
    } else {
        TerminationStatus::Alive
    }
}

pub fn reward_terms(
    state: &FullState,
    seq: &HandholdSequence,
    reference: Option<&ReferenceTrajectory>,
    task: f64,
) -> RewardTerms {
    let w = &state.world;
    let root = state.root();
    let tracking = reference.map_or(0.0, |r| (root.pos - r.at(state.ref_step).p).norm_sq());
    let hand = next_grabbing_hand(state, seq);
    let reaching = if state.any_pinned() {
        0.0
    } else {
        (state.hand_tip(hand) - seq.get_padded(state.next_index).pos()).norm_sq()
    };
    let knees: Vec<f64> = joint::KNEES.iter().map(|&j| w.joint_angle(j)).collect();
    let energy: f64 = w
        .joints
        .iter()
        .enumerate()
        .map(|(j, jt)| {
            let tau = if jt.max_torque > 0.0 {
                jt.applied_torque / jt.max_torque
            } else {
                0.0
            };
            tau * tau + w.joint_rate(j).abs()
        })
        .sum();
    RewardTerms {
        task,
        tracking,
        reaching,
        upright: reward::upright_penalty(state.pitch()),
        arm: w.bodies[hand.upper_arm()].omega.abs(),
        legs: reward::legs_penalty(&knees),
        energy,
    }
}

pub fn compute_reward(
    state: &FullState,
    seq: &HandholdSequence,
    reference: Option<&ReferenceTrajectory>,
    task: f64,
    cfg: &FullConfig,
) -> RewardBreakdown {
    combine(reward_terms(state, seq, reference, task), &cfg.effective_weights())
}

/// Flat observation; the reference part is zero when no reference is given.
pub fn observe(
    state: &FullState,
    seq: &HandholdSequence,
    reference: Option<&ReferenceTrajectory>,
    cfg: &FullConfig,
) -> Vec<f64> {
    let w = &state.world;
    let root = state.root();
    let mut o = Vec::with_capacity(cfg.obs_dim());
    o.extend([root.vel.x, root.vel.y, state.pitch()]);
    for j in 0..N_JOINTS {
        let a = w.joint_angle(j);
        o.extend([a.cos(), a.sin()]);
    }
    o.extend((0..N_JOINTS).map(|j| w.joint_rate(j)));
    let hand = next_grabbing_hand(state, seq);
    o.push(state.hand_tip(hand).y - root.pos.y);
    o.extend(Hand::BOTH.map(|h| state.pinned(h) as u8 as f64));

    let current = state.next_index.saturating_sub(1);
    for i in current..=current + cfg.lookahead {
        let h = seq.get_padded(i);
        o.extend([h.x - root.pos.x, h.y - root.pos.y]);
    }

    if cfg.config.reference_positions() {
        let ahead = |k: usize| reference.map(|r| r.at(state.ref_step + k * cfg.ref_spacing));
        for k in 1..=cfg.ref_samples {
            match ahead(k) {
                Some(p) => o.extend([p.p.x - root.pos.x, p.p.y - root.pos.y]),
                None => o.extend([0.0, 0.0]),
            }
        }
        if cfg.config.reference_grabs() {
            for k in 1..=cfg.ref_samples {
                o.push(ahead(k).map_or(0.0, |p| p.grab as u8 as f64));
            }
        }
    }
    debug_assert_eq!(o.len(), cfg.obs_dim());
    o
}

/// Training wrapper drawing a recorded reference (and its sequence) per episode.
pub struct FullEnv {
    pub cfg: FullConfig,
    refs: Arc<Vec<ReferenceTrajectory>>,
    rng: Rng,
    current: usize,
    state: FullState,
    ep_return: f64,
    ep_grabs: usize,
    release_times: Vec<f64>,
}

impl FullEnv {
    pub fn new(cfg: FullConfig, refs: Arc<Vec<ReferenceTrajectory>>, seed: u64, stream: u64) -> Result<Self> {
        cfg.validate()?;
        if refs.is_empty() {
            return Err(Error::config("the full environment needs at least one reference"));
        }
        for r in refs.iter() {
            r.validate()?;
        }
        let mut rng = rng::stream(seed, stream);
        let current = rng.random_range(0..refs.len());
        let state = reset(&refs[current].seq, &cfg)?;
        Ok(FullEnv {
            cfg,
            refs,
            rng,
            current,
            state,
            ep_return: 0.0,
            ep_grabs: 0,
            release_times: Vec::new(),
        })
    }

    pub fn state(&self) -> &FullState {
        &self.state
    }

    pub fn reference(&self) -> &ReferenceTrajectory {
        &self.refs[self.current]
    }

    /// Restarts on a specific reference instead of a random one.
    pub fn reset_to(&mut self, index: usize) -> Result<Vec<f64>> {
        if index >= self.refs.len() {
            return Err(Error::config(format!("no reference {index}")));
        }
        self.current = index;
        self.state = reset(&self.refs[index].seq, &self.cfg)?;
        self.ep_return = 0.0;
        self.ep_grabs = 0;
        self.release_times.clear();
        Ok(self.observation())
    }

    /// Start times of the steps in which a hand let go this episode.
    pub fn release_times(&self) -> &[f64] {
        &self.release_times
    }

    fn reference_opt(&self) -> Option<&ReferenceTrajectory> {
        self.cfg.config.uses_reference().then(|| &self.refs[self.current])
    }

    fn observation(&self) -> Vec<f64> {
        let r = &self.refs[self.current];
        observe(&self.state, &r.seq, self.reference_opt(), &self.cfg)
    }
}

impl Environment for FullEnv {
    fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    fn act_dim(&self) -> usize {
        self.cfg.act_dim()
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let i = self.rng.random_range(0..self.refs.len());
        self.reset_to(i)
    }

    fn observe(&self) -> Vec<f64> {
        self.observation()
    }

    fn progress(&self) -> EpisodeStats {
        EpisodeStats {
            ret: self.ep_return,
            handholds: self.ep_grabs,
            steps: self.state.steps as usize,
        }
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let refs = Arc::clone(&self.refs);
        let r = &refs[self.current];
        let t0 = self.state.episode_time();
        let (reward, done) = match step(&self.state, action, &r.seq, self.reference_opt(), &self.cfg) {
            Ok(res) => {
                if res.events.contains(Events::RELEASE) {
                    self.release_times.push(t0);
                }
                self.ep_grabs += res.events.contains(Events::GRAB_SUCCESS) as usize;
                self.state = res.next_state;
                (res.reward.total, res.terminated)
            }
            Err(Error::Diverged(_)) => (0.0, true),
            Err(e) => return Err(e),
        };
        self.ep_return += reward;
        let episode = done.then(|| self.progress());
        Ok(Transition {
            obs: self.observation(),
            reward,
            done,
            episode,
        })
    }
}
