//! Point-mass brachiation: a mass on a virtual extensible arm.
//!
//! While grabbing, the arm is a PD-driven spring/damper between the mass and
//! the anchor handhold with hard length limits `[r_min, r_max]` enforced by
//! radial velocity impulses. In flight the mass follows a parabola. The policy
//! picks a target length offset and a grab/release flag at 60 Hz; physics runs
//! at 480 Hz.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::nets::{Agent, MlpSpec};
use crate::rng::{self, Rng};
use crate::rollout::{Environment, EpisodeStats, Transition};
use crate::terrain::{generate_sequence, Handhold, HandholdSequence, SequenceDistribution};

pub const CONTROL_HZ: f64 = 60.0;
pub const SUBSTEPS: usize = 8;
pub const SIM_DT: f64 = 1.0 / (CONTROL_HZ * SUBSTEPS as f64);

/// Slack allowed on the arm-length invariant.
pub const LENGTH_EPS: f64 = 1e-3;

/// How a free mass captures the next handhold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Capture {
    /// Hold anywhere in the reachable annulus `[r_min, r_max]` around the mass.
    Annulus,
    /// Hold within this many meters of the mass.
    Radius(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleConfig {
    pub mass: f64,
    pub gravity: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub initial_length: f64,
    pub kp_arm: f64,
    pub kd_arm: f64,
    pub max_force: f64,
    /// Meters of target-length offset per unit action.
    pub offset_scale: f64,
    pub capture: Capture,
    pub min_grab: f64,
    pub max_grab: f64,
    pub lookahead: usize,
    pub min_duration: bool,
    pub max_duration: bool,
    pub unrecoverable: bool,
    pub episode_limit: f64,
}

impl Default for SimpleConfig {
    fn default() -> Self {
        SimpleConfig {
            mass: 9.8,
            gravity: 9.81,
            r_min: 0.10,
            r_max: 0.75,
            initial_length: 0.6,
            kp_arm: 1200.0,
            kd_arm: 60.0,
            max_force: 240.0,
            offset_scale: 0.15,
            capture: Capture::Annulus,
            min_grab: 0.25,
            max_grab: 4.0,
            lookahead: 1,
            min_duration: true,
            max_duration: true,
            unrecoverable: true,
            episode_limit: 80.0,
        }
    }
}

impl SimpleConfig {
    pub fn obs_dim(&self) -> usize {
        3 + 2 * (self.lookahead + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return Err(Error::config("need 0 < r_min < r_max"));
        }
        if self.mass <= 0.0 || self.max_force < 0.0 || self.offset_scale < 0.0 {
            return Err(Error::config("mass, force clamp and offset scale must be positive"));
        }
        if self.lookahead == 0 {
            return Err(Error::config("look-ahead must be at least 1"));
        }
        if self.min_grab < 0.0 || self.max_grab <= self.min_grab {
            return Err(Error::config("need 0 <= min_grab < max_grab"));
        }
        if let Capture::Radius(r) = self.capture {
            if r <= 0.0 {
                return Err(Error::config("capture radius must be positive"));
            }
        }
        Ok(())
    }

    fn gravity_vec(&self) -> Vec2 {
        Vec2::new(0.0, -self.gravity)
    }

    fn captures(&self, dist: f64) -> bool {
        match self.capture {
            Capture::Annulus => dist >= self.r_min && dist <= self.r_max,
            Capture::Radius(r) => dist <= r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleState {
    pub p: Vec2,
    pub v: Vec2,
    pub grabbing: bool,
    pub anchor: Option<Handhold>,
    /// Current arm length; meaningful while grabbing.
    pub arm_length: f64,
    /// Control steps spent on the current grab.
    pub grab_steps: u32,
    pub next_index: usize,
    /// Control steps since reset.
    pub steps: u32,
}

impl SimpleState {
    pub fn grab_elapsed(&self) -> f64 {
        self.grab_steps as f64 / CONTROL_HZ
    }

    pub fn episode_time(&self) -> f64 {
        self.steps as f64 / CONTROL_HZ
    }

    fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.arm_length.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimpleAction {
    pub length_offset: f64,
    pub grab_flag: f64,
}

impl SimpleAction {
    pub fn new(length_offset: f64, grab_flag: f64) -> Self {
        SimpleAction {
            length_offset,
            grab_flag,
        }
    }

    pub fn from_slice(a: &[f64]) -> Self {
        SimpleAction::new(a[0], a[1])
    }

    fn clipped(self) -> Self {
        let c = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
        SimpleAction::new(c(self.length_offset), c(self.grab_flag))
    }
}

/// Step events, stored as a bit set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Events(u8);

impl Events {
    pub const GRAB_SUCCESS: Events = Events(1);
    pub const RELEASE: Events = Events(1 << 1);
    pub const TERMINATED_UNRECOVERABLE: Events = Events(1 << 2);
    pub const TERMINATED_MAX_GRAB: Events = Events(1 << 3);
    pub const COMPLETED: Events = Events(1 << 4);
    pub const TIME_LIMIT: Events = Events(1 << 5);
    pub const DIVERGED: Events = Events(1 << 6);

    pub fn contains(self, e: Events) -> bool {
        self.0 & e.0 == e.0
    }

    pub fn insert(&mut self, e: Events) {
        self.0 |= e.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Short label used in trajectory exports.
    pub fn label(self) -> String {
        const NAMES: [(Events, &str); 7] = [
            (Events::GRAB_SUCCESS, "grab"),
            (Events::RELEASE, "release"),
            (Events::TERMINATED_UNRECOVERABLE, "unrecoverable"),
            (Events::TERMINATED_MAX_GRAB, "max_grab"),
            (Events::COMPLETED, "completed"),
            (Events::TIME_LIMIT, "time_limit"),
            (Events::DIVERGED, "diverged"),
        ];
        let names: Vec<&str> = NAMES
            .iter()
            .filter(|(e, _)| self.contains(*e))
            .map(|(_, n)| *n)
            .collect();
        names.join("|")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_state: SimpleState,
    pub reward: f64,
    pub terminated: bool,
    pub events: Events,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationStatus {
    Alive,
    Unrecoverable,
    Completed,
}

pub fn reset(seq: &HandholdSequence, cfg: &SimpleConfig) -> Result<SimpleState> {
    if seq.len() < 2 {
        return Err(Error::config(format!(
            "handhold sequence needs at least 2 holds, got {}",
            seq.len()
        )));
    }
    let anchor = seq.holds[0];
    Ok(SimpleState {
        p: anchor.pos() + Vec2::new(-cfg.initial_length, 0.0),
        v: Vec2::ZERO,
        grabbing: true,
        anchor: Some(anchor),
        arm_length: cfg.initial_length,
        grab_steps: 0,
        next_index: 1,
        steps: 0,
    })
}

/// PD force along the arm, positive pushing the mass away from the anchor.
pub fn swing_force(cfg: &SimpleConfig, current_len: f64, target_len: f64, len_rate: f64) -> f64 {
    (cfg.kp_arm * (target_len - current_len) - cfg.kd_arm * len_rate)
        .clamp(-cfg.max_force, cfg.max_force)
}

/// Projects a grabbing mass back into the arm annulus, removing the radial
/// velocity component that points further out of it.
pub fn enforce_length(state: &SimpleState, cfg: &SimpleConfig) -> SimpleState {
    let mut s = state.clone();
    let Some(anchor) = s.anchor.filter(|_| s.grabbing) else {
        return s;
    };
    let d = s.p - anchor.pos();
    let len = d.norm();
    let u = if len > 0.0 { d * (1.0 / len) } else { Vec2::new(0.0, -1.0) };
    let radial = s.v.dot(u);
    if len > cfg.r_max {
        s.p = anchor.pos() + u * cfg.r_max;
        if radial > 0.0 {
            s.v -= u * radial;
        }
    } else if len < cfg.r_min {
        s.p = anchor.pos() + u * cfg.r_min;
        if radial < 0.0 {
            s.v -= u * radial;
        }
    }
    s.arm_length = (s.p - anchor.pos()).norm();
    s
}

pub fn check_termination(
    state: &SimpleState,
    seq: &HandholdSequence,
    cfg: &SimpleConfig,
) -> TerminationStatus {
    if state.next_index >= seq.len() {
        return TerminationStatus::Completed;
    }
    let next = seq.holds[state.next_index];
    if !state.grabbing && state.p.y < next.y - cfg.r_max && state.v.y < 0.0 {
        TerminationStatus::Unrecoverable
    } else {
        TerminationStatus::Alive
    }
}

fn swing_substep(s: &mut SimpleState, anchor: Vec2, target_len: f64, cfg: &SimpleConfig) {
    let d = s.p - anchor;
    let len = d.norm();
    let u = if len > 0.0 { d * (1.0 / len) } else { Vec2::new(0.0, -1.0) };
    let f = swing_force(cfg, len, target_len, s.v.dot(u));
    let acc = u * (f / cfg.mass) + cfg.gravity_vec();
    s.v += acc * SIM_DT;
    s.p += s.v * SIM_DT;
}

/// Exact under constant gravity, so flight conserves specific energy.
fn flight_substep(s: &mut SimpleState, cfg: &SimpleConfig) {
    let g = cfg.gravity_vec();
    s.p += s.v * SIM_DT + g * (0.5 * SIM_DT * SIM_DT);
    s.v += g * SIM_DT;
}

/// Advances one control step (eight physics substeps).
pub fn step(
    state: &SimpleState,
    action: SimpleAction,
    seq: &HandholdSequence,
    cfg: &SimpleConfig,
) -> Result<StepResult> {
    let action = action.clipped();
    let mut s = state.clone();
    let mut events = Events::default();
    let mut reward = 0.0;
    let wants_grab = action.grab_flag > 0.0;

    if s.grabbing {
        let gate_open = !cfg.min_duration || s.grab_elapsed() >= cfg.min_grab - 1e-9;
        if !wants_grab && gate_open {
            s.grabbing = false;
            s.anchor = None;
            events.insert(Events::RELEASE);
        }
    } else if wants_grab && s.next_index < seq.len() {
        let target = seq.holds[s.next_index];
        if cfg.captures((s.p - target.pos()).norm()) {
            s.grabbing = true;
            s.anchor = Some(target);
            s.grab_steps = 0;
            s.next_index += 1;
            s = enforce_length(&s, cfg);
            reward = 1.0;
            events.insert(Events::GRAB_SUCCESS);
        }
    }

    match s.anchor.filter(|_| s.grabbing) {
        Some(anchor) => {
            let target_len = s.arm_length + action.length_offset * cfg.offset_scale;
            for _ in 0..SUBSTEPS {
                swing_substep(&mut s, anchor.pos(), target_len, cfg);
                s = enforce_length(&s, cfg);
            }
        }
        None => {
            for _ in 0..SUBSTEPS {
                flight_substep(&mut s, cfg);
            }
        }
    }
    if !s.is_finite() {
        return Err(Error::Diverged(format!(
            "point mass state non-finite at t={:.3}s",
            s.episode_time()
        )));
    }

    s.steps += 1;
    if s.grabbing {
        s.grab_steps += 1;
    }

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
    if !terminated && s.grabbing && cfg.max_duration && s.grab_elapsed() >= cfg.max_grab - 1e-9 {
        s.grabbing = false;
        s.anchor = None;
        events.insert(Events::TERMINATED_MAX_GRAB);
        terminated = true;
    }
    if !terminated && s.episode_time() >= cfg.episode_limit - 1e-9 {
        events.insert(Events::TIME_LIMIT);
        terminated = true;
    }

    Ok(StepResult {
        next_state: s,
        reward,
        terminated,
        events,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleObservation {
    /// `(v_x, v_y, t_norm)`.
    pub character: [f64; 3],
    /// Relative `(dx, dy)` of the current and `N` upcoming holds.
    pub task: Vec<f64>,
}

impl SimpleObservation {
    pub fn dim(&self) -> usize {
        3 + self.task.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.character);
        v.extend_from_slice(&self.task);
        v
    }
}

pub fn observe(
    state: &SimpleState,
    seq: &HandholdSequence,
    n: usize,
    cfg: &SimpleConfig,
) -> SimpleObservation {
    let t_norm = if state.grabbing {
        (state.grab_elapsed() / cfg.max_grab).min(1.0)
    } else {
        0.0
    };
    let current = state.next_index.saturating_sub(1);
    let mut task = Vec::with_capacity(2 * (n + 1));
    for i in current..=current + n {
        let h = seq.get_padded(i);
        task.push(h.x - state.p.x);
        task.push(h.y - state.p.y);
    }
    SimpleObservation {
        character: [state.v.x, state.v.y, t_norm],
        task,
    }
}

/// One row of a recorded point-mass trajectory (60 Hz).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p: Vec2,
    pub v: Vec2,
    pub grabbing: bool,
    pub arm_length: f64,
    pub reward: f64,
    pub events: Events,
}

impl TraceRow {
    pub fn from_state(s: &SimpleState, reward: f64, events: Events) -> Self {
        TraceRow {
            t: s.episode_time(),
            p: s.p,
            v: s.v,
            grabbing: s.grabbing,
            arm_length: if s.grabbing { s.arm_length } else { 0.0 },
            reward,
            events,
        }
    }
}

/// Initial mean of the grab-flag action. A fresh policy mostly keeps holding
/// on, so its random releases come late enough in a swing to reach the next
/// hold; with a zero mean it lets go at the 0.25 s gate and never grabs.
pub const GRAB_FLAG_PRIOR: f64 = 0.8;

/// Untrained point-mass actor/critic for `cfg`, grab-flag prior applied.
pub fn new_agent(cfg: &SimpleConfig, seed: u64) -> Result<Agent> {
    let obs = cfg.obs_dim();
    let mut agent = Agent::new("simple", &MlpSpec::simple_actor(obs, 2), &MlpSpec::simple_critic(obs), seed)?;
    agent.actor.set_output_mean(1, GRAB_FLAG_PRIOR);
    Ok(agent)
}

/// Batched-training wrapper: draws a fresh sequence on every reset.
pub struct SimpleEnv {
    pub cfg: SimpleConfig,
    pub dist: SequenceDistribution,
    pub seq_len: usize,
    rng: Rng,
    state: SimpleState,
    seq: HandholdSequence,
    ep_return: f64,
    ep_grabs: usize,
}

impl SimpleEnv {
    pub fn new(
        cfg: SimpleConfig,
        dist: SequenceDistribution,
        seq_len: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        dist.validate()?;
        let mut rng = rng::stream(seed, stream);
        let seq = generate_sequence(rng.random(), seq_len, dist.distance, dist.pitch)?;
        let state = reset(&seq, &cfg)?;
        Ok(SimpleEnv {
            cfg,
            dist,
            seq_len,
            rng,
            state,
            seq,
            ep_return: 0.0,
            ep_grabs: 0,
        })
    }

    pub fn state(&self) -> &SimpleState {
        &self.state
    }

    pub fn sequence(&self) -> &HandholdSequence {
        &self.seq
    }

    fn observation(&self) -> Vec<f64> {
        observe(&self.state, &self.seq, self.cfg.lookahead, &self.cfg).to_vec()
    }
}

impl Environment for SimpleEnv {
    fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    fn act_dim(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let seed = self.rng.random();
        self.seq = generate_sequence(seed, self.seq_len, self.dist.distance, self.dist.pitch)?;
        self.state = reset(&self.seq, &self.cfg)?;
        self.ep_return = 0.0;
        self.ep_grabs = 0;
        Ok(self.observation())
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
        if action.len() != 2 {
            return Err(Error::Shape {
                what: "simplified action",
                expected: 2,
                got: action.len(),
            });
        }
        let (reward, done, grabbed) =
            match step(&self.state, SimpleAction::from_slice(action), &self.seq, &self.cfg) {
                Ok(r) => {
                    let grabbed = r.events.contains(Events::GRAB_SUCCESS);
                    self.state = r.next_state;
                    (r.reward, r.terminated, grabbed)
                }
                Err(Error::Diverged(_)) => (0.0, true, false),
                Err(e) => return Err(e),
            };
        self.ep_return += reward;
        self.ep_grabs += grabbed as usize;
        let episode = done.then(|| self.progress());
        Ok(Transition {
            obs: self.observation(),
            reward,
            done,
            episode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_unit() -> HandholdSequence {
        HandholdSequence::new(
            (0..5).map(|i| Handhold::new(i as f64, 0.0)).collect(),
            0,
        )
    }

    fn flying(p: Vec2, v: Vec2, next_index: usize) -> SimpleState {
        SimpleState {
            p,
            v,
            grabbing: false,
            anchor: None,
            arm_length: 0.0,
            grab_steps: 0,
            next_index,
            steps: 0,
        }
    }

    #[test]
    fn reset_hangs_horizontally_behind_anchor() {
        let cfg = SimpleConfig::default();
        let s = reset(&seq_unit(), &cfg).unwrap();
        assert_eq!(s.p, Vec2::new(-0.6, 0.0));
        assert_eq!(s.v, Vec2::ZERO);
        assert_eq!((s.p - Vec2::ZERO).norm(), 0.6);
        assert!(s.grabbing && s.next_index == 1 && s.grab_steps == 0);
        let o = observe(&s, &seq_unit(), 1, &cfg);
        assert_eq!(o.character[2], 0.0);
        let empty = HandholdSequence::new(vec![Handhold::new(0.0, 0.0)], 0);
        assert!(matches!(reset(&empty, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn swing_force_examples() {
        let cfg = SimpleConfig::default();
        assert!((swing_force(&cfg, 0.5, 0.6, 0.0) - 120.0).abs() < 1e-9);
        assert_eq!(swing_force(&cfg, 0.6, 0.6, 0.0), 0.0);
        assert_eq!(swing_force(&cfg, 0.3, 0.75, 0.0), 240.0);
        assert_eq!(swing_force(&cfg, 0.75, 0.3, 0.0), -240.0);
    }

    #[test]
    fn single_flight_substep() {
        // p' = p + v dt + g dt²/2, v' = v + g dt with dt = 1/480
        let cfg = SimpleConfig::default();
        let mut s = flying(Vec2::ZERO, Vec2::new(2.0, 1.0), 1);
        flight_substep(&mut s, &cfg);
        assert!((s.v.x - 2.0).abs() < 1e-15);
        assert!((s.v.y - 0.9795625).abs() < 1e-9, "{}", s.v.y);
        assert!((s.p.x - 0.0041667).abs() < 1e-7);
        assert!((s.p.y - 0.0020620).abs() < 1e-7, "{}", s.p.y);
    }

    #[test]
    fn airborne_release_flag_is_passive() {
        let cfg = SimpleConfig::default();
        let seq = seq_unit();
        let s0 = flying(Vec2::new(0.2, -0.3), Vec2::new(3.0, 2.0), 2);
        let a = step(&s0, SimpleAction::new(1.0, -1.0), &seq, &cfg).unwrap();
        let b = step(&s0, SimpleAction::new(-1.0, -0.2), &seq, &cfg).unwrap();
        let mut c = s0.clone();
        for _ in 0..SUBSTEPS {
            flight_substep(&mut c, &cfg);
        }
        assert_eq!(a.next_state.p, c.p);
        assert_eq!(a.next_state.v, c.v);
        assert_eq!(a.next_state.p, b.next_state.p);
    }

    #[test]
    fn early_release_is_ignored() {
        let cfg = SimpleConfig::default();
        let seq = seq_unit();
        let mut s = reset(&seq, &cfg).unwrap();
        s.grab_steps = 6; // 0.1 s
        let r = step(&s, SimpleAction::new(0.0, -1.0), &seq, &cfg).unwrap();
        assert!(r.next_state.grabbing);
        assert!(!r.events.contains(Events::RELEASE));
        s.grab_steps = 15; // 0.25 s
        let r = step(&s, SimpleAction::new(0.0, -1.0), &seq, &cfg).unwrap();
        assert!(!r.next_state.grabbing);
        assert!(r.events.contains(Events::RELEASE));
    }

    #[test]
    fn enforce_length_examples() {
        let cfg = SimpleConfig::default();
        let mut s = reset(&seq_unit(), &cfg).unwrap();
        s.p = Vec2::new(0.0, -0.8);
        s.v = Vec2::new(0.0, -1.0);
        let e = enforce_length(&s, &cfg);
        assert!((e.p.y + 0.75).abs() < 1e-12 && e.p.x.abs() < 1e-12);
        assert!(e.v.norm() < 1e-12);

        let th = 0.7f64;
        s.p = Vec2::new(0.75 * th.cos(), -0.75 * th.sin());
        s.v = Vec2::new(th.sin(), th.cos()) * 2.0; // tangential
        let e = enforce_length(&s, &cfg);
        assert!((e.p - s.p).norm() < 1e-12 && (e.v - s.v).norm() < 1e-12);

        s.p = Vec2::new(0.05, 0.0);
        s.v = Vec2::new(-1.0, 0.5);
        let e = enforce_length(&s, &cfg);
        assert!((e.p.x - 0.10).abs() < 1e-12);
        assert!(e.v.x.abs() < 1e-12 && (e.v.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn observation_dimensions_and_time() {
        let cfg = SimpleConfig::default();
        let seq = seq_unit();
        let mut s = reset(&seq, &cfg).unwrap();
        assert_eq!(observe(&s, &seq, 1, &cfg).dim(), 7);
        assert_eq!(observe(&s, &seq, 10, &cfg).dim(), 25);
        s.grab_steps = 60;
        assert_eq!(observe(&s, &seq, 1, &cfg).character[2], 0.25);
        // padding repeats the last hold
        let o = observe(&s, &seq, 10, &cfg);
        assert_eq!(o.task[2 * 10], 4.0 - s.p.x);
        assert_eq!(o.task[2 * 5], 4.0 - s.p.x);
        // current hold is hold 0
        assert_eq!(o.task[0], -s.p.x);
    }

    #[test]
    fn termination_rule() {
        let cfg = SimpleConfig::default();
        let seq = HandholdSequence::new(vec![Handhold::new(0.0, 0.0), Handhold::new(5.0, 0.0)], 0);
        let s = flying(Vec2::new(3.0, -1.0), Vec2::new(1.0, -2.0), 1);
        assert_eq!(check_termination(&s, &seq, &cfg), TerminationStatus::Unrecoverable);
        let s = flying(Vec2::new(3.0, -1.0), Vec2::new(1.0, 2.0), 1);
        assert_eq!(check_termination(&s, &seq, &cfg), TerminationStatus::Alive);
        let mut s = reset(&seq, &cfg).unwrap();
        s.p = Vec2::new(0.0, -0.75);
        s.v = Vec2::new(0.0, -3.0);
        assert_eq!(check_termination(&s, &seq, &cfg), TerminationStatus::Alive);
    }

    #[test]
    fn grab_in_annulus_rewards_once_and_completes() {
        let cfg = SimpleConfig::default();
        let seq = HandholdSequence::new(vec![Handhold::new(0.0, 0.0), Handhold::new(1.0, 0.0)], 0);
        let s = flying(Vec2::new(0.5, -0.2), Vec2::new(1.0, 0.0), 1);
        let r = step(&s, SimpleAction::new(0.0, 1.0), &seq, &cfg).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(r.events.contains(Events::GRAB_SUCCESS));
        assert!(r.events.contains(Events::COMPLETED));
        assert!(r.terminated);
        assert_eq!(r.next_state.anchor, Some(Handhold::new(1.0, 0.0)));

        // a 5 cm capture radius rejects the same state
        let tight = SimpleConfig {
            capture: Capture::Radius(0.05),
            ..cfg.clone()
        };
        let r = step(&s, SimpleAction::new(0.0, 1.0), &seq, &tight).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(!r.next_state.grabbing);
    }

    #[test]
    fn never_release_hits_max_grab_at_four_seconds() {
        let cfg = SimpleConfig::default();
        let seq = seq_unit();
        let mut s = reset(&seq, &cfg).unwrap();
        for k in 1..=240 {
            let r = step(&s, SimpleAction::new(0.0, 1.0), &seq, &cfg).unwrap();
            s = r.next_state;
            if k < 240 {
                assert!(!r.terminated, "step {k}");
                assert!(s.grab_elapsed() <= 4.0);
            } else {
                assert!(r.events.contains(Events::TERMINATED_MAX_GRAB));
                assert!(!s.grabbing);
            }
        }
        let no_max = SimpleConfig {
            max_duration: false,
            ..cfg
        };
        let mut s = reset(&seq, &no_max).unwrap();
        for _ in 0..300 {
            let r = step(&s, SimpleAction::new(0.0, 1.0), &seq, &no_max).unwrap();
            assert!(!r.terminated);
            s = r.next_state;
        }
    }

    #[test]
    fn step_is_pure() {
        let cfg = SimpleConfig::default();
        let seq = seq_unit();
        let s = reset(&seq, &cfg).unwrap();
        let a = step(&s, SimpleAction::new(0.3, 1.0), &seq, &cfg).unwrap();
        let b = step(&s, SimpleAction::new(0.3, 1.0), &seq, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
