//! The articulated gibbon environment.
//!
//! A 14-link planar body driven by PD joint targets imitates point-mass
//! reference trajectories. Grasping pins the hand where it is when it comes
//! within reach of the next handhold.

mod env;
pub mod model;
pub mod reference;
pub mod reward;

pub use env::{
    check_termination, compute_reward, next_grabbing_hand, observe, reset, reward_terms, step, FullEnv,
    FullState, FullStepResult, CHAR_OBS_DIM,
};
pub use model::{build_gibbon, hanging_pose, GibbonSpec, Hand, JointSpec};
pub use reference::{record_reference, ReferencePoint, ReferenceTrajectory};
pub use reward::{RewardBreakdown, RewardTerms, RewardWeights};

use crate::error::{Error, Result};
use crate::nets::{Agent, MlpSpec};
use crate::simple_env::GRAB_FLAG_PRIOR;

/// Reward and observation variants compared in the imitation experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Configuration {
    /// Everything except tracking.
    Baseline,
    /// Tracking and task reward only.
    A,
    /// All reward terms.
    B,
    /// B, with grab/release driven by the reference timing.
    C,
    /// B, plus upcoming reference positions in the observation.
    D,
    /// D, plus the reference grab flags of those positions.
    E,
}

impl Configuration {
    pub const ALL: [Configuration; 6] = [
        Configuration::Baseline,
        Configuration::A,
        Configuration::B,
        Configuration::C,
        Configuration::D,
        Configuration::E,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Configuration::Baseline => "BASELINE",
            Configuration::A => "A",
            Configuration::B => "B",
            Configuration::C => "C",
            Configuration::D => "D",
            Configuration::E => "E",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Configuration::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown configuration `{s}` (BASELINE, A-E)")))
    }

    pub fn reference_positions(self) -> bool {
        matches!(self, Configuration::D | Configuration::E)
    }

    pub fn reference_grabs(self) -> bool {
        self == Configuration::E
    }

    pub fn reference_timing(self) -> bool {
        self == Configuration::C
    }

    pub fn uses_reference(self) -> bool {
        self != Configuration::Baseline
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullConfig {
    pub spec: GibbonSpec,
    pub config: Configuration,
    pub lookahead: usize,
    pub weights: RewardWeights,
    pub grab_radius: f64,
    pub min_grab: f64,
    pub max_grab: f64,
    pub min_duration: bool,
    pub max_duration: bool,
    pub unrecoverable: bool,
    /// Distance below the next hold at which a falling body is given up.
    pub reach_margin: f64,
    pub episode_limit: f64,
    /// Future reference samples in the observation (configs D and E).
    pub ref_samples: usize,
    /// Control steps between those samples.
    pub ref_spacing: usize,
}

impl Default for FullConfig {
    fn default() -> Self {
        FullConfig {
            spec: GibbonSpec::default(),
            config: Configuration::B,
            lookahead: 2,
            weights: RewardWeights::default(),
            grab_radius: 0.05,
            min_grab: 0.25,
            max_grab: 4.0,
            min_duration: true,
            max_duration: true,
            unrecoverable: true,
            reach_margin: 0.75,
            episode_limit: 80.0,
            ref_samples: 4,
            ref_spacing: 6,
        }
    }
}

impl FullConfig {
    pub fn with_config(config: Configuration) -> Self {
        FullConfig {
            config,
            ..Default::default()
        }
    }

    pub fn obs_dim(&self) -> usize {
        let mut d = CHAR_OBS_DIM + 2 * (self.lookahead + 1);
        if self.config.reference_positions() {
            d += 2 * self.ref_samples;
        }
        if self.config.reference_grabs() {
            d += self.ref_samples;
        }
        d
    }

    pub fn act_dim(&self) -> usize {
        model::N_JOINTS + 2
    }

    pub fn effective_weights(&self) -> RewardWeights {
        self.weights.for_config(self.config)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.lookahead == 0 {
            return Err(Error::config("look-ahead must be at least 1"));
        }
        if !(self.grab_radius > 0.0) {
            return Err(Error::config("grab radius must be positive"));
        }
        if self.min_grab < 0.0 || self.max_grab <= self.min_grab {
            return Err(Error::config("need 0 <= min_grab < max_grab"));
        }
        if !self.weights.all_non_positive() {
            return Err(Error::config("reward weights must be non-positive"));
        }
        if self.config.reference_positions() && (self.ref_samples == 0 || self.ref_spacing == 0) {
            return Err(Error::config("reference slice needs samples and spacing"));
        }
        Ok(())
    }
}

/// Untrained articulated actor/critic for `cfg`; both grab flags start at
/// the point-mass prior.
pub fn new_agent(cfg: &FullConfig, seed: u64) -> Result<Agent> {
    let (obs, act) = (cfg.obs_dim(), cfg.act_dim());
    let mut agent = Agent::new("full", &MlpSpec::full_actor(obs, act), &MlpSpec::full_critic(obs), seed)?;
    for hand in [Hand::Left, Hand::Right] {
        agent.actor.set_output_mean(model::N_JOINTS + hand.index(), GRAB_FLAG_PRIOR);
    }
    Ok(agent)
}
