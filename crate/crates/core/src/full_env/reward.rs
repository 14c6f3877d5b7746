//! Imitation, task and style reward.

use super::Configuration;

pub const UPRIGHT_THRESHOLD: f64 = 40.0 * std::f64::consts::PI / 180.0;
pub const KNEE_TARGET: f64 = 110.0 * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    pub tracking: f64,
    pub reaching: f64,
    pub upright: f64,
    pub arm: f64,
    pub legs: f64,
    pub energy: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            tracking: -4.0,
            reaching: -0.1,
            upright: -1.0,
            arm: -0.1,
            legs: -0.1,
            energy: -0.01,
        }
    }
}

impl RewardWeights {
    /// Zeroes the terms a configuration leaves out.
    pub fn for_config(self, cfg: Configuration) -> Self {
        match cfg {
            Configuration::Baseline => RewardWeights { tracking: 0.0, ..self },
            Configuration::A => RewardWeights {
                tracking: self.tracking,
                reaching: 0.0,
                upright: 0.0,
                arm: 0.0,
                legs: 0.0,
                energy: 0.0,
            },
            _ => self,
        }
    }

    pub fn all_non_positive(&self) -> bool {
        [self.tracking, self.reaching, self.upright, self.arm, self.legs, self.energy]
            .iter()
            .all(|w| *w <= 0.0)
    }
}

/// Raw penalty terms, all non-negative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardTerms {
    pub task: f64,
    pub tracking: f64,
    pub reaching: f64,
    pub upright: f64,
    pub arm: f64,
    pub legs: f64,
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardBreakdown {
    pub terms: RewardTerms,
    /// `exp(Σ w·r)`.
    pub shaped: f64,
    pub total: f64,
}

pub fn upright_penalty(pitch: f64) -> f64 {
    (pitch.abs() - UPRIGHT_THRESHOLD).max(0.0)
}

pub fn legs_penalty(knees: &[f64]) -> f64 {
    knees.iter().map(|k| (k - KNEE_TARGET).abs()).sum()
}

pub fn combine(terms: RewardTerms, w: &RewardWeights) -> RewardBreakdown {
    let exponent = w.tracking * terms.tracking
        + w.reaching * terms.reaching
        + w.upright * terms.upright
        + w.arm * terms.arm
        + w.legs * terms.legs
        + w.energy * terms.energy;
    let shaped = exponent.exp();
    RewardBreakdown {
        terms,
        shaped,
        total: shaped + terms.task,
    }
}
