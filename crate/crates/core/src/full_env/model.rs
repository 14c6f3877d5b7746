//! The 14-link gibbon.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::physics2d::{RevoluteJoint, RigidBody2D, World2D, DEFAULT_DT};

pub const N_BODIES: usize = 14;
pub const N_JOINTS: usize = 13;

pub mod body {
    pub const TORSO: usize = 0;
    pub const PELVIS: usize = 1;
    pub const L_UPPER_ARM: usize = 2;
    pub const L_FOREARM: usize = 3;
    pub const L_HAND: usize = 4;
    pub const R_UPPER_ARM: usize = 5;
    pub const R_FOREARM: usize = 6;
    pub const R_HAND: usize = 7;
    pub const L_THIGH: usize = 8;
    pub const L_SHIN: usize = 9;
    pub const L_FOOT: usize = 10;
    pub const R_THIGH: usize = 11;
    pub const R_SHIN: usize = 12;
    pub const R_FOOT: usize = 13;
}

pub mod joint {
    pub const WAIST: usize = 0;
    pub const L_SHOULDER: usize = 1;
    pub const L_ELBOW: usize = 2;
    pub const L_WRIST: usize = 3;
    pub const R_SHOULDER: usize = 4;
    pub const R_ELBOW: usize = 5;
    pub const R_WRIST: usize = 6;
    pub const L_HIP: usize = 7;
    pub const L_KNEE: usize = 8;
    pub const L_ANKLE: usize = 9;
    pub const R_HIP: usize = 10;
    pub const R_KNEE: usize = 11;
    pub const R_ANKLE: usize = 12;
    pub const KNEES: [usize; 2] = [L_KNEE, R_KNEE];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }

    pub fn body(self) -> usize {
        match self {
            Hand::Left => body::L_HAND,
            Hand::Right => body::R_HAND,
        }
    }

    pub fn upper_arm(self) -> usize {
        match self {
            Hand::Left => body::L_UPPER_ARM,
            Hand::Right => body::R_UPPER_ARM,
        }
    }
}

/// One row of the physical-property table plus the motion range we chose.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: &'static str,
    pub max_torque: f64,
    pub child_mass: f64,
    /// Meters.
    pub child_length: f64,
    /// `None` for a limitless joint.
    pub limits: Option<(f64, f64)>,
    /// Span used for the proportional gain and for scaling action offsets.
    pub span: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbonSpec {
    pub torso_mass: f64,
    pub torso_length: f64,
    /// The waist's child is a light pelvis carrying both hips.
    pub waist: JointSpec,
    pub shoulder: JointSpec,
    pub elbow: JointSpec,
    pub wrist: JointSpec,
    pub hip: JointSpec,
    pub knee: JointSpec,
    pub ankle: JointSpec,
    /// Derivative gain as a fraction of the proportional gain.
    pub kd_ratio: f64,
}

impl Default for GibbonSpec {
    fn default() -> Self {
        let js = |name, max_torque, child_mass, child_length, limits: Option<(f64, f64)>, span| JointSpec {
            name,
            max_torque,
            child_mass,
            child_length,
            limits,
            span,
        };
        GibbonSpec {
            torso_mass: 3.64,
            torso_length: 0.31,
            waist: js("waist", 21.0, 0.05, 0.02, Some((-0.6, 0.6)), 1.2),
            shoulder: js("shoulder", 35.0, 0.74, 0.26, None, 2.0 * PI),
            elbow: js("elbow", 28.0, 0.74, 0.26, Some((0.0, 2.6)), 2.6),
            wrist: js("wrist", 0.0, 0.40, 0.08, None, 0.0),
            hip: js("hip", 14.0, 0.37, 0.12, Some((-0.4, 2.0)), 2.4),
            knee: js("knee", 14.0, 0.31, 0.12, Some((0.0, 2.4)), 2.4),
            ankle: js("ankle", 7.0, 0.47, 0.08, Some((-0.7, 0.7)), 1.4),
            kd_ratio: 0.1,
        }
    }
}

impl GibbonSpec {
    pub fn total_mass(&self) -> f64 {
        self.torso_mass
            + self.waist.child_mass
            + 2.0
                * (self.shoulder.child_mass
                    + self.elbow.child_mass
                    + self.wrist.child_mass
                    + self.hip.child_mass
                    + self.knee.child_mass
                    + self.ankle.child_mass)
    }

    pub fn arm_length(&self) -> f64 {
        self.shoulder.child_length + self.elbow.child_length + self.wrist.child_length
    }

    /// Joint specs in joint-index order.
    pub fn joints(&self) -> [&JointSpec; N_JOINTS] {
        [
            &self.waist,
            &self.shoulder,
            &self.elbow,
            &self.wrist,
            &self.shoulder,
            &self.elbow,
            &self.wrist,
            &self.hip,
            &self.knee,
            &self.ankle,
            &self.hip,
            &self.knee,
            &self.ankle,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.torso_mass, self.torso_length];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("torso needs positive mass and length"));
        }
        for j in self.joints() {
            if !(j.child_mass > 0.0 && j.child_length > 0.0) {
                return Err(Error::config(format!("{}: link needs positive mass and length", j.name)));
            }
            if !(j.max_torque >= 0.0 && j.span >= 0.0) {
                return Err(Error::config(format!("{}: torque and span must be non-negative", j.name)));
            }
            if let Some((lo, hi)) = j.limits {
                if !(lo < hi) {
                    return Err(Error::config(format!("{}: limits need lo < hi", j.name)));
                }
            }
        }
        if !(self.kd_ratio >= 0.0) {
            return Err(Error::config("kd ratio must be non-negative"));
        }
        Ok(())
    }
}

/// Builds the gibbon in its upright reference pose (all joint angles zero,
/// arms raised, shoulders at the origin) and then moves it rigidly so the
/// left hand tip sits at `hand_tip` with every body rotated by `angle`.
pub fn build_gibbon(spec: &GibbonSpec, hand_tip: Vec2, angle: f64) -> Result<World2D> {
    spec.validate()?;
    let mut w = World2D::new(DEFAULT_DT)?;

    let rod = |name: &str, m: f64, l: f64, cy: f64| {
        let mut b = RigidBody2D::rod(name, m, l);
        b.pos = Vec2::new(0.0, cy);
        b
    };
    let t = spec.torso_length;
    let p = spec.waist.child_length;
    let (ua, fa, hd) = (spec.shoulder.child_length, spec.elbow.child_length, spec.wrist.child_length);
    let (th, sh, ft) = (spec.hip.child_length, spec.knee.child_length, spec.ankle.child_length);
    let hip_y = -t - p;

    let bodies = [
        rod("torso", spec.torso_mass, t, -t / 2.0),
        rod("pelvis", spec.waist.child_mass, p, -t - p / 2.0),
        rod("l_upper_arm", spec.shoulder.child_mass, ua, ua / 2.0),
        rod("l_forearm", spec.elbow.child_mass, fa, ua + fa / 2.0),
        rod("l_hand", spec.wrist.child_mass, hd, ua + fa + hd / 2.0),
        rod("r_upper_arm", spec.shoulder.child_mass, ua, ua / 2.0),
        rod("r_forearm", spec.elbow.child_mass, fa, ua + fa / 2.0),
        rod("r_hand", spec.wrist.child_mass, hd, ua + fa + hd / 2.0),
        rod("l_thigh", spec.hip.child_mass, th, hip_y - th / 2.0),
        rod("l_shin", spec.knee.child_mass, sh, hip_y - th - sh / 2.0),
        rod("l_foot", spec.ankle.child_mass, ft, hip_y - th - sh - ft / 2.0),
        rod("r_thigh", spec.hip.child_mass, th, hip_y - th / 2.0),
        rod("r_shin", spec.knee.child_mass, sh, hip_y - th - sh / 2.0),
        rod("r_foot", spec.ankle.child_mass, ft, hip_y - th - sh - ft / 2.0),
    ];
    for b in bodies {
        w.add_body(b)?;
    }

    use body::*;
    // (parent, child, child end attached to the parent): arms hang off the
    // top of the torso and grow upward, everything else grows downward.
    let links: [(usize, usize, bool); N_JOINTS] = [
        (TORSO, PELVIS, true),
        (TORSO, L_UPPER_ARM, false),
        (L_UPPER_ARM, L_FOREARM, false),
        (L_FOREARM, L_HAND, false),
        (TORSO, R_UPPER_ARM, false),
        (R_UPPER_ARM, R_FOREARM, false),
        (R_FOREARM, R_HAND, false),
        (PELVIS, L_THIGH, true),
        (L_THIGH, L_SHIN, true),
        (L_SHIN, L_FOOT, true),
        (PELVIS, R_THIGH, true),
        (R_THIGH, R_SHIN, true),
        (R_SHIN, R_FOOT, true),
    ];
    for (j, (&(a, b, downward), js)) in links.iter().zip(spec.joints()).enumerate() {
        let (ba, bb) = (&w.bodies[a], &w.bodies[b]);
        let (attach_on_a, attach_on_b) = if downward {
            (ba.bottom(), bb.top())
        } else {
            (ba.top(), bb.bottom())
        };
        let kp = js.span;
        let mut joint = RevoluteJoint::new(js.name, a, b, attach_on_a, attach_on_b).with_motor(
            kp,
            kp * spec.kd_ratio,
            js.max_torque,
        );
        if let Some((lo, hi)) = js.limits {
            joint = joint.with_limits(lo, hi);
        }
        w.add_joint(joint)?;
        debug_assert!(w.joint_separation(j) < 1e-12);
    }

    let tip0 = w.bodies[L_HAND].world_point(w.bodies[L_HAND].top());
    for b in &mut w.bodies {
        b.pos = hand_tip + (b.pos - tip0).rotate(angle);
        b.angle = angle;
    }
    Ok(w)
}

/// The initial hanging pose: straight, horizontal, trailing behind `hold`.
pub fn hanging_pose(spec: &GibbonSpec, hold: Vec2) -> Result<World2D> {
    build_gibbon(spec, hold, -FRAC_PI_2)
}

pub fn hand_tip(world: &World2D, hand: Hand) -> Vec2 {
    let b = &world.bodies[hand.body()];
    b.world_point(b.top())
}

/// Angle wrapped to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}
