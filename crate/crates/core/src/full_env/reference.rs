//! Point-mass reference trajectories for imitation.
//!
//! File layout:
//!
//! ```text
//! t,px,py,grab
//! 0,-0.6,0,1
//! ...
//! R 1.35
//! S 17
//! H 0 0
//! H 1.2 0.1
//! ```
//!
//! `R` lines are release times, `S` and `H` the handhold sequence the
//! trajectory was recorded on.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::nets::Agent;
use crate::simple_env::{self, Events, SimpleAction, SimpleConfig, CONTROL_HZ};
use crate::terrain::{Handhold, HandholdSequence};

pub const CSV_HEADER: &str = "t,px,py,grab";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePoint {
    pub t: f64,
    pub p: Vec2,
    pub grab: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTrajectory {
    pub seq: HandholdSequence,
    /// One point per 60 Hz step, starting at the reset state.
    pub points: Vec<ReferencePoint>,
    pub releases: Vec<f64>,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point at control step `k`, held at the last point past the end.
    pub fn at(&self, k: usize) -> ReferencePoint {
        self.points[k.min(self.points.len() - 1)]
    }

    pub fn grab_count(&self) -> usize {
        self.points.windows(2).filter(|w| !w[0].grab && w[1].grab).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.seq.len() < 2 {
            return Err(Error::config("reference needs points and at least two holds"));
        }
        for w in self.points.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::config("reference times must increase"));
            }
        }
        if self.points.iter().any(|p| !p.p.is_finite()) {
            return Err(Error::config("reference positions must be finite"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.t, p.p.x, p.p.y, p.grab as u8);
        }
        for r in &self.releases {
            let _ = writeln!(out, "R {r}");
        }
        let _ = writeln!(out, "S {}", self.seq.seed);
        for h in &self.seq.holds {
            let _ = writeln!(out, "H {} {}", h.x, h.y);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected `{CSV_HEADER}`"))),
        }
        let num = |ln: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(ln, format!("bad number `{s}`")))
        };
        let mut points = Vec::new();
        let mut releases = Vec::new();
        let mut holds = Vec::new();
        let mut seed = 0;
        for (ln, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["R", t] => releases.push(num(ln, t)?),
                ["S", s] => seed = s.parse().map_err(|_| Error::parse(ln, "bad seed"))?,
                ["H", x, y] => holds.push(Handhold::new(num(ln, x)?, num(ln, y)?)),
                [row] => {
                    let cols: Vec<&str> = row.split(',').collect();
                    let [t, x, y, g] = cols.as_slice() else {
                        return Err(Error::parse(ln, "expected 4 columns"));
                    };
                    let grab = match *g {
                        "0" => false,
                        "1" => true,
                        _ => return Err(Error::parse(ln, "grab must be 0 or 1")),
                    };
                    points.push(ReferencePoint {
                        t: num(ln, t)?,
                        p: Vec2::new(num(ln, x)?, num(ln, y)?),
                        grab,
                    });
                }
                _ => return Err(Error::parse(ln, format!("unrecognised line `{line}`"))),
            }
        }
        let r = ReferenceTrajectory {
            seq: HandholdSequence::new(holds, seed),
            points,
            releases,
        };
        r.validate().map_err(|e| Error::parse(0, e.to_string()))?;
        Ok(r)
    }
}

/// Rolls the point-mass policy deterministically on `seq` and keeps the
/// trajectory only if it completes the sequence.
pub fn record_reference(
    agent: &Agent,
    seq: &HandholdSequence,
    cfg: &SimpleConfig,
) -> Result<ReferenceTrajectory> {
    let mut state = simple_env::reset(seq, cfg)?;
    let point = |s: &simple_env::SimpleState| ReferencePoint {
        t: s.episode_time(),
        p: s.p,
        grab: s.grabbing,
    };
    let mut points = vec![point(&state)];
    let mut releases = Vec::new();
    let mut grabs = 0;
    let needed = seq.len() - 1;
    let max_steps = (cfg.episode_limit * CONTROL_HZ).ceil() as usize + 1;
    for _ in 0..max_steps {
        let obs = simple_env::observe(&state, seq, cfg.lookahead, cfg).to_vec();
        let a = agent.act_deterministic(&obs)?;
        let t0 = state.episode_time();
        let r = simple_env::step(&state, SimpleAction::from_slice(&a), seq, cfg)?;
        if r.events.contains(Events::RELEASE) {
            releases.push(t0);
        }
        grabs += r.events.contains(Events::GRAB_SUCCESS) as usize;
        state = r.next_state;
        points.push(point(&state));
        if r.terminated {
            break;
        }
    }
    if grabs < needed {
        return Err(Error::ReferenceFailed { grabs, needed });
    }
    Ok(ReferenceTrajectory {
        seq: seq.clone(),
        points,
        releases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::MlpSpec;

    fn sample() -> ReferenceTrajectory {
        ReferenceTrajectory {
            seq: HandholdSequence::new(vec![Handhold::new(0.0, 0.0), Handhold::new(1.1, 0.05)], 4),
            points: (0..5)
                .map(|k| ReferencePoint {
                    t: k as f64 / 60.0,
                    p: Vec2::new(-0.6 + 0.01 * k as f64, 0.2 - 0.1 * k as f64),
                    grab: k < 3,
                })
                .collect(),
            releases: vec![2.0 / 60.0],
        }
    }

    #[test]
    fn text_round_trip() {
        let r = sample();
        let text = r.to_text();
        assert!(text.starts_with("t,px,py,grab\n0,-0.6,0.2,1\n"));
        assert_eq!(ReferenceTrajectory::from_text(&text).unwrap(), r);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let text = sample().to_text();
        assert!(ReferenceTrajectory::from_text(&text.replace(",1\n", ",2\n")).is_err());
        assert!(ReferenceTrajectory::from_text(&text.replace("t,px", "x,px")).is_err());
        assert!(ReferenceTrajectory::from_text("t,px,py,grab\n").is_err());
    }

    #[test]
    fn cursor_clamps_at_end() {
        let r = sample();
        assert_eq!(r.at(100), r.points[4]);
        assert_eq!(r.grab_count(), 0);
    }

    #[test]
    fn untrained_policy_is_rejected() {
        let agent = Agent::new("simple", &MlpSpec::simple_actor(7, 2), &MlpSpec::simple_critic(7), 0).unwrap();
        let seq = crate::terrain::generate_sequence(3, 20, (1.0, 2.0), (-0.26, 0.26)).unwrap();
        match record_reference(&agent, &seq, &SimpleConfig::default()) {
            Err(Error::ReferenceFailed { needed, .. }) => assert_eq!(needed, 19),
            other => panic!("{other:?}"),
        }
    }
}
