//! Handhold sequences, ceiling terrains with gaps, and sampled handhold plans.
//!
//! Text serialisation is line oriented: `H x y` for a handhold, `G x_start x_end`
//! for a gap, `C x y` for a ceiling knot and `S seed` for the generating seed.
//! Floats are printed with 9 significant digits; `#` starts a comment line.

use std::fmt::Write as _;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::math::{fmt_g9, Vec2};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Handhold {
    pub x: f64,
    pub y: f64,
}

impl Handhold {
    pub const fn new(x: f64, y: f64) -> Self {
        Handhold { x, y }
    }

    pub fn pos(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(self, other: Handhold) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<Vec2> for Handhold {
    fn from(v: Vec2) -> Self {
        Handhold::new(v.x, v.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandholdSequence {
    pub holds: Vec<Handhold>,
    pub seed: u64,
}

impl HandholdSequence {
    pub fn new(holds: Vec<Handhold>, seed: u64) -> Self {
        HandholdSequence { holds, seed }
    }

    pub fn len(&self) -> usize {
        self.holds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holds.is_empty()
    }

    /// Hold `i`, or the last hold when `i` runs past the end.
    pub fn get_padded(&self, i: usize) -> Handhold {
        self.holds[i.min(self.holds.len() - 1)]
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("S {}\n", self.seed);
        for h in &self.holds {
            let _ = writeln!(out, "H {} {}", fmt_g9(h.x), fmt_g9(h.y));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut seq = HandholdSequence::new(Vec::new(), 0);
        for (lineno, rec) in records(text) {
            match rec? {
                Record::Seed(s) => seq.seed = s,
                Record::Hold(x, y) => seq.holds.push(Handhold::new(x, y)),
                _ => return Err(Error::parse(lineno, "unexpected record in handhold sequence")),
            }
        }
        Ok(seq)
    }
}

/// Next handhold at distance `d` and pitch `phi` (from horizontal) past `prev`.
pub fn next_handhold(prev: Handhold, d: f64, phi: f64) -> Handhold {
    Handhold::new(prev.x + d * phi.cos(), prev.y + d * phi.sin())
}

/// Ranges for the uniform distance/pitch distribution of successive holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceDistribution {
    pub distance: (f64, f64),
    pub pitch: (f64, f64),
}

impl SequenceDistribution {
    /// d ~ U(1, 2) m, pitch ~ U(-15°, 15°).
    pub fn full() -> Self {
        SequenceDistribution {
            distance: (1.0, 2.0),
            pitch: (-15f64.to_radians(), 15f64.to_radians()),
        }
    }

    /// The easier desk-scale distribution used for articulated training runs.
    pub fn easy() -> Self {
        SequenceDistribution {
            distance: (1.0, 1.4),
            pitch: (-5f64.to_radians(), 5f64.to_radians()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d0, d1) = self.distance;
        let (p0, p1) = self.pitch;
        if !(d0.is_finite() && d1.is_finite() && p0.is_finite() && p1.is_finite()) {
            return Err(Error::config("non-finite sequence range"));
        }
        if d0 > d1 || p0 > p1 {
            return Err(Error::config(format!(
                "invalid sequence range: distance ({d0}, {d1}), pitch ({p0}, {p1})"
            )));
        }
        if d0 <= 0.0 {
            return Err(Error::config("handhold distance must be positive"));
        }
        if p0 < -std::f64::consts::FRAC_PI_2 || p1 > std::f64::consts::FRAC_PI_2 {
            return Err(Error::config("pitch must lie within ±90°"));
        }
        Ok(())
    }
}

pub fn generate_sequence(
    seed: u64,
    count: usize,
    d_range: (f64, f64),
    phi_range: (f64, f64),
) -> Result<HandholdSequence> {
    let dist = SequenceDistribution {
        distance: d_range,
        pitch: phi_range,
    };
    dist.validate()?;
    if count < 2 {
        return Err(Error::config(format!("sequence needs at least 2 holds, got {count}")));
    }
    let mut rng = rng::seeded(seed);
    let mut holds = Vec::with_capacity(count);
    holds.push(Handhold::new(0.0, 0.0));
    for _ in 1..count {
        let d = rng.random_range(d_range.0..=d_range.1);
        let phi = rng.random_range(phi_range.0..=phi_range.1);
        let prev = *holds.last().expect("non-empty");
        holds.push(next_handhold(prev, d, phi));
    }
    Ok(HandholdSequence { holds, seed })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// Strictly inside the open interval.
    pub fn contains(&self, x: f64) -> bool {
        x > self.start && x < self.end
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Terrain {
    /// Piecewise-linear ceiling knots, strictly increasing in x.
    pub ceiling: Vec<(f64, f64)>,
    pub gaps: Vec<Gap>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerrainConfig {
    pub length: f64,
    pub knot_spacing: f64,
    pub max_knot_step: f64,
    pub gap_count: usize,
    pub gap_width: (f64, f64),
    /// No gap may start before this x (the character starts at x = 0).
    pub start_clearance: f64,
    /// Minimum ceiling between two gaps and after the last one.
    pub gap_spacing: f64,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig {
            length: 40.0,
            knot_spacing: 0.5,
            max_knot_step: 0.13,
            gap_count: 3,
            gap_width: (2.1, 2.6),
            start_clearance: 3.0,
            gap_spacing: 3.0,
        }
    }
}

impl Terrain {
    /// A flat ceiling at height `y` from 0 to `length`.
    pub fn flat(length: f64, y: f64) -> Self {
        Terrain {
            ceiling: vec![(0.0, y), (length, y)],
            gaps: Vec::new(),
            seed: 0,
        }
    }

    pub fn x_extent(&self) -> (f64, f64) {
        (self.ceiling[0].0, self.ceiling[self.ceiling.len() - 1].0)
    }

    /// Ceiling height at `x`, clamped to the end knots outside the extent.
    pub fn height_at(&self, x: f64) -> f64 {
        let k = &self.ceiling;
        if x <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(kx, _)| kx <= x);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn gap_at(&self, x: f64) -> Option<&Gap> {
        self.gaps.iter().find(|g| g.contains(x))
    }

    pub fn hold_at(&self, x: f64) -> Handhold {
        Handhold::new(x, self.height_at(x))
    }

    pub fn validate(&self) -> Result<()> {
        if self.ceiling.len() < 2 {
            return Err(Error::config("terrain needs at least two ceiling knots"));
        }
        if self.ceiling.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("ceiling knots must be strictly increasing in x"));
        }
        let (lo, hi) = self.x_extent();
        let mut last_end = f64::NEG_INFINITY;
        for g in &self.gaps {
            if g.start >= g.end || g.start < lo || g.end > hi {
                return Err(Error::config(format!("gap ({}, {}) outside terrain", g.start, g.end)));
            }
            if g.start <= last_end {
                return Err(Error::config("gaps must be disjoint and ordered"));
            }
            last_end = g.end;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("S {}\n", self.seed);
        for &(x, y) in &self.ceiling {
            let _ = writeln!(out, "C {} {}", fmt_g9(x), fmt_g9(y));
        }
        for g in &self.gaps {
            let _ = writeln!(out, "G {} {}", fmt_g9(g.start), fmt_g9(g.end));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut t = Terrain {
            ceiling: Vec::new(),
            gaps: Vec::new(),
            seed: 0,
        };
        for (lineno, rec) in records(text) {
            match rec? {
                Record::Seed(s) => t.seed = s,
                Record::Knot(x, y) => t.ceiling.push((x, y)),
                Record::Gap(a, b) => t.gaps.push(Gap { start: a, end: b }),
                Record::Hold(..) => return Err(Error::parse(lineno, "handhold record in terrain")),
            }
        }
        t.validate()?;
        Ok(t)
    }
}

/// Seeded ceiling random walk with `gap_count` non-overlapping gaps.
pub fn generate_terrain(seed: u64, cfg: &TerrainConfig) -> Result<Terrain> {
    let (w0, w1) = cfg.gap_width;
    if w0 > w1 || w0 <= 0.0 || cfg.knot_spacing <= 0.0 || cfg.length <= cfg.knot_spacing {
        return Err(Error::config("invalid terrain configuration"));
    }
    let mut rng = rng::seeded(seed);
    let knots = (cfg.length / cfg.knot_spacing).round() as usize;
    let mut ceiling = Vec::with_capacity(knots + 1);
    let mut y = 0.0;
    for i in 0..=knots {
        if i > 0 {
            y += rng.random_range(-cfg.max_knot_step..=cfg.max_knot_step);
        }
        ceiling.push((i as f64 * cfg.knot_spacing, y));
    }
    let x_max = ceiling[knots].0;

    let mut gaps: Vec<Gap> = Vec::with_capacity(cfg.gap_count);
    let mut attempts = 0;
    while gaps.len() < cfg.gap_count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::config("terrain too short to place the requested gaps"));
        }
        let width = rng.random_range(w0..=w1);
        let hi = x_max - cfg.gap_spacing - width;
        if hi <= cfg.start_clearance {
            continue;
        }
        let start = rng.random_range(cfg.start_clearance..hi);
        let cand = Gap {
            start,
            end: start + width,
        };
        let clear = gaps.iter().all(|g| {
            cand.end + cfg.gap_spacing <= g.start || g.end + cfg.gap_spacing <= cand.start
        });
        if clear {
            gaps.push(cand);
        }
    }
    gaps.sort_by(|a, b| a.start.total_cmp(&b.start));
    let t = Terrain { ceiling, gaps, seed };
    t.validate()?;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub holds: Vec<Handhold>,
    pub score: Option<f64>,
    /// The terrain ended before `H` holds could be placed.
    pub short: bool,
}

/// Horizontal step range for plan sampling.
pub const PLAN_STEP_RANGE: (f64, f64) = (1.1, 1.8);

/// Nearest edge of `gap` to `x`; ties go to the far edge.
pub fn snap_to_gap_edge(x: f64, gap: &Gap) -> f64 {
    if x - gap.start < gap.end - x {
        gap.start
    } else {
        gap.end
    }
}

pub fn sample_plan(terrain: &Terrain, start: Handhold, h: usize, rng: &mut Rng) -> Result<Plan> {
    sample_plan_with(terrain, start, h, PLAN_STEP_RANGE, rng)
}

pub fn sample_plan_with(
    terrain: &Terrain,
    start: Handhold,
    h: usize,
    step: (f64, f64),
    rng: &mut Rng,
) -> Result<Plan> {
    if h == 0 {
        return Err(Error::config("plan length must be at least 1"));
    }
    let (lo, hi) = terrain.x_extent();
    if start.x < lo || start.x > hi || (start.y - terrain.height_at(start.x)).abs() > 1e-6 {
        return Err(Error::config(format!(
            "plan start ({}, {}) is not on the ceiling",
            start.x, start.y
        )));
    }
    let mut holds = Vec::with_capacity(h);
    let mut prev = start;
    let mut short = false;
    for _ in 0..h {
        let mut x = prev.x + rng.random_range(step.0..=step.1);
        if let Some(gap) = terrain.gap_at(x) {
            x = snap_to_gap_edge(x, gap);
            // Snapping back onto (or behind) the previous hold would stall the plan.
            if x < prev.x + step.0 {
                x = gap.end;
            }
        }
        if x > hi {
            short = true;
            break;
        }
        let hold = terrain.hold_at(x);
        holds.push(hold);
        prev = hold;
    }
    if holds.is_empty() {
        return Err(Error::config("no room for a plan before the terrain ends"));
    }
    Ok(Plan {
        holds,
        score: None,
        short,
    })
}

enum Record {
    Seed(u64),
    Hold(f64, f64),
    Gap(f64, f64),
    Knot(f64, f64),
}

fn records(text: &str) -> impl Iterator<Item = (usize, Result<Record>)> + '_ {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(lineno, line)| (lineno, parse_record(lineno, line)))
}

fn parse_record(lineno: usize, line: &str) -> Result<Record> {
    let mut parts = line.split_whitespace();
    let tag = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let float = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::parse(lineno, format!("bad number `{s}`")))
    };
    let pair = |rest: &[&str]| -> Result<(f64, f64)> {
        match rest {
            [a, b] => Ok((float(a)?, float(b)?)),
            _ => Err(Error::parse(lineno, "expected two numbers")),
        }
    };
    match tag {
        "S" => match rest.as_slice() {
            [s] => s
                .parse()
                .map(Record::Seed)
                .map_err(|_| Error::parse(lineno, "bad seed")),
            _ => Err(Error::parse(lineno, "expected one seed")),
        },
        "H" => pair(&rest).map(|(x, y)| Record::Hold(x, y)),
        "G" => pair(&rest).map(|(x, y)| Record::Gap(x, y)),
        "C" => pair(&rest).map(|(x, y)| Record::Knot(x, y)),
        other => Err(Error::parse(lineno, format!("unknown record `{other}`"))),
    }
}
