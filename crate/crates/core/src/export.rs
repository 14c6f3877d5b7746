//! CSV and SVG writers for trajectories and planner results.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{fmt_g9, Vec2};
use crate::planner::{EpisodeResult, FullTraceRow};
use crate::simple_env::TraceRow;
use crate::terrain::{Gap, Handhold, HandholdSequence, Terrain};

pub const SIMPLE_HEADER: &str = "t,px,py,vx,vy,grab,arm_len,reward,event";
pub const FULL_HEADER: &str = "t,root_x,root_y,pitch,lhand_x,lhand_y,rhand_x,rhand_y,grabL,grabR,reward";
pub const PLANNER_HEADER: &str = "terrain_seed,mode,gaps_passed,holds_completed,wall_ms";

/// Pixels per meter in SVG output.
const SCALE: f64 = 100.0;
const MARGIN: f64 = 0.5;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::file(path, e);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::file(path, std::io::ErrorKind::InvalidInput.into()))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn simple_csv(rows: &[TraceRow]) -> String {
    let mut out = format!("{SIMPLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g9(r.t),
            fmt_g9(r.p.x),
            fmt_g9(r.p.y),
            fmt_g9(r.v.x),
            fmt_g9(r.v.y),
            r.grabbing as u8,
            fmt_g9(r.arm_length),
            fmt_g9(r.reward),
            r.events.label()
        );
    }
    out
}

pub fn full_csv(rows: &[FullTraceRow]) -> String {
    let mut out = format!("{FULL_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g9(r.t),
            fmt_g9(r.root.x),
            fmt_g9(r.root.y),
            fmt_g9(r.pitch),
            fmt_g9(r.hands[0].x),
            fmt_g9(r.hands[0].y),
            fmt_g9(r.hands[1].x),
            fmt_g9(r.hands[1].y),
            r.grabs[0] as u8,
            r.grabs[1] as u8,
            fmt_g9(r.reward)
        );
    }
    out
}

pub fn planner_csv(results: &[EpisodeResult]) -> String {
    let mut out = format!("{PLANNER_HEADER}\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.terrain_seed,
            r.mode.name(),
            r.gaps_passed(),
            r.holds_completed,
            r.wall_ms
        );
    }
    out
}

/// What an SVG plot shows; empty parts are skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub ceiling: Vec<(f64, f64)>,
    pub gaps: Vec<Gap>,
    pub holds: Vec<Handhold>,
    pub root: Vec<Vec2>,
    pub reference: Vec<Vec2>,
}

impl Scene {
    pub fn from_episode(terrain: &Terrain, result: &EpisodeResult) -> Self {
        Scene {
            ceiling: terrain.ceiling.clone(),
            gaps: terrain.gaps.clone(),
            holds: result.grabbed.clone(),
            root: result.trace.iter().map(|r| r.root).collect(),
            reference: result.reference.clone(),
        }
    }

    pub fn from_simple(seq: &HandholdSequence, rows: &[TraceRow]) -> Self {
        Scene {
            holds: seq.holds.clone(),
            root: rows.iter().map(|r| r.p).collect(),
            ..Default::default()
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self
            .ceiling
            .iter()
            .map(|&(x, y)| Vec2::new(x, y))
            .chain(self.holds.iter().map(|h| h.pos()))
            .chain(self.root.iter().copied())
            .chain(self.reference.iter().copied())
            .filter(|p| p.is_finite());
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if !x0.is_finite() {
            return (-1.0, -1.0, 1.0, 1.0);
        }
        (x0 - MARGIN, y0 - MARGIN, x1 + MARGIN, y1 + MARGIN)
    }

    pub fn to_svg(&self) -> String {
        let (x0, y0, x1, y1) = self.bounds();
        let px = |x: f64| format!("{:.2}", (x - x0) * SCALE);
        let py = |y: f64| format!("{:.2}", (y1 - y) * SCALE);
        let poly = |pts: &mut dyn Iterator<Item = Vec2>| {
            pts.filter(|p| p.is_finite())
                .map(|p| format!("{},{}", px(p.x), py(p.y)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let (w, h) = ((x1 - x0) * SCALE, (y1 - y0) * SCALE);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        if !self.ceiling.is_empty() {
            let pts = poly(&mut self.ceiling.iter().map(|&(x, y)| Vec2::new(x, y)));
            let _ = writeln!(
                out,
                r##"<polyline id="ceiling" points="{pts}" fill="none" stroke="#5a4632" stroke-width="4"/>"##
            );
        }
        for (i, g) in self.gaps.iter().enumerate() {
            let _ = writeln!(
                out,
                r##"<rect class="gap" id="gap{i}" x="{}" y="0" width="{:.2}" height="{h:.2}" fill="#d33" fill-opacity="0.15"/>"##,
                px(g.start),
                g.width() * SCALE
            );
        }
        if !self.reference.is_empty() {
            let pts = poly(&mut self.reference.iter().copied());
            let _ = writeln!(
                out,
                r##"<polyline id="reference" points="{pts}" fill="none" stroke="#3a7bd5" stroke-width="1.5" stroke-dasharray="4 3"/>"##
            );
        }
        if !self.root.is_empty() {
            let pts = poly(&mut self.root.iter().copied());
            let _ = writeln!(
                out,
                r##"<polyline id="root" points="{pts}" fill="none" stroke="#111" stroke-width="2"/>"##
            );
        }
        for hold in &self.holds {
            let _ = writeln!(
                out,
                r##"<circle class="hold" cx="{}" cy="{}" r="5" fill="#e8a317"/>"##,
                px(hold.x),
                py(hold.y)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Mode;
    use crate::simple_env::Events;
    use crate::terrain::{generate_terrain, TerrainConfig};

    fn trace_row(k: usize) -> TraceRow {
        let mut events = Events::default();
        if k == 1 {
            events.insert(Events::RELEASE);
        }
        TraceRow {
            t: k as f64 / 60.0,
            p: Vec2::new(-0.6 + 0.1 * k as f64, -0.2),
            v: Vec2::new(1.0 / 3.0, 0.0),
            grabbing: k == 0,
            arm_length: if k == 0 { 0.6 } else { 0.0 },
            reward: 0.0,
            events,
        }
    }

    #[test]
    fn simple_csv_layout() {
        let csv = simple_csv(&[trace_row(0), trace_row(1)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SIMPLE_HEADER);
        assert_eq!(lines[1], "0,-0.6,-0.2,0.333333333,0,1,0.6,0,");
        assert!(lines[2].ends_with(",0,0,0,release"));
        assert_eq!(lines[2].split(',').count(), 9);
    }

    fn episode() -> (Terrain, EpisodeResult) {
        let terrain = generate_terrain(3, &TerrainConfig::default()).unwrap();
        let row = FullTraceRow {
            t: 0.0,
            root: Vec2::new(-0.755, 0.0),
            pitch: -1.5,
            hands: [Vec2::ZERO, Vec2::new(-1.2, -0.1)],
            grabs: [true, false],
            reward: 0.25,
        };
        let r = EpisodeResult {
            terrain_seed: 3,
            mode: Mode::Combined,
            gaps: vec![true, false, false],
            holds_completed: 5,
            replans: 6,
            wall_ms: 0,
            terminated_early: true,
            grabbed: vec![terrain.hold_at(0.0), terrain.hold_at(1.4)],
            trace: vec![row.clone(), FullTraceRow { t: 1.0 / 60.0, ..row }],
            reference: vec![Vec2::new(-0.6, 0.0), Vec2::new(-0.5, -0.1)],
        };
        (terrain, r)
    }

    #[test]
    fn full_and_planner_csv_layout() {
        let (_, r) = episode();
        let full = full_csv(&r.trace);
        let first = full.lines().nth(1).unwrap();
        assert_eq!(first, "0,-0.755,0,-1.5,0,0,-1.2,-0.1,1,0,0.25");
        assert_eq!(full.lines().next(), Some(FULL_HEADER));
        let plan = planner_csv(&[r]);
        assert_eq!(plan, format!("{PLANNER_HEADER}\n3,combined,1,5,0\n"));
    }

    #[test]
    fn svg_has_every_layer() {
        let (terrain, r) = episode();
        let svg = Scene::from_episode(&terrain, &r).to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        for id in ["id=\"ceiling\"", "id=\"root\"", "id=\"reference\"", "id=\"gap2\""] {
            assert!(svg.contains(id), "missing {id}");
        }
        assert_eq!(svg.matches("class=\"gap\"").count(), 3);
        assert_eq!(svg.matches("class=\"hold\"").count(), 2);
        assert_eq!(svg, Scene::from_episode(&terrain, &r).to_svg());
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = std::env::temp_dir().join(format!("swingshot-export-{}", std::process::id()));
        let path = dir.join("nested").join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
