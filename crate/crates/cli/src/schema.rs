//! Settings schema shared by the config file parser and the flag builder.
//!
//! Every setting is a `key = value` line in a config file and a
//! `--key-name VALUE` flag; booleans also get `--no-key-name`. Flags win
//! over the file, the file wins over defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmd {
    TrainSimple,
    RecordRefs,
    TrainFull,
    Eval,
    Plan,
    Ablate,
    Export,
}

impl Cmd {
    pub const ALL: [Cmd; 7] = [
        Cmd::TrainSimple,
        Cmd::RecordRefs,
        Cmd::TrainFull,
        Cmd::Eval,
        Cmd::Plan,
        Cmd::Ablate,
        Cmd::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Cmd::TrainSimple => "train-simple",
            Cmd::RecordRefs => "record-refs",
            Cmd::TrainFull => "train-full",
            Cmd::Eval => "eval",
            Cmd::Plan => "plan",
            Cmd::Ablate => "ablate",
            Cmd::Export => "export",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Cmd::TrainSimple => "Train the point-mass policy",
            Cmd::RecordRefs => "Record point-mass reference trajectories",
            Cmd::TrainFull => "Train the articulated policy by imitation",
            Cmd::Eval => "Evaluate a checkpoint",
            Cmd::Plan => "Run the handhold planner on gap terrains",
            Cmd::Ablate => "Train point-mass policies over seeds and settings",
            Cmd::Export => "Write a trajectory CSV and SVG from a checkpoint",
        }
    }

    pub fn parse(s: &str) -> Option<Cmd> {
        Cmd::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Bool,
    Path,
    Choice(&'static [&'static str]),
    /// Comma-separated non-negative integers.
    IntList,
}

impl Kind {
    fn placeholder(self) -> &'static str {
        match self {
            Kind::Int => "INT",
            Kind::Float => "FLOAT",
            Kind::Bool => "BOOL",
            Kind::Path => "PATH",
            Kind::Choice(_) => "CHOICE",
            Kind::IntList => "LIST",
        }
    }
}

#[derive(Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
    pub cmds: &'static [Cmd],
}

impl Key {
    pub fn flag(&self) -> String {
        self.name.replace('_', "-")
    }

    pub fn placeholder(&self) -> &'static str {
        self.kind.placeholder()
    }

    pub fn applies_to(&self, cmd: Cmd) -> bool {
        self.cmds.is_empty() || self.cmds.contains(&cmd)
    }

    /// Checks `raw` and returns it in canonical form.
    pub fn check(&self, raw: &str) -> Result<String, String> {
        let v = raw.trim();
        match self.kind {
            Kind::Int => v
                .replace('_', "")
                .parse::<u64>()
                .map(|n| n.to_string())
                .or_else(|_| {
                    // 2.5e7 style budgets
                    v.parse::<f64>()
                        .ok()
                        .filter(|f| *f >= 0.0 && f.fract() == 0.0 && *f < 1.8e19)
                        .map(|f| (f as u64).to_string())
                        .ok_or(())
                })
                .map_err(|_| format!("expected a non-negative integer, got `{v}`")),
            Kind::Float => v
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(|f| f.to_string())
                .ok_or_else(|| format!("expected a number, got `{v}`")),
            Kind::Bool => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok("true".into()),
                "false" | "no" | "off" | "0" => Ok("false".into()),
                _ => Err(format!("expected true or false, got `{v}`")),
            },
            Kind::Path => {
                if v.is_empty() {
                    Err("expected a path".into())
                } else {
                    Ok(v.to_string())
                }
            }
            Kind::Choice(options) => {
                let norm = v.to_ascii_lowercase().replace('_', "-");
                options
                    .iter()
                    .find(|o| o.eq_ignore_ascii_case(&norm))
                    .map(|o| o.to_string())
                    .ok_or_else(|| format!("expected one of {}, got `{v}`", options.join(", ")))
            }
            Kind::IntList => {
                let items: Result<Vec<u64>, _> = v.split(',').map(|s| s.trim().parse::<u64>()).collect();
                match items {
                    Ok(items) if !items.is_empty() => {
                        Ok(items.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
                    }
                    _ => Err(format!("expected comma-separated integers, got `{v}`")),
                }
            }
        }
    }
}

use Cmd::*;

const TRAINERS: &[Cmd] = &[TrainSimple, TrainFull, Ablate];
const SIMPLE_TRAINERS: &[Cmd] = &[TrainSimple, Ablate];
const TOGGLED: &[Cmd] = &[TrainSimple, TrainFull, Ablate];

pub static KEYS: &[Key] = &[
    Key { name: "seed", kind: Kind::Int, default: "0", help: "Master seed", cmds: &[] },
    Key { name: "out", kind: Kind::Path, default: "runs", help: "Output directory", cmds: &[] },
    Key { name: "threads", kind: Kind::Int, default: "0", help: "Worker threads, 0 for one per core", cmds: &[] },
    Key { name: "n_lookahead", kind: Kind::Int, default: "", help: "Upcoming holds observed (default 1 point mass, 2 full model)", cmds: &[TrainSimple, TrainFull] },
    Key { name: "min_duration", kind: Kind::Bool, default: "true", help: "Enforce the 0.25 s minimum grab", cmds: TOGGLED },
    Key { name: "max_duration", kind: Kind::Bool, default: "true", help: "Force a release after 4 s of grabbing", cmds: TOGGLED },
    Key { name: "unrecoverable", kind: Kind::Bool, default: "true", help: "End episodes that fall below the next hold", cmds: TOGGLED },
    Key { name: "capture_radius", kind: Kind::Float, default: "0", help: "Point-mass grab radius in m, 0 for the reach annulus", cmds: SIMPLE_TRAINERS },
    Key { name: "total_samples", kind: Kind::Int, default: "", help: "Sample budget (default 25000000 point mass, 10000000 full model)", cmds: TRAINERS },
    Key { name: "samples_per_iter", kind: Kind::Int, default: "", help: "Samples per PPO iteration (default 80000 / 40000)", cmds: TRAINERS },
    Key { name: "n_envs", kind: Kind::Int, default: "", help: "Parallel environments (default 1000 / 125)", cmds: TRAINERS },
    Key { name: "lr_init", kind: Kind::Float, default: "3e-4", help: "Initial learning rate", cmds: TRAINERS },
    Key { name: "lr_final", kind: Kind::Float, default: "3e-5", help: "Final learning rate", cmds: TRAINERS },
    Key { name: "checkpoint_every", kind: Kind::Int, default: "10", help: "Iterations between checkpoints, 0 for the end only", cmds: &[TrainSimple, TrainFull] },
    Key { name: "distribution", kind: Kind::Choice(&["full", "easy"]), default: "", help: "Handhold distribution: full d~U(1,2) ±15°, easy d~U(1,1.4) ±5°", cmds: &[TrainSimple, RecordRefs, Eval, Ablate, Export] },
    Key { name: "seq_len", kind: Kind::Int, default: "", help: "Holds per sequence (default 20; 10 for references)", cmds: &[TrainSimple, RecordRefs, Eval, Ablate, Export] },
    Key { name: "eval_sequences", kind: Kind::Int, default: "100", help: "Evaluation episodes after training", cmds: &[TrainSimple, TrainFull, Ablate] },
    Key { name: "simple_checkpoint", kind: Kind::Path, default: "runs/simple.ckpt", help: "Point-mass checkpoint", cmds: &[RecordRefs, Plan] },
    Key { name: "full_checkpoint", kind: Kind::Path, default: "runs/full.ckpt", help: "Articulated checkpoint", cmds: &[Plan] },
    Key { name: "checkpoint", kind: Kind::Path, default: "runs/simple.ckpt", help: "Checkpoint to evaluate or export", cmds: &[Eval, Export] },
    Key { name: "refs", kind: Kind::Path, default: "runs/refs", help: "Reference directory", cmds: &[TrainFull, Eval, Export] },
    Key { name: "sequences", kind: Kind::Int, default: "100", help: "Sequences to record references on", cmds: &[RecordRefs] },
    Key { name: "config", kind: Kind::Choice(&["baseline", "a", "b", "c", "d", "e"]), default: "b", help: "Imitation configuration (BASELINE, A-E)", cmds: &[TrainFull] },
    Key { name: "w_tracking", kind: Kind::Float, default: "-4", help: "Tracking weight", cmds: &[TrainFull] },
    Key { name: "w_reaching", kind: Kind::Float, default: "-0.1", help: "Reaching weight", cmds: &[TrainFull] },
    Key { name: "w_upright", kind: Kind::Float, default: "-1", help: "Upright weight", cmds: &[TrainFull] },
    Key { name: "w_arm", kind: Kind::Float, default: "-0.1", help: "Arm-height weight", cmds: &[TrainFull] },
    Key { name: "w_legs", kind: Kind::Float, default: "-0.1", help: "Leg-pose weight", cmds: &[TrainFull] },
    Key { name: "w_energy", kind: Kind::Float, default: "-0.01", help: "Energy weight", cmds: &[TrainFull] },
    Key { name: "episodes", kind: Kind::Int, default: "100", help: "Evaluation episodes", cmds: &[Eval] },
    Key { name: "trace", kind: Kind::Bool, default: "false", help: "Also write the first episode as CSV and SVG", cmds: &[Eval] },
    Key { name: "mode", kind: Kind::Choice(&["combined", "value-only", "reward-only", "all"]), default: "combined", help: "Plan scoring mode", cmds: &[Plan] },
    Key { name: "terrains", kind: Kind::Int, default: "20", help: "Gap terrains to plan on", cmds: &[Plan] },
    Key { name: "terrain_seed", kind: Kind::Int, default: "0", help: "Seed of the first terrain", cmds: &[Plan] },
    Key { name: "k", kind: Kind::Int, default: "10000", help: "Plans sampled per replan", cmds: &[Plan] },
    Key { name: "horizon", kind: Kind::Float, default: "4", help: "Point-mass rollout horizon in s", cmds: &[Plan] },
    Key { name: "h", kind: Kind::Int, default: "4", help: "Holds per plan (must exceed the look-ahead)", cmds: &[Plan] },
    Key { name: "svg", kind: Kind::Bool, default: "true", help: "Write one SVG per planned episode", cmds: &[Plan] },
    Key { name: "wall_time", kind: Kind::Bool, default: "false", help: "Record wall time in results (breaks bit-identical reruns)", cmds: &[Plan] },
    Key { name: "study", kind: Kind::Choice(&["lookahead", "termination"]), default: "lookahead", help: "Ablation matrix to run", cmds: &[Ablate] },
    Key { name: "seeds", kind: Kind::Int, default: "5", help: "Seeds per setting", cmds: &[Ablate] },
    Key { name: "lookaheads", kind: Kind::IntList, default: "1,3,10", help: "Look-ahead values for the look-ahead study", cmds: &[Ablate] },
    Key { name: "sequence_seed", kind: Kind::Int, default: "0", help: "Sequence (point mass) or reference index (full model) to export", cmds: &[Export] },
];

pub fn keys_for(cmd: Cmd) -> impl Iterator<Item = &'static Key> {
    KEYS.iter().filter(move |k| k.applies_to(cmd))
}

pub fn find(cmd: Cmd, name: &str) -> Option<&'static Key> {
    let norm = name.trim().replace('-', "_");
    keys_for(cmd).find(|k| k.name == norm)
}

/// Validated settings for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cmd: Cmd,
    values: BTreeMap<&'static str, String>,
}

impl RunConfig {
    pub fn defaults(cmd: Cmd) -> Self {
        let values = keys_for(cmd)
            .filter(|k| !k.default.is_empty())
            .map(|k| (k.name, k.default.to_string()))
            .collect();
        RunConfig { cmd, values }
    }

    pub fn set(&mut self, name: &str, raw: &str, origin: &str) -> Result<(), CliError> {
        let key = find(self.cmd, name).ok_or_else(|| {
            CliError::Usage(format!("{origin}: unknown key `{name}` for `{}`", self.cmd.name()))
        })?;
        let v = key
            .check(raw)
            .map_err(|e| CliError::Usage(format!("{origin}: `{}`: {e}", key.name)))?;
        self.values.insert(key.name, v);
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str, path: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{path}:{}", i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}: expected `key = value`")))?;
            self.set(k.trim(), v.trim(), &origin)?;
        }
        Ok(())
    }

    pub fn has(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    fn raw(&self, name: &str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("`{name}` is not a setting of `{}`", self.cmd.name()))
    }

    pub fn u64(&self, name: &str) -> u64 {
        self.raw(name).parse().expect("validated integer")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.u64(name) as usize
    }

    pub fn usize_or(&self, name: &str, default: usize) -> usize {
        if self.has(name) {
            self.usize(name)
        } else {
            default
        }
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.raw(name).parse().expect("validated number")
    }

    pub fn bool(&self, name: &str) -> bool {
        self.raw(name) == "true"
    }

    pub fn str(&self, name: &str) -> &str {
        self.raw(name)
    }

    pub fn str_or<'a>(&'a self, name: &str, default: &'a str) -> &'a str {
        if self.has(name) {
            self.raw(name)
        } else {
            default
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        PathBuf::from(self.raw(name))
    }

    pub fn list(&self, name: &str) -> Vec<u64> {
        self.raw(name).split(',').map(|s| s.parse().expect("validated list")).collect()
    }

    /// `key = value` lines, sorted, for run records.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
