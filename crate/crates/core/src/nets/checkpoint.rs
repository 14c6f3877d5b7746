//! Self-describing text checkpoints.
//!
//! ```text
//! SWINGSHOT-CKPT v1
//! kind simple
//! meta n_lookahead 1
//! normalizer <dim> <count> <clip>
//! mean ...
//! var ...
//! net actor
//! widths 7 256 256 256 2
//! activations relu relu relu tanh
//! w 0 ...            (row-major, in × out)
//! b 0 ...
//! log_std ...
//! net critic
//! ...
//! end
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so save/load is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, Mlp, MlpSpec, Policy, RunningNorm, ValueNet};
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "SWINGSHOT-CKPT v1";

/// Actor, critic and observation normaliser of one trained stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub normalizer: RunningNorm,
    pub actor: Policy,
    pub critic: ValueNet,
}

impl Agent {
    pub fn new(kind: &str, actor_spec: &MlpSpec, critic_spec: &MlpSpec, seed: u64) -> Result<Self> {
        if actor_spec.input_dim() != critic_spec.input_dim() {
            return Err(Error::config("actor and critic must read the same observation"));
        }
        Ok(Agent {
            kind: kind.to_string(),
            meta: BTreeMap::new(),
            normalizer: RunningNorm::new(actor_spec.input_dim()),
            actor: Policy::init(actor_spec, seed)?,
            critic: ValueNet::init(critic_spec, seed.wrapping_add(1))?,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.obs_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.act_dim()
    }

    /// Deterministic action (distribution mean) for a raw observation.
    pub fn act_deterministic(&self, raw_obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.net.forward_one(&self.normalizer.normalize(raw_obs))
    }

    pub fn value(&self, raw_obs: &[f64]) -> Result<f64> {
        self.critic.value(&self.normalizer.normalize(raw_obs))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_HEADER}");
        let _ = writeln!(out, "kind {}", self.kind);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        let n = &self.normalizer;
        let _ = writeln!(out, "normalizer {} {} {}", n.dim(), n.count, n.clip);
        write_values(&mut out, "mean", &n.mean);
        write_values(&mut out, "var", &n.var);
        let _ = writeln!(out, "net actor");
        write_net(&mut out, &self.actor.net);
        write_values(&mut out, "log_std", self.actor.log_std.as_slice().expect("contiguous"));
        let _ = writeln!(out, "net critic");
        write_net(&mut out, &self.critic.net);
        let _ = writeln!(out, "end");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (ln, header) = lines.next_line()?;
        if header.trim() != CHECKPOINT_HEADER {
            return Err(Error::parse(ln, format!("expected `{CHECKPOINT_HEADER}` header")));
        }
        let (ln, kind_line) = lines.next_line()?;
        let kind = kind_line
            .strip_prefix("kind ")
            .ok_or_else(|| Error::parse(ln, "expected `kind`"))?
            .trim()
            .to_string();

        let mut meta = BTreeMap::new();
        let (mut ln, mut line) = lines.next_line()?;
        while let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.insert(k.to_string(), v.to_string());
            (ln, line) = lines.next_line()?;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        let normalizer = match fields.as_slice() {
            ["normalizer", dim, count, clip] => {
                let dim: usize = parse_num(ln, dim)?;
                let mut n = RunningNorm::new(dim);
                n.count = parse_num(ln, count)?;
                n.clip = parse_num(ln, clip)?;
                n.mean = lines.values("mean", dim)?;
                n.var = lines.values("var", dim)?;
                n
            }
            _ => return Err(Error::parse(ln, "expected `normalizer`")),
        };

        lines.expect("net actor")?;
        let actor_net = read_net(&mut lines)?;
        let log_std = Array1::from(lines.values("log_std", actor_net.output_dim())?);
        lines.expect("net critic")?;
        let critic_net = read_net(&mut lines)?;
        lines.expect("end")?;

        if actor_net.input_dim() != normalizer.dim() || critic_net.input_dim() != normalizer.dim() {
            return Err(Error::parse(ln, "network input does not match normaliser dimension"));
        }
        Ok(Agent {
            kind,
            meta,
            normalizer,
            actor: Policy {
                net: actor_net,
                log_std,
            },
            critic: ValueNet { net: critic_net },
        })
    }
}

fn write_values(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn write_net(out: &mut String, net: &Mlp) {
    let widths: Vec<String> = net.spec.widths.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "widths {}", widths.join(" "));
    let acts: Vec<&str> = net.spec.activations.iter().map(|a| a.name()).collect();
    let _ = writeln!(out, "activations {}", acts.join(" "));
    for (i, l) in net.layers.iter().enumerate() {
        write_values(out, &format!("w {i}"), l.w.as_slice().expect("standard layout"));
        write_values(out, &format!("b {i}"), l.b.as_slice().expect("standard layout"));
    }
}

fn read_net(lines: &mut Lines<'_>) -> Result<Mlp> {
    let (ln, line) = lines.next_line()?;
    let widths = line
        .strip_prefix("widths ")
        .ok_or_else(|| Error::parse(ln, "expected `widths`"))?
        .split_whitespace()
        .map(|w| parse_num::<usize>(ln, w))
        .collect::<Result<Vec<_>>>()?;
    let (ln, line) = lines.next_line()?;
    let activations = line
        .strip_prefix("activations ")
        .ok_or_else(|| Error::parse(ln, "expected `activations`"))?
        .split_whitespace()
        .map(|a| Activation::parse(a).ok_or_else(|| Error::parse(ln, format!("unknown activation `{a}`"))))
        .collect::<Result<Vec<_>>>()?;
    let spec = MlpSpec::new(widths, activations).map_err(|e| Error::parse(ln, e.to_string()))?;
    let mut layers = Vec::with_capacity(spec.widths.len() - 1);
    for (i, w) in spec.widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let wv = lines.values(&format!("w {i}"), fan_in * fan_out)?;
        let bv = lines.values(&format!("b {i}"), fan_out)?;
        layers.push(Dense {
            w: Array2::from_shape_vec((fan_in, fan_out), wv).expect("length checked"),
            b: Array1::from(bv),
        });
    }
    Ok(Mlp { spec, layers })
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad number `{s}`")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::parse(0, "unexpected end of checkpoint"))
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let (ln, line) = self.next_line()?;
        if line.trim() != want {
            return Err(Error::parse(ln, format!("expected `{want}`")));
        }
        Ok(())
    }

    fn values(&mut self, tag: &str, count: usize) -> Result<Vec<f64>> {
        let (ln, line) = self.next_line()?;
        let rest = line
            .strip_prefix(tag)
            .ok_or_else(|| Error::parse(ln, format!("expected `{tag}`")))?;
        let vals = rest
            .split_whitespace()
            .map(|v| parse_num::<f64>(ln, v))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != count {
            return Err(Error::parse(ln, format!("`{tag}` has {} values, expected {count}", vals.len())));
        }
        Ok(vals)
    }
}
