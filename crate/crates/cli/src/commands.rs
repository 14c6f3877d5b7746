use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use swingshot::export::{self, write_atomic, Scene};
use swingshot::full_env::{self, Configuration, FullConfig, FullEnv, ReferenceTrajectory, RewardWeights};
use swingshot::math::fmt_g9;
use swingshot::nets::Agent;
use swingshot::planner::{run_mpc, FullTraceRow, Mode, PlannerConfig};
use swingshot::ppo::{IterationLog, TrainConfig, Trainer};
use swingshot::rng::derive_seed;
use swingshot::rollout::{evaluate, Environment, EpisodeStats};
use swingshot::simple_env::{self, Capture, SimpleAction, SimpleConfig, SimpleEnv, TraceRow, CONTROL_HZ};
use swingshot::terrain::{generate_sequence, generate_terrain, HandholdSequence, SequenceDistribution, TerrainConfig};

use crate::schema::{Cmd, RunConfig};
use crate::CliError;

type Res<T> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn run(cfg: &RunConfig) -> Res<()> {
    match cfg.cmd {
        Cmd::TrainSimple => cmd_train_simple(cfg),
        Cmd::RecordRefs => cmd_record_refs(cfg),
        Cmd::TrainFull => cmd_train_full(cfg),
        Cmd::Eval => cmd_eval(cfg),
        Cmd::Plan => cmd_plan(cfg),
        Cmd::Ablate => cmd_ablate(cfg),
        Cmd::Export => cmd_export(cfg),
    }
}

fn write(path: &Path, text: &str) -> Res<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| swingshot::Error::file(path, e).into())
}

fn load_agent(path: &Path) -> Res<Agent> {
    Ok(Agent::from_text(&read(path)?)?)
}

fn distribution(name: &str) -> SequenceDistribution {
    match name {
        "easy" => SequenceDistribution::easy(),
        _ => SequenceDistribution::full(),
    }
}

fn max_steps(limit: f64) -> usize {
    (limit * CONTROL_HZ).ceil() as usize + 1
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

fn meta_get<'a>(agent: &'a Agent, key: &str) -> Res<&'a str> {
    agent
        .meta
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("checkpoint has no `{key}` record")))
}

fn meta_parse<T: std::str::FromStr>(agent: &Agent, key: &str) -> Res<T> {
    meta_get(agent, key)?
        .parse()
        .map_err(|_| CliError::Runtime(anyhow::anyhow!("checkpoint record `{key}` is malformed")))
}

// ---------------------------------------------------------------- point mass

#[derive(Clone, Debug)]
struct SimpleRun {
    env: SimpleConfig,
    train: TrainConfig,
    dist: SequenceDistribution,
    seq_len: usize,
    eval_sequences: usize,
    checkpoint_every: usize,
}

impl SimpleRun {
    fn from_config(cfg: &RunConfig) -> Res<Self> {
        let radius = cfg.f64("capture_radius");
        if radius < 0.0 {
            return Err(usage("capture_radius must be non-negative"));
        }
        let env = SimpleConfig {
            lookahead: cfg.usize_or("n_lookahead", 1),
            min_duration: cfg.bool("min_duration"),
            max_duration: cfg.bool("max_duration"),
            unrecoverable: cfg.bool("unrecoverable"),
            capture: if radius > 0.0 {
                Capture::Radius(radius)
            } else {
                Capture::Annulus
            },
            ..SimpleConfig::default()
        };
        env.validate().map_err(usage)?;
        if !env.unrecoverable && !env.max_duration && !env.min_duration {
            return Err(usage(
                "disabling every early-termination rule leaves nothing to shape exploration; keep at least one",
            ));
        }
        let base = TrainConfig::simple();
        let train = TrainConfig {
            total_samples: cfg.usize_or("total_samples", base.total_samples),
            samples_per_iter: cfg.usize_or("samples_per_iter", base.samples_per_iter),
            n_envs: cfg.usize_or("n_envs", base.n_envs),
            lr_init: cfg.f64("lr_init"),
            lr_final: cfg.f64("lr_final"),
            seed: cfg.u64("seed"),
            ..base
        };
        train.validate().map_err(usage)?;
        let seq_len = cfg.usize_or("seq_len", 20);
        if seq_len < 2 {
            return Err(usage("seq_len must be at least 2"));
        }
        Ok(SimpleRun {
            env,
            train,
            dist: distribution(cfg.str_or("distribution", "full")),
            seq_len,
            eval_sequences: cfg.usize("eval_sequences"),
            checkpoint_every: cfg.usize_or("checkpoint_every", 0),
        })
    }
}

fn simple_meta(agent: &mut Agent, env: &SimpleConfig) {
    let m = &mut agent.meta;
    m.insert("lookahead".into(), env.lookahead.to_string());
    m.insert("min_duration".into(), env.min_duration.to_string());
    m.insert("max_duration".into(), env.max_duration.to_string());
    m.insert("unrecoverable".into(), env.unrecoverable.to_string());
    let radius = match env.capture {
        Capture::Annulus => 0.0,
        Capture::Radius(r) => r,
    };
    m.insert("capture_radius".into(), radius.to_string());
}

fn simple_config_of(agent: &Agent) -> Res<SimpleConfig> {
    if agent.kind != "simple" {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "expected a point-mass checkpoint, found `{}`",
            agent.kind
        )));
    }
    let radius: f64 = meta_parse(agent, "capture_radius")?;
    Ok(SimpleConfig {
        lookahead: meta_parse(agent, "lookahead")?,
        min_duration: meta_parse(agent, "min_duration")?,
        max_duration: meta_parse(agent, "max_duration")?,
        unrecoverable: meta_parse(agent, "unrecoverable")?,
        capture: if radius > 0.0 {
            Capture::Radius(radius)
        } else {
            Capture::Annulus
        },
        ..SimpleConfig::default()
    })
}

fn eval_simple(agent: &Agent, env: &SimpleConfig, dist: SequenceDistribution, seq_len: usize, n: usize, seed: u64) -> Res<Vec<EpisodeStats>> {
    let eval_seed = derive_seed(seed, 0xE7A1);
    let mut envs = (0..n)
        .map(|i| SimpleEnv::new(env.clone(), dist, seq_len, eval_seed, i as u64))
        .collect::<swingshot::Result<Vec<_>>>()?;
    Ok(evaluate(agent, &mut envs, max_steps(env.episode_limit))?)
}

fn curve_header() -> &'static str {
    "samples,mean_ep_reward,mean_handholds\n"
}

fn curve_line(log: &IterationLog) -> String {
    format!("{},{},{}\n", log.samples, fmt_g9(log.mean_ep_reward), fmt_g9(log.mean_handholds))
}

/// Shared PPO loop: logs, learning curve and periodic checkpoints.
fn train_loop<E: Environment>(
    agent: Agent,
    envs: Vec<E>,
    train: TrainConfig,
    out: &Path,
    stem: &str,
    checkpoint_every: usize,
    quiet: bool,
) -> Res<Agent> {
    let mut trainer = Trainer::new(agent, envs, train)?;
    let mut log = format!("{}\n", IterationLog::HEADER);
    let mut curve = curve_header().to_string();
    let started = Instant::now();
    let ckpt = out.join(format!("{stem}.ckpt"));
    trainer.run(|t, line| {
        log.push_str(&line.to_line());
        log.push('\n');
        curve.push_str(&curve_line(line));
        if !quiet {
            eprintln!("[{stem} {:>7.1}s] {}", started.elapsed().as_secs_f64(), line.to_line());
        }
        if checkpoint_every > 0 && t.iter % checkpoint_every == 0 {
            write_atomic(&ckpt, t.agent.to_text().as_bytes())?;
            write_atomic(&out.join(format!("{stem}_log.tsv")), log.as_bytes())?;
            write_atomic(&out.join(format!("{stem}_curve.csv")), curve.as_bytes())?;
        }
        Ok(())
    })?;
    write(&ckpt, &trainer.agent.to_text())?;
    write(&out.join(format!("{stem}_log.tsv")), &log)?;
    write(&out.join(format!("{stem}_curve.csv")), &curve)?;
    Ok(trainer.agent)
}

/// Trains one point-mass policy into `out` and returns its evaluation.
fn train_simple(run: &SimpleRun, out: &Path, quiet: bool) -> Res<(f64, f64)> {
    let seed = run.train.seed;
    let mut agent = simple_env::new_agent(&run.env, seed)?;
    simple_meta(&mut agent, &run.env);
    agent.meta.insert("seed".into(), seed.to_string());
    let envs = (0..run.train.n_envs)
        .map(|i| SimpleEnv::new(run.env.clone(), run.dist, run.seq_len, seed, i as u64))
        .collect::<swingshot::Result<Vec<_>>>()?;
    let agent = train_loop(agent, envs, run.train.clone(), out, "simple", run.checkpoint_every, quiet)?;
    let stats = eval_simple(&agent, &run.env, run.dist, run.seq_len, run.eval_sequences, seed)?;
    let holds: Vec<f64> = stats.iter().map(|s| s.handholds as f64).collect();
    let (m, sd) = mean_std(&holds);
    let summary = format!(
        "samples = {}\nepisodes = {}\nmean_handholds = {}\nstd_handholds = {}\n",
        run.train.total_samples.div_ceil(run.train.samples_per_iter) * run.train.samples_per_iter,
        holds.len(),
        fmt_g9(m),
        fmt_g9(sd)
    );
    write(&out.join("simple_summary.txt"), &summary)?;
    Ok((m, sd))
}

fn cmd_train_simple(cfg: &RunConfig) -> Res<()> {
    let run = SimpleRun::from_config(cfg)?;
    let out = cfg.path("out");
    write(&out.join("train-simple_config.txt"), &cfg.to_text())?;
    let (m, sd) = train_simple(&run, &out, false)?;
    println!("mean handholds over {} sequences: {m:.2} ± {sd:.2}", run.eval_sequences);
    Ok(())
}

// ---------------------------------------------------------------- references

fn cmd_record_refs(cfg: &RunConfig) -> Res<()> {
    let n = cfg.usize("sequences");
    let seq_len = cfg.usize_or("seq_len", 10);
    if seq_len < 2 {
        return Err(usage("seq_len must be at least 2"));
    }
    let dist = distribution(cfg.str_or("distribution", "easy"));
    let agent = load_agent(&cfg.path("simple_checkpoint"))?;
    let env = simple_config_of(&agent)?;
    let out = cfg.path("out");
    let seed = cfg.u64("seed");
    let mut manifest = String::from("# accepted reference files\n");
    let mut rejected = Vec::new();
    for i in 0..n {
        let seq = generate_sequence(derive_seed(seed, i as u64), seq_len, dist.distance, dist.pitch)?;
        match full_env::record_reference(&agent, &seq, &env) {
            Ok(r) => {
                let name = format!("ref_{i:04}.csv");
                write(&out.join(&name), &r.to_text())?;
                let _ = writeln!(manifest, "{name}");
            }
            Err(swingshot::Error::ReferenceFailed { grabs, .. }) => rejected.push((i, grabs)),
            Err(e) => return Err(e.into()),
        }
    }
    let mut report = format!("requested = {n}\naccepted = {}\nrejected = {}\n", n - rejected.len(), rejected.len());
    for (i, g) in &rejected {
        let _ = writeln!(report, "# sequence {i}: {g} of {} holds", seq_len - 1);
    }
    write(&out.join("manifest.txt"), &manifest)?;
    write(&out.join("rejections.txt"), &report)?;
    println!("recorded {} of {n} references ({} rejected)", n - rejected.len(), rejected.len());
    Ok(())
}

fn load_refs(dir: &Path) -> Res<Vec<ReferenceTrajectory>> {
    let entries = fs::read_dir(dir).map_err(|e| swingshot::Error::file(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("ref_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("{}: no reference files", dir.display())));
    }
    files
        .iter()
        .map(|f| {
            ReferenceTrajectory::from_text(&read(f)?)
                .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", f.display())))
        })
        .collect()
}

// ---------------------------------------------------------------- full model

fn full_config_from(cfg: &RunConfig) -> Res<FullConfig> {
    let config = Configuration::parse(cfg.str("config")).map_err(usage)?;
    let weights = RewardWeights {
        tracking: cfg.f64("w_tracking"),
        reaching: cfg.f64("w_reaching"),
        upright: cfg.f64("w_upright"),
        arm: cfg.f64("w_arm"),
        legs: cfg.f64("w_legs"),
        energy: cfg.f64("w_energy"),
    };
    let f = FullConfig {
        config,
        lookahead: cfg.usize_or("n_lookahead", 2),
        weights,
        min_duration: cfg.bool("min_duration"),
        max_duration: cfg.bool("max_duration"),
        unrecoverable: cfg.bool("unrecoverable"),
        ..FullConfig::default()
    };
    f.validate().map_err(usage)?;
    Ok(f)
}

fn full_meta(agent: &mut Agent, f: &FullConfig) {
    let w = &f.weights;
    let m = &mut agent.meta;
    m.insert("config".into(), f.config.name().into());
    m.insert("lookahead".into(), f.lookahead.to_string());
    m.insert("min_duration".into(), f.min_duration.to_string());
    m.insert("max_duration".into(), f.max_duration.to_string());
    m.insert("unrecoverable".into(), f.unrecoverable.to_string());
    m.insert(
        "weights".into(),
        format!("{} {} {} {} {} {}", w.tracking, w.reaching, w.upright, w.arm, w.legs, w.energy),
    );
}

fn full_config_of(agent: &Agent) -> Res<FullConfig> {
    if agent.kind != "full" {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "expected an articulated checkpoint, found `{}`",
            agent.kind
        )));
    }
    let w: Vec<f64> = meta_get(agent, "weights")?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Runtime(anyhow::anyhow!("checkpoint record `weights` is malformed")))?;
    let [tracking, reaching, upright, arm, legs, energy] = w[..] else {
        return Err(CliError::Runtime(anyhow::anyhow!("checkpoint record `weights` needs 6 values")));
    };
    Ok(FullConfig {
        config: Configuration::parse(meta_get(agent, "config")?)?,
        lookahead: meta_parse(agent, "lookahead")?,
        min_duration: meta_parse(agent, "min_duration")?,
        max_duration: meta_parse(agent, "max_duration")?,
        unrecoverable: meta_parse(agent, "unrecoverable")?,
        weights: RewardWeights {
            tracking,
            reaching,
            upright,
            arm,
            legs,
            energy,
        },
        ..FullConfig::default()
    })
}

fn eval_full(agent: &Agent, f: &FullConfig, refs: &Arc<Vec<ReferenceTrajectory>>, n: usize, seed: u64) -> Res<Vec<EpisodeStats>> {
    let eval_seed = derive_seed(seed, 0xE7A1);
    let mut envs = (0..n)
        .map(|i| FullEnv::new(f.clone(), Arc::clone(refs), eval_seed, i as u64))
        .collect::<swingshot::Result<Vec<_>>>()?;
    Ok(evaluate(agent, &mut envs, max_steps(f.episode_limit))?)
}

fn cmd_train_full(cfg: &RunConfig) -> Res<()> {
    let f = full_config_from(cfg)?;
    let base = TrainConfig::full();
    let train = TrainConfig {
        total_samples: cfg.usize_or("total_samples", 10_000_000),
        samples_per_iter: cfg.usize_or("samples_per_iter", base.samples_per_iter),
        n_envs: cfg.usize_or("n_envs", base.n_envs),
        lr_init: cfg.f64("lr_init"),
        lr_final: cfg.f64("lr_final"),
        seed: cfg.u64("seed"),
        ..base
    };
    train.validate().map_err(usage)?;
    let refs = Arc::new(load_refs(&cfg.path("refs"))?);
    if f.config.reference_grabs() && refs.iter().all(|r| r.grab_count() == 0) {
        return Err(usage("configuration E needs references with grab flags; none of the references grabs"));
    }
    let out = cfg.path("out");
    write(&out.join("train-full_config.txt"), &cfg.to_text())?;
    let seed = train.seed;
    let mut agent = full_env::new_agent(&f, seed)?;
    full_meta(&mut agent, &f);
    agent.meta.insert("seed".into(), seed.to_string());
    let envs = (0..train.n_envs)
        .map(|i| FullEnv::new(f.clone(), Arc::clone(&refs), seed, i as u64))
        .collect::<swingshot::Result<Vec<_>>>()?;
    let agent = train_loop(agent, envs, train, &out, "full", cfg.usize("checkpoint_every"), false)?;
    let stats = eval_full(&agent, &f, &refs, cfg.usize("eval_sequences"), seed)?;
    let holds: Vec<f64> = stats.iter().map(|s| s.handholds as f64).collect();
    let rets: Vec<f64> = stats.iter().map(|s| s.ret).collect();
    let (m, sd) = mean_std(&holds);
    let (rm, _) = mean_std(&rets);
    let summary = format!(
        "config = {}\nepisodes = {}\nmean_handholds = {}\nstd_handholds = {}\nmean_return = {}\n",
        f.config.name(),
        holds.len(),
        fmt_g9(m),
        fmt_g9(sd),
        fmt_g9(rm)
    );
    write(&out.join("full_summary.txt"), &summary)?;
    println!("config {}: mean handholds {m:.2} ± {sd:.2}, mean return {rm:.2}", f.config.name());
    Ok(())
}

// ---------------------------------------------------------------- eval/export

fn trace_simple(agent: &Agent, env: &SimpleConfig, seq: &HandholdSequence) -> Res<Vec<TraceRow>> {
    let mut state = simple_env::reset(seq, env)?;
    let mut rows = vec![TraceRow::from_state(&state, 0.0, Default::default())];
    for _ in 0..max_steps(env.episode_limit) {
        let obs = simple_env::observe(&state, seq, env.lookahead, env).to_vec();
        let a = agent.act_deterministic(&obs)?;
        let r = simple_env::step(&state, SimpleAction::from_slice(&a), seq, env)?;
        state = r.next_state;
        rows.push(TraceRow::from_state(&state, r.reward, r.events));
        if r.terminated {
            break;
        }
    }
    Ok(rows)
}

fn trace_full(agent: &Agent, f: &FullConfig, refs: &Arc<Vec<ReferenceTrajectory>>, index: usize) -> Res<(Vec<FullTraceRow>, Scene)> {
    let mut env = FullEnv::new(f.clone(), Arc::clone(refs), 0, 0)?;
    let mut obs = env.reset_to(index % refs.len())?;
    let mut rows = vec![FullTraceRow::from_state(env.state(), 0.0)];
    for _ in 0..max_steps(f.episode_limit) {
        let a = agent.act_deterministic(&obs)?;
        let tr = env.step(&a)?;
        rows.push(FullTraceRow::from_state(env.state(), tr.reward));
        obs = tr.obs;
        if tr.done {
            break;
        }
    }
    let r = env.reference();
    let scene = Scene {
        holds: r.seq.holds.clone(),
        root: rows.iter().map(|row| row.root).collect(),
        reference: r.points.iter().map(|p| p.p).collect(),
        ..Default::default()
    };
    Ok((rows, scene))
}

/// Writes `<stem>.csv` and `<stem>.svg` for one episode of `agent`.
fn export_episode(cfg: &RunConfig, agent: &Agent, index: u64, stem: &str) -> Res<()> {
    let out = cfg.path("out");
    match agent.kind.as_str() {
        "simple" => {
            let env = simple_config_of(agent)?;
            let dist = distribution(cfg.str_or("distribution", "full"));
            let seq = generate_sequence(index, cfg.usize_or("seq_len", 20), dist.distance, dist.pitch)?;
            let rows = trace_simple(agent, &env, &seq)?;
            write(&out.join(format!("{stem}.csv")), &export::simple_csv(&rows))?;
            write(&out.join(format!("{stem}.svg")), &Scene::from_simple(&seq, &rows).to_svg())?;
        }
        _ => {
            let f = full_config_of(agent)?;
            let refs = Arc::new(load_refs(&cfg.path("refs"))?);
            let (rows, scene) = trace_full(agent, &f, &refs, index as usize)?;
            write(&out.join(format!("{stem}.csv")), &export::full_csv(&rows))?;
            write(&out.join(format!("{stem}.svg")), &scene.to_svg())?;
        }
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Res<()> {
    let agent = load_agent(&cfg.path("checkpoint"))?;
    let n = cfg.usize("episodes");
    let seed = cfg.u64("seed");
    let (label, stats) = match agent.kind.as_str() {
        "simple" => {
            let env = simple_config_of(&agent)?;
            let dist = distribution(cfg.str_or("distribution", "full"));
            ("point mass".to_string(), eval_simple(&agent, &env, dist, cfg.usize_or("seq_len", 20), n, seed)?)
        }
        "full" => {
            let f = full_config_of(&agent)?;
            let refs = Arc::new(load_refs(&cfg.path("refs"))?);
            (format!("config {}", f.config.name()), eval_full(&agent, &f, &refs, n, seed)?)
        }
        other => return Err(CliError::Runtime(anyhow::anyhow!("unknown checkpoint kind `{other}`"))),
    };
    let holds: Vec<f64> = stats.iter().map(|s| s.handholds as f64).collect();
    let rets: Vec<f64> = stats.iter().map(|s| s.ret).collect();
    let (m, sd) = mean_std(&holds);
    let (rm, rsd) = mean_std(&rets);
    let out = cfg.path("out");
    let mut csv = String::from("episode,handholds,return,steps\n");
    for (i, s) in stats.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{}", s.handholds, fmt_g9(s.ret), s.steps);
    }
    write(&out.join("eval_episodes.csv"), &csv)?;
    write(
        &out.join("eval_summary.txt"),
        &format!(
            "kind = {}\nepisodes = {}\nmean_handholds = {}\nstd_handholds = {}\nmean_return = {}\nstd_return = {}\n",
            agent.kind,
            stats.len(),
            fmt_g9(m),
            fmt_g9(sd),
            fmt_g9(rm),
            fmt_g9(rsd)
        ),
    )?;
    if cfg.bool("trace") {
        let index = if agent.kind == "simple" { derive_seed(seed, 0) } else { 0 };
        export_episode(cfg, &agent, index, "eval_trace")?;
    }
    println!("{label}: {m:.2} ± {sd:.2} handholds, return {rm:.2} ± {rsd:.2} over {} episodes", stats.len());
    Ok(())
}

fn cmd_export(cfg: &RunConfig) -> Res<()> {
    let agent = load_agent(&cfg.path("checkpoint"))?;
    export_episode(cfg, &agent, cfg.u64("sequence_seed"), "trajectory")?;
    println!("wrote {}", cfg.path("out").join("trajectory.{csv,svg}").display());
    Ok(())
}

// ---------------------------------------------------------------- planner

fn cmd_plan(cfg: &RunConfig) -> Res<()> {
    let modes: Vec<Mode> = match cfg.str("mode") {
        "all" => Mode::ALL.to_vec(),
        m => vec![Mode::parse(m).map_err(usage)?],
    };
    let simple = load_agent(&cfg.path("simple_checkpoint"))?;
    let full = load_agent(&cfg.path("full_checkpoint"))?;
    let scfg = simple_config_of(&simple)?;
    let fcfg = full_config_of(&full)?;
    let base = PlannerConfig {
        k: cfg.usize("k"),
        horizon: cfg.f64("horizon"),
        h: cfg.usize("h"),
        seed: cfg.u64("seed"),
        record_wall_time: cfg.bool("wall_time"),
        ..PlannerConfig::default()
    };
    base.validate(&fcfg).map_err(usage)?;
    let out = cfg.path("out");
    write(&out.join("plan_config.txt"), &cfg.to_text())?;
    let first = cfg.u64("terrain_seed");
    let terrains = (0..cfg.u64("terrains"))
        .map(|i| generate_terrain(first + i, &TerrainConfig::default()))
        .collect::<swingshot::Result<Vec<_>>>()?;
    let mut results = Vec::new();
    let mut summary = String::from("mode,episodes,passed_0,passed_1,passed_2,passed_3,mean_holds\n");
    for mode in modes {
        let pcfg = PlannerConfig { mode, ..base.clone() };
        let mut mode_results = Vec::new();
        for terrain in &terrains {
            let r = run_mpc(&full, &fcfg, &simple, &scfg, terrain, &pcfg)?;
            eprintln!(
                "[plan {}] terrain {}: {} gaps, {} holds",
                mode.name(),
                terrain.seed,
                r.gaps_passed(),
                r.holds_completed
            );
            if cfg.bool("svg") {
                let name = format!("plan_{}_{}.svg", mode.name(), terrain.seed);
                write(&out.join(name), &Scene::from_episode(terrain, &r).to_svg())?;
            }
            mode_results.push(r);
        }
        let at_least = |g: usize| mode_results.iter().filter(|r| r.gaps_passed() >= g).count();
        let holds: Vec<f64> = mode_results.iter().map(|r| r.holds_completed as f64).collect();
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            mode.name(),
            mode_results.len(),
            at_least(0),
            at_least(1),
            at_least(2),
            at_least(3),
            fmt_g9(mean_std(&holds).0)
        );
        println!(
            "{:<12} gaps passed >=1: {:>3}  >=2: {:>3}  all 3: {:>3}  of {}",
            mode.name(),
            at_least(1),
            at_least(2),
            at_least(3),
            mode_results.len()
        );
        results.extend(mode_results);
    }
    write(&out.join("plan_results.csv"), &export::planner_csv(&results))?;
    write(&out.join("plan_summary.csv"), &summary)?;
    Ok(())
}

// ---------------------------------------------------------------- ablations

fn cmd_ablate(cfg: &RunConfig) -> Res<()> {
    let out = cfg.path("out");
    let seeds = cfg.u64("seeds");
    if seeds == 0 {
        return Err(usage("seeds must be at least 1"));
    }
    // (label, key overrides)
    let settings: Vec<(String, Vec<(&str, String)>)> = match cfg.str("study") {
        "lookahead" => cfg
            .list("lookaheads")
            .into_iter()
            .map(|n| (format!("n{n}"), vec![("n_lookahead", n.to_string())]))
            .collect(),
        _ => vec![
            ("full".into(), vec![]),
            ("no-min-duration".into(), vec![("min_duration", "false".into())]),
            ("no-max-duration".into(), vec![("max_duration", "false".into())]),
            ("no-unrecoverable".into(), vec![("unrecoverable", "false".into())]),
        ],
    };
    let mut runs = Vec::new();
    for (label, overrides) in &settings {
        let mut sub = RunConfig::defaults(Cmd::TrainSimple);
        for key in crate::schema::keys_for(Cmd::Ablate) {
            if cfg.has(key.name) && crate::schema::find(Cmd::TrainSimple, key.name).is_some() {
                sub.set(key.name, cfg.str(key.name), "ablate")?;
            }
        }
        for (k, v) in overrides {
            sub.set(k, v, "ablate")?;
        }
        for s in 0..seeds {
            sub.set("seed", &(cfg.u64("seed") + s).to_string(), "ablate")?;
            runs.push((label.clone(), s, SimpleRun::from_config(&sub)?));
        }
    }
    write(&out.join("ablate_config.txt"), &cfg.to_text())?;
    let mut rows = String::from("setting,seed,mean_handholds\n");
    let mut per_setting: Vec<(String, Vec<f64>)> = settings.iter().map(|(l, _)| (l.clone(), Vec::new())).collect();
    for (label, s, run) in &runs {
        let dir = out.join(label).join(format!("seed{s}"));
        let (m, _) = train_simple(run, &dir, true)?;
        eprintln!("[ablate] {label} seed {s}: {m:.3}");
        let _ = writeln!(rows, "{label},{},{}", run.train.seed, fmt_g9(m));
        per_setting
            .iter_mut()
            .find(|(l, _)| l == label)
            .expect("known setting")
            .1
            .push(m);
    }
    let mut summary = String::from("setting,runs,mean,std\n");
    for (label, xs) in &per_setting {
        let (m, sd) = mean_std(xs);
        let _ = writeln!(summary, "{label},{},{},{}", xs.len(), fmt_g9(m), fmt_g9(sd));
        println!("{label:<18} {m:6.2} ± {sd:.2}");
    }
    write(&out.join("ablate_runs.csv"), &rows)?;
    write(&out.join("ablate_summary.csv"), &summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use swingshot::nets::MlpSpec;

    #[test]
    fn sample_standard_deviation() {
        let (m, sd) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn all_termination_rules_off_is_rejected() {
        let mut c = RunConfig::defaults(Cmd::TrainSimple);
        for k in ["min_duration", "max_duration", "unrecoverable"] {
            c.set(k, "false", "t").unwrap();
        }
        assert!(matches!(SimpleRun::from_config(&c), Err(CliError::Usage(_))));
    }

    #[test]
    fn checkpoint_meta_round_trips() {
        let f = FullConfig {
            config: Configuration::E,
            lookahead: 3,
            max_duration: false,
            ..FullConfig::default()
        };
        let mut a = Agent::new("full", &MlpSpec::full_actor(4, 2), &MlpSpec::full_critic(4), 0).unwrap();
        full_meta(&mut a, &f);
        let back = full_config_of(&Agent::from_text(&a.to_text()).unwrap()).unwrap();
        assert_eq!(back, f);

        let s = SimpleConfig {
            lookahead: 3,
            capture: Capture::Radius(0.05),
            ..SimpleConfig::default()
        };
        let mut a = Agent::new("simple", &MlpSpec::simple_actor(4, 2), &MlpSpec::simple_critic(4), 0).unwrap();
        simple_meta(&mut a, &s);
        assert_eq!(simple_config_of(&a).unwrap(), s);
        assert!(full_config_of(&a).is_err());
    }
}
