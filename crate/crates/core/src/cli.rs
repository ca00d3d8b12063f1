//! Command-line front end.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::a2c::Actor;
use crate::adversarial::DemoBuffer;
use crate::checkpoint::{Checkpoint, Entry};
use crate::config::{RunConfig, GOALS_FILE, KB_FILE, ONTOLOGY_FILE};
use crate::domain::goal::goals_to_text;
use crate::domain::{SemanticFrame, Speaker};
use crate::env::{DialogueEnv, Policy};
use crate::error::{Error, Result};
use crate::metrics::{to_csv, MetricsRow};
use crate::pipeline::{benchmark, build_demos, collect_from, format_table, run_agent, summarize, summary_csv};
use crate::simulator::Outcome;
use crate::trainer::{evaluate, pretrained_learner, stream_rng, AgentKind, GreedyPolicy, RuleAgent, Stream};

/// Environment variable overriding the output root (default `runs`).
pub const RUN_DIR_VAR: &str = "ADVDIALOG_RUN_DIR";

#[derive(Debug, Parser)]
#[command(name = "advdialog", version, about = "Adversarial A2C dialogue policy learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run seed; the first configured seed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the ontology, knowledge base and goal corpus to a directory.
    GenWorld {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train (or, for `rule`, just evaluate) one agent; writes ckpt and metrics.csv.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agent: AgentKind,
        /// Training episode budget.
        #[arg(long)]
        episodes: Option<usize>,
        /// Run directory (default `<root>/<agent>-<seed>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Demonstration file for adv-a2c (collected on the fly when omitted).
        #[arg(long)]
        demos: Option<PathBuf>,
    },
    /// Greedy evaluation of a trained agent.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agent: AgentKind,
        /// Number of evaluation dialogues.
        #[arg(long)]
        episodes: Option<usize>,
        /// Run directory holding `ckpt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Store successful dialogues of a pre-trained agent as demonstrations.
    CollectDemos {
        #[command(flatten)]
        common: Common,
        /// `rule` uses the rule-pretrained actor; otherwise the agent's checkpoint.
        #[arg(long, default_value = "a2c")]
        agent: AgentKind,
        /// Successful dialogues to keep.
        #[arg(long)]
        episodes: Option<usize>,
        /// Output file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate every (agent, seed) cell.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Agents to run (repeatable); all three when omitted.
        #[arg(long)]
        agent: Vec<AgentKind>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cells trained in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        demos: Option<PathBuf>,
    },
    /// Play the user against a trained agent, one semantic frame per line.
    Chat {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agent: AgentKind,
        /// Run directory holding `ckpt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } | Error::EmptyOntology | Error::DuplicateSlot(_) => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Console handles and the output root, injectable for tests.
pub struct Io<'a> {
    pub input: &'a mut dyn BufRead,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub run_root: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_io<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(io.out, "{}", e.render())
            } else {
                write!(io.err, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, io) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            EXIT_FAILURE
        }
    }
}

/// Entry point used by the binary.
pub fn run_main() -> i32 {
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let run_root = std::env::var_os(RUN_DIR_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    run_with_io(
        std::env::args_os(),
        &mut Io {
            input: &mut input,
            out: &mut out,
            err: &mut err,
            run_root,
        },
    )
}

fn load_config(common: &Common, episodes: Option<usize>) -> std::result::Result<(RunConfig, u64), Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = episodes {
        cfg.train.episodes = n;
        if n > 0 {
            cfg.train.eval_every = cfg.train.eval_every.min(n);
        }
        cfg.validate()?;
    }
    let seed = common.seed.unwrap_or(cfg.train.seeds[0]);
    Ok((cfg, seed))
}

fn run_dir(io: &Io<'_>, out: &Option<PathBuf>, agent: AgentKind, seed: u64) -> PathBuf {
    out.clone()
        .unwrap_or_else(|| io.run_root.join(format!("{}-{seed}", agent.label())))
}

fn load_demos(path: &Path) -> Result<DemoBuffer> {
    Ok(Checkpoint::load(path)?.demos("demos")?.clone())
}

fn load_actor(dir: &Path) -> Result<Actor> {
    Checkpoint::load(dir.join("ckpt"))?.actor()
}

fn metrics_line(agent: AgentKind, seed: u64, m: &crate::trainer::EvalMetrics) -> String {
    format!(
        "agent={} seed={seed} success_rate={:.2} avg_reward={:.2} avg_turns={:.2}",
        agent.label(),
        m.success_rate,
        m.avg_reward,
        m.avg_turns
    )
}

fn dispatch(command: Command, io: &mut Io<'_>) -> CliResult {
    match command {
        Command::GenWorld { common, out } => {
            let (cfg, _) = load_config(&common, None)?;
            let world = cfg.build_world()?;
            let dir = out.unwrap_or_else(|| io.run_root.join("world"));
            std::fs::create_dir_all(&dir)?;
            let ont = &world.ontology;
            std::fs::write(dir.join(ONTOLOGY_FILE), ont.to_text())?;
            std::fs::write(dir.join(KB_FILE), world.kb.to_text(ont))?;
            std::fs::write(dir.join(GOALS_FILE), goals_to_text(&world.goals, ont))?;
            writeln!(
                io.out,
                "wrote {} slots, {} showings, {} goals to {}",
                ont.len(),
                world.kb.len(),
                world.goals.len(),
                dir.display()
            )?;
            Ok(())
        }
        Command::Train {
            common,
            agent,
            episodes,
            out,
            demos,
        } => {
            let (cfg, seed) = load_config(&common, episodes)?;
            let world = cfg.build_world()?;
            let demo_buf = match (agent, demos) {
                (AgentKind::AdvA2c, Some(p)) => Some(load_demos(&p)?),
                (AgentKind::AdvA2c, None) => {
                    let (d, attempts) = build_demos(&cfg, &mut cfg.env_for(world.clone())?)?;
                    writeln!(
                        io.out,
                        "collected {} demonstration pairs in {attempts} episodes",
                        d.len()
                    )?;
                    Some(d)
                }
                _ => None,
            };
            let result = run_agent(&cfg, world, agent, seed, demo_buf.as_ref())?;
            let dir = run_dir(io, &out, agent, seed);
            std::fs::create_dir_all(&dir)?;
            result.checkpoint(&cfg, demo_buf.as_ref()).save(dir.join("ckpt"))?;
            std::fs::write(dir.join("metrics.csv"), to_csv(&result.rows()))?;
            if let Some(p) = result.pretrain {
                writeln!(io.out, "pretrain accuracy={:.3} steps={}", p.accuracy, p.steps)?;
                if p.weak {
                    writeln!(io.err, "warning: imitation pretraining stopped below 50% accuracy")?;
                }
            }
            writeln!(io.out, "final {}", metrics_line(agent, seed, &result.final_metrics))?;
            writeln!(io.out, "wrote {}", dir.display())?;
            Ok(())
        }
        Command::Evaluate {
            common,
            agent,
            episodes,
            out,
        } => {
            let (mut cfg, seed) = load_config(&common, None)?;
            let dir = run_dir(io, &out, agent, seed);
            let ckpt = match agent {
                AgentKind::Rule => None,
                _ => Some(Checkpoint::load(dir.join("ckpt"))?),
            };
            let trained_cfg = ckpt
                .as_ref()
                .and_then(|c| c.text("config"))
                .map(RunConfig::parse)
                .transpose()?;
            if let (None, Some(c)) = (&common.config, &trained_cfg) {
                cfg = c.clone();
            }
            let mut env = cfg.build_env()?;
            let n = episodes.unwrap_or(cfg.train.final_eval_episodes);
            let mut rng = stream_rng(seed, Stream::Final);
            let m = match &ckpt {
                None => {
                    let mut rule = RuleAgent {
                        world: env.world().clone(),
                    };
                    evaluate(&mut rule, &mut env, n, &mut rng)?
                }
                Some(c) => evaluate(&mut GreedyPolicy(&c.actor()?), &mut env, n, &mut rng)?,
            };
            let trained = trained_cfg.map_or(0, |c| c.train.episodes);
            std::fs::create_dir_all(&dir)?;
            let row = MetricsRow::new(trained, m, seed, agent.label());
            std::fs::write(dir.join("eval.csv"), to_csv(&[row]))?;
            writeln!(io.out, "{}", metrics_line(agent, seed, &m))?;
            Ok(())
        }
        Command::CollectDemos {
            common,
            agent,
            episodes,
            out,
        } => {
            let (cfg, seed) = load_config(&common, None)?;
            let n = episodes.unwrap_or(cfg.demos.count);
            if n == 0 {
                return Err(Failure::Usage("--episodes must be at least 1".into()));
            }
            let mut env = cfg.build_env()?;
            let actor = match agent {
                AgentKind::Rule => pretrained_learner(&mut env, &cfg.train_config(), seed)?.0.actor,
                _ => load_actor(&run_dir(io, &None, agent, seed))?,
            };
            let budget = cfg.demos.max_attempts.unwrap_or(100 * n);
            let (demos, attempts) = collect_from(&actor, &mut env, n, budget, seed)?;
            let path = out.unwrap_or_else(|| io.run_root.join(format!("demos-{}-{seed}.ckpt", agent.label())));
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut c = Checkpoint::new();
            c.insert("source", Entry::Text(format!("{}-{seed}", agent.label())));
            c.insert("demos", Entry::Demos(demos.clone()));
            c.save(&path)?;
            writeln!(
                io.out,
                "kept {} successful dialogues ({} pairs) after {attempts} attempts; wrote {}",
                demos.episodes().len(),
                demos.len(),
                path.display()
            )?;
            Ok(())
        }
        Command::Benchmark {
            common,
            agent,
            episodes,
            out,
            jobs,
            demos,
        } => {
            let (cfg, _) = load_config(&common, episodes)?;
            let seeds = common.seed.map_or_else(|| cfg.train.seeds.clone(), |s| vec![s]);
            let agents = if agent.is_empty() {
                AgentKind::ALL.to_vec()
            } else {
                agent
            };
            let demo_buf = if agents.contains(&AgentKind::AdvA2c) {
                Some(match demos {
                    Some(p) => load_demos(&p)?,
                    None => build_demos(&cfg, &mut cfg.build_env()?)?.0,
                })
            } else {
                None
            };
            let cells = benchmark(&cfg, &agents, &seeds, jobs, demo_buf.as_ref())?;
            let mut ok = Vec::new();
            let mut failed = 0;
            for (a, s, r) in &cells {
                match r {
                    Ok(r) => ok.push(r),
                    Err(e) => {
                        failed += 1;
                        writeln!(io.err, "cell {}-{s} failed: {e}", a.label())?;
                    }
                }
            }
            let dir = out.unwrap_or_else(|| io.run_root.join("benchmark"));
            std::fs::create_dir_all(&dir)?;
            let curves: Vec<MetricsRow> = ok.iter().flat_map(|r| r.rows()).collect();
            std::fs::write(dir.join("metrics.csv"), to_csv(&curves))?;
            let finals: Vec<MetricsRow> = ok
                .iter()
                .map(|r| {
                    MetricsRow::new(
                        r.curve.last().map_or(0, |p| p.episode),
                        r.final_metrics,
                        r.seed,
                        r.agent.label(),
                    )
                })
                .collect();
            std::fs::write(dir.join("final.csv"), to_csv(&finals))?;
            let summary = summarize(&ok);
            std::fs::write(dir.join("summary.csv"), summary_csv(&summary))?;
            write!(io.out, "{}", format_table(&summary))?;
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} benchmark cell(s) failed")));
            }
            Ok(())
        }
        Command::Chat { common, agent, out } => {
            let (cfg, seed) = load_config(&common, None)?;
            let mut env = cfg.build_env()?;
            let mut policy: Box<dyn Policy> = match agent {
                AgentKind::Rule => Box::new(RuleAgent {
                    world: env.world().clone(),
                }),
                _ => Box::new(OwnedGreedy(load_actor(&run_dir(io, &out, agent, seed))?)),
            };
            chat(&mut env, policy.as_mut(), seed, io)
        }
    }
}

struct OwnedGreedy(Actor);

impl Policy for OwnedGreedy {
    fn act(
        &mut self,
        s: &crate::domain::StateVector,
        _t: &crate::domain::DialogueTracker,
        _rng: &mut crate::env::SimRng,
    ) -> Result<usize> {
        self.0.greedy(s)
    }
}

const SYNTAX_HINT: &str = "syntax: act(request_slot, slot=value, ...), e.g. inform(moviename=zootopia) or deny()";

fn chat(env: &mut DialogueEnv, policy: &mut dyn Policy, seed: u64, io: &mut Io<'_>) -> CliResult {
    let mut rng = stream_rng(seed, Stream::Eval);
    env.set_logging(true);
    env.reset(&mut rng)?;
    let world = env.world().clone();
    let ont = &world.ontology;
    let goal = env.simulator().map(|s| s.goal.render(ont)).unwrap_or_default();
    writeln!(io.out, "goal: {goal}")?;
    writeln!(io.out, "{SYNTAX_HINT}")?;
    if let Some(u) = env.tracker().and_then(|t| t.last_user.clone()) {
        writeln!(io.out, "user: {}", u.render(ont))?;
    }
    let mut total = 0.0;
    let mut outcome = Outcome::Ongoing;
    let mut turns = 0;
    while !env.is_done() {
        let (s, t) = match (env.state(), env.tracker()) {
            (Some(s), Some(t)) => (s.clone(), t.clone()),
            _ => return Err(Error::NoEpisode.into()),
        };
        let a = policy.act(&s, &t, &mut rng)?;
        writeln!(io.out, "agent: {}", env.preview(a)?.render(ont))?;
        let mut probe = env.clone();
        let step = probe.step(a)?;
        let step = if step.terminal {
            *env = probe;
            step
        } else {
            let frame = loop {
                write!(io.out, "user> ")?;
                io.out.flush()?;
                let mut line = String::new();
                if io.input.read_line(&mut line)? == 0 {
                    writeln!(io.out, "\nsession aborted")?;
                    return Ok(());
                }
                match SemanticFrame::parse(line.trim(), Speaker::User, ont) {
                    Ok(f) => break f,
                    Err(e) => writeln!(io.out, "could not parse `{}`: {e}\n{SYNTAX_HINT}", line.trim())?,
                }
            };
            env.step_with_user(a, move |_| frame)?
        };
        total += step.r;
        outcome = step.outcome;
        turns += 1;
    }
    match outcome {
        Outcome::Success => writeln!(io.out, "SUCCESS")?,
        _ if turns >= env.max_turns() => writeln!(io.out, "FAILURE (timeout)")?,
        _ => writeln!(io.out, "FAILURE")?,
    }
    writeln!(io.out, "turns: {turns}  reward: {total}")?;
    Ok(())
}
