//! End-to-end runs: demonstrations, single (agent, seed) cells and the
//! multi-seed benchmark.

use rayon::prelude::*;

use crate::a2c::Actor;
use crate::adversarial::{collect_demonstrations, DemoBuffer};
use crate::checkpoint::{Checkpoint, Entry};
use crate::config::{DemoSource, RunConfig};
use crate::domain::World;
use crate::env::DialogueEnv;
use crate::error::{Error, Result};
use crate::metrics::{curve_rows, mean_std, MetricsRow};
use crate::trainer::{
    curve_auc, evaluate, pretrained_learner, stream_rng, train_a2c, train_adversarial_a2c, AgentKind, CurvePoint,
    EvalMetrics, GreedyPolicy, Learner, PretrainReport, RuleAgent, Stream,
};

/// Demonstrations from the configured source, plus the episodes played.
pub fn build_demos(cfg: &RunConfig, env: &mut DialogueEnv) -> Result<(DemoBuffer, usize)> {
    let d = &cfg.demos;
    let actor = match d.source {
        DemoSource::RulePretrained => pretrained_learner(env, &cfg.train_config(), d.source_seed)?.0.actor,
        DemoSource::A2c => {
            let mut t = cfg.train_config();
            t.episodes = d.source_episodes;
            t.eval_every = d.source_episodes.max(1);
            train_a2c(env, &t, d.source_seed)?.learner.actor
        }
    };
    collect_from(&actor, env, d.count, d.attempts(), d.source_seed)
}

/// Greedy demonstrations of `actor` using the seed's collection stream.
pub fn collect_from(
    actor: &Actor,
    env: &mut DialogueEnv,
    n: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<(DemoBuffer, usize)> {
    collect_demonstrations(
        &mut GreedyPolicy(actor),
        env,
        n,
        max_attempts,
        &mut stream_rng(seed, Stream::Demos),
    )
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub agent: AgentKind,
    pub seed: u64,
    pub curve: Vec<CurvePoint>,
    pub final_metrics: EvalMetrics,
    pub pretrain: Option<PretrainReport>,
    pub learner: Option<Learner>,
}

impl RunResult {
    pub fn rows(&self) -> Vec<MetricsRow> {
        curve_rows(&self.curve, self.seed, self.agent.label())
    }

    pub fn auc(&self) -> f64 {
        curve_auc(&self.curve)
    }

    pub fn checkpoint(&self, cfg: &RunConfig, demos: Option<&DemoBuffer>) -> Checkpoint {
        let mut c = Checkpoint::new();
        c.insert("agent", Entry::Text(self.agent.label().to_string()));
        c.insert("seed", Entry::Text(self.seed.to_string()));
        c.insert("config", Entry::Text(cfg.to_toml()));
        if let Some(l) = &self.learner {
            c.insert_learner(l);
        }
        if let (AgentKind::AdvA2c, Some(d)) = (self.agent, demos) {
            c.insert("demos", Entry::Demos(d.clone()));
        }
        c
    }
}

/// Trains (if needed) and evaluates one agent on one seed.
pub fn run_agent(
    cfg: &RunConfig,
    world: World,
    agent: AgentKind,
    seed: u64,
    demos: Option<&DemoBuffer>,
) -> Result<RunResult> {
    let mut env = cfg.env_for(world)?;
    let t = cfg.train_config();
    t.validate()?;
    let mut final_rng = stream_rng(seed, Stream::Final);
    let (curve, learner, pretrain) = match agent {
        AgentKind::Rule => {
            let mut rule = RuleAgent {
                world: env.world().clone(),
            };
            let m = evaluate(&mut rule, &mut env, t.final_eval_episodes, &mut final_rng)?;
            return Ok(RunResult {
                agent,
                seed,
                curve: vec![CurvePoint { episode: 0, metrics: m }],
                final_metrics: m,
                pretrain: None,
                learner: None,
            });
        }
        AgentKind::A2c => {
            let out = train_a2c(&mut env, &t, seed)?;
            (out.curve, out.learner, out.pretrain)
        }
        AgentKind::AdvA2c => {
            let demos = demos.ok_or(Error::EmptyDemoBuffer)?;
            let out = train_adversarial_a2c(&mut env, &t, seed, demos)?;
            (out.curve, out.learner, out.pretrain)
        }
    };
    let final_metrics = evaluate(
        &mut GreedyPolicy(&learner.actor),
        &mut env,
        t.final_eval_episodes,
        &mut final_rng,
    )?;
    Ok(RunResult {
        agent,
        seed,
        curve,
        final_metrics,
        pretrain: Some(pretrain),
        learner: Some(learner),
    })
}

/// Every (agent, seed) cell; cells run on up to `jobs` threads and come
/// back in agent-major order.
pub fn benchmark(
    cfg: &RunConfig,
    agents: &[AgentKind],
    seeds: &[u64],
    jobs: usize,
    demos: Option<&DemoBuffer>,
) -> Result<Vec<(AgentKind, u64, Result<RunResult>)>> {
    let world = cfg.build_world()?;
    let cells: Vec<(AgentKind, u64)> = agents
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(a, s)| (a, s, run_agent(cfg, world.clone(), a, s, demos)))
            .collect()
    }))
}

/// Per-agent mean ± std over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub agent: AgentKind,
    pub seeds: usize,
    pub success: (f64, f64),
    pub reward: (f64, f64),
    pub turns: (f64, f64),
    pub auc: (f64, f64),
}

pub fn summarize(results: &[&RunResult]) -> Vec<SummaryRow> {
    AgentKind::ALL
        .iter()
        .filter_map(|&agent| {
            let rs: Vec<&&RunResult> = results.iter().filter(|r| r.agent == agent).collect();
            if rs.is_empty() {
                return None;
            }
            let col = |f: &dyn Fn(&RunResult) -> f64| mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            Some(SummaryRow {
                agent,
                seeds: rs.len(),
                success: col(&|r| r.final_metrics.success_rate),
                reward: col(&|r| r.final_metrics.avg_reward),
                turns: col(&|r| r.final_metrics.avg_turns),
                auc: col(&|r| r.auc()),
            })
        })
        .collect()
}

pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<8} {:>5} {:>16} {:>16} {:>14} {:>16}\n",
        "agent", "seeds", "success %", "reward", "turns", "curve auc"
    );
    for r in rows {
        let pm = |(m, s): (f64, f64)| format!("{m:.2} ± {s:.2}");
        out.push_str(&format!(
            "{:<8} {:>5} {:>16} {:>16} {:>14} {:>16}\n",
            r.agent.label(),
            r.seeds,
            pm(r.success),
            pm(r.reward),
            pm(r.turns),
            pm(r.auc)
        ));
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "agent,seeds,success_mean,success_std,reward_mean,reward_std,turns_mean,turns_std,auc_mean,auc_std";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.agent.label(),
            r.seeds,
            r.success.0,
            r.success.1,
            r.reward.0,
            r.reward.1,
            r.turns.0,
            r.turns.1,
            r.auc.0,
            r.auc.1
        ));
    }
    out
}
