//! Plays one logged dialogue with the rule agent, then evaluates it.

use advdialog::config::RunConfig;
use advdialog::env::run_episode;
use advdialog::trainer::{evaluate, stream_rng, RuleAgent, Stream};

fn main() -> advdialog::Result<()> {
    let cfg = RunConfig::default();
    let mut env = cfg.build_env()?;
    let mut rule = RuleAgent {
        world: env.world().clone(),
    };
    env.set_logging(true);
    let record = run_episode(&mut env, &mut rule, &mut stream_rng(0, Stream::Eval))?;
    let ont = env.world().ontology.clone();
    println!("goal: {}", env.world().goals[record.goal_index].render(&ont));
    if let Some(log) = &record.log {
        print!("{}", log.to_text(&ont));
    }
    println!("outcome {:?}, reward {}", record.outcome, record.total_reward);

    env.set_logging(false);
    let m = evaluate(&mut rule, &mut env, 1000, &mut stream_rng(1, Stream::Final))?;
    println!("rule agent over 1000 dialogues: {m:?}");
    Ok(())
}
