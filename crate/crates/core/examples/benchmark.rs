//! Rule vs. A2C vs. adversarial A2C over several seeds.
//!
//! `cargo run --release --example benchmark -- [config.toml] [episodes] [seeds]`

use std::time::Instant;

use advdialog::config::RunConfig;
use advdialog::pipeline::{benchmark, build_demos, format_table, summarize};
use advdialog::trainer::AgentKind;

fn main() -> advdialog::Result<()> {
    let mut args = std::env::args().skip(1).peekable();
    let mut cfg = match args.peek() {
        Some(a) if a.ends_with(".toml") => RunConfig::load(args.next().unwrap())?,
        _ => RunConfig::default(),
    };
    if let Some(n) = args.next() {
        cfg.train.episodes = n.parse().expect("episodes");
    }
    if let Some(k) = args.next() {
        cfg.train.seeds = (1..=k.parse::<u64>().expect("seed count")).collect();
    }
    let t0 = Instant::now();
    let (demos, attempts) = build_demos(&cfg, &mut cfg.build_env()?)?;
    println!(
        "demos: {} dialogues, {} pairs, {attempts} attempts ({:.1}s)",
        demos.episodes().len(),
        demos.len(),
        t0.elapsed().as_secs_f64()
    );
    println!(
        "demo dialogue length {:.2}",
        demos.len() as f64 / demos.episodes().len() as f64
    );
    let cells = benchmark(&cfg, &AgentKind::ALL, &cfg.train.seeds, 1, Some(&demos))?;
    let mut ok = Vec::new();
    for (agent, seed, r) in &cells {
        let r = r
            .as_ref()
            .map_err(|e| advdialog::Error::InvalidArgument(format!("{agent}-{seed}: {e}")))?;
        println!(
            "{:<8} seed {seed}: success {:6.2}%  reward {:7.2}  turns {:5.2}  auc {:6.2}",
            agent.label(),
            r.final_metrics.success_rate,
            r.final_metrics.avg_reward,
            r.final_metrics.avg_turns,
            r.auc()
        );
        ok.push(r);
    }
    print!("{}", format_table(&summarize(&ok)));
    println!("elapsed {:.1}s", t0.elapsed().as_secs_f64());
    Ok(())
}
