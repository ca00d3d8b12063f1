//! Adversarial A2C: collect demonstrations from an expert, then train with
//! the discriminator as a second critic.
//!
//! `cargo run --release --example train_adversarial -- [seed]`

use advdialog::config::RunConfig;
use advdialog::pipeline::build_demos;
use advdialog::trainer::{curve_auc, train_adversarial_a2c};

fn main() -> advdialog::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let cfg = RunConfig::default();
    let mut env = cfg.build_env()?;
    let (demos, attempts) = build_demos(&cfg, &mut env)?;
    println!("{} demonstration pairs from {attempts} expert dialogues", demos.len());
    let out = train_adversarial_a2c(&mut env, &cfg.train_config(), seed, &demos)?;
    for p in &out.curve {
        println!(
            "{:>5}  success {:6.2}%  turns {:5.2}",
            p.episode, p.metrics.success_rate, p.metrics.avg_turns
        );
    }
    println!("auc {:.2}", curve_auc(&out.curve));
    Ok(())
}
