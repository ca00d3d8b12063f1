//! Collects successful dialogues from the rule-pretrained actor and saves
//! them in a checkpoint container.

use advdialog::checkpoint::{Checkpoint, Entry};
use advdialog::config::RunConfig;
use advdialog::pipeline::collect_from;
use advdialog::trainer::pretrained_learner;

fn main() -> advdialog::Result<()> {
    let cfg = RunConfig::default();
    let mut env = cfg.build_env()?;
    let (learner, report) = pretrained_learner(&mut env, &cfg.train_config(), 1)?;
    println!("imitation accuracy {:.3}", report.accuracy);
    let (demos, attempts) = collect_from(&learner.actor, &mut env, 10, 1000, 1)?;
    println!(
        "{} dialogues, {} pairs, {attempts} attempts",
        demos.episodes().len(),
        demos.len()
    );
    let path = std::env::temp_dir().join("advdialog-demos.ckpt");
    let mut c = Checkpoint::new();
    c.insert("demos", Entry::Demos(demos));
    c.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
