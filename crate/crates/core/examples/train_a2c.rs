//! Plain A2C from a rule-pretrained actor; prints the learning curve.
//!
//! `cargo run --release --example train_a2c -- [seed] [episodes]`

use advdialog::config::RunConfig;
use advdialog::trainer::{curve_auc, train_a2c};

fn main() -> advdialog::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let cfg = RunConfig::default();
    let mut t = cfg.train_config();
    if let Some(n) = args.next() {
        t.episodes = n.parse().expect("episodes");
    }
    let mut env = cfg.build_env()?;
    let out = train_a2c(&mut env, &t, seed)?;
    println!("pretrain accuracy {:.3}", out.pretrain.accuracy);
    for p in &out.curve {
        println!(
            "{:>5}  success {:6.2}%  turns {:5.2}",
            p.episode, p.metrics.success_rate, p.metrics.avg_turns
        );
    }
    println!("auc {:.2}", curve_auc(&out.curve));
    Ok(())
}
