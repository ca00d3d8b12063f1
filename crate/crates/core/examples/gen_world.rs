//! Generates the synthetic movie world and prints a few showings and goals.
//!
//! `cargo run --example gen_world -- [seed]`

use advdialog::config::RunConfig;

fn main() -> advdialog::Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(seed) = std::env::args().nth(1) {
        cfg.world.seed = seed.parse().expect("seed");
    }
    let world = cfg.build_world()?;
    let ont = &world.ontology;
    println!(
        "{} slots, {} actions, {} showings, {} goals",
        ont.len(),
        world.actions.len(),
        world.kb.len(),
        world.goals.len()
    );
    for row in world.kb.rows().iter().take(3) {
        let attrs: Vec<String> = world
            .attribute_slots()
            .into_iter()
            .take(6)
            .map(|s| format!("{}={}", ont.name(s), row.get(s)))
            .collect();
        println!("showing: {}", attrs.join(", "));
    }
    for g in world.goals.iter().take(5) {
        println!("goal: {}", g.render(ont));
    }
    Ok(())
}
