//! Finite-difference check of every loss head on random networks.

use advdialog::nn::{grad_check, BceHead, DenseNet, LossHead, NetShape, PolicyHead, SquaredTdHead};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type MakeHead = Box<dyn Fn(&mut ChaCha8Rng) -> Box<dyn LossHead>>;

fn main() -> advdialog::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let heads: Vec<(&str, usize, MakeHead)> = vec![
        (
            "policy",
            5,
            Box::new(|r| {
                Box::new(PolicyHead {
                    action: r.gen_range(0..5),
                    advantage: r.gen_range(-3.0..3.0),
                    entropy_coef: 0.0,
                })
            }),
        ),
        (
            "critic",
            1,
            Box::new(|r| {
                Box::new(SquaredTdHead {
                    target: r.gen_range(-5.0..5.0),
                })
            }),
        ),
        (
            "discriminator",
            1,
            Box::new(|r| {
                Box::new(BceHead {
                    label: (r.gen_range(0..2)) as f64,
                    clamp: 1e-6,
                })
            }),
        ),
    ];
    for (name, out, make) in &heads {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let net = DenseNet::init(NetShape::new(6, 8, *out), &mut rng);
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let head = make(&mut rng);
            worst = worst.max(grad_check(&net, &x, head.as_ref(), 1e-5)?);
        }
        println!("{name:<14} max relative error {worst:.2e}");
    }
    Ok(())
}
