//! Adversarial advantage actor-critic for task-completion dialogue policies.
//!
//! A movie-ticket booking environment (ontology, knowledge base, agenda-based
//! simulated user) is driven through semantic frames. Agents are a
//! hand-written rule policy, plain A2C, and A2C with a discriminator that
//! turns expert-likeness of state-action pairs into an intrinsic reward.
//!
//! ```no_run
//! use advdialog::config::RunConfig;
//! use advdialog::trainer::train_a2c;
//!
//! let cfg = RunConfig::default();
//! let mut env = cfg.build_env()?;
//! let out = train_a2c(&mut env, &cfg.train_config(), 1)?;
//! println!("{:?}", out.curve.last());
//! # Ok::<(), advdialog::Error>(())
//! ```

pub mod a2c;
pub mod adversarial;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod domain;
pub mod env;
pub mod error;
pub mod log;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};
