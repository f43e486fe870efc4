//! Experiment driver: each subcommand is an [`Experiment`] registered by
//! name, configured from a validated `key=value` map, and returning a
//! [`Report`] with an optional CSV table.

// `!(x >= y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod report;

use std::collections::BTreeMap;

pub use config::Config;
pub use error::{LabError, LabResult};
pub use report::{Report, Table, Verdict};

/// A named, self-validating experiment.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    /// Keys accepted in the configuration; anything else is rejected.
    fn keys(&self) -> &'static [&'static str];
    fn execute(&self, cfg: &Config) -> LabResult<Report>;

    fn run(&self, cfg: &Config) -> LabResult<Report> {
        cfg.validate(self.keys())?;
        self.execute(cfg)
    }
}

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, exp: Box<dyn Experiment>) -> &mut Self {
        self.entries.insert(exp.name(), exp);
        self
    }

    pub fn get(&self, name: &str) -> LabResult<&dyn Experiment> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| LabError::Config(format!("unknown experiment '{name}'")))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for ExperimentRegistry {
    /// All built-in experiments.
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(commands::trees::Trees))
            .register(Box::new(commands::lemmas::VerifyLemmas))
            .register(Box::new(commands::xi1_bound::Xi1Bound))
            .register(Box::new(commands::inflate::Inflate))
            .register(Box::new(commands::sweep::ScalingSweep))
            .register(Box::new(commands::oracle_compare::OracleCompare));
        r
    }
}

/// Runs the experiment `name` with `cfg`.
pub fn run(name: &str, cfg: &Config) -> LabResult<Report> {
    ExperimentRegistry::default().get(name)?.run(cfg)
}
