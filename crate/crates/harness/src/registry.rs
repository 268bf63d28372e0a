//! Named experiments behind a common trait, selected at runtime.

use crate::config::Config;
use crate::error::HarnessError;
use crate::experiments::{Dynamics, KCurves, Properties, ShiftSweep};
use crate::output::ResultBundle;

pub struct RunContext<'a> {
    pub config: &'a Config,
    pub seed: u64,
}

pub trait Experiment: Send + Sync {
    /// CLI subcommand and output directory name.
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultBundle, HarnessError>;
}

/// Experiments in registration order; `all` runs them in this order.
pub struct ExperimentRegistry {
    entries: Vec<Box<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(KCurves));
        r.register(Box::new(ShiftSweep));
        r.register(Box::new(Dynamics));
        r.register(Box::new(Properties));
        r
    }
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Adds an experiment, replacing any existing one with the same name.
    pub fn register(&mut self, e: Box<dyn Experiment>) {
        match self.entries.iter().position(|x| x.name() == e.name()) {
            Some(i) => self.entries[i] = e,
            None => self.entries.push(e),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.entries.iter().find(|e| e.name() == name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.iter().map(|e| e.as_ref())
    }
}
