//! Crash injection for delivery tests.

use std::collections::HashSet;
use std::sync::Mutex;

use payroll_core::RunId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultPoint {
    /// After the job is leased, before anything is written.
    BeforeAppend,
    /// After the run is durably appended, before the job is acknowledged.
    AfterAppendBeforeAck,
}

pub trait FaultInjector: Send + Sync {
    /// True if the worker executing `attempt` of `run_id` should crash at `point`.
    fn crash(&self, point: FaultPoint, run_id: &RunId, attempt: u32) -> bool;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoFaults;

impl FaultInjector for NoFaults {
    fn crash(&self, _: FaultPoint, _: &RunId, _: u32) -> bool {
        false
    }
}

/// Crashes at an exact list of (attempt, point) pairs, for every run.
#[derive(Debug, Default, Clone)]
pub struct ScriptedFaults {
    crashes: HashSet<(u32, FaultPoint)>,
}

impl ScriptedFaults {
    pub fn new(crashes: impl IntoIterator<Item = (u32, FaultPoint)>) -> Self {
        ScriptedFaults { crashes: crashes.into_iter().collect() }
    }

    /// Crashes at `point` on every attempt.
    pub fn always(point: FaultPoint) -> Self {
        ScriptedFaults::new((1..=u32::from(u8::MAX)).map(|a| (a, point)))
    }
}

impl FaultInjector for ScriptedFaults {
    fn crash(&self, point: FaultPoint, _: &RunId, attempt: u32) -> bool {
        self.crashes.contains(&(attempt, point))
    }
}

/// Crashes with a fixed probability per fault point, from a seeded stream.
pub struct RandomFaults {
    rng: Mutex<ChaCha8Rng>,
    probability: f64,
}

impl RandomFaults {
    pub fn new(seed: u64, probability: f64) -> Self {
        RandomFaults { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)), probability }
    }
}

impl FaultInjector for RandomFaults {
    fn crash(&self, _: FaultPoint, _: &RunId, _: u32) -> bool {
        let mut rng = self.rng.lock().unwrap_or_else(|e| e.into_inner());
        rng.gen_bool(self.probability)
    }
}
