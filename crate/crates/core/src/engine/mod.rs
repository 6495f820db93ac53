//! Executors for protocols described by a [`plan::PlanBook`].
//!
//! [`Executor::Channel`] steps per-device state machines through the channel
//! round by round and can record a full trace. [`Executor::Population`]
//! plays each stage for all devices at once. Both produce the same result.

pub mod device;
pub mod plan;
pub mod population;

use std::sync::Arc;

use crate::channel::{self, CdModel, DeviceProgram, RunConfig, Status, Trace, DEFAULT_WATCHDOG};
use crate::error::{Error, Result};
use crate::rng::Keying;
use device::Device;
use plan::PlanBook;
pub use population::SimResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Executor {
    Channel,
    Population,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub model: CdModel,
    pub silent: bool,
    pub watchdog: u64,
    pub executor: Executor,
    pub record: bool,
}

impl RunOptions {
    pub fn new(model: CdModel) -> Self {
        RunOptions {
            model,
            silent: false,
            watchdog: DEFAULT_WATCHDOG,
            executor: Executor::Population,
            record: false,
        }
    }

    pub fn executor(mut self, e: Executor) -> Self {
        self.executor = e;
        self
    }

    pub fn watchdog(mut self, w: u64) -> Self {
        self.watchdog = w;
        self
    }

    pub fn silent(mut self, on: bool) -> Self {
        self.silent = on;
        self
    }

    pub fn record(mut self, on: bool) -> Self {
        self.record = on;
        self.executor = Executor::Channel;
        self
    }
}

/// Run `n` devices through `book`. The trace is returned only for the
/// channel executor.
pub fn execute(book: &Arc<PlanBook>, n: usize, keys: &Keying, opts: RunOptions) -> Result<(SimResult, Option<Trace>)> {
    if n == 0 {
        return Err(Error::InvalidParams("at least one device".into()));
    }
    if opts.watchdog == 0 {
        return Err(Error::InvalidParams("watchdog must be at least 1".into()));
    }
    match opts.executor {
        Executor::Population => Ok((
            population::simulate(book, n, keys, opts.model, opts.silent, opts.watchdog)?,
            None,
        )),
        Executor::Channel => {
            let mut devices: Vec<Device> = (0..n as u32)
                .map(|d| Device::new(book.clone(), keys.device(d), d))
                .collect();
            let cfg = RunConfig::new(opts.model)
                .watchdog(opts.watchdog)
                .silent(opts.silent)
                .record(opts.record);
            let trace = channel::run(&mut devices, cfg)?;
            if let Some(e) = devices.iter().find_map(|d| d.error.clone()) {
                return Err(e);
            }
            let leader = devices.iter().position(|d| d.status() == Status::Leader);
            let (time, iterations) = match (trace.termination_round, leader) {
                (Some(t), Some(l)) => (t, devices[l].iteration() + 1),
                _ => {
                    let mut k = 0;
                    let mut end = 0;
                    while let Some(p) = book.get(k)? {
                        end = p.end;
                        k += 1;
                    }
                    (end, k)
                }
            };
            let mut slot_winners = Vec::with_capacity(iterations);
            for k in 0..iterations {
                let p = book.get(k)?.expect("played iteration");
                let slots = p.multi.instances.len() + usize::from(p.sub.is_some());
                let mut w = vec![Vec::new(); slots];
                for (d, dev) in devices.iter().enumerate() {
                    for &(it, slot) in &dev.slots {
                        if it == k {
                            w[slot as usize].push(d as u32);
                        }
                    }
                }
                slot_winners.push(w);
            }
            let result = SimResult {
                leader: leader.filter(|_| trace.termination_round.is_some()).map(|l| l as u32),
                time,
                iterations: iterations as u32,
                ledger: trace.ledger.0.clone(),
                slot_winners,
            };
            Ok((result, Some(trace)))
        }
    }
}
