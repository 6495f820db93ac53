//! Round-synchronous multiple-access channel.
//!
//! Devices act in lockstep. In every round each device transmits, listens or
//! stays idle, and the channel answers according to one of four
//! collision-detection models. Rounds are numbered from 0 internally; the
//! trace reports the termination round 1-based so that it equals the number
//! of rounds elapsed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use crate::error::{Error, Result};

pub const DEFAULT_WATCHDOG: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CdModel {
    StrongCd,
    SenderCd,
    ReceiverCd,
    NoCd,
}

impl CdModel {
    pub const ALL: [CdModel; 4] = [
        CdModel::StrongCd,
        CdModel::SenderCd,
        CdModel::ReceiverCd,
        CdModel::NoCd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CdModel::StrongCd => "strong-cd",
            CdModel::SenderCd => "sender-cd",
            CdModel::ReceiverCd => "receiver-cd",
            CdModel::NoCd => "no-cd",
        }
    }

    pub fn parse(s: &str) -> Option<CdModel> {
        CdModel::ALL.into_iter().find(|m| m.name() == s)
    }

    fn transmitters_hear_outcome(self) -> bool {
        matches!(self, CdModel::StrongCd | CdModel::SenderCd)
    }

    fn detects_collision(self) -> bool {
        matches!(self, CdModel::StrongCd | CdModel::ReceiverCd)
    }
}

/// Message contents. Bandwidth is not modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub sender: u32,
    pub tag: u16,
    pub claim: u64,
}

impl Message {
    pub fn new(sender: u32, tag: u16, claim: u64) -> Self {
        Message { sender, tag, claim }
    }

    pub fn to_bytes(self) -> [u8; 14] {
        let mut out = [0u8; 14];
        out[..4].copy_from_slice(&self.sender.to_le_bytes());
        out[4..6].copy_from_slice(&self.tag.to_le_bytes());
        out[6..].copy_from_slice(&self.claim.to_le_bytes());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Transmit(Message),
    Listen,
    Idle,
}

impl Action {
    pub fn is_idle(&self) -> bool {
        matches!(self, Action::Idle)
    }

    pub fn code(&self) -> char {
        match self {
            Action::Transmit(_) => 'T',
            Action::Listen => 'L',
            Action::Idle => 'I',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    None,
    Silence,
    Collision,
    Message(Message),
}

impl Feedback {
    pub fn code(&self) -> char {
        match self {
            Feedback::None => 'N',
            Feedback::Silence => 'S',
            Feedback::Collision => 'C',
            Feedback::Message(_) => 'M',
        }
    }

    pub fn message(&self) -> Option<Message> {
        match self {
            Feedback::Message(m) => Some(*m),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Status {
    #[default]
    Undecided,
    Leader,
    NonLeader,
}

/// A resumable per-device state machine.
///
/// The runner only wakes a device in rounds it asked for through
/// [`DeviceProgram::next_wake`]; all other rounds are idle for that device and
/// it is not notified of them (an idle device receives no feedback anyway).
pub trait DeviceProgram {
    fn status(&self) -> Status;

    /// Earliest round `>= from` in which the device may be non-idle, or
    /// `None` once it will stay idle forever.
    fn next_wake(&mut self, from: u64) -> Option<u64>;

    fn act(&mut self, round: u64) -> Action;

    fn observe(&mut self, round: u64, feedback: Feedback);
}

/// Channel response for every device given everyone's action this round.
pub fn arbitrate(actions: &[Action], model: CdModel) -> Vec<Feedback> {
    let mut transmitters = 0usize;
    let mut solo = None;
    for a in actions {
        if let Action::Transmit(m) = a {
            transmitters += 1;
            solo = Some(*m);
        }
    }
    let heard = match transmitters {
        0 => Feedback::Silence,
        1 => Feedback::Message(solo.expect("one transmitter")),
        _ if model.detects_collision() => Feedback::Collision,
        _ => Feedback::Silence,
    };
    let echo = if !model.transmitters_hear_outcome() {
        Feedback::None
    } else {
        match (transmitters, model) {
            (1, _) => heard,
            (_, CdModel::StrongCd) => Feedback::Collision,
            _ => Feedback::Silence,
        }
    };
    actions
        .iter()
        .map(|a| match a {
            Action::Idle => Feedback::None,
            Action::Listen => heard,
            Action::Transmit(_) => echo,
        })
        .collect()
}

/// Feedback under the forced-silence harness.
pub fn silent_feedback(action: &Action) -> Feedback {
    match action {
        Action::Listen => Feedback::Silence,
        _ => Feedback::None,
    }
}

/// Exactly one leader transmits and every other device is a listening
/// non-leader.
pub fn is_terminated(actions: &[Action], statuses: &[Status]) -> bool {
    assert_eq!(actions.len(), statuses.len());
    let mut leaders = 0;
    for (a, s) in actions.iter().zip(statuses) {
        match (s, a) {
            (Status::Leader, Action::Transmit(_)) => leaders += 1,
            (Status::NonLeader, Action::Listen) => {}
            _ => return false,
        }
    }
    leaders == 1
}

/// Per-device count of non-idle rounds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnergyLedger(pub Vec<u64>);

impl EnergyLedger {
    pub fn new(devices: usize) -> Self {
        EnergyLedger(vec![0; devices])
    }

    pub fn charge(&mut self, device: usize) {
        self.0[device] += 1;
    }

    pub fn get(&self, device: usize) -> u64 {
        self.0[device]
    }

    pub fn max(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().sum::<u64>() as f64 / self.0.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Non-idle activity of one round (0-based round index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub entries: Vec<(u32, Action, Feedback)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub devices: usize,
    /// Recorded rounds in which at least one device was non-idle. Empty
    /// unless recording was requested.
    pub rounds: Vec<RoundRecord>,
    /// 1-based round in which the termination predicate first held.
    pub termination_round: Option<u64>,
    /// Rounds elapsed until termination or until the last device finished.
    pub elapsed: u64,
    pub ledger: EnergyLedger,
}

impl Trace {
    /// One row per device for every recorded round:
    /// `round,device,action,feedback,energy_so_far` (round 1-based).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "round,device,action,feedback,energy_so_far")?;
        let mut energy = vec![0u64; self.devices];
        for rec in &self.rounds {
            let mut row: Vec<(Action, Feedback)> =
                vec![(Action::Idle, Feedback::None); self.devices];
            for (d, a, f) in &rec.entries {
                row[*d as usize] = (*a, *f);
                if !a.is_idle() {
                    energy[*d as usize] += 1;
                }
            }
            for (d, (a, f)) in row.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    rec.round + 1,
                    d,
                    a.code(),
                    f.code(),
                    energy[d]
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub model: CdModel,
    pub watchdog: u64,
    pub silent_harness: bool,
    pub record: bool,
}

impl RunConfig {
    pub fn new(model: CdModel) -> Self {
        RunConfig {
            model,
            watchdog: DEFAULT_WATCHDOG,
            silent_harness: false,
            record: false,
        }
    }

    pub fn watchdog(mut self, rounds: u64) -> Self {
        self.watchdog = rounds;
        self
    }

    pub fn silent(mut self, on: bool) -> Self {
        self.silent_harness = on;
        self
    }

    pub fn record(mut self, on: bool) -> Self {
        self.record = on;
        self
    }
}

/// Step all programs in lockstep until termination, until every program is
/// finished, or until the watchdog fires.
pub fn run<P: DeviceProgram>(programs: &mut [P], cfg: RunConfig) -> Result<Trace> {
    if cfg.watchdog == 0 {
        return Err(Error::InvalidParams("watchdog must be at least 1".into()));
    }
    if programs.is_empty() {
        return Err(Error::InvalidParams("at least one device".into()));
    }
    let n = programs.len();
    let mut ledger = EnergyLedger::new(n);
    let mut queue: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    for (i, p) in programs.iter_mut().enumerate() {
        if let Some(r) = p.next_wake(0) {
            queue.push(Reverse((r, i as u32)));
        }
    }
    let mut rounds = Vec::new();
    let mut woken: Vec<u32> = Vec::new();
    let mut actions: Vec<Action> = Vec::new();
    let mut elapsed = 0;
    while let Some(&Reverse((round, _))) = queue.peek() {
        if round >= cfg.watchdog {
            return Err(Error::WatchdogExceeded {
                rounds: cfg.watchdog,
            });
        }
        woken.clear();
        while let Some(&Reverse((r, d))) = queue.peek() {
            if r != round {
                break;
            }
            queue.pop();
            if woken.last() != Some(&d) {
                woken.push(d);
            }
        }
        actions.clear();
        actions.extend(woken.iter().map(|&d| programs[d as usize].act(round)));
        let feedback = if cfg.silent_harness {
            actions.iter().map(silent_feedback).collect()
        } else {
            arbitrate(&actions, cfg.model)
        };
        let mut active = 0;
        for ((&d, a), f) in woken.iter().zip(&actions).zip(&feedback) {
            if !a.is_idle() {
                ledger.charge(d as usize);
                active += 1;
                programs[d as usize].observe(round, *f);
            }
        }
        if active > 0 {
            elapsed = round + 1;
        }
        if cfg.record && active > 0 {
            rounds.push(RoundRecord {
                round,
                entries: woken
                    .iter()
                    .zip(&actions)
                    .zip(&feedback)
                    .filter(|((_, a), _)| !a.is_idle())
                    .map(|((&d, a), f)| (d, *a, *f))
                    .collect(),
            });
        }
        if active == n {
            let statuses: Vec<Status> = woken.iter().map(|&d| programs[d as usize].status()).collect();
            if is_terminated(&actions, &statuses) {
                return Ok(Trace {
                    devices: n,
                    rounds,
                    termination_round: Some(round + 1),
                    elapsed: round + 1,
                    ledger,
                });
            }
        }
        for &d in &woken {
            if let Some(r) = programs[d as usize].next_wake(round + 1) {
                debug_assert!(r > round);
                queue.push(Reverse((r, d)));
            }
        }
    }
    Ok(Trace {
        devices: n,
        rounds,
        termination_round: None,
        elapsed,
        ledger,
    })
}

/// Cuts a program off at round `t`: it stays idle from then on.
#[derive(Clone, Debug)]
pub struct Horizon<P> {
    pub inner: P,
    pub t: u64,
}

impl<P: DeviceProgram> DeviceProgram for Horizon<P> {
    fn status(&self) -> Status {
        self.inner.status()
    }

    fn next_wake(&mut self, from: u64) -> Option<u64> {
        if from >= self.t {
            return None;
        }
        self.inner.next_wake(from).filter(|&r| r < self.t)
    }

    fn act(&mut self, round: u64) -> Action {
        self.inner.act(round)
    }

    fn observe(&mut self, round: u64, feedback: Feedback) {
        self.inner.observe(round, feedback)
    }
}

/// A fixed action script, mostly useful for tests and action tables.
#[derive(Clone, Debug)]
pub struct Scripted {
    pub script: Vec<Action>,
    pub status_after: Vec<Option<Status>>,
    status: Status,
    adopt_on_message: bool,
}

impl Scripted {
    pub fn new(script: Vec<Action>) -> Self {
        let len = script.len();
        Scripted {
            script,
            status_after: vec![None; len],
            status: Status::Undecided,
            adopt_on_message: false,
        }
    }

    /// Claim `status` from round `round` onwards (set before acting).
    pub fn with_status(mut self, round: usize, status: Status) -> Self {
        self.status_after[round] = Some(status);
        self
    }

    /// Become a non-leader whenever a message is heard.
    pub fn follower(mut self) -> Self {
        self.adopt_on_message = true;
        self
    }
}

impl DeviceProgram for Scripted {
    fn status(&self) -> Status {
        self.status
    }

    fn next_wake(&mut self, from: u64) -> Option<u64> {
        let start = usize::try_from(from).ok()?;
        self.script
            .iter()
            .enumerate()
            .skip(start)
            .find(|(_, a)| !a.is_idle())
            .map(|(i, _)| i as u64)
    }

    fn act(&mut self, round: u64) -> Action {
        let r = round as usize;
        if let Some(s) = self.status_after.get(r).copied().flatten() {
            self.status = s;
        }
        self.script.get(r).copied().unwrap_or(Action::Idle)
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) {
        if self.adopt_on_message && feedback.message().is_some() && self.status == Status::Undecided {
            self.status = Status::NonLeader;
        }
    }
}
