//! ID assignment by transmit/echo over `[N']`.
//!
//! Every participant draws one transmitting ID and `listen` listening IDs
//! (uniform over the other `N' - 1` IDs, repeats merged). ID `i` owns rounds
//! `2i` and `2i + 1`. In the first its transmitting holders transmit and its
//! listening holders listen; in the second a listener that heard a message
//! echoes while the transmitting holder listens. The holder gets the ID iff it
//! hears the echo, which needs exactly one transmitter and exactly one
//! listener.

use crate::channel::{Action, Feedback, Message};
use crate::proto::tournament::Medium;
use crate::rng::Stream;

/// Transmitting ID and sorted, distinct listening IDs.
pub fn draw_ids(stream: &mut Stream, space: u64, listen: u32) -> (u64, Vec<u64>) {
    let mut ls = Vec::with_capacity(listen as usize);
    let t = stream.below(space);
    draw_listening(stream, space, t, listen, &mut ls);
    (t, ls)
}

pub(crate) fn draw_listening(stream: &mut Stream, space: u64, t: u64, listen: u32, out: &mut Vec<u64>) {
    out.clear();
    if space < 2 {
        return;
    }
    for _ in 0..listen {
        let v = stream.below(space - 1);
        out.push(if v >= t { v + 1 } else { v });
    }
    out.sort_unstable();
    out.dedup();
}

/// Same draws as [`draw_listening`] with repeats dropped in first-seen order
/// instead of sorting. `seen` is indexed by ID and holds the mark of the last
/// draw that used it.
pub(crate) fn draw_listening_marked(
    stream: &mut Stream,
    space: u64,
    t: u64,
    listen: u32,
    seen: &mut [u32],
    mark: u32,
    out: &mut Vec<u64>,
) {
    out.clear();
    if space < 2 {
        return;
    }
    for _ in 0..listen {
        let v = stream.below(space - 1);
        let v = if v >= t { v + 1 } else { v };
        let slot = &mut seen[v as usize];
        if *slot != mark {
            *slot = mark;
            out.push(v);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Transmit,
    AwaitEcho,
    Listen(usize),
    Echo(usize),
}

/// One participant's side of an assignment phase starting at `start`.
#[derive(Clone, Debug)]
pub struct AssignDevice {
    start: u64,
    t: u64,
    listening: Vec<u64>,
    heard: Vec<bool>,
    steps: Vec<(u64, Step)>,
    next: usize,
    assigned: bool,
    me: u32,
}

impl AssignDevice {
    pub fn new(start: u64, t: u64, listening: Vec<u64>, me: u32) -> Self {
        let mut steps = vec![(2 * t, Step::Transmit), (2 * t + 1, Step::AwaitEcho)];
        for (k, &l) in listening.iter().enumerate() {
            steps.push((2 * l, Step::Listen(k)));
            steps.push((2 * l + 1, Step::Echo(k)));
        }
        steps.sort_unstable_by_key(|s| s.0);
        AssignDevice {
            start,
            t,
            heard: vec![false; listening.len()],
            listening,
            steps,
            next: 0,
            assigned: false,
            me,
        }
    }

    pub fn next_round(&mut self) -> Option<u64> {
        while let Some(&(r, step)) = self.steps.get(self.next) {
            if let Step::Echo(k) = step {
                if !self.heard[k] {
                    self.next += 1;
                    continue;
                }
            }
            return Some(self.start + r);
        }
        None
    }

    pub fn act(&mut self) -> Action {
        match self.steps[self.next].1 {
            Step::Transmit => Action::Transmit(Message::new(self.me, TAG_CLAIM, self.t)),
            Step::Echo(k) => Action::Transmit(Message::new(self.me, TAG_ECHO, self.listening[k])),
            Step::AwaitEcho | Step::Listen(_) => Action::Listen,
        }
    }

    pub fn observe(&mut self, feedback: Feedback) {
        let heard = feedback.message().is_some();
        match self.steps[self.next].1 {
            Step::AwaitEcho => self.assigned = heard,
            Step::Listen(k) => self.heard[k] = heard,
            Step::Transmit | Step::Echo(_) => {}
        }
        self.next += 1;
    }

    pub fn assigned(&self) -> Option<u64> {
        self.assigned.then_some(self.t)
    }
}

pub const TAG_CLAIM: u16 = 1;
pub const TAG_ECHO: u16 = 2;

/// Collective assignment: `draws[k]` belongs to device `devices[k]`.
/// Charges the ledger and returns `(id, device)` for every assigned ID.
pub fn play(
    space: u64,
    devices: &[u32],
    tx: &[u64],
    listening: &[Vec<u64>],
    medium: Medium,
    ledger: &mut [u64],
    counts: &mut AssignScratch,
) -> Vec<(u64, u32)> {
    counts.reset(space as usize);
    for (k, &t) in tx.iter().enumerate() {
        counts.tx[t as usize] += 1;
        counts.tx_owner[t as usize] = devices[k];
        for &l in &listening[k] {
            counts.listen[l as usize] += 1;
        }
    }
    for (k, &d) in devices.iter().enumerate() {
        let mut e = 2;
        for &l in &listening[k] {
            e += 1;
            if medium.heard(counts.tx[l as usize] as usize) {
                e += 1;
            }
        }
        ledger[d as usize] += e;
    }
    let mut out = Vec::new();
    for &t in tx {
        let i = t as usize;
        let echo_heard = medium.heard(counts.tx[i] as usize) && medium.heard(counts.listen[i] as usize);
        if echo_heard && counts.tx[i] == 1 {
            out.push((t, counts.tx_owner[i]));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Reusable per-ID counters for [`play`].
#[derive(Default)]
pub struct AssignScratch {
    tx: Vec<u32>,
    listen: Vec<u32>,
    tx_owner: Vec<u32>,
}

impl AssignScratch {
    fn reset(&mut self, space: usize) {
        for v in [&mut self.tx, &mut self.listen, &mut self.tx_owner] {
            v.clear();
            v.resize(space, 0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{run, CdModel, DeviceProgram, RunConfig, Status};
    use crate::rng::{derive_stream, Tag};

    struct P(AssignDevice);

    impl DeviceProgram for P {
        fn status(&self) -> Status {
            Status::Undecided
        }
        fn next_wake(&mut self, _from: u64) -> Option<u64> {
            self.0.next_round()
        }
        fn act(&mut self, _r: u64) -> Action {
            self.0.act()
        }
        fn observe(&mut self, _r: u64, fb: Feedback) {
            self.0.observe(fb)
        }
    }

    #[test]
    fn listening_ids_avoid_the_transmitting_id() {
        let mut s = derive_stream(3, 0, Tag::new("t"));
        for _ in 0..500 {
            let (t, ls) = draw_ids(&mut s, 7, 30);
            assert!(t < 7);
            assert!(ls.iter().all(|&l| l != t && l < 7));
            assert!(ls.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn lone_device_gets_nothing() {
        let mut p = vec![P(AssignDevice::new(0, 3, vec![0, 1, 5], 0))];
        run(&mut p, RunConfig::new(CdModel::NoCd)).unwrap();
        assert_eq!(p[0].0.assigned(), None);
    }

    #[test]
    fn two_devices_listening_to_each_other_both_get_ids() {
        let mut p = vec![
            P(AssignDevice::new(0, 0, vec![1], 0)),
            P(AssignDevice::new(0, 1, vec![0], 1)),
        ];
        let t = run(&mut p, RunConfig::new(CdModel::NoCd)).unwrap();
        assert_eq!(p[0].0.assigned(), Some(0));
        assert_eq!(p[1].0.assigned(), Some(1));
        assert_eq!(t.ledger.0, vec![4, 4]);
    }

    #[test]
    fn collective_matches_channel_on_random_draws() {
        for seed in 0..300u64 {
            let n = 1 + (seed % 9) as usize;
            let space = 2 + seed % 13;
            let listen = 1 + (seed % 4) as u32;
            let mut tx = Vec::new();
            let mut ls = Vec::new();
            for d in 0..n {
                let (t, l) = draw_ids(&mut derive_stream(seed, d as u64, Tag::new("x")), space, listen);
                tx.push(t);
                ls.push(l);
            }
            for model in [CdModel::NoCd, CdModel::SenderCd] {
                let mut progs: Vec<P> = (0..n)
                    .map(|d| P(AssignDevice::new(5, tx[d], ls[d].clone(), d as u32)))
                    .collect();
                let trace = run(&mut progs, RunConfig::new(model)).unwrap();
                let want: Vec<(u64, u32)> = progs
                    .iter()
                    .enumerate()
                    .filter_map(|(d, p)| p.0.assigned().map(|i| (i, d as u32)))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let mut ledger = vec![0; n];
                let devices: Vec<u32> = (0..n as u32).collect();
                let got = play(
                    space,
                    &devices,
                    &tx,
                    &ls,
                    Medium::new(model, false),
                    &mut ledger,
                    &mut AssignScratch::default(),
                );
                assert_eq!(got, want, "seed {seed}");
                assert_eq!(ledger, trace.ledger.0, "seed {seed}");
                assert!(ledger.iter().all(|&e| e <= 2 + 2 * listen as u64));
            }
        }
    }
}
