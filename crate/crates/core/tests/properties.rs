use macleader::adversary::hitting::build_hitting_multiset;
use macleader::adversary::table::{Act, ActionTable};
use macleader::adversary::{certify_no_success, energy_profile, expected_matches, find_matching_sequence, matches};
use macleader::channel::{run, Action, CdModel, Feedback, RunConfig, Scripted};
use macleader::derandomize::{failure_matches_count, subset_count, target_failure};
use macleader::harness::SummaryStats;
use macleader::proto::multi::pack_groups;
use proptest::prelude::*;

fn act() -> impl Strategy<Value = Act> {
    prop_oneof![Just(Act::Transmit), Just(Act::Listen), Just(Act::Idle)]
}

fn table(max_n: usize, max_t: usize) -> impl Strategy<Value = ActionTable> {
    (1..=max_n, 1..=max_t).prop_flat_map(|(n, t)| {
        prop::collection::vec(prop::collection::vec(act(), t), n).prop_map(|rows| ActionTable::new(rows).unwrap())
    })
}

fn scripts(t: &ActionTable) -> Vec<Scripted> {
    (0..t.n())
        .map(|j| Scripted::new(t.row(j).iter().map(|a| a.to_action(j as u32)).collect()))
        .collect()
}

/// Best matched count over every b-sequence, by brute force.
fn best_matching(t: &ActionTable, subset: &[usize]) -> usize {
    (0u32..1 << t.t())
        .map(|mask| {
            let b: Vec<Act> = (0..t.t())
                .map(|i| if mask >> i & 1 == 1 { Act::Transmit } else { Act::Listen })
                .collect();
            subset.iter().filter(|&&j| matches(t, j, &b)).count()
        })
        .max()
        .unwrap()
}

proptest! {
    #[test]
    fn silent_runs_only_deliver_silence(t in table(6, 12)) {
        let mut p = scripts(&t);
        let trace = run(&mut p, RunConfig::new(CdModel::StrongCd).silent(true).record(true)).unwrap();
        for r in &trace.rounds {
            for (_, a, f) in &r.entries {
                match a {
                    Action::Listen => prop_assert_eq!(*f, Feedback::Silence),
                    _ => prop_assert_eq!(*f, Feedback::None),
                }
            }
        }
    }

    #[test]
    fn replayed_table_ledger_is_its_profile(t in table(8, 16)) {
        let mut p = scripts(&t);
        let trace = run(&mut p, RunConfig::new(CdModel::NoCd).silent(true)).unwrap();
        let k: Vec<u64> = energy_profile(&t).into_iter().map(u64::from).collect();
        prop_assert_eq!(trace.ledger.0, k);
    }

    #[test]
    fn matching_sequence_is_sound(t in table(64, 32)) {
        let all: Vec<usize> = (0..t.n()).collect();
        let m = find_matching_sequence(&t, &all);
        prop_assert!(m.b.iter().all(|&a| a != Act::Idle));
        for &j in &m.matched {
            prop_assert!(matches(&t, j, &m.b));
        }
        prop_assert!(certify_no_success(&t, &m.matched, t.t()));
        prop_assert!(m.matched.len() as f64 >= expected_matches(&t, &all) - 1e-9);
    }

    #[test]
    fn greedy_is_bracketed_by_bound_and_brute_force(t in table(8, 10)) {
        let all: Vec<usize> = (0..t.n()).collect();
        let m = find_matching_sequence(&t, &all);
        prop_assert!(m.matched.len() <= best_matching(&t, &all));
        prop_assert!(m.matched.len() as f64 >= expected_matches(&t, &all) - 1e-9);
    }

    #[test]
    fn packing_bounds(p in prop::collection::vec(0.001f64..=1.0, 1..60)) {
        let groups = pack_groups(&p).unwrap();
        let mut seen: Vec<usize> = groups.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..p.len()).collect::<Vec<_>>());
        let total: f64 = p.iter().sum();
        prop_assert!(groups.len() as f64 <= 1.0 + 2.0 * total + 1e-9);
        for (g, members) in groups.iter().enumerate() {
            let mass: f64 = members.iter().map(|&i| p[i]).sum();
            prop_assert!(mass <= 1.0 + 1e-9);
            if g + 1 < groups.len() {
                prop_assert!(mass >= 0.5 - 1e-9);
            }
        }
    }

    #[test]
    fn target_failure_reconstructs_the_count(big_n in 2u64..40, log in 1u32..5) {
        let nt = 1u64 << log;
        prop_assume!(nt <= big_n);
        let f = target_failure(big_n, nt).unwrap();
        prop_assert!(failure_matches_count(&f, big_n, nt).unwrap());
        prop_assert!(subset_count(big_n, nt).unwrap() > 0u32.into());
    }

    #[test]
    fn summary_order(v in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let s = SummaryStats::of(&v).unwrap();
        prop_assert!(s.min <= s.median && s.median <= s.p95 && s.p95 <= s.max);
        prop_assert!(s.stderr >= 0.0);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
    }

    #[test]
    fn hitting_sets_respect_size_bounds(log in 2u32..7, reps in 1u32..20, seed in any::<u64>()) {
        let n = 1u32 << log;
        let h = build_hitting_multiset(n, reps, seed).unwrap();
        let lo = (n as f64).sqrt();
        for (k, s) in h.sizes().into_iter().enumerate() {
            prop_assert!(f64::from(s) >= lo && s <= n);
            prop_assert_eq!(h.members(k).len() as u32, s);
        }
    }
}
