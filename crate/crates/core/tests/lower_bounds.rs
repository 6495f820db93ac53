use macleader::adversary::table::Act;
use macleader::adversary::{
    certify_no_success, energy_profile, find_matching_sequence, iteration_end, lasvegas_silent_energy,
    lowest_energy_half, silent_trace_energy,
};
use macleader::calibration::Calibration;
use macleader::channel::{run, CdModel, Horizon, RunConfig, Scripted};
use macleader::derandomize::{election_plan, export_action_table, search_seed, verify_all_subsets, SeedMap};
use macleader::engine::device::Device;
use macleader::engine::plan::{Algorithm, IterationPlan, PlanBook};
use macleader::proto::basic::{assign_tag, BasicPlan};
use macleader::proto::multi::MultiPlan;
use macleader::rng::Keying;

#[test]
fn certified_algorithm_is_deterministic_and_within_budget() {
    let cal = Calibration::default();
    let cert = search_seed(8, 4, &cal, 1000, 7).unwrap();
    let plan = election_plan(8, 4, &cal).unwrap();
    assert_eq!(cert.verdict.time, plan.len());
    assert!(cert.verdict.max_energy <= plan.energy_bound());
    assert_eq!(verify_all_subsets(&cert.phi, 4, &cal).unwrap(), cert.verdict);
}

#[test]
fn exported_table_agrees_with_the_simulator() {
    let cal = Calibration::default();
    let cert = search_seed(8, 4, &cal, 1000, 2).unwrap();
    let t = cert.verdict.time;
    let table = export_action_table(&cert.phi, 4, &cal, t).unwrap();
    assert_eq!((table.n(), table.t()), (8, t as usize));

    // Replaying the table under silence costs exactly its profile.
    let mut replay: Vec<Scripted> = (0..8)
        .map(|j| Scripted::new(table.row(j).iter().map(|a| a.to_action(j as u32)).collect()))
        .collect();
    let trace = run(&mut replay, RunConfig::new(CdModel::NoCd).silent(true)).unwrap();
    let k: Vec<u64> = energy_profile(&table).into_iter().map(u64::from).collect();
    assert_eq!(trace.ledger.0, k);

    // And so does the protocol itself, all devices together.
    let plan = election_plan(8, 4, &cal).unwrap();
    let book = PlanBook::fixed(vec![IterationPlan::standalone(MultiPlan::from_plans(vec![plan]), None)]);
    let mut live: Vec<Horizon<Device>> = (0..8u32)
        .map(|x| Horizon {
            inner: Device::new(book.clone(), cert.phi.rng(x), x),
            t,
        })
        .collect();
    let trace = run(&mut live, RunConfig::new(CdModel::NoCd).silent(true).watchdog(t)).unwrap();
    assert_eq!(trace.ledger.0, k);
}

#[test]
fn first_block_transmits_at_the_drawn_id() {
    let cal = Calibration::default();
    let plan: BasicPlan = election_plan(8, 4, &cal).unwrap();
    assert!(plan.repeated);
    for master in 0..5 {
        let phi = SeedMap::candidate(8, master);
        let table = export_action_table(&phi, 4, &cal, 2 * plan.id_space).unwrap();
        for x in 0..8u32 {
            let tx = phi.rng(x).stream(assign_tag(0, 0)).below(plan.id_space) as usize;
            let sends: Vec<usize> = (0..table.t()).filter(|&r| table.get(x as usize, r) == Act::Transmit).collect();
            assert_eq!(sends, vec![2 * tx], "ID {x}");
        }
    }
}

#[test]
fn adversary_set_stays_below_every_correct_size() {
    let cal = Calibration::default();
    for (n, nt) in [(8u64, 4u64), (8, 2), (12, 4)] {
        let cert = search_seed(n, nt, &cal, 1000, 1).unwrap();
        let table = export_action_table(&cert.phi, nt, &cal, cert.verdict.time).unwrap();
        for subset in [lowest_energy_half(&table), (0..n as usize).collect()] {
            let m = find_matching_sequence(&table, &subset);
            assert!(certify_no_success(&table, &m.matched, table.t()));
            assert!(m.matched.len() as u64 <= nt / 2, "N = {n}, ntilde = {nt}: {:?}", m.matched);
        }
    }
}

#[test]
fn silent_energy_agrees_across_executors() {
    let cal = Calibration::default();
    for (algo, iterations) in [(Algorithm::NoCd, 2u32), (Algorithm::SenderCd { eps: 1.0 }, 1)] {
        let t = iteration_end(algo, &cal, iterations).unwrap();
        let generic = silent_trace_energy(
            |s| {
                let book = PlanBook::iterative(algo, cal.clone(), s);
                (0..6u32)
                    .map(|d| Device::new(book.clone(), Keying::Shared(s).device(d), d))
                    .collect()
            },
            t,
            3,
            5,
        )
        .unwrap();
        let collective = lasvegas_silent_energy(algo, &cal, iterations, 6, 3, 5).unwrap();
        assert!((generic - collective).abs() < 1e-9, "{generic} vs {collective}");
        assert!(generic > 0.0);
    }
}

#[test]
fn silent_energy_of_one_election_is_within_its_bound() {
    let cal = Calibration::default();
    let plan = BasicPlan::new(1, 2.0, &cal).unwrap();
    let book = PlanBook::fixed(vec![IterationPlan::standalone(MultiPlan::from_plans(vec![plan]), None)]);
    let e = silent_trace_energy(
        |s| (0..4u32).map(|d| Device::new(book.clone(), Keying::Shared(s).device(d), d)).collect(),
        plan.len(),
        20,
        3,
    )
    .unwrap();
    assert!(e > 0.0 && e <= plan.energy_bound() as f64, "{e} vs {}", plan.energy_bound());
}
