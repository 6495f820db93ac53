use macleader::calibration::Calibration;
use macleader::channel::CdModel;
use macleader::engine::plan::{Algorithm, PlanBook};
use macleader::engine::{execute, Executor, RunOptions};
use macleader::lasvegas::sendercd_subroutine;
use macleader::proto::basic_elect;
use macleader::rng::Keying;

fn both(book: &std::sync::Arc<PlanBook>, n: usize, keys: &Keying, opts: RunOptions) {
    let (a, _) = execute(book, n, keys, opts.executor(Executor::Channel)).unwrap();
    let (b, _) = execute(book, n, keys, opts.executor(Executor::Population)).unwrap();
    assert_eq!(a, b, "n = {n}, keys = {keys:?}");
}

#[test]
fn lasvegas_executors_agree() {
    let cal = Calibration::default();
    for seed in 0..12u64 {
        for n in [2usize, 3, 5, 9, 17] {
            for (algo, model) in [
                (Algorithm::NoCd, CdModel::NoCd),
                (Algorithm::SenderCd { eps: 1.0 }, CdModel::SenderCd),
            ] {
                let book = PlanBook::iterative(algo, cal.clone(), seed);
                both(&book, n, &Keying::Shared(seed), RunOptions::new(model));
            }
        }
    }
}

#[test]
fn standalone_executors_agree() {
    let cal = Calibration::default();
    for seed in 0..40u64 {
        for (n, n_tilde) in [(2usize, 2u64), (5, 8), (40, 64), (3, 2)] {
            let keys = Keying::Shared(seed);
            let opts = RunOptions::new(CdModel::NoCd);
            let a = basic_elect(n, n_tilde, 0.25, &cal, &keys, opts.executor(Executor::Channel)).unwrap();
            let b = basic_elect(n, n_tilde, 0.25, &cal, &keys, opts).unwrap();
            assert_eq!(a, b);
        }
        for n in [1usize, 2, 6] {
            let opts = RunOptions::new(CdModel::SenderCd);
            let a = sendercd_subroutine(8, n, &cal, seed, opts.executor(Executor::Channel)).unwrap();
            let b = sendercd_subroutine(8, n, &cal, seed, opts).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn silent_harness_executors_agree() {
    let cal = Calibration::default();
    for seed in 0..3u64 {
        let keys = Keying::Shared(seed);
        let opts = RunOptions::new(CdModel::NoCd).silent(true);
        let a = basic_elect(6, 2, 0.25, &cal, &keys, opts.executor(Executor::Channel)).unwrap();
        let b = basic_elect(6, 2, 0.25, &cal, &keys, opts).unwrap();
        assert_eq!(a, b);
        assert!(a.leaders.iter().all(|l| l.is_empty()));
    }
}
