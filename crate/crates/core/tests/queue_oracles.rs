mod common;

use common::{replicate, single_queue, t_interval};
use payload_te::metrics::{md1_mean_sojourn, mm1_mean_sojourn, mm1k_blocking};
use payload_te::queuesim::Service;

const MU: f64 = 100e3;

fn delays(runs: &[payload_te::RunMetrics]) -> Vec<f64> {
    runs.iter().map(|r| r.mean_delay().unwrap()).collect()
}

#[test]
fn mm1_interval_covers_truth_in_most_experiments() {
    let truth = mm1_mean_sojourn(50e3, MU).unwrap();
    let net = single_queue(Service::Exponential { rate: MU }, u64::MAX, 50e3);
    let covered = (0..10u64)
        .filter(|e| {
            let (mean, half) = t_interval(&delays(&replicate(&net, 0.5, 0.05, 1000 * e, 10)));
            (mean - truth).abs() <= half
        })
        .count();
    assert!(covered >= 8, "covered {covered}/10");
}

#[test]
fn md1_mean_matches_pollaczek_khinchine() {
    let truth = md1_mean_sojourn(50e3, MU).unwrap();
    let net = single_queue(Service::Fixed { seconds: 1.0 / MU }, u64::MAX, 50e3);
    let (mean, _) = t_interval(&delays(&replicate(&net, 1.0, 0.1, 7, 5)));
    assert!((mean - truth).abs() / truth < 0.02, "{mean} vs {truth}");
}

#[test]
fn mm1k_loss_matches_closed_form() {
    for (rho, k) in [(0.5, 3u64), (0.9, 20), (1.5, 10)] {
        let truth = 100.0 * mm1k_blocking(rho, k);
        let net = single_queue(Service::Exponential { rate: MU }, k, rho * MU);
        let plis: Vec<f64> = replicate(&net, 1.0, 0.1, 40, 8).iter().map(|r| r.pli()).collect();
        let (mean, half) = t_interval(&plis);
        assert!((mean - truth).abs() <= half.max(0.02 * truth), "rho {rho} K {k}: {mean} +/- {half} vs {truth}");
    }
}

#[test]
fn fixed_service_never_beats_its_floor() {
    let net = single_queue(Service::Fixed { seconds: 1e-5 }, 5, 90e3);
    for run in replicate(&net, 0.2, 0.0, 3, 3) {
        assert!(run.aggregate.min_delay >= 1e-5 - 1e-15);
    }
}

#[test]
fn saturated_buffer_loss_approaches_fluid_limit() {
    let rho = 3.0;
    let net = single_queue(Service::Exponential { rate: MU }, 200, rho * MU);
    let run = &replicate(&net, 0.5, 0.1, 9, 1)[0];
    let fluid = 100.0 * (1.0 - 1.0 / rho);
    assert!((run.pli() - fluid).abs() < 1.0, "{} vs {fluid}", run.pli());
}
