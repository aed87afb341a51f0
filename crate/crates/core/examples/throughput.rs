//! Times one long baseline replication.
use payload_te::scenario::Scenario;
use payload_te::simulate;
use std::time::Instant;

fn main() {
    let mut s = Scenario::baseline_single(2, &Scenario::reference_preset(1_000_000, 10e9, 90e3));
    let fill = s.baseline_fill_time().unwrap();
    s.horizon_s = 2.5 * fill;
    s.warmup_frac = 0.5;
    let t = Instant::now();
    let m = simulate(&s, None, 1).unwrap();
    let secs = t.elapsed().as_secs_f64();
    println!(
        "horizon {:.2}s events {} in {:.2}s ({:.1} M/s), pli {:.3} %, offered {}",
        s.horizon_s,
        m.events,
        secs,
        m.events as f64 / secs / 1e6,
        m.pli(),
        m.aggregate.offered
    );
}
