//! Local projections with residual BCa bands on simulated market responses.

use hidden_dissent::market::{event_study, BootstrapOptions, EventPanel, HORIZONS};
use hidden_dissent::seed;
use hidden_dissent::synthetic::events;
use rand_distr::{Distribution, Normal};

fn main() -> hidden_dissent::Result<()> {
    let first = chrono::NaiveDate::from_ymd_opt(2008, 1, 15).expect("valid date");
    let mut panel = EventPanel::new(events(80, first, 45, 7))?;
    let noise = Normal::new(0.0, 0.05).expect("valid sd");
    let mut rng = seed::stream(7, &[]);
    // response to dissent builds over the first five days, then holds
    let rows = panel
        .events
        .iter()
        .map(|e| std::array::from_fn(|h| Some(0.3 * e.hd * (h.min(5) as f64 / 5.0) + noise.sample(&mut rng))))
        .collect();
    panel.set_outcomes("SIM", rows)?;

    let res = event_study(&panel, "SIM", &BootstrapOptions { seed: 7, ..BootstrapOptions::default() })?;
    println!(" h    b1      90% BCa band");
    for b in res.horizons.iter().filter(|b| b.h % 3 == 0 || b.h + 1 == HORIZONS) {
        println!("{:>2} {:>7.4}  [{:.4}, {:.4}]", b.h, b.b1, b.b1_band.lo, b.b1_band.hi);
    }
    Ok(())
}
