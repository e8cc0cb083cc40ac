//! Baseline vs curriculum runs on the default synthetic corpus.
//!
//! cargo run --release --example compare -- [seeds...] [--metrics bu,random,...]

use std::time::Instant;

use tcl::corpus::{generate_synthetic, SynthConfig};
use tcl::curriculum::{run_baseline, run_tcl, RunConfig, RunOutcome};
use tcl::difficulty::MetricKind;

fn best(out: &RunOutcome) -> f64 {
    out.log.summary().map(|s| s.best_dev_f1).unwrap_or(f64::NAN)
}

fn main() -> tcl::Result<()> {
    env_logger::init();
    let mut seeds = Vec::new();
    let mut metrics = vec![MetricKind::Bu, MetricKind::Random];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--metrics" {
            let list = args.next().expect("--metrics needs a value");
            metrics = list.split(',').map(|m| m.parse()).collect::<tcl::Result<_>>()?;
        } else {
            seeds.push(a.parse::<u64>().expect("seed"));
        }
    }
    if seeds.is_empty() {
        seeds = vec![1, 2, 3];
    }

    for seed in seeds {
        let corpus = generate_synthetic(&SynthConfig::default(), seed)?;
        let cfg = RunConfig::default().with_seed(seed);
        let t = Instant::now();
        let base = run_baseline(&corpus.train, &corpus.dev, &cfg)?;
        println!("seed {seed} baseline best {:.5} ({:.1}s)", best(&base), t.elapsed().as_secs_f64());
        let curve: Vec<String> = base.log.epochs().map(|e| format!("{:.4}", e.dev_f1_cws)).collect();
        println!("  curve {}", curve.join(" "));
        for &kind in &metrics {
            let mut c = cfg.clone();
            c.metric.kind = kind;
            let t = Instant::now();
            let out = run_tcl(&corpus.train, &corpus.dev, &c)?;
            println!(
                "seed {seed} tcl-{kind} best {:.5} visits {} ({:.1}s)",
                best(&out),
                out.log.summary().unwrap().total_visits,
                t.elapsed().as_secs_f64()
            );
            let curve: Vec<String> = out.log.epochs().map(|e| format!("{:.4}", e.dev_f1_cws)).collect();
            println!("  curve {}", curve.join(" "));
        }
    }
    Ok(())
}
