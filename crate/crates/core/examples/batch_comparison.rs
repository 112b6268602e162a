//! Seeded batches of `dwa_vanilla` against `ours_full` on a generated class.
//!
//! cargo run --release --example batch_comparison -- high 10 10

use std::path::Path;

use terranav::config::{run_batch, ScenarioFile, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let class = args.next().unwrap_or_else(|| "medium".into());
    let batches: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let text = format!(r#"{{"name": "{class}", "world": {{"kind": "generated", "class": "{class}"}}}}"#);
    let scenario = ScenarioFile::from_json(&text, Path::new("."))?;

    println!("batch  seed   | vanilla success vib speed | ours success vib speed");
    for b in 0..batches {
        let seed = 1000 * (b + 1);
        let (_, van) = run_batch(&scenario, Variant::DwaVanilla, episodes, seed)?;
        let (_, ours) = run_batch(&scenario, Variant::OursFull, episodes, seed)?;
        let better = ours.avg_speed < van.avg_speed && ours.avg_vibration < van.avg_vibration;
        println!(
            "{b:>5} {seed:>6} | {:>15.2} {:.3} {:.3} | {:>12.2} {:.3} {:.3} {}",
            van.success_rate,
            van.avg_vibration,
            van.avg_speed,
            ours.success_rate,
            ours.avg_vibration,
            ours.avg_speed,
            if better { "" } else { "(not slower and smoother)" }
        );
    }
    Ok(())
}
