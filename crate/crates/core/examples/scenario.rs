//! Plays a scenario file (or the built-in workload) and dumps a few frames.
//!
//!     cargo run --example scenario -- [tests/golden/workload.toml]

use remoteframe::device::{load_scenario, standard_workload, ScenarioScript};
use std::io::Write;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = match std::env::args().nth(1) {
        Some(path) => ScenarioScript::load(path.as_ref())?,
        None => standard_workload(),
    };
    let player = load_scenario(script)?;
    let (w, h) = player.dimensions();
    println!("{} steps over {} ms at {w}x{h}", player.step_count(), player.total_duration_ms());
    for (i, s) in player.script().steps.iter().enumerate() {
        println!("  {i}: {:<14} {:>5} ms", s.generator, s.duration_ms);
    }
    for t in (0..player.total_duration_ms()).step_by(1_000) {
        let fb = player.frame_at(t);
        println!("t={t:>5} {:<14} checksum {:016x}", player.generator_at(t).name(), fb.checksum());
        if t % 3_000 == 0 {
            let path = format!("frame_{t:05}.ppm");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write!(out, "P6\n{w} {h}\n255\n")?;
            for &p in fb.pixels() {
                out.write_all(&[(p >> 16) as u8, (p >> 8) as u8, p as u8])?;
            }
        }
    }
    Ok(())
}
