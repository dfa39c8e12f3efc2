//! Runs the encoding benchmark on the built-in workload and prints the
//! table. Lockstep pacing keeps it quick and repeatable; pass `realtime`
//! to follow the wall clock over the usb and wifi links instead.
//!
//!     cargo run --release --example bench -- [realtime]

use remoteframe::bench::{check_orderings, emit_report, run_benchmark, BenchConfig, ReportFormat};
use remoteframe::device::standard_workload;
use remoteframe::encodings::EncodingId;
use remoteframe::transport::TransportProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let realtime = std::env::args().nth(1).as_deref() == Some("realtime");
    let profiles = if realtime {
        vec![TransportProfile::usb(), TransportProfile::wifi()]
    } else {
        vec![TransportProfile::unthrottled()]
    };
    let mut reports = Vec::new();
    for profile in profiles {
        for enc in [EncodingId::Raw, EncodingId::Rre, EncodingId::Hextile, EncodingId::Zlib, EncodingId::Tight] {
            let mut cfg = BenchConfig::new(standard_workload(), enc, profile.clone());
            if !realtime {
                cfg = cfg.lockstep(50);
            }
            reports.push(run_benchmark(&cfg)?);
        }
    }
    print!("{}", String::from_utf8(emit_report(&reports, ReportFormat::Table))?);
    for f in check_orderings(&reports) {
        println!("ordering not met: {f}");
    }
    Ok(())
}
