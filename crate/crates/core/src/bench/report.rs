use super::BenchReport;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

pub const CSV_HEADER: &str = "encoding,profile,updates,updates_per_second,rectangles_received,data_captured_mb,data_compressed_mb,compression_ratio,wall_time_s";

fn mb(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 20) as f64
}

pub fn emit_report(reports: &[BenchReport], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => csv(reports).into_bytes(),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(reports).expect("reports serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Table => table(reports).into_bytes(),
    }
}

fn csv(reports: &[BenchReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{},{:.2},{:.2},{:.2},{:.2}",
            r.encoding,
            r.profile,
            r.updates,
            r.updates_per_second,
            r.rectangles_received,
            mb(r.data_captured),
            mb(r.data_compressed),
            r.compression_ratio,
            r.wall_time
        );
    }
    out
}

const ROWS: [&str; 7] = [
    "Updates",
    "Updates/second",
    "Rectangles received",
    "Data captured (MB)",
    "Data compressed (MB)",
    "Compression ratio",
    "Wall time (s)",
];

fn cell(r: &BenchReport, row: usize) -> String {
    match row {
        0 => r.updates.to_string(),
        1 => format!("{:.2}", r.updates_per_second),
        2 => r.rectangles_received.to_string(),
        3 => format!("{:.2}", mb(r.data_captured)),
        4 => format!("{:.2}", mb(r.data_compressed)),
        5 => format!("{:.2}", r.compression_ratio),
        _ => format!("{:.2}", r.wall_time),
    }
}

/// Metrics down, encodings across; one block per profile.
fn table(reports: &[BenchReport]) -> String {
    let mut profiles: Vec<&str> = Vec::new();
    for r in reports {
        if !profiles.contains(&r.profile.as_str()) {
            profiles.push(&r.profile);
        }
    }
    let label_w = ROWS.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (i, p) in profiles.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let cols: Vec<&BenchReport> = reports.iter().filter(|r| r.profile == *p).collect();
        let widths: Vec<usize> = cols
            .iter()
            .map(|r| (0..ROWS.len()).map(|row| cell(r, row).len()).chain([r.encoding.len()]).max().unwrap_or(0))
            .collect();
        let _ = write!(out, "{:<label_w$}", format!("[{p}]"));
        for (r, w) in cols.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", r.encoding.to_uppercase());
        }
        out.push('\n');
        for (row, name) in ROWS.iter().enumerate() {
            let _ = write!(out, "{name:<label_w$}");
            for (r, w) in cols.iter().zip(&widths) {
                let _ = write!(out, "  {:>w$}", cell(r, row));
            }
            out.push('\n');
        }
    }
    out
}

/// Averages repeated runs of the same (encoding, profile); the ratio and
/// rate are recomputed from the averaged counts.
pub fn mean_report(runs: &[BenchReport]) -> Option<BenchReport> {
    let first = runs.first()?;
    let n = runs.len() as f64;
    let avg = |f: fn(&BenchReport) -> u64| (runs.iter().map(|r| f(r) as f64).sum::<f64>() / n).round() as u64;
    Some(BenchReport::from_counts(
        &first.encoding,
        &first.profile,
        avg(|r| r.updates),
        avg(|r| r.rectangles_received),
        avg(|r| r.data_captured),
        avg(|r| r.data_compressed),
        runs.iter().map(|r| r.wall_time).sum::<f64>() / n,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingFailure {
    pub profile: String,
    pub message: String,
}

impl std::fmt::Display for OrderingFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.profile, self.message)
    }
}

const RATIO_CHAIN: [&str; 5] = ["tight", "zlib", "hextile", "rre", "raw"];
const RATE_CHAIN: [&str; 4] = ["tight", "zlib", "hextile", "raw"];

fn strictly_descending(
    reports: &[&BenchReport],
    chain: &[&str],
    metric: &str,
    value: fn(&BenchReport) -> f64,
    failures: &mut Vec<OrderingFailure>,
) {
    let present: Vec<&BenchReport> =
        chain.iter().filter_map(|e| reports.iter().find(|r| r.encoding == *e).copied()).collect();
    for w in present.windows(2) {
        if value(w[0]) <= value(w[1]) {
            failures.push(OrderingFailure {
                profile: w[0].profile.clone(),
                message: format!(
                    "{metric}: {} ({:.3}) is not above {} ({:.3})",
                    w[0].encoding,
                    value(w[0]),
                    w[1].encoding,
                    value(w[1])
                ),
            });
        }
    }
}

/// Checks the expected orderings among the reports that are present:
/// compression ratio Tight > Zlib > Hextile > RRE > Raw (Raw exactly 1) on
/// every profile, update rate Tight > Zlib > Hextile > Raw on wifi, and
/// no encoding faster on wifi than on usb.
pub fn check_orderings(reports: &[BenchReport]) -> Vec<OrderingFailure> {
    let mut failures = Vec::new();
    let mut profiles: Vec<&str> = Vec::new();
    for r in reports {
        if !profiles.contains(&r.profile.as_str()) {
            profiles.push(&r.profile);
        }
        if r.encoding == "raw" && r.compression_ratio != 1.0 {
            failures.push(OrderingFailure {
                profile: r.profile.clone(),
                message: format!("compression ratio of raw is {} instead of 1", r.compression_ratio),
            });
        }
    }
    for p in &profiles {
        let rs: Vec<&BenchReport> = reports.iter().filter(|r| r.profile == *p).collect();
        strictly_descending(&rs, &RATIO_CHAIN, "compression ratio", |r| r.compression_ratio, &mut failures);
        if *p == "wifi" {
            strictly_descending(&rs, &RATE_CHAIN, "updates/second", |r| r.updates_per_second, &mut failures);
        }
    }
    for w in reports.iter().filter(|r| r.profile == "wifi") {
        if let Some(u) = reports.iter().find(|r| r.profile == "usb" && r.encoding == w.encoding) {
            if w.updates_per_second > u.updates_per_second {
                failures.push(OrderingFailure {
                    profile: "wifi".into(),
                    message: format!(
                        "{} is faster over wifi ({:.3}/s) than over usb ({:.3}/s)",
                        w.encoding, w.updates_per_second, u.updates_per_second
                    ),
                });
            }
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(enc: &str, profile: &str, captured: u64, compressed: u64, updates: u64) -> BenchReport {
        BenchReport::from_counts(enc, profile, updates, updates * 3, captured, compressed, 10.0)
    }

    #[test]
    fn csv_for_raw() {
        let r = rep("raw", "usb", 3 << 20, 3 << 20, 25);
        let text = String::from_utf8(emit_report(&[r], ReportFormat::Csv)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("raw,usb,25,2.50,75,3.00,3.00,1.00,10.00"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn json_round_trip() {
        let rs = vec![rep("tight", "wifi", 1000, 37, 7), rep("raw", "wifi", 5, 5, 1)];
        let back: Vec<BenchReport> = serde_json::from_slice(&emit_report(&rs, ReportFormat::Json)).unwrap();
        assert_eq!(back, rs);
    }

    #[test]
    fn table_has_a_column_per_encoding() {
        let rs = vec![rep("raw", "usb", 10, 10, 1), rep("hextile", "usb", 10, 4, 2), rep("tight", "usb", 10, 1, 3)];
        let text = String::from_utf8(emit_report(&rs, ReportFormat::Table)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + ROWS.len());
        assert!(lines[0].contains("RAW") && lines[0].contains("HEXTILE") && lines[0].contains("TIGHT"));
        let ratio = lines.iter().find(|l| l.starts_with("Compression ratio")).unwrap();
        assert_eq!(ratio.split_whitespace().skip(2).collect::<Vec<_>>(), ["1.00", "2.50", "10.00"]);
    }

    #[test]
    fn orderings() {
        let good = vec![
            rep("raw", "usb", 100, 100, 10),
            rep("rre", "usb", 100, 50, 10),
            rep("hextile", "usb", 100, 20, 10),
            rep("zlib", "usb", 100, 5, 10),
            rep("tight", "usb", 100, 2, 10),
            rep("raw", "wifi", 100, 100, 2),
            rep("hextile", "wifi", 100, 20, 4),
            rep("zlib", "wifi", 100, 5, 6),
            rep("tight", "wifi", 100, 2, 8),
        ];
        assert!(check_orderings(&good).is_empty());
        let mut bad = good.clone();
        bad[7] = rep("zlib", "wifi", 100, 5, 9);
        let f = check_orderings(&bad);
        assert_eq!(f.len(), 1, "{f:?}");
        assert!(f[0].message.contains("updates/second"));
        bad[0] = rep("raw", "usb", 100, 99, 10);
        assert!(check_orderings(&bad).iter().any(|f| f.message.contains("raw")));
        let faster = vec![rep("tight", "usb", 10, 1, 5), rep("tight", "wifi", 10, 1, 6)];
        assert_eq!(check_orderings(&faster).len(), 1);
    }

    #[test]
    fn mean_recomputes_ratio() {
        let m = mean_report(&[rep("zlib", "usb", 100, 10, 4), rep("zlib", "usb", 300, 10, 6)]).unwrap();
        assert_eq!(m.data_captured, 200);
        assert_eq!(m.compression_ratio, 20.0);
        assert_eq!(m.updates, 5);
        assert!(mean_report(&[]).is_none());
    }
}
