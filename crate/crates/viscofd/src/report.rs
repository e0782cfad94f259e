//! Deterministic run artifacts: a line-structured report plus CSV tables.
//!
//! Report grammar, one record per line, fields space separated in a fixed
//! order:
//!
//! ```text
//! report viscofd 1
//! command <solve|verify|sweep|manufacture>
//! instance <16 hex digits, fnv1a-64 of the config echo>
//! config| <one line of the TOML echo, repeated>
//! <records, format per record kind>
//! artifact <file name, repeated>
//! end
//! ```
//!
//! Everything between `report` and `end` is the body. Lines starting with
//! `#` (timings) sit after `end` and are excluded from it: two runs with
//! the same config and seed produce byte-identical bodies. Floats print in
//! shortest round-trip form, so a reader recovers the exact f64.
//!
//! Record kinds used by the front end:
//!
//! ```text
//! stage <k> eps <e> sweeps <n> residual <r>
//! solve sweeps_total <n> final_eps <e> final_residual <r> converged <true|false>
//! error_vs_oracle <sup norm>
//! bracket_width <sup norm>
//! check <name> <pass|fail> margin <v> at <x> <y>
//! check <name> <pass|fail> constant <c> pair <x1> <y1> <x2> <y2>
//! level h <h> error <e> rate <log2 ratio | _>
//! field <expression>
//! singular <x> <y>
//! kink_warning <true|false>
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

/// FNV-1a over the bytes; stable fingerprint for instance identity.
pub fn fingerprint(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Shortest round-trip float formatting shared by reports and CSVs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone)]
pub struct Report {
    command: &'static str,
    config_echo: String,
    records: Vec<String>,
    artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, config_echo: &str) -> Self {
        Self {
            command,
            config_echo: config_echo.to_string(),
            records: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Append one record line. Newlines would corrupt the one-record-per-
    /// line grammar, so they are rejected outright.
    pub fn push(&mut self, line: String) {
        assert!(!line.contains('\n'), "report records are single lines");
        self.records.push(line);
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn instance(&self) -> u64 {
        fingerprint(&self.config_echo)
    }

    /// The deterministic part of the report.
    pub fn body(&self) -> String {
        let mut out = String::new();
        out.push_str("report viscofd 1\n");
        out.push_str(&format!("command {}\n", self.command));
        out.push_str(&format!("instance {:016x}\n", self.instance()));
        for line in self.config_echo.lines() {
            out.push_str("config| ");
            out.push_str(line);
            out.push('\n');
        }
        for rec in &self.records {
            out.push_str(rec);
            out.push('\n');
        }
        for a in &self.artifacts {
            out.push_str("artifact ");
            out.push_str(a);
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    /// Recover the config echo from a report body.
    pub fn extract_config(body: &str) -> String {
        let mut out = String::new();
        for line in body.lines() {
            if let Some(rest) = line.strip_prefix("config| ") {
                out.push_str(rest);
                out.push('\n');
            } else if line == "config|" {
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, dir: &Path, name: &str, elapsed_ms: Option<u128>) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut file = std::fs::File::create(&path)?;
        file.write_all(self.body().as_bytes())?;
        if let Some(ms) = elapsed_ms {
            writeln!(file, "# elapsed_ms {ms}")?;
        }
        Ok(path)
    }
}

/// Write a CSV with the given header and preformatted rows; returns the
/// path. A trailing newline closes the last row.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_matches_the_reference_vector() {
        assert_eq!(fingerprint(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fingerprint("abc"), 0xe71f_a219_0541_574b);
    }

    #[test]
    fn body_is_deterministic_and_ordered() {
        let build = || {
            let mut r = Report::new("solve", "[grid]\nh = 0.5\n");
            r.push(format!("error_vs_oracle {}", fmt_f64(0.1 + 0.2)));
            r.push("solve sweeps_total 12 converged true".to_string());
            r.artifact("solution.csv");
            r
        };
        let a = build().body();
        let b = build().body();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "report viscofd 1");
        assert_eq!(lines[1], "command solve");
        assert!(lines[2].starts_with("instance "));
        assert_eq!(lines[3], "config| [grid]");
        assert_eq!(lines[4], "config| h = 0.5");
        assert_eq!(lines[5], "error_vs_oracle 0.30000000000000004");
        assert_eq!(lines.last(), Some(&"end"));
    }

    #[test]
    fn config_extraction_inverts_the_prefix() {
        let echo = "[problem]\nalpha = 0.0\n\n[grid]\nh = 0.25\n";
        let r = Report::new("verify", echo);
        assert_eq!(Report::extract_config(&r.body()), echo);
    }

    #[test]
    #[should_panic(expected = "single lines")]
    fn multiline_records_are_rejected() {
        let mut r = Report::new("solve", "");
        r.push("two\nlines".to_string());
    }

    #[test]
    fn timing_sits_outside_the_body() {
        let dir = std::env::temp_dir().join(format!("viscofd-report-{}", std::process::id()));
        let r = Report::new("solve", "x = 1\n");
        let p = r.write(&dir, "t.report", Some(42)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.ends_with("end\n# elapsed_ms 42\n"));
        let body_on_disk = text.split_inclusive('\n').filter(|l| !l.starts_with('#')).collect::<String>();
        assert_eq!(body_on_disk, r.body());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_writer_emits_header_and_rows() {
        let dir = std::env::temp_dir().join(format!("viscofd-csv-{}", std::process::id()));
        let p = write_csv(
            &dir,
            "s.csv",
            "x,u",
            vec![format!("0,{}", fmt_f64(1.5)), format!("1,{}", fmt_f64(-0.25))],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "x,u\n0,1.5\n1,-0.25\n");
        std::fs::remove_dir_all(&dir).ok();
    }
}
