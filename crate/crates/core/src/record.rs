//! Run record persistence: a newline-delimited JSON log and a flat CSV.
//!
//! Log layout, one JSON object per line:
//! a `header` line (schema version, seed, config snapshot), one `sample`
//! line per control step, and a closing `outcome` line.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::controller::Role;
use crate::error::RecordError;
use crate::mission::{Outcome, RunRecord, Sample, SCHEMA_VERSION};

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        schema_version: u32,
        seed: u64,
        config: Option<RunConfig>,
    },
    Sample(Sample),
    Outcome {
        outcome: Outcome,
        mission_time: f64,
        control_steps: u64,
        diagnostic: Option<String>,
    },
}

pub fn write_log<W: Write>(record: &RunRecord, mut out: W) -> Result<(), RecordError> {
    let header = Line::Header {
        schema_version: record.schema_version,
        seed: record.seed,
        config: record.config.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for s in &record.samples {
        // Serialize through a borrowed view to avoid cloning every sample.
        #[derive(Serialize)]
        struct Tagged<'a> {
            #[serde(rename = "type")]
            kind: &'static str,
            #[serde(flatten)]
            sample: &'a Sample,
        }
        serde_json::to_writer(&mut out, &Tagged { kind: "sample", sample: s })?;
        out.write_all(b"\n")?;
    }
    let footer = Line::Outcome {
        outcome: record.outcome,
        mission_time: record.mission_time,
        control_steps: record.control_steps,
        diagnostic: record.diagnostic.clone(),
    };
    serde_json::to_writer(&mut out, &footer)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_log<R: BufRead>(input: R) -> Result<RunRecord, RecordError> {
    let mut header = None;
    let mut footer = None;
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(parse_err(lineno, "content after the outcome line"));
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        match parsed {
            Line::Header {
                schema_version,
                seed,
                config,
            } => {
                if header.is_some() || !samples.is_empty() {
                    return Err(parse_err(lineno, "header must be the first line"));
                }
                if schema_version != SCHEMA_VERSION {
                    return Err(parse_err(
                        lineno,
                        format!("unsupported schema version {schema_version}"),
                    ));
                }
                header = Some((schema_version, seed, config));
            }
            Line::Sample(s) => {
                if header.is_none() {
                    return Err(parse_err(lineno, "sample before header"));
                }
                if let Some(prev) = samples.last().map(|p: &Sample| p.t) {
                    if s.t < prev {
                        return Err(parse_err(lineno, "timestamps go backwards"));
                    }
                }
                samples.push(s);
            }
            Line::Outcome {
                outcome,
                mission_time,
                control_steps,
                diagnostic,
            } => footer = Some((outcome, mission_time, control_steps, diagnostic)),
        }
    }
    let (schema_version, seed, config) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    let (outcome, mission_time, control_steps, diagnostic) =
        footer.ok_or_else(|| parse_err(0, "missing outcome line"))?;
    Ok(RunRecord {
        schema_version,
        seed,
        config,
        outcome,
        mission_time,
        control_steps,
        samples,
        diagnostic,
    })
}

fn parse_err(line: usize, reason: impl Into<String>) -> RecordError {
    RecordError::Parse {
        line,
        reason: reason.into(),
    }
}

pub fn role_label(role: Option<Role>) -> &'static str {
    match role {
        Some(Role::Push) => "push",
        Some(Role::Prevent) => "prevent",
        Some(Role::Support) => "support",
        None => "none",
    }
}

/// Column names for a team of `robots`.
pub fn csv_header(robots: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["schema_version", "t", "box_x", "box_y", "box_theta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 0..robots {
        for field in ["x", "y", "theta", "role", "v", "omega", "flag"] {
            cols.push(format!("r{k}_{field}"));
        }
    }
    cols
}

/// One row per sample. Floats use the shortest round-trip representation,
/// so equal records give byte-identical files.
pub fn write_csv<W: Write>(record: &RunRecord, mut out: W) -> Result<(), RecordError> {
    let robots = record.samples.first().map_or(0, |s| s.robots.len());
    writeln!(out, "{}", csv_header(robots).join(","))?;
    let mut row = String::new();
    for s in &record.samples {
        row.clear();
        let _ = write!(
            row,
            "{},{},{},{},{}",
            record.schema_version, s.t, s.box_pose.x, s.box_pose.y, s.box_pose.theta
        );
        for r in &s.robots {
            let _ = write!(
                row,
                ",{},{},{},{},{},{},{}",
                r.pose.x,
                r.pose.y,
                r.pose.theta,
                role_label(r.role),
                r.v,
                r.omega,
                u8::from(r.flag)
            );
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// First difference between two records, if any.
pub fn compare_records(a: &RunRecord, b: &RunRecord) -> Option<String> {
    if a.outcome != b.outcome {
        return Some(format!("outcome {} vs {}", a.outcome.describe(), b.outcome.describe()));
    }
    if a.control_steps != b.control_steps || a.mission_time.to_bits() != b.mission_time.to_bits() {
        return Some(format!("mission time {} vs {}", a.mission_time, b.mission_time));
    }
    if a.samples.len() != b.samples.len() {
        return Some(format!("{} vs {} samples", a.samples.len(), b.samples.len()));
    }
    if let Some(i) = a.samples.iter().zip(&b.samples).position(|(x, y)| x != y) {
        return Some(format!("sample {i} (t = {}) differs", a.samples[i].t));
    }
    if a.seed != b.seed || a.config != b.config || a.diagnostic != b.diagnostic {
        return Some("metadata differs".into());
    }
    None
}

/// Re-runs the record's config snapshot; `None` when the replay matches.
pub fn replay(record: &RunRecord) -> Result<Option<String>, RecordError> {
    let config = record
        .config
        .as_ref()
        .ok_or_else(|| parse_err(0, "record carries no config snapshot"))?;
    let fresh = config.run_with(!record.samples.is_empty());
    Ok(compare_records(record, &fresh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn short_record() -> RunRecord {
        let mut c = RunConfig::default();
        c.mission.max_time_s = 2.0;
        c.run()
    }

    #[test]
    fn log_round_trip_is_exact() {
        let rec = short_record();
        let mut buf = Vec::new();
        write_log(&rec, &mut buf).unwrap();
        let back = read_log(&buf[..]).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn csv_has_one_row_per_sample_and_fixed_width() {
        let rec = short_record();
        let mut buf = Vec::new();
        write_csv(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rec.samples.len() + 1);
        assert!(lines[0].starts_with("schema_version,t,box_x,box_y,box_theta,r0_x,r0_y,r0_theta,r0_role"));
        let width = 5 + 7 * 6;
        assert!(lines.iter().all(|l| l.split(',').count() == width));
        assert!(lines[1].starts_with("1,0,"));
    }

    #[test]
    fn truncated_log_is_rejected() {
        let rec = short_record();
        let mut buf = Vec::new();
        write_log(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_log(cut.as_bytes()), Err(RecordError::Parse { .. })));
        assert!(read_log("not json\n".as_bytes()).is_err());
    }

    #[test]
    fn replay_matches_and_detects_tampering() {
        let mut rec = short_record();
        assert_eq!(replay(&rec).unwrap(), None);
        rec.samples[3].box_pose.x += 1e-9;
        assert!(replay(&rec).unwrap().unwrap().contains("sample 3"));
    }
}
