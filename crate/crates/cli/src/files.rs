//! Reading and writing instance, schedule and model files.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use jobshop_core::instance::{parse_native, parse_orlib, parse_taillard};
use jobshop_core::{Error, JssInstance, Schedule, Time};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    /// Native when the header carries the native tag, else OR-library, else
    /// Taillard.
    Auto,
    Native,
    OrLib,
    Taillard,
}

impl FromStr for InstanceFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InstanceFormat::Auto),
            "native" => Ok(InstanceFormat::Native),
            "orlib" | "la" => Ok(InstanceFormat::OrLib),
            "taillard" | "ta" => Ok(InstanceFormat::Taillard),
            _ => config(format!("unknown instance format `{s}`")),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn parse_instance(
    text: &str,
    format: InstanceFormat,
) -> std::result::Result<JssInstance, Error> {
    match format {
        InstanceFormat::Native => parse_native(text),
        InstanceFormat::OrLib => parse_orlib(text),
        InstanceFormat::Taillard => parse_taillard(text),
        InstanceFormat::Auto => {
            let header = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .unwrap_or("");
            if header.split_whitespace().nth(2).is_some() {
                parse_native(text)
            } else {
                parse_orlib(text).or_else(|e| parse_taillard(text).map_err(|_| e))
            }
        }
    }
}

pub fn load_instance(path: &Path, format: InstanceFormat) -> Result<JssInstance> {
    let text = read_text(path)?;
    parse_instance(&text, format).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

const SCHEDULE_TAG: &str = "schedule-v1";

/// Header `schedule-v1 N`, then the start times of each job on its own line.
pub fn schedule_to_text(schedule: &Schedule) -> String {
    let mut out = format!("{SCHEDULE_TAG} {}\n", schedule.starts().len());
    for job in schedule.starts() {
        let line: Vec<String> = job.iter().map(Time::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn schedule_from_text(text: &str) -> std::result::Result<Schedule, Error> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, message: &str| Error::Parse {
        line: line + 1,
        message: message.to_string(),
    };
    let (hl, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        [SCHEDULE_TAG, n] => n.parse().map_err(|_| bad(hl, "bad job count"))?,
        _ => return Err(bad(hl, "header must be `schedule-v1 N`")),
    };
    let mut starts = Vec::with_capacity(n);
    for (i, l) in lines {
        let row: std::result::Result<Vec<Time>, _> = l.split_whitespace().map(str::parse).collect();
        starts.push(row.map_err(|_| bad(i, "start times must be integers"))?);
    }
    if starts.len() != n {
        return Err(bad(
            text.lines().count().saturating_sub(1),
            "wrong number of jobs",
        ));
    }
    Ok(Schedule::new(starts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use jobshop_core::instance::{generate, to_native, to_orlib};

    #[test]
    fn schedule_text_round_trip() {
        let s = Schedule::new(vec![vec![0, 3], vec![0, 3, 9]]);
        assert_eq!(schedule_from_text(&schedule_to_text(&s)).unwrap(), s);
        assert!(schedule_from_text("schedule-v1 2\n1 2\n").is_err());
        assert!(schedule_from_text("1 2\n").is_err());
    }

    #[test]
    fn auto_detects_formats() {
        let inst = generate(3, 4, 1.3, 2).unwrap();
        assert_eq!(
            parse_instance(&to_native(&inst), InstanceFormat::Auto).unwrap(),
            inst
        );
        let plain = parse_instance(&to_orlib(&inst), InstanceFormat::Auto).unwrap();
        assert_eq!(plain.jobs()[1].ops, inst.jobs()[1].ops);
        let ta = "2 2\n3 4\n5 6\n1 2\n2 1\n";
        let parsed = parse_instance(ta, InstanceFormat::Auto).unwrap();
        assert_eq!(parsed.jobs()[1].ops[0].machine, 1);
    }
}
