//! Text formats: OR-library pairs layout, Taillard matrix layout, and the
//! native layout which adds per-job release, due date and weight.

use std::fmt::Write as _;

use super::{Job, JssInstance, Operation, Time};
use crate::error::{Error, Result};

const NATIVE_TAG: &str = "native-v1";

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

/// Non-blank lines that are not `#` comments, with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn numbers(line: usize, s: &str) -> Result<Vec<Time>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<Time>()
                .or_else(|_| parse_err(line, format!("`{tok}` is not an integer")))
        })
        .collect()
}

fn header(line: usize, toks: &[Time]) -> Result<(usize, usize)> {
    match toks {
        [n, m] if *n > 0 && *m > 0 => Ok((*n as usize, *m as usize)),
        _ => parse_err(line, "header must be two positive integers `N M`"),
    }
}

fn route(line: usize, pairs: &[Time], machines: usize) -> Result<Vec<Operation>> {
    let mut seen = vec![false; machines];
    pairs
        .chunks(2)
        .map(|pair| {
            let (machine, duration) = (pair[0], pair[1]);
            if machine < 0 || machine as usize >= machines {
                return parse_err(
                    line,
                    format!("machine {machine} out of range [0, {machines})"),
                );
            }
            if std::mem::replace(&mut seen[machine as usize], true) {
                return parse_err(
                    line,
                    format!("machine {machine} appears twice in the route"),
                );
            }
            if duration < 1 {
                return parse_err(line, format!("duration {duration} must be >= 1"));
            }
            Ok(Operation {
                machine: machine as usize,
                duration,
            })
        })
        .collect()
}

fn finish(jobs: Vec<Job>, machines: usize, line: usize) -> Result<JssInstance> {
    JssInstance::new(jobs, machines).or_else(|e| parse_err(line, e.to_string()))
}

/// Parses the OR-library job shop layout: a header `N M` followed by `N`
/// lines of `M` pairs `machine duration` (machines 0-based). Release times,
/// due dates are set to 0 and weights to 1.
pub fn parse_orlib(text: &str) -> Result<JssInstance> {
    let mut lines = content_lines(text);
    let Some((hline, htext)) = lines.next() else {
        return parse_err(1, "missing header");
    };
    let (n, m) = header(hline, &numbers(hline, htext)?)?;
    let mut jobs = Vec::with_capacity(n);
    let mut last = hline;
    for (line, text) in lines {
        if jobs.len() == n {
            return parse_err(line, format!("unexpected content after {n} jobs"));
        }
        let toks = numbers(line, text)?;
        if toks.len() != 2 * m {
            return parse_err(
                line,
                format!("expected {m} pairs, found {} numbers", toks.len()),
            );
        }
        jobs.push(Job {
            release: 0,
            due: 0,
            weight: 1,
            ops: route(line, &toks, m)?,
        });
        last = line;
    }
    if jobs.len() != n {
        return parse_err(last, format!("expected {n} jobs, found {}", jobs.len()));
    }
    finish(jobs, m, last)
}

/// Writes the OR-library layout. Release, due date and weight are dropped.
pub fn to_orlib(instance: &JssInstance) -> String {
    let mut out = format!("{} {}\n", instance.job_count(), instance.machine_count());
    for job in instance.jobs() {
        let pairs: Vec<String> = job
            .ops
            .iter()
            .map(|op| format!("{} {}", op.machine, op.duration))
            .collect();
        out.push_str(&pairs.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the Taillard layout: header `N M`, then `N` rows of `M` processing
/// times, then `N` rows of `M` machines numbered from 1. Lines labelled
/// `Times` or `Machines` are skipped.
pub fn parse_taillard(text: &str) -> Result<JssInstance> {
    let mut lines = content_lines(text)
        .filter(|(_, l)| !l.eq_ignore_ascii_case("times") && !l.eq_ignore_ascii_case("machines"));
    let Some((hline, htext)) = lines.next() else {
        return parse_err(1, "missing header");
    };
    let (n, m) = header(hline, &numbers(hline, htext)?)?;
    let mut rows = Vec::with_capacity(2 * n);
    let mut last = hline;
    for (line, text) in lines {
        if rows.len() == 2 * n {
            return parse_err(line, format!("unexpected content after {} rows", 2 * n));
        }
        let toks = numbers(line, text)?;
        if toks.len() != m {
            return parse_err(line, format!("expected {m} values, found {}", toks.len()));
        }
        rows.push((line, toks));
        last = line;
    }
    if rows.len() != 2 * n {
        return parse_err(
            last,
            format!("expected {} rows, found {}", 2 * n, rows.len()),
        );
    }
    let (times, machines) = rows.split_at(n);
    let mut jobs = Vec::with_capacity(n);
    for ((_, t), (line, ms)) in times.iter().zip(machines) {
        let pairs: Vec<Time> = ms.iter().zip(t).flat_map(|(&mc, &p)| [mc - 1, p]).collect();
        jobs.push(Job {
            release: 0,
            due: 0,
            weight: 1,
            ops: route(*line, &pairs, m)?,
        });
    }
    finish(jobs, m, last)
}

/// Parses the native layout: header `N M native-v1`, then one line per job
/// `r d w  m1 p1 m2 p2 ...`.
pub fn parse_native(text: &str) -> Result<JssInstance> {
    let mut lines = content_lines(text);
    let Some((hline, htext)) = lines.next() else {
        return parse_err(1, "missing header");
    };
    let mut parts = htext.split_whitespace();
    let dims: Vec<&str> = parts.by_ref().take(2).collect();
    if parts.next() != Some(NATIVE_TAG) || parts.next().is_some() || dims.len() != 2 {
        return parse_err(hline, format!("header must be `N M {NATIVE_TAG}`"));
    }
    let (n, m) = header(hline, &numbers(hline, &dims.join(" "))?)?;
    let mut jobs = Vec::with_capacity(n);
    let mut last = hline;
    for (line, text) in lines {
        if jobs.len() == n {
            return parse_err(line, format!("unexpected content after {n} jobs"));
        }
        let toks = numbers(line, text)?;
        if toks.len() < 5 || (toks.len() - 3) % 2 != 0 {
            return parse_err(
                line,
                "expected `r d w` followed by at least one `machine duration` pair",
            );
        }
        let (release, due, weight) = (toks[0], toks[1], toks[2]);
        if release < 0 || due < 0 || weight < 1 {
            return parse_err(line, "release and due must be >= 0, weight >= 1");
        }
        jobs.push(Job {
            release,
            due,
            weight,
            ops: route(line, &toks[3..], m)?,
        });
        last = line;
    }
    if jobs.len() != n {
        return parse_err(last, format!("expected {n} jobs, found {}", jobs.len()));
    }
    finish(jobs, m, last)
}

pub fn to_native(instance: &JssInstance) -> String {
    let mut out = format!(
        "{} {} {NATIVE_TAG}\n",
        instance.job_count(),
        instance.machine_count()
    );
    for job in instance.jobs() {
        let _ = write!(out, "{} {} {} ", job.release, job.due, job.weight);
        for op in &job.ops {
            let _ = write!(out, " {} {}", op.machine, op.duration);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate;
    use proptest::prelude::*;

    #[test]
    fn parses_small_orlib_instance() {
        let inst = parse_orlib("2 2\n0 3 1 2\n1 2 0 4\n").unwrap();
        let j0 = inst.job(0);
        assert_eq!(
            j0.ops,
            vec![
                Operation {
                    machine: 0,
                    duration: 3
                },
                Operation {
                    machine: 1,
                    duration: 2
                }
            ]
        );
        let j1 = inst.job(1);
        assert_eq!(
            j1.ops,
            vec![
                Operation {
                    machine: 1,
                    duration: 2
                },
                Operation {
                    machine: 0,
                    duration: 4
                }
            ]
        );
        assert!(inst
            .jobs()
            .iter()
            .all(|j| j.release == 0 && j.due == 0 && j.weight == 1));
    }

    #[test]
    fn orlib_errors_carry_line_numbers() {
        assert!(matches!(parse_orlib(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_orlib("1 2\n0 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_orlib("x 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_orlib("1 2\n0 3 2 4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_orlib("1 2\n0 3 0 4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_orlib("2 2\n0 3 1 4\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_orlib("1 2\n0 3 1 4\n0 1 1 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn orlib_skips_comments_and_blank_lines() {
        let inst = parse_orlib("# instance\n\n2 2\n0 3 1 2\n\n1 2 0 4\n").unwrap();
        assert_eq!(inst.op_count(), 4);
    }

    #[test]
    fn taillard_layout_matches_pairs_layout() {
        let pairs = parse_orlib("2 2\n0 3 1 2\n1 2 0 4\n").unwrap();
        let matrix = parse_taillard("2 2\nTimes\n3 2\n2 4\nMachines\n1 2\n2 1\n").unwrap();
        assert_eq!(pairs, matrix);
        assert!(parse_taillard("2 2\n3 2\n2 4\n1 2\n").is_err());
    }

    #[test]
    fn native_round_trips_metadata() {
        let inst = generate(5, 4, 1.3, 3).unwrap();
        let text = to_native(&inst);
        assert!(text.starts_with("5 4 native-v1\n"));
        assert_eq!(parse_native(&text).unwrap(), inst);
        assert!(parse_native("1 1\n0 0 1 0 5\n").is_err());
        assert!(matches!(
            parse_native("1 1 native-v1\n0 0 0 0 5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn orlib_round_trip(n in 1usize..6, m in 1usize..6, seed in any::<u64>()) {
            let generated = generate(n, m, 1.3, seed).unwrap();
            let jobs = generated.jobs().iter().map(|j| Job { release: 0, due: 0, weight: 1, ops: j.ops.clone() }).collect();
            let inst = JssInstance::new(jobs, m).unwrap();
            prop_assert_eq!(parse_orlib(&to_orlib(&inst)).unwrap(), inst);
        }
    }
}
