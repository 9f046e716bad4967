use std::io::{Read, Write};

use super::Head;
use crate::error::{argument, Error, Result};
use crate::features::{normalized_features, FeatureVector, Normalizer, FEATURE_COUNT};
use crate::instance::{JssInstance, OpId, Schedule};

/// An instance with one of its optimal schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedInstance {
    pub id: String,
    pub instance: JssInstance,
    pub schedule: Schedule,
}

/// Where a row came from: the operation, and for pair rows the operation it
/// was compared with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub instance: String,
    pub op: OpId,
    pub other: Option<OpId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub features: FeatureVector,
    pub label: f64,
    pub source: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mode: Head,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(mode: Head) -> Self {
        Self {
            mode,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at the given positions, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            mode: self.mode,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64; FEATURE_COUNT]> {
        self.rows.iter().map(|r| &r.features.f)
    }

    pub fn labels(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.label)
    }

    /// CSV with `f1..f10`, `label` and provenance columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=FEATURE_COUNT).map(|k| format!("f{k}")).collect();
        header.extend(
            [
                "label",
                "mode",
                "instance",
                "job",
                "op",
                "other_job",
                "other_op",
            ]
            .map(String::from),
        );
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.features.f.iter().map(|v| v.to_string()).collect();
            rec.push(row.label.to_string());
            rec.push(self.mode.as_str().to_string());
            rec.push(row.source.instance.clone());
            rec.push(row.source.op.job.to_string());
            rec.push(row.source.op.index.to_string());
            match row.source.other {
                Some(o) => {
                    rec.push(o.job.to_string());
                    rec.push(o.index.to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads what [`Dataset::write_csv`] wrote. An empty file body yields an
    /// empty dataset of mode `default_mode`.
    pub fn read_csv<R: Read>(input: R, default_mode: Head) -> Result<Dataset> {
        let mut reader = csv::Reader::from_reader(input);
        let mut data = Dataset::new(default_mode);
        for (k, rec) in reader.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(csv_error)?;
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("bad {what}"),
            };
            if rec.len() != FEATURE_COUNT + 7 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", FEATURE_COUNT + 7, rec.len()),
                });
            }
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("number in column {}", i + 1)))
            };
            let idx = |i: usize| rec[i].parse::<usize>().map_err(|_| bad("operation index"));
            let mut f = [0.0; FEATURE_COUNT];
            for (i, v) in f.iter_mut().enumerate() {
                *v = num(i)?;
            }
            let label = num(FEATURE_COUNT)?;
            let mode: Head = rec[FEATURE_COUNT + 1].parse().map_err(|_| bad("mode"))?;
            if k == 0 {
                data.mode = mode;
            } else if mode != data.mode {
                return Err(bad("mode (mixed modes)"));
            }
            let op = OpId::new(idx(FEATURE_COUNT + 3)?, idx(FEATURE_COUNT + 4)?);
            let other = if rec[FEATURE_COUNT + 5].is_empty() {
                None
            } else {
                Some(OpId::new(idx(FEATURE_COUNT + 5)?, idx(FEATURE_COUNT + 6)?))
            };
            data.rows.push(Row {
                features: FeatureVector::new(f),
                label,
                source: Provenance {
                    instance: rec[FEATURE_COUNT + 2].to_string(),
                    op,
                    other,
                },
            });
        }
        Ok(data)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn check_optimum(s: &SolvedInstance) -> Result<()> {
    if !s.schedule.is_complete_for(&s.instance) {
        return argument(format!(
            "schedule of `{}` does not cover every operation",
            s.id
        ));
    }
    Ok(())
}

/// One row per operation labelled with its normalized optimal start.
pub fn build_regression_dataset(solved: &[SolvedInstance]) -> Result<Dataset> {
    let mut data = Dataset::new(Head::Regression);
    for s in solved {
        check_optimum(s)?;
        let norm = Normalizer::for_instance(&s.instance)?;
        let features = normalized_features(&s.instance)?;
        for (id, f) in s.instance.op_ids().zip(features) {
            data.rows.push(Row {
                features: f,
                label: norm.time(s.schedule.start(id) as f64),
                source: Provenance {
                    instance: s.id.clone(),
                    op: id,
                    other: None,
                },
            });
        }
    }
    Ok(data)
}

/// For each machine and each ordered pair `(a, b)` of its operations, the
/// feature difference `f(a) - f(b)` labelled −1 when `a` runs first, else +1.
/// Equal starts are ordered by (job, position).
pub fn build_classification_dataset(solved: &[SolvedInstance]) -> Result<Dataset> {
    let mut data = Dataset::new(Head::Classification);
    for s in solved {
        check_optimum(s)?;
        let inst = &s.instance;
        let features = normalized_features(inst)?;
        for m in 0..inst.machine_count() {
            let ops = inst.ops_on_machine(m);
            for &a in &ops {
                for &b in &ops {
                    if a == b {
                        continue;
                    }
                    let key = |id: OpId| (s.schedule.start(id), id);
                    let label = if key(a) < key(b) { -1.0 } else { 1.0 };
                    data.rows.push(Row {
                        features: features[inst.flat(a)].diff(&features[inst.flat(b)]),
                        label,
                        source: Provenance {
                            instance: s.id.clone(),
                            op: a,
                            other: Some(b),
                        },
                    });
                }
            }
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{t1, t1_optimum};
    use crate::instance::{brute_force_optimum, generate, Objective};
    use proptest::prelude::*;

    fn solved_t1() -> SolvedInstance {
        SolvedInstance {
            id: "t1".into(),
            instance: t1(),
            schedule: t1_optimum(),
        }
    }

    #[test]
    fn regression_rows_of_t1() {
        let d = build_regression_dataset(&[solved_t1()]).unwrap();
        assert_eq!(d.len(), 4);
        let labels: Vec<f64> = d.labels().collect();
        assert_eq!(labels, vec![0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn classification_rows_of_t1() {
        let d = build_classification_dataset(&[solved_t1()]).unwrap();
        assert_eq!(d.len(), 4);
        let row = d
            .rows
            .iter()
            .find(|r| r.source.op == OpId::new(0, 0) && r.source.other == Some(OpId::new(1, 1)))
            .unwrap();
        assert_eq!(row.label, -1.0);
    }

    #[test]
    fn empty_inputs_give_empty_datasets() {
        assert!(build_regression_dataset(&[]).unwrap().is_empty());
        assert!(build_classification_dataset(&[]).unwrap().is_empty());
    }

    #[test]
    fn nine_by_nine_has_one_row_per_operation() {
        let inst = generate(9, 9, 1.3, 1).unwrap();
        let schedule = Schedule::new(inst.jobs().iter().map(|j| vec![0; j.ops.len()]).collect());
        let d = build_regression_dataset(&[SolvedInstance {
            id: "x".into(),
            instance: inst,
            schedule,
        }])
        .unwrap();
        assert_eq!(d.len(), 81);
    }

    #[test]
    fn incomplete_schedule_is_rejected() {
        let s = SolvedInstance {
            id: "t1".into(),
            instance: t1(),
            schedule: Schedule::new(vec![vec![0, 3]]),
        };
        assert!(matches!(
            build_regression_dataset(std::slice::from_ref(&s)),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_classification_dataset(&[s]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn single_operation_machines_give_no_pairs() {
        use crate::instance::{Job, Operation};
        let inst = JssInstance::new(
            vec![
                Job {
                    release: 0,
                    due: 5,
                    weight: 1,
                    ops: vec![Operation {
                        machine: 0,
                        duration: 2,
                    }],
                },
                Job {
                    release: 0,
                    due: 5,
                    weight: 1,
                    ops: vec![Operation {
                        machine: 1,
                        duration: 2,
                    }],
                },
            ],
            2,
        )
        .unwrap();
        let s = SolvedInstance {
            id: "x".into(),
            instance: inst,
            schedule: Schedule::new(vec![vec![0], vec![0]]),
        };
        assert!(build_classification_dataset(&[s]).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        for d in [
            build_regression_dataset(&[solved_t1()]).unwrap(),
            build_classification_dataset(&[solved_t1()]).unwrap(),
        ] {
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            let back = Dataset::read_csv(&buf[..], Head::Regression).unwrap();
            assert_eq!(back, d);
        }
    }

    #[test]
    fn csv_reports_line_of_bad_row() {
        let mut buf = Vec::new();
        build_regression_dataset(&[solved_t1()])
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        let mut lines: Vec<String> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        lines[2] = format!("zz{}", &lines[2][1..]);
        let text = lines.join("\n");
        assert!(matches!(
            Dataset::read_csv(text.as_bytes(), Head::Regression),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn classification_rows_are_antisymmetric(seed in 0u64..1000) {
            let inst = generate(3, 3, 1.3, seed).unwrap();
            let (_, schedule) = brute_force_optimum(&inst, Objective::Cmax).unwrap();
            let d = build_classification_dataset(&[SolvedInstance { id: "p".into(), instance: inst, schedule }]).unwrap();
            prop_assert_eq!(d.len(), 3 * 6);
            for r in &d.rows {
                let mirror = d.rows.iter().find(|q| q.source.op == r.source.other.unwrap() && q.source.other == Some(r.source.op)).unwrap();
                prop_assert_eq!(mirror.label, -r.label);
                for k in 0..FEATURE_COUNT {
                    prop_assert_eq!(mirror.features.f[k], -r.features.f[k]);
                }
            }
        }
    }
}
