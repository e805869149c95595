//! Acceptance gate: one test per shipping criterion, each printing a
//! pass/fail line. Run with `--nocapture` to see the lines as they print.
//!
//! Randomized checks use fixed seeds so a failure is reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use tempfile::TempDir;

use iqa_core::{
    case_iqa, decompose, gate_values, layer_iqa, parse_case, read_events, report_from_values,
    score_answers, serialize_case, Answer, AnswerLevel, AuditAction, CaseFile, DeviceAssessment,
    FactorId, FactorScore, Layer, LayeredFactorScore, MissingPolicy, Percent, Rational, Response,
    Score, ScoringError, ThresholdPolicy, Weights,
};

const PUBLISHED_PER_DEVICE: [(&str, &str); 6] = [
    ("device-1", "54.37"),
    ("device-2", "59.49"),
    ("device-3", "63.73"),
    ("device-4", "89.79"),
    ("device-5", "38.19"),
    ("device-6", "66.68"),
];

fn criterion(number: u8, label: &str, check: impl FnOnce() -> Result<(), String>) {
    match check() {
        Ok(()) => println!("acceptance {number:02} {label}: PASS"),
        Err(reason) => {
            println!("acceptance {number:02} {label}: FAIL");
            panic!("criterion {number}: {reason}");
        }
    }
}

fn ensure(condition: bool, reason: impl ToString) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(reason.to_string())
    }
}

fn iqa() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_iqa"));
    cmd.env_remove("IQA_AUDIT_LOG");
    cmd
}

fn fixture_text() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/case_study_2.json");
    fs::read_to_string(path).unwrap()
}

fn setup_case(dir: &TempDir) -> PathBuf {
    let dest = dir.path().join("case_study_2.json");
    fs::write(&dest, fixture_text()).unwrap();
    dest
}

fn run(cmd: &mut Command) -> Result<Output, String> {
    cmd.output().map_err(|e| format!("failed to spawn: {e}"))
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// Random complete case: every device carries all nine factors.
fn random_complete_case(rng: &mut StdRng, max_devices: usize) -> CaseFile {
    let mut case = CaseFile::new("case-random");
    let devices = rng.gen_range(1..=max_devices);
    for i in 0..devices {
        let mut device = DeviceAssessment::new(format!("d{i}"), "generated").unwrap();
        for factor in FactorId::ALL {
            device.insert_score(
                FactorScore::new(
                    factor,
                    Score::from_hundredths(rng.gen_range(0..=100)).unwrap(),
                    "generated value",
                    "random case",
                )
                .unwrap(),
            );
        }
        case.devices.push(device);
    }
    case
}

/// Random partial case: each device keeps a random nonempty factor subset.
fn random_partial_case(rng: &mut StdRng, min_per_device: usize) -> CaseFile {
    let mut case = CaseFile::new("case-random");
    for i in 0..rng.gen_range(1..=6) {
        let mut device = DeviceAssessment::new(format!("d{i}"), "generated").unwrap();
        let mut order: Vec<FactorId> = FactorId::ALL.to_vec();
        order.shuffle(rng);
        let keep = rng.gen_range(min_per_device..=9);
        for factor in order.into_iter().take(keep) {
            device.insert_score(
                FactorScore::new(
                    factor,
                    Score::from_hundredths(rng.gen_range(0..=100)).unwrap(),
                    "generated value",
                    "random case",
                )
                .unwrap(),
            );
        }
        case.devices.push(device);
    }
    case
}

fn fraction(text: &str) -> Rational {
    Percent::parse(text).unwrap().value()
}

fn magnitude(r: Rational) -> Rational {
    if r < Rational::from_integer(0) {
        -r
    } else {
        r
    }
}

/// Reads `value` out of an `aggregate,<label>,...` CSV row.
fn csv_aggregate(csv: &str, label: &str) -> Result<Rational, String> {
    let prefix = format!("aggregate,{label},");
    let row = csv
        .lines()
        .find(|l| l.starts_with(&prefix))
        .ok_or_else(|| format!("no aggregate row for {label} in:\n{csv}"))?;
    let value = row.split(',').nth(2).unwrap();
    Ok(fraction(value))
}

#[test]
fn c01_fixture_category_aggregates() {
    criterion(1, "fixture category aggregates", || {
        let dir = TempDir::new().unwrap();
        let case = setup_case(&dir);
        let started = Instant::now();
        let output = run(iqa().arg("assess").arg(&case))?;
        let elapsed = started.elapsed();
        ensure(output.status.code() == Some(0), "assess did not exit 0")?;
        ensure(
            elapsed < Duration::from_secs(1),
            format!("assess took {elapsed:?}, budget is 1s"),
        )?;

        let csv = fs::read_to_string(dir.path().join("case-study-2.csv")).unwrap();
        let tolerance = Rational::new(5, 100);
        let ii = csv_aggregate(&csv, "IQA_II")?;
        let iii = csv_aggregate(&csv, "IQA_III")?;
        let ii_delta = magnitude(ii - fraction("56.30"));
        let iii_delta = magnitude(iii - fraction("54.74"));
        ensure(
            ii_delta <= tolerance,
            format!("IQA_II {ii} is not within 0.05 of 56.30"),
        )?;
        ensure(
            iii_delta <= tolerance,
            format!("IQA_III {iii} is not within 0.05 of 54.74"),
        )
    });
}

#[test]
fn c02_published_value_aggregation() {
    criterion(2, "published value aggregation", || {
        let started = Instant::now();
        let values: Vec<(String, Percent)> = PUBLISHED_PER_DEVICE
            .iter()
            .map(|(id, v)| (id.to_string(), Percent::parse(v).unwrap()))
            .collect();
        let report = report_from_values("published", &values).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        let delta = magnitude(report.total.value.value() - fraction("62.04"));
        ensure(
            delta <= Rational::new(1, 100),
            format!("total {} is not within 0.01 of 62.04", report.total.value),
        )?;
        ensure(
            elapsed < Duration::from_secs(1),
            format!("aggregation took {elapsed:?}, budget is 1s"),
        )
    });
}

#[test]
fn c03_discrepancy_reporting() {
    criterion(3, "discrepancy reporting", || {
        let dir = TempDir::new().unwrap();
        let case = setup_case(&dir);
        let output = run(iqa().arg("assess").arg(&case))?;
        ensure(
            output.status.code() == Some(0),
            "assess must exit 0 even when references are irreproducible",
        )?;
        let stdout = stdout_of(&output);
        ensure(
            stdout.contains("device-4  expected 89.79  computed 59.00"),
            format!("report does not flag device-4:\n{stdout}"),
        )?;
        ensure(
            stdout.contains("CS") && stdout.contains("no device in this case records"),
            format!("report does not explain the absent factor:\n{stdout}"),
        )
    });
}

#[test]
fn c04_partition_identity() {
    criterion(4, "partition identity", || {
        let mut rng = StdRng::seed_from_u64(41);
        let started = Instant::now();
        for round in 0..1_000 {
            let case = random_complete_case(&mut rng, 20);
            let d = decompose(&case).map_err(|e| format!("round {round}: {e}"))?;
            ensure(
                d.recombined == d.total,
                format!(
                    "round {round}: recombined {} differs from total {}",
                    d.recombined, d.total
                ),
            )?;
        }
        let elapsed = started.elapsed();
        ensure(
            elapsed < Duration::from_secs(5),
            format!("1,000 cases took {elapsed:?}, budget is 5s"),
        )
    });
}

#[test]
fn c05_aggregation_invariants() {
    criterion(5, "aggregation invariants", || {
        let mut rng = StdRng::seed_from_u64(42);

        // bounds under every policy that can evaluate the case
        for round in 0..1_000 {
            let case = {
                let mut c = random_partial_case(&mut rng, 1);
                c.missing_policy = if round % 2 == 0 {
                    MissingPolicy::AvailableOnly
                } else {
                    MissingPolicy::ImputeZero
                };
                c
            };
            let total = case_iqa(&case).map_err(|e| e.to_string())?.value.value();
            ensure(
                total >= Rational::from_integer(0) && total <= Rational::from_integer(100),
                format!("round {round}: total {total} out of bounds"),
            )?;
        }

        // raising one value never lowers the case coefficient
        for round in 0..1_000 {
            let mut case = random_complete_case(&mut rng, 6);
            let before = case_iqa(&case).unwrap().value;
            let device = rng.gen_range(0..case.devices.len());
            let factor = FactorId::ALL[rng.gen_range(0..9)];
            let old = case.devices[device].score(factor).unwrap().value();
            let raised = rng.gen_range(old.hundredths()..=100);
            case.devices[device].insert_score(
                FactorScore::new(
                    factor,
                    Score::from_hundredths(raised).unwrap(),
                    "raised value",
                    "invariant check",
                )
                .unwrap(),
            );
            let after = case_iqa(&case).unwrap().value;
            ensure(
                after >= before,
                format!("round {round}: raising {factor} lowered {before} to {after}"),
            )?;
        }

        // device order is irrelevant
        for round in 0..1_000 {
            let case = random_complete_case(&mut rng, 6);
            let mut shuffled = case.clone();
            shuffled.devices.shuffle(&mut rng);
            ensure(
                case_iqa(&case).unwrap().value == case_iqa(&shuffled).unwrap().value,
                format!("round {round}: device order changed the coefficient"),
            )?;
        }

        // a case where every value is v scores exactly 100v
        for round in 0..1_000 {
            let v = rng.gen_range(0..=100u8);
            let n = rng.gen_range(1..=8);
            let mut case = CaseFile::new("case-constant");
            for i in 0..n {
                let mut device = DeviceAssessment::new(format!("d{i}"), "generated").unwrap();
                for factor in FactorId::ALL {
                    device.insert_score(
                        FactorScore::new(
                            factor,
                            Score::from_hundredths(v).unwrap(),
                            "constant value",
                            "invariant check",
                        )
                        .unwrap(),
                    );
                }
                case.devices.push(device);
            }
            ensure(
                case_iqa(&case).unwrap().value.value() == Rational::from_integer(v as i128),
                format!("round {round}: constant case at {v} missed"),
            )?;
        }

        // uniform weights reproduce the unweighted coefficient
        for round in 0..1_000 {
            let plain = random_complete_case(&mut rng, 6);
            let mut weighted = plain.clone();
            let w = Rational::from_integer(rng.gen_range(1..=9));
            weighted.weights =
                Some(Weights::new(FactorId::ALL.into_iter().map(|f| (f, w)).collect()).unwrap());
            ensure(
                case_iqa(&plain).unwrap().value == case_iqa(&weighted).unwrap().value,
                format!("round {round}: uniform weights changed the coefficient"),
            )?;
        }

        // excluding a factor by weight matches deleting its scores
        for round in 0..1_000 {
            let base = random_partial_case(&mut rng, 2);
            let dropped = FactorId::ALL[rng.gen_range(0..9)];
            let mut weighted = base.clone();
            weighted.weights = Some(
                Weights::new(
                    FactorId::ALL
                        .into_iter()
                        .filter(|f| *f != dropped)
                        .map(|f| (f, Rational::from_integer(1)))
                        .collect(),
                )
                .unwrap(),
            );
            let mut deleted = base.clone();
            for device in &mut deleted.devices {
                device.remove_score(dropped);
            }
            ensure(
                case_iqa(&weighted).unwrap().value == case_iqa(&deleted).unwrap().value,
                format!("round {round}: zero weight and deletion disagree on {dropped}"),
            )?;
        }

        Ok(())
    });
}

#[test]
fn c06_layer_coefficient_oracle() {
    criterion(6, "layer coefficient oracle", || {
        let mut rng = StdRng::seed_from_u64(43);
        for round in 0..500 {
            // raw grid first, case second, so the oracle never reads the case
            let devices = rng.gen_range(1..=6);
            let mut grid: Vec<Vec<Option<u8>>> = Vec::new();
            for _ in 0..devices {
                grid.push(
                    (0..27)
                        .map(|_| rng.gen_bool(0.4).then(|| rng.gen_range(0..=100u8)))
                        .collect(),
                );
            }

            let mut case = CaseFile::new("case-layered");
            for (i, cells) in grid.iter().enumerate() {
                let mut device = DeviceAssessment::new(format!("d{i}"), "generated").unwrap();
                for (j, cell) in cells.iter().enumerate() {
                    if let Some(h) = cell {
                        device.insert_layered(
                            LayeredFactorScore::new(
                                FactorId::ALL[j / 3],
                                Layer::ALL[j % 3],
                                Score::from_hundredths(*h).unwrap(),
                                "generated cell",
                                "oracle check",
                            )
                            .unwrap(),
                        );
                    }
                }
                case.devices.push(device);
            }

            for (l, layer) in Layer::ALL.into_iter().enumerate() {
                // double summation: per-device mean of the layer's cells,
                // summed over the devices that have any
                let mut raw = Rational::from_integer(0);
                let mut h = 0i128;
                for cells in &grid {
                    let mut sum = 0i128;
                    let mut m = 0i128;
                    for (j, cell) in cells.iter().enumerate() {
                        if j % 3 == l {
                            if let Some(value) = cell {
                                sum += *value as i128;
                                m += 1;
                            }
                        }
                    }
                    if m > 0 {
                        raw += Rational::new(sum, 100 * m);
                        h += 1;
                    }
                }

                match layer_iqa(&case, layer) {
                    Ok(result) => {
                        ensure(
                            result.raw == raw,
                            format!("round {round}: {layer} raw {} vs oracle {raw}", result.raw),
                        )?;
                        ensure(
                            result.normalized.value()
                                == raw / Rational::from_integer(h) * Rational::from_integer(100),
                            format!("round {round}: {layer} normalization is not raw/h*100"),
                        )?;
                    }
                    Err(ScoringError::NoLayeredScores { .. }) => {
                        ensure(h == 0, format!("round {round}: {layer} skipped despite cells"))?;
                    }
                    Err(other) => return Err(format!("round {round}: {other}")),
                }
            }
        }
        Ok(())
    });
}

#[test]
fn c07_gate_audit() {
    criterion(7, "gate audit", || {
        // the published per-device values gate to the same partition
        let published: BTreeMap<String, Percent> = PUBLISHED_PER_DEVICE
            .iter()
            .map(|(id, v)| (id.to_string(), Percent::parse(v).unwrap()))
            .collect();
        let policy = ThresholdPolicy::parse("50", "retention floor").unwrap();
        let outcome = gate_values(&published, &policy);
        ensure(
            outcome.discarded() == ["device-5".to_string()],
            format!("published values discarded {:?}", outcome.discarded()),
        )?;
        ensure(outcome.retained().len() == 5, "published values must retain five")?;

        let dir = TempDir::new().unwrap();
        let case = setup_case(&dir);
        let output = run(iqa().arg("gate").arg(&case).args([
            "--cutoff",
            "50",
            "--justify",
            "retain devices scoring at least half marks",
        ]))?;
        ensure(output.status.code() == Some(0), "gate did not exit 0")?;

        let events = read_events(dir.path().join("case_study_2.audit.jsonl"))
            .map_err(|e| e.to_string())?;
        let event = events.last().ok_or("no audit event appended")?;
        ensure(event.action == AuditAction::GateApplied, "last event is not a gate")?;
        ensure(
            event.justification.as_deref() == Some("retain devices scoring at least half marks"),
            "gate event lacks its justification",
        )?;
        let decisions = event.detail["decisions"]
            .as_object()
            .ok_or("gate event lacks decisions")?;
        ensure(
            decisions.len() == 6,
            format!("expected six decisions, found {}", decisions.len()),
        )?;
        for (id, _) in PUBLISHED_PER_DEVICE {
            let retained = decisions[id]["retained"].as_bool().unwrap();
            ensure(
                retained == (id != "device-5"),
                format!("decision for {id} is {retained}"),
            )?;
        }

        let output = run(iqa().arg("gate").arg(&case).args(["--cutoff", "50"]))?;
        ensure(
            output.status.code() == Some(2),
            "omitting the justification must exit 2",
        )?;
        let output = run(iqa()
            .arg("gate")
            .arg(&case)
            .args(["--cutoff", "50", "--justify", "  "]))?;
        ensure(
            output.status.code() == Some(2),
            "a blank justification must exit 2",
        )
    });
}

/// Vertices of every `class="series"` polygon, in document order.
fn series_polygons(svg: &str) -> Vec<Vec<(f64, f64)>> {
    let mut polygons = Vec::new();
    for part in svg.split("<polygon class=\"series\"").skip(1) {
        let points = part.split("points=\"").nth(1).unwrap();
        let points = &points[..points.find('"').unwrap()];
        polygons.push(
            points
                .split_whitespace()
                .map(|pair| {
                    let (x, y) = pair.split_once(',').unwrap();
                    (x.parse::<f64>().unwrap(), y.parse::<f64>().unwrap())
                })
                .collect(),
        );
    }
    polygons
}

fn shoelace_area(vertices: &[(f64, f64)]) -> f64 {
    let n = vertices.len();
    let mut doubled = 0.0;
    for i in 0..n {
        let (x1, y1) = vertices[i];
        let (x2, y2) = vertices[(i + 1) % n];
        doubled += x1 * y2 - x2 * y1;
    }
    doubled.abs() / 2.0
}

#[test]
fn c08_device_radar_chart() {
    criterion(8, "device radar chart", || {
        let dir = TempDir::new().unwrap();
        let case_path = setup_case(&dir);
        for out in ["first", "second"] {
            let output = run(iqa()
                .arg("chart")
                .arg(&case_path)
                .args(["--view", "devices", "--out"])
                .arg(dir.path().join(out)))?;
            ensure(output.status.code() == Some(0), "chart did not exit 0")?;
        }
        let first = fs::read(dir.path().join("first/case-study-2-devices.svg")).unwrap();
        let second = fs::read(dir.path().join("second/case-study-2-devices.svg")).unwrap();
        ensure(first == second, "repeated renders differ")?;

        let svg = String::from_utf8(first).unwrap();
        let polygons = series_polygons(&svg);
        ensure(
            polygons.len() == 6,
            format!("expected 6 series polygons, found {}", polygons.len()),
        )?;
        let spokes = svg.matches("class=\"spoke\"").count();
        ensure(spokes == 8, format!("expected 8 axes, found {spokes} spokes"))?;

        // vertex radii must match the recorded values at canvas scale
        let case = parse_case(&fixture_text()).unwrap();
        let factors = case.recorded_factors();
        ensure(factors.len() == 8, "fixture must chart eight axes")?;
        for (device, polygon) in case.devices.iter().zip(&polygons) {
            ensure(
                polygon.len() == factors.len(),
                format!("{} polygon has {} vertices", device.device_id(), polygon.len()),
            )?;
            for (factor, (x, y)) in factors.iter().zip(polygon) {
                let radius = ((x - 300.0).powi(2) + (y - 310.0).powi(2)).sqrt();
                let expected = device.score(*factor).unwrap().value().unit();
                let expected = 200.0 * (*expected.numer() as f64) / (*expected.denom() as f64);
                ensure(
                    (radius - expected).abs() <= 0.5,
                    format!(
                        "{} {} vertex radius {radius:.2} vs expected {expected:.2}",
                        device.device_id(),
                        factor.code()
                    ),
                )?;
            }
        }

        let area_4 = shoelace_area(&polygons[3]);
        let area_5 = shoelace_area(&polygons[4]);
        ensure(
            area_4 > area_5,
            format!("device-4 area {area_4:.1} does not exceed device-5 area {area_5:.1}"),
        )
    });
}

#[test]
fn c09_round_trip_stability() {
    criterion(9, "round-trip stability", || {
        let text = fixture_text();
        let case = parse_case(&text).map_err(|e| e.to_string())?;
        let serialized = serialize_case(&case);
        let reparsed = parse_case(&serialized).map_err(|e| e.to_string())?;
        ensure(reparsed == case, "fixture round trip lost structure")?;
        ensure(serialized == text, "fixture bytes are not canonical")?;

        let mut rng = StdRng::seed_from_u64(44);
        for round in 0..500 {
            let mut case = random_partial_case(&mut rng, 1);
            if rng.gen_bool(0.3) {
                let factors: Vec<FactorId> = FactorId::ALL
                    .into_iter()
                    .filter(|_| rng.gen_bool(0.7))
                    .collect();
                if !factors.is_empty() {
                    case.weights = Some(
                        Weights::new(
                            factors
                                .into_iter()
                                .map(|f| (f, Rational::from_integer(rng.gen_range(1..=5))))
                                .collect(),
                        )
                        .unwrap(),
                    );
                }
            }
            if rng.gen_bool(0.3) {
                case.threshold = Some(
                    ThresholdPolicy::parse(&rng.gen_range(0..=100u8).to_string(), "random gate")
                        .unwrap(),
                );
            }
            let text = serialize_case(&case);
            let parsed = parse_case(&text).map_err(|e| format!("round {round}: {e}"))?;
            ensure(parsed == case, format!("round {round}: structure lost"))?;
            ensure(
                serialize_case(&parsed) == text,
                format!("round {round}: bytes not stable"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn c10_checklist_rubric() {
    criterion(10, "checklist rubric", || {
        let answer = |question: usize, level: AnswerLevel| Answer {
            question,
            response: Response::Level(level),
            note: format!("graded {}", level.name()),
        };

        let all_full: Vec<Answer> = (0..3).map(|q| answer(q, AnswerLevel::Full)).collect();
        let value = score_answers(FactorId::Dst, &all_full).unwrap().value();
        ensure(value.to_string() == "1.00", format!("all full graded {value}"))?;

        let mixed = vec![answer(0, AnswerLevel::Good), answer(1, AnswerLevel::Partial)];
        let value = score_answers(FactorId::Dtc, &mixed).unwrap().value();
        ensure(value.to_string() == "0.63", format!("good+partial graded {value}"))?;

        let single_no = vec![answer(0, AnswerLevel::No)];
        let value = score_answers(FactorId::Sr, &single_no).unwrap().value();
        ensure(value.to_string() == "0.00", format!("single no graded {value}"))?;

        // monotone over all 25 two-question grade combinations
        let mut grades = Vec::new();
        for a in AnswerLevel::ALL {
            for b in AnswerLevel::ALL {
                let value = score_answers(FactorId::Dtc, &[answer(0, a), answer(1, b)])
                    .unwrap()
                    .value();
                grades.push((a, b, value));
            }
        }
        ensure(grades.len() == 25, "expected 25 combinations")?;
        for (a, b, value) in &grades {
            for (a2, b2, value2) in &grades {
                if a2 >= a && b2 >= b {
                    ensure(
                        value2 >= value,
                        format!("({a2}, {b2}) graded {value2} below ({a}, {b}) at {value}"),
                    )?;
                }
            }
        }
        Ok(())
    });
}
