//! End-to-end checks of the command-line contract: exit codes, the one-line
//! JSON error record on stderr, artifact shapes, and manifest replay.
//!
//! Every test drives the compiled binary in a temporary working directory
//! with relative paths, exactly as a shell user would.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};

/// Runs the binary with `args` inside `dir` and captures everything.
fn varcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("varcast binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Parses the JSON error record from the last stderr line.
fn error_record(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_else(|| panic!("no stderr line; stdout: {}", stdout_text(out)));
    serde_json::from_str::<serde_json::Value>(line)
        .unwrap_or_else(|e| panic!("stderr line is not JSON ({e}): {line}"))
}

fn assert_error(out: &Output, exit: i32, kind: &str) -> String {
    assert_eq!(code(out), exit, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let record = error_record(out);
    assert_eq!(record["error"]["kind"], kind, "record: {record}");
    assert_eq!(record["error"]["exit_code"], exit, "record: {record}");
    record["error"]["message"]
        .as_str()
        .expect("message is a string")
        .to_string()
}

/// Tiny deterministic generator so fixture files are reproducible without
/// pulling a dependency into the test.
fn next_unit(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn day(t: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 4, 1).unwrap() + Days::new(t)
}

/// Writes a two-column frame with smooth seasonal structure plus jitter.
fn write_good_frame(path: &Path, rows: u64) {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut text = String::from("date,pos_increase,death_cum\n");
    for t in 0..rows {
        let tf = t as f64;
        let a = 50.0 + 10.0 * (std::f64::consts::TAU * tf / 17.0).cos()
            + 3.0 * (2.0 * next_unit(&mut state) - 1.0);
        let b = 30.0 + 8.0 * (std::f64::consts::TAU * tf / 23.0).sin()
            + 2.0 * (2.0 * next_unit(&mut state) - 1.0);
        text.push_str(&format!("{},{a:.4},{b:.4}\n", day(t)));
    }
    fs::write(path, text).unwrap();
}

/// Writes a frame whose values straddle zero so lower bands go negative.
fn write_near_zero_frame(path: &Path, rows: u64) {
    let mut state = 0x0123_4567_89AB_CDEFu64;
    let mut text = String::from("date,a,b\n");
    for t in 0..rows {
        let a = 0.5 + 2.0 * (2.0 * next_unit(&mut state) - 1.0);
        let b = 0.3 + 1.5 * (2.0 * next_unit(&mut state) - 1.0);
        text.push_str(&format!("{},{a:.4},{b:.4}\n", day(t)));
    }
    fs::write(path, text).unwrap();
}

/// A minimal valid source pair covering 2020-04-01 through 2020-04-05.
const COVID_OK: &str = "date,positive,positiveIncrease,death,recovered,hospitalized\n\
20200405,150,30,12,9,6\n\
20200404,120,25,10,8,5\n\
20200403,95,20,8,6,4\n\
20200402,75,15,6,4,3\n\
20200401,60,10,5,3,2\n";

const WEATHER_OK: &str = "date,temperature,humidity\n\
2020-04-01,10.0,50\n\
2020-04-02,11.0,52\n\
2020-04-03,12.0,54\n\
2020-04-04,13.0,56\n\
2020-04-05,14.0,58\n";

const INGEST_RANGE: &[&str] = &["--start", "2020-04-01", "--end", "2020-04-05"];

#[test]
fn missing_input_file_maps_to_io_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = varcast(
        dir.path(),
        &[
            &["ingest", "--covid", "absent.csv", "--weather", "also_absent.csv"],
            INGEST_RANGE,
        ]
        .concat(),
    );
    let message = assert_error(&out, 3, "io");
    assert!(message.contains("absent.csv"), "message: {message}");
}

#[test]
fn missing_column_maps_to_schema_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("covid.csv"), COVID_OK).unwrap();
    fs::write(
        dir.path().join("weather.csv"),
        "date,temperature\n2020-04-01,10.0\n2020-04-02,11.0\n",
    )
    .unwrap();
    let out = varcast(
        dir.path(),
        &[&["ingest", "--covid", "covid.csv", "--weather", "weather.csv"], INGEST_RANGE].concat(),
    );
    let message = assert_error(&out, 4, "schema");
    assert!(message.contains("humidity"), "message: {message}");
}

#[test]
fn unparseable_cell_maps_to_parse_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let broken = COVID_OK.replace("95,20,8", "95,abc,8");
    assert_ne!(broken, COVID_OK, "replacement target must exist");
    fs::write(dir.path().join("covid.csv"), broken).unwrap();
    fs::write(dir.path().join("weather.csv"), WEATHER_OK).unwrap();
    let out = varcast(
        dir.path(),
        &[&["ingest", "--covid", "covid.csv", "--weather", "weather.csv"], INGEST_RANGE].concat(),
    );
    let message = assert_error(&out, 5, "parse");
    assert!(message.contains("positiveIncrease"), "message: {message}");
}

#[test]
fn multi_day_gap_maps_to_gap_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // 2020-04-03 and 2020-04-04 both missing: too wide to interpolate.
    let gappy = "date,positive,positiveIncrease,death,recovered,hospitalized\n\
20200405,150,30,12,9,6\n\
20200402,75,15,6,4,3\n\
20200401,60,10,5,3,2\n";
    fs::write(dir.path().join("covid.csv"), gappy).unwrap();
    fs::write(dir.path().join("weather.csv"), WEATHER_OK).unwrap();
    let out = varcast(
        dir.path(),
        &[&["ingest", "--covid", "covid.csv", "--weather", "weather.csv"], INGEST_RANGE].concat(),
    );
    let message = assert_error(&out, 6, "gap");
    assert!(message.contains("2 consecutive missing days"), "message: {message}");
}

#[test]
fn too_short_series_maps_to_insufficient_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 12);
    let out = varcast(dir.path(), &["coint", "--frame", "frame.csv"]);
    let message = assert_error(&out, 7, "insufficient_data");
    assert!(message.contains("got 12"), "message: {message}");
}

#[test]
fn collinear_inputs_map_to_degenerate_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,a,b\n");
    let mut state = 7u64;
    for t in 0..40 {
        let a = 50.0 + 10.0 * (t as f64 / 5.0).sin() + next_unit(&mut state);
        text.push_str(&format!("{},{a:.4},5.0\n", day(t)));
    }
    fs::write(dir.path().join("frame.csv"), text).unwrap();
    let out = varcast(dir.path(), &["fit", "--frame", "frame.csv", "--lag", "1"]);
    let message = assert_error(&out, 8, "degenerate");
    assert!(message.contains("collinear"), "message: {message}");
}

#[test]
fn out_of_range_level_maps_to_invalid_argument_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 100);
    let out = varcast(
        dir.path(),
        &["forecast", "--frame", "frame.csv", "--lag", "1", "--level", "1.5"],
    );
    let message = assert_error(&out, 9, "invalid_argument");
    assert!(message.contains("1.5"), "message: {message}");
}

#[test]
fn conflicting_model_and_lag_flags_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 100);
    let fit = varcast(
        dir.path(),
        &["fit", "--frame", "frame.csv", "--lag", "2", "--out-dir", "m"],
    );
    assert_eq!(code(&fit), 0, "stderr: {}", String::from_utf8_lossy(&fit.stderr));
    let out = varcast(
        dir.path(),
        &[
            "forecast", "--frame", "frame.csv", "--model", "m/model.json", "--lag", "2",
        ],
    );
    let message = assert_error(&out, 2, "usage");
    assert!(message.contains("--model"), "message: {message}");
}

#[test]
fn select_lag_table_lists_each_candidate_and_the_chosen_row() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 100);
    let out = varcast(
        dir.path(),
        &["select-lag", "--frame", "frame.csv", "--pmax", "5", "--out-dir", "out"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let table = fs::read_to_string(dir.path().join("out/lag_selection.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "lag,aic,hqc,sc,fpe");
    assert_eq!(lines.len(), 7, "header, five candidates, chosen footer");
    for (i, line) in lines[1..6].iter().enumerate() {
        assert!(
            line.starts_with(&format!("{},", i + 1)),
            "candidate row {i}: {line}"
        );
    }
    let footer: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(footer[0], "chosen");
    assert_eq!(footer.len(), 5);
    for field in &footer[1..] {
        let lag: usize = field.parse().expect("chosen lag is an integer");
        assert!((1..=5).contains(&lag), "chosen lag {lag} outside candidates");
    }
}

#[test]
fn clip_zero_floors_only_the_lower_band() {
    let dir = tempfile::tempdir().unwrap();
    write_near_zero_frame(&dir.path().join("frame.csv"), 120);
    let base = &["forecast", "--frame", "frame.csv", "--lag", "1", "--horizon", "12"];
    let plain = varcast(dir.path(), &[base as &[&str], &["--out-dir", "plain"]].concat());
    assert_eq!(code(&plain), 0, "stderr: {}", String::from_utf8_lossy(&plain.stderr));
    let clipped = varcast(
        dir.path(),
        &[base as &[&str], &["--clip-zero", "--out-dir", "clipped"]].concat(),
    );
    assert_eq!(code(&clipped), 0);

    let read = |name: &str| -> Vec<Vec<String>> {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    };
    let plain_rows = read("plain/forecast.csv");
    let clipped_rows = read("clipped/forecast.csv");
    assert_eq!(plain_rows.len(), clipped_rows.len());
    assert_eq!(plain_rows.len(), 12 * 2, "horizon x variables rows");

    let mut floored = 0;
    for (p, c) in plain_rows.iter().zip(&clipped_rows) {
        // date, variable, point, upper, level are untouched by clipping.
        for field in [0usize, 1, 2, 4, 5] {
            assert_eq!(p[field], c[field], "non-lower field changed: {p:?} vs {c:?}");
        }
        let plain_lower: f64 = p[3].parse().unwrap();
        let clipped_lower: f64 = c[3].parse().unwrap();
        if plain_lower < 0.0 {
            assert_eq!(clipped_lower, 0.0, "negative lower must clip to zero");
            floored += 1;
        } else {
            assert_eq!(p[3], c[3], "non-negative lower must be untouched");
        }
    }
    assert!(floored > 0, "fixture must exercise at least one clipped bound");
}

#[test]
fn manifest_records_relative_paths_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 100);
    let out = varcast(
        dir.path(),
        &["select-lag", "--frame", "frame.csv", "--pmax", "4", "--out-dir", "out"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let manifest_path = dir.path().join("out/select-lag.manifest.txt");
    let text = fs::read_to_string(&manifest_path).unwrap();
    assert!(text.starts_with("tool=varcast\n"), "manifest: {text}");
    assert!(text.contains("subcommand=select-lag\n"));
    assert!(text.contains("input.frame.csv=sha256:"));
    assert!(text.contains("output.out/lag_selection.csv=sha256:"));
    let absolute = dir.path().to_str().unwrap();
    assert!(
        !text.contains(absolute),
        "manifest must not embed the working directory: {text}"
    );

    let rerun = varcast(dir.path(), &["rerun", "out/select-lag.manifest.txt"]);
    assert_eq!(code(&rerun), 0, "stderr: {}", String::from_utf8_lossy(&rerun.stderr));
    assert!(stdout_text(&rerun).contains("rerun ok"), "stdout: {}", stdout_text(&rerun));
}

#[test]
fn tampered_input_makes_rerun_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 100);
    let out = varcast(
        dir.path(),
        &["select-lag", "--frame", "frame.csv", "--pmax", "4", "--out-dir", "out"],
    );
    assert_eq!(code(&out), 0);

    let frame = dir.path().join("frame.csv");
    let mut bytes = fs::read(&frame).unwrap();
    bytes.extend_from_slice(b"2020-07-10,999.0,999.0\n");
    fs::write(&frame, bytes).unwrap();

    let rerun = varcast(dir.path(), &["rerun", "out/select-lag.manifest.txt"]);
    let message = assert_error(&rerun, 10, "manifest_verification");
    assert!(message.contains("frame.csv"), "message: {message}");
}

#[test]
fn replaying_a_rerun_manifest_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("loop.manifest.txt"),
        "tool=varcast\nversion=0.1.0\nsubcommand=rerun\nseed=0\narg.0=rerun\narg.1=loop.manifest.txt\n",
    )
    .unwrap();
    let out = varcast(dir.path(), &["rerun", "loop.manifest.txt"]);
    let message = assert_error(&out, 2, "usage");
    assert!(message.contains("refusing"), "message: {message}");
}

#[test]
fn weekday_comparison_is_written_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    write_good_frame(&dir.path().join("frame.csv"), 130);
    let base = &[
        "backtest", "--frame", "frame.csv", "--cutoffs", "2020-06-25", "--horizon", "10",
        "--lag", "1",
    ];
    let plain = varcast(dir.path(), &[base as &[&str], &["--out-dir", "a"]].concat());
    assert_eq!(code(&plain), 0, "stderr: {}", String::from_utf8_lossy(&plain.stderr));
    assert!(dir.path().join("a/backtest_rows.csv").exists());
    assert!(dir.path().join("a/backtest_summary.csv").exists());
    assert!(
        !dir.path().join("a/backtest_comparison.csv").exists(),
        "comparison table must be opt-in"
    );

    let tuesday = varcast(
        dir.path(),
        &[base as &[&str], &["--weekday", "tue", "--out-dir", "b"]].concat(),
    );
    assert_eq!(code(&tuesday), 0, "stderr: {}", String::from_utf8_lossy(&tuesday.stderr));
    let cmp = fs::read_to_string(dir.path().join("b/backtest_comparison.csv")).unwrap();
    assert!(cmp.lines().count() > 1, "comparison table has data rows");
}

#[test]
fn help_and_version_document_the_interface() {
    let dir = tempfile::tempdir().unwrap();
    let help = varcast(dir.path(), &["--help"]);
    assert_eq!(code(&help), 0);
    let text = stdout_text(&help);
    assert!(text.contains("Exit codes:"), "help: {text}");
    assert!(text.contains("manifest verification failure"), "help: {text}");

    let version = varcast(dir.path(), &["--version"]);
    assert_eq!(code(&version), 0);
    assert!(stdout_text(&version).contains("varcast"));
}
