//! End-to-end tests of the `cvdistill` binary: exit codes, deterministic
//! artifacts, provenance headers, parameter precedence, and the documented
//! failure modes (verification failure → 1, usage error → 2, divergence or
//! impossible herald → 3).

use std::path::Path;
use std::process::{Command, Output};

fn cvdistill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal kills")
}

/// Data rows of a CSV artifact: `#` comment lines and the column header are
/// skipped, everything else splits on commas.
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|f| f.parse::<f64>().expect("numeric field"))
                .collect()
        })
        .collect()
}

#[test]
fn verify_single_check_passes() {
    let out = cvdistill(&["verify", "--only", "gain-stationarity"]);
    assert_eq!(exit_code(&out), 0, "passing check exits 0");
    let text = stdout_of(&out);
    assert!(text.contains("PASS gain-stationarity"), "report line present: {text}");
    assert!(text.contains("all 1 checks passed"), "summary line present: {text}");
}

#[test]
fn verify_impossible_tolerance_exits_one() {
    let out = cvdistill(&["verify", "--only", "gain-stationarity", "--tol", "1e-30"]);
    assert_eq!(exit_code(&out), 1, "failing check exits 1");
    assert!(stdout_of(&out).contains("FAIL"), "failure is reported");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = cvdistill(&["--definitely-not-a-flag"]);
    assert_eq!(exit_code(&out), 2, "clap rejects unknown flags with 2");
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let out = cvdistill(&["figure", "fig99"]);
    assert_eq!(exit_code(&out), 2, "unknown figure name exits 2");
    assert!(stderr_of(&out).contains("unknown figure"), "names the problem");
}

#[test]
fn fig3_csv_is_deterministic_and_timestamp_free() {
    let args = ["figure", "fig3", "--range", "-0.5:3:8"];
    let first = cvdistill(&args);
    let second = cvdistill(&args);
    assert_eq!(exit_code(&first), 0, "figure emits cleanly");
    assert_eq!(first.stdout, second.stdout, "two runs are byte-identical");
    let text = stdout_of(&first);
    assert!(text.starts_with("# cvdistill "), "tool provenance leads the file");
    assert!(text.contains("# lambda = 0.4"), "parameter provenance present");
    assert!(text.contains("kappa2,V_dist,E,F_max,omega_star"), "column header present");
    let lower = text.to_lowercase();
    assert!(
        !lower.contains("time") && !lower.contains("date"),
        "no timestamps in the artifact"
    );
    assert_eq!(csv_rows(&text).len(), 8, "one row per grid point");
}

#[test]
fn scan_rows_track_the_closed_forms() {
    let out = cvdistill(&[
        "scan", "--axis", "kappa2", "--range", "-0.5:3:5", "--cutoff", "14",
    ]);
    assert_eq!(exit_code(&out), 0, "scan emits cleanly");
    let rows = csv_rows(&stdout_of(&out));
    assert_eq!(rows.len(), 5, "one row per grid point");
    for row in &rows {
        let (variance, closed, deficit) = (row[1], row[2], row[7]);
        let gap = (variance - closed).abs();
        let budget = 1e-6f64.max(10.0 * deficit);
        assert!(
            gap < budget,
            "circuit variance tracks the closed form: gap {gap:.3e} vs budget {budget:.3e} \
             at axis value {}",
            row[0]
        );
    }
}

#[test]
fn scan_warns_on_heavy_truncation_but_still_emits() {
    let out = cvdistill(&["scan", "--axis", "kappa2", "--range", "0:1:3", "--cutoff", "4"]);
    assert_eq!(exit_code(&out), 0, "truncation warning does not fail the run");
    assert!(stderr_of(&out).contains("warning"), "stderr flags the deficit");
    assert_eq!(csv_rows(&stdout_of(&out)).len(), 3, "rows are still produced");
}

#[test]
fn gaussify_divergent_input_exits_three() {
    let out = cvdistill(&["gaussify", "--lambda", "0.7", "--cutoff", "10", "--iters", "6"]);
    assert_eq!(exit_code(&out), 3, "runaway iteration exits 3");
    assert!(stderr_of(&out).contains("diverged"), "summary names the outcome");
    assert!(stdout_of(&out).contains("# diverged = true"), "trace is still written");
}

#[test]
fn gaussify_zero_iterations_echoes_the_input() {
    let out = cvdistill(&["gaussify", "--iters", "0", "--cutoff", "10"]);
    assert_eq!(exit_code(&out), 0, "echo run succeeds");
    let text = stdout_of(&out);
    let body: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    assert_eq!(body.len(), 2, "header plus exactly one row");
    assert!(body[1].starts_with("0,"), "the row is step 0: {}", body[1]);
    assert!(body[1].contains("NaN"), "no previous step, so no step distance");
}

#[test]
fn gaussify_converges_at_moderate_squeezing() {
    let out = cvdistill(&[
        "gaussify", "--lambda", "0.4", "--cutoff", "14", "--tol", "1e-6", "--iters", "24",
    ]);
    assert_eq!(exit_code(&out), 0, "convergent run exits 0");
    assert!(stdout_of(&out).contains("# converged = true"), "flagged as converged");
}

#[test]
fn multicopy_matches_its_closed_form() {
    let out = cvdistill(&["multicopy", "--M", "2", "--cutoff", "12"]);
    assert_eq!(exit_code(&out), 0, "multicopy emits cleanly");
    let rows = csv_rows(&stdout_of(&out));
    assert_eq!(rows.len(), 1, "one summary row");
    let row = &rows[0];
    assert_eq!(row[0], 2.0, "copy count echoed");
    assert!(row[1] > 0.0 && row[1] < 1.0, "herald probability is physical");
    assert!(
        (row[2] - row[3]).abs() < 1e-6,
        "lattice variance {} tracks the closed form {}",
        row[2],
        row[3]
    );
    assert!(row[5] > 0.98, "fidelity with the target is high, got {}", row[5]);
}

#[test]
fn config_file_feeds_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "lambda = 0.25  # source squeezing\nT=0.9\n").expect("write config");
    let conf = path.to_str().expect("utf-8 path");

    let from_file = cvdistill(&["multicopy", "--config", conf, "--cutoff", "10"]);
    assert_eq!(exit_code(&from_file), 0, "config-driven run succeeds");
    let text = stdout_of(&from_file);
    assert!(text.contains("# lambda = 0.25"), "config value used: {text}");
    assert!(text.contains("# T = 0.9"), "config value used: {text}");

    let overridden = cvdistill(&[
        "multicopy", "--config", conf, "--cutoff", "10", "--lambda", "0.3",
    ]);
    let text = stdout_of(&overridden);
    assert!(text.contains("# lambda = 0.3"), "explicit flag wins: {text}");
    assert!(text.contains("# T = 0.9"), "unflagged key still comes from the file");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "lambda = 0.25\nwavelength = 780\n").expect("write config");
    let out = cvdistill(&["multicopy", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stray config key is a usage error");
    assert!(stderr_of(&out).contains("wavelength"), "names the stray key");
}

#[test]
fn json_artifact_parses_and_carries_provenance() {
    let out = cvdistill(&["multicopy", "--M", "2", "--cutoff", "10", "--format", "json"]);
    assert_eq!(exit_code(&out), 0, "json emission succeeds");
    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&out)).expect("stdout is valid JSON");
    assert_eq!(doc["provenance"]["tool"], "cvdistill", "tool provenance kept");
    assert_eq!(doc["provenance"]["M"], "2", "parameters recorded");
    let rows = doc["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 1, "one summary row");
    assert_eq!(
        rows[0].as_array().map(Vec::len),
        doc["columns"].as_array().map(Vec::len),
        "row width matches the column list"
    );
}

#[test]
fn plot_writes_an_svg_next_to_the_artifact() {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = dir.path().join("fig3.csv");
    let out = cvdistill(&[
        "figure", "fig3", "--range", "0:3:5",
        "--out", csv.to_str().unwrap(), "--plot",
    ]);
    assert_eq!(exit_code(&out), 0, "plot run succeeds");
    assert!(csv.exists(), "CSV artifact written");
    let svg = Path::new(&csv).with_extension("svg");
    let body = std::fs::read_to_string(&svg).expect("SVG artifact written");
    assert!(body.starts_with("<svg"), "SVG root element leads the file");
    assert!(body.contains("polyline"), "curves are drawn");
}

#[test]
fn plot_without_out_is_a_usage_error() {
    let out = cvdistill(&["figure", "fig3", "--range", "0:3:5", "--plot"]);
    assert_eq!(exit_code(&out), 2, "--plot needs --out");
}

#[test]
fn thread_cap_leaves_results_unchanged() {
    let args = ["scan", "--axis", "kappa2", "--range", "0:2:4", "--cutoff", "10"];
    let free = cvdistill(&args);
    let capped = Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .args(args)
        .env("CVDISTILL_THREADS", "1")
        .output()
        .expect("binary spawns");
    assert_eq!(exit_code(&capped), 0, "capped run succeeds");
    assert_eq!(free.stdout, capped.stdout, "thread count never changes the numbers");

    let garbled = Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .args(["multicopy", "--cutoff", "8"])
        .env("CVDISTILL_THREADS", "three")
        .output()
        .expect("binary spawns");
    assert_eq!(exit_code(&garbled), 0, "garbled cap is ignored, not fatal");
    assert!(stderr_of(&garbled).contains("warning"), "but it is called out");
}

#[test]
fn fig7_emits_the_lossy_sweep() {
    let out = cvdistill(&[
        "figure", "fig7", "--range", "0:2:3", "--cutoff", "8", "--eta", "0.8",
    ]);
    assert_eq!(exit_code(&out), 0, "fig7 emits cleanly");
    let text = stdout_of(&out);
    assert!(text.contains("kappa2,V,probability,norm_deficit"), "fig7 columns: {text}");
    assert!(text.contains("# V_inf = "), "asymptotic levels recorded");
    assert_eq!(csv_rows(&text).len(), 3, "one row per grid point");
}

#[test]
fn fig6_sweeps_the_chosen_axis() {
    let out = cvdistill(&[
        "figure", "fig6", "--axis", "lambda", "--range", "0.1:0.5:5", "--eta", "0.8",
    ]);
    assert_eq!(exit_code(&out), 0, "fig6 emits cleanly");
    let text = stdout_of(&out);
    assert!(
        text.contains("lambda,squeeze,nbar,nbar_leading,nu_prime,nbar_prime"),
        "swept axis leads the columns: {text}"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5, "one row per grid point");
    assert!(
        rows.windows(2).all(|w| w[0][2] < w[1][2]),
        "thermal occupation grows with the squeezing"
    );
}
