//! End-to-end tests of the `laplab` binary: the exit-code contract
//! (0 success, 1 validation/I/O error, 2 bound violation), a golden
//! transcript pinning every documented flag, closed-form fixtures, and
//! the simulate → check-bounds/rate-fit/plot round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use laplab_core::parse_csv;

const BIN: &str = env!("CARGO_BIN_EXE_laplab");

/// Runs the binary with a scrubbed environment (no inherited seed).
fn laplab(args: &[&str]) -> Output {
    laplab_in(args, None, &[])
}

fn laplab_in(args: &[&str], dir: Option<&Path>, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("LAPLAB_SEED");
    if let Some(dir) = dir {
        cmd.current_dir(dir);
    }
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("the laplab binary should run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout should be UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr should be UTF-8")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("the binary should exit, not be signalled")
}

#[track_caller]
fn assert_exit(output: &Output, expected: i32) {
    assert_eq!(
        exit_code(output),
        expected,
        "stdout:\n{}\nstderr:\n{}",
        stdout(output),
        stderr(output)
    );
}

/// Extracts the numeric tail of a `label: value` stdout line.
#[track_caller]
fn field(output: &Output, label: &str) -> f64 {
    let text = stdout(output);
    let line = text
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no {label:?} line in:\n{text}"));
    line[label.len()..].trim().parse().expect("the field should be numeric")
}

#[test]
fn help_transcript_matches_golden_file() {
    let mut transcript = String::new();
    transcript.push_str("$ laplab --help\n");
    let top = laplab(&["--help"]);
    assert_exit(&top, 0);
    transcript.push_str(&stdout(&top));
    for sub in [
        "approx",
        "exact",
        "ratio",
        "simulate",
        "check-bounds",
        "rate-fit",
        "diagnose",
        "plot",
    ] {
        transcript.push_str(&format!("\n$ laplab {sub} --help\n"));
        let out = laplab(&[sub, "--help"]);
        assert_exit(&out, 0);
        transcript.push_str(&stdout(&out));
    }
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    let golden = std::fs::read_to_string(&golden_path).expect("golden help transcript");
    assert_eq!(
        transcript, golden,
        "help output drifted from tests/golden/help.txt; \
regenerate the golden file if the change is intentional"
    );
}

#[test]
fn version_and_parse_failures_use_the_exit_contract() {
    let version = laplab(&["--version"]);
    assert_exit(&version, 0);
    assert!(stdout(&version).starts_with("laplab "));

    assert_exit(&laplab(&["frobnicate"]), 1);
    assert_exit(&laplab(&["approx", "--no-such-flag"]), 1);
    // Missing required clap argument.
    assert_exit(&laplab(&["simulate"]), 1);
}

#[test]
fn approx_fixture_matches_the_closed_form() {
    let out = laplab(&["approx", "--model", "bernoulli", "--n", "4", "--heads", "2"]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("mode: 0.5\n"), "mode line missing in:\n{text}");
    // (2/2)·ln(1/2)·4 + ½ln(2π·(1/4)/4) — the flat-prior coin with two
    // heads in four flips has its posterior mode at 1/2.
    let log_laplace = field(&out, "log_laplace:");
    assert!((log_laplace - (-3.239_944_550_154_999)).abs() < 1e-12);
    assert!((log_laplace.exp() - 0.039_166_07).abs() < 1e-8);
}

#[test]
fn exact_fixture_matches_the_closed_form() {
    let out = laplab(&["exact", "--model", "bernoulli", "--n", "4", "--heads", "2"]);
    assert_exit(&out, 0);
    // ∫ θ²(1−θ)² dθ = B(3,3) = 1/30.
    assert!((field(&out, "log_exact:") - (1.0f64 / 30.0).ln()).abs() < 1e-12);
}

#[test]
fn ratio_fixtures_match_the_closed_forms() {
    let coin = laplab(&["ratio", "--model", "bernoulli", "--n", "2", "--heads", "1"]);
    assert_exit(&coin, 0);
    assert!((field(&coin, "ratio:") - 0.752_252_778_063_675_1).abs() < 1e-13);

    let cells = laplab(&["ratio", "--model", "multinomial", "--counts", "1,1"]);
    assert_exit(&cells, 0);
    assert!((field(&cells, "ratio:") - 1.063_846_081_070_487).abs() < 1e-13);

    let counts = laplab(&["ratio", "--model", "poisson", "--counts", "0,1,2"]);
    assert_exit(&counts, 0);
    assert!((field(&counts, "ratio:") - 1.028_064_517_918_789_3).abs() < 1e-13);
    assert!(
        stdout(&counts).contains("theta-independent"),
        "the count-model ratio should note that the exposure scale cancels"
    );

    // Same data, different exposure: the ratio must not move at all.
    let rescaled = laplab(&[
        "ratio", "--model", "poisson", "--counts", "0,1,2", "--theta", "7.5",
    ]);
    assert_exit(&rescaled, 0);
    assert_eq!(field(&rescaled, "ratio:"), field(&counts, "ratio:"));

    // An all-zero count dataset has no interior mode.
    assert_exit(&laplab(&["ratio", "--model", "poisson", "--counts", "0,0"]), 1);
}

#[test]
fn dataset_flags_are_validated_per_family() {
    let cases: &[&[&str]] = &[
        &["approx", "--model", "bernoulli", "--counts", "1,2"],
        &["approx", "--model", "bernoulli", "--n", "4"],
        &["approx", "--model", "multinomial", "--n", "5"],
        &["approx", "--model", "multinomial", "--counts", "1,2", "--theta", "2.0"],
        &["ratio", "--model", "poisson"],
        &["ratio", "--model", "poisson", "--counts", "1,2", "--heads", "1"],
        &["approx", "--model", "bernoulli", "--n", "4", "--heads", "9"],
    ];
    for args in cases {
        let out = laplab(args);
        assert_exit(&out, 1);
        assert!(
            stderr(&out).starts_with("error: "),
            "expected a diagnostic for {args:?}, got:\n{}",
            stderr(&out)
        );
    }
}

struct Sweep {
    dir: tempfile::TempDir,
    csv: PathBuf,
}

/// A coin sweep big enough for a rate fit (3 sample sizes × 40 reps).
fn coin_sweep() -> Sweep {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = dir.path().join("coin.csv");
    let out = laplab(&[
        "simulate",
        "--model",
        "bernoulli",
        "--theta-star",
        "0.5",
        "--n-grid",
        "14,100,1000",
        "--reps",
        "40",
        "--seed",
        "42",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    Sweep { dir, csv }
}

#[test]
fn simulate_writes_parseable_csv_and_json() {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = dir.path().join("sweep.csv");
    let json = dir.path().join("sweep.json");
    let out = laplab(&[
        "simulate",
        "--model",
        "poisson",
        "--lambda-star",
        "0.5",
        "--n-grid",
        "10,100",
        "--reps",
        "25",
        "--seed",
        "11",
        "--out",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("base seed 11"), "summary should echo the seed:\n{text}");
    assert!(text.contains("t4 (ratio >= 1 + 1/(26n*lambda_star)):"));

    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.n == 10 || r.n == 100));

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed.as_array().map(Vec::len), Some(50));
}

#[test]
fn check_bounds_passes_a_clean_sweep_and_flags_corruption() {
    let sweep = coin_sweep();
    let clean = laplab(&["check-bounds", sweep.csv.to_str().unwrap()]);
    assert_exit(&clean, 0);
    assert!(stdout(&clean).contains("all recorded bounds hold"));

    let text = std::fs::read_to_string(&sweep.csv).unwrap();
    let (header, body) = text.split_once('\n').unwrap();
    let mut lines = body.lines();
    let first = lines.next().unwrap();

    // A recorded verdict that contradicts the stored error is data
    // corruption (exit 1), not a bound violation.
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields[8], "true", "the first record should be t2-applicable");
    let mut flipped = fields.clone();
    flipped[9] = if fields[9] == "true" { "false" } else { "true" };
    let corrupt_path = sweep.dir.path().join("corrupt.csv");
    std::fs::write(&corrupt_path, format!("{header}\n{}\n", flipped.join(","))).unwrap();
    let corrupt = laplab(&["check-bounds", corrupt_path.to_str().unwrap()]);
    assert_exit(&corrupt, 1);
    assert!(stderr(&corrupt).contains("disagrees with the recomputed inequality"));

    // A consistent record whose error genuinely breaks the bound is a
    // violation (exit 2): −1e−9 is far above −1/(26·14).
    let mut violating = fields.clone();
    violating[6] = "-1.0000000000000000e-9";
    violating[7] = "1.0000000000000000e-9";
    violating[9] = "false";
    let violation_path = sweep.dir.path().join("violation.csv");
    std::fs::write(&violation_path, format!("{header}\n{}\n", violating.join(","))).unwrap();
    let violation = laplab(&["check-bounds", violation_path.to_str().unwrap()]);
    assert_exit(&violation, 2);
    let report = stdout(&violation);
    assert!(report.contains("violation: t2 at model=bernoulli n=14"), "{report}");
    assert!(report.contains("bound violations found: 1"), "{report}");
}

#[test]
fn rate_fit_reports_the_decay_rate() {
    let sweep = coin_sweep();
    let text_run = laplab(&["rate-fit", sweep.csv.to_str().unwrap()]);
    assert_exit(&text_run, 0);
    assert!(stdout(&text_run).contains("statistic: median"));
    let slope = field(&text_run, "slope:");
    assert!((-1.15..=-0.85).contains(&slope), "slope {slope} should be near −1");
    assert!(field(&text_run, "r_squared:") > 0.99);

    let json_run = laplab(&[
        "rate-fit",
        sweep.csv.to_str().unwrap(),
        "--statistic",
        "q90",
        "--json",
    ]);
    assert_exit(&json_run, 0);
    let fit: serde_json::Value = serde_json::from_str(&stdout(&json_run)).unwrap();
    assert_eq!(fit["statistic"], "q90");
    assert_eq!(fit["points"].as_array().map(Vec::len), Some(3));
    assert!(fit["slope"].as_f64().unwrap() < -0.8);
}

#[test]
fn plot_renders_an_svg_with_the_model_floor() {
    let sweep = coin_sweep();
    let svg_path = sweep.dir.path().join("sweep.svg");
    let out = laplab(&[
        "plot",
        sweep.csv.to_str().unwrap(),
        "--out",
        svg_path.to_str().unwrap(),
        "--title",
        "coin error decay",
    ]);
    assert_exit(&out, 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("coin error decay"));
    assert!(svg.contains("floor 1/(26&#183;n)"));

    // The count-model floor depends on the true rate, so the plot
    // refuses to guess it.
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = dir.path().join("count.csv");
    let sim = laplab(&[
        "simulate", "--model", "poisson", "--lambda-star", "0.5", "--n-grid", "10,100,1000",
        "--reps", "40", "--seed", "3", "--out", csv.to_str().unwrap(),
    ]);
    assert_exit(&sim, 0);
    let missing = laplab(&[
        "plot", csv.to_str().unwrap(), "--out", dir.path().join("c.svg").to_str().unwrap(),
    ]);
    assert_exit(&missing, 1);
    let with_rate = laplab(&[
        "plot", csv.to_str().unwrap(), "--out", dir.path().join("c.svg").to_str().unwrap(),
        "--lambda-star", "0.5",
    ]);
    assert_exit(&with_rate, 0);
    assert!(std::fs::read_to_string(dir.path().join("c.svg"))
        .unwrap()
        .contains("floor 1/(13&#183;n)"));

    // Mixed families in one CSV cannot share axes or a floor.
    let coin_text = std::fs::read_to_string(&sweep.csv).unwrap();
    let count_text = std::fs::read_to_string(&csv).unwrap();
    let mixed_path = dir.path().join("mixed.csv");
    let count_body = count_text.split_once('\n').unwrap().1;
    std::fs::write(&mixed_path, format!("{coin_text}{count_body}")).unwrap();
    let mixed = laplab(&[
        "plot", mixed_path.to_str().unwrap(), "--out",
        dir.path().join("m.svg").to_str().unwrap(),
    ]);
    assert_exit(&mixed, 1);
    assert!(stderr(&mixed).contains("mixes model families"));
}

#[test]
fn diagnose_emits_a_json_report() {
    let out = laplab(&[
        "diagnose", "--model", "bernoulli", "--n", "20", "--heads", "11",
        "--theta-star", "0.5",
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["model"], "bernoulli");
    assert_eq!(report["n"], 20);
    assert!(report["a2_eig_bounds"][0].as_f64().unwrap() > 0.0);

    // The truth parameter must match the dataset's family.
    let mismatched = laplab(&[
        "diagnose", "--model", "bernoulli", "--n", "20", "--heads", "11",
        "--lambda-star", "2.0",
    ]);
    assert_exit(&mismatched, 1);
}

#[test]
fn seed_resolution_prefers_flag_then_config_then_env() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "distribution": {"model": "bernoulli", "theta_star": 0.5},
  "sample_sizes": [14, 50],
  "replicates": 5,
  "base_seed": 7
}"#,
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let base: Vec<String> = vec![
        "simulate".into(),
        "--config".into(),
        config_path.to_str().unwrap().into(),
        "--out".into(),
        out_path.to_str().unwrap().into(),
    ];
    let base_refs: Vec<&str> = base.iter().map(String::as_str).collect();

    // Flag beats config and environment.
    let mut with_flag = base_refs.clone();
    with_flag.extend(["--seed", "3"]);
    let flag_run = laplab_in(&with_flag, None, &[("LAPLAB_SEED", "99")]);
    assert_exit(&flag_run, 0);
    assert!(stdout(&flag_run).contains("base seed 3"));

    // The --base-seed alias is the same flag.
    let mut with_alias = base_refs.clone();
    with_alias.extend(["--base-seed", "4"]);
    let alias_run = laplab(&with_alias);
    assert_exit(&alias_run, 0);
    assert!(stdout(&alias_run).contains("base seed 4"));

    // Config beats environment.
    let config_run = laplab_in(&base_refs, None, &[("LAPLAB_SEED", "99")]);
    assert_exit(&config_run, 0);
    assert!(stdout(&config_run).contains("base seed 7"));

    // Without either, the environment supplies the seed…
    let env_args = [
        "simulate", "--model", "bernoulli", "--theta-star", "0.5",
        "--n-grid", "14,50", "--reps", "5", "--out", out_path.to_str().unwrap(),
    ];
    let env_run = laplab_in(&env_args, None, &[("LAPLAB_SEED", "99")]);
    assert_exit(&env_run, 0);
    assert!(stdout(&env_run).contains("base seed 99"));

    // …an unparseable value is an error…
    let bad_env = laplab_in(&env_args, None, &[("LAPLAB_SEED", "banana")]);
    assert_exit(&bad_env, 1);
    assert!(stderr(&bad_env).contains("LAPLAB_SEED"));

    // …and with nothing set at all, the default applies.
    let default_run = laplab(&env_args);
    assert_exit(&default_run, 0);
    assert!(stdout(&default_run).contains("base seed 42"));
}

#[test]
fn config_values_merge_with_flag_overrides() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "distribution": {"model": "poisson", "lambda_star": 0.5, "theta": 1.0},
  "sample_sizes": [10, 100],
  "replicates": 5,
  "base_seed": 7
}"#,
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");

    // Same-family parameter flags refine the config's distribution.
    let refined = laplab(&[
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--lambda-star",
        "2.0",
        "--reps",
        "6",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&refined, 0);
    let text = stdout(&refined);
    assert!(text.contains("lambda_star = 2"), "{text}");
    assert!(text.contains("× 6 replicates"), "{text}");
    let rows = parse_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);

    // A different --model must rebuild the distribution from flags, so
    // a family mismatch with leftover parameters is rejected.
    let mismatched = laplab(&[
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--model",
        "bernoulli",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&mismatched, 1);
    assert!(stderr(&mismatched).contains("theta-star"));

    let rebuilt = laplab(&[
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--model",
        "bernoulli",
        "--theta-star",
        "0.25",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&rebuilt, 0);
    assert!(stdout(&rebuilt).contains("bernoulli (theta_star = 0.25)"));
}

#[test]
fn thread_count_does_not_change_the_output_bytes() {
    let dir = tempfile::tempdir().expect("tempdir");
    let args = |out: &Path, threads: &str| -> Output {
        laplab(&[
            "--threads",
            threads,
            "simulate",
            "--model",
            "multinomial",
            "--psi-star",
            "0.2,0.3,0.5",
            "--n-grid",
            "20,100",
            "--reps",
            "30",
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let single_path = dir.path().join("t1.csv");
    let pooled_path = dir.path().join("t4.csv");
    assert_exit(&args(&single_path, "1"), 0);
    assert_exit(&args(&pooled_path, "4"), 0);
    let single = std::fs::read(&single_path).unwrap();
    let pooled = std::fs::read(&pooled_path).unwrap();
    assert!(!single.is_empty());
    assert_eq!(single, pooled, "CSV bytes must not depend on the thread count");
}
