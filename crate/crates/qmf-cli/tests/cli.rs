//! End-to-end tests of the `qmf` binary: exit codes, file outputs, library
//! parity, and thread-count independence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::str::FromStr;

use qmf::datasets::{GenSpec, ManifoldDescriptor, Shape};
use qmf::denoise::{build_chart, denoise_all, DenoiseConfig, Neighborhood, PointReport};
use qmf::fit::init_embedding;
use qmf::ridge::{tune_lambda, RegConfig};

fn qmf_cmd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmf"));
    // Tests control the thread count explicitly where it matters.
    cmd.env_remove("QMF_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    qmf_cmd().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|err| panic!("{}: {err}", path.display()))
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn generate_sphere(dir: &Path, n: u32, seed: u32) -> PathBuf {
    let out = dir.join(format!("sphere_{n}_{seed}.csv"));
    let result = run(&[
        "generate",
        "--shape",
        "sphere",
        "--n",
        &n.to_string(),
        "--sigma",
        "0.2",
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);
    out
}

#[test]
fn generate_writes_cloud_and_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate_sphere(dir.path(), 240, 7);

    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1,x2");
    assert_eq!(lines.len(), 241);

    let sidecar = dir.path().join("sphere_240_7.truth.json");
    let truth: ManifoldDescriptor = qmf::io::read_json(&sidecar).unwrap();
    assert_eq!(truth, ManifoldDescriptor::UnitSphere);
}

#[test]
fn generate_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_sphere(dir.path(), 120, 9);
    let b_path = dir.path().join("again.csv");
    let result = run(&[
        "generate",
        "--shape",
        "unit-sphere",
        "--n",
        "120",
        "--sigma",
        "0.2",
        "--seed",
        "9",
        "--out",
        path_str(&b_path),
    ]);
    assert_success(&result);
    assert_eq!(read_bytes(&a), read_bytes(&b_path));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    let missing_shape = run(&["generate", "--n", "10", "--sigma", "0.1", "--out", path_str(&out)]);
    assert_eq!(exit_code(&missing_shape), 2);

    let bad_shape = run(&[
        "generate",
        "--shape",
        "donut",
        "--n",
        "10",
        "--sigma",
        "0.1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&bad_shape), 2);

    let bad_n = run(&[
        "generate",
        "--shape",
        "circle",
        "--n",
        "0",
        "--sigma",
        "0.1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&bad_n), 2);
    assert!(!out.exists(), "failed runs must not leave output files");
}

#[test]
fn generate_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    std::fs::write(
        &config,
        r#"{"shape":"unit-circle","n":30,"noise_sigma":0.05,"seed":4}"#,
    )
    .unwrap();

    // Flags win: n comes from the command line, the rest from the file.
    let from_config = dir.path().join("from_config.csv");
    let result = run(&[
        "generate",
        "--config",
        path_str(&config),
        "--n",
        "12",
        "--out",
        path_str(&from_config),
    ]);
    assert_success(&result);
    let text = std::fs::read_to_string(&from_config).unwrap();
    assert_eq!(text.lines().count(), 13);

    // Unknown keys are rejected before anything is written.
    std::fs::write(&config, r#"{"shape":"unit-circle","n":30,"noise_sigma":0.05,"seed":4,"x":1}"#)
        .unwrap();
    let out = dir.path().join("never.csv");
    let rejected = run(&[
        "generate",
        "--config",
        path_str(&config),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&rejected), 2);
    assert!(!out.exists());
}

#[test]
fn denoise_writes_outputs_and_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 80, 3);
    let out = dir.path().join("denoised.csv");

    let result = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--k",
        "16",
        "--mode",
        "e",
        "--delta",
        "sphere-paper",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);

    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("mse = "), "metrics missing:\n{stdout}");
    assert!(stdout.contains("sd = "));

    let reports: Vec<PointReport> =
        qmf::io::read_json(&dir.path().join("denoised.report.json")).unwrap();
    assert_eq!(reports.len(), 80);
    for (i, report) in reports.iter().enumerate() {
        assert_eq!(report.index, i);
        assert!(
            report.lambda_used.is_some(),
            "delta mode records the tuned penalty"
        );
    }

    // The denoised cloud inherits the input's truth sidecar.
    assert!(dir.path().join("denoised.truth.json").exists());
}

#[test]
fn denoise_matches_the_library_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 80, 5);
    let cli_out = dir.path().join("cli.csv");

    let result = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--k",
        "16",
        "--mode",
        "e",
        "--delta",
        "sphere-paper",
        "--out",
        path_str(&cli_out),
    ]);
    assert_success(&result);

    // Same pipeline through the library: sphere-paper delta at K=16 is 3.
    let cloud = qmf::io::load_cloud(&input).unwrap();
    let cfg = DenoiseConfig::new(2, Neighborhood::Knn(16), RegConfig::delta(3.0));
    let output = denoise_all(&cloud, &cfg).unwrap();
    let lib_out = dir.path().join("lib.csv");
    qmf::io::save_cloud(&lib_out, &output.cloud).unwrap();
    qmf::io::write_json(&dir.path().join("lib.report.json"), &output.reports).unwrap();

    assert_eq!(read_bytes(&cli_out), read_bytes(&lib_out));
    assert_eq!(
        read_bytes(&dir.path().join("cli.report.json")),
        read_bytes(&dir.path().join("lib.report.json"))
    );
}

#[test]
fn small_charts_warn_but_the_run_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 30, 11);
    let out = dir.path().join("small.csv");

    let result = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--k",
        "3",
        "--mode",
        "e",
        "--lambda",
        "0.1",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("warning") && stderr.contains("feature dimension"),
        "expected a chart-size warning, got:\n{stderr}"
    );
    assert!(out.exists());
}

#[test]
fn thread_count_does_not_change_any_output_byte() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 100, 13);

    let mut outputs = Vec::new();
    for (label, threads) in [("one", "1"), ("four", "4")] {
        let out = dir.path().join(format!("{label}.csv"));
        let result = run(&[
            "denoise",
            "--threads",
            threads,
            "--input",
            path_str(&input),
            "--d",
            "2",
            "--k",
            "16",
            "--mode",
            "k",
            "--delta",
            "100",
            "--out",
            path_str(&out),
        ]);
        assert_success(&result);
        outputs.push((
            read_bytes(&out),
            read_bytes(&dir.path().join(format!("{label}.report.json"))),
        ));
    }

    // Environment variable route, flag absent.
    let env_out = dir.path().join("env.csv");
    let result = qmf_cmd()
        .env("QMF_THREADS", "2")
        .args([
            "denoise",
            "--input",
            path_str(&input),
            "--d",
            "2",
            "--k",
            "16",
            "--mode",
            "k",
            "--delta",
            "100",
            "--out",
            path_str(&env_out),
        ])
        .output()
        .unwrap();
    assert_success(&result);

    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].0, read_bytes(&env_out));
}

#[test]
fn threads_flag_beats_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 20, 1);
    let out = dir.path().join("d.csv");

    // A bad env value is ignored when the flag is present...
    let result = qmf_cmd()
        .env("QMF_THREADS", "notanumber")
        .args([
            "denoise",
            "--threads",
            "1",
            "--input",
            path_str(&input),
            "--d",
            "2",
            "--k",
            "10",
            "--lambda",
            "0.1",
            "--out",
            path_str(&out),
        ])
        .output()
        .unwrap();
    assert_success(&result);

    // ...and rejected as a usage error when it is the only source.
    let result = qmf_cmd()
        .env("QMF_THREADS", "notanumber")
        .args([
            "denoise",
            "--input",
            path_str(&input),
            "--d",
            "2",
            "--k",
            "10",
            "--lambda",
            "0.1",
            "--out",
            path_str(&dir.path().join("never.csv")),
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&result), 2);
    assert!(!dir.path().join("never.csv").exists());
}

fn parse_stdout_value(stdout: &str, key: &str) -> Option<String> {
    stdout
        .lines()
        .find_map(|line| line.strip_prefix(&format!("{key} = ")))
        .map(|rest| rest.trim().to_string())
}

#[test]
fn tune_exports_a_curve_and_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sine.csv");
    assert_success(&run(&[
        "generate",
        "--shape",
        "sine",
        "--n",
        "240",
        "--sigma",
        "0.1",
        "--seed",
        "3",
        "--out",
        path_str(&input),
    ]));

    let curve_path = dir.path().join("curve.csv");
    let result = run(&[
        "tune",
        "--input",
        path_str(&input),
        "--d",
        "1",
        "--k",
        "40",
        "--delta",
        "5",
        "--grid-min",
        "0.001",
        "--grid-max",
        "0.1",
        "--grid-points",
        "50",
        "--out",
        path_str(&curve_path),
    ]);
    assert_success(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    let lambda_star: f64 = parse_stdout_value(&stdout, "lambda_star")
        .expect("lambda_star line")
        .parse()
        .unwrap();

    let text = std::fs::read_to_string(&curve_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,s,s_prime,s_double_prime");
    assert_eq!(lines.len(), 51);
    let s_column: Vec<f64> = lines[1..]
        .iter()
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for pair in s_column.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-15, "s must not increase in lambda");
    }

    // Library parity on the same chart.
    let cloud = qmf::io::load_cloud(&input).unwrap();
    let cfg = DenoiseConfig::new(1, Neighborhood::Knn(40), RegConfig::delta(5.0));
    let y = cloud.points.column(0).into_owned();
    let chart = build_chart(&cloud, &y, &cfg).unwrap();
    let members = chart.members(&cloud);
    let mean = members.column_mean();
    let mut centered = members.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let embedding = init_embedding(&centered, 1).unwrap();
    let tuned = tune_lambda(&centered, &embedding, &chart.weights, 5.0).unwrap();
    assert_eq!(lambda_star.to_bits(), tuned.lambda.to_bits());
}

#[test]
fn tune_warns_when_delta_outruns_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sine.csv");
    assert_success(&run(&[
        "generate",
        "--shape",
        "sine",
        "--n",
        "240",
        "--sigma",
        "0.1",
        "--seed",
        "3",
        "--out",
        path_str(&input),
    ]));

    let result = run(&[
        "tune",
        "--input",
        path_str(&input),
        "--d",
        "1",
        "--k",
        "40",
        "--delta",
        "1e9",
        "--out",
        path_str(&dir.path().join("curve.csv")),
    ]);
    assert_success(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert_eq!(
        parse_stdout_value(&stdout, "status").as_deref(),
        Some("floored")
    );
    assert!(String::from_utf8_lossy(&result.stderr).contains("warning"));

    // Out-of-range target is a usage error and writes nothing.
    let bad = run(&[
        "tune",
        "--input",
        path_str(&input),
        "--d",
        "1",
        "--k",
        "40",
        "--target",
        "999",
        "--delta",
        "5",
        "--out",
        path_str(&dir.path().join("never.csv")),
    ]);
    assert_eq!(exit_code(&bad), 2);
    assert!(!dir.path().join("never.csv").exists());
}

#[test]
fn bench_emits_method_major_rows_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let args = [
        "bench",
        "--shape",
        "sphere",
        "--n",
        "50",
        "--sigma",
        "0.2",
        "--methods",
        "lmf,local-pca",
        "--k",
        "8,10",
        "--repeats",
        "1",
        "--seed",
        "1",
        "--out",
        path_str(&out),
    ];
    assert_success(&run(&args));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,K,mse,sd");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("lmf,8,"));
    assert!(lines[2].starts_with("lmf,10,"));
    assert!(lines[3].starts_with("local-pca,8,"));
    assert!(lines[4].starts_with("local-pca,10,"));

    let first = read_bytes(&out);
    assert_success(&run(&args));
    assert_eq!(first, read_bytes(&out));

    let bad_method = run(&[
        "bench",
        "--shape",
        "sphere",
        "--methods",
        "pca",
        "--k",
        "8",
        "--out",
        path_str(&dir.path().join("never.csv")),
    ]);
    assert_eq!(exit_code(&bad_method), 2);
}

#[test]
fn radius_charts_and_their_delta_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 80, 17);
    let out = dir.path().join("radius.csv");

    // Radius charts work with an explicit delta or lambda.
    let result = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--radius",
        "0.9",
        "--lambda",
        "0.05",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);

    // The sphere-paper preset is a function of K, so radius charts reject it.
    let rejected = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--radius",
        "0.9",
        "--delta",
        "sphere-paper",
        "--out",
        path_str(&dir.path().join("never.csv")),
    ]);
    assert_eq!(exit_code(&rejected), 2);
    assert!(!dir.path().join("never.csv").exists());
}

#[test]
fn denoise_config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = generate_sphere(dir.path(), 60, 19);

    let spec = GenSpec {
        shape: Shape::from_str("sphere").unwrap(),
        n: 60,
        noise_sigma: 0.2,
        seed: 19,
    };
    assert_eq!(spec.shape, Shape::UnitSphere);

    let config = dir.path().join("denoise.json");
    std::fs::write(
        &config,
        r#"{
            "d": 2,
            "neighborhood": {"knn": 16},
            "weighting": "equal",
            "reg": {"reg": {"delta": 3.0}}
        }"#,
    )
    .unwrap();

    let config_out = dir.path().join("config_run.csv");
    assert_success(&run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--config",
        path_str(&config),
        "--out",
        path_str(&config_out),
    ]));

    let flags_out = dir.path().join("flags_run.csv");
    assert_success(&run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--d",
        "2",
        "--k",
        "16",
        "--mode",
        "e",
        "--delta",
        "3.0",
        "--out",
        path_str(&flags_out),
    ]));
    assert_eq!(read_bytes(&config_out), read_bytes(&flags_out));

    // Flag overrides a config field.
    let override_out = dir.path().join("override_run.csv");
    assert_success(&run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--config",
        path_str(&config),
        "--k",
        "20",
        "--out",
        path_str(&override_out),
    ]));
    assert_ne!(read_bytes(&config_out), read_bytes(&override_out));

    // Unknown keys in the config are usage errors.
    std::fs::write(&config, r#"{"d": 2, "neighborhood": {"knn": 16}, "reg": {"reg": {"delta": 3.0}}, "zz": 0}"#).unwrap();
    let rejected = run(&[
        "denoise",
        "--input",
        path_str(&input),
        "--config",
        path_str(&config),
        "--out",
        path_str(&dir.path().join("never.csv")),
    ]);
    assert_eq!(exit_code(&rejected), 2);
}
