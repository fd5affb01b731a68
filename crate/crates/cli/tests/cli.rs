use std::fs;
use std::path::Path;
use std::process::Command;

use subfrac_cli::report::{read_report, Record, RunHeader};

/// Runs the library entry point with an explicit environment.
fn run_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut argv = vec!["subfrac".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let env: Vec<(String, String)> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = subfrac_cli::run(&argv, env, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run(args: &[&str]) -> (i32, String, String) {
    run_env(args, &[])
}

fn parse(out: &str) -> (RunHeader, Vec<Record>) {
    let (h, r) = read_report(out).unwrap();
    (h.expect("run header"), r)
}

fn value(out: &str) -> f64 {
    parse(out).1[0].value
}

#[test]
fn heat_kernel_at_origin() {
    let (code, out, _) = run(&["hk", "eval", "--n", "1", "--t", "1", "--point", "0,0,0"]);
    assert_eq!(code, 0);
    let (h, r) = parse(&out);
    assert!((r[0].value - 0.0625).abs() < 1e-12);
    assert_eq!(r[0].config_digest, h.config_digest);
    assert_eq!(r[0].seed, h.config.sampler.seed);
}

#[test]
fn psi_at_zero_is_phi() {
    let (code, out, _) = run(&["psi", "eval", "--alpha", "0", "--phi", "gaussian(a=1)", "--point", "0,0,0"]);
    assert_eq!(code, 0);
    assert!((value(&out) - 1.0).abs() < 1e-10);
}

#[test]
fn unknown_function_reports_offset() {
    let (code, _, err) = run(&["psi", "eval", "--alpha", "0", "--phi", "gausian(a=1)", "--point", "0,0,0"]);
    assert_eq!(code, 1);
    assert!(err.contains("at byte 0"), "{err}");
    assert!(err.contains("unknown function"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["hk", "eval", "--bogus"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["hk", "eval", "--point", "0,x,0"]).0, 1);
    assert_eq!(run(&["hk", "eval", "--point", "0,0"]).0, 1);
    assert_eq!(run(&["hk", "eval", "--point", "0,0,0", "--set", "nodes=3"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn large_n_needs_force() {
    let p7 = "0.1,0,0,0,0,0,0.2";
    let (code, _, err) = run(&["psi", "eval", "--n", "3", "--alpha", "1", "--phi", "gaussian()", "--point", p7]);
    assert_eq!(code, 1);
    assert!(err.contains("--force"), "{err}");
    // cheap commands are not guarded
    assert_eq!(run(&["hk", "eval", "--n", "3", "--point", "0,0,0,0,0,0,0"]).0, 0);
    assert_eq!(run(&["ccnorm", "eval", "--n", "3", "--point", "1,0,0,0,0,0,0"]).0, 0);
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults for this run\nseed = 3\npaths = 1000\nsteps = 10\n").unwrap();
    let c = cfg.to_str().unwrap();
    let base = ["ccnorm", "eval", "--point", "1,0,0", "--config", c];

    let seed = |args: &[&str], env: &[(&str, &str)]| parse(&run_env(args, env).1).0.config.sampler;
    assert_eq!(seed(&base, &[]).seed, 3);
    let env = [("SUBFRAC_SEED", "4"), ("SUBFRAC_STEPS", "20")];
    let s = seed(&base, &env);
    assert_eq!((s.seed, s.paths, s.steps), (4, 1000, 20));
    let mut args = base.to_vec();
    args.extend(["--seed", "5"]);
    assert_eq!(seed(&args, &env).seed, 5);
    args.extend(["--set", "steps=30"]);
    assert_eq!(seed(&args, &env).steps, 30);
}

#[test]
fn digest_tracks_numerics_only() {
    let d = |args: &[&str]| parse(&run(args).1).0.config_digest;
    let a = d(&["ccnorm", "eval", "--point", "1,0,0"]);
    assert_eq!(a, d(&["ccnorm", "eval", "--point", "1,0,0", "--format", "json"]));
    assert_ne!(a, d(&["ccnorm", "eval", "--point", "1,0,0", "--seed", "8"]));
    assert_ne!(a, d(&["ccnorm", "eval", "--point", "1,0,0", "--set", "lambda_nodes=20"]));
}

#[test]
fn cache_returns_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let cd = dir.path().join("cache");
    let c = cd.to_str().unwrap();
    let args = ["psi", "eval", "--alpha", "-1", "--phi", "gaussian(a=1)", "--point", "0.3,-0.2,0.4", "--cache-dir", c];
    let (_, first) = parse(&run(&args).1);
    assert_eq!(fs::read_dir(&cd).unwrap().count(), 1);
    let (_, second) = parse(&run(&args).1);
    assert_eq!(first, second);
    assert_eq!(first[0].value.to_bits(), second[0].value.to_bits());

    let mut off = args.to_vec();
    off.push("--no-cache");
    let (_, third) = parse(&run(&off).1);
    assert_eq!(first[0].value.to_bits(), third[0].value.to_bits());

    // a different configuration is a different key
    let mut other = args.to_vec();
    other.extend(["--set", "jacobi_nodes=20"]);
    run(&other);
    assert_eq!(fs::read_dir(&cd).unwrap().count(), 2);
}

#[test]
fn csv_keeps_header_as_comment() {
    let (code, out, _) = run(&["ccnorm", "eval", "--point", "0,0,1", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# {\"record\":\"run\""));
    assert!(lines[1].starts_with("op,params,value"));
    // params is quoted and may contain commas; the trailing eight columns never do
    let v: f64 = lines[2].rsplit(',').nth(7).unwrap().parse().unwrap();
    assert!((v - (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
}

#[test]
fn table_is_csv() {
    let (code, out, _) = run(&["table", "hk", "--direction", "1,0,0", "--count", "3", "--r-max", "2"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "r,h");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("0,0.0625"));
}

fn write_report(dir: &Path, args: &[&str]) -> std::path::PathBuf {
    let path = dir.join("report.jsonl");
    let mut a = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    a.extend(["--out", &p]);
    let (code, out, _) = run(&a);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), out);
    path
}

#[test]
fn replay_reproduces_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["hk", "moment", "--gamma", "2,0,0", "--method", "mc", "--paths", "2000", "--steps", "20", "--seed", "9"];
    let path = write_report(dir.path(), &args);
    let (code, out, err) = run(&["replay", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (_, r) = parse(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].pass, Some(true));

    // a tampered value is reported and fails the replay
    let text = fs::read_to_string(&path).unwrap();
    let (h, mut recs) = read_report(&text).unwrap();
    recs[0].value += 1e-12;
    let mut lines = vec![serde_json::to_string(&subfrac_cli::report::Line::Run(h.unwrap())).unwrap()];
    lines.push(serde_json::to_string(&subfrac_cli::report::Line::Result(recs[0].clone())).unwrap());
    fs::write(&path, lines.join("\n")).unwrap();
    let (code, out, _) = run(&["replay", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(parse(&out).1[0].pass, Some(false));
}

#[test]
fn replay_ignores_environment_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["riesz", "sigma", "--alpha", "1", "--method", "mc", "--paths", "500", "--steps", "10"];
    let path = write_report(dir.path(), &args);
    let (code, _, _) = run_env(&["replay", path.to_str().unwrap()], &[("SUBFRAC_SEED", "99")]);
    assert_eq!(code, 0);
}

#[test]
fn verify_exit_codes() {
    let (code, out, _) = run(&["verify", "commutator"]);
    assert_eq!(code, 0);
    let (_, r) = parse(&out);
    assert_eq!(r.len(), 20);
    assert!(r.iter().all(|x| x.pass == Some(true) && x.target.is_some() && x.tol.is_some()));

    // far too few paths for the moment tolerances
    let (code, out, _) = run(&["verify", "moments", "--paths", "300", "--steps", "50"]);
    assert_eq!(code, 2);
    let (_, r) = parse(&out);
    assert_eq!(r.len(), 5);
    assert!(r.iter().any(|x| x.pass == Some(false)));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_subfrac");
    let ok = Command::new(bin).args(["hk", "eval", "--point", "0,0,0"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"value\":0.0625"));
    let bad = Command::new(bin).args(["hk", "eval", "--nope"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let env = Command::new(bin)
        .args(["ccnorm", "eval", "--point", "1,0,0"])
        .env("SUBFRAC_SEED", "41")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&env.stdout).contains("\"seed\":41"));
}
