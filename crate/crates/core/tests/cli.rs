use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cir")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate", "--a", "1", "--b", "1", "--sigma", "1", "--r0", "1", "--T", "10", "--dt", "0.01",
        "--seed", "42", "--out",
    ];
    let out = out.to_str().unwrap();
    args.push(out);
    args.extend_from_slice(extra);
    cir(&args)
}

/// Splits an estimate output into `(estimator, fields)` rows.
fn estimate_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,a_est,b_est,alpha_est,mu_est,denominator,warnings"));
    lines.map(|l| l.splitn(7, ',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_writes_grid_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("p1.csv");
    let second = dir.path().join("p2.csv");
    assert_eq!(simulate(&first, &[]).status.code(), Some(0));
    assert_eq!(simulate(&second, &[]).status.code(), Some(0));
    let text = fs::read_to_string(&first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,r");
    assert_eq!(lines.len(), 1002);
    assert_eq!(lines[1], "0.0,1.0");
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn simulate_with_noise_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    assert_eq!(simulate(&out, &["--store-noise", "--scheme", "implicit"]).status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,r,dW");
    assert!(lines[1].split(',').nth(2).unwrap().parse::<f64>().is_ok());
    assert!(lines.last().unwrap().ends_with(','));
}

#[test]
fn invalid_parameter_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = cir(&[
        "simulate", "--a", "1", "--b", "1", "--sigma", "0", "--r0", "1", "--T", "1", "--dt", "0.01",
        "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cir(&["simulate", "--a", "1"]).status.code(), Some(2));
    assert_eq!(cir(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cir(&["density", "--a", "x", "--b", "1", "--sigma", "1", "--xmax", "1", "--points", "2"]).status.code(), Some(2));
}

#[test]
fn estimate_constant_path_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.csv");
    let mut text = String::from("t,r\n");
    for k in 0..=1000 {
        text.push_str(&format!("{:?},1.0\n", k as f64 * 0.01));
    }
    fs::write(&input, text).unwrap();
    let o = cir(&["estimate", "--in", input.to_str().unwrap(), "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = estimate_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row[1].is_empty() && row[2].is_empty());
        assert!(row[6].contains("degenerate"), "{row:?}");
    }
}

#[test]
fn estimate_three_point_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("h.csv");
    fs::write(&input, "t,r\n0,1\n0.5,2\n1,1\n").unwrap();
    let o = cir(&["estimate", "--in", input.to_str().unwrap(), "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = estimate_rows(&stdout(&o));
    assert_eq!(rows[0][..6], ["mle", "6.0", "4.0", "4.0", "1.5", "0.125"]);
    assert_eq!(rows[1][..6], ["alt", "4.5", "3.0", "3.0", "1.5", "0.25"]);

    let only = cir(&["estimate", "--in", input.to_str().unwrap(), "--sigma", "1", "--estimator", "alt"]);
    assert_eq!(estimate_rows(&stdout(&only)).len(), 1);
}

#[test]
fn estimate_rejects_bad_sigma_and_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("h.csv");
    fs::write(&input, "t,r\n0,1\n0.5,2\n1,1\n").unwrap();
    let o = cir(&["estimate", "--in", input.to_str().unwrap(), "--sigma", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma"));
    let missing = dir.path().join("nope.csv");
    assert_eq!(cir(&["estimate", "--in", missing.to_str().unwrap(), "--sigma", "1"]).status.code(), Some(1));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,r\n0,1\n0.5,-2\n1,1\n").unwrap();
    assert_eq!(cir(&["estimate", "--in", bad.to_str().unwrap(), "--sigma", "1"]).status.code(), Some(1));
}

#[test]
fn estimate_on_simulated_long_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("long.csv");
    let o = cir(&[
        "simulate", "--a", "1", "--b", "1", "--sigma", "1", "--r0", "1", "--T", "200", "--dt", "0.01",
        "--seed", "42", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = cir(&["estimate", "--in", path.to_str().unwrap(), "--sigma", "1", "--estimator", "alt"]);
    let rows = estimate_rows(&stdout(&o));
    let a: f64 = rows[0][1].parse().unwrap();
    assert!((a - 1.0).abs() < 0.5, "a_est = {a}");
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let out = dir.join(format!("{name}.csv"));
    let cfg = dir.join(format!("{name}.conf"));
    fs::write(&cfg, format!("{body}out = {}\n", out.display())).unwrap();
    cfg
}

const SMALL: &str = "a = 1\nb = 1\nsigma = 1\nr0 = 1\ndt = 0.01\nreplications = 8\n\
                     checkpoints = 10, 50, 100, 150, 200\nbase_seed = 9\n";

#[test]
fn montecarlo_writes_deterministic_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", SMALL);
    let o = cir(&["montecarlo", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv_one = fs::read(dir.path().join("run.csv")).unwrap();
    let table = stdout(&o);
    for t in ["10", "50", "100", "150", "200"] {
        assert!(table.contains(t), "{table}");
    }
    assert!(table.contains("E[a_hat]") && table.contains("sd[a_tilde]"), "{table}");

    let o = cir(&["montecarlo", cfg.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("run.csv")).unwrap(), csv_one);

    let text = String::from_utf8(csv_one).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,b,sigma,r0,dt,T,estimator,param,mean,std,n_ok,n_fail"));
    // 2 estimators x 2 parameters x 5 checkpoints
    assert_eq!(lines.count(), 20);
}

#[test]
fn montecarlo_single_replication_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("replications = 8", "replications = 1");
    let cfg = write_config(dir.path(), "one", &body);
    let o = cir(&["montecarlo", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("one.csv")).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[10] == "1" {
            assert_eq!(f[9].parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
}

#[test]
fn montecarlo_config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("replications = 8", "replications = lots");
    let cfg = write_config(dir.path(), "bad", &body);
    let o = cir(&["montecarlo", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replications"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "bad2", &format!("{SMALL}colour = blue\n"));
    let o = cir(&["montecarlo", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn montecarlo_warns_outside_feller() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("sigma = 1", "sigma = 2").replace("replications = 8", "replications = 3");
    let cfg = write_config(dir.path(), "nf", &body);
    let o = cir(&["montecarlo", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn density_rows_and_mass() {
    let o = cir(&["density", "--a", "1", "--b", "1", "--sigma", "1", "--xmax", "3", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,p_inf");
    assert_eq!(lines.len(), 4);
    // p(1) = 4 e^-2 for the (1, 1, 1) gamma law
    let p1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((p1 - 4.0 * (-2.0f64).exp()).abs() < 1e-14);

    let o = cir(&["density", "--a", "1", "--b", "1", "--sigma", "1", "--xmax", "20", "--points", "2000"]);
    let values: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (x, p) = l.split_once(',').unwrap();
            (x.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(values.len(), 2000);
    assert!(values.iter().all(|&(_, p)| p >= 0.0));
    // trapezoid rule, with p(0) = 0 for shape 2
    let mut mass = 0.0;
    let mut prev = (0.0, 0.0);
    for &(x, p) in &values {
        mass += 0.5 * (x - prev.0) * (p + prev.1);
        prev = (x, p);
    }
    assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
}
