use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundaryboot"))
        .args(args)
        .env_remove("BOUNDARYBOOT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn table_is_deterministic() {
    let args = ["table", "--name", "table1", "--scale", "desk", "--seed", "42", "--n", "100", "--reps", "100"];
    let a = run(&args);
    let b = run(&args);
    let c = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), stdout(&c));
    // 3 distributions × 3 truths × 5 schemes × 2 levels.
    assert_eq!(stdout(&a).lines().count(), 1 + 90);
}

#[test]
fn unknown_preset_exits_2() {
    let o = run(&["table", "--name", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = run(&["table", "--name", "table1", "--threads", "zero"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table2_markdown_header_lists_kappa_grid() {
    let o = run(&["table", "--name", "table2", "--scale", "desk", "--seed", "7", "--format", "markdown", "--n", "100", "--reps", "20"]);
    let text = stdout(&o);
    assert!(text.contains("| dist | n | standard | power κ=0.25 | power κ=0.5 | power κ=1.0 | power κ=2.0 |"), "{text}");
}

#[test]
fn unwritable_output_exits_3() {
    let o = run(&["location-demo", "--reps", "0", "--output", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

fn custom(body: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.cfg");
    fs::write(&path, body).unwrap();
    run(&["custom", path.to_str().unwrap()])
}

#[test]
fn custom_minimal_config() {
    let o = custom("master_seed = 5\nreps = 10\nbootstrap = 49\n[cell]\nn = 60\n");
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 2, "{text}");
    assert!(text.starts_with("dist,regressor,n,theta0_1,theta0_2,scheme,kappa,level,erp,mc_se,reps,failures\n"));
}

#[test]
fn custom_requires_seed() {
    let o = custom("reps = 10\n[cell]\nn = 60\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("master_seed"));
}

#[test]
fn custom_rejects_level_outside_unit_interval() {
    let o = custom("master_seed = 1\nreps = 10\n[cell]\nn = 60\nlevels = 1.5\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":5"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn custom_missing_file_exits_3() {
    assert_eq!(run(&["custom", "/nonexistent/plan.cfg"]).status.code(), Some(3));
}

#[test]
fn asymptotic_boundary_has_half_zeros() {
    let text = stdout(&run(&["asymptotic", "--case", "boundary", "--draws", "10000", "--grid", "200", "--seed", "3"]));
    let gl = column(&text, "gdot_ell");
    assert_eq!(gl.len(), 10_000);
    let zeros = gl.iter().filter(|v| v.abs() < 1e-12).count() as f64 / 1e4;
    assert!((zeros - 0.5).abs() <= 0.02, "share of zeros {zeros}");
    assert!(gl.iter().all(|v| *v > -1e-12));
}

#[test]
fn asymptotic_interior_is_the_unprojected_draw() {
    let text = stdout(&run(&["asymptotic", "--case", "interior", "--draws", "200", "--grid", "200", "--seed", "4"]));
    let get = |n| column(&text, n);
    let (m11, m12, m22, xi1, xi2, l1, l2) = (get("m11"), get("m12"), get("m22"), get("xi1"), get("xi2"), get("ell1"), get("ell2"));
    for i in 0..m11.len() {
        // Inverse symmetric square root of a 2x2 SPD matrix: with s = sqrt(det),
        // t = sqrt(tr + 2s), M^{1/2} = (M + sI)/t.
        let s = (m11[i] * m22[i] - m12[i] * m12[i]).sqrt();
        let t = (m11[i] + m22[i] + 2.0 * s).sqrt();
        let (r11, r12, r22) = ((m11[i] + s) / t, m12[i] / t, (m22[i] + s) / t);
        let det = r11 * r22 - r12 * r12;
        let e1 = (r22 * xi1[i] - r12 * xi2[i]) / det;
        let e2 = (-r12 * xi1[i] + r11 * xi2[i]) / det;
        assert!((e1 - l1[i]).abs() < 1e-8 && (e2 - l2[i]).abs() < 1e-8, "row {i}");
    }
}

fn ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn drift_at_the_origin_matches_boundary() {
    let boundary = stdout(&run(&["asymptotic", "--case", "boundary", "--draws", "10000", "--grid", "200", "--seed", "5"]));
    let drift = stdout(&run(&["asymptotic", "--case", "drift", "--c", "0", "--vartheta", "0,0", "--draws", "10000", "--grid", "200", "--seed", "6"]));
    let snap = |v: Vec<f64>| v.into_iter().map(|x| if x.abs() < 1e-12 { 0.0 } else { x }).collect::<Vec<_>>();
    let mut a = snap(column(&boundary, "gdot_ell"));
    let mut b = snap(column(&drift, "gdot_ell"));
    // 1% critical value of the two-sample KS statistic at n = m = 10⁴.
    let crit = 1.628 * (2.0f64 / 1e4).sqrt();
    assert!(ks(&mut a, &mut b) < crit);
}

#[test]
fn location_demo_without_replications() {
    let text = stdout(&run(&["location-demo", "--reps", "0"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scheme,level,limit,analytic,simulated,mc_se"));
    assert!(lines.all(|l| l.ends_with(",,,")));
}

fn demo_rejection(theta0: &str) -> (f64, f64) {
    let text = stdout(&run(&[
        "location-demo", "--n", "200", "--reps", "4000", "--bootstrap-draws", "99", "--theta0", theta0, "--levels", "0.05", "--seed", "9",
    ]));
    let line = text.lines().find(|l| l.starts_with("standard,")).unwrap();
    let f: Vec<f64> = line.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
    (f[0], f[2])
}

#[test]
fn location_demo_is_valid_at_and_away_from_the_boundary() {
    for theta0 in ["0", "1"] {
        let (rate, se) = demo_rejection(theta0);
        assert!((rate - 0.05).abs() <= 3.0 * se, "θ₀ = {theta0}: {rate} ± {se}");
    }
}
