use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rbffd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbffd")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = rbffd(&["run", "tp6a", "--out", out, "--set", "max_steps=2", "--set", "grid_step=0.02", "--set", "dump_matrix=true"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errors = read(dir.path(), "errors.csv");
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("step,n_interior,e_c,e_g,eps_bar,v_max,v_aver,c_max,c_aver,uncovered_grid_points"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let n: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(n.windows(2).all(|w| w[0] < w[1]));
    assert!(rows[..2].iter().all(|r| !r[4].is_empty()));
    assert!(rows[2][4].is_empty());
    for (step, &count) in n.iter().enumerate() {
        let centers = read(dir.path(), &format!("centers_{step}.csv"));
        assert_eq!(centers.lines().next(), Some("x,y,kind,u_hat,u_exact"));
        let interior = centers.lines().filter(|l| l.contains(",interior,")).count();
        assert_eq!(interior, count);
        assert!(dir.path().join(format!("matrix_{step}.mtx")).exists());
    }
    for step in 0..2 {
        let log = read(dir.path(), &format!("refine_{step}.csv"));
        assert_eq!(log.lines().next(), Some("step,eps_bar,edges_marked,interior_added,boundary_added,reduction_rounds"));
        let added: usize = log.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(added, n[step + 1] - n[step]);
    }
    assert!(!dir.path().join("refine_2.csv").exists());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = rbffd(&["run", "tp1", "--out", d.path().to_str().unwrap(), "--set", "max_steps=4", "--set", "grid_step=0.02"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 1 + 5 + 4);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# peak\nproblem = tp6a\nmax_steps = 5\ngrid_step = 1/50\ndump_centers = false\n").unwrap();
    let out = dir.path().join("out");
    let o = rbffd(&["run", "--config", cfg.to_str().unwrap(), "--set", "max_steps=1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&out, "errors.csv").lines().count(), 3);
    assert!(!out.join("centers_0.csv").exists());
}

#[test]
fn linear_problem_stalls_in_both_arms() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbffd(&["indicator-compare", "linear", "--out", dir.path().to_str().unwrap(), "--set", "grid_step=0.05"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("stage refine"), "{err}");
    assert!(err.contains("stalled"), "{err}");
    let errors = read(&dir.path().join("eps0"), "errors.csv");
    let e_c: f64 = errors.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(e_c < 1e-12);
    let o = rbffd(&["run", "linear", "--set", "indicator=eps1", "--set", "grid_step=0.05"]);
    assert!(stderr(&o).contains("stage refine: step 0"));
}

#[test]
fn indicator_compare_arms_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let args = ["indicator-compare", "tp5@alpha=1/(10pi)", "--set", "max_steps=3", "--set", "grid_step=0.05"];
    let first = rbffd(&[&args[..], &["--out", &format!("{root}/a")]].concat());
    assert!(first.status.success(), "{}", stderr(&first));
    let second = rbffd(&[&args[..], &["--out", &format!("{root}/b")]].concat());
    assert!(second.status.success());
    let a = read(&dir.path().join("a/eps1"), "errors.csv");
    assert_eq!(a, read(&dir.path().join("b/eps1"), "errors.csv"));
    assert_ne!(a, read(&dir.path().join("a/eps0"), "errors.csv"));
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("eps1")).count(), 5);
}

#[test]
fn stencil_stats_per_step_and_per_dump() {
    let o = rbffd(&["stencil-stats", "tp1", "--set", "max_steps=2", "--set", "grid_step=0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,n_interior,v_max,v_aver,c_max,c_aver");
    assert_eq!(lines.len(), 4);
    for (i, l) in lines[1..].iter().enumerate() {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[0], i.to_string());
        let v_aver: f64 = f[3].parse().unwrap();
        assert!(v_aver >= 1.0);
    }

    let dir = tempfile::tempdir().unwrap();
    let o = rbffd(&["run", "tp1", "--out", dir.path().to_str().unwrap(), "--set", "max_steps=2", "--set", "grid_step=0.05"]);
    assert!(o.status.success());
    let errors = read(dir.path(), "errors.csv");
    let dumps: Vec<String> = (0..3).map(|s| dir.path().join(format!("centers_{s}.csv")).to_str().unwrap().to_string()).collect();
    let mut args = vec!["stencil-stats", "tp1", "--centers"];
    args.extend(dumps.iter().map(String::as_str));
    let o = rbffd(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(text.lines().next(), Some("file,n_interior,v_max,v_aver,c_max,c_aver"));
    // the same stencils as in the run, so the same numbers as errors.csv
    for (row, err) in text.lines().skip(1).zip(errors.lines().skip(1)) {
        let a: Vec<&str> = row.split(',').collect();
        let b: Vec<&str> = err.split(',').collect();
        assert_eq!(a[1..], [b[1], b[5], b[6], b[7], b[8]]);
    }
}

#[test]
fn failures_name_the_stage() {
    let o = rbffd(&["run", "tp1", "--set", "gamma=2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stage config"), "{}", stderr(&o));
    let o = rbffd(&["run", "tp7"]);
    assert!(stderr(&o).contains("stage config"));
    assert!(stderr(&o).contains("unknown problem"));
    let o = rbffd(&["run", "tp1", "--set", "nonsense"]);
    assert!(stderr(&o).contains("key=value"));
    let o = rbffd(&["stencil-stats", "tp1", "--centers", "/nonexistent/c.csv"]);
    assert!(stderr(&o).contains("stage centers"));
    let o = rbffd(&["run", "tp1", "--out", "/proc/forbidden"]);
    assert!(stderr(&o).contains("stage output"), "{}", stderr(&o));
}

#[test]
fn keys_are_listed() {
    let o = rbffd(&["keys"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for k in ["problem", "gamma", "max_interior", "grid_step", "indicator"] {
        assert!(text.lines().any(|l| l.starts_with(k)), "{k}");
    }
}
