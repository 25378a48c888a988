use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hzfem");
const THREE_LEAF: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/three_leaf/three_leaf_coarse.msh");

fn hzfem(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn disk_study_meets_reference_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(
        &["study", "--chart", "circle", "--k", "3", "--m", "2", "--levels", "4", "--assert-rates", "--svg"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("study_circle_k3_m2.csv")).unwrap();
    assert!(csv.starts_with("level,h,n_triangles,n_dofs,err_u,err_u_star,err_sigma,err_div,err_superclose\n"));
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().last().unwrap().starts_with("rates,"));
    let svg = std::fs::read_to_string(dir.path().join("study_circle_k3_m2.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
    assert!(stdout(&o).contains("PASS sigma"));
}

#[test]
fn missed_targets_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "m = 1\nlevels = 3\ninitial_h = 0.5\ntarget_sigma = 9.0\n").unwrap();
    let o = hzfem(&["study", "--config", config.to_str().unwrap(), "--assert-rates"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL sigma"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["study", "--m", "1", "--levels", "3", "--initial-h", "0.5", "--threads", "3"];
    assert!(hzfem(&args, a.path()).status.success());
    let args = ["study", "--m", "1", "--levels", "3", "--initial-h", "0.5", "--threads", "1"];
    assert!(hzfem(&args, b.path()).status.success());
    let name = "study_circle_k3_m1.csv";
    let x = std::fs::read(a.path().join(name)).unwrap();
    let y = std::fs::read(b.path().join(name)).unwrap();
    assert_eq!(x, y);
}

#[test]
fn low_degree_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(&["study", "--k", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k must be ≥ 3"), "{}", stderr(&o));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# solve settings\nm = 3\ninitial_h = 0.5\n").unwrap();
    let o = hzfem(&["solve", "--config", config.to_str().unwrap(), "--m", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("solve_circle_k3_m1.csv").exists());
    assert!(!dir.path().join("solve_circle_k3_m3.csv").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "m = 2\ncolour = blue\n").unwrap();
    let o = hzfem(&["solve", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown configuration key 'colour'"), "{}", stderr(&o));
}

#[test]
fn mesh_on_the_wrong_chart_reports_the_projection_distance() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(&["solve", "--chart", "circle", "--mesh", THREE_LEAF], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("away from the chart"), "{}", stderr(&o));
}

#[test]
fn solve_on_imported_mesh_writes_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(&["solve", "--chart", "three_leaf", "--mesh", THREE_LEAF, "--m", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("solve_three_leaf_k3_m2.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), 9);
    assert!(row[3..8].iter().all(|e| *e > 0.0 && *e < 0.1));
    assert!(row[8] <= 1e-10);
}

#[test]
fn infsup_constants_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(&["infsup", "--chart", "circle", "--k", "3", "--m", "2", "--levels", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("infsup_circle_k3_m2_Hdiv-L2.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,h,m,k,norm_kind,beta_h,alpha_h");
    let betas: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(betas.len(), 3);
    let lo = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = betas.iter().copied().fold(0.0, f64::max);
    assert!(lo > 0.05 && hi / lo - 1.0 <= 0.2, "{betas:?}");
}

#[test]
fn mesh_report_on_graded_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = hzfem(&["mesh-report", "--chart", "three_leaf", "--mesh", THREE_LEAF, "--m-list", "1,2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("boundary hypothesis holds"));
    let csv = std::fs::read_to_string(dir.path().join("mesh_report_three_leaf.csv")).unwrap();
    assert!(csv.starts_with("m,level,h,sup_F_minus_I,sup_Psi_minus_I\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}
