//! End-to-end checks of the experiment driver binary.

use std::path::Path;
use std::process::{Command, Output};

fn wavebem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavebem"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = wavebem(&[]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "missing usage text: {text}");
}

#[test]
fn unknown_case_is_a_usage_error() {
    let out = wavebem(&["convergence", "--case", "g9", "--levels", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown case"));
}

#[test]
fn convergence_writes_csv_with_requested_levels() {
    let dir = std::env::temp_dir().join("wavebem-cli-conv");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("conv.csv");
    let out = wavebem(&[
        "convergence",
        "--case",
        "g3",
        "--formulation",
        "standard",
        "--m",
        "3",
        "--levels",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "level,dofs_coarse,dofs_fine,indicator_l2,error_dual,error_l2,rate_running"
    );
    assert_eq!(lines.len(), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fitted dual-error rate"));
}

#[test]
fn csv_output_is_byte_stable_across_runs() {
    let dir = std::env::temp_dir().join("wavebem-cli-stable");
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = wavebem(&[
            "convergence",
            "--case",
            "g1",
            "--formulation",
            "energetic",
            "--m",
            "2",
            "--levels",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn infsup_writes_one_row_per_slice_count() {
    let out = wavebem(&[
        "infsup",
        "--formulation",
        "energetic",
        "--m",
        "1",
        "--n-max",
        "8",
        "--per-slice",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,gamma_discrete,gamma_theory,c_tilde");
    assert_eq!(lines.len(), 9);
    // Single-slice energetic constant is one half up to eigensolver roundoff.
    let gamma: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((gamma - 0.5).abs() < 1e-10, "gamma(1) = {gamma}");
}

#[test]
fn solve_reports_diagnostics_and_dumps_matrices() {
    let dir = std::env::temp_dir().join("wavebem-cli-dump");
    let _ = std::fs::remove_dir_all(&dir);
    let out = wavebem(&[
        "solve",
        "--case",
        "g1",
        "--m",
        "3",
        "--elements",
        "4",
        "--seed",
        "7",
        "--dump-matrices",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dofs: coarse 8 fine 24"));
    assert!(text.contains("residual orthogonality"));
    assert!(Path::new(&dir.join("vmat.txt")).exists());
    assert!(Path::new(&dir.join("mass.txt")).exists());
    assert!(Path::new(&dir.join("rhs.txt")).exists());
    let vmat = std::fs::read_to_string(dir.join("vmat.txt")).unwrap();
    assert_eq!(vmat.lines().count(), 24);
}

#[test]
fn adapt_writes_trace_csv() {
    let out = wavebem(&[
        "adapt",
        "--case",
        "g3",
        "--m",
        "3",
        "--levels",
        "4",
        "--theta",
        "0.5",
        "--constrained",
        "true",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text
        .starts_with("iter,dofs_coarse,dofs_fine,indicator,error_dual,error_l2,constrained_flag"));
    assert!(text.lines().nth(1).unwrap().ends_with(",1"));
}

#[test]
fn dump_mesh_emits_two_lines_of_nodes() {
    let out = wavebem(&["dump-mesh", "--elements", "3", "--horizon", "6.0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(' ').count(), 4);
    assert!(lines[0].ends_with("6.0000000000000000e0"));
}

#[test]
fn standard_m2_warns_about_unreliable_indicator() {
    let out = wavebem(&[
        "convergence",
        "--case",
        "g1",
        "--formulation",
        "standard",
        "--m",
        "2",
        "--levels",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
