use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/example3").join(name)
}

fn pdz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdz")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_pairs(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            (v[v.len() - 2], v[v.len() - 1])
        })
        .collect()
}

#[test]
fn solve_then_apply_recovers_input() {
    let dir = tempfile::tempdir().unwrap();
    let job = fixture("job.toml");
    let f = dir.path().join("f.csv");
    let out = pdz(&["--config", s(&job), "solve", "--out", s(&f)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("[solve]"));
    assert!(report.contains("method = \"exact-multiplier\""));

    let g = dir.path().join("g2.csv");
    let out = pdz(&["--config", s(&job), "apply", "--input", s(&f), "--out", s(&g)]);
    assert_eq!(out.status.code(), Some(0));
    let diff = read_pairs(&g)
        .iter()
        .zip(read_pairs(&fixture("g.csv")))
        .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn matrix_dump_has_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.bin");
    let out = pdz(&["--config", s(&fixture("job.toml")), "--box", "3", "kernel", "--format", "matrix", "--out", s(&m)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&m).unwrap();
    assert_eq!(&bytes[..4], b"PDZM");
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    assert_eq!((word(1), word(2), word(3)), (1, 7, 7));
    assert_eq!(bytes.len(), 16 + 7 * 7 * 16);
    let entry = |r: usize, c: usize| {
        let o = 16 + (r * 7 + c) * 16;
        let re = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[o + 8..o + 16].try_into().unwrap());
        (re, im)
    };
    // rows k = -3..3; T f(k) = f(k) + f(k+1) - f(k-1)
    let near = |(re, im): (f64, f64), want: f64| (re - want).abs() < 1e-12 && im.abs() < 1e-12;
    assert!(near(entry(3, 3), 1.0));
    assert!(near(entry(3, 4), 1.0));
    assert!(near(entry(3, 2), -1.0));
    assert!(near(entry(3, 5), 0.0));
}

#[test]
fn symbol_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    std::fs::write(
        &job,
        "[box]\ndim = 2\nhalf_width = 1\n\
         [[symbol]]\nname = \"A\"\nkind = \"expression\"\nvalue = \"1 + abs_k^2 + exp(2*pi*i*x_1)\"\nparams = { mu = 2 }\n",
    )
    .unwrap();
    for cmd in [&["adjoint"][..], &["transpose"], &["compose", "--left", "A", "--right", "A"], &["parametrix", "--order", "2"]] {
        let mut args = vec!["--config", s(&job)];
        args.extend_from_slice(cmd);
        let out = pdz(&args);
        assert_eq!(out.status.code(), Some(0), "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some("k_1,k_2,j_1,j_2,re,im"));
        assert_eq!(text.lines().count(), 1 + 81);
    }
}

#[test]
fn diagnose_renders_requested_sections() {
    let out = pdz(&["--config", s(&fixture("job.toml")), "--box", "4", "diagnose", "--hs", "--schatten", "1", "2", "--lp", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for section in ["[hs]", "[schatten p=1]", "[schatten p=2]", "[lp_bound p=2]"] {
        assert!(text.contains(section), "{section} missing from\n{text}");
    }
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(pdz(&["apply"]).status.code(), Some(2));
    assert_eq!(pdz(&["--config", s(&fixture("job.toml")), "apply", "--bogus"]).status.code(), Some(2));
    assert_eq!(pdz(&["--config", "/nonexistent/job.toml", "apply"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "k_1,re,im\n0,1,zero\n").unwrap();
    let out = pdz(&["--config", s(&fixture("job.toml")), "apply", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn domain_errors_exit_3() {
    let out = pdz(&["--config", s(&fixture("job.toml")), "diagnose", "--schatten", "0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
