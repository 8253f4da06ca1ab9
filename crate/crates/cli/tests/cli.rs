use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlab"))
        .args(args)
        .current_dir(root())
        .env_remove("RDLAB_THREADS")
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("rdlab-cli-{}", std::process::id())).join(name);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    p
}

#[test]
fn help_lists_every_flag() {
    let o = rdlab(&["boho", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let h = String::from_utf8_lossy(&o.stdout);
    for f in ["--p", "--eps", "--d2max", "--delta-points", "--n-points", "--tau-points", "--delta1-points", "--out", "--threads"] {
        assert!(h.contains(f), "{f} missing from\n{h}");
    }
    let h = String::from_utf8_lossy(&rdlab(&["region", "--help"]).stdout).into_owned();
    for f in ["--scheme", "--d1", "--d2", "--out", "--swap-symmetrize"] {
        assert!(h.contains(f), "{f}");
    }
    let h = String::from_utf8_lossy(&rdlab(&["check", "--help"]).stdout).into_owned();
    for f in ["--suite", "--seed", "--pairs", "--samples"] {
        assert!(h.contains(f), "{f}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(rdlab(&["boho", "--p", "0.3", "--d2max", "0.15", "--eps", "0", "--bogus"]).status.code(), Some(2));
    assert_eq!(rdlab(&["sim", "quantizer"]).status.code(), Some(2));
    assert_eq!(rdlab(&["sim", "quantizer", "configs/no-such-file.toml"]).status.code(), Some(2));
    assert_eq!(rdlab(&["--threads", "0", "check", "--suite", "continuity", "--pairs", "10"]).status.code(), Some(2));
    // A sweep config passed as a simulation config is a parse error.
    assert_eq!(rdlab(&["sim", "boho", "configs/cc_sweep.toml"]).status.code(), Some(2));
}

#[test]
fn empty_admissible_sets_exit_3() {
    let o = rdlab(&["boho", "--p", "0.3", "--d2max", "0.15", "--eps", "0.4", "--delta-points", "8"]);
    assert_eq!(o.status.code(), Some(3));
    let o = rdlab(&["region", "--scheme", "flmc", "boho:p=0.3,eps=0.4", "configs/boho_flmc_sweep.toml", "--d1", "0", "--d2", "0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_curve_is_omitted_with_a_warning() {
    let o = rdlab(&["boho", "--p", "0.3", "--d2max", "0.2", "--eps", "0", "--eps", "0.4", "--delta-points", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps = 0.4"));
    let csv = String::from_utf8_lossy(&o.stdout);
    assert!(csv.starts_with("r1_bits,r2_bits,d1,d2,scheme,n,tau,provenance_id,epsilon,delta,delta1\n"));
    assert!(csv.lines().skip(1).all(|l| l.contains(",cc,")));
}

#[test]
fn region_output_is_reproducible_and_has_a_manifest() {
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = scratch(&format!("t{threads}/cc.csv"));
        let o = rdlab(&[
            "--threads", threads, "region", "--scheme", "cc", "configs/dsbs.toml", "configs/cc_sweep.toml", "--d1", "0.3",
            "--d2", "0.3", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut m = out.as_os_str().to_owned();
        m.push(".manifest.toml");
        let manifest = std::fs::read_to_string(PathBuf::from(m)).unwrap();
        assert!(manifest.contains("configs/cc_sweep.toml"));
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.starts_with("r1_bits,r2_bits,d1,d2,scheme,n,tau,provenance_id\n"));
    assert!(text.lines().count() > 1);
}

#[test]
fn failed_check_exits_1() {
    // The containment suite's fixed n = 1e6 row fails (tau out of range).
    let o = rdlab(&["check", "--suite", "containment", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let o = rdlab(&["check", "--suite", "continuity", "--pairs", "200"]);
    assert_eq!(o.status.code(), Some(0));
}
