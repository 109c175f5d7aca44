use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn slhfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slhfb")).args(args).output().unwrap()
}

fn netlist(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("netlists")
        .join(name)
        .display()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn kerr_netlist_reports_twenty_megahertz() {
    let out = slhfb(&["--netlist", &netlist("kerr_sec4.net")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(2).unwrap().parse().unwrap()
    };
    assert!((row("chi") - 20.0).abs() < 1e-9);
    assert!((row("omega_a_minus_delta") - 20.0).abs() < 1e-9);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad_syntax = write(dir.path(), "a.net", "[modes]\na = four\n");
    let out = slhfb(&["--netlist", &bad_syntax]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a.net:2:"));

    let unphysical = write(
        dir.path(),
        "b.net",
        "[modes]\na = 4\n[plant]\nH = n@a\n[loop l]\ntheta = 0 rad\nL = a@a\nL_f = a@a\nkappa = 1 rad_per_us\nxi = 2 rad_per_us\n\
         [run]\ntask = evolve\nt_max = 1 us\n",
    );
    assert_eq!(slhfb(&["--netlist", &unphysical]).status.code(), Some(3));

    let missing = dir.path().join("none.net").display().to_string();
    assert_eq!(slhfb(&["--netlist", &missing]).status.code(), Some(1));
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = slhfb(&[
        "--netlist",
        &netlist("cross_kerr_sec4.net"),
        "--out",
        out_dir.to_str().unwrap(),
        "--sweep",
        "gamma_b=0.5:1.5:3",
        "--truncation-override",
        "a=5,b=5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..3 {
        let sub = out_dir.join(format!("gamma_b_{k:03}"));
        assert!(sub.join("evolve.csv").exists());
        assert!(sub.join("manifest.json").exists());
    }
    let first = std::fs::read_to_string(out_dir.join("gamma_b_000/netlist.net")).unwrap();
    assert!(first.contains("a = 5"));
}
