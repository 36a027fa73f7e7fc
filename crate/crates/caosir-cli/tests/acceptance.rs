//! Acceptance criterion a10: identical seeds and configurations produce
//! byte-identical output files, for every preset and both formats.
//! Criteria a01..a09 live in the core crate's acceptance target.

use std::path::PathBuf;
use std::process::Command;

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("caosir-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_caosir"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "run failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn a10_identical_seeds_are_byte_identical() {
    let mut all_ok = true;
    let mut details = Vec::new();
    let cases: &[(&str, &[&str])] = &[
        ("fig2", &["--preset", "fig2"]),
        ("fig3", &["--preset", "fig3", "--snr-db", "-20:30:10", "--trials", "40"]),
        ("fig4", &["--preset", "fig4", "--snr-db", "0:24:12", "--trials", "40"]),
        ("fig5", &["--preset", "fig5", "--snr-db", "0:24:12", "--trials", "40"]),
        (
            "jsonl",
            &["--preset", "fig4", "--snr-db", "12:12:1", "--trials", "40", "--format", "jsonl"],
        ),
    ];
    for (name, args) in cases {
        let a = tmp(&format!("{name}_a.out"));
        let b = tmp(&format!("{name}_b.out"));
        for path in [&a, &b] {
            let mut full: Vec<&str> = args.to_vec();
            full.extend_from_slice(&["--seed", "123", "--out", path.to_str().unwrap()]);
            run(&full);
        }
        let bytes_a = std::fs::read(&a).unwrap();
        let bytes_b = std::fs::read(&b).unwrap();
        let same = bytes_a == bytes_b;
        all_ok &= same;
        details.push(format!("{name}: {}", if same { "identical" } else { "DIFFER" }));
        assert!(!bytes_a.is_empty());
    }
    println!(
        "ACCEPTANCE a10 identical seeds give byte-identical outputs: {} ({})",
        if all_ok { "PASS" } else { "FAIL" },
        details.join(", ")
    );
    assert!(all_ok);
}
