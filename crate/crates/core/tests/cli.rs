use std::path::Path;
use std::process::Command;

use irisct::store::read_store;

fn run(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut full = vec!["irisct"];
    full.extend_from_slice(args);
    irisct::cli::run(full, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    String::from_utf8(out).unwrap()
}

fn synth_tree(dir: &Path) {
    let d = dir.to_str().unwrap();
    let o = run(&[
        "--out",
        d,
        "--set",
        "synth_subjects=3",
        "--set",
        "synth_samples=2",
        "synth",
    ]);
    assert!(o.starts_with("wrote 6 images"), "{o}");
}

#[test]
fn extract_enroll_identify() {
    let tmp = tempfile::tempdir().unwrap();
    let tree = tmp.path().join("eyes");
    synth_tree(&tree);
    let img = tree.join("S002/S002_1.png");
    let img = img.to_str().unwrap();

    let line = run(&["extract", "--method", "nlac", "--subject", "S002", img]);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(&fields[..4], ["S002", "1", "NLAC", "48"]);

    let db = tmp.path().join("db.tsv");
    let db = db.to_str().unwrap();
    let layout = "{subject}/{subject}_{sample}.png";
    for method in ["BINARY", "NLAC", "COMBINED"] {
        let o = run(&[
            "enroll",
            "--db",
            db,
            "--method",
            method,
            "--layout",
            layout,
            tree.to_str().unwrap(),
        ]);
        assert!(o.starts_with("enrolled 6 of 6"), "{o}");
    }
    let records = read_store(Path::new(db)).unwrap();
    assert_eq!(records.len(), 18);

    for method in ["BINARY", "NLAC", "COMBINED"] {
        let o = run(&["identify", "--db", db, "--method", method, img]);
        let f: Vec<&str> = o.trim_end().split('\t').collect();
        assert_eq!((f[0], f[1]), ("S002", "1"), "{method}: {o}");
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0, "{method}");
        assert!(f[3] == "accept", "{method}: {o}");
    }
}

#[test]
fn segment_and_normalize_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let tree = tmp.path().join("eyes");
    synth_tree(&tree);
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    let img = tree.join("S001/S001_2.png");
    let json = run(&["--out", o, "segment", img.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["pupil"]["r"].as_f64().unwrap() > 10.0);
    assert!(out.join("S001_2_overlay.png").exists());

    run(&["--out", o, "normalize", img.to_str().unwrap()]);
    let strip = std::fs::read_to_string(out.join("S001_2_strip.tsv")).unwrap();
    assert_eq!(strip.lines().count(), 8);
    assert!(strip.lines().all(|l| l.split('\t').count() == 240));
    let full = std::fs::read_to_string(out.join("S001_2_normalized.tsv")).unwrap();
    assert_eq!(full.lines().count(), 20);
}

#[test]
fn keys_and_help() {
    let keys = run(&["keys"]);
    assert!(keys.contains("seed"));
    assert!(run(&["--help"]).contains("evaluate"));
}

#[test]
fn exit_codes() {
    let bin = env!("CARGO_BIN_EXE_irisct");
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();

    assert_eq!(
        code(&["extract", "--method", "BINARY", "/no/such/eye.png"]),
        Some(3)
    );
    let junk = tmp.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert_eq!(
        code(&["extract", "--method", "BINARY", junk.to_str().unwrap()]),
        Some(4)
    );
    let flat = tmp.path().join("flat.png");
    image::GrayImage::from_pixel(200, 200, image::Luma([128u8]))
        .save(&flat)
        .unwrap();
    assert_eq!(
        code(&["extract", "--method", "BINARY", flat.to_str().unwrap()]),
        Some(5)
    );
    assert_eq!(
        code(&["extract", "--method", "WAVELET", flat.to_str().unwrap()]),
        Some(2)
    );
    assert_eq!(code(&["--set", "nope=1", "keys"]), Some(2));
}
