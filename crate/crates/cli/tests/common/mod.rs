#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pyptail"));
    c.env_remove("PYPTAIL_OUT_DIR");
    c
}

/// Run the binary with `args`, panicking with its stderr on failure.
pub fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn pyptail");
    assert!(
        out.status.success(),
        "pyptail {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(args: &[&str]) -> i32 {
    bin().args(args).output().expect("spawn pyptail").status.code().unwrap_or(-1)
}

/// Every file of a directory, by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Run `args` twice into two fresh directories under `root` and compare every byte.
pub fn identical_twice(root: &Path, tag: &str, args: &[&str]) -> bool {
    let dirs: Vec<PathBuf> = (0..2).map(|i| root.join(format!("{tag}_{i}"))).collect();
    for d in &dirs {
        let mut a: Vec<&str> = args.to_vec();
        let ds = d.to_str().unwrap();
        a.extend(["--out-dir", ds]);
        run(&a);
    }
    let (a, b) = (snapshot(&dirs[0]), snapshot(&dirs[1]));
    !a.is_empty() && a == b
}

/// Data rows of a CSV (after the comment and header lines).
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# pyptail "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

pub fn csv_header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().nth(1).unwrap().split(',').map(String::from).collect()
}

pub fn schema_valid(schema: &str, doc: &Path) -> Result<(), String> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join(schema)).unwrap()).unwrap();
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(doc).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = v.iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}
