#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn gem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gem"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn gem_ok(args: &[&str]) -> Output {
    let out = gem(args);
    assert!(
        out.status.success(),
        "gem {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a synthetic MS-layout study with `m` variables and returns its directory.
pub fn synth(root: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let dir = root.join(name);
    let mut args = vec!["synth", "--out", p(&dir)];
    args.extend_from_slice(extra);
    gem_ok(&args);
    dir
}

pub fn files_under(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            walk(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
        }
    }
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

pub fn column(table: &(Vec<String>, Vec<Vec<String>>), name: &str) -> Vec<String> {
    let k = table.0.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table.1.iter().map(|r| r[k].clone()).collect()
}
