//! SVG views of the tables written by `gem`. Every plot is rendered from its
//! CSV (and model JSON) only, after checking them against the manifest digests.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::io::read_table;
use crate::manifest::{sha256_hex, FileDigest, Manifest, Status};
use crate::svg::{padded_range, Frame, Svg, PALETTE};

const W: f64 = 640.0;
const H: f64 = 480.0;

fn num(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn numbers(&self, j: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| num(&r[j])).collect()
    }
}

/// Reads a table listed in the manifest, refusing files that changed since.
fn load(dir: &Path, manifest: &Manifest, name: &str) -> Result<Table> {
    let entry = manifest
        .files
        .iter()
        .find(|f| f.path == name)
        .ok_or_else(|| CliError::Data(format!("missing upstream file `{name}`")))?;
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| CliError::Data(format!("missing upstream file `{name}`: {e}")))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(CliError::Data(format!("`{name}` no longer matches its manifest digest")));
    }
    if name.ends_with(".json") {
        return Ok(Table {
            header: vec![String::from_utf8_lossy(&bytes).into_owned()],
            rows: Vec::new(),
        });
    }
    let (header, rows) = read_table(&path)?;
    Ok(Table { header, rows })
}

struct ModelInfo {
    explained: Vec<f64>,
    classes: Option<Vec<String>>,
}

fn model_info(dir: &Path, manifest: &Manifest, stem: &str) -> Result<ModelInfo> {
    let name = format!("pls_model_{stem}.json");
    let raw = load(dir, manifest, &name)?;
    let v: serde_json::Value =
        serde_json::from_str(&raw.header[0]).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
    let explained = v["explained_variance"]["x"]
        .as_array()
        .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
        .unwrap_or_default();
    let classes = v["classes"]
        .as_array()
        .map(|a| a.iter().filter_map(|c| c.as_str().map(String::from)).collect());
    Ok(ModelInfo { explained, classes })
}

fn comp_title(k: usize, explained: &[f64]) -> String {
    match explained.get(k) {
        Some(f) => format!("Comp {} ({:.1}%)", k + 1, 100.0 * f),
        None => format!("Comp {}", k + 1),
    }
}

fn frame(x: (f64, f64), y: (f64, f64)) -> Frame {
    Frame {
        left: 70.0,
        top: 40.0,
        width: W - 200.0,
        height: H - 100.0,
        x,
        y,
    }
}

fn legend(svg: &mut Svg, entries: &[(String, &str, usize, bool)]) {
    let x = W - 120.0;
    for (i, (label, colour, shape, filled)) in entries.iter().enumerate() {
        let y = 50.0 + 18.0 * i as f64;
        let fill = if *filled { *colour } else { "none" };
        svg.marker(*shape, x, y, 5.0, fill, colour);
        svg.text(x + 10.0, y + 4.0, label, 11.0, "start", None);
    }
}

/// Colour for `v` on a blue-to-red ramp over `[lo, hi]`.
fn ramp(v: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let (a, b) = ((44.0, 123.0, 182.0), (215.0, 25.0, 28.0));
    let c = |x: f64, y: f64| (x + t * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

fn scores_svg(t: &Table, design_var: &str, info: &ModelInfo) -> String {
    let comps: Vec<usize> = (2..t.header.len()).collect();
    let c1 = t.numbers(comps[0]);
    let (xs, ys, x_title, y_title) = if comps.len() >= 2 {
        (c1, t.numbers(comps[1]), comp_title(0, &info.explained), comp_title(1, &info.explained))
    } else {
        let idx = (0..t.rows.len()).map(|i| Some(i as f64 + 1.0)).collect();
        (idx, c1, "Sample".to_string(), comp_title(0, &info.explained))
    };
    let f = frame(padded_range(xs.iter().flatten().copied()), padded_range(ys.iter().flatten().copied()));
    let mut svg = Svg::new(W, H);
    svg.text(W / 2.0 - 60.0, 24.0, &format!("Scores, ER({design_var})"), 14.0, "middle", None);
    f.zero_lines(&mut svg);
    let labels: Vec<&str> = t.rows.iter().map(|r| r[1].as_str()).collect();
    match &info.classes {
        Some(classes) => {
            for (i, label) in labels.iter().enumerate() {
                let k = classes.iter().position(|c| c == label).unwrap_or(0);
                if let (Some(x), Some(y)) = (xs[i], ys[i]) {
                    svg.marker(k, f.px(x), f.py(y), 4.0, PALETTE[k % PALETTE.len()], "#333333");
                }
            }
            let entries: Vec<_> = classes
                .iter()
                .enumerate()
                .map(|(k, c)| (c.clone(), PALETTE[k % PALETTE.len()], k, true))
                .collect();
            legend(&mut svg, &entries);
        }
        None => {
            let values: Vec<f64> = labels.iter().filter_map(|l| num(l)).collect();
            let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            for (i, label) in labels.iter().enumerate() {
                if let (Some(x), Some(y), Some(v)) = (xs[i], ys[i], num(label)) {
                    svg.marker(0, f.px(x), f.py(y), 4.0, &ramp(v, lo, hi), "#333333");
                }
            }
            legend(
                &mut svg,
                &[
                    (format!("{design_var} = {}", crate::svg::tick_label(lo)), &ramp(lo, lo, hi), 0, true),
                    (format!("{design_var} = {}", crate::svg::tick_label(hi)), &ramp(hi, lo, hi), 0, true),
                ],
            );
        }
    }
    f.axes(&mut svg, &x_title, &y_title, true);
    svg.finish()
}

fn loadings_svg(t: &Table, jack: &Table, design_var: &str, info: &ModelInfo) -> String {
    let sig_col = jack.col("significant");
    let significant: Vec<bool> = jack
        .rows
        .iter()
        .map(|r| sig_col.is_some_and(|j| r[j] == "true"))
        .collect();
    let c1 = t.numbers(1);
    let (xs, ys, x_title, y_title) = if t.header.len() >= 3 {
        (c1, t.numbers(2), comp_title(0, &info.explained), comp_title(1, &info.explained))
    } else {
        let idx = (0..t.rows.len()).map(|i| Some(i as f64 + 1.0)).collect();
        (idx, c1, "Variable".to_string(), comp_title(0, &info.explained))
    };
    let f = frame(padded_range(xs.iter().flatten().copied()), padded_range(ys.iter().flatten().copied()));
    let mut svg = Svg::new(W, H);
    svg.text(W / 2.0 - 60.0, 24.0, &format!("Loadings, ER({design_var})"), 14.0, "middle", None);
    f.zero_lines(&mut svg);
    // Non-significant first so flagged variables are drawn on top.
    for pass in [false, true] {
        for (i, row) in t.rows.iter().enumerate() {
            let sig = significant.get(i).copied().unwrap_or(false);
            if sig != pass {
                continue;
            }
            if let (Some(x), Some(y)) = (xs[i], ys[i]) {
                let (px, py) = (f.px(x), f.py(y));
                if sig {
                    svg.marker(0, px, py, 4.0, PALETTE[1], "#333333");
                    svg.text(px + 6.0, py - 4.0, &row[0], 9.0, "start", None);
                } else {
                    svg.marker(0, px, py, 3.0, "none", "#999999");
                }
            }
        }
    }
    let n_sig = significant.iter().filter(|s| **s).count();
    legend(
        &mut svg,
        &[
            (format!("significant ({n_sig})"), PALETTE[1], 0, true),
            ("not significant".to_string(), "#999999", 0, false),
        ],
    );
    f.axes(&mut svg, &x_title, &y_title, true);
    svg.finish()
}

fn cv_svg(t: &Table, design_var: &str) -> String {
    let comps: Vec<f64> = t.numbers(0).into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let (metric, y_range) = if t.col("accuracy").is_some() {
        ("accuracy", (0.0, 1.05))
    } else {
        let j = t.col("rmsep").unwrap_or(1);
        ("rmsep", (0.0, padded_range(t.numbers(j).into_iter().flatten()).1.max(1e-12)))
    };
    let j = t.col(metric).unwrap_or(1);
    let ys = t.numbers(j);
    let f = frame((-0.25, comps.last().copied().unwrap_or(1.0) + 0.25), y_range);
    let mut svg = Svg::new(W, H);
    svg.text(W / 2.0 - 60.0, 24.0, &format!("Cross-validation, ER({design_var})"), 14.0, "middle", None);
    let pts: Vec<(f64, f64)> = comps
        .iter()
        .zip(&ys)
        .filter_map(|(c, y)| y.map(|y| (f.px(*c), f.py(y))))
        .collect();
    svg.polyline(&pts, PALETTE[0], 2.0);
    for (x, y) in &pts {
        svg.marker(0, *x, *y, 4.0, PALETTE[0], "#333333");
    }
    f.axes(&mut svg, "Components", metric, true);
    svg.finish()
}

fn ci_svg(t: &Table) -> String {
    let group_col = 0;
    let var_col = t.col("variable").unwrap_or(1);
    let (d, lo, hi) = (
        t.col("difference").unwrap_or(6),
        t.col("lower").unwrap_or(7),
        t.col("upper").unwrap_or(8),
    );
    let mut groups: Vec<String> = Vec::new();
    for r in &t.rows {
        if !groups.contains(&r[group_col]) {
            groups.push(r[group_col].clone());
        }
    }
    let levels = |col: &str| t.col(col).and_then(|j| t.rows.first().map(|r| r[j].clone())).unwrap_or_default();
    let gamma = levels("gamma");
    let panel_h = 300.0;
    let height = 60.0 + panel_h * groups.len().max(1) as f64;
    let mut svg = Svg::new(W, height);
    svg.text(
        W / 2.0 - 60.0,
        24.0,
        &format!("{} - {} within {}, {} interval", levels("second_level"), levels("first_level"), t.header[0], gamma),
        13.0,
        "middle",
        None,
    );
    let all = [d, lo, hi].iter().flat_map(|&j| t.numbers(j)).flatten().collect::<Vec<_>>();
    let y_range = padded_range(all.iter().copied().chain([0.0]));
    for (g, group) in groups.iter().enumerate() {
        let rows: Vec<&Vec<String>> = t.rows.iter().filter(|r| &r[group_col] == group).collect();
        let f = Frame {
            left: 70.0,
            top: 50.0 + panel_h * g as f64,
            width: W - 200.0,
            height: panel_h - 70.0,
            x: (0.5, rows.len() as f64 + 0.5),
            y: y_range,
        };
        let pts = |col: usize| -> Vec<(f64, f64)> {
            rows.iter()
                .enumerate()
                .filter_map(|(i, r)| num(&r[col]).map(|v| (f.px(i as f64 + 1.0), f.py(v))))
                .collect()
        };
        let (upper, lower) = (pts(hi), pts(lo));
        let band: Vec<(f64, f64)> = upper.iter().copied().chain(lower.iter().rev().copied()).collect();
        if !band.is_empty() {
            svg.polygon(&band, PALETTE[2], 0.25);
        }
        svg.polyline(&upper, PALETTE[2], 1.0);
        svg.polyline(&lower, PALETTE[2], 1.0);
        svg.polyline(&pts(d), "#222222", 1.5);
        f.zero_lines(&mut svg);
        if rows.len() <= 40 {
            for (i, r) in rows.iter().enumerate() {
                let x = f.px(i as f64 + 1.0);
                svg.text(x, f.top + f.height + 12.0, &r[var_col], 8.0, "end", Some(-45.0));
            }
        }
        f.axes(&mut svg, "", &format!("{group}: difference"), false);
    }
    svg.finish()
}

fn means_svg(t: &Table, factors: &str) -> String {
    let categories: Vec<String> = t.header[2..].to_vec();
    let mut sources: Vec<String> = Vec::new();
    for r in &t.rows {
        if !sources.contains(&r[0]) {
            sources.push(r[0].clone());
        }
    }
    // Only categories that hold samples are drawn.
    let present: Vec<usize> = (0..categories.len())
        .filter(|&c| t.rows.iter().any(|r| num(&r[c + 2]).is_some()))
        .collect();
    let panel_h = 300.0;
    let height = 60.0 + panel_h * sources.len().max(1) as f64;
    let mut svg = Svg::new(W, height);
    svg.text(W / 2.0 - 60.0, 24.0, &format!("Means by {factors}"), 14.0, "middle", None);
    for (s, source) in sources.iter().enumerate() {
        let rows: Vec<&Vec<String>> = t.rows.iter().filter(|r| &r[0] == source).collect();
        let values = rows.iter().flat_map(|r| present.iter().filter_map(|&c| num(&r[c + 2])));
        let f = Frame {
            left: 70.0,
            top: 50.0 + panel_h * s as f64,
            width: W - 200.0,
            height: panel_h - 70.0,
            x: (0.5, present.len() as f64 + 0.5),
            y: padded_range(values),
        };
        for (v, r) in rows.iter().enumerate() {
            let colour = PALETTE[v % PALETTE.len()];
            let pts: Vec<(f64, f64)> = present
                .iter()
                .enumerate()
                .filter_map(|(k, &c)| num(&r[c + 2]).map(|y| (f.px(k as f64 + 1.0), f.py(y))))
                .collect();
            svg.polyline(&pts, colour, 1.0);
        }
        for (k, &c) in present.iter().enumerate() {
            svg.text(f.px(k as f64 + 1.0), f.top + f.height + 14.0, &categories[c], 10.0, "middle", None);
        }
        if rows.len() <= 10 {
            for (v, r) in rows.iter().enumerate() {
                let y = f.top + 10.0 + 16.0 * v as f64;
                svg.line(W - 125.0, y, W - 110.0, y, PALETTE[v % PALETTE.len()], 2.0);
                svg.text(W - 105.0, y + 4.0, &r[1], 10.0, "start", None);
            }
        }
        f.axes(&mut svg, "", source, false);
    }
    svg.finish()
}

fn box_svg(t: &Table, variable: &str) -> String {
    let col = |name: &str| t.col(name).map(|j| t.numbers(j)).unwrap_or_default();
    let (mins, q1, med, q3, maxs) = (col("min"), col("q1"), col("median"), col("q3"), col("max"));
    let f = frame(
        (0.5, t.rows.len() as f64 + 0.5),
        padded_range(mins.iter().chain(&maxs).flatten().copied()),
    );
    let mut svg = Svg::new(W, H);
    svg.text(W / 2.0 - 60.0, 24.0, &format!("Boxplots of {variable}"), 14.0, "middle", None);
    for (i, r) in t.rows.iter().enumerate() {
        let x = f.px(i as f64 + 1.0);
        let half = 0.3 * f.width / t.rows.len().max(1) as f64;
        if let (Some(lo), Some(a), Some(m), Some(b), Some(hi)) = (mins[i], q1[i], med[i], q3[i], maxs[i]) {
            svg.line(x, f.py(lo), x, f.py(a), "#333333", 1.0);
            svg.line(x, f.py(b), x, f.py(hi), "#333333", 1.0);
            svg.line(x - half / 2.0, f.py(lo), x + half / 2.0, f.py(lo), "#333333", 1.0);
            svg.line(x - half / 2.0, f.py(hi), x + half / 2.0, f.py(hi), "#333333", 1.0);
            svg.rect(x - half, f.py(b), 2.0 * half, f.py(a) - f.py(b), PALETTE[i % PALETTE.len()], "#333333");
            svg.line(x - half, f.py(m), x + half, f.py(m), "#000000", 2.0);
        }
        svg.text(x, f.top + f.height + 14.0, &r[0], 10.0, "middle", None);
    }
    f.axes(&mut svg, "", variable, false);
    svg.finish()
}

fn strip<'a>(name: &'a str, prefix: &str, suffix: &str) -> Option<&'a str> {
    name.strip_prefix(prefix)?.strip_suffix(suffix)
}

/// Renders every plot the tables in `dir` support and adds them to its manifest.
pub fn render_plots(dir: &Path) -> Result<Manifest> {
    let mut manifest = Manifest::read(dir)?;
    if manifest.status != Status::Ok || manifest.command != "gem" {
        return Err(CliError::Data(format!(
            "{} does not hold a successful `gem` run",
            dir.display()
        )));
    }
    let tables: Vec<String> = manifest
        .files
        .iter()
        .map(|f| f.path.clone())
        .filter(|p| !p.ends_with(".svg"))
        .collect();
    let mut rendered: Vec<(String, String)> = Vec::new();
    for name in &tables {
        let svg = if let Some(stem) = strip(name, "scores_", ".csv") {
            let t = load(dir, &manifest, name)?;
            let info = model_info(dir, &manifest, stem)?;
            let var = t.header.get(1).cloned().unwrap_or_default();
            Some((format!("scores_{stem}.svg"), scores_svg(&t, &var, &info)))
        } else if let Some(stem) = strip(name, "loadings_", ".csv") {
            let t = load(dir, &manifest, name)?;
            let jack = load(dir, &manifest, &format!("jackknife_{stem}.csv"))?;
            let info = model_info(dir, &manifest, stem)?;
            Some((format!("loadings_{stem}.svg"), loadings_svg(&t, &jack, stem, &info)))
        } else if let Some(stem) = strip(name, "cv_", ".csv") {
            let t = load(dir, &manifest, name)?;
            Some((format!("cv_{stem}.svg"), cv_svg(&t, stem)))
        } else if let Some(stem) = strip(name, "ci_", ".csv") {
            let t = load(dir, &manifest, name)?;
            Some((format!("ci_{stem}.svg"), ci_svg(&t)))
        } else if let Some(stem) = strip(name, "means_", ".csv") {
            let t = load(dir, &manifest, name)?;
            Some((format!("means_{stem}.svg"), means_svg(&t, stem)))
        } else if let Some(stem) = strip(name, "box_", ".csv") {
            let t = load(dir, &manifest, name)?;
            Some((format!("box_{stem}.svg"), box_svg(&t, stem)))
        } else {
            None
        };
        rendered.extend(svg);
    }

    for old in manifest.files.iter().filter(|f| f.path.ends_with(".svg")) {
        let path = dir.join(&old.path);
        if path.is_file() {
            fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
        }
    }
    manifest.files.retain(|f| !f.path.ends_with(".svg"));
    for (name, body) in rendered {
        let path = dir.join(&name);
        fs::write(&path, body.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        manifest.files.push(FileDigest {
            path: name,
            sha256: sha256_hex(body.as_bytes()),
        });
    }
    manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
    manifest.write(dir)?;
    Ok(manifest)
}
