//! Markdown summary of a results directory, built only from files already
//! written there.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::pipeline::{SummaryRow, SweepRow};
use super::write_file;
use crate::error::{Error, Result};
use crate::opt::OptimizationResult;

pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub markdown: String,
    /// Files that could not be read, with the reason.
    pub problems: Vec<(PathBuf, String)>,
    pub plots: Vec<PathBuf>,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<Vec<T>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    rdr.deserialize().collect::<csv::Result<Vec<T>>>().map_err(|e| e.to_string())
}

fn engine_of(variant: &str) -> Option<&str> {
    variant
        .strip_suffix("_unclustered")
        .or_else(|| variant.strip_suffix("_clustered"))
}

#[derive(Debug, serde::Deserialize)]
struct StabilityRow {
    engine: String,
    variant: String,
    run: String,
    otp_before: f64,
    otp_after: f64,
    wall_time: f64,
}

/// Renders `report.md` and one `plot_<param>.csv` per sweep into `out`.
pub fn render_report(dir: &Path, out: &Path) -> Result<ReportOutcome> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    walk(dir, &mut files)?;
    let rel = |p: &Path| p.strip_prefix(dir).unwrap_or(p).display().to_string();

    let mut problems = Vec::new();
    let mut summaries: BTreeMap<String, Vec<(String, SummaryRow)>> = BTreeMap::new();
    let mut results: BTreeMap<String, Vec<(String, OptimizationResult)>> = BTreeMap::new();
    let mut sweeps: Vec<(String, Vec<SweepRow>)> = Vec::new();
    let mut stability: Vec<(String, Vec<StabilityRow>)> = Vec::new();

    for path in &files {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let in_results = path.parent().and_then(|p| p.file_name()).is_some_and(|n| n == "results");
        if name == "summary.csv" {
            match read_csv::<SummaryRow>(path) {
                Ok(rows) => {
                    for r in rows {
                        if let Some(e) = engine_of(&r.variant) {
                            summaries.entry(e.to_string()).or_default().push((rel(path), r));
                        }
                    }
                }
                Err(e) => problems.push((path.clone(), e)),
            }
        } else if in_results && name.ends_with(".json") && !name.ends_with(".error.json") {
            let parsed = fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<OptimizationResult>(&t).map_err(|e| e.to_string()));
            match parsed {
                Ok(r) => results.entry(r.engine.to_string()).or_default().push((rel(path), r)),
                Err(e) => problems.push((path.clone(), e)),
            }
        } else if name.starts_with("sweep_") && name.ends_with(".csv") {
            match read_csv::<SweepRow>(path) {
                Ok(rows) => sweeps.push((rel(path), rows)),
                Err(e) => problems.push((path.clone(), e)),
            }
        } else if name == "stability.csv" {
            match read_csv::<StabilityRow>(path) {
                Ok(rows) => stability.push((rel(path), rows)),
                Err(e) => problems.push((path.clone(), e)),
            }
        }
    }

    let mut md = String::from("# Timetable optimization report\n\n");
    let empty = summaries.is_empty() && results.is_empty() && sweeps.is_empty() && stability.is_empty();
    if empty {
        log::warn!("no results found under {}", dir.display());
        md.push_str("No results found.\n");
    }

    let engines: Vec<String> = summaries.keys().chain(results.keys()).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for engine in engines {
        let _ = writeln!(md, "## Engine `{engine}`\n");
        if let Some(rows) = summaries.get(&engine) {
            md.push_str("| file | trip | variant | OTP | observations |\n|---|---|---|---|---|\n");
            for (file, r) in rows {
                let _ = writeln!(md, "| {file} | {} | {} | {:.4} | {} |", r.trip_id, r.variant, r.otp, r.observations);
            }
            md.push('\n');
        }
        if let Some(rs) = results.get(&engine) {
            md.push_str("| result | trip | months | OTP before | OTP after | evaluations |\n|---|---|---|---|---|---|\n");
            for (file, r) in rs {
                let months: Vec<String> = r.months.iter().map(|m| m.to_string()).collect();
                let _ = writeln!(
                    md,
                    "| {file} | {} | {} | {:.4} | {:.4} | {} |",
                    r.trip_id,
                    months.join(" "),
                    r.otp_before,
                    r.otp_after,
                    r.evaluations
                );
            }
            md.push('\n');
        }
    }

    let mut plots = Vec::new();
    for (file, rows) in &sweeps {
        let Some(param) = rows.first().map(|r| r.param.clone()) else {
            problems.push((dir.join(file), "no rows".into()));
            continue;
        };
        let mut by_value: Vec<(f64, Vec<&SweepRow>)> = Vec::new();
        for r in rows {
            match by_value.iter_mut().find(|(v, _)| *v == r.value) {
                Some((_, group)) => group.push(r),
                None => by_value.push((r.value, vec![r])),
            }
        }
        let _ = writeln!(md, "## Sweep `{param}` ({file})\n");
        md.push_str("| value | runs | mean OTP | std OTP | mean wall time (s) |\n|---|---|---|---|---|\n");
        let mut csv = String::from("value,runs,mean_otp,std_otp,mean_wall_time\n");
        for (value, group) in &by_value {
            let n = group.len() as f64;
            let mean = group.iter().map(|r| r.otp).sum::<f64>() / n;
            let std = (group.iter().map(|r| (r.otp - mean).powi(2)).sum::<f64>() / n).sqrt();
            let time = group.iter().map(|r| r.wall_time).sum::<f64>() / n;
            let _ = writeln!(md, "| {value} | {} | {mean:.4} | {std:.4} | {time:.4} |", group.len());
            let _ = writeln!(csv, "{value},{},{mean:.6},{std:.6},{time:.6}", group.len());
        }
        md.push('\n');
        let plot = out.join(format!("plot_{param}.csv"));
        write_file(&plot, csv)?;
        plots.push(plot);
    }

    for (file, rows) in &stability {
        let _ = writeln!(md, "## Stability ({file})\n");
        md.push_str("| engine | variant | OTP before | OTP after | wall time (s) |\n|---|---|---|---|---|\n");
        for r in rows.iter().filter(|r| r.run == "mean") {
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {:.4} | {:.4} |",
                r.engine, r.variant, r.otp_before, r.otp_after, r.wall_time
            );
        }
        md.push('\n');
    }

    if !problems.is_empty() {
        md.push_str("## Unreadable files\n\n");
        for (p, e) in &problems {
            let _ = writeln!(md, "- {}: {e}", rel(p));
        }
    }
    write_file(&out.join(REPORT_FILE), &md)?;
    Ok(ReportOutcome {
        markdown: md,
        problems,
        plots,
    })
}
