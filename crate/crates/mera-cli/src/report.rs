//! Summaries of finished scenario directories.

use crate::output::{Manifest, MANIFEST};
use anyhow::{bail, Context, Result};
use mera_sim::analysis::{fit_critical_exponent, scaling_fit};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

struct Table {
    columns: Vec<String>,
    rows: Vec<HashMap<String, String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .with_context(|| path.display().to_string())?;
        let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(columns.iter().cloned().zip(rec.iter().map(String::from)).collect());
        }
        Ok(Self { columns, rows })
    }

    fn num(row: &HashMap<String, String>, col: &str) -> Option<f64> {
        row.get(col).and_then(|v| v.parse().ok())
    }
}

/// Scenario directories below `root` (or `root` itself).
pub fn scenario_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(MANIFEST).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST).exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no {MANIFEST} under {}", root.display());
    }
    Ok(dirs)
}

pub fn report(root: &Path) -> Result<String> {
    let mut s = String::new();
    for dir in scenario_dirs(root)? {
        let m = Manifest::load(&dir)?;
        let done = m.cells.iter().filter(|c| c.done).count();
        writeln!(s, "== {} ({})", m.scenario, dir.display())?;
        writeln!(
            s,
            "config {}  seed {}  noise {}  cells {done}/{}  wall {:.1} s",
            m.config_hash,
            m.seed,
            m.noise,
            m.cells.len(),
            m.wall_time_s
        )?;
        let Some(main) = m.outputs.first() else {
            writeln!(s, "incomplete run, no outputs")?;
            continue;
        };
        let t = Table::read(&dir.join(main))?;
        writeln!(s, "{} rows, columns: {}", t.rows.len(), t.columns.join(","))?;
        summarize(&m.scenario, &t, &mut s)?;
        writeln!(s)?;
    }
    Ok(s)
}

fn summarize(scenario: &str, t: &Table, s: &mut String) -> Result<()> {
    let col = |name: &str| -> Vec<(f64, f64)> {
        t.rows.iter().filter_map(|r| Some((Table::num(r, "T").or(Table::num(r, "g"))?, Table::num(r, name)?))).collect()
    };
    match scenario {
        "sweep_g" => {
            let worst = t
                .rows
                .iter()
                .filter_map(|r| Some((Table::num(r, "energy")? - Table::num(r, "energy_exact")?).abs()))
                .fold(0.0, f64::max);
            writeln!(s, "max |e - e_exact| = {worst:.3e}")?;
            let mag: Vec<(f64, f64)> =
                t.rows.iter().filter_map(|r| Some((Table::num(r, "g")?, Table::num(r, "x")?.abs()))).collect();
            if let Ok(fit) = fit_critical_exponent(&mag, 0.8) {
                writeln!(s, "beta (g in [0.5, 0.8]) = {:.4} ± {:.4}", fit.slope, fit.slope_err)?;
            }
        }
        "scaling_critical" | "scaling_gapped" => {
            for name in ["s2_ideal", "s2_meas"] {
                let pts: Vec<(f64, f64)> = col(name).into_iter().filter(|p| p.0 >= 2.0).collect();
                if let Ok(fit) = scaling_fit(&pts) {
                    writeln!(s, "{name}: slope per layer over T >= 2 = {:.4} ± {:.4}", fit.slope, fit.slope_err)?;
                }
            }
            let gaps: Vec<(f64, f64)> =
                col("gap_ideal").into_iter().filter(|p| p.0 >= 2.0).map(|(x, y)| (x, y.log2())).collect();
            if let Ok(fit) = scaling_fit(&gaps) {
                writeln!(s, "log2 Schmidt gap decrement per layer = {:.4}", -fit.slope)?;
            }
        }
        "noise_breakdown" => {
            let mut cells: Vec<(String, String)> = t.rows.iter().map(|r| (r["g"].clone(), r["T"].clone())).collect();
            cells.dedup();
            for (g, tt) in cells {
                let mut rows: Vec<(&str, f64, f64)> = t
                    .rows
                    .iter()
                    .filter(|r| r["g"] == g && r["T"] == tt)
                    .filter_map(|r| {
                        Some((r["case"].as_str(), Table::num(r, "infidelity_mean")?, Table::num(r, "zeta0_mean")?))
                    })
                    .collect();
                rows.sort_by(|a, b| b.1.total_cmp(&a.1));
                writeln!(s, "g = {g}, T = {tt}: cases by mean infidelity")?;
                for (case, inf, z) in rows {
                    writeln!(s, "  {case:<10} 1-F = {inf:.3e}  zeta0 = {z:.4}")?;
                }
            }
        }
        "tomography" => {
            for r in &t.rows {
                writeln!(
                    s,
                    "g = {} T = {} {:<17} F = {:<10} S2 = {} (ideal {})",
                    r["g"], r["T"], r["method"], r["fidelity"], r["s2"], r["s2_ideal"]
                )?;
            }
        }
        "calibrate_fit" => {
            for r in &t.rows {
                writeln!(
                    s,
                    "{:<10} injected {:<12} fitted {:<24} rel {}",
                    r["parameter"], r["injected"], r["fitted"], r["rel_error"]
                )?;
            }
        }
        _ => {}
    }
    Ok(())
}
