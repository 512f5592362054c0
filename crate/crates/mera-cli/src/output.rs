//! Scenario directories: per-cell fragments, the manifest and assembled CSVs.

use crate::config::{Cell, Plan};
use crate::scenarios::{cell_seed, has_spectra, header, CellOutput, Runner, SPECTRA_HEADER};
use anyhow::{Context, Result};
use mera_sim::par::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub label: String,
    pub g: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub cell_seed: u64,
    pub done: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub noise: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub wall_time_s: f64,
    pub cells: Vec<CellRecord>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST), &serde_json::to_string_pretty(self)?)
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_rows(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn fragment(dir: &Path, cell: &Cell, kind: &str) -> PathBuf {
    dir.join("cells").join(format!("{}.{kind}.csv", cell.label()))
}

pub struct RunSummary {
    pub dir: PathBuf,
    pub computed: usize,
    pub skipped: usize,
    pub outputs: Vec<PathBuf>,
}

/// Run every incomplete cell of `plan` into `dir`, then assemble outputs.
pub fn run(plan: &Plan, dir: &Path, jobs: Option<usize>) -> Result<RunSummary> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = plan.config_hash();
    let fresh = Manifest {
        scenario: plan.scenario.name().into(),
        config_hash: hash.clone(),
        config: serde_json::to_value(&plan.config)?,
        seed: plan.seed,
        noise: plan.noise.label().into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: now(),
        finished_unix: None,
        wall_time_s: 0.0,
        cells: plan
            .cells
            .iter()
            .map(|c| CellRecord {
                label: c.label(),
                g: c.g,
                t: c.t,
                cell_seed: cell_seed(plan, c),
                done: false,
                wall_time_s: 0.0,
            })
            .collect(),
        outputs: Vec::new(),
    };
    let manifest = match Manifest::load(dir) {
        Ok(old) if old.config_hash == hash => {
            let mut m = fresh;
            for rec in &mut m.cells {
                if let Some(o) = old.cells.iter().find(|o| o.label == rec.label && o.done) {
                    let cell = plan.cells.iter().find(|c| c.label() == rec.label).expect("cell of plan");
                    if fragment(dir, cell, "main").exists() {
                        rec.done = true;
                        rec.wall_time_s = o.wall_time_s;
                    }
                }
            }
            m
        }
        _ => fresh,
    };
    manifest.save(dir)?;
    let start = Instant::now();
    let pending: Vec<Cell> = plan.cells.iter().zip(&manifest.cells).filter(|(_, r)| !r.done).map(|(c, _)| *c).collect();
    let skipped = plan.cells.len() - pending.len();
    for rec in manifest.cells.iter().filter(|r| r.done) {
        eprintln!("skipping completed cell {}", rec.label);
    }
    let runner = Runner::new(plan);
    let shared = Mutex::new(manifest);
    let results: Vec<Result<()>> = with_threads(jobs, || {
        pending
            .par_iter()
            .map(|cell| -> Result<()> {
                let t0 = Instant::now();
                eprintln!("running cell {}", cell.label());
                let out: CellOutput = runner.run(cell)?;
                for (name, text) in &out.files {
                    write_atomic(&dir.join(name), text)?;
                }
                if has_spectra(plan.scenario) {
                    write_atomic(&fragment(dir, cell, "spectra"), &csv_rows(&out.spectra)?)?;
                }
                write_atomic(&fragment(dir, cell, "main"), &csv_rows(&out.rows)?)?;
                let mut m = shared.lock().expect("manifest lock");
                if let Some(rec) = m.cells.iter_mut().find(|r| r.label == cell.label()) {
                    rec.done = true;
                    rec.wall_time_s = t0.elapsed().as_secs_f64();
                }
                m.save(dir)
            })
            .collect()
    });
    let mut manifest = shared.into_inner().expect("manifest lock");
    results.into_iter().collect::<Result<Vec<()>>>()?;

    let comment = format!(
        "# scenario: {}\n# config_hash: {}\n# seed: {}\n# noise: {}\n# code_version: {}\n",
        plan.scenario.name(),
        hash,
        plan.seed,
        plan.noise.label(),
        env!("CARGO_PKG_VERSION")
    );
    let mut outputs =
        vec![assemble(plan, dir, &comment, "main", header(plan.scenario), &format!("{}.csv", plan.scenario.name()))?];
    if has_spectra(plan.scenario) {
        outputs.push(assemble(plan, dir, &comment, "spectra", SPECTRA_HEADER, "spectra.csv")?);
    }
    manifest.outputs = outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    manifest.wall_time_s += start.elapsed().as_secs_f64();
    manifest.finished_unix = Some(now());
    manifest.save(dir)?;
    Ok(RunSummary { dir: dir.to_path_buf(), computed: pending.len(), skipped, outputs })
}

fn assemble(plan: &Plan, dir: &Path, comment: &str, kind: &str, head: &[&str], name: &str) -> Result<PathBuf> {
    let mut text = comment.to_string();
    text.push_str(&csv_rows(&[head.iter().map(|s| s.to_string()).collect()])?);
    for cell in &plan.cells {
        let p = fragment(dir, cell, kind);
        text.push_str(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?);
    }
    let path = dir.join(name);
    write_atomic(&path, &text)?;
    Ok(path)
}
