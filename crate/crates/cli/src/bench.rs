//! Corpus runs: synthesise every system and check every bundled certificate.
//!
//! A directory holds systems `<name>.json` and certificates
//! `<name>.<label>.cert.json`, the latter checked against `<name>.json`.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use supermart::certificates::json::{check_symbolic, parse_symbolic_cert};

use crate::commands::{run_synthesis, verdict_code};
use crate::input::{load, read, Model};
use crate::{Format, Mode, SynthArgs, EXIT_ACCEPT, EXIT_UNKNOWN};

pub fn default_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks")
}

#[derive(Debug, Clone)]
enum Entry {
    System(PathBuf),
    Certificate { system: PathBuf, cert: PathBuf },
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub task: String,
    pub locations: usize,
    pub max_priority: usize,
    pub result: String,
    pub detail: String,
    pub seconds: f64,
    code: u8,
}

fn entries(dir: &Path) -> Result<Vec<Entry>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some(stem) = name.strip_suffix(".cert.json") {
            let base = stem.split('.').next().unwrap_or(stem);
            out.push(Entry::Certificate { system: dir.join(format!("{base}.json")), cert: f });
        } else {
            out.push(Entry::System(f));
        }
    }
    Ok(out)
}

fn file_stem(p: &Path) -> String {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    name.strip_suffix(".cert.json").or_else(|| name.strip_suffix(".json")).unwrap_or(name).to_string()
}

fn run_entry(entry: &Entry, args: &SynthArgs, emit: Option<&Path>) -> Result<Row> {
    let started = Instant::now();
    match entry {
        Entry::System(path) => {
            let model = load(path, Mode::Auto)?;
            let (locations, d) = shape_of(&model);
            let report = run_synthesis(&model, args)?;
            let seconds = started.elapsed().as_secs_f64();
            if let (Some(dir), EXIT_ACCEPT) = (emit, report.code) {
                let out = dir.join(format!("{}.lexpmsm_map.json", file_stem(path)));
                std::fs::write(&out, serde_json::to_string_pretty(&report.document)? + "\n")
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            let detail = match &report.shape {
                Some(s) => format!("shape {s:?}, {} rounds", report.trace.rounds.len()),
                None => report.document.get("reason").or(report.document.get("stuck")).map(|v| v.to_string()).unwrap_or_default(),
            };
            Ok(Row {
                name: file_stem(path),
                task: "synthesize".into(),
                locations,
                max_priority: d,
                result: report.result.into(),
                detail,
                seconds,
                code: report.code,
            })
        }
        Entry::Certificate { system, cert } => {
            let model = load(system, Mode::Auto)?;
            let (locations, d) = shape_of(&model);
            let Model::System(sys) = &model else { bail!("{}: certificates in a corpus need a pCFG", cert.display()) };
            let c = parse_symbolic_cert(&read(cert)?, sys).with_context(|| format!("reading {}", cert.display()))?;
            let verdict = check_symbolic(sys, &c);
            let detail = match &verdict {
                supermart::certificates::Verdict::Accept { .. } => String::new(),
                supermart::certificates::Verdict::Reject { reason, .. } | supermart::certificates::Verdict::Unknown { reason } => {
                    reason.clone()
                }
            };
            Ok(Row {
                name: file_stem(cert),
                task: format!("check {}", c.kind),
                locations,
                max_priority: d,
                result: verdict.name().into(),
                detail,
                seconds: started.elapsed().as_secs_f64(),
                code: verdict_code(&verdict),
            })
        }
    }
}

fn shape_of(model: &Model) -> (usize, usize) {
    match model {
        Model::System(s) => (s.pcfg.locations.len(), s.partition.max_priority),
        Model::Chain(c) => (c.chain.len(), c.chain.max_priority()),
    }
}

/// Runs every entry, `jobs` at a time; rows come back in corpus order.
pub fn run_corpus(dir: &Path, args: &SynthArgs, emit: Option<&Path>, jobs: usize) -> Result<Vec<Row>> {
    let list = entries(dir)?;
    if list.is_empty() {
        bail!("no .json entries in {}", dir.display());
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Row>>>> = Mutex::new((0..list.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(list.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(e) = list.get(i) else { break };
                let r = run_entry(e, args, emit);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("threads joined").into_iter().map(|r| r.expect("every entry ran")).collect()
}

fn markdown(rows: &[Row]) -> String {
    let mut out = String::from("| Benchmark | Task | Locations | d | Result | Detail | Time (s) |\n|---|---|---|---|---|---|---|\n");
    for r in rows {
        out += &format!(
            "| {} | {} | {} | {} | {} | {} | {:.3} |\n",
            r.name,
            r.task,
            r.locations,
            r.max_priority,
            r.result,
            r.detail.replace('|', "\\|"),
            r.seconds
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(rows: &[Row]) -> String {
    let mut out = String::from("benchmark,task,locations,d,result,detail,seconds\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{},{:.3}\n",
            csv_field(&r.name),
            csv_field(&r.task),
            r.locations,
            r.max_priority,
            r.result,
            csv_field(&r.detail),
            r.seconds
        );
    }
    out
}

fn to_json(rows: &[Row]) -> Value {
    json!(rows
        .iter()
        .map(|r| json!({
            "benchmark": r.name,
            "task": r.task,
            "locations": r.locations,
            "max_priority": r.max_priority,
            "result": r.result,
            "detail": r.detail,
            "seconds": r.seconds,
        }))
        .collect::<Vec<_>>())
}

pub fn run(dir: Option<PathBuf>, args: &SynthArgs, emit: Option<&Path>, jobs: usize, format: Format) -> Result<u8> {
    let dir = dir.unwrap_or_else(default_corpus);
    if let Some(e) = emit {
        std::fs::create_dir_all(e).with_context(|| format!("creating {}", e.display()))?;
    }
    let rows = run_corpus(&dir, args, emit, jobs)?;
    match format {
        Format::Table => print!("{}", markdown(&rows)),
        Format::Csv => print!("{}", csv(&rows)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&to_json(&rows))?),
    }
    Ok(if rows.iter().any(|r| r.code == EXIT_UNKNOWN) { EXIT_UNKNOWN } else { EXIT_ACCEPT })
}
