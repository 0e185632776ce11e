use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::run::{output_dir, run_config, RunOptions, RunRecord};
use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub path: PathBuf,
    pub name: Option<String>,
    pub passed: bool,
    pub checks: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
    pub passed: bool,
    #[serde(skip)]
    pub records: Vec<Option<RunRecord>>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let status = match (&e.error, e.passed) {
                (Some(_), _) => "ERROR",
                (None, true) => "ok",
                (None, false) => "DEVIATES",
            };
            let name = e.name.clone().unwrap_or_else(|| e.path.display().to_string());
            s.push_str(&format!("{status:<9}{name} ({} checks)", e.checks));
            if let Some(err) = &e.error {
                s.push_str(&format!(": {err}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Sorted `*.toml` files in `dir`.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    let io = |source| LabError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "toml") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Runs every scenario in `dir` on `parallel` threads. Each scenario writes
/// to `<out>/<name>` when `opts.out` is set. A failing scenario does not stop
/// the others.
pub fn run_suite(dir: &Path, parallel: usize, opts: &RunOptions) -> Result<SuiteReport, LabError> {
    if parallel == 0 {
        return Err(LabError::Options("parallelism must be positive".into()));
    }
    let files = scenario_files(dir)?;
    if files.is_empty() {
        return Err(LabError::Options(format!("no *.toml scenarios in {}", dir.display())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| LabError::Options(e.to_string()))?;
    let outcomes: Vec<(PathBuf, Option<String>, Result<RunRecord, LabError>)> = pool.install(|| {
        files
            .par_iter()
            .map(|path| match ScenarioConfig::load(path) {
                Ok(cfg) => {
                    let mut o = opts.clone();
                    o.out = opts.out.as_ref().map(|root| root.join(&cfg.name));
                    if o.out.is_none() {
                        o.out = Some(output_dir(&cfg, opts));
                    }
                    (path.clone(), Some(cfg.name.clone()), run_config(&cfg, &o))
                }
                Err(e) => (path.clone(), None, Err(e)),
            })
            .collect()
    });
    let mut entries = Vec::with_capacity(outcomes.len());
    let mut records = Vec::with_capacity(outcomes.len());
    for (path, name, outcome) in outcomes {
        match outcome {
            Ok(rec) => {
                entries.push(SuiteEntry {
                    path,
                    name,
                    passed: rec.passed,
                    checks: rec.results.len(),
                    error: None,
                });
                records.push(Some(rec));
            }
            Err(e) => {
                entries.push(SuiteEntry {
                    path,
                    name,
                    passed: false,
                    checks: 0,
                    error: Some(e.to_string()),
                });
                records.push(None);
            }
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    let report = SuiteReport {
        entries,
        passed,
        records,
    };
    if opts.write_files {
        if let Some(root) = &opts.out {
            fs::create_dir_all(root).map_err(|source| LabError::Io {
                path: root.clone(),
                source,
            })?;
            let path = root.join("suite.json");
            let text = serde_json::to_string_pretty(&report).map_err(|e| LabError::Serialize(e.to_string()))?;
            fs::write(&path, text + "\n").map_err(|source| LabError::Io { path, source })?;
        }
    }
    Ok(report)
}
