use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use parconc_core::concavity::{
    check_parabolic_concavity, check_spatial_concavity, check_structure_condition, full_envelope, ConcavityQuery,
    ConcavityReport, StructureRegion, Verdict, DEFAULT_C_TOL,
};
use parconc_core::energy::{check_curve_concavity, check_time_reparametrized, heat_energy, EnergyCurve};
use parconc_core::exponents::structure_beta;
use parconc_core::solver::{
    boundary_scaling_exponent, solve_parabolic, solve_semilinear_maximal, time_monotonicity_check, Profile, ScalingFit,
    SourceSpec, SpaceTimeField,
};
use parconc_core::Exponent;
use serde::{Deserialize, Serialize};

use crate::config::{CheckConfig, CheckKind, ScenarioConfig};
use crate::LabError;

/// Overrides applied on top of a scenario file.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Output directory; falls back to the config's `out`, then `runs/<name>`.
    pub out: Option<PathBuf>,
    /// Multiplies every tolerance and gap bound.
    pub tolerance_scale: f64,
    pub write_files: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: None,
            out: None,
            tolerance_scale: 1.0,
            write_files: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub parconc: String,
    pub parconc_core: String,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            parconc: env!("CARGO_PKG_VERSION").into(),
            parconc_core: parconc_core::VERSION.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub nodes: usize,
    pub snapshots: usize,
    pub max_value: f64,
    pub clamped: usize,
    /// Only for maximal solutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_nondecreasing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "detail", rename_all = "kebab-case")]
pub enum CheckDetail {
    Concavity {
        report: ConcavityReport,
    },
    Envelope {
        max_gap: f64,
        relative_gap: f64,
        bound: f64,
        gap_location: Option<([f64; 2], f64)>,
        flagged: usize,
    },
    Energy {
        report: ConcavityReport,
        curve: String,
    },
    Structure {
        report: ConcavityReport,
        /// `1/β < 1` when the source's exponents are known.
        predicted_valid: Option<bool>,
    },
    BoundaryExponent {
        fit: ScalingFit,
        expected: f64,
        tolerance: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub index: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub sharpness: bool,
    pub observed_pass: bool,
    /// `observed_pass != sharpness`.
    pub as_expected: bool,
    #[serde(flatten)]
    pub detail: CheckDetail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub tolerance_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSummary>,
    pub results: Vec<CheckResult>,
    pub passed: bool,
    pub wall_time_s: f64,
    pub versions: Versions,
}

impl RunRecord {
    /// Exit status of the run: 0 iff every check behaved as predicted.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    /// The record with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunRecord, LabError> {
    let cfg = ScenarioConfig::load(path)?;
    run_config(&cfg, opts)
}

pub fn run_config(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunRecord, LabError> {
    cfg.validate().map_err(|message| LabError::Config {
        path: PathBuf::from(&cfg.name),
        message,
    })?;
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(LabError::Options(format!(
            "tolerance scale {} must be a positive real",
            opts.tolerance_scale
        )));
    }
    let start = Instant::now();
    let seed = opts.seed.unwrap_or(cfg.seed);
    let (field, summary) = if cfg.checks.iter().any(|c| c.kind.needs_field()) {
        let (u, s) = solve(cfg)?;
        (Some(u), Some(s))
    } else {
        (None, None)
    };

    let mut results = Vec::with_capacity(cfg.checks.len());
    let mut curves = Vec::new();
    for (i, check) in cfg.checks.iter().enumerate() {
        let check_seed = seed.wrapping_add(i as u64);
        let (pass, detail, curve) = run_check(cfg, check, field.as_ref(), check_seed, opts.tolerance_scale, i)?;
        if let Some(c) = curve {
            curves.push(c);
        }
        results.push(CheckResult {
            index: i,
            kind: check.kind.name().into(),
            label: check.label.clone(),
            sharpness: check.sharpness,
            observed_pass: pass,
            as_expected: pass != check.sharpness,
            detail,
        });
    }
    let record = RunRecord {
        config: cfg.clone(),
        seed,
        tolerance_scale: opts.tolerance_scale,
        field: summary,
        passed: results.iter().all(|r| r.as_expected),
        results,
        wall_time_s: start.elapsed().as_secs_f64(),
        versions: Versions::current(),
    };
    if opts.write_files {
        let dir = output_dir(cfg, opts);
        write_outputs(&dir, &record, field.as_ref(), &curves)?;
    }
    Ok(record)
}

pub(crate) fn output_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| Path::new("runs").join(&cfg.name))
}

fn solve(cfg: &ScenarioConfig) -> Result<(SpaceTimeField, FieldSummary), LabError> {
    let g = &cfg.grid;
    let (u, cauchy_gap, monotone) = match (&cfg.source, &cfg.maximal) {
        (SourceSpec::SemilinearPower { gamma }, Some(m)) => {
            let sol = solve_semilinear_maximal(&cfg.domain, *gamma, g.h, g.dt, g.t_end, &m.eps)?;
            let mono = time_monotonicity_check(&sol.field, None).passed;
            (sol.field, Some(sol.cauchy_gap), Some(mono))
        }
        _ => (
            solve_parabolic(&cfg.domain, &cfg.source, g.h, g.dt, g.t_end)?,
            None,
            None,
        ),
    };
    let summary = FieldSummary {
        nodes: u.grid().len(),
        snapshots: u.times().len(),
        max_value: u.max_value(),
        clamped: u.meta().clamped,
        cauchy_gap,
        time_nondecreasing: monotone,
    };
    Ok((u, summary))
}

/// `(q, γ)` of sources of the form `t^γ f(x)` with `f` q-concave.
pub fn source_exponents(source: &SourceSpec) -> Option<(Exponent, f64)> {
    let from_d = |d: f64| {
        if d == 0.0 {
            Exponent::PosInf
        } else {
            Exponent::Finite(1.0 / d)
        }
    };
    match source {
        SourceSpec::Constant { .. } => Some((Exponent::PosInf, 0.0)),
        SourceSpec::DistPower { d, gamma } => Some((from_d(*d), *gamma)),
        SourceSpec::TimeWeighted { gamma, profile } => match profile {
            Profile::Constant { .. } => Some((Exponent::PosInf, *gamma)),
            Profile::DistPower { d } => Some((from_d(*d), *gamma)),
            Profile::Tabulated { .. } => None,
        },
        _ => None,
    }
}

fn rescale(mut rep: ConcavityReport, scale: f64) -> ConcavityReport {
    rep.tolerance *= scale;
    rep.verdict = if rep.worst_defect > rep.tolerance {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    rep
}

struct Curve {
    file: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

fn default_t_min(u: &SpaceTimeField) -> f64 {
    (20.0 * u.meta().dt).min(0.5 * u.t_end())
}

fn run_check(
    cfg: &ScenarioConfig,
    check: &CheckConfig,
    field: Option<&SpaceTimeField>,
    seed: u64,
    scale: f64,
    index: usize,
) -> Result<(bool, CheckDetail, Option<Curve>), LabError> {
    let need = || field.ok_or_else(|| LabError::Options("check needs a solved field".into()));
    Ok(match &check.kind {
        CheckKind::Spatial {
            p,
            t,
            samples,
            tolerance,
        } => {
            let u = need()?;
            let t = t.unwrap_or(u.t_end());
            let tol = match tolerance {
                Some(v) => *v,
                None => {
                    let h = u.grid().spacing();
                    let max = u.slice_at(t)?.iter().fold(0.0f64, |a, &b| a.max(b));
                    DEFAULT_C_TOL * h * h * max
                }
            };
            let rep = check_spatial_concavity(u, t, *p, *samples, Some(tol * scale), seed)?;
            (rep.verdict.passed(), CheckDetail::Concavity { report: rep }, None)
        }
        CheckKind::Parabolic {
            alpha,
            p,
            t_min,
            samples,
            tolerance,
        } => {
            let u = need()?;
            let mut q = ConcavityQuery::new(*alpha, *p).with_samples(*samples).with_seed(seed);
            if let Some(t) = tolerance {
                q = q.with_tolerance(*t);
            }
            let rep = rescale(
                check_parabolic_concavity(u, &q, t_min.unwrap_or(default_t_min(u)))?,
                scale,
            );
            (rep.verdict.passed(), CheckDetail::Concavity { report: rep }, None)
        }
        CheckKind::Envelope {
            alpha,
            p,
            max_relative_gap,
        } => {
            let u = need()?;
            let env = full_envelope(u, *alpha, *p)?;
            let bound = max_relative_gap * scale;
            (
                env.relative_gap <= bound,
                CheckDetail::Envelope {
                    max_gap: env.max_gap,
                    relative_gap: env.relative_gap,
                    bound,
                    gap_location: env.gap_location,
                    flagged: env.flagged,
                },
                None,
            )
        }
        CheckKind::Energy {
            q,
            m,
            alpha,
            t_min,
            tolerance,
        } => {
            let u = need()?;
            let curve: EnergyCurve = heat_energy(u, *m)?;
            let t_min = t_min.unwrap_or(default_t_min(u));
            let rep = match alpha {
                Some(a) => check_time_reparametrized(&curve, *a, *q, t_min, *tolerance)?,
                None => check_curve_concavity(&curve, *q, t_min, *tolerance)?,
            };
            let rep = rescale(rep, scale);
            let file = format!("energy-{index}.csv");
            (
                rep.verdict.passed(),
                CheckDetail::Energy {
                    report: rep,
                    curve: file.clone(),
                },
                Some(Curve {
                    file,
                    times: curve.times,
                    values: curve.values,
                }),
            )
        }
        CheckKind::Structure {
            alpha,
            p,
            samples,
            tolerance,
        } => {
            let rep = check_structure_condition(
                &cfg.source,
                &cfg.domain,
                *alpha,
                *p,
                &StructureRegion::default(),
                *samples,
                *tolerance,
                seed,
            )?;
            let rep = rescale(rep, scale);
            let predicted_valid = source_exponents(&cfg.source)
                .and_then(|(q, g)| structure_beta(*p, q, g).ok())
                .map(|b| b.concavity_valid);
            (
                rep.verdict.passed(),
                CheckDetail::Structure {
                    report: rep,
                    predicted_valid,
                },
                None,
            )
        }
        CheckKind::BoundaryExponent {
            x_star,
            y_star,
            alpha,
            expected,
            tolerance,
        } => {
            let u = need()?;
            let fit = boundary_scaling_exponent(u, x_star, y_star, *alpha)?;
            let tol = tolerance * scale;
            (
                (fit.exponent - expected).abs() <= tol,
                CheckDetail::BoundaryExponent {
                    fit,
                    expected: *expected,
                    tolerance: tol,
                },
                None,
            )
        }
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_curve(path: &Path, times: &[f64], values: &[f64]) -> Result<(), LabError> {
    let csv_err = |e: csv::Error| LabError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for (t, v) in times.iter().zip(values) {
        w.write_record([t.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// `summary.json`, `reports.jsonl` (one check per line), `max.csv` with
/// `max_x u(·, t)` and one `energy-<i>.csv` per energy check.
fn write_outputs(
    dir: &Path,
    record: &RunRecord,
    field: Option<&SpaceTimeField>,
    curves: &[Curve],
) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let summary = dir.join("summary.json");
    let text = serde_json::to_string_pretty(record).map_err(|e| LabError::Serialize(e.to_string()))?;
    fs::write(&summary, text + "\n").map_err(io_err(&summary))?;

    let reports = dir.join("reports.jsonl");
    let mut w = BufWriter::new(File::create(&reports).map_err(io_err(&reports))?);
    for r in &record.results {
        let line = serde_json::to_string(r).map_err(|e| LabError::Serialize(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err(&reports))?;
    }
    w.flush().map_err(io_err(&reports))?;

    if let Some(u) = field {
        let maxima: Vec<f64> = (0..u.times().len())
            .map(|k| u.slice(k).iter().fold(0.0f64, |a, &b| a.max(b)))
            .collect();
        write_curve(&dir.join("max.csv"), u.times(), &maxima)?;
    }
    for c in curves {
        write_curve(&dir.join(&c.file), &c.times, &c.values)?;
    }
    Ok(())
}
