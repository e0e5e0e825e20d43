//! Scenario execution and report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::config::{ResolvedScenario, RunConfig, Suite, CONFIG_VERSION};
use crate::error::{Error, Result};
use crate::oracle::cross_check;
use crate::states::random_admissible;
use crate::timeop::q_boundary_warning;
use crate::verify::{
    arai_residual, arai_residual_exp, convergence_study, expectation_shift_residual, step_residuals, symmetry_defect,
    weak_weyl_residual, weyl_residual_pq, ResidualReport, TRIANGLE_SLACK,
};

/// Version of the report layout (JSON fields and CSV columns).
pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_OUTPUT_DIR: &str = "weyl-lab-out";
pub const REPORT_FILE: &str = "report.json";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
/// Random partner vectors used by the symmetry comparison in the oracle suite.
const ORACLE_PARTNERS: usize = 2;

/// Command-line overrides of configuration fields.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<ResidualReport>,
    pub output_dir: PathBuf,
    pub passed: bool,
}

/// Seed of one scenario: independent of scheduling and of the other
/// scenarios in the file.
pub fn scenario_seed(seed: u64, id: &str) -> u64 {
    id.bytes()
        .fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn exact_t(t: f64) -> bool {
    t == 0.0
}

/// Runs every selected suite of one resolved scenario.
pub fn run_scenario(r: &ResolvedScenario, seed: u64) -> Result<ResidualReport> {
    let start = Instant::now();
    let setup = &r.setup;
    let op = &setup.op;
    let phi = setup.phi.state();
    let tol = r.config.tolerances;
    let times = &r.config.times;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ResidualReport::new(&r.scenario, setup);
    if let Some(m) = q_boundary_warning(phi) {
        report
            .warnings
            .push(format!("test vector has boundary mass {m:e}; position-operator results may be unreliable"));
    }

    for suite in &r.suites {
        match suite {
            Suite::WeakWeyl => {
                for &t in times {
                    let v = weak_weyl_residual(op, phi, t)?;
                    report.record("weak_weyl", Some(t), None, v, tol.pick(tol.weak_weyl, exact_t(t)));
                }
            }
            Suite::Steps => {
                for &t in times {
                    let steps = step_residuals(op, phi, t)?;
                    let limit = tol.pick(tol.steps, exact_t(t));
                    report.record("step_chi", Some(t), None, steps.chi, limit);
                    report.record("step_eq5", Some(t), None, steps.eq5, limit);
                    report.record("step_eq6", Some(t), None, steps.eq6, limit);
                    let weak = weak_weyl_residual(op, phi, t)?;
                    let excess = (weak - 0.5 * (steps.chi + steps.eq6)).max(0.0);
                    report.record("step_triangle_excess", Some(t), None, excess, TRIANGLE_SLACK);
                }
            }
            Suite::Arai => {
                for f in &r.arai_functions {
                    let v = arai_residual(f, phi)?;
                    let exact = !f.g().depends_on_var();
                    report.record(format!("arai[{}]", f.g()), None, None, v, tol.pick(tol.arai, exact));
                }
                for &tau in &r.arai_phases {
                    let v = arai_residual_exp(tau, phi)?;
                    report.record(format!("arai[exp(-i*{tau}*x)]"), None, None, v, tol.pick(tol.arai, tau == 0.0));
                }
            }
            Suite::WeylPq => {
                for &[s, t] in &r.config.weyl_pairs {
                    let v = weyl_residual_pq(phi, s, t)?;
                    let limit = tol.pick(tol.weyl_pq, s == 0.0 || t == 0.0);
                    report.record(format!("weyl_pq[s={s}]"), Some(t), Some(s), v, limit);
                }
            }
            Suite::Expectation => {
                for &t in times {
                    let v = expectation_shift_residual(op, phi, t)?;
                    report.record("expectation_shift", Some(t), None, v, tol.pick(tol.expectation, exact_t(t)));
                }
            }
            Suite::Convergence => {
                let t = r
                    .convergence
                    .t
                    .unwrap_or_else(|| times.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a }));
                let base = match r.convergence.base {
                    Some(g) => r.scenario.clone().with_grid(g.n, g.length),
                    None => r.scenario.clone(),
                };
                // The study's verdict rests on the ratios; only an exact case
                // constrains the coarsest level.
                let first = tol.pick(f64::INFINITY, exact_t(t));
                let study = convergence_study::<f64>(&base, t, r.convergence.levels, first)?;
                for (i, level) in study.levels.iter().enumerate() {
                    report.record_at(
                        format!("convergence[{i}]"),
                        Some(t),
                        None,
                        level.n,
                        level.length,
                        level.residual,
                        level.tolerance,
                    );
                }
                report.convergence.push(study);
            }
            Suite::Oracle => {
                let partners = (0..ORACLE_PARTNERS)
                    .map(|_| random_admissible(&setup.grid, op.singular_set(), &mut rng).map(|tv| tv.state().clone()))
                    .collect::<Result<Vec<_>>>()?;
                let pairs: Vec<(f64, f64)> = r.config.weyl_pairs.iter().map(|&[s, t]| (s, t)).collect();
                let check = cross_check(setup, times, &pairs, &partners)?;
                report.record("oracle_max_deviation", None, None, check.max_deviation(), tol.oracle);
                report.record("oracle_dense_symmetry", None, None, check.dense_symmetry_defect, tol.symmetry);
                report.oracle = Some(check);
            }
            Suite::Symmetry => {
                let mut worst: f64 = 0.0;
                for _ in 0..r.config.symmetry_pairs {
                    let a = random_admissible(&setup.grid, op.singular_set(), &mut rng)?;
                    let b = random_admissible(&setup.grid, op.singular_set(), &mut rng)?;
                    worst = worst.max(symmetry_defect(op, a.state(), b.state())?);
                }
                worst = worst.max(symmetry_defect(op, phi, phi)?);
                report.record(
                    format!("symmetry[{} pairs]", r.config.symmetry_pairs),
                    None,
                    None,
                    worst,
                    tol.symmetry,
                );
            }
            Suite::ClosedForm => {
                let cf = r.closed_form.ok_or_else(|| Error::Config("closed_form suite without a closed form".into()))?;
                let z = op.singular_set();
                let generic = op.apply(phi)?;
                let displayed = cf.apply(&setup.grid, z, phi)?;
                let rel = generic.sub(&displayed)?.norm() / generic.norm();
                report.record(format!("closed_form[{}]", cf.name()), None, None, rel, tol.closed_form);
                let inv = op.inverse_derivative();
                let pointwise = setup
                    .grid
                    .frequencies()
                    .iter()
                    .zip(inv.values())
                    .zip(inv.mask())
                    .filter(|(_, &masked)| !masked)
                    .map(|((&k, v), _)| {
                        let c = cf.inverse_derivative(k);
                        (v.re - c).abs() / c.abs().max(f64::MIN_POSITIVE)
                    })
                    .fold(0.0, f64::max);
                report.record(
                    format!("closed_form_pointwise[{}]", cf.name()),
                    None,
                    None,
                    pointwise,
                    tol.closed_form,
                );
                report.closed_form = Some(cf.display().to_string());
            }
        }
    }
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

#[derive(Serialize)]
struct Versions {
    weyl_lab: &'static str,
    config_schema: u32,
    report_schema: u32,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    versions: Versions,
    config: &'a RunConfig,
    seed: u64,
    jobs: usize,
    passed: bool,
    total_wall_time_ms: f64,
    scenarios: &'a [ResidualReport],
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Residuals and tolerances in scientific notation; `NaN` for aborted rows.
fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn plain(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Column order of the residual table; part of the report schema.
pub const RESIDUAL_COLUMNS: [&str; 8] = ["scenario_id", "residual", "value", "tolerance", "verdict", "n", "length", "t"];
pub const CONVERGENCE_COLUMNS: [&str; 9] =
    ["scenario_id", "level", "n", "length", "t", "residual", "ratio", "tolerance", "verdict"];

/// Writes one row per scenario × residual, after a header row.
pub fn write_residuals_csv(path: &Path, reports: &[ResidualReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.entries.iter().map(move |e| {
            vec![
                r.scenario_id.clone(),
                e.name.clone(),
                sci(e.value),
                sci(e.tolerance),
                verdict(e.pass).into(),
                e.n.to_string(),
                plain(e.length),
                opt(e.t, plain),
            ]
        })
    });
    write_csv(path, &RESIDUAL_COLUMNS, rows)
}

/// Writes the refinement studies: one row per level, after a header row.
pub fn write_convergence_csv(path: &Path, reports: &[ResidualReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.convergence.iter().flat_map(move |study| {
            study.levels.iter().enumerate().map(move |(i, l)| {
                vec![
                    r.scenario_id.clone(),
                    i.to_string(),
                    l.n.to_string(),
                    plain(l.length),
                    plain(study.t),
                    sci(l.residual),
                    opt(l.ratio, sci),
                    sci(l.tolerance),
                    verdict(l.passed()).into(),
                ]
            })
        })
    });
    write_csv(path, &CONVERGENCE_COLUMNS, rows)
}

/// Validates the configuration, runs every scenario on a pool of `jobs`
/// threads and writes the report files.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let resolved = config.resolve()?;
    let seed = opts.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let jobs = opts.jobs.or(config.jobs).unwrap_or_else(rayon::current_num_threads);
    if jobs == 0 {
        return Err(Error::Config("--jobs must be positive".into()));
    }
    let output_dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    let results: Vec<(String, Result<ResidualReport>)> = pool.install(|| {
        resolved
            .par_iter()
            .map(|r| (r.scenario.id.clone(), run_scenario(r, scenario_seed(seed, &r.scenario.id))))
            .collect()
    });

    let by_id: BTreeMap<String, &ResolvedScenario> = resolved.iter().map(|r| (r.scenario.id.clone(), r)).collect();
    let mut reports = Vec::with_capacity(results.len());
    for (id, result) in results {
        match result {
            Ok(report) => reports.push(report),
            Err(e @ Error::ResourceCap(_)) => return Err(e),
            Err(e) => {
                let r = by_id[&id];
                let mut report = ResidualReport::new(&r.scenario, &r.setup);
                report.warnings.push(format!("scenario aborted: {e}"));
                report.record("error", None, None, f64::NAN, 0.0);
                reports.push(report);
            }
        }
    }
    reports.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    let passed = reports.iter().all(ResidualReport::passed);

    fs::create_dir_all(&output_dir).map_err(|e| io_error(&output_dir, e))?;
    write_residuals_csv(&output_dir.join(RESIDUALS_FILE), &reports)?;
    write_convergence_csv(&output_dir.join(CONVERGENCE_FILE), &reports)?;
    let json = JsonReport {
        versions: Versions {
            weyl_lab: env!("CARGO_PKG_VERSION"),
            config_schema: CONFIG_VERSION,
            report_schema: REPORT_VERSION,
        },
        config,
        seed,
        jobs,
        passed,
        total_wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        scenarios: &reports,
    };
    let path = output_dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&json).map_err(|e| io_error(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;

    Ok(RunOutcome {
        reports,
        output_dir,
        passed,
    })
}
