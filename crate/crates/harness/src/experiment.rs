//! Loading a configured problem, resolving `β` and `F_ref`, running the
//! schedules and writing the report files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use afba::dataio::{parse_libsvm, split, SparseDataset};
use afba::linalg::POWER_SEED;
use afba::momentum::{check_momentum_condition, MIN_HORIZON};
use afba::solver::{fixed_point_residual, AccuracyMonitor};
use afba::svm::SvmAccuracy;
use afba::synthetic::{LassoProblem, SeparableQuadratic};
use afba::{solve, ConditionReport, MomentumSchedule, Problem, SolveConfig, SolveOutput, SvmProblem, TraceReference};
use ndarray::Array1;
use sha2::{Digest, Sha256};

use crate::config::{BetaPolicy, ExperimentConfig, FRefPolicy, ProblemSpec};
use crate::error::{HarnessError, Result};
use crate::report::{self, slug};

pub enum LoadedProblem {
    Svm { svm: SvmProblem, test: Option<SparseDataset> },
    Lasso(LassoProblem),
    Quadratic(SeparableQuadratic),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn read_dataset(path: &Path) -> Result<(SparseDataset, InputFile)> {
    let bytes = std::fs::read(path).map_err(|source| HarnessError::Read { path: path.into(), source })?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let ds = parse_libsvm(bytes.as_slice()).map_err(|source| HarnessError::Data { path: path.into(), source })?;
    Ok((ds, InputFile { path: path.into(), sha256 }))
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub schedules: Vec<MomentumSchedule>,
    pub problem: LoadedProblem,
    pub inputs: Vec<InputFile>,
}

#[derive(Debug, Clone)]
pub struct ResolvedReference {
    pub f_ref: f64,
    /// Minimizer estimate; only kept for synthetic problems.
    pub x_ref: Option<Array1<f64>>,
    pub policy: FRefPolicy,
    /// `‖T(x) − x‖` at the reference point.
    pub residual: f64,
}

pub struct ScheduleRun {
    pub schedule: MomentumSchedule,
    pub output: SolveOutput,
    pub condition: ConditionReport,
    /// `‖T(x^K) − x^K‖` at the returned iterate.
    pub residual: f64,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let schedules = config.parsed_schedules()?;
        let mut inputs = Vec::new();
        let problem = match &config.problem {
            ProblemSpec::Svm(s) => {
                let (train, test) = if let Some(path) = &s.data {
                    let (ds, input) = read_dataset(path)?;
                    inputs.push(input);
                    let train_count = s.train_count.expect("validated");
                    let (train, test) =
                        split(&ds, train_count, s.split_seed).map_err(|source| HarnessError::Data { path: path.clone(), source })?;
                    (train, Some(test))
                } else {
                    let (train, input) = read_dataset(s.train.as_deref().expect("validated"))?;
                    inputs.push(input);
                    let test = match &s.test {
                        Some(path) => {
                            let (ds, input) = read_dataset(path)?;
                            inputs.push(input);
                            Some(ds)
                        }
                        None => None,
                    };
                    (train, test)
                };
                LoadedProblem::Svm { svm: SvmProblem::build(&train, s.gamma, s.lambda)?, test }
            }
            ProblemSpec::Lasso(l) => LoadedProblem::Lasso(LassoProblem::random(l.rows, l.cols, l.reg, l.seed)),
            ProblemSpec::Quadratic(q) => LoadedProblem::Quadratic(SeparableQuadratic::random(q.dim, q.reg, q.seed)),
        };
        Ok(Self { config, schedules, problem, inputs })
    }

    pub fn problem(&self) -> &dyn Problem {
        match &self.problem {
            LoadedProblem::Svm { svm, .. } => svm,
            LoadedProblem::Lasso(p) => p,
            LoadedProblem::Quadratic(p) => p,
        }
    }

    pub fn beta(&self) -> f64 {
        match self.config.beta {
            BetaPolicy::Auto => 1.0 / self.problem().lipschitz(),
            BetaPolicy::Explicit(b) => b,
        }
    }

    fn solve_config(&self, beta: f64, schedule: MomentumSchedule, max_iters: u64, trace_every: u64) -> SolveConfig {
        SolveConfig::new(beta, schedule, max_iters, self.problem().dimension()).with_trace_every(trace_every)
    }

    pub fn resolve_reference(&self, beta: f64) -> Result<ResolvedReference> {
        let policy = self.config.f_ref_policy();
        let p = self.problem();
        let x = match (policy, &self.problem) {
            (FRefPolicy::Exact, LoadedProblem::Quadratic(q)) => q.minimizer(),
            (FRefPolicy::Exact, _) => {
                return Err(HarnessError::Config("f_ref = \"exact\" needs the quadratic problem".into()));
            }
            (FRefPolicy::Fista(n) | FRefPolicy::Fba(n), _) => {
                let schedule = match policy {
                    FRefPolicy::Fista(_) => MomentumSchedule::classic_nesterov(),
                    _ => MomentumSchedule::no_momentum(),
                };
                log::info!("reference run: {policy}");
                let cfg = self.solve_config(beta, schedule, n, n);
                solve(p, &cfg, &TraceReference::default(), None)?.solution
            }
        };
        let residual = fixed_point_residual(p, beta, &x)?;
        let f_ref = p.objective(&x);
        let x_ref = match self.problem {
            LoadedProblem::Svm { .. } => None,
            _ => Some(x),
        };
        Ok(ResolvedReference { f_ref, x_ref, policy, residual })
    }

    fn accuracy_monitor(&self) -> Result<Option<SvmAccuracy<'_>>> {
        match &self.problem {
            LoadedProblem::Svm { svm, test } => Ok(Some(SvmAccuracy::new(svm, test.as_ref())?)),
            _ => Ok(None),
        }
    }

    /// Solves every schedule (in parallel when built with `parallel`) and
    /// returns the runs in configuration order.
    pub fn run_schedules(&self, beta: f64, reference: &ResolvedReference) -> Result<Vec<ScheduleRun>> {
        let trace_ref = TraceReference { f_ref: Some(reference.f_ref), x_ref: reference.x_ref.clone() };
        let monitor = self.accuracy_monitor()?;
        let horizon = self.config.max_iters.max(MIN_HORIZON);
        let run_one = |schedule: &MomentumSchedule| -> Result<ScheduleRun> {
            if !schedule.rate_theory_applies() {
                log::warn!("{schedule}: omega = 1 with a >= 1/2 lies outside the convergence theory; running anyway");
            }
            let cfg = self.solve_config(beta, schedule.clone(), self.config.max_iters, self.config.trace_every);
            let output = solve(self.problem(), &cfg, &trace_ref, monitor.as_ref().map(|m| m as &dyn AccuracyMonitor))?;
            let residual = fixed_point_residual(self.problem(), beta, &output.solution)?;
            let condition = check_momentum_condition(schedule, horizon);
            Ok(ScheduleRun { schedule: schedule.clone(), output, condition, residual })
        };
        #[cfg(feature = "parallel")]
        let runs: Vec<Result<ScheduleRun>> = {
            use rayon::prelude::*;
            self.schedules.par_iter().map(run_one).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let runs: Vec<Result<ScheduleRun>> = self.schedules.iter().map(run_one).collect();
        runs.into_iter().collect()
    }
}

/// Relative slack allowed between `F_ref` and the best final objective.
pub const F_REF_SLACK: f64 = 1e-6;

pub fn check_reference(f_ref: f64, runs: &[ScheduleRun]) -> Result<()> {
    let best = runs
        .iter()
        .filter_map(|r| r.output.trace.last().map(|row| (row.fv, &r.output.trace.schedule_id)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((fv, id)) if f_ref > fv + F_REF_SLACK * (1.0 + f_ref.abs()) => {
            Err(HarnessError::ReferenceNotConverged { f_ref, best: fv, schedule: id.clone() })
        }
        _ => Ok(()),
    }
}

pub struct CompareOutcome {
    pub experiment: Experiment,
    pub beta: f64,
    pub reference: ResolvedReference,
    pub runs: Vec<ScheduleRun>,
}

impl CompareOutcome {
    pub fn trace_file(&self, run: &ScheduleRun) -> PathBuf {
        self.experiment.config.output_dir.join(format!("trace_{}.csv", slug(&run.output.trace.schedule_id)))
    }

    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let exp = &self.experiment;
        let mut out = vec![("version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
        out.extend(exp.config.manifest_entries());
        let mut put = |k: String, v: String| out.push((k, v));
        put("resolved.lipschitz".into(), exp.problem().lipschitz().to_string());
        put("resolved.beta".into(), self.beta.to_string());
        put("resolved.f_ref".into(), self.reference.f_ref.to_string());
        put("resolved.f_ref_policy".into(), self.reference.policy.to_string());
        put("resolved.f_ref_residual".into(), self.reference.residual.to_string());
        put("resolved.dimension".into(), exp.problem().dimension().to_string());
        put("seed.power_iteration".into(), POWER_SEED.to_string());
        put("initialization".into(), "x0=x1=0".into());
        for (i, input) in exp.inputs.iter().enumerate() {
            put(format!("dataset.{i}.path"), input.path.display().to_string());
            put(format!("dataset.{i}.sha256"), input.sha256.clone());
        }
        for run in &self.runs {
            let key = slug(&run.output.trace.schedule_id);
            put(format!("schedule.{key}.id"), run.output.trace.schedule_id.clone());
            put(format!("schedule.{key}.iterations"), run.output.iterations.to_string());
            put(format!("schedule.{key}.final_residual"), run.residual.to_string());
            put(format!("schedule.{key}.condition_all_hold"), run.condition.holds().to_string());
            put(format!("schedule.{key}.rate_theory_applies"), run.schedule.rate_theory_applies().to_string());
            let file = self.trace_file(run);
            put(format!("schedule.{key}.trace"), file.file_name().unwrap_or_default().to_string_lossy().into_owned());
        }
        out
    }

    pub fn traces(&self) -> Vec<&afba::SolverTrace> {
        self.runs.iter().map(|r| &r.output.trace).collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| HarnessError::Write { path: path.into(), source })
}

fn write_with<F, E>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::result::Result<(), E>,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    let mut w = create(path)?;
    f(&mut w).map_err(|e| HarnessError::Write { path: path.into(), source: std::io::Error::other(e) })?;
    w.flush().map_err(|source| HarnessError::Write { path: path.into(), source })
}

/// Runs every schedule and writes `trace_<id>.csv`, `summary.csv` and
/// `manifest.txt` under the output directory.
pub fn run_compare(config: ExperimentConfig) -> Result<CompareOutcome> {
    let experiment = Experiment::prepare(config)?;
    let beta = experiment.beta();
    let reference = experiment.resolve_reference(beta)?;
    let runs = experiment.run_schedules(beta, &reference)?;
    check_reference(reference.f_ref, &runs)?;
    let outcome = CompareOutcome { experiment, beta, reference, runs };

    let dir = &outcome.experiment.config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write { path: dir.clone(), source })?;
    for run in &outcome.runs {
        write_with(&outcome.trace_file(run), |w| run.output.trace.write_csv(w))?;
    }
    let thresholds = &outcome.experiment.config.accuracy_thresholds;
    write_with(&dir.join("summary.csv"), |w| report::write_summary_csv(w, &outcome.traces(), thresholds))?;
    write_with(&dir.join("manifest.txt"), |w| report::write_key_values(w, &outcome.manifest_entries()))?;
    Ok(outcome)
}

/// `run_compare` with per-iteration accuracy, plus `table.csv` of first
/// crossings of each accuracy threshold.
pub fn run_table(mut config: ExperimentConfig) -> Result<CompareOutcome> {
    if !matches!(config.problem, ProblemSpec::Svm(_)) {
        return Err(HarnessError::Config("table mode needs an svm problem".into()));
    }
    if config.accuracy_thresholds.is_empty() {
        return Err(HarnessError::Config("table mode needs accuracy_thresholds".into()));
    }
    config.trace_every = 1;
    let outcome = run_compare(config)?;
    let cfg = &outcome.experiment.config;
    write_with(&cfg.output_dir.join("table.csv"), |w| {
        report::write_table_csv(w, &outcome.traces(), &cfg.accuracy_thresholds)
    })?;
    Ok(outcome)
}

/// `run_compare` plus `rates_<id>.txt` (and `rates_<id>.csv` with the scaled
/// sequences when the schedule has momentum).
pub fn run_rates(config: ExperimentConfig) -> Result<(CompareOutcome, Vec<report::RateReport>)> {
    let outcome = run_compare(config)?;
    let dir = &outcome.experiment.config.output_dir;
    let mut reports = Vec::new();
    for run in &outcome.runs {
        let trace = &run.output.trace;
        let rep = report::rate_report(trace, &run.schedule);
        let key = slug(&trace.schedule_id);
        write_with(&dir.join(format!("rates_{key}.txt")), |w| report::write_key_values(w, &rep.to_key_values()))?;
        if !run.schedule.is_momentum_free() {
            write_with(&dir.join(format!("rates_{key}.csv")), |w| report::write_scaled_csv(w, trace))?;
        }
        reports.push(rep);
    }
    Ok((outcome, reports))
}
