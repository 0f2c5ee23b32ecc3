//! Acceptance suite: one line per criterion, `PASS`, `FAIL` or `SKIP`.
//!
//! Built with `harness = false` so the lines are printed under a plain
//! `cargo test`. Exits non-zero when any criterion fails.
//!
//! Criterion 10 needs the Splice data: `splice` (+ optional `splice.t`) in
//! `$AFBA_DATA_DIR` or `<workspace>/data`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use afba::dataio::{parse_libsvm_str, Label, Sample, SparseDataset};
use afba::linalg::spectral_norm;
use afba::momentum::{check_momentum_condition, super_linear_divergence};
use afba::prox::{prox_l1, prox_l1_bias, soft_threshold};
use afba::solver::{fixed_point_residual, Problem, SolveOutput};
use afba::synthetic::LassoProblem;
use afba::{solve, MomentumSchedule, SolveConfig, SvmProblem, TraceReference};
use afba_harness::config::{ExperimentConfig, FRefPolicy, ProblemSpec, SvmSpec};
use afba_harness::report::iterations_to_accuracy;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

// ---------------------------------------------------------------- oracles

/// Minimizes `μ|x| + ½(x − t)²` over a grid of step 1e-4 covering `[t−μ−1, t+μ+1]`.
fn grid_prox(t: f64, mu: f64) -> f64 {
    let lo = t - mu - 1.0;
    let steps = ((2.0 * (mu + 1.0)) / 1e-4).ceil() as usize;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let x = lo + i as f64 * 1e-4;
        let v = mu * x.abs() + 0.5 * (x - t) * (x - t);
        if v < best.0 {
            best = (v, x);
        }
    }
    // The grid may straddle zero; zero is the kink and always a candidate.
    if mu * 0.0 + 0.5 * t * t <= best.0 {
        return 0.0;
    }
    best.1
}

fn fd_gradient(p: &dyn Problem, x: &Array1<f64>) -> Array1<f64> {
    let h = 1e-6 * (1.0 + x.dot(x).sqrt());
    Array1::from_shape_fn(x.len(), |i| {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        (p.smooth_value(&up) - p.smooth_value(&down)) / (2.0 * h)
    })
}

fn svd_norm(a: &Array2<f64>) -> f64 {
    let (r, c) = a.dim();
    let row_major: Vec<f64> = a.iter().copied().collect();
    nalgebra::DMatrix::from_row_slice(r, c, &row_major).singular_values().max()
}

fn ulps(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn deciles(values: &[f64]) -> (f64, f64) {
    let w = (values.len() / 10).max(1);
    (median(&values[..w]), median(&values[values.len() - w..]))
}

fn random_blobs(m: usize, d: usize, seed: u64) -> SparseDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..m)
        .map(|_| {
            let positive = rng.gen_bool(0.5);
            let centre = if positive { 0.4 } else { -0.4 };
            Sample {
                label: if positive { Label::Positive } else { Label::Negative },
                features: (1..=d as u32).map(|j| (j, centre + rng.gen_range(-1.0..1.0))).collect(),
            }
        })
        .collect();
    SparseDataset { samples, num_features: d }
}

// ---------------------------------------------------------------- LASSO fixture

const LASSO_SEED: u64 = 2;
const LASSO_REFERENCE_ITERS: u64 = 1_000_000;

struct LassoFixture {
    problem: LassoProblem,
    beta: f64,
    x_star: Array1<f64>,
    f_star: f64,
    setup: Duration,
}

impl LassoFixture {
    fn new() -> Self {
        let start = Instant::now();
        let problem = LassoProblem::random(20, 50, 0.1, LASSO_SEED);
        let beta = 1.0 / problem.lipschitz();
        let cfg = SolveConfig::new(beta, MomentumSchedule::no_momentum(), LASSO_REFERENCE_ITERS, 50)
            .with_trace_every(LASSO_REFERENCE_ITERS);
        let x_star = solve(&problem, &cfg, &TraceReference::default(), None).expect("reference run").solution;
        let f_star = problem.objective(&x_star);
        Self { problem, beta, x_star, f_star, setup: start.elapsed() }
    }

    fn run(&self, schedule: MomentumSchedule, iters: u64) -> SolveOutput {
        let cfg = SolveConfig::new(self.beta, schedule, iters, 50);
        let reference = TraceReference::minimizer(self.f_star, self.x_star.clone());
        solve(&self.problem, &cfg, &reference, None).expect("lasso solve")
    }

    fn residual(&self, x: &Array1<f64>) -> f64 {
        fixed_point_residual(&self.problem, self.beta, x).unwrap()
    }

    /// Plain re-implementation of the accelerated loop on the LASSO, returning
    /// `(F(x^k), ε_k)` for `k = 1..=iters`.
    fn oracle_loop(&self, t: impl Fn(u64) -> f64, iters: u64) -> Vec<(f64, f64)> {
        let (a, c, reg, beta) = (&self.problem.a, &self.problem.c, self.problem.reg, self.beta);
        let objective = |x: &Array1<f64>| {
            let r = a.dot(x) - c;
            0.5 * r.dot(&r) + reg * x.iter().map(|v| v.abs()).sum::<f64>()
        };
        let n = a.ncols();
        let (mut x_prev, mut x) = (Array1::<f64>::zeros(n), Array1::<f64>::zeros(n));
        let mut out = Vec::with_capacity(iters as usize);
        for k in 1..=iters {
            let theta = (t(k - 1) - 1.0) / t(k);
            let y = &x + &((&x - &x_prev) * theta);
            let eta = objective(&x) - self.f_star;
            let z = &y * t(k) + &x * (1.0 - t(k));
            let dz = &z - &self.x_star;
            out.push((objective(&x), 2.0 * beta * t(k - 1) * t(k - 1) * eta + dz.dot(&dz)));
            let v = &y - &(a.t().dot(&(a.dot(&y) - c)) * beta);
            let next = v.mapv(|u| (u.abs() - beta * reg).max(0.0) * u.signum());
            x_prev = std::mem::replace(&mut x, next);
        }
        out
    }
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = rng.gen_range(-10.0..10.0);
        let mu = rng.gen_range(0.0..5.0);
        worst = worst.max((soft_threshold(t, mu).unwrap() - grid_prox(t, mu)).abs());
    }
    for case in 0..200 {
        let len = rng.gen_range(1..8);
        let v = Array1::from_shape_fn(len, |_| rng.gen_range(-10.0..10.0));
        let mu = rng.gen_range(0.0..5.0);
        let with_bias = case % 2 == 1;
        let got = if with_bias { prox_l1_bias(v.view(), mu) } else { prox_l1(v.view(), mu) }.unwrap();
        for i in 0..len {
            let unpenalized = with_bias && i == len - 1;
            let expect = if unpenalized { grid_prox(v[i], 0.0) } else { grid_prox(v[i], mu) };
            worst = worst.max((got[i] - expect).abs());
        }
    }
    check(worst <= 1e-3, format!("1000 scalar + 200 vector cases, max |prox − grid| = {worst:.2e} (tol 1e-3)"))
}

fn criterion_2() -> Verdict {
    let svm = SvmProblem::build(&random_blobs(30, 5, 202), 0.5, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let w = Array1::from_shape_fn(svm.dimension(), |_| rng.gen_range(-0.5..0.5));
        let fd = fd_gradient(&svm, &w);
        let diff = &svm.smooth_grad(&w) - &fd;
        worst = worst.max(diff.dot(&diff).sqrt() / fd.dot(&fd).sqrt().max(1e-12));
    }
    check(worst <= 1e-5, format!("m=30, 20 probes, max relative error {worst:.2e} (tol 1e-5)"))
}

fn criterion_3() -> Verdict {
    let svm = SvmProblem::build(&random_blobs(30, 5, 301), 0.5, 0.05).unwrap();
    let b_norm = svd_norm(&svm.design_matrix());
    let bound = 2.0 * b_norm * b_norm;
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let mut worst_ratio = 0.0f64;
    for _ in 0..1000 {
        let u = Array1::from_shape_fn(svm.dimension(), |_| rng.gen_range(-2.0..2.0));
        let v = Array1::from_shape_fn(svm.dimension(), |_| rng.gen_range(-2.0..2.0));
        let dg = svm.smooth_grad(&u) - svm.smooth_grad(&v);
        let dx = &u - &v;
        worst_ratio = worst_ratio.max(dg.dot(&dg).sqrt() / dx.dot(&dx).sqrt());
    }
    let mut worst_norm = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(310 + seed);
        let a = Array2::from_shape_fn((15, 20), |_| rng.gen_range(-1.0..1.0));
        let oracle = svd_norm(&a);
        worst_norm = worst_norm.max((spectral_norm(&a, 1e-12).unwrap() - oracle).abs() / oracle);
    }
    let l_ok = svm.lipschitz() >= bound;
    check(
        worst_ratio <= bound && worst_norm <= 1e-6 && l_ok,
        format!(
            "max gradient ratio {worst_ratio:.4} ≤ 2‖B‖² = {bound:.4}; L = {:.4}; spectral norm vs SVD max rel err {worst_norm:.1e} (tol 1e-6)",
            svm.lipschitz()
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut worst = 0u64;
    let mut worst_closed = 0.0f64;
    for alpha in [3.01, 4.0, 10.0] {
        let cd = MomentumSchedule::chambolle_dossal(alpha).unwrap();
        let gn = MomentumSchedule::generalized_nesterov(1.0, 1.0 / (alpha - 1.0), 1.0).unwrap();
        for k in 1..=10_000u64 {
            let (a, b) = (cd.theta(k).unwrap(), gn.theta(k).unwrap());
            worst = worst.max(ulps(a, b));
            let closed = (k as f64 - 1.0) / (k as f64 + alpha - 1.0);
            worst_closed = worst_closed.max((a - closed).abs());
        }
    }
    check(
        worst <= 2 && worst_closed <= 1e-12,
        format!("α ∈ {{3.01, 4, 10}}, k ≤ 1e4: max {worst} ulps CD vs GN; max |θ − (k−1)/(k+α−1)| = {worst_closed:.1e}"),
    )
}

fn criterion_5(fx: &LassoFixture) -> Verdict {
    let fista = MomentumSchedule::classic_nesterov();
    let mut worst_identity = 0.0f64;
    let mut growth_ok = true;
    let mut t_oracle = 1.0f64;
    let mut worst_oracle = 0.0f64;
    for k in 1..=1_000_000u64 {
        let (prev, cur) = (fista.t_value(k - 1), fista.t_value(k));
        worst_identity = worst_identity.max((cur * (cur - 1.0) - prev * prev).abs() / (prev * prev));
        growth_ok &= cur > (k as f64 + 1.0) / 2.0;
        t_oracle = 0.5 * (1.0 + (1.0 + 4.0 * t_oracle * t_oracle).sqrt());
        worst_oracle = worst_oracle.max((cur - t_oracle).abs() / t_oracle);
    }

    let out = fx.run(fista.clone(), 10_000);
    let eps_1 = out.trace.rows[0].epsilon.unwrap();
    let mut violations = 0usize;
    let mut worst_slack = f64::INFINITY;
    let mut t_prev = 1.0f64;
    for row in out.trace.rows.iter() {
        if row.k >= 2 {
            let bound = eps_1 / (2.0 * fx.beta * t_prev * t_prev);
            let eta = row.eta.unwrap();
            if eta > bound {
                violations += 1;
            }
            worst_slack = worst_slack.min(bound - eta);
        }
        t_prev = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
    }
    let residual = fx.residual(&out.solution);
    check(
        worst_identity <= 1e-10 && growth_ok && worst_oracle <= 1e-12 && violations == 0 && residual < 1e-6,
        format!(
            "identity max rel {worst_identity:.1e}, t_k > (k+1)/2 {}; bound violations {violations}/9999 (min slack {worst_slack:.2e}); residual {residual:.1e}",
            if growth_ok { "holds" } else { "FAILS" }
        ),
    )
}

const RATE_SCHEDULES: [&str; 3] = ["gn:0.5,1,1", "gn:0.75,0.3,1", "gn:1,0.4,1"];
const RATE_ITERS: u64 = 20_000;

struct RateRuns {
    runs: Vec<(MomentumSchedule, SolveOutput)>,
    elapsed: Duration,
}

fn rate_runs(fx: &LassoFixture) -> RateRuns {
    let start = Instant::now();
    let runs = RATE_SCHEDULES
        .iter()
        .map(|s| {
            let schedule: MomentumSchedule = s.parse().unwrap();
            let out = fx.run(schedule.clone(), RATE_ITERS);
            (schedule, out)
        })
        .collect();
    RateRuns { runs, elapsed: start.elapsed() }
}

fn criterion_6(fx: &LassoFixture, rr: &RateRuns) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (schedule, out) in &rr.runs {
        let report = check_momentum_condition(schedule, RATE_ITERS);
        let k_obs = report.k_observed.unwrap_or(1);
        let eps: Vec<f64> = out.trace.rows.iter().map(|r| r.epsilon.unwrap()).collect();
        let slack = 1e-9 * (1.0 + eps[0]);
        let rises = eps
            .windows(2)
            .enumerate()
            .filter(|(i, w)| (*i as u64 + 1) > k_obs && w[1] > w[0] + slack)
            .count();

        let oracle = fx.oracle_loop(|k| schedule.t_value(k), 2000);
        let agree = oracle
            .iter()
            .zip(&out.trace.rows)
            .map(|(&(fv, e), row)| ((fv - row.fv).abs() / (1.0 + fv.abs())).max((e - row.epsilon.unwrap()).abs() / (1.0 + e.abs())))
            .fold(0.0, f64::max);
        let residual = fx.residual(&out.solution);
        ok &= report.holds() && rises == 0 && agree <= 1e-8 && residual < 1e-6;
        parts.push(format!(
            "{}: K_obs={k_obs} rises={rises} oracle-loop agreement {agree:.1e} residual {residual:.1e}",
            schedule.id()
        ));
    }
    check(ok, parts.join("; "))
}

fn criterion_7(rr: &RateRuns) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (schedule, out) in &rr.runs {
        let rows: Vec<_> = out.trace.rows.iter().filter(|r| r.k <= RATE_ITERS).collect();
        let fv: Vec<f64> = rows.iter().map(|r| r.scaled_fv.unwrap()).collect();
        let dci: Vec<f64> = rows.iter().map(|r| r.scaled_dci.unwrap()).collect();
        let (f_first, f_last) = deciles(&fv);
        let (d_first, d_last) = deciles(&dci);
        ok &= f_last <= 0.5 * f_first && d_last <= 0.5 * d_first;
        parts.push(format!(
            "{}: t²η {f_first:.2e}→{f_last:.2e}, t·dci {d_first:.2e}→{d_last:.2e}",
            schedule.id()
        ));
    }
    check(ok, parts.join("; "))
}

fn criterion_8() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (omega, a, b) in [(1.5, 1.0, 0.0), (2.0, 1.0, 0.0)] {
        let d = super_linear_divergence(omega, a, b, 100_000).unwrap();
        let negative_tail = d[99..].iter().all(|&v| v < 0.0);
        let last = d[99_999];
        let t = |k: f64| a * k.powf(omega) + b;
        let k = 100_000.0;
        let oracle = t(k - 1.0) * t(k - 1.0) - t(k) * (t(k) - 1.0);
        let close = (last - oracle).abs() <= 1e-9 * oracle.abs();
        let poly_ok = omega != 2.0 || {
            (1..=1000u64).all(|k| {
                let kf = k as f64;
                d[k as usize - 1] == -4.0 * kf.powi(3) + 7.0 * kf * kf - 4.0 * kf + 1.0
            })
        };
        ok &= negative_tail && last < -1e3 && close && poly_ok;
        parts.push(format!("ω={omega}: d_k<0 ∀k≥100 {negative_tail}, d_1e5={last:.3e}"));
    }
    check(ok, parts.join("; "))
}

fn criterion_9() -> Verdict {
    let horizon = 10_000;
    let verdict = |s: &str| check_momentum_condition(&s.parse().unwrap(), horizon);
    let a = verdict("gn:0.5,1,1");
    let b = verdict("gn:1,0.4,1");
    let c = verdict("gn:1,0.6,1");
    let d = verdict("fista");
    check(
        a.holds() && b.holds() && !c.strict_gap.holds && !d.strict_gap.holds,
        format!(
            "gn(0.5,1,1) {}, gn(1,0.4,1) {}, gn(1,0.6,1) item ii {}, fista item ii {}",
            if a.holds() { "passes" } else { "FAILS" },
            if b.holds() { "passes" } else { "FAILS" },
            if c.strict_gap.holds { "PASSES" } else { "fails" },
            if d.strict_gap.holds { "PASSES" } else { "fails" },
        ),
    )
}

fn splice_files() -> Option<(PathBuf, Option<PathBuf>)> {
    let dir = std::env::var_os("AFBA_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let train = dir.join("splice");
    let test = dir.join("splice.t");
    train.is_file().then(|| (train, test.is_file().then_some(test)))
}

const SPLICE_SCHEDULES: [&str; 4] = ["fba", "fista", "cd:3.01", "gn:1,1/2.01,5"];

fn splice_config(train: &Path, test: Option<&Path>, out: &Path) -> ExperimentConfig {
    let svm = match test {
        Some(test) => SvmSpec {
            data: None,
            train_count: None,
            split_seed: 0,
            train: Some(train.into()),
            test: Some(test.into()),
            gamma: 2f64.powi(-5),
            lambda: 2f64.powi(-7),
        },
        None => SvmSpec {
            data: Some(train.into()),
            train_count: Some(1000),
            split_seed: 0,
            train: None,
            test: None,
            gamma: 2f64.powi(-5),
            lambda: 2f64.powi(-7),
        },
    };
    ExperimentConfig {
        problem: ProblemSpec::Svm(svm),
        schedules: SPLICE_SCHEDULES.iter().map(|s| s.to_string()).collect(),
        beta: Default::default(),
        max_iters: 5000,
        trace_every: 1,
        f_ref: Some(FRefPolicy::Fista(20_000)),
        output_dir: out.into(),
        accuracy_thresholds: vec![0.8],
    }
}

fn criterion_10(out: &Path) -> Verdict {
    let Some((train, test)) = splice_files() else {
        return Skip("Splice data not found (set AFBA_DATA_DIR or place `splice` in data/)".into());
    };
    let outcome = match afba_harness::run_compare(splice_config(&train, test.as_deref(), out)) {
        Ok(o) => o,
        Err(e) => return Fail(format!("run failed: {e}")),
    };
    let fba = &outcome.runs[0].output.trace;
    let fba_k = iterations_to_accuracy(fba, &[0.8])[0];
    let fba_nofv = fba.last().and_then(|r| r.nofv).unwrap_or(f64::NAN);
    let mut ok = outcome.runs.iter().all(|r| r.residual < 1e-6);
    let mut parts = vec![format!("fba k@0.8={fba_k:?} nofv={fba_nofv:.2e}")];
    for run in &outcome.runs[1..] {
        let trace = &run.output.trace;
        let k = iterations_to_accuracy(trace, &[0.8])[0];
        let nofv = trace.last().and_then(|r| r.nofv).unwrap_or(f64::NAN);
        let faster = match (k, fba_k) {
            (Some(k), Some(f)) => k < f,
            (Some(_), None) => true,
            _ => false,
        };
        ok &= faster && nofv <= 1e-2 * fba_nofv;
        parts.push(format!("{} k@0.8={k:?} nofv={nofv:.2e}", trace.schedule_id));
    }
    parts.push(format!("F_ref={}", outcome.reference.f_ref));
    check(ok, parts.join("; "))
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_11(first_run: &Path, scratch: &Path) -> Verdict {
    if let Some((train, test)) = splice_files() {
        let second = scratch.join("splice_again");
        if let Err(e) = afba_harness::run_compare(splice_config(&train, test.as_deref(), &second)) {
            return Fail(format!("second run failed: {e}"));
        }
        let (a, b) = (read_csvs(first_run), read_csvs(&second));
        return check(!a.is_empty() && a == b, format!("{} CSV files compared byte for byte", a.len()));
    }
    // Without Splice, exercise the same pipeline on a synthetic SVM.
    let data = scratch.join("surrogate.txt");
    let mut buf = Vec::new();
    random_blobs(400, 60, 1101).write_libsvm(&mut buf).unwrap();
    std::fs::write(&data, buf).unwrap();
    let run = |name: &str| {
        let mut cfg = splice_config(&data, None, &scratch.join(name));
        if let ProblemSpec::Svm(s) = &mut cfg.problem {
            s.train_count = Some(150);
        }
        cfg.max_iters = 500;
        cfg.f_ref = Some(FRefPolicy::Fista(5000));
        afba_harness::run_compare(cfg).map(|_| read_csvs(&scratch.join(name)))
    };
    match (run("surrogate_a"), run("surrogate_b")) {
        (Ok(a), Ok(b)) => {
            let same = !a.is_empty() && a == b;
            let detail = format!("surrogate synthetic SVM: {} CSV files byte-identical: {same}", a.len());
            if same {
                Skip(format!("Splice data not found; {detail}"))
            } else {
                Fail(detail)
            }
        }
        (Err(e), _) | (_, Err(e)) => Fail(format!("surrogate run failed: {e}")),
    }
}

fn criterion_12() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1201);
    let mut round_trips = 0;
    for _ in 0..200 {
        let ds = random_sparse(&mut rng);
        let mut buf = Vec::new();
        ds.write_libsvm(&mut buf).unwrap();
        let back = parse_libsvm_str(std::str::from_utf8(&buf).unwrap());
        if back.as_ref() == Ok(&ds) {
            round_trips += 1;
        }
    }

    let base = ["+1 1:0.5 3:2.0 7:-1e-3", "-1 2:1.0 4:3", "+1 5:0.25", "-1 1:1 2:2 3:3"];
    let alphabet: Vec<char> = "+-0123456789.:eE \tinfa".chars().collect();
    let (mut panics, mut misplaced, mut errors) = (0, 0, 0);
    for _ in 0..10_000 {
        let mut line: Vec<char> = base[rng.gen_range(0..base.len())].chars().collect();
        for _ in 0..rng.gen_range(1..4) {
            let pos = rng.gen_range(0..=line.len());
            match rng.gen_range(0..3) {
                0 => line.insert(pos, alphabet[rng.gen_range(0..alphabet.len())]),
                1 if pos < line.len() => {
                    line.remove(pos);
                }
                _ if pos < line.len() => line[pos] = alphabet[rng.gen_range(0..alphabet.len())],
                _ => line.push(alphabet[rng.gen_range(0..alphabet.len())]),
            }
        }
        let at = rng.gen_range(0..3);
        let mut lines: Vec<String> = vec![base[0].into(), base[1].into()];
        lines.insert(at, line.into_iter().collect());
        let text = lines.join("\n");
        match std::panic::catch_unwind(|| parse_libsvm_str(&text)) {
            Err(_) => panics += 1,
            Ok(Ok(_)) => {}
            Ok(Err(e)) => {
                errors += 1;
                let expected_line = matches!(
                    e,
                    afba::dataio::DataError::Parse { kind: afba::dataio::ParseErrorKind::NonBinaryLabels(_), .. }
                )
                .then_some(None)
                .unwrap_or(Some(at + 1));
                match (e.line(), expected_line) {
                    (Some(l), Some(want)) if l == want => {}
                    (Some(l), None) if (1..=3).contains(&l) => {}
                    _ => misplaced += 1,
                }
            }
        }
    }
    let examples_ok = parse_libsvm_str("1 3:1 2:1\n").err().and_then(|e| e.line()) == Some(1)
        && parse_libsvm_str("-1 1:0.5 3:2.0\n+1 2:1.0\n").map(|d| d.num_features) == Ok(3);
    check(
        round_trips == 200 && panics == 0 && misplaced == 0 && examples_ok,
        format!("round trips {round_trips}/200; 10000 mutated lines: {errors} errors, {panics} panics, {misplaced} wrong line numbers"),
    )
}

fn random_sparse(rng: &mut ChaCha8Rng) -> SparseDataset {
    let samples: Vec<Sample> = (0..rng.gen_range(1..30))
        .map(|_| {
            let mut idx = 0u32;
            let features = (0..rng.gen_range(0..10))
                .map(|_| {
                    idx += rng.gen_range(1..20);
                    (idx, rng.gen_range(-1e3..1e3) * 10f64.powi(rng.gen_range(-8..8)))
                })
                .collect();
            Sample { label: if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative }, features }
        })
        .collect();
    let num_features = samples.iter().filter_map(|s| s.features.last().map(|f| f.0 as usize)).max().unwrap_or(0);
    SparseDataset { samples, num_features }
}

// ---------------------------------------------------------------- driver

fn report(id: u8, name: &str, limit: Option<Duration>, elapsed: Duration, verdict: Verdict) -> bool {
    let over = limit.is_some_and(|l| elapsed > l);
    let (status, detail, failed) = match verdict {
        Pass(d) if over => ("FAIL", format!("{d}; runtime over limit"), true),
        Pass(d) => ("PASS", d, false),
        Fail(d) => ("FAIL", d, true),
        Skip(d) => ("SKIP", d, false),
    };
    let limit = limit.map_or(String::new(), |l| format!(" / limit {:.0}s", l.as_secs_f64()));
    println!("criterion {id:>2} {status} [{name}] ({:.2}s{limit}) {detail}", elapsed.as_secs_f64());
    failed
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() {
    let secs = Duration::from_secs;
    let mut failed = Vec::new();
    let mut record = |id: u8, name: &str, limit: Option<Duration>, (verdict, elapsed): (Verdict, Duration)| {
        if report(id, name, limit, elapsed, verdict) {
            failed.push(id);
        }
    };

    record(1, "prox oracle equivalence", Some(secs(10)), timed(criterion_1));
    record(2, "gradient contract", Some(secs(5)), timed(criterion_2));
    record(3, "Lipschitz bound and spectral norm", None, timed(criterion_3));
    record(4, "CD/GN scheme equivalence", None, timed(criterion_4));

    let fx = LassoFixture::new();
    println!(
        "             LASSO fixture: seed {LASSO_SEED}, L = {:.6}, F* = {:.12}, reference residual {:.1e} ({:.2}s)",
        fx.problem.lipschitz(),
        fx.f_star,
        fx.residual(&fx.x_star),
        fx.setup.as_secs_f64()
    );
    let (v5, t5) = timed(|| criterion_5(&fx));
    record(5, "FISTA identity and rate bound", Some(secs(60)), (v5, t5 + fx.setup));

    let rr = rate_runs(&fx);
    let (v6, t6) = timed(|| criterion_6(&fx, &rr));
    record(6, "epsilon monotonicity", None, (v6, t6 + rr.elapsed));
    let (v7, t7) = timed(|| criterion_7(&rr));
    record(7, "o-rate decile proxy", Some(secs(120)), (v7, t7 + rr.elapsed));

    record(8, "omega > 1 divergence", None, timed(criterion_8));
    record(9, "condition checker ground truth", None, timed(criterion_9));

    let scratch = tempfile::tempdir().expect("scratch dir");
    let first = scratch.path().join("splice");
    record(10, "end-to-end Splice", Some(secs(600)), timed(|| criterion_10(&first)));
    record(11, "determinism", None, timed(|| criterion_11(&first, scratch.path())));
    record(12, "parser round trip and fuzz", None, timed(criterion_12));

    if failed.is_empty() {
        println!("acceptance: all criteria passed or skipped");
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
}
