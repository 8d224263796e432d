//! Run orchestration: TOML configuration, optimizer phases, metric cadence,
//! multi-trial driving, and the artifacts a run leaves on disk.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::loss::{Objective, TrainData};
use crate::metrics::{
    l_inf, relative_l2, write_history_csv, write_report_json, HistoryRecord, RunReport,
};
use crate::network::{ActivationKind, CauchyNet, InitConfig};
use crate::optim::{lbfgs_minimize, AdamConfig, AdamState, LbfgsConfig};
use crate::problems::{build_problem, PdeProblem, ProblemOverrides};
use crate::sampling::{sample_boundary, sample_initial, sample_interior, test_points, PointSet};
use crate::{Error, Result};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    #[serde(default)]
    pub a1: Option<f64>,
    #[serde(default)]
    pub a2: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
    /// "hard" or "soft"; omitted keeps the problem's default.
    #[serde(default)]
    pub constraint: Option<String>,
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSection {
    pub n_f: usize,
    #[serde(default)]
    pub n_b: usize,
    #[serde(default)]
    pub n_0: usize,
    #[serde(default = "default_test_points")]
    pub test: usize,
}

fn default_test_points() -> usize {
    90_000
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub optimizer: Optimizer,
    pub iterations: usize,
    #[serde(default)]
    pub lr: Option<f64>,
    #[serde(default)]
    pub decay_rate: Option<f64>,
    #[serde(default)]
    pub decay_step: Option<usize>,
    #[serde(default)]
    pub lr_floor: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Lbfgs,
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default)]
    pub lambda_f: Option<f64>,
    #[serde(default)]
    pub lambda_b: Option<f64>,
    #[serde(default)]
    pub lambda_i: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// Elapsed seconds in history rows.
    Wall,
    /// Zeros in the time column, making repeat runs byte-identical.
    None,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: ProblemSection,
    pub width: usize,
    #[serde(default = "default_activation")]
    pub activation: ActivationKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub points: PointsSection,
    pub phases: Vec<PhaseSection>,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub init: Option<InitConfig>,
    #[serde(default = "default_metric_every")]
    pub metric_every: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// When true (the default) the chunk reduction order is pinned, so a run is
    /// bit-identical for any thread count. False merely waives the guarantee.
    #[serde(default = "default_true")]
    pub deterministic_reduction: bool,
    #[serde(default = "default_clock")]
    pub clock: Clock,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn default_activation() -> ActivationKind {
    ActivationKind::Cauchy
}
fn default_trials() -> usize {
    1
}
fn default_metric_every() -> usize {
    100
}
fn default_threads() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_clock() -> Clock {
    Clock::Wall
}
fn default_out_dir() -> String {
    "out".into()
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("width must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.points.n_f == 0 {
            return Err(Error::Config("points.n_f must be positive".into()));
        }
        if self.points.test == 0 {
            return Err(Error::Config("points.test must be positive".into()));
        }
        if self.phases.is_empty() {
            return Err(Error::Config("at least one optimizer phase is required".into()));
        }
        for (i, ph) in self.phases.iter().enumerate() {
            if ph.iterations == 0 {
                return Err(Error::Config(format!("phase {i}: iterations must be positive")));
            }
            match ph.optimizer {
                Optimizer::Adam => {
                    let lr = ph
                        .lr
                        .ok_or_else(|| Error::Config(format!("phase {i}: adam needs lr")))?;
                    if !(lr.is_finite() && lr > 0.0) {
                        return Err(Error::Config(format!("phase {i}: lr must be positive")));
                    }
                }
                Optimizer::Lbfgs => {
                    if ph.lr.is_some()
                        || ph.decay_rate.is_some()
                        || ph.decay_step.is_some()
                        || ph.lr_floor.is_some()
                    {
                        return Err(Error::Config(format!(
                            "phase {i}: lbfgs takes no learning-rate settings"
                        )));
                    }
                }
            }
        }
        if self.metric_every == 0 {
            return Err(Error::Config("metric_every must be positive".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Resolve the problem with overrides, constraint mode, and loss weights
    /// applied.
    pub fn resolve_problem(&self) -> Result<PdeProblem> {
        let ov = ProblemOverrides {
            a1: self.problem.a1,
            a2: self.problem.a2,
            k: self.problem.k,
            dim: self.problem.dim,
        };
        let mut problem = build_problem(&self.problem.name, &ov)?;
        if let Some(mode) = &self.problem.constraint {
            problem.set_constraint_mode(mode)?;
        }
        if let Some(l) = self.weights.lambda_f {
            problem.weights.lambda_f = l;
        }
        if let Some(l) = self.weights.lambda_b {
            problem.weights.lambda_b = l;
        }
        if let Some(l) = self.weights.lambda_i {
            problem.weights.lambda_i = l;
        }
        if !problem.constraint.is_hard() && self.points.n_b == 0 {
            return Err(Error::Config(
                "soft-constrained training needs points.n_b > 0".into(),
            ));
        }
        Ok(problem)
    }
}

/// Everything one trained trial produces before any file is written.
pub struct TrainedTrial {
    pub seed: u64,
    pub net: CauchyNet,
    pub history: Vec<HistoryRecord>,
    pub final_loss: crate::loss::LossBreakdown,
    pub rel_l2: f64,
    pub l_inf: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub dir: String,
    pub rel_l2: f64,
    pub l_inf: f64,
    pub final_loss: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub constraint_mode: String,
    pub trials: Vec<TrialSummary>,
    pub best_seed: u64,
    pub best_rel_l2: f64,
}

fn sample_data(problem: &PdeProblem, cfg: &TrainConfig, seed: u64) -> TrainData {
    let interior = sample_interior(problem, cfg.points.n_f, seed);
    let (boundary, initial) = if problem.constraint.is_hard() {
        (None, None)
    } else {
        let b = Some(sample_boundary(problem, cfg.points.n_b, seed));
        let i = (problem.is_time_dependent() && cfg.points.n_0 > 0)
            .then(|| sample_initial(problem, cfg.points.n_0, seed));
        (b, i)
    };
    TrainData { interior, boundary, initial }
}

/// Train one network; pure apart from timing. Artifact writing lives in
/// `run_trial`, metric cadence in both.
///
/// Returns the lowest-loss state seen during training rather than the last
/// iterate: while the learning rate is still hot the final step is a noise
/// draw around the trajectory floor, and the selection looks only at the
/// training loss, never at the error metrics.
pub fn train_one(cfg: &TrainConfig, problem: &PdeProblem, seed: u64) -> Result<TrainedTrial> {
    let init = cfg.init.unwrap_or_default();
    let net = CauchyNet::init(problem.input_dim, cfg.width, cfg.activation, seed, &init)?;
    let layout = net.layout();
    let data = sample_data(problem, cfg, seed);
    let test = test_points(problem, cfg.points.test, seed);
    let exact: Vec<f64> = test.iter().map(|x| problem.exact.value(x)).collect();

    let mut objective = Objective::new(net, problem, data)?;
    objective.set_parallel(cfg.threads > 1);
    let objective = RefCell::new(objective);

    let start = Instant::now();
    let elapsed = move || match cfg.clock {
        Clock::Wall => start.elapsed().as_secs_f64(),
        Clock::None => 0.0,
    };

    let mut params = objective.borrow().net().flatten_params();
    let mut history: Vec<HistoryRecord> = Vec::new();

    let record = |iter: usize, params: &[f64], history: &mut Vec<HistoryRecord>| -> Result<f64> {
        let mut obj = objective.borrow_mut();
        let (bd, _) = obj.eval(params);
        let preds = metric_predictions(&obj, &test);
        let rec = HistoryRecord {
            iter,
            time_s: elapsed(),
            loss_total: bd.total,
            loss_f: bd.term_f,
            loss_b: bd.term_b,
            loss_i: bd.term_i,
            rel_l2: relative_l2(&preds, &exact),
            l_inf: l_inf(&preds, &exact),
        };
        history.push(rec);
        Ok(bd.total)
    };

    record(0, &params, &mut history)?;
    let mut global_iter = 0usize;
    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();

    for phase in &cfg.phases {
        match phase.optimizer {
            Optimizer::Adam => {
                let acfg = AdamConfig {
                    lr: phase.lr.expect("validated"),
                    decay_rate: phase.decay_rate.unwrap_or(1.0),
                    decay_step: phase.decay_step.unwrap_or(1000),
                    lr_floor: phase.lr_floor,
                    ..Default::default()
                };
                let mut adam = AdamState::new(acfg, params.len());
                for _ in 0..phase.iterations {
                    let (bd, grad) = objective.borrow_mut().eval(&params);
                    if !bd.total.is_finite() {
                        return Err(Error::Numerical(format!(
                            "loss became non-finite at iteration {global_iter} (seed {seed})"
                        )));
                    }
                    if bd.total < best_loss {
                        best_loss = bd.total;
                        best_params.copy_from_slice(&params);
                    }
                    adam.step(&mut params, &grad);
                    layout.clamp_d(&mut params);
                    global_iter += 1;
                    if global_iter % cfg.metric_every == 0 {
                        record(global_iter, &params, &mut history)?;
                    }
                }
            }
            Optimizer::Lbfgs => {
                let phase_start = global_iter;
                let lcfg = LbfgsConfig::default();
                let report = {
                    let mut cadence_err = None;
                    let rep = lbfgs_minimize(
                        &lcfg,
                        &mut params,
                        phase.iterations,
                        |p| {
                            let (bd, g) = objective.borrow_mut().eval(p);
                            if bd.total < best_loss {
                                best_loss = bd.total;
                                best_params.copy_from_slice(p);
                            }
                            (bd.total, g)
                        },
                        |p| {
                            let before = p.to_vec();
                            layout.clamp_d(p);
                            p[..] != before[..]
                        },
                        |it, _f, p| {
                            let g = phase_start + it;
                            if g % cfg.metric_every == 0 && cadence_err.is_none() {
                                if let Err(e) = record(g, p, &mut history) {
                                    cadence_err = Some(e);
                                }
                            }
                        },
                    );
                    if let Some(e) = cadence_err {
                        return Err(e);
                    }
                    rep
                };
                if !report.final_loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "quasi-Newton phase diverged (seed {seed})"
                    )));
                }
                global_iter += report.iterations;
            }
        }
    }

    // Keep whichever state the trajectory's lowest loss belongs to. The final
    // eval below re-measures it, so a quasi-Newton line-search probe that won
    // with an unclamped d still comes out consistent after the clamp.
    let (final_bd, _) = objective.borrow_mut().eval(&params);
    if best_loss < final_bd.total {
        params.copy_from_slice(&best_params);
        layout.clamp_d(&mut params);
    }

    // Closing row at the kept state, replacing a colliding cadence row.
    if history.last().map(|r| r.iter) == Some(global_iter) {
        history.pop();
    }
    record(global_iter, &params, &mut history)?;
    let final_total = {
        let mut obj = objective.borrow_mut();
        let (bd, _) = obj.eval(&params);
        bd
    };
    if !final_total.total.is_finite() {
        return Err(Error::Numerical(format!("final loss is non-finite (seed {seed})")));
    }

    let last = *history.last().expect("history has at least the closing row");
    let obj = objective.into_inner();
    Ok(TrainedTrial {
        seed,
        net: obj.net().clone(),
        history,
        final_loss: final_total,
        rel_l2: last.rel_l2,
        l_inf: last.l_inf,
        wall_time_s: elapsed(),
    })
}

fn metric_predictions(obj: &Objective, test: &PointSet) -> Vec<f64> {
    test.iter().map(|x| obj.predict_value(x)).collect()
}

/// Train one trial and write its artifact directory.
pub fn run_trial(
    cfg: &TrainConfig,
    problem: &PdeProblem,
    seed: u64,
    dir: &Path,
) -> Result<TrainedTrial> {
    let trial = train_one(cfg, problem, seed)?;
    std::fs::create_dir_all(dir)?;
    trial.net.write_checkpoint(&dir.join("checkpoint.bin"))?;
    write_history_csv(&dir.join("history.csv"), &trial.history)?;
    let report = RunReport {
        config: serde_json::to_value(cfg)
            .map_err(|e| Error::Format(format!("config echo failed: {e}")))?,
        problem: problem.name.clone(),
        constraint_mode: problem.constraint.mode().into(),
        activation: match cfg.activation {
            ActivationKind::Cauchy => "cauchy".into(),
            ActivationKind::Tanh => "tanh".into(),
        },
        width: cfg.width,
        seed,
        parameter_count: trial.net.parameter_count(),
        prng: crate::rng::ALGORITHM.into(),
        final_loss: trial.final_loss.clone(),
        rel_l2: trial.rel_l2,
        l_inf: trial.l_inf,
        wall_time_s: trial.wall_time_s,
        history_len: trial.history.len(),
        checkpoint_file: "checkpoint.bin".into(),
        history_file: "history.csv".into(),
    };
    write_report_json(&dir.join("report.json"), &report)?;
    Ok(trial)
}

/// Full run: all trials, artifacts under out_dir/trial-<seed>/, and a
/// cross-trial summary. The best trial is the lowest relative L2.
pub fn run(cfg: &TrainConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let problem = cfg.resolve_problem()?;
    let out_root = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_root)?;

    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let seed = cfg.seed + t as u64;
        let dir = out_root.join(format!("trial-{seed}"));
        let trial = run_trial(cfg, &problem, seed, &dir)?;
        trials.push(TrialSummary {
            seed,
            dir: dir.to_string_lossy().into_owned(),
            rel_l2: trial.rel_l2,
            l_inf: trial.l_inf,
            final_loss: trial.final_loss.total,
            wall_time_s: trial.wall_time_s,
        });
    }

    let best = trials
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.rel_l2
                .partial_cmp(&b.rel_l2)
                .unwrap_or(std::cmp::Ordering::Greater)
        })
        .map(|(i, _)| i)
        .expect("trials is non-empty");
    let summary = RunSummary {
        problem: problem.name.clone(),
        constraint_mode: problem.constraint.mode().into(),
        best_seed: trials[best].seed,
        best_rel_l2: trials[best].rel_l2,
        trials,
    };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Format(format!("summary serialization failed: {e}")))?;
    std::fs::write(out_root.join("summary.json"), text)?;
    Ok(summary)
}

pub fn parse_summary(text: &str) -> Result<RunSummary> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("summary parse failed: {e}")))
}

/// One row of an activation-initialization sweep.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub rel_l2: Vec<f64>,
    pub mean_rel_l2: f64,
    pub std_rel_l2: f64,
    pub failed: usize,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub trials_per_value: usize,
    pub rows: Vec<SweepRow>,
}

/// Repeat training while one activation-initialization component steps through
/// `values`. Diverging runs are recorded as failures, not propagated: the whole
/// point of the sweep is to show where the model stops training.
pub fn sweep_init(
    cfg: &TrainConfig,
    parameter: &str,
    values: &[f64],
    trials: usize,
) -> Result<SweepTable> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Config("sweep needs at least one trial per value".into()));
    }
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let problem = cfg.resolve_problem()?;
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = cfg.clone();
        let mut init = c.init.unwrap_or_default();
        match parameter {
            "mu1" => init.mu1 = v,
            "mu2" => init.mu2 = v,
            "d" => init.d = v,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{other}' (expected mu1, mu2, or d)"
                )))
            }
        }
        c.init = Some(init);
        let mut oks = Vec::new();
        let mut failed = 0usize;
        for t in 0..trials {
            match train_one(&c, &problem, c.seed + t as u64) {
                Ok(trial) if trial.rel_l2.is_finite() => oks.push(trial.rel_l2),
                _ => failed += 1,
            }
        }
        let (mean, std) = mean_std(&oks);
        rows.push(SweepRow { value: v, rel_l2: oks, mean_rel_l2: mean, std_rel_l2: std, failed });
    }
    Ok(SweepTable { parameter: parameter.into(), trials_per_value: trials, rows })
}

/// Two-pass mean and population standard deviation; NaN when empty.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

/// Runtime analytic-versus-finite-difference audit over every benchmark; the
/// returned rows are (problem, worst relative mismatch).
pub fn check_gradients(width: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    use crate::fd::gradient;
    use crate::loss::loss_and_grad;

    let mut problems = vec![
        crate::problems::helmholtz2d(1.0, 4.0, 1.0),
        crate::problems::helmholtz3d(1.0),
        crate::problems::heat3d(),
        crate::problems::poisson_nd(5),
    ];
    let mut soft = crate::problems::heat3d();
    soft.set_constraint_mode("soft")?;
    problems.push(soft);

    let mut rows = Vec::new();
    for p in &problems {
        let net = CauchyNet::init(
            p.input_dim,
            width,
            ActivationKind::Cauchy,
            seed,
            &InitConfig::default(),
        )?;
        let interior = sample_interior(p, 16, seed);
        let boundary = (!p.constraint.is_hard()).then(|| sample_boundary(p, 8, seed));
        let initial = match &p.constraint {
            crate::problems::Constraint::Soft { initial: Some(_), .. } => {
                Some(sample_initial(p, 8, seed))
            }
            _ => None,
        };
        let data = TrainData { interior, boundary, initial };
        let (_, analytic) = loss_and_grad(&net, p, &data)?;
        let f = |theta: &[f64]| {
            let mut n = net.clone();
            n.set_params_unchecked(theta);
            loss_and_grad(&n, p, &data).expect("data validated above").0.total
        };
        let fd = gradient(&f, &net.flatten_params(), 1e-6);
        let mut worst = 0.0f64;
        for (a, b) in analytic.iter().zip(&fd) {
            let scale = a.abs().max(b.abs()).max(1e-6);
            worst = worst.max((a - b).abs() / scale);
        }
        let name = if p.constraint.is_hard() {
            p.name.clone()
        } else {
            format!("{} (soft)", p.name)
        };
        if worst > 1e-4 {
            return Err(Error::Numerical(format!(
                "gradient check failed for {name}: worst relative mismatch {worst:.3e}"
            )));
        }
        rows.push((name, worst));
    }
    Ok(rows)
}
