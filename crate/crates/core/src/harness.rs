//! Experiment drivers behind the CLI: accuracy runs, injected-perturbation
//! bound checks and the batch comparison table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::augmented::{self, Formulation};
use crate::bounds::{self, PairNorms, PencilEps, Which, SLACK};
use crate::condest::{self, Choice, CondEstimate, CondMethod};
use crate::eigensolve::{perturb_pencil, solve_pencil, PerturbationSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, derive_seed, rng_from_seed};
use crate::metrics::{self, AccuracyReport, Quantity};
use crate::oracle::gsvd_reference;
use crate::problems::{self, MatrixPair};
use crate::recovery::{recover_from_eigenpairs, RecoveredComponent};

pub const THREADS_ENV: &str = "GSVDLAB_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generated {
        m: usize,
        n: usize,
        p: usize,
        cond_a: f64,
        cond_b: f64,
        seed: u64,
    },
    /// `b: None` pairs `A` with the normalized first-difference matrix.
    Files { a: PathBuf, b: Option<PathBuf> },
}

impl ProblemSource {
    pub fn load(&self) -> Result<MatrixPair> {
        match self {
            ProblemSource::Generated {
                m,
                n,
                p,
                cond_a,
                cond_b,
                seed,
            } => problems::gen_random_pair(*m, *n, *p, *cond_a, *cond_b, *seed),
            ProblemSource::Files { a, b } => {
                let a_mat = problems::load_matrix_market(a)?;
                let label = a.display().to_string();
                match b {
                    None => problems::pair_with_first_difference(&a_mat, label),
                    Some(b) => {
                        let b_mat = problems::load_matrix_market(b)?;
                        MatrixPair::new(
                            problems::normalize(&a_mat)?,
                            problems::normalize(&b_mat)?,
                            format!("{label}+{}", b.display()),
                        )
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulationMode {
    Hat,
    Tilde,
    Both,
    Auto,
}

impl std::str::FromStr for FormulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hat" => Ok(FormulationMode::Hat),
            "tilde" => Ok(FormulationMode::Tilde),
            "both" => Ok(FormulationMode::Both),
            "auto" => Ok(FormulationMode::Auto),
            other => Err(Error::InvalidArgument(format!(
                "unknown formulation `{other}` (expected hat, tilde, both or auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondSettings {
    pub method: CondMethod,
    pub k: usize,
}

impl Default for CondSettings {
    fn default() -> Self {
        CondSettings {
            method: CondMethod::LanczosInv,
            k: condest::DEFAULT_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    pub formulation: FormulationMode,
    /// Relative size of the injected pencil perturbation; 0 runs on the
    /// exact pencils.
    pub epsilon: f64,
    pub out: Option<PathBuf>,
    pub condest: Option<CondSettings>,
    /// With `Auto`, also run the formulation that was not chosen.
    pub verify: bool,
    /// Seed for perturbations and randomized estimators.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn generated(m: usize, n: usize, p: usize, cond_a: f64, cond_b: f64, seed: u64) -> Self {
        ExperimentConfig {
            source: ProblemSource::Generated {
                m,
                n,
                p,
                cond_a,
                cond_b,
                seed,
            },
            formulation: FormulationMode::Both,
            epsilon: 0.0,
            out: None,
            condest: Some(CondSettings::default()),
            verify: false,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.formulation == FormulationMode::Auto && self.condest.is_none() {
            return Err(Error::InvalidArgument(
                "formulation auto needs a condition estimator".into(),
            ));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Contents of `summary.json`, in its fixed key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub pct_sigma: Option<f64>,
    pub acc_sigma: Option<f64>,
    pub pct_x: Option<f64>,
    pub acc_x: Option<f64>,
    pub pct_u: Option<f64>,
    pub acc_u: Option<f64>,
    pub pct_v: Option<f64>,
    pub acc_v: Option<f64>,
    pub kappa_a_est: Option<f64>,
    pub kappa_b_est: Option<f64>,
    pub chosen_formulation: String,
    pub n: usize,
    pub seed: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: AccuracyReport,
    pub summary: Summary,
    pub hat: Option<Vec<RecoveredComponent>>,
    pub tilde: Option<Vec<RecoveredComponent>>,
    pub kappa_a: Option<CondEstimate>,
    pub kappa_b: Option<CondEstimate>,
}

/// Recovered components of one formulation, optionally from a perturbed
/// pencil.
pub fn solve_formulation(
    pair: &MatrixPair,
    form: Formulation,
    perturbation: Option<PerturbationSpec>,
) -> Result<(Vec<RecoveredComponent>, augmented::AugmentedPencil)> {
    let mut pencil = augmented::build(pair, form)?;
    if let Some(spec) = perturbation {
        pencil = perturb_pencil(&pencil, spec)?;
    }
    let pairs = solve_pencil(&pencil)?;
    Ok((recover_from_eigenpairs(pair, form, &pairs)?, pencil))
}

const PERTURB_STREAM: u64 = 0x5045_5254;

pub fn run_accuracy(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let pair = config.source.load()?;
    let exact = gsvd_reference(&pair)?;

    let (kappa_a, kappa_b) = match config.condest {
        Some(cs) => (
            Some(condest::estimate(cs.method, pair.a(), cs.k, derive_seed(config.seed, 1))?),
            Some(condest::estimate(cs.method, pair.b(), cs.k, derive_seed(config.seed, 2))?),
        ),
        None => (None, None),
    };

    let (run_hat, run_tilde, chosen) = match config.formulation {
        FormulationMode::Hat => (true, false, "hat".to_string()),
        FormulationMode::Tilde => (false, true, "tilde".to_string()),
        FormulationMode::Both => (true, true, "both".to_string()),
        FormulationMode::Auto => {
            let choice = condest::choose_formulation(
                kappa_a.map_or(1.0, |e| e.value),
                kappa_b.map_or(1.0, |e| e.value),
            );
            let form = choice.formulation();
            let both = config.verify;
            (
                both || form == Formulation::Hat,
                both || form == Formulation::Tilde,
                form.as_str().to_string(),
            )
        }
    };

    let perturbation = |form: Formulation| {
        (config.epsilon > 0.0).then(|| {
            PerturbationSpec::new(
                config.epsilon,
                derive_seed(derive_seed(config.seed, PERTURB_STREAM), form as u64),
            )
        })
    };
    let hat = run_hat
        .then(|| solve_formulation(&pair, Formulation::Hat, perturbation(Formulation::Hat)).map(|r| r.0))
        .transpose()?;
    let tilde = run_tilde
        .then(|| solve_formulation(&pair, Formulation::Tilde, perturbation(Formulation::Tilde)).map(|r| r.0))
        .transpose()?;

    let report = metrics::accuracy_report(&exact, hat.as_deref(), tilde.as_deref())?;
    let agg = report.aggregates;
    let pick = |q: Quantity| agg.map(|a| a.get(q));
    let summary = Summary {
        pct_sigma: pick(Quantity::Sigma).map(|p| p.pct),
        acc_sigma: pick(Quantity::Sigma).map(|p| p.acc),
        pct_x: pick(Quantity::X).map(|p| p.pct),
        acc_x: pick(Quantity::X).map(|p| p.acc),
        pct_u: pick(Quantity::U).map(|p| p.pct),
        acc_u: pick(Quantity::U).map(|p| p.acc),
        pct_v: pick(Quantity::V).map(|p| p.pct),
        acc_v: pick(Quantity::V).map(|p| p.acc),
        kappa_a_est: kappa_a.map(|e| e.value),
        kappa_b_est: kappa_b.map(|e| e.value),
        chosen_formulation: chosen,
        n: exact.n(),
        seed: config.seed,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };

    if let Some(dir) = &config.out {
        create_dir(dir)?;
        write_file(&dir.join("accuracy.csv"), &accuracy_csv(&report))?;
        write_file(&dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }

    Ok(RunOutcome {
        report,
        summary,
        hat,
        tilde,
        kappa_a,
        kappa_b,
    })
}

pub const ACCURACY_HEADER: &str = "index,sigma_exact,chordal_hat,chordal_tilde,sin_x_hat,sin_x_tilde,sin_u_hat,sin_u_tilde,sin_v_hat,sin_v_tilde";

/// 17 significant digits in scientific notation.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// `accuracy.csv` contents; a formulation that was not run yields `NaN`
/// cells.
pub fn accuracy_csv(report: &AccuracyReport) -> String {
    let mut out = String::from(ACCURACY_HEADER);
    out.push('\n');
    for row in &report.rows {
        write!(out, "{},{}", row.index, fmt_sci(row.sigma_exact)).unwrap();
        for q in Quantity::ALL {
            for side in [row.hat, row.tilde] {
                let v = side.map_or(f64::NAN, |e| e.get(q));
                write!(out, ",{}", fmt_sci(v)).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Thread pool honoring [`THREADS_ENV`]; unset or invalid means rayon's
/// default.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckConfig {
    pub trials: usize,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    /// Condition numbers of `A` and `B` are drawn log-uniformly from
    /// `[1, kappa_max]`.
    pub kappa_max: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for BoundCheckConfig {
    fn default() -> Self {
        BoundCheckConfig {
            trials: 200,
            m: 30,
            n: 20,
            p: 40,
            epsilon: 1e-8,
            kappa_max: 1e3,
            seed: 0,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub trial: usize,
    pub index: usize,
    pub form: Formulation,
    pub quantity: &'static str,
    pub observed: f64,
    pub bound: f64,
}

impl BoundRow {
    pub fn ratio(&self) -> f64 {
        self.observed / self.bound
    }

    /// Observed error above the bound by more than the absolute tolerance.
    pub fn violated(&self) -> bool {
        !(self.observed <= self.bound + BOUND_TOL)
    }
}

pub const BOUND_TOL: f64 = 1e-12;
pub const GAMMA_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub rows: Vec<BoundRow>,
    pub violations: usize,
    pub max_ratio: f64,
    pub gamma_ratio_min: f64,
    pub gamma_ratio_max: f64,
    pub gamma_violations: usize,
}

struct TrialResult {
    rows: Vec<BoundRow>,
    gamma_ratios: Vec<f64>,
}

/// Rounding of a dense solve acts like a pencil perturbation of size
/// about `d eps ‖.‖`; it is added to the injected norms so that the bounds
/// cover the whole observed error.
fn intrinsic(order: usize, norm: f64) -> f64 {
    order as f64 * f64::EPSILON * norm
}

fn run_trial(config: &BoundCheckConfig, trial: usize) -> Result<TrialResult> {
    let tseed = derive_seed(config.seed, trial as u64);
    let mut rng = rng_from_seed(tseed);
    let log_max = config.kappa_max.log10();
    let ca = 10f64.powf(rng.random_range(0.0..=log_max));
    let cb = 10f64.powf(rng.random_range(0.0..=log_max));
    let pair = problems::gen_random_pair(config.m, config.n, config.p, ca, cb, derive_seed(tseed, 1))?;
    let exact = gsvd_reference(&pair)?;
    let norms = PairNorms::new(&pair);

    let mut eps = [PencilEps { eps_e: 0.0, eps_f: 0.0 }; 2];
    let mut recovered = Vec::with_capacity(2);
    for (slot, form) in [Formulation::Hat, Formulation::Tilde].into_iter().enumerate() {
        let spec = (config.epsilon > 0.0)
            .then(|| PerturbationSpec::new(config.epsilon, derive_seed(tseed, 10 + slot as u64)));
        let (comps, pencil) = solve_formulation(&pair, form, spec)?;
        let d = pencil.order();
        let injected = pencil.injected().map_or((0.0, 0.0), |i| (i.delta_m, i.delta_n));
        let dm = injected.0 + intrinsic(d, linalg::spectral_norm(pencil.lhs()));
        let dn = injected.1 + intrinsic(d, linalg::spectral_norm(pencil.rhs()));
        eps[slot] = PencilEps::from_pencil_norms(form, dm, dn);
        recovered.push(comps);
    }
    let sig = |c: &[RecoveredComponent]| c.iter().map(|r| r.sigma).collect::<Vec<_>>();
    let report = bounds::evaluate_bounds(
        &exact,
        &norms,
        eps[0],
        eps[1],
        Some(&sig(&recovered[0])),
        Some(&sig(&recovered[1])),
    );

    let mut rows = Vec::new();
    for (slot, form) in [Formulation::Hat, Formulation::Tilde].into_iter().enumerate() {
        let errs = metrics::component_errors(&exact, &recovered[slot])?;
        for (i, (cb, e)) in report.components.iter().zip(&errs).enumerate() {
            let fb = match form {
                Formulation::Hat => cb.hat,
                Formulation::Tilde => cb.tilde,
            };
            rows.push(BoundRow {
                trial,
                index: i,
                form,
                quantity: Quantity::Sigma.as_str(),
                observed: e.chordal,
                bound: fb.sigma,
            });
            for (which, q) in [(Which::X, Quantity::X), (Which::U, Quantity::U), (Which::V, Quantity::V)] {
                rows.push(BoundRow {
                    trial,
                    index: i,
                    form,
                    quantity: q.as_str(),
                    observed: e.get(q),
                    bound: SLACK * fb.get(which),
                });
            }
        }
    }
    let gamma_ratios = report.components.iter().map(|c| c.gamma2 / c.gamma1).collect();
    Ok(TrialResult { rows, gamma_ratios })
}

/// Injects perturbations of relative size `epsilon` into both pencils of
/// random pairs and compares observed errors with the evaluated bounds.
pub fn run_bound_check(config: &BoundCheckConfig) -> Result<BoundCheckReport> {
    if !(config.kappa_max >= 1.0) || !config.kappa_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kappa_max must be finite and >= 1, got {}",
            config.kappa_max
        )));
    }
    let pool = thread_pool()?;
    let trials: Vec<TrialResult> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<_>>()
    })?;

    let rows: Vec<BoundRow> = trials.iter().flat_map(|t| t.rows.iter().copied()).collect();
    let gammas: Vec<f64> = trials.iter().flat_map(|t| t.gamma_ratios.iter().copied()).collect();
    let report = BoundCheckReport {
        violations: rows.iter().filter(|r| r.violated()).count(),
        max_ratio: rows.iter().map(BoundRow::ratio).fold(0.0, f64::max),
        gamma_ratio_min: gammas.iter().copied().fold(f64::INFINITY, f64::min),
        gamma_ratio_max: gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        gamma_violations: gammas
            .iter()
            .filter(|&&g| !(0.5 - GAMMA_TOL..=2.0 + GAMMA_TOL).contains(&g))
            .count(),
        rows,
    };

    if let Some(dir) = &config.out {
        create_dir(dir)?;
        write_file(&dir.join("bounds.csv"), &bounds_csv(&report.rows))?;
    }
    Ok(report)
}

pub const BOUNDS_HEADER: &str = "trial,index,form,quantity,observed,bound,ratio";

pub fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.index,
            r.form,
            r.quantity,
            fmt_sci(r.observed),
            fmt_sci(r.bound),
            fmt_sci(r.ratio())
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Problem {
    pub label: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub cond_a: f64,
    pub cond_b: f64,
}

/// Dense analogs at `n = 100`: both matrices moderately conditioned,
/// `A` increasingly ill conditioned, and the mirror of the worst case.
pub fn default_table3_problems() -> Vec<Table3Problem> {
    [("1a", 1e2, 1e2), ("1b", 1e5, 1e2), ("1c", 1e7, 1e2), ("1c-mirror", 1e2, 1e7)]
        .into_iter()
        .map(|(label, cond_a, cond_b)| Table3Problem {
            label: label.into(),
            m: 150,
            n: 100,
            p: 200,
            cond_a,
            cond_b,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Row {
    pub label: String,
    pub seed: u64,
    pub sigma: metrics::PctAcc,
    pub x: metrics::PctAcc,
    pub u: metrics::PctAcc,
    pub v: metrics::PctAcc,
}

impl Table3Row {
    pub fn get(&self, q: Quantity) -> metrics::PctAcc {
        match q {
            Quantity::Sigma => self.sigma,
            Quantity::X => self.x,
            Quantity::U => self.u,
            Quantity::V => self.v,
        }
    }
}

/// Runs both formulations on every problem, problem `i` with seed
/// `derive_seed(seed, i)`, and writes `table3.csv` to `out` if given.
pub fn run_table3(problems: &[Table3Problem], seed: u64, out: Option<&Path>) -> Result<Vec<Table3Row>> {
    let pool = thread_pool()?;
    let rows: Vec<Table3Row> = pool.install(|| {
        problems
            .par_iter()
            .enumerate()
            .map(|(i, prob)| {
                let pseed = derive_seed(seed, i as u64);
                let mut cfg = ExperimentConfig::generated(prob.m, prob.n, prob.p, prob.cond_a, prob.cond_b, pseed);
                cfg.condest = None;
                let outcome = run_accuracy(&cfg)?;
                let agg = outcome.report.aggregates.ok_or_else(|| {
                    Error::Contract(format!("problem {} produced no aggregates", prob.label))
                })?;
                Ok(Table3Row {
                    label: prob.label.clone(),
                    seed: pseed,
                    sigma: agg.sigma,
                    x: agg.x,
                    u: agg.u,
                    v: agg.v,
                })
            })
            .collect::<Result<_>>()
    })?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("table3.csv"), &table3_csv(&rows))?;
    }
    Ok(rows)
}

pub const TABLE3_HEADER: &str = "problem,pct_sigma,acc_sigma,pct_x,acc_x,pct_u,acc_u,pct_v,acc_v";

pub fn table3_csv(rows: &[Table3Row]) -> String {
    let mut out = String::from(TABLE3_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.label);
        for q in Quantity::ALL {
            let pa = r.get(q);
            write!(out, ",{:.2},{:.2}", pa.pct, pa.acc).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Condition estimates of `A` and `B` with the formulation they select.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondReport {
    pub kappa_a: CondEstimate,
    pub kappa_b: CondEstimate,
    pub choice: Choice,
}

pub fn run_condest(pair: &MatrixPair, settings: CondSettings, seed: u64) -> Result<CondReport> {
    let kappa_a = condest::estimate(settings.method, pair.a(), settings.k, derive_seed(seed, 1))?;
    let kappa_b = condest::estimate(settings.method, pair.b(), settings.k, derive_seed(seed, 2))?;
    Ok(CondReport {
        kappa_a,
        kappa_b,
        choice: condest::choose_formulation(kappa_a.value, kappa_b.value),
    })
}
