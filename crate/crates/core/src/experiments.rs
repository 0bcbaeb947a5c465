//! Synthetic datasets and the benchmark harness.
//!
//! Each scenario carries its own seed. Repeat `r` of a scenario draws from
//! the ChaCha8 stream `r` of that seed, so any single run can be regenerated
//! without the others.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, Activation, ComparisonTable, EvalReport, ScenarioAucs};
use crate::io::{SCHEMA_VERSION, VERSION_TAG};
use crate::model::{fit_model, Model};
use crate::par::{map_jobs, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dataset {
    /// Symmetric positive and negative activation.
    I,
    /// Positive activation only.
    II,
}

impl Dataset {
    /// Mixing proportions for sparsity level 1, 2 or 3.
    pub fn pi(self, sparsity: u8) -> Result<[f64; 3]> {
        let table = match self {
            Dataset::I => [[0.8, 0.1, 0.1], [0.9, 0.05, 0.05], [0.99, 0.005, 0.005]],
            Dataset::II => [[0.9, 0.1, 0.0], [0.95, 0.05, 0.0], [0.99, 0.01, 0.0]],
        };
        match sparsity {
            1..=3 => Ok(table[sparsity as usize - 1]),
            s => Err(Error::InvalidParams(format!("sparsity level {s} not in 1..=3"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Dataset::I => 1,
            Dataset::II => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Dataset::I),
            2 => Ok(Dataset::II),
            other => Err(Error::InvalidParams(format!("dataset {other} not in 1..=2"))),
        }
    }
}

/// One synthetic scenario: noise `N(0,1)`, activations `N(±snr, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dataset: Dataset,
    pub snr: f64,
    pub sparsity: u8,
    pub pi: [f64; 3],
    pub n: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(dataset: Dataset, snr: f64, sparsity: u8, n: usize, repeats: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            dataset,
            snr,
            sparsity,
            pi: dataset.pi(sparsity)?,
            n,
            repeats,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(Error::InvalidParams(format!("snr must be positive, got {}", self.snr)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        let sum: f64 = self.pi.iter().sum();
        if self.pi.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("pi {:?} is not on the simplex", self.pi)));
        }
        Ok(())
    }

    pub fn scenario_id(&self) -> String {
        format!("d{}_snr{}_s{}", self.dataset.index(), self.snr, self.sparsity)
    }
}

/// Values with their generating component labels (1 noise, 2 positive,
/// 3 negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub values: Vec<f64>,
    pub truth: Vec<u8>,
}

impl LabeledDataset {
    pub fn activations(&self) -> Vec<Activation> {
        self.truth
            .iter()
            .map(|&l| Activation::from_component(l).expect("generated labels are in 1..=3"))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,label\n");
        for (v, l) in self.values.iter().zip(&self.truth) {
            let _ = writeln!(s, "{v},{l}");
        }
        s
    }
}

/// Draws repeat `repeat` of `spec`.
pub fn generate(spec: &SyntheticSpec, repeat: u64) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(repeat);
    let means = [0.0, spec.snr, -spec.snr];
    let cut1 = spec.pi[0];
    let cut2 = spec.pi[0] + spec.pi[1];
    let mut values = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let k = if u < cut1 {
            0
        } else if u < cut2 || spec.pi[2] == 0.0 {
            1
        } else {
            2
        };
        let z: f64 = rng.sample(StandardNormal);
        values.push(means[k] + z);
        truth.push(k as u8 + 1);
    }
    Ok(LabeledDataset { values, truth })
}

/// Seed of scenario `index` in a grid built from `base_seed`.
pub fn scenario_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// SNR 2..5 by sparsity 1..3 for one dataset.
pub fn default_grid(dataset: Dataset, n: usize, repeats: usize, base_seed: u64) -> Result<Vec<SyntheticSpec>> {
    let mut grid = Vec::with_capacity(12);
    for snr in [2.0, 3.0, 4.0, 5.0] {
        for sparsity in 1..=3 {
            let seed = scenario_seed(base_seed, grid.len());
            grid.push(SyntheticSpec::new(dataset, snr, sparsity, n, repeats, seed)?);
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: Vec<SyntheticSpec>,
    pub models: Vec<Model>,
    pub fpr_max: f64,
    pub alpha: f64,
    /// Store fit wall times in the rows; off by default so outputs are
    /// reproducible byte for byte.
    pub record_timings: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl BenchConfig {
    pub fn new(scenarios: Vec<SyntheticSpec>, models: Vec<Model>) -> Self {
        Self {
            scenarios,
            models,
            fpr_max: 0.05,
            alpha: 0.01,
            record_timings: false,
            execution: Execution::default(),
        }
    }
}

/// One (scenario, repeat, model) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario_id: String,
    pub repeat: u64,
    pub model: Model,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub version: String,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub comparison: ComparisonTable,
}

/// Seed of the k-means initialization for one run.
pub fn fit_seed(scenario_seed: u64, repeat: u64) -> u64 {
    scenario_seed ^ repeat.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Generates, fits and evaluates every (scenario, repeat, model) triple.
///
/// Repeats run in parallel under [`Execution::Parallel`]; each fit inside a
/// repeat runs sequentially. A failing fit is recorded in its row.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RunManifest> {
    if cfg.models.is_empty() {
        return Err(Error::InvalidParams("no models selected".into()));
    }
    for s in &cfg.scenarios {
        s.validate()?;
    }
    let jobs: Vec<(usize, u64)> = cfg
        .scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.repeats as u64).map(move |r| (i, r)))
        .collect();
    let per_job = map_jobs(cfg.execution, &jobs, |&(i, repeat)| {
        let spec = &cfg.scenarios[i];
        let scenario_id = spec.scenario_id();
        let row = |model, res: Result<EvalReport>| BenchRow {
            scenario_id: scenario_id.clone(),
            repeat,
            model,
            error: res.as_ref().err().map(|e| e.to_string()),
            report: res.ok(),
        };
        let data = match generate(spec, repeat) {
            Ok(d) => d,
            Err(e) => {
                let msg = e.to_string();
                return cfg
                    .models
                    .iter()
                    .map(|&m| row(m, Err(Error::InvalidInput(msg.clone()))))
                    .collect::<Vec<_>>();
            }
        };
        let truth = data.activations();
        let seed = fit_seed(spec.seed, repeat);
        cfg.models
            .iter()
            .map(|&m| {
                let res = fit_model(m, &data.values, seed, Execution::Sequential)
                    .and_then(|fit| eval::evaluate(&fit, &truth, repeat, cfg.fpr_max, cfg.record_timings));
                row(m, res)
            })
            .collect()
    });
    let rows: Vec<BenchRow> = per_job.into_iter().flatten().collect();
    let comparison = eval::win_matrix(&scenario_aucs(cfg, &rows), cfg.alpha)?;
    Ok(RunManifest {
        schema_version: SCHEMA_VERSION,
        version: VERSION_TAG.to_string(),
        config: cfg.clone(),
        rows,
        comparison,
    })
}

/// Per-scenario AUC vectors over the repeats in which every model succeeded.
/// Scenarios with fewer than two such repeats are left out.
pub fn scenario_aucs(cfg: &BenchConfig, rows: &[BenchRow]) -> Vec<ScenarioAucs> {
    let mut out = Vec::new();
    for spec in &cfg.scenarios {
        let id = spec.scenario_id();
        let mut by_repeat: BTreeMap<u64, BTreeMap<Model, f64>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.scenario_id == id) {
            if let Some(rep) = &r.report {
                by_repeat.entry(r.repeat).or_default().insert(r.model, rep.auc_restricted);
            }
        }
        let complete: Vec<&BTreeMap<Model, f64>> = by_repeat
            .values()
            .filter(|m| cfg.models.iter().all(|k| m.contains_key(k)))
            .collect();
        if complete.len() < 2 {
            continue;
        }
        let aucs = cfg
            .models
            .iter()
            .map(|&m| (m, complete.iter().map(|r| r[&m]).collect()))
            .collect();
        out.push(ScenarioAucs { scenario_id: id, aucs });
    }
    out
}

/// Re-runs the benchmark described by a manifest.
pub fn replay(manifest: &RunManifest) -> Result<RunManifest> {
    run_benchmark(&manifest.config)
}

pub const RUNS_CSV_HEADER: &str = "scenario_id,model,repeat,auc,pos_frac,neg_frac,seconds,iterations,converged";

/// `runs.csv`: one row per fit. Numeric fields of failed fits, and `seconds`
/// when timings are off, are empty.
pub fn runs_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(RUNS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},", r.scenario_id, r.model, r.repeat);
        match &r.report {
            Some(e) => {
                let secs = e.runtime_seconds.map(|t| t.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    e.auc_restricted, e.pos_fraction, e.neg_fraction, secs, e.iterations, e.converged
                );
            }
            None => s.push_str(",,,,,false\n"),
        }
    }
    s
}

/// `wins.csv`: one row per (scenario, ordered model pair).
pub fn wins_csv(table: &ComparisonTable) -> String {
    let mut s = String::from("scenario_id,model_a,model_b,mean_diff,t,p,win\n");
    for c in &table.pairs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.scenario_id, c.model_a, c.model_b, c.mean_diff, c.t, c.p, c.win
        );
    }
    s
}
