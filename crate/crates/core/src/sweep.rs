//! `(p1, p2)` grid experiments.
//!
//! Every cell projects the same realizations, ranks them and records one
//! metric value per realization. Realization `r` of a synthetic source is
//! generated from a seed derived from `(master_seed, r)` only, so cells are
//! paired and any cell can be recomputed on its own.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{BenchmarkSet, RatingGraph};
use crate::metrics::{self, MetricError};
use crate::projection::{project_graph, ProjectionError, ProjectionParams};
use crate::ranking::{self, Algorithm, RankError, RankingConfig};
use crate::synth::{self, SynthError, SynthSpec};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("real data is deterministic: use 1 realization, not {0}")]
    RealizationsOnRealData(usize),
    #[error("need at least one realization")]
    NoRealizations,
    #[error("correlation metric needs synthetic ground truth")]
    CorrelationWithoutTruth,
    #[error("no converged cell in grid")]
    NoConvergedCell,
    #[error("missing sweep: {0}")]
    MissingSweep(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Ranking score of the benchmark items; lower is better.
    Rs,
    /// Pearson(R_i, e_i); more negative is better.
    Correlation,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Rs => "rs",
            Metric::Correlation => "corr",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rs" => Ok(Metric::Rs),
            "corr" | "correlation" => Ok(Metric::Correlation),
            other => Err(format!("unknown metric `{other}` (expected rs|corr)")),
        }
    }
}

/// Where the rating networks come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Real {
        graph: RatingGraph,
        benchmark: BenchmarkSet,
    },
    Synthetic {
        spec: SynthSpec,
        /// Benchmark = this top fraction of items by intrinsic quality.
        benchmark_fraction: f64,
    },
}

impl DataSource {
    pub fn synthetic(spec: SynthSpec) -> Self {
        DataSource::Synthetic {
            spec,
            benchmark_fraction: 0.05,
        }
    }
}

/// One network ready to be projected and ranked.
#[derive(Debug, Clone)]
pub struct Realization {
    pub graph: RatingGraph,
    pub benchmark: BenchmarkSet,
    /// `e_i` per user, synthetic sources only.
    pub true_errors: Option<Vec<f64>>,
}

/// Seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn realize(source: &DataSource, index: usize, master_seed: u64) -> Result<Realization, SweepError> {
    match source {
        DataSource::Real { graph, benchmark } => Ok(Realization {
            graph: graph.clone(),
            benchmark: benchmark.clone(),
            true_errors: None,
        }),
        DataSource::Synthetic {
            spec,
            benchmark_fraction,
        } => {
            let spec = SynthSpec {
                seed: realization_seed(master_seed, index),
                ..spec.clone()
            };
            let net = synth::generate(&spec)?;
            let benchmark = metrics::top_fraction_benchmark(&net.truth, *benchmark_fraction)?;
            Ok(Realization {
                graph: net.graph,
                benchmark,
                true_errors: Some(net.truth.error_magnitude),
            })
        }
    }
}

/// Metric value for one realization at one projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub converged: bool,
}

pub fn evaluate(
    realization: &Realization,
    cfg: &RankingConfig,
    params: ProjectionParams,
    metric: Metric,
) -> Result<Evaluation, SweepError> {
    let projected;
    let graph = if params.is_identity() {
        &realization.graph
    } else {
        projected = project_graph(&realization.graph, params);
        &projected
    };
    let result = ranking::rank(graph, cfg)?;
    let value = match metric {
        Metric::Rs => metrics::ranking_score(&result.qualities, &realization.benchmark)?.value,
        Metric::Correlation => {
            let errors = realization
                .true_errors
                .as_ref()
                .ok_or(SweepError::CorrelationWithoutTruth)?;
            metrics::reputation_error_correlation(&result.reputations, errors)?.value
        }
    };
    Ok(Evaluation {
        value,
        converged: result.converged,
    })
}

/// The `p1` and `p2` values to visit.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub p1_values: Vec<f64>,
    pub p2_values: Vec<f64>,
}

impl GridSpec {
    /// `{0, step, …, 1}` on both axes. `1/step` must be an integer.
    pub fn uniform(step: f64) -> Result<Self, SweepError> {
        let values = axis(step)?;
        Ok(Self {
            p1_values: values.clone(),
            p2_values: values,
        })
    }

    /// Varies `p1` over the uniform axis with `p2` fixed.
    pub fn p1_slice(step: f64, p2: f64) -> Result<Self, SweepError> {
        Self::new(axis(step)?, vec![p2])
    }

    /// Varies `p2` over the uniform axis with `p1` fixed.
    pub fn p2_slice(step: f64, p1: f64) -> Result<Self, SweepError> {
        Self::new(vec![p1], axis(step)?)
    }

    pub fn point(p1: f64, p2: f64) -> Result<Self, SweepError> {
        Self::new(vec![p1], vec![p2])
    }

    /// Sorts and de-duplicates both axes; every value must lie in `[0, 1]`.
    pub fn new(mut p1_values: Vec<f64>, mut p2_values: Vec<f64>) -> Result<Self, SweepError> {
        for values in [&mut p1_values, &mut p2_values] {
            if values.is_empty() {
                return Err(SweepError::InvalidGrid("empty axis".into()));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(SweepError::InvalidGrid(format!("value {v} outside [0, 1]")));
            }
            values.sort_by(f64::total_cmp);
            values.dedup();
        }
        Ok(Self {
            p1_values,
            p2_values,
        })
    }

    pub fn contains(&self, p1: f64, p2: f64) -> bool {
        self.p1_values.contains(&p1) && self.p2_values.contains(&p2)
    }

    pub fn len(&self) -> usize {
        self.p1_values.len() * self.p2_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn axis(step: f64) -> Result<Vec<f64>, SweepError> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || ((1.0 / step) - n).abs() > 1e-9 {
        return Err(SweepError::InvalidGrid(format!(
            "grid step {step} must divide 1 evenly"
        )));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Per-realization values of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub p1: f64,
    pub p2: f64,
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
}

impl Cell {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation; 0 for a single realization.
    pub fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    pub fn converged_fraction(&self) -> f64 {
        self.converged.iter().filter(|&&c| c).count() as f64 / self.converged.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub grid: GridSpec,
    /// Row-major: `cells[i * p2_values.len() + j]` is `(p1_values[i], p2_values[j])`.
    pub cells: Vec<Cell>,
    pub metric: Metric,
    pub algorithm: Algorithm,
    pub tag: String,
}

impl SweepGrid {
    pub fn cell(&self, p1: f64, p2: f64) -> Option<&Cell> {
        let i = self.grid.p1_values.iter().position(|&v| v == p1)?;
        let j = self.grid.p2_values.iter().position(|&v| v == p2)?;
        self.cells.get(i * self.grid.p2_values.len() + j)
    }

    /// Long-form CSV `p1,p2,mean,std,n,converged_frac`.
    pub fn write_csv(&self, header: &[String], mut out: impl Write) -> std::io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "p1,p2,mean,std,n,converged_frac")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.p1,
                c.p2,
                c.mean(),
                c.std(),
                c.n(),
                c.converged_fraction()
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub algorithm: RankingConfig,
    pub metric: Metric,
    pub grid: GridSpec,
    pub realizations: usize,
    pub master_seed: u64,
    pub tag: String,
}

fn check_plan(source: &DataSource, plan: &SweepPlan) -> Result<(), SweepError> {
    plan.algorithm.validate()?;
    if plan.realizations == 0 {
        return Err(SweepError::NoRealizations);
    }
    if let DataSource::Real { .. } = source {
        if plan.realizations != 1 {
            return Err(SweepError::RealizationsOnRealData(plan.realizations));
        }
        if plan.metric == Metric::Correlation {
            return Err(SweepError::CorrelationWithoutTruth);
        }
    }
    if plan.grid.is_empty() {
        return Err(SweepError::InvalidGrid("empty grid".into()));
    }
    Ok(())
}

pub fn realize_all(
    source: &DataSource,
    realizations: usize,
    master_seed: u64,
) -> Result<Vec<Realization>, SweepError> {
    (0..realizations)
        .into_par_iter()
        .map(|r| realize(source, r, master_seed))
        .collect()
}

/// Evaluates every cell of `plan.grid` on every realization.
pub fn run_sweep(source: &DataSource, plan: &SweepPlan) -> Result<SweepGrid, SweepError> {
    check_plan(source, plan)?;
    let realizations = realize_all(source, plan.realizations, plan.master_seed)?;
    sweep_realizations(&realizations, plan)
}

/// Same as [`run_sweep`] on realizations that were generated already.
pub fn sweep_realizations(
    realizations: &[Realization],
    plan: &SweepPlan,
) -> Result<SweepGrid, SweepError> {
    if realizations.is_empty() {
        return Err(SweepError::NoRealizations);
    }
    let coords: Vec<(f64, f64)> = plan
        .grid
        .p1_values
        .iter()
        .flat_map(|&p1| plan.grid.p2_values.iter().map(move |&p2| (p1, p2)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..coords.len())
        .flat_map(|c| (0..realizations.len()).map(move |r| (c, r)))
        .collect();
    let evaluations: Vec<Evaluation> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (p1, p2) = coords[c];
            let params = ProjectionParams::new(p1, p2)?;
            evaluate(&realizations[r], &plan.algorithm, params, plan.metric)
        })
        .collect::<Result<_, SweepError>>()?;

    let n = realizations.len();
    let cells = coords
        .iter()
        .enumerate()
        .map(|(c, &(p1, p2))| {
            let slice = &evaluations[c * n..(c + 1) * n];
            Cell {
                p1,
                p2,
                values: slice.iter().map(|e| e.value).collect(),
                converged: slice.iter().map(|e| e.converged).collect(),
            }
        })
        .collect();
    Ok(SweepGrid {
        grid: plan.grid.clone(),
        cells,
        metric: plan.metric,
        algorithm: plan.algorithm.algorithm,
        tag: plan.tag.clone(),
    })
}

/// Recomputes a single cell from scratch.
pub fn evaluate_cell(
    source: &DataSource,
    plan: &SweepPlan,
    p1: f64,
    p2: f64,
) -> Result<Cell, SweepError> {
    let single = SweepPlan {
        grid: GridSpec::point(p1, p2)?,
        ..plan.clone()
    };
    let grid = run_sweep(source, &single)?;
    Ok(grid.cells.into_iter().next().expect("one cell"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub p1: f64,
    pub p2: f64,
    pub value: f64,
}

/// Best cell by mean metric (lowest for both metrics). Cells where no
/// realization converged are skipped. Ties go to the smallest `p2`, then
/// the smallest `p1`.
pub fn find_optimum(grid: &SweepGrid) -> Result<Optimum, SweepError> {
    grid.cells
        .iter()
        .filter(|c| c.converged.iter().any(|&ok| ok))
        .map(|c| Optimum {
            p1: c.p1,
            p2: c.p2,
            value: c.mean(),
        })
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.p2.total_cmp(&b.p2))
                .then(a.p1.total_cmp(&b.p1))
        })
        .ok_or(SweepError::NoConvergedCell)
}

/// Original vs. projected-at-optimum score for one algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub original: f64,
    pub projected: f64,
    pub optimum: Optimum,
}

pub fn compare(grid: &SweepGrid) -> Result<Comparison, SweepError> {
    let original = grid
        .cell(0.5, 0.5)
        .ok_or_else(|| {
            SweepError::MissingSweep(format!("{}/{}: grid lacks (0.5, 0.5)", grid.tag, grid.algorithm))
        })?
        .mean();
    let optimum = find_optimum(grid)?;
    Ok(Comparison {
        original,
        projected: optimum.value,
        optimum,
    })
}

/// Rows per dataset or case, one `(original, projected)` pair per algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<(String, Vec<Comparison>)>,
}

/// Builds the comparison table from finished sweeps keyed by
/// `(tag, algorithm)`.
pub fn compare_table(
    tags: &[String],
    algorithms: &[Algorithm],
    sweeps: &HashMap<(String, Algorithm), SweepGrid>,
) -> Result<CompareTable, SweepError> {
    let mut rows = Vec::with_capacity(tags.len());
    for tag in tags {
        let mut row = Vec::with_capacity(algorithms.len());
        for &alg in algorithms {
            let grid = sweeps
                .get(&(tag.clone(), alg))
                .ok_or_else(|| SweepError::MissingSweep(format!("{tag}/{alg}")))?;
            row.push(compare(grid)?);
        }
        rows.push((tag.clone(), row));
    }
    Ok(CompareTable {
        algorithms: algorithms.to_vec(),
        rows,
    })
}

impl CompareTable {
    pub fn write_csv(&self, header: &[String], mut out: impl Write) -> std::io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        write!(out, "dataset")?;
        for alg in &self.algorithms {
            write!(out, ",{alg}_original,{alg}_projected,{alg}_p1,{alg}_p2")?;
        }
        writeln!(out)?;
        for (tag, row) in &self.rows {
            write!(out, "{tag}")?;
            for c in row {
                write!(
                    out,
                    ",{},{},{},{}",
                    c.original, c.projected, c.optimum.p1, c.optimum.p2
                )?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
