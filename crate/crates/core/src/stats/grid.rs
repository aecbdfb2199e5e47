use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{stratified_folds, Corpus, FoldPlan, Label};
use crate::error::{Error, Result};
use crate::methods::{fit_and_score, FeatureContext, Method};
use crate::metrics::{evaluate, Metric, MetricReport};

pub const GRID_CSV_HEADER: [&str; 5] = ["dataset", "method_id", "metric", "mean", "n_defined"];
pub const EVALUATION_CSV_HEADER: [&str; 6] = ["dataset", "method_id", "repetition", "fold", "metric", "value"];

#[derive(Debug, Clone, Copy)]
pub struct GridDataset<'a> {
    pub corpus: &'a Corpus,
    pub context: &'a FeatureContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEvaluation {
    pub dataset: String,
    pub method_id: u32,
    pub repetition: usize,
    pub fold: usize,
    /// `None` when training failed on this fold.
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: Option<f64>,
    pub n_defined: usize,
    pub n_failed: usize,
}

/// Per-(dataset, method, metric) means over all repetitions and folds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentGrid {
    pub repetitions: usize,
    pub k: usize,
    pub seed: u64,
    cells: BTreeMap<(String, u32, Metric), CellStat>,
}

impl ExperimentGrid {
    pub fn new(repetitions: usize, k: usize, seed: u64) -> Self {
        ExperimentGrid {
            repetitions,
            k,
            seed,
            cells: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, dataset: &str, method_id: u32, metric: Metric, cell: CellStat) {
        self.cells.insert((dataset.to_string(), method_id, metric), cell);
    }

    pub fn cell(&self, dataset: &str, method_id: u32, metric: Metric) -> Option<&CellStat> {
        self.cells.get(&(dataset.to_string(), method_id, metric))
    }

    pub fn value(&self, dataset: &str, method_id: u32, metric: Metric) -> Option<f64> {
        self.cell(dataset, method_id, metric).and_then(|c| c.mean)
    }

    pub fn datasets(&self) -> Vec<String> {
        let mut d: Vec<String> = self.cells.keys().map(|k| k.0.clone()).collect();
        d.dedup();
        d
    }

    pub fn methods(&self) -> Vec<u32> {
        let mut m: Vec<u32> = self.cells.keys().map(|k| k.1).collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Accumulates fold evaluations into means, skipping undefined values.
    pub fn from_evaluations(evals: &[FoldEvaluation], repetitions: usize, k: usize, seed: u64) -> Self {
        let mut acc: BTreeMap<(String, u32, Metric), (f64, CellStat)> = BTreeMap::new();
        for e in evals {
            for metric in Metric::ALL {
                let entry = acc
                    .entry((e.dataset.clone(), e.method_id, metric))
                    .or_default();
                match &e.report {
                    None => entry.1.n_failed += 1,
                    Some(r) => {
                        if let Some(v) = r.get(metric) {
                            entry.0 += v;
                            entry.1.n_defined += 1;
                        }
                    }
                }
            }
        }
        let cells = acc
            .into_iter()
            .map(|(key, (sum, mut cell))| {
                cell.mean = (cell.n_defined > 0).then(|| sum / cell.n_defined as f64);
                (key, cell)
            })
            .collect();
        ExperimentGrid {
            repetitions,
            k,
            seed,
            cells,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(GRID_CSV_HEADER)?;
        for ((dataset, method, metric), cell) in &self.cells {
            w.write_record([
                dataset.clone(),
                method.to_string(),
                metric.as_str().to_string(),
                format_value(cell.mean),
                cell.n_defined.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<ExperimentGrid> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != GRID_CSV_HEADER {
            return Err(Error::Format(format!("unexpected grid header: {headers:?}")));
        }
        let mut grid = ExperimentGrid::default();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::MalformedRecord {
                line: line + 2,
                message: format!("bad {what}"),
            };
            let method: u32 = rec[1].parse().map_err(|_| bad("method_id"))?;
            let metric = Metric::parse(&rec[2]).ok_or_else(|| bad("metric"))?;
            let mean = parse_value(&rec[3]).map_err(|_| bad("mean"))?;
            let n_defined: usize = rec[4].parse().map_err(|_| bad("n_defined"))?;
            grid.insert(
                &rec[0],
                method,
                metric,
                CellStat {
                    mean,
                    n_defined,
                    n_failed: 0,
                },
            );
        }
        Ok(grid)
    }
}

/// Shortest round-trip formatting, or `NA`.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "NA".into(),
    }
}

pub fn parse_value(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s == "NA" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

pub fn write_evaluations_csv<W: Write>(evals: &[FoldEvaluation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVALUATION_CSV_HEADER)?;
    for e in evals {
        for metric in Metric::ALL {
            let value = e.report.and_then(|r| r.get(metric));
            w.write_record([
                e.dataset.clone(),
                e.method_id.to_string(),
                e.repetition.to_string(),
                e.fold.to_string(),
                metric.as_str().to_string(),
                format_value(value),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Trains on one split and evaluates on its complement.
pub fn evaluate_split(
    method: &Method,
    context: &FeatureContext,
    labels: &[Label],
    train: &[usize],
    test: &[usize],
) -> Result<MetricReport> {
    let (_, scores) = fit_and_score(method, context, labels, train, test)?;
    let test_labels: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
    let train_relevant = train.iter().filter(|&&i| labels[i].is_relevant()).count();
    evaluate(&scores, &test_labels, 0.0, train_relevant, train.len() - train_relevant)
}

pub struct GridRun {
    pub grid: ExperimentGrid,
    pub evaluations: Vec<FoldEvaluation>,
    pub plans: Vec<FoldPlan>,
}

/// Cross-validates every method on every dataset.
///
/// Tasks run on the current rayon pool; results are assembled in a fixed
/// (dataset, repetition, fold, method) order, so the output does not depend on
/// the number of workers.
pub fn run_experiment_grid(
    datasets: &[GridDataset],
    methods: &[Method],
    repetitions: usize,
    k: usize,
    seed: u64,
) -> Result<GridRun> {
    let mut plans = Vec::with_capacity(datasets.len());
    let mut labels = Vec::with_capacity(datasets.len());
    for d in datasets {
        if !d.corpus.is_fully_labeled() {
            return Err(Error::Unlabeled(d.corpus.name().to_string()));
        }
        if d.context.n() != d.corpus.len() {
            return Err(Error::DimensionMismatch {
                expected: d.corpus.len(),
                got: d.context.n(),
            });
        }
        plans.push(stratified_folds(d.corpus, repetitions, k, seed)?);
        labels.push(d.corpus.labels()?);
    }
    let mut tasks = Vec::new();
    for (di, plan) in plans.iter().enumerate() {
        for (rep, fold) in plan.splits() {
            for m in methods {
                tasks.push((di, rep, fold, m));
            }
        }
    }
    let evaluations: Vec<FoldEvaluation> = tasks
        .par_iter()
        .map(|&(di, rep, fold, method)| {
            let plan = &plans[di];
            let test = plan.test_indices(rep, fold);
            let train = plan.train_indices(rep, fold);
            let result = evaluate_split(method, datasets[di].context, &labels[di], &train, test);
            let name = datasets[di].corpus.name().to_string();
            match result {
                Ok(report) => FoldEvaluation {
                    dataset: name,
                    method_id: method.id,
                    repetition: rep,
                    fold,
                    report: Some(report),
                    error: None,
                },
                Err(e) => {
                    log::warn!("{name} method {} rep {rep} fold {fold}: {e}", method.id);
                    FoldEvaluation {
                        dataset: name,
                        method_id: method.id,
                        repetition: rep,
                        fold,
                        report: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let grid = ExperimentGrid::from_evaluations(&evaluations, repetitions, k, seed);
    Ok(GridRun {
        grid,
        evaluations,
        plans,
    })
}
