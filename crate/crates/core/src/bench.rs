//! Ground truth, parameter sweeps and their CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use crate::analytics::{pareto_denoise, recall_at_k, speedup_at_recall, DEFAULT_DENOISE_FACTOR};
use crate::engine::{EngineConfig, WorkCounter};
use crate::error::{Error, Result};
use crate::heap::ResultHeap;
use crate::index::{FlatIndex, HnswIndex, IvfFlatIndex, SearchMode, SearchOptions, SearchOutput};
use crate::vectors::{l2_sq, VectorSet};

/// Exact k nearest neighbors of every query by brute force, ties broken by
/// ascending id.
pub fn ground_truth(data: &VectorSet, queries: &VectorSet, k: usize) -> Result<Vec<Vec<u32>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if data.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            actual: queries.dim(),
        });
    }
    let one = |q: &[f32]| {
        let mut heap = ResultHeap::new(k);
        for (i, x) in data.rows().enumerate() {
            heap.push_exact(l2_sq(q, x), i as u32);
        }
        heap.into_sorted().into_iter().map(|e| e.id).collect::<Vec<u32>>()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..queries.len()).into_par_iter().map(|i| one(queries.row(i))).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(queries.rows().map(one).collect())
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// What to sweep: the index and its grid of search parameters.
#[derive(Debug, Clone, Copy)]
pub enum SweepTarget<'a> {
    Flat(&'a FlatIndex),
    Ivf(&'a IvfFlatIndex, &'a [usize]),
    Hnsw(&'a HnswIndex, &'a [usize]),
}

impl SweepTarget<'_> {
    fn names(&self) -> (&'static str, &'static str) {
        match self {
            SweepTarget::Flat(_) => ("flat", "none"),
            SweepTarget::Ivf(..) => ("ivf", "nprobe"),
            SweepTarget::Hnsw(..) => ("hnsw", "efsearch"),
        }
    }

    fn grid(&self) -> Vec<usize> {
        match self {
            SweepTarget::Flat(_) => vec![0],
            SweepTarget::Ivf(_, g) | SweepTarget::Hnsw(_, g) => g.to_vec(),
        }
    }

    fn search(&self, q: &[f32], value: usize, opts: &SearchOptions) -> Result<SearchOutput> {
        match self {
            SweepTarget::Flat(idx) => idx.search(q, opts),
            SweepTarget::Ivf(idx, _) => idx.search(q, value, opts),
            SweepTarget::Hnsw(idx, _) => idx.search(q, value, opts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub k: usize,
    pub repetitions: usize,
    pub engine: EngineConfig,
    pub denoise_factor: f64,
    pub speedup_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k: 10,
            repetitions: 5,
            engine: EngineConfig::default(),
            denoise_factor: DEFAULT_DENOISE_FACTOR,
            speedup_samples: 5,
        }
    }
}

/// Aggregate of one search configuration over a query set.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRun {
    pub recall: f64,
    /// Queries per second, averaged over repetitions.
    pub qps: f64,
    pub work: WorkCounter,
    pub queries: usize,
    pub wall_seconds: f64,
}

impl QueryRun {
    pub fn terms_per_query(&self) -> f64 {
        self.work.terms as f64 / self.queries.max(1) as f64
    }
}

/// Runs `search` over every query `repetitions` times. Recall and counters
/// come from the first repetition; they do not depend on timing.
pub fn run_queries<F>(queries: &VectorSet, truth: &[Vec<u32>], k: usize, repetitions: usize, mut search: F) -> Result<QueryRun>
where
    F: FnMut(&[f32]) -> Result<SearchOutput>,
{
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    if truth.len() != queries.len() {
        return Err(Error::InvalidArgument("one ground-truth row per query required".into()));
    }
    let mut work = WorkCounter::default();
    let mut recall = 0.0;
    let mut qps_sum = 0.0;
    let mut wall = 0.0;
    for rep in 0..repetitions {
        let start = Instant::now();
        for (q, t) in queries.rows().zip(truth) {
            let out = search(q)?;
            if rep == 0 {
                work.add(&out.work);
                recall += recall_at_k(&out.ids(), &t[..k.min(t.len())]);
            }
        }
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        wall += secs;
        qps_sum += queries.len() as f64 / secs;
    }
    Ok(QueryRun {
        recall: recall / queries.len().max(1) as f64,
        qps: qps_sum / repetitions as f64,
        work,
        queries: queries.len(),
        wall_seconds: wall,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: &'static str,
    pub param: &'static str,
    pub value: usize,
    pub mode: SearchMode,
    pub run: QueryRun,
    /// Kept by Pareto denoising within its mode.
    pub frontier: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `(recall, pruned QPS / baseline QPS)` on the common recall range.
    pub speedups: Vec<(f64, f64)>,
}

pub const SWEEP_CSV_HEADER: &str = "row,index,param,value,mode,recall,qps,phi,terms_per_query,frontier,speedup";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "point,{},{},{},{},{:.6},{:.3},{:.6},{:.3},{},",
                p.index,
                p.param,
                p.value,
                p.mode.name(),
                p.run.recall,
                p.run.qps,
                p.run.work.phi(),
                p.run.terms_per_query(),
                p.frontier as u8
            );
        }
        let index = self.points.first().map_or("", |p| p.index);
        for (r, s) in &self.speedups {
            let _ = writeln!(out, "speedup,{index},recall,,pruned,{r:.6},,,,,{s:.6}");
        }
        out
    }
}

/// Sweeps every grid value in both modes, denoises each mode's frontier and
/// reports interpolated speedups.
pub fn run_sweep(target: SweepTarget<'_>, queries: &VectorSet, truth: &[Vec<u32>], cfg: &SweepConfig) -> Result<SweepResult> {
    let grid = target.grid();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    if let SweepTarget::Ivf(idx, g) = target {
        if g.iter().any(|&p| p == 0 || p > idx.n_list()) {
            return Err(Error::InvalidArgument(format!("n_probe grid must lie in 1..={}", idx.n_list())));
        }
    }
    if let SweepTarget::Hnsw(_, g) = target {
        if g.iter().any(|&ef| ef < cfg.k) {
            return Err(Error::InvalidArgument("every ef_search must be at least k".into()));
        }
    }
    let (index, param) = target.names();
    let mut points = Vec::new();
    for &value in &grid {
        for mode in [SearchMode::Baseline, SearchMode::Pruned] {
            let opts = SearchOptions::new(cfg.k, mode).with_engine(cfg.engine);
            let run = run_queries(queries, truth, cfg.k, cfg.repetitions, |q| target.search(q, value, &opts))?;
            points.push(SweepPoint {
                index,
                param,
                value,
                mode,
                run,
                frontier: false,
            });
        }
    }
    let mut curves = Vec::new();
    for mode in [SearchMode::Baseline, SearchMode::Pruned] {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.mode == mode)
            .map(|p| (p.run.recall, p.run.qps))
            .collect();
        let kept = pareto_denoise(&pts, cfg.denoise_factor)?;
        for p in points.iter_mut().filter(|p| p.mode == mode) {
            p.frontier = kept.contains(&(p.run.recall, p.run.qps));
        }
        curves.push(kept);
    }
    let speedups = speedup_at_recall(&curves[0], &curves[1], cfg.speedup_samples)?;
    Ok(SweepResult { points, speedups })
}
