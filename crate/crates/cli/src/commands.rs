use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use log::info;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tailbound::analytics::estimate_alpha_coeffs;
use tailbound::bench::{ground_truth, run_queries, run_sweep, SweepConfig, SweepTarget};
use tailbound::index::{HnswParams, SearchOptions};
use tailbound::io::{self, VecFormat};
use tailbound::persist::{self, AnyIndex};
use tailbound::synth::{white_gaussian, RotatedGaussian};
use tailbound::transform::train_transform;
use tailbound::{
    EngineConfig, FlatIndex, HnswIndex, IvfFlatIndex, LevelSpec, SearchMode, SearchOutput, TrainConfig, Variant,
    VectorSet,
};

use crate::{
    AlphaArgs, BuildArgs, Cmd, GtArgs, IndexKind, Mode, QueryArgs, SearchArgs, SweepArgs, SynthArgs, SynthKind,
    TrainArgs, TransformArgs, VariantArg,
};

pub fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Train(a) => train(a),
        Cmd::Transform(a) => transform(a),
        Cmd::Build(a) => build(a),
        Cmd::Search(a) => search(a),
        Cmd::Gt(a) => gt(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Alpha(a) => alpha(a),
    }
}

fn read_vectors(path: &Path) -> Result<VectorSet> {
    let format = VecFormat::from_path(path).unwrap_or(VecFormat::Fvecs);
    let v = io::read_vectors(path, format).with_context(|| format!("reading {}", path.display()))?;
    ensure!(!v.is_empty(), "{} contains no vectors", path.display());
    Ok(v)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| anyhow::anyhow!("invalid {what} entry {t:?}")))
        .collect()
}

fn parse_levels(spec: Option<&str>, dim: usize) -> Result<LevelSpec> {
    Ok(match spec {
        None => LevelSpec::default_for(dim)?,
        Some(s) if s.contains(',') => LevelSpec::new(dim, parse_list(s, "level threshold")?)?,
        Some(s) => LevelSpec::equal_width(dim, s.trim().parse().context("--levels expects a count or a threshold list")?)?,
    })
}

fn synth(a: SynthArgs) -> Result<()> {
    ensure!(a.n > 0 && a.dim > 0, "--n and --dim must be positive");
    let data = match a.kind {
        SynthKind::Rotated => RotatedGaussian::new(a.dim, a.decay, a.seed).sample(a.n, a.sample_seed),
        SynthKind::White => white_gaussian(a.n, a.dim, 1.0, a.sample_seed),
    };
    io::write_fvecs(&a.out, &data)?;
    info!("wrote {} vectors of dimension {}", data.len(), data.dim());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let cfg = TrainConfig {
        alpha_target: a.alpha_target,
        gamma: a.gamma,
        learning_rate: a.lr,
        max_epochs: a.epochs,
        patience: a.patience,
        train_fraction: a.train_frac,
        val_fraction: a.val_frac,
        batch_size: a.minibatch,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (model, report) = train_transform(&data, &cfg)?;
    persist::save_transform(&a.out, &model)?;
    println!(
        "epochs={} warm_start_loss={:.6} final_loss={:.6} best_val_loss={:.6} kept_warm_start={}",
        report.epochs_run,
        report.warm_start_train_loss,
        report.final_train_loss,
        report.best_val_loss,
        report.kept_warm_start
    );
    Ok(())
}

fn transform(a: TransformArgs) -> Result<()> {
    let model = persist::load_transform(&a.model)?;
    let data = read_vectors(&a.data)?;
    io::write_fvecs(&a.out, &model.apply_all(&data)?)?;
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let model = a.model.as_deref().map(persist::load_transform).transpose()?;
    let levels = parse_levels(a.levels.as_deref(), data.dim())?;
    match a.index {
        IndexKind::Flat => persist::save_flat(&a.out, &FlatIndex::build(&data, model, levels, a.batch)?)?,
        IndexKind::Ivf => persist::save_ivf(&a.out, &IvfFlatIndex::build(&data, model, levels, a.nlist, a.seed, a.batch)?)?,
        IndexKind::Hnsw => {
            let params = HnswParams {
                m: a.m,
                ef_construction: a.efconstruction,
                seed: a.seed,
            };
            persist::save_hnsw(&a.out, &HnswIndex::build(&data, model, levels, params)?)?
        }
    }
    Ok(())
}

fn engine(v: VariantArg) -> EngineConfig {
    EngineConfig::new(match v {
        VariantArg::Point => Variant::PointCentric,
        VariantArg::BatchNoub => Variant::BatchNoUb,
        VariantArg::BatchUb => Variant::BatchUb,
    })
}

/// Queries (optionally subsampled) with their aligned ground truth, if any.
fn load_queries(q: &QueryArgs) -> Result<(VectorSet, Option<Vec<Vec<u32>>>)> {
    ensure!(q.k > 0, "--k must be positive");
    let all = read_vectors(&q.queries)?;
    let truth = match &q.gt {
        Some(p) => {
            let rows = io::read_ivecs(p).with_context(|| format!("reading {}", p.display()))?;
            ensure!(rows.len() == all.len(), "ground truth has {} rows for {} queries", rows.len(), all.len());
            let rows: Vec<Vec<u32>> = rows
                .into_iter()
                .map(|r| r.into_iter().map(|v| u32::try_from(v).context("negative id in ground truth")).collect())
                .collect::<Result<_>>()?;
            ensure!(rows.iter().all(|r| r.len() >= q.k), "ground truth has fewer than k={} ids per query", q.k);
            Some(rows)
        }
        None => None,
    };
    let Some(nq) = q.nq.filter(|&n| n < all.len()) else {
        return Ok((all, truth));
    };
    ensure!(nq > 0, "--nq must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let mut picked = sample(&mut rng, all.len(), nq).into_vec();
    picked.sort_unstable();
    let truth = truth.map(|t| picked.iter().map(|&i| t[i].clone()).collect());
    Ok((all.select(&picked), truth))
}

fn search(a: SearchArgs) -> Result<()> {
    let index = persist::load_index(&a.index)?;
    let (queries, truth) = load_queries(&a.query)?;
    let mode = match a.mode {
        Mode::Baseline => SearchMode::Baseline,
        Mode::Pruned => SearchMode::Pruned,
    };
    let opts = SearchOptions::new(a.query.k, mode).with_engine(engine(a.query.variant));
    let one = |q: &[f32]| -> tailbound::Result<SearchOutput> {
        match &index {
            AnyIndex::Flat(i) => i.search(q, &opts),
            AnyIndex::Ivf(i) => i.search(q, a.nprobe, &opts),
            AnyIndex::Hnsw(i) => i.search(q, a.efsearch, &opts),
        }
    };
    let rows = truth.clone().unwrap_or_else(|| vec![Vec::new(); queries.len()]);
    let run = run_queries(&queries, &rows, a.query.k, a.reps, one)?;
    let recall = if truth.is_some() { format!("{:.6}", run.recall) } else { String::new() };
    println!("mode,queries,recall,qps,phi,terms_per_query");
    println!(
        "{},{},{},{:.3},{:.6},{:.3}",
        mode.name(),
        queries.len(),
        recall,
        run.qps,
        run.work.phi(),
        run.terms_per_query()
    );
    if let Some(out) = &a.out {
        let results: Vec<Vec<i32>> = queries
            .rows()
            .map(|q| Ok(one(q)?.ids().into_iter().map(|id| id as i32).collect()))
            .collect::<Result<_>>()?;
        io::write_ivecs(out, &results)?;
    }
    Ok(())
}

fn gt(a: GtArgs) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let queries = read_vectors(&a.queries)?;
    ensure!(a.k > 0 && a.k <= data.len(), "--k must lie in 1..={}", data.len());
    let truth = ground_truth(&data, &queries, a.k)?;
    let rows: Vec<Vec<i32>> = truth.into_iter().map(|r| r.into_iter().map(|v| v as i32).collect()).collect();
    io::write_ivecs(&a.out, &rows)?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let index = persist::load_index(&a.index)?;
    let (queries, truth) = load_queries(&a.query)?;
    let truth = match (truth, &a.data) {
        (Some(t), _) => t,
        (None, Some(p)) => ground_truth(&read_vectors(p)?, &queries, a.query.k)?,
        (None, None) => bail!("sweep needs --gt or --data for recall"),
    };
    let grid: Option<Vec<usize>> = a.grid.as_deref().map(|g| parse_list(g, "grid")).transpose()?;
    let k = a.query.k;
    let g: Vec<usize>;
    let target = match &index {
        AnyIndex::Flat(i) => {
            ensure!(grid.is_none(), "--grid does not apply to a flat index");
            SweepTarget::Flat(i)
        }
        AnyIndex::Ivf(i) => {
            g = grid.unwrap_or_else(|| {
                let mut g: Vec<usize> = std::iter::successors(Some(1), |v| Some(v * 2)).take_while(|&v| v < i.n_list()).collect();
                g.push(i.n_list());
                g
            });
            SweepTarget::Ivf(i, &g)
        }
        AnyIndex::Hnsw(i) => {
            g = grid.unwrap_or_else(|| [1, 2, 4, 8, 16].iter().map(|m| m * k.max(10)).collect());
            SweepTarget::Hnsw(i, &g)
        }
    };
    let cfg = SweepConfig {
        k,
        repetitions: a.reps,
        engine: engine(a.query.variant),
        denoise_factor: a.denoise,
        ..SweepConfig::default()
    };
    let result = run_sweep(target, &queries, &truth, &cfg)?;
    write_output(a.out.as_deref(), &result.to_csv())
}

fn alpha(a: AlphaArgs) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let coeffs = match &a.model {
        Some(p) => persist::load_transform(p)?.apply_all(&data)?,
        None => data,
    };
    let p: Vec<f64> = parse_list(&a.p, "p")?;
    let report = estimate_alpha_coeffs(&coeffs, &p)?;
    write_output(a.out.as_deref(), &report.to_csv())
}
