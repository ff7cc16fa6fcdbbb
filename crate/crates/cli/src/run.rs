use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use robust_design::baseline::{sequential_pipeline, PipelineConfig, PipelineResult, Ranker};
use robust_design::data::{Dataset, FoldAssignment, RoleSchema, VariableRole};
use robust_design::design::{DesignSolution, OptimizerConfig};
use robust_design::rng::derive_seed;
use robust_design::search::{
    default_folds, ga_search, BoundsPolicy, FitnessConfig, FitnessEvaluator, FitnessWeights, SearchResult,
};
use robust_design::synth::{
    run_experiment, write_aggregates_csv, write_replications_csv, ExperimentOptions, ExperimentSetting,
    Method, MetricsReport,
};
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

const FOLD_STREAM: u64 = 3;
const GA_STREAM: u64 = 4;
const FOREST_STREAM: u64 = 5;
const OPTIMIZER_STREAM: u64 = 6;

/// What a successful run produced.
#[derive(Debug)]
pub struct Execution {
    pub artifacts: Vec<PathBuf>,
    pub elapsed: Duration,
}

/// Validate `cfg` and run it, writing artifacts under `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Execution, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(out).map_err(CliError::Output)?;
    let run = || match cfg.mode {
        Mode::Synth => synth(cfg, out),
        Mode::Analyze => analyze(cfg, out),
    };
    let artifacts = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(run),
        None => run(),
    }?;
    Ok(Execution {
        artifacts,
        elapsed: start.elapsed(),
    })
}

/// Write `body` to `path`, creating parent directories.
fn emit(path: PathBuf, body: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::Output)?;
    }
    fs::write(&path, body).map_err(CliError::Output)?;
    written.push(path);
    Ok(())
}

fn provenance(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![("config_digest", cfg.digest()), ("seed", cfg.seed.to_string())]
}

fn header(cfg: &RunConfig) -> String {
    let mode = match cfg.mode {
        Mode::Synth => "synth",
        Mode::Analyze => "analyze",
    };
    format!("config_digest: {}\nseed: {}\nmode: {mode}\n\n", cfg.digest(), cfg.seed)
}

fn weights(cfg: &RunConfig) -> FitnessWeights {
    FitnessWeights {
        constraint: cfg.fitness.constraint_weight,
        cardinality: cfg.fitness.cardinality_weight,
    }
}

fn settings(cfg: &RunConfig) -> Result<Vec<ExperimentSetting>, CliError> {
    let s = cfg.synth.as_ref().expect("validated");
    let mut out = s
        .settings
        .iter()
        .map(|&id| ExperimentSetting::preset(id))
        .collect::<robust_design::Result<Vec<_>>>()?;
    out.extend(s.custom.iter().cloned());
    for setting in &mut out {
        if let Some(r) = s.runs {
            setting.runs = r;
        }
        if let Some(k) = s.sigma_eps_scale {
            *setting = setting.clone().with_sigma_eps_scale(k);
        }
    }
    Ok(out)
}

fn experiment_options(cfg: &RunConfig) -> ExperimentOptions {
    let mut o = ExperimentOptions::default();
    let f = &cfg.fitness;
    o.fitness.weights = weights(cfg);
    o.fitness.scoring = f.scoring.into();
    o.fitness.optimizer.starts = f.optimizer_starts;
    o.fitness.lattice_points = f.lattice_points;
    o.pipeline.optimizer.starts = f.optimizer_starts;
    o.pipeline.lattice_points = f.lattice_points;
    if let Some(b) = f.bounds {
        o.fitness.bounds = b.into();
        o.pipeline.bounds = b.into();
    }
    o.pipeline.bins = cfg.baselines.bins;
    o.pipeline.forest = cfg.baselines.forest.clone();
    o.ga = cfg.ga.config(0);
    o.folds = f.folds;
    o
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let base = experiment_options(cfg);
    let mut methods = vec![Method::Proposed];
    methods.extend(cfg.baselines.enabled.iter().copied());

    let mut reports: Vec<MetricsReport> = Vec::new();
    for s in settings(cfg)? {
        let mut opts = base.clone();
        if cfg.ga.population.is_some() || cfg.ga.generations.is_some() {
            opts.ga_size = Some((
                cfg.ga.population.unwrap_or(s.ga_pop),
                cfg.ga.generations.unwrap_or(s.ga_gens),
            ));
        }
        let started = Instant::now();
        let report = run_experiment(&s, &methods, cfg.seed, &opts)?;
        log::info!("setting {} finished in {:.1?}", s.id, started.elapsed());
        reports.push(report);
    }

    let prefix = provenance(cfg);
    let mut written = Vec::new();
    for rep in &reports {
        let dir = out.join(format!("setting_{:02}", rep.setting.id));
        write_tables(std::slice::from_ref(rep), &prefix, &dir, &mut written)?;
        let text = format!("{}{}", header(cfg), rep.summary());
        emit(dir.join("summary.txt"), text.as_bytes(), &mut written)?;
    }
    write_tables(&reports, &prefix, out, &mut written)?;
    let mut text = header(cfg);
    for rep in &reports {
        text.push_str(&rep.summary());
        text.push('\n');
    }
    emit(out.join("summary.txt"), text.as_bytes(), &mut written)?;
    Ok(written)
}

fn write_tables(
    reports: &[MetricsReport],
    prefix: &[(&str, String)],
    dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let mut agg = Vec::new();
    write_aggregates_csv(reports, prefix, &mut agg)?;
    emit(dir.join("aggregates.csv"), &agg, written)?;
    let mut reps = Vec::new();
    write_replications_csv(reports, prefix, &mut reps)?;
    emit(dir.join("replications.csv"), &reps, written)
}

#[derive(Serialize)]
struct BaselineDocument<'a> {
    method: &'static str,
    selected: &'a [String],
    ranking: &'a robust_design::baseline::RankedVariables,
    model: robust_design::rsm::ModelDocument,
    solution: &'a DesignSolution,
}

#[derive(Serialize)]
struct AnalysisDocument<'a> {
    config_digest: String,
    seed: u64,
    rows: usize,
    goal: robust_design::design::DesignGoal,
    pool: &'a [String],
    noise_centering: Option<&'a robust_design::data::Standardization>,
    selected: &'a [String],
    objective: f64,
    components: robust_design::search::FitnessComponents,
    model: robust_design::rsm::ModelDocument,
    solution: &'a DesignSolution,
    patterns_evaluated: usize,
    baselines: Vec<BaselineDocument<'a>>,
}

const COLLINEARITY_WARNING: f64 = 1e6;

fn load_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let d = cfg.data.as_ref().expect("validated");
    let mut schema = RoleSchema::new();
    for c in &d.controls {
        schema.push(c.clone(), VariableRole::Control);
    }
    for z in &d.noise {
        schema.push(z.clone(), VariableRole::Noise);
    }
    schema.push(d.response.clone(), VariableRole::Response);
    let path = cfg.data_path().expect("validated");
    let data = Dataset::load(path, &schema)?.standardize_noise(false);
    let condition = data.collinearity_condition();
    if condition > COLLINEARITY_WARNING {
        log::warn!("controls and noise are nearly collinear (condition number {condition:.3e})");
    }
    Ok(data)
}

fn analyze(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let data = load_data(cfg)?;
    let goal = cfg.goal.as_ref().expect("validated").goal()?;
    let pool = data.control_ids();
    let seed = cfg.seed;
    let folds = match cfg.fitness.folds {
        Some(k) => FoldAssignment::new(data.n(), k, derive_seed(seed, &[FOLD_STREAM]))?,
        None => default_folds(data.n(), derive_seed(seed, &[FOLD_STREAM]))?,
    };
    let bounds: BoundsPolicy = cfg.fitness.bounds.map(Into::into).unwrap_or(BoundsPolicy::Observed);
    let optimizer = OptimizerConfig {
        starts: cfg.fitness.optimizer_starts,
        seed: derive_seed(seed, &[OPTIMIZER_STREAM]),
        ..OptimizerConfig::default()
    };
    let fitness = FitnessConfig {
        weights: weights(cfg),
        scoring: cfg.fitness.scoring.into(),
        optimizer: optimizer.clone(),
        bounds,
        lattice_points: cfg.fitness.lattice_points,
    };
    let eval = FitnessEvaluator::new(&data, goal, pool.clone(), folds, fitness)?;
    let started = Instant::now();
    let search = ga_search(&eval, &cfg.ga.config(derive_seed(seed, &[GA_STREAM])))?;
    log::info!("search finished in {:.1?}", started.elapsed());

    let count = cfg.baselines.select_count.unwrap_or(search.fitness.selected.len().max(1));
    let pipeline = PipelineConfig {
        bins: cfg.baselines.bins,
        forest: robust_design::baseline::RfConfig {
            seed: derive_seed(seed, &[FOREST_STREAM]),
            ..cfg.baselines.forest.clone()
        },
        optimizer,
        bounds,
        lattice_points: cfg.fitness.lattice_points,
    };
    let mut baselines: Vec<PipelineResult> = Vec::new();
    let mut enabled = cfg.baselines.enabled.clone();
    enabled.sort();
    enabled.dedup();
    for m in enabled {
        let ranker = match m {
            Method::Proposed => continue,
            Method::MiFilter => Ranker::MutualInformation,
            Method::RandomForest => Ranker::RandomForest,
        };
        baselines.push(sequential_pipeline(&data, &pool, ranker, count, &goal, &pipeline)?);
    }

    let mut written = Vec::new();
    let doc = AnalysisDocument {
        config_digest: cfg.digest(),
        seed,
        rows: data.n(),
        goal,
        pool: &pool,
        noise_centering: data.standardization(),
        selected: &search.fitness.selected,
        objective: search.fitness.objective,
        components: search.fitness.components,
        model: search.fitness.model.to_document(),
        solution: &search.fitness.solution,
        patterns_evaluated: eval.computed(),
        baselines: baselines
            .iter()
            .map(|b| BaselineDocument {
                method: b.ranker.label(),
                selected: &b.selected,
                ranking: &b.ranking,
                model: b.model.to_document(),
                solution: &b.solution,
            })
            .collect(),
    };
    let mut json = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Output(e.into()))?;
    json.push(b'\n');
    emit(out.join("model.json"), &json, &mut written)?;
    emit(out.join("history.csv"), &history_csv(cfg, &search)?, &mut written)?;
    let text = analysis_summary(cfg, &data, &search, &baselines);
    emit(out.join("summary.txt"), text.as_bytes(), &mut written)?;
    Ok(written)
}

fn history_csv(cfg: &RunConfig, search: &SearchResult) -> Result<Vec<u8>, CliError> {
    let prefix = provenance(cfg);
    let mut w = csv::Writer::from_writer(Vec::new());
    let cols = ["generation", "best_objective", "mean_objective", "best_bits"];
    w.write_record(prefix.iter().map(|(k, _)| k.to_string()).chain(cols.iter().map(|c| c.to_string())))
        .map_err(robust_design::Error::from)?;
    for g in &search.history {
        let rest = [
            g.generation.to_string(),
            g.best_objective.to_string(),
            g.mean_objective.to_string(),
            g.best_bits.clone(),
        ];
        w.write_record(prefix.iter().map(|(_, v)| v.clone()).chain(rest))
            .map_err(robust_design::Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.into_error()))
}

fn describe(out: &mut String, ids: &[String], s: &DesignSolution) {
    for (id, v) in ids.iter().zip(&s.x_hat) {
        let _ = writeln!(out, "    {id} = {v}");
    }
    let _ = writeln!(
        out,
        "  predicted mean {}  predicted variance {}  |mean - t| {}  converged {}",
        s.predicted_mean, s.predicted_variance, s.constraint_residual, s.converged
    );
}

fn analysis_summary(cfg: &RunConfig, data: &Dataset, search: &SearchResult, baselines: &[PipelineResult]) -> String {
    let f = &search.fitness;
    let c = &f.components;
    let mut out = header(cfg);
    let _ = writeln!(out, "rows: {}  pool: {}", data.n(), data.control_ids().join(" "));
    let _ = writeln!(out, "\nproposed: selected [{}]", f.selected.join(" "));
    let _ = writeln!(
        out,
        "  objective {}  (transmitted {}  cv_sigma2 {}  constraint {}  cardinality {})",
        f.objective, c.transmitted_variance, c.cv_sigma2, c.constraint_penalty, c.cardinality_penalty
    );
    describe(&mut out, &f.selected, &f.solution);
    for b in baselines {
        let _ = writeln!(out, "\n{}: selected [{}]", b.ranker.label(), b.selected.join(" "));
        describe(&mut out, &b.selected, &b.solution);
    }
    out
}
