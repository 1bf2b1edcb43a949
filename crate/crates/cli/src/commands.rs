//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use pvf_core::data::{ingest_csv, stratified_split, Dataset};
use pvf_core::experiments::config::{load_config, FileConfig, SelectSection};
use pvf_core::experiments::real::RealConfig;
use pvf_core::experiments::synthetic::SweepConfig;
use pvf_core::experiments::{
    load_real_dataset, run_real_protocol, run_sweep, sensitivity_report,
};
use pvf_core::metrics::{confusion, ie_counting, ConfusionCounts, MetricSpec};
use pvf_core::models::{
    logistic_pair_pool, smote_balance, tree_subsample_pool, Predictor,
};
use pvf_core::oracle::{oracle_report, validation_grid};
use pvf_core::perturb::PerturbationConfig;
use pvf_core::report::{self, BarGroup, Series};
use pvf_core::select::{pvf_select, traditional_select, Aggregator, PvfConfig};
use pvf_core::Scaler;

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => Ok(load_config(p).with_context(|| format!("reading config {}", p.display()))?),
        None => Ok(FileConfig::default()),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    report::write_atomic(path, contents.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// ie
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct IeArgs {
    /// Intervention capacity in (0, 1].
    #[arg(long)]
    gamma: f64,

    /// True positive count.
    #[arg(long, requires_all = ["fp", "fn_", "tn"], conflicts_with = "pred")]
    tp: Option<u64>,
    /// False positive count.
    #[arg(long)]
    fp: Option<u64>,
    /// False negative count.
    #[arg(long = "fn", id = "fn_")]
    fn_: Option<u64>,
    /// True negative count.
    #[arg(long)]
    tn: Option<u64>,

    /// CSV file with `prediction,label` columns (0/1) to score instead of
    /// explicit counts.
    #[arg(long, conflicts_with = "tp")]
    pred: Option<PathBuf>,
}

pub fn run_ie(args: IeArgs) -> Result<()> {
    let counts = match (&args.pred, args.tp) {
        (Some(path), _) => read_prediction_counts(path)?,
        (None, Some(tp)) => ConfusionCounts {
            tpc: tp,
            fpc: args.fp.unwrap_or(0),
            fnc: args.fn_.unwrap_or(0),
            tnc: args.tn.unwrap_or(0),
        },
        (None, None) => bail!("either --pred or the four counts --tp/--fp/--fn/--tn are required"),
    };
    let value = ie_counting(&counts, args.gamma)?;
    println!("{value}");
    Ok(())
}

fn read_prediction_counts(path: &Path) -> Result<ConfusionCounts> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let pred_idx = headers
        .iter()
        .position(|h| h == "prediction")
        .ok_or_else(|| pvf_core::Error::MissingColumn("prediction".into()))?;
    let label_idx = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| pvf_core::Error::MissingColumn("label".into()))?;
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |idx: usize| -> Result<bool> {
            match record.get(idx).map(str::trim) {
                Some("0") => Ok(false),
                Some("1") => Ok(true),
                other => bail!("expected 0/1, found {other:?}"),
            }
        };
        preds.push(parse(pred_idx)?);
        labels.push(parse(label_idx)?);
    }
    Ok(confusion(&preds, &labels)?)
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Monte Carlo trials per population spec.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,

    #[arg(long, default_value_t = 17)]
    seed: u64,

    /// Output CSV path.
    #[arg(long, default_value = "oracle.csv")]
    out: PathBuf,
}

pub fn run_oracle(args: OracleArgs) -> Result<()> {
    let grid = validation_grid();
    let rows = oracle_report(&grid, args.trials, args.seed)?;
    write(&args.out, &report::oracle_csv(&rows))?;
    let worst = rows
        .iter()
        .map(|r| r.deviation_in_se)
        .fold(0.0f64, f64::max);
    println!(
        "oracle: {} specs, {} trials each, worst |formula - simulation| = {worst:.2} SE -> {}",
        rows.len(),
        args.trials,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Config file with a `[select]` section (flags below override it).
    #[arg(long, env = "PVF_CONFIG")]
    config: Option<PathBuf>,

    /// Dataset CSV (overrides the config).
    #[arg(long)]
    data: Option<PathBuf>,

    /// Target column name (overrides the config).
    #[arg(long)]
    target: Option<String>,

    /// Metric: "ie:<gamma>", "f1" or "accuracy".
    #[arg(long)]
    metric: Option<String>,

    /// Numeric perturbation noise (overrides `[perturbation].sigma`).
    #[arg(long)]
    sigma: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn run_select(args: SelectArgs) -> Result<()> {
    let file = load_file_config(&args.config)?;
    let section = match (file.select, &args.data, &args.target) {
        (Some(s), _, _) => SelectSection {
            data: args.data.clone().unwrap_or(s.data),
            target: args.target.clone().unwrap_or(s.target),
            ..s
        },
        (None, Some(data), Some(target)) => SelectSection {
            data: data.clone(),
            target: target.clone(),
            pool: None,
            metric: None,
            aggregator: None,
            train_frac: None,
            tree_candidates: None,
            subsample_frac: None,
            max_depth: None,
            seed: None,
        },
        _ => bail!("select needs a [select] config section or both --data and --target"),
    };

    let metric: MetricSpec<f64> = args
        .metric
        .or(section.metric.clone())
        .unwrap_or_else(|| "f1".to_owned())
        .parse()?;
    let aggregator: Aggregator<f64> = match &section.aggregator {
        Some(s) => s.parse()?,
        None => Aggregator::lower_quartile(),
    };
    let seed = args.seed.or(section.seed).unwrap_or(17);
    let train_frac = section.train_frac.unwrap_or(0.7);

    let table = ingest_csv::<f64>(&section.data, &section.target)
        .with_context(|| format!("reading {}", section.data.display()))?;
    let dataset = pvf_core::data::drop_and_impute(&table, 0.5, 5)?;
    let split = stratified_split(&dataset, train_frac, seed)?;

    let mut perturbation = match &file.perturbation {
        Some(p) => p.into_config(dataset.n_features())?,
        None => PerturbationConfig::all_features(dataset.n_features(), 0.1, 0.1, 0.1, 7, 100, seed),
    };
    if let Some(sigma) = args.sigma {
        perturbation.sigma = sigma;
    }

    let pool_kind = section.pool.as_deref().unwrap_or("logistic-pairs");
    let (descriptors, pvf_res, trad_res) = match pool_kind {
        "logistic-pairs" => {
            let scaler = Scaler::fit(&split.train);
            let train = scaler.transform(&split.train)?;
            let val = scaler.transform(&split.val)?;
            let balanced = smote_balance(&train, 5, seed)?;
            let pool = logistic_pair_pool(&balanced, balanced.n_features())?;
            run_selection(&pool, &val, &perturbation, aggregator, metric)?
        }
        "trees" => {
            let scaler = Scaler::fit(&split.train);
            let train = scaler.transform(&split.train)?;
            let val = scaler.transform(&split.val)?;
            let pool = tree_subsample_pool(
                &train,
                section.tree_candidates.unwrap_or(100),
                section.subsample_frac.unwrap_or(0.7),
                section.max_depth.unwrap_or(4),
                seed,
            )?;
            run_selection(&pool, &val, &perturbation, aggregator, metric)?
        }
        other => bail!("unknown pool {other:?}; expected \"logistic-pairs\" or \"trees\""),
    };

    write(&args.out.join("selection_pvf.csv"), &pvf_res.to_csv(&descriptors))?;
    write(
        &args.out.join("selection_traditional.csv"),
        &trad_res.to_csv(&descriptors),
    )?;
    println!(
        "pvf chose {} ({}), traditional chose {} ({})",
        pvf_res.chosen,
        descriptors[pvf_res.chosen],
        trad_res.chosen,
        descriptors[trad_res.chosen],
    );
    Ok(())
}

#[allow(clippy::type_complexity)]
fn run_selection<P: Predictor<f64>>(
    pool: &[P],
    val: &Dataset<f64>,
    perturbation: &PerturbationConfig<f64>,
    aggregator: Aggregator<f64>,
    metric: MetricSpec<f64>,
) -> Result<(
    Vec<String>,
    pvf_core::SelectionResult,
    pvf_core::SelectionResult,
)> {
    let descriptors: Vec<String> = pool.iter().map(|p| p.descriptor()).collect();
    let cfg = PvfConfig {
        perturbation: perturbation.clone(),
        aggregator,
        metric,
    };
    let pvf_res = pvf_select(pool, val, &cfg)?;
    let trad_res = traditional_select(pool, val, &metric)?;
    Ok((descriptors, pvf_res, trad_res))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Config file with a `[sweep]` section; defaults cover the full grid.
    #[arg(long, env = "PVF_CONFIG")]
    config: Option<PathBuf>,

    /// Override the repetition count.
    #[arg(long)]
    reps: Option<usize>,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn run_synth(args: SynthArgs) -> Result<()> {
    let file = load_file_config(&args.config)?;
    let mut cfg: SweepConfig = match file.sweep {
        Some(section) => section.into_config()?,
        None => SweepConfig::default(),
    };
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let output = run_sweep(&cfg)?;
    write(&args.out.join("sweep.csv"), &report::sweep_csv(&output))?;
    let summary = output.summary();
    write(
        &args.out.join("sweep_summary.csv"),
        &report::sweep_summary_csv(&summary),
    )?;
    let bars: Vec<BarGroup> = summary
        .iter()
        .map(|row| BarGroup {
            label: row.track.clone(),
            bars: vec![("% configs with d > 0".to_owned(), row.percent_positive)],
        })
        .collect();
    write(
        &args.out.join("sweep_summary.svg"),
        &report::svg_grouped_bars(
            "Share of configurations where perturbation selection wins",
            "% of configurations",
            &bars,
        ),
    )?;
    for row in &summary {
        println!(
            "{}: d > 0 in {}/{} configurations ({:.1}%)",
            row.track, row.positive, row.configs, row.percent_positive
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// real
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct RealArgs {
    /// Config file with a `[real]` section.
    #[arg(long, env = "PVF_CONFIG")]
    config: Option<PathBuf>,

    /// Dataset CSV (overrides the config).
    #[arg(long)]
    data: Option<PathBuf>,

    /// Target column (overrides the config).
    #[arg(long)]
    target: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn run_real(args: RealArgs) -> Result<()> {
    let file = load_file_config(&args.config)?;
    let mut cfg: RealConfig = match (file.real, &args.data, &args.target) {
        (Some(section), _, _) => {
            let mut cfg = section.into_config()?;
            if let Some(data) = &args.data {
                cfg.data_path = data.clone();
            }
            if let Some(target) = &args.target {
                cfg.target_column = target.clone();
            }
            cfg
        }
        (None, Some(data), Some(target)) => RealConfig::new(data, target.clone()),
        _ => bail!("real needs a [real] config section or both --data and --target"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let dataset = load_real_dataset(&cfg)?;
    println!(
        "loaded {} rows x {} features, {} positives",
        dataset.len(),
        dataset.n_features(),
        dataset.positives()
    );
    let output = run_real_protocol(&dataset, &cfg)?;
    write(&args.out.join("real.csv"), &report::real_csv(&output))?;
    let summary = output.summary();
    write(
        &args.out.join("real_summary.csv"),
        &report::real_summary_csv(&summary),
    )?;

    // Bar chart at each track's best sigma (highest pvf - trad margin).
    let mut tracks: Vec<String> = Vec::new();
    for row in &summary {
        if !tracks.contains(&row.track) {
            tracks.push(row.track.clone());
        }
    }
    let bars: Vec<BarGroup> = tracks
        .iter()
        .filter_map(|track| {
            summary
                .iter()
                .filter(|r| &r.track == track)
                .max_by(|a, b| {
                    (a.pvf_pct - a.trad_pct)
                        .partial_cmp(&(b.pvf_pct - b.trad_pct))
                        .unwrap()
                })
                .map(|best| BarGroup {
                    label: format!("{track} (s={})", best.sigma),
                    bars: vec![
                        ("pvf wins".to_owned(), best.pvf_pct),
                        ("traditional wins".to_owned(), best.trad_pct),
                        ("ties".to_owned(), best.tie_pct),
                    ],
                })
        })
        .collect();
    write(
        &args.out.join("real_summary.svg"),
        &report::svg_grouped_bars("Fold outcomes at the best noise level", "% of folds", &bars),
    )?;
    for row in summary
        .iter()
        .filter(|r| r.sigma == cfg.sigma_grid[cfg.sigma_grid.len() - 1])
    {
        println!(
            "{} sigma={}: pvf {:.1}% / traditional {:.1}% / ties {:.1}%",
            row.track, row.sigma, row.pvf_pct, row.trad_pct, row.tie_pct
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// sweep.csv produced by `synth`.
    #[arg(long)]
    sweep: Option<PathBuf>,

    /// real.csv produced by `real`.
    #[arg(long)]
    real: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn run_report(args: ReportArgs) -> Result<()> {
    if args.sweep.is_none() && args.real.is_none() {
        bail!("report needs --sweep and/or --real input CSVs");
    }
    if let Some(sweep_path) = &args.sweep {
        let output = report::read_sweep_csv(sweep_path)
            .with_context(|| format!("reading {}", sweep_path.display()))?;
        let summary = output.summary();
        write(
            &args.out.join("sweep_summary.csv"),
            &report::sweep_summary_csv(&summary),
        )?;
        let curves = sensitivity_report(&output.results);
        write(&args.out.join("sensitivity.csv"), &report::sensitivity_csv(&curves))?;
        write(
            &args.out.join("sensitivity_trends.csv"),
            &report::sensitivity_trends_csv(&curves),
        )?;
        // one line plot per (size, band): mean d vs sigma, one series per track
        let mut cells: Vec<(usize, &'static str)> = Vec::new();
        for c in &curves {
            if !cells.contains(&(c.size, c.band)) {
                cells.push((c.size, c.band));
            }
        }
        for (size, band) in cells {
            let series: Vec<Series> = curves
                .iter()
                .filter(|c| c.size == size && c.band == band)
                .map(|c| Series {
                    label: c.track.clone(),
                    points: c.points.clone(),
                })
                .collect();
            let svg = report::svg_line_chart(
                &format!("Mean selection difference, n={size}, {band} separability"),
                "perturbation noise sigma (log scale)",
                "mean d (pvf - traditional)",
                true,
                &series,
            );
            write(&args.out.join(format!("sensitivity_{size}_{band}.svg")), &svg)?;
        }
        println!("report: {} sensitivity curves", curves.len());
    }
    if let Some(real_path) = &args.real {
        let output = report::read_real_csv(real_path)
            .with_context(|| format!("reading {}", real_path.display()))?;
        let summary = output.summary();
        write(
            &args.out.join("real_summary.csv"),
            &report::real_summary_csv(&summary),
        )?;
        let mut tracks: Vec<String> = Vec::new();
        for row in &summary {
            if !tracks.contains(&row.track) {
                tracks.push(row.track.clone());
            }
        }
        let series: Vec<Series> = tracks
            .iter()
            .map(|track| Series {
                label: track.clone(),
                points: summary
                    .iter()
                    .filter(|r| &r.track == track)
                    .map(|r| (r.sigma, r.pvf_pct - r.trad_pct))
                    .collect(),
            })
            .collect();
        write(
            &args.out.join("real_sensitivity.svg"),
            &report::svg_line_chart(
                "Win-rate margin vs noise level",
                "perturbation noise sigma (log scale)",
                "pvf win % - traditional win %",
                true,
                &series,
            ),
        )?;
        println!("report: {} real-data summary rows", summary.len());
    }
    Ok(())
}
