use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hopls::eval::{
    benchmark_case, candidate_grid, corr_per_column, generate, kfold_cv, q_squared, q_squared_per_column, rmsep,
    BenchRow, BenchSettings, Candidate, SynthSet, SynthSpec, Summary,
};
use hopls::{Algorithm, DenseTensor, FitConfig, FittedModel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::model_file::ModelFile;
use crate::{tensor_file, CliError};

#[derive(Debug, Parser)]
#[command(name = "hopls", version, about = "Higher-order PLS tensor regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic calibration/validation pair.
    Synth(SynthArgs),
    /// Fit a model and save it.
    Fit(FitArgs),
    /// Predict responses for new predictors.
    Predict(PredictArgs),
    /// Score a prediction against the truth.
    Eval(EvalArgs),
    /// Cross-validate over the (R, λ) grid.
    Cv(CvArgs),
    /// Repeated CV-then-validate benchmark on a synthetic case.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// One of 1m, 2m, 3m, 1t, 2t, mr.
    #[arg(long)]
    pub case: String,
    /// Noise level in dB, or `inf` for noise-free data.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_snr)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub algo: Algorithm,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Number of latent vectors.
    #[arg(long)]
    pub r: usize,
    /// Same loading count on every non-sample mode.
    #[arg(long, conflicts_with_all = ["l", "k"])]
    pub lambda: Option<usize>,
    /// Per-mode X loading counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    /// Per-mode Y loading counts, comma separated (tensor responses only).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub no_center: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub y_true: PathBuf,
    #[arg(long)]
    pub y_pred: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub algo: Algorithm,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub r_max: usize,
    #[arg(long, default_value_t = 10)]
    pub lambda_max: usize,
    #[arg(long)]
    pub no_center: bool,
    /// Also write the full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub case: String,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_snr,
          default_value = "10,5,0,-5")]
    pub snr_list: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub r_max: usize,
    #[arg(long, default_value_t = 10)]
    pub lambda_max: usize,
    #[arg(long)]
    pub no_center: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_snr(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is neither a finite dB value nor 'inf'")),
    }
}

/// JSON has no infinity; noise-free levels are written as the string "inf".
fn snr_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a, out),
        Command::Cv(a) => cv(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Write(format!("cannot write to stdout: {e}")))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("cannot serialise: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Write(format!("cannot write {}: {e}", path.display())))
}

fn set_json(set: &SynthSet) -> Value {
    let (sx, sy) = set.realized_snr();
    json!({
        "x_dims": set.x.dims(),
        "y_dims": set.y.dims(),
        "realized_snr_x": snr_json(sx),
        "realized_snr_y": snr_json(sy),
    })
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = SynthSpec::preset(&a.case, a.snr, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let data = generate(&spec)?;
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Write(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let (cal, val) = (&data.calibration, &data.validation);
    for (name, t) in [("X.ten", &cal.x), ("Y.ten", &cal.y), ("Xv.ten", &val.x), ("Yv.ten", &val.y)] {
        tensor_file::write(&a.out_dir.join(name), t)?;
    }
    let clean = [cal, val].iter().all(|s| s.x == s.clean_x && s.y == s.clean_y);
    let manifest = json!({
        "case": a.case,
        "spec": spec,
        "calibration": set_json(cal),
        "validation": set_json(val),
        "clean_equals_noisy": clean,
        "files": ["X.ten", "Y.ten", "Xv.ten", "Yv.ten"],
    });
    write_json(&a.out_dir.join("manifest.json"), &manifest)?;
    emit(out, &format!("wrote {}\n", a.out_dir.display()))
}

fn fit_model(a: &FitArgs, x: &DenseTensor, y: &DenseTensor) -> Result<FittedModel, CliError> {
    let center = !a.no_center;
    let has_loadings = a.lambda.is_some() || a.l.is_some() || a.k.is_some();
    match a.algo {
        Algorithm::Npls | Algorithm::Pls if has_loadings => Err(CliError::Usage(format!(
            "{} takes no loading counts (--lambda/--l/--k)",
            a.algo
        ))),
        Algorithm::Npls | Algorithm::Pls => Ok(FittedModel::fit(a.algo, x, y, a.r, 1, center)?),
        Algorithm::Hopls | Algorithm::Hopls2 => {
            if let Some(lambda) = a.lambda {
                return Ok(FittedModel::fit(a.algo, x, y, a.r, lambda, center)?);
            }
            let Some(l) = a.l.clone() else {
                return Err(CliError::Usage(format!("{} needs --lambda or --l", a.algo)));
            };
            let k = a.k.clone().unwrap_or_default();
            if y.order() > 2 && k.is_empty() {
                return Err(CliError::Usage("a tensor response needs --k with --l".into()));
            }
            if (a.algo == Algorithm::Hopls2) != (y.order() == 2) {
                return Err(CliError::Shape(format!("{} cannot model an order-{} response", a.algo, y.order())));
            }
            let cfg = FitConfig::new(a.r, l, k);
            let cfg = if center { cfg } else { cfg.without_centering() };
            Ok(FittedModel::fit_with_config(a.algo, x, y, &cfg)?)
        }
    }
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let x = tensor_file::read(&a.x)?;
    let y = tensor_file::read(&a.y)?;
    let model = fit_model(&a, &x, &y)?;
    let train_q2 = q_squared(&y, &model.predict(&x)?)?;
    let file = ModelFile::new(model, a.algo)?;
    file.write(&a.out)?;

    let model = &file.model;
    let (xn, yn) = (model.x_residual_norms(), model.y_residual_norms());
    let mut text = format!("components {}\n", model.n_components());
    for r in 0..=model.n_components() {
        text += &format!("residual {r} x {} y {}\n", xn[r], yn[r]);
    }
    let stop = serde_json::to_value(model.stop_reason()).map_err(|e| CliError::Numerical(e.to_string()))?;
    text += &format!("stop_reason {}\n", stop.as_str().unwrap_or("unknown"));
    text += &format!("train_q2 {train_q2}\n");
    text += &format!("checksum {}\n", file.checksum());
    emit(out, &text)
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let file = ModelFile::read(&a.model)?;
    let x = tensor_file::read(&a.x)?;
    let y = file.model.predict(&x)?;
    tensor_file::write(&a.out, &y)
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let y_true = tensor_file::read(&a.y_true)?;
    let y_pred = tensor_file::read(&a.y_pred)?;
    if y_true.dims() != y_pred.dims() {
        return Err(CliError::Shape(format!(
            "truth {:?} and prediction {:?} differ in shape",
            y_true.dims(),
            y_pred.dims()
        )));
    }
    let mut text = format!("q2 {}\n", q_squared(&y_true, &y_pred)?);
    text += &format!("rmsep {}\n", rmsep(&y_true, &y_pred)?);
    for (j, c) in corr_per_column(&y_true, &y_pred)?.iter().enumerate() {
        text += &format!("corr {j} {c}\n");
    }
    for (j, q) in q_squared_per_column(&y_true, &y_pred)?.iter().enumerate() {
        match q {
            Some(q) => text += &format!("q2_column {j} {q}\n"),
            None => text += &format!("q2_column {j} undefined\n"),
        }
    }
    emit(out, &text)
}

fn cv(a: CvArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.r_max == 0 || a.lambda_max == 0 {
        return Err(CliError::Usage("--r-max and --lambda-max must be at least 1".into()));
    }
    let x = tensor_file::read(&a.x)?;
    let y = tensor_file::read(&a.y)?;
    let grid = candidate_grid(a.algo, a.r_max, a.lambda_max);
    let report = kfold_cv(&x, &y, a.folds, &grid, a.algo, !a.no_center)?;
    let mut text = String::new();
    for c in &report.cells {
        text += &format!("cell {} {} {}\n", c.r, c.lambda, c.mean_q2);
    }
    text += &format!("best {} {} {}\n", report.best.r, report.best.lambda, report.best_q2);
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    emit(out, &text)
}

#[derive(Serialize)]
struct BenchRecord {
    snr_db: Value,
    repeat: usize,
    seed: u64,
    method: Algorithm,
    selected: Candidate,
    cv_q2: f64,
    q2: f64,
}

#[derive(Serialize)]
struct BenchSummary {
    snr_db: Value,
    method: Algorithm,
    q2: Summary,
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    if a.r_max == 0 || a.lambda_max == 0 {
        return Err(CliError::Usage("--r-max and --lambda-max must be at least 1".into()));
    }
    let settings = BenchSettings {
        folds: a.folds,
        r_max: a.r_max,
        lambda_max: a.lambda_max,
        center: !a.no_center,
        ..BenchSettings::default()
    };
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let mut text = String::new();
    for &snr in &a.snr_list {
        let spec = SynthSpec::preset(&a.case, snr, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
        let rows: Vec<BenchRow> = benchmark_case(&spec, a.repeats, &settings)?;
        let mut methods: Vec<Algorithm> = Vec::new();
        for row in &rows {
            if !methods.contains(&row.method) {
                methods.push(row.method);
            }
        }
        for m in methods {
            let q: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.q2).collect();
            let s = Summary::of(&q).expect("repeats >= 1");
            text += &format!("summary {} {m} median {} q1 {} q3 {}\n", snr_json(snr), s.median, s.q1, s.q3);
            summaries.push(BenchSummary {
                snr_db: snr_json(snr),
                method: m,
                q2: s,
            });
        }
        records.extend(rows.into_iter().map(|r| BenchRecord {
            snr_db: snr_json(snr),
            repeat: r.repeat,
            seed: r.seed,
            method: r.method,
            selected: r.selected,
            cv_q2: r.cv_q2,
            q2: r.q2,
        }));
    }
    let report = json!({
        "case": a.case,
        "seed": a.seed,
        "repeats": a.repeats,
        "snr_list": a.snr_list.iter().map(|&s| snr_json(s)).collect::<Vec<_>>(),
        "settings": settings,
        "rows": records,
        "summaries": summaries,
    });
    write_json(&a.out, &report)?;
    emit(out, &text)
}
