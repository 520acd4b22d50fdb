//! `gbmdl` command line: train, predict, crossval, inspect.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use gbmdl::coding::CodingConstants;
use gbmdl::dataset::{
    fit_normalizer, load_csv, transform, LabelColumn, LabelEncoding, RawTable,
};
use gbmdl::error::Error;
use gbmdl::eval::{cross_validate, render_text};
use gbmdl::model_io::{load_model, save_model, write_atomic};
use gbmdl::predictor::{class_score, predict};
use gbmdl::trainer::{fit_traced, TrainedModel};

#[derive(Parser)]
#[command(name = "gbmdl", version, about = "Granular-ball MDL classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a labeled CSV file.
    Train(TrainArgs),
    /// Predict labels for a CSV file with a trained model.
    Predict(PredictArgs),
    /// Run stratified k-fold cross-validation and write a report.
    Crossval(CrossvalArgs),
    /// Print a human-readable dump of a model file.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or 0-based position.
    #[arg(long = "label-col")]
    label_col: String,
    /// Output model path (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Seed recorded in the model metadata.
    #[arg(long, default_value_t = 2035)]
    seed: u64,
    /// Optional training trace (JSON lines, one record per evaluated ball).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Input CSV; a label column is ignored for scoring but, when present,
    /// used to print accuracy.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV of predictions.
    #[arg(long)]
    out: PathBuf,
    /// Also write one score column per class.
    #[arg(long)]
    scores: bool,
    /// Label column of the input, by name or 0-based position; autodetected
    /// when the file has one more column than the model has features.
    #[arg(long = "label-col")]
    label_col: Option<String>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "label-col")]
    label_col: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 2035)]
    seed: u64,
    /// Report path; JSON goes here, the text table to the same path with a
    /// .txt extension.
    #[arg(long)]
    report: PathBuf,
    /// Dataset name recorded in the report; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Restrict the dump to one class label.
    #[arg(long = "class")]
    class: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Crossval(args) => cmd_crossval(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Invariant(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn parse_label_col(raw: &str) -> LabelColumn {
    raw.parse().expect("label column parsing is infallible")
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let label_col = parse_label_col(&args.label_col);
    let table: RawTable<f64> = load_csv(&args.data, &label_col)?;
    let params = fit_normalizer(&table);
    let dataset = transform(&table, &params, None)?;

    let (mut model, trace) = fit_traced(&dataset, &CodingConstants::default(), args.seed, args.trace.is_some())?;
    model.normalization = params;
    save_model(&model, &args.model)?;

    if let Some(trace_path) = &args.trace {
        let mut lines = String::new();
        for record in &trace.records {
            lines.push_str(&serde_json::to_string(record).expect("trace record serializes"));
            lines.push('\n');
        }
        write_atomic(trace_path, lines.as_bytes())?;
    }

    println!("classes: {}", model.n_classes());
    for (label, balls) in model.label_names.iter().zip(model.classes.iter()) {
        let samples: usize = balls.iter().map(|b| b.n).sum();
        println!("  {label}: {} balls ({samples} samples)", balls.len());
    }
    if let Some(seconds) = model.metadata.train_seconds {
        println!("train_seconds: {seconds:.3}");
    }
    println!("model: {}", args.model.display());
    Ok(())
}

/// Split an input table into features and optional labels against a model's
/// expected dimension.
fn features_for_model(
    path: &Path,
    label_col: Option<&str>,
    model: &TrainedModel<f64>,
) -> Result<(Array2<f64>, Option<Vec<String>>), Error> {
    let d = model.d();

    if let Some(raw) = label_col {
        let table: RawTable<f64> = load_csv(path, &parse_label_col(raw))?;
        if table.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: table.d(),
            });
        }
        return Ok((normalize_rows(&table, model), Some(table.labels)));
    }

    // No label column given: read raw cells and decide by column count.
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let records: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(|c| c.trim().to_string()).collect()))
        .collect::<Result<_, csv::Error>>()?;
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }

    if header.len() == d {
        let table = parse_all_numeric(&header, &records)?;
        return Ok((normalize_rows(&table, model), None));
    }
    if header.len() == d + 1 {
        // Label column: the unique non-numeric column if there is one,
        // otherwise ambiguous.
        let mut non_numeric: Vec<usize> = Vec::new();
        for j in 0..header.len() {
            if records.iter().any(|row| row[j].parse::<f64>().is_err()) {
                non_numeric.push(j);
            }
        }
        if non_numeric.len() == 1 {
            let table: RawTable<f64> = load_csv(path, &LabelColumn::Index(non_numeric[0]))?;
            return Ok((normalize_rows(&table, model), Some(table.labels)));
        }
        return Err(Error::ModelFormat(format!(
            "data has {} columns but the model expects {} features; pass --label-col to identify the label column",
            header.len(),
            d
        )));
    }
    Err(Error::DimensionMismatch {
        expected: d,
        actual: header.len(),
    })
}

fn parse_all_numeric(header: &[String], records: &[Vec<String>]) -> Result<RawTable<f64>, Error> {
    let mut rows = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::BadCell {
                row: i + 1,
                column: header[j].clone(),
                value: cell.clone(),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(RawTable {
        feature_names: header.to_vec(),
        rows,
        labels: vec![String::new(); records.len()],
    })
}

fn normalize_rows(table: &RawTable<f64>, model: &TrainedModel<f64>) -> Array2<f64> {
    let n = table.n();
    let d = table.d();
    let mut x = Array2::zeros((n, d));
    for (i, row) in table.rows.iter().enumerate() {
        for j in 0..d {
            x[[i, j]] = model.normalization.scale(j, row[j]);
        }
    }
    x
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let model: TrainedModel<f64> = load_model(&args.model)?;
    let (x, labels) = features_for_model(&args.data, args.label_col.as_deref(), &model)?;

    let mut out = String::new();
    out.push_str("prediction");
    if args.scores {
        for label in &model.label_names {
            out.push_str(&format!(",score_{label}"));
        }
    }
    out.push('\n');

    let mut predictions = Vec::with_capacity(x.nrows());
    for row in x.rows() {
        let winner = predict(&row, &model)?;
        predictions.push(winner);
        out.push_str(&model.label_names[winner]);
        if args.scores {
            for c in 0..model.n_classes() {
                out.push_str(&format!(",{}", class_score(&row, &model, c)));
            }
        }
        out.push('\n');
    }
    write_atomic(&args.out, out.as_bytes())?;

    if let Some(labels) = labels {
        let encoding = LabelEncoding::from_names(model.label_names.clone());
        let known: Vec<(usize, usize)> = labels
            .iter()
            .zip(predictions.iter())
            .filter_map(|(l, &p)| encoding.index_of(l).map(|t| (t, p)))
            .collect();
        if !known.is_empty() {
            let hits = known.iter().filter(|(t, p)| t == p).count();
            println!("accuracy: {:.4}", hits as f64 / known.len() as f64);
        }
    }
    println!("predictions: {}", args.out.display());
    Ok(())
}

fn cmd_crossval(args: CrossvalArgs) -> Result<(), Error> {
    let label_col = parse_label_col(&args.label_col);
    let table: RawTable<f64> = load_csv(&args.data, &label_col)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.data
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string()
    });

    let report = cross_validate(&table, &name, args.folds, args.seed, &CodingConstants::default())?;

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&args.report, json.as_bytes())?;
    let text = render_text(&report);
    write_atomic(&args.report.with_extension("txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Error> {
    let model: TrainedModel<f64> = load_model(&args.model)?;
    if let Some(class) = &args.class {
        if !model.label_names.iter().any(|l| l == class) {
            return Err(Error::UnknownLabel(class.clone()));
        }
    }

    println!(
        "model: {} classes, {} features, unit {}, seed {}, rng {}",
        model.n_classes(),
        model.d(),
        model.metadata.unit,
        model.metadata.seed,
        model.metadata.rng,
    );
    println!(
        "floors: r0 = {:.6e}, eta in [{:.6e}, {:.6e}]",
        model.floors.r0,
        model.floors.eta.iter().cloned().fold(f64::INFINITY, f64::min),
        model.floors.eta.iter().cloned().fold(0.0, f64::max),
    );
    let c = &model.constants;
    println!(
        "constants: eps_r = {:e}, eps_v = {:e}, eps_num = {:e}, eps_mdl = {:e}",
        c.eps_r, c.eps_v, c.eps_num, c.eps_mdl
    );

    for (class_id, (label, balls)) in model
        .label_names
        .iter()
        .zip(model.classes.iter())
        .enumerate()
    {
        if args.class.as_deref().is_some_and(|want| want != label) {
            continue;
        }
        println!();
        println!(
            "class {label} (prior {:.6}, {} balls):",
            model.priors[class_id],
            balls.len()
        );
        println!(
            "  {:<5}{:>6}{:>12}{:>12}{:>10}{:>12}{:>12}{:>12}",
            "ball", "n", "radius", "rho_bar", "weight", "L_data", "L_intr", "L_cls"
        );
        for (k, ball) in balls.iter().enumerate() {
            // Coding terms recomputable from stored fields.
            let two_pi = 2.0 * std::f64::consts::PI;
            let gauss: f64 = ball
                .variance
                .iter()
                .map(|&v| 1.0 + (two_pi * v.max(c.eps_v)).ln())
                .sum();
            let l_data = ball.n as f64 / 2.0 * gauss
                + model.d() as f64 * (ball.n.max(2) as f64).ln();
            let l_intr = ball.n as f64 * -(1.0 - ball.avg_boundary_risk).max(c.eps_num).ln();
            let l_cls = -model.priors[class_id].ln();
            println!(
                "  {:<5}{:>6}{:>12.6}{:>12.6}{:>10.4}{:>12.4}{:>12.4}{:>12.4}",
                k, ball.n, ball.radius, ball.avg_boundary_risk, ball.weight, l_data, l_intr, l_cls
            );
            println!("        center: {}", compact_vector(&ball.center));
        }
    }
    Ok(())
}

fn compact_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}
