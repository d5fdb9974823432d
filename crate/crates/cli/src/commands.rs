use crate::config::{format_dims, parse_dims, warn_if_large, Mode, Settings};
use crate::error::{CliError, CliResult};
use ridge_tucker::als::{als, validate_ranks, write_model, AlsResult};
use ridge_tucker::synthetic::{generate, SyntheticSpec};
use ridge_tucker::tensor::{read_tensor, read_tensor_csv, write_tensor, DenseTensor};
use ridge_tucker::verify::{parse_suites, run_suites};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::path::{Path, PathBuf};

pub const HISTORY_HEADER: [&str; 4] = ["iteration", "step", "loss", "rmse"];
pub const TIMING_HEADER: [&str; 3] = ["step_type", "mean_seconds", "iterations"];

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(file, value).map_err(|e| CliError::io(path, e.into()))
}

fn synthetic_spec(settings: &Settings, shape: &[usize], planted: Vec<usize>) -> SyntheticSpec {
    SyntheticSpec {
        shape: shape.to_vec(),
        planted_ranks: planted,
        noise_fraction: settings.noise_fraction,
        noise_sigma: settings.noise_sigma,
        seed: settings.seed,
    }
}

#[derive(Serialize)]
struct GenerateSidecar<'a> {
    tensor_file: String,
    seed: u64,
    shape: &'a [usize],
    planted_ranks: &'a [usize],
    noise_fraction: f64,
    noise_sigma: f64,
    noisy_entries: usize,
    /// SHA-256 of the planted model in DTUK encoding.
    planted_model_sha256: String,
    tensor_sha256: String,
    rmse_vs_planted: f64,
}

pub fn cmd_generate(settings: &Settings, name: &str) -> CliResult<()> {
    let shape = settings
        .shape
        .clone()
        .ok_or_else(|| CliError::Usage("generate needs --shape".into()))?;
    let planted = settings
        .planted_ranks
        .clone()
        .or_else(|| settings.ranks.clone())
        .unwrap_or_else(|| settings.planted_ranks_for(&shape));
    warn_if_large(&shape);
    let spec = synthetic_spec(settings, &shape, planted);
    let inst = generate(&spec)?;
    let tensor_path = settings.out_path(&format!("{name}.dten"));
    write_tensor(&inst.tensor, &tensor_path).map_err(|e| match e {
        ridge_tucker::Error::Io(io) => CliError::io(&tensor_path, io),
        other => other.into(),
    })?;
    let sidecar = GenerateSidecar {
        tensor_file: tensor_path.file_name().unwrap().to_string_lossy().into_owned(),
        seed: spec.seed,
        shape: &spec.shape,
        planted_ranks: &spec.planted_ranks,
        noise_fraction: spec.noise_fraction,
        noise_sigma: spec.noise_sigma,
        noisy_entries: spec.noisy_entries(),
        planted_model_sha256: sha256_hex(&inst.planted.to_bytes()),
        tensor_sha256: sha256_hex(&inst.tensor.to_bytes()),
        rmse_vs_planted: inst.tensor.rmse(&inst.clean)?,
    };
    write_json(&settings.out_path(&format!("{name}.json")), &sidecar)?;
    println!(
        "wrote {} (shape {}, planted ranks {}, RMSE vs planted {:.6})",
        tensor_path.display(),
        format_dims(&spec.shape),
        format_dims(&spec.planted_ranks),
        sidecar.rmse_vs_planted
    );
    Ok(())
}

/// Reads `--input`, or generates a synthetic instance from `--shape`.
fn load_input(settings: &Settings) -> CliResult<DenseTensor> {
    if let Some(path) = &settings.input {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let tensor = if is_csv {
            let f = File::open(path).map_err(|e| CliError::io(path, e))?;
            read_tensor_csv(std::io::BufReader::new(f))?
        } else {
            read_tensor(path).map_err(|e| match e {
                ridge_tucker::Error::Io(io) => CliError::io(path, io),
                other => other.into(),
            })?
        };
        warn_if_large(tensor.shape());
        return Ok(tensor);
    }
    let shape = settings
        .shape
        .clone()
        .ok_or_else(|| CliError::Usage("give --input or a synthetic --shape".into()))?;
    warn_if_large(&shape);
    let planted = settings.planted_ranks_for(&shape);
    Ok(generate(&synthetic_spec(settings, &shape, planted))?.tensor)
}

fn learned_ranks(settings: &Settings, shape: &[usize]) -> CliResult<Vec<usize>> {
    let ranks = settings
        .ranks
        .clone()
        .ok_or_else(|| CliError::Usage("--ranks is required".into()))?;
    validate_ranks(shape, &ranks).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ranks)
}

fn write_history(path: &Path, res: &AlsResult) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HISTORY_HEADER)?;
    for h in &res.history {
        w.write_record([
            h.iteration.to_string(),
            h.step.to_string(),
            format!("{:.12e}", h.loss),
            format!("{:.12e}", h.rmse),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_timing(path: &Path, res: &AlsResult) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TIMING_HEADER)?;
    for (step, mean, n) in res.timings.summary() {
        w.write_record([step, format!("{mean:.6e}"), n.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct DecomposeSummary<'a> {
    settings: &'a Settings,
    shape: &'a [usize],
    ranks: &'a [usize],
    iterations: usize,
    converged: bool,
    final_loss: f64,
    final_rmse: f64,
    sketch_sample_count: Option<usize>,
    mean_distinct_rows: Option<f64>,
    model_file: PathBuf,
}

pub fn cmd_decompose(settings: &Settings) -> CliResult<()> {
    let x = load_input(settings)?;
    let ranks = learned_ranks(settings, x.shape())?;
    let cfg = settings.als_config(settings.mode)?;
    let res = als(&x, &ranks, &cfg)?;

    let model_path = settings.out_path("model.dtuk");
    write_model(&res.model, &model_path).map_err(|e| match e {
        ridge_tucker::Error::Io(io) => CliError::io(&model_path, io),
        other => other.into(),
    })?;
    write_history(&settings.out_path("history.csv"), &res)?;
    write_timing(&settings.out_path("timing.csv"), &res)?;
    let diags = &res.core_diagnostics;
    let summary = DecomposeSummary {
        settings,
        shape: x.shape(),
        ranks: &ranks,
        iterations: res.iterations,
        converged: res.converged,
        final_loss: res.final_loss,
        final_rmse: res.final_rmse,
        sketch_sample_count: diags.first().map(|d| d.sample_count),
        mean_distinct_rows: (!diags.is_empty())
            .then(|| diags.iter().map(|d| d.distinct_rows as f64).sum::<f64>() / diags.len() as f64),
        model_file: model_path.clone(),
    };
    write_json(&settings.out_path("summary.json"), &summary)?;
    println!(
        "{} ALS: {} iterations, converged {}, loss {:.6e}, RMSE {:.6}",
        match settings.mode {
            Mode::Exact => "exact",
            Mode::Sketched => "sketched",
        },
        res.iterations,
        res.converged,
        res.final_loss,
        res.final_rmse
    );
    Ok(())
}

pub const DEFAULT_BENCH_SHAPES: &str = "32x32x32;64x64x64";
pub const DEFAULT_BENCH_RANKS: &str = "2x2x2;4x2x2;4x4x2;4x4x4";

fn parse_grid(s: &str) -> CliResult<Vec<Vec<usize>>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_dims).collect()
}

/// Header of the benchmark table for tensors of the given order.
pub fn benchmark_header(order: usize) -> Vec<String> {
    let mut h = vec!["input_shape".to_string(), "rank".to_string()];
    h.extend((1..=order).map(|n| format!("F{n}_s")));
    h.extend(
        ["als_core_s", "als_rmse", "als_rs_core_s", "als_rs_rmse", "als_iterations", "als_rs_iterations"]
            .map(String::from),
    );
    h
}

pub fn cmd_benchmark(settings: &Settings, shapes: Option<&str>, ranks: Option<&str>) -> CliResult<()> {
    let shapes = match (shapes, &settings.shape) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(s)) => vec![s.clone()],
        (None, None) => parse_grid(DEFAULT_BENCH_SHAPES)?,
    };
    let rank_grid = match (ranks, &settings.ranks) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(r)) => vec![r.clone()],
        (None, None) => parse_grid(DEFAULT_BENCH_RANKS)?,
    };
    let order = shapes[0].len();
    if shapes.iter().any(|s| s.len() != order) || rank_grid.iter().any(|r| r.len() != order) {
        return Err(CliError::Usage("all benchmark shapes and ranks must have the same order".into()));
    }
    for shape in &shapes {
        for r in &rank_grid {
            validate_ranks(shape, r).map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    let exact_cfg = settings.als_config(Mode::Exact)?;
    let sketched_cfg = settings.als_config(Mode::Sketched)?;
    let path = settings.out_path("benchmark.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(benchmark_header(order))?;
    for shape in &shapes {
        warn_if_large(shape);
        let planted = settings.planted_ranks_for(shape);
        let x = generate(&synthetic_spec(settings, shape, planted))?.tensor;
        for r in &rank_grid {
            let exact = als(&x, r, &exact_cfg)?;
            let sketched = als(&x, r, &sketched_cfg)?;
            let ex = exact.timings.summary();
            let sk = sketched.timings.summary();
            let mut row = vec![format_dims(shape), format_dims(r)];
            row.extend(ex[..order].iter().map(|(_, mean, _)| format!("{mean:.6}")));
            row.push(format!("{:.6}", ex[order].1));
            row.push(format!("{:.6}", exact.final_rmse));
            row.push(format!("{:.6}", sk[order].1));
            row.push(format!("{:.6}", sketched.final_rmse));
            row.push(exact.iterations.to_string());
            row.push(sketched.iterations.to_string());
            eprintln!(
                "{} rank {}: core {:.4}s vs {:.4}s, RMSE {:.4} vs {:.4}",
                format_dims(shape),
                format_dims(r),
                ex[order].1,
                sk[order].1,
                exact.final_rmse,
                sketched.final_rmse
            );
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_verify(suites: &str, seed: u64, out_dir: Option<&Path>) -> CliResult<()> {
    let suites = parse_suites(suites).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(dir) = out_dir {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
        }
    }
    let reports = run_suites(&suites, seed)?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    println!("{json}");
    if let Some(dir) = out_dir {
        let path = dir.join("verify.json");
        std::fs::write(&path, &json).map_err(|e| CliError::io(&path, e))?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(format!("suites failed: {}", failed.join(", "))))
    }
}
