use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use physioedge::budget::{effective_rate, format_power, round_sig, LinkProfile, Transport, BASELINE_RATE_BPS};
use physioedge::embedding::make_embeddings;
use physioedge::metrics::{write_csv_row, MetricsReport, CSV_HEADER};
use physioedge::prmd::compress_streaming;
use physioedge::recon::{reconstruct_detailed, Algorithm, ReconstructorChoice};
use physioedge::signal::{load_signal, write_signal};
use physioedge::sync::{run_simulation, ClockModel, JitterDist, JitterModel, SimConfig};
use physioedge::{compress, read_record, write_record, Channel, CompressedRecord, StepPolicy, XorShift32};

use crate::args::{BudgetArgs, Command, CompressArgs, EvaluateArgs, ReconstructArgs, SyncsimArgs};
use crate::error::{io_error, CliError};
use crate::svg;

const HISTOGRAM_BINS: usize = 40;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Compress(a) => cmd_compress(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Syncsim(a) => cmd_syncsim(a),
        Command::Budget(a) => cmd_budget(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| io_error(path, e))
}

fn read_pecs(path: &Path) -> Result<CompressedRecord, CliError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::usage(format!("input not found: {}", path.display())),
        _ => io_error(path, e),
    })?;
    Ok(read_record(&bytes)?)
}

fn budget_lines(cr: f64) -> Vec<String> {
    let profile = LinkProfile::default();
    [Transport::Wifi, Transport::Bluetooth]
        .into_iter()
        .map(|t| format!("power_{t}={}", format_power(&profile.power_lookup(t, cr))))
        .collect()
}

fn cmd_compress(a: CompressArgs) -> Result<(), CliError> {
    XorShift32::new(a.seed)?;
    let policy = StepPolicy::new(a.policy, a.cr)?;
    if a.chunk_len == Some(0) {
        return Err(CliError::usage("chunk length must be at least 1"));
    }

    let signal = load_signal(&a.input, a.channel, a.channel_index)?;
    let record = match a.chunk_len {
        Some(n) => compress_streaming(&signal, a.seed, policy, n)?,
        None => compress(&signal, a.seed, policy)?,
    };
    fs::write(&a.output, write_record(&record)).map_err(|e| io_error(&a.output, e))?;

    let achieved = record.achieved_cr();
    let rate = effective_rate(BASELINE_RATE_BPS, achieved)?;
    println!("kept={} of {}", record.values().len(), record.original_len());
    println!("achieved_cr={achieved:.4}");
    println!(
        "effective_rate={} kbps (baseline {} kbps)",
        round_sig(rate / 1e3, 3),
        BASELINE_RATE_BPS / 1e3
    );
    for line in budget_lines(a.cr as f64) {
        println!("{line}");
    }
    Ok(())
}

fn default_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "signal".to_string())
}

/// Prints the header and row, and appends them to `out` when given.
fn emit_metrics(id: &str, report: &MetricsReport, out: Option<&Path>) -> Result<(), CliError> {
    let mut row = Vec::new();
    write_csv_row(&mut row, id, report).expect("write to Vec");
    let row = String::from_utf8(row).expect("ascii row");
    println!("{CSV_HEADER}");
    print!("{row}");
    if let Some(path) = out {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_error(path, e))?;
        if fresh {
            writeln!(f, "{CSV_HEADER}").map_err(|e| io_error(path, e))?;
        }
        f.write_all(row.as_bytes()).map_err(|e| io_error(path, e))?;
    }
    for line in budget_lines(report.cr_achieved) {
        println!("{line}");
    }
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<(), CliError> {
    if a.bits != 16 && a.bits != 32 {
        return Err(CliError::usage(format!("unsupported bit depth {} (expected 16 or 32)", a.bits)));
    }
    if a.k == 0 {
        return Err(CliError::usage("sparsity K must be at least 1"));
    }
    if a.max_iter == 0 {
        return Err(CliError::usage("max_iter must be at least 1"));
    }
    if !(a.tol >= 0.0) {
        return Err(CliError::usage("tolerance must be non-negative"));
    }
    if let Some(r) = &a.metrics_against {
        if !r.exists() {
            return Err(CliError::usage(format!("input not found: {}", r.display())));
        }
    }
    let record = read_pecs(&a.input)?;

    if a.algo == Algorithm::External {
        let set = make_embeddings(&record, a.embeddings, a.embed_seed, a.grid_len)?;
        let mut w = create(&a.output)?;
        set.write_csv(&mut w).map_err(|e| io_error(&a.output, e))?;
        finish(w, &a.output)?;
        println!(
            "handoff: wrote {} embeddings x {} points to {}; reconstruction is left to an external model",
            set.n_embeddings(),
            set.grid_len(),
            a.output.display()
        );
        return Ok(());
    }

    let choice = ReconstructorChoice {
        algorithm: a.algo,
        k: a.k,
        max_iter: a.max_iter,
        tol: a.tol,
        frame_len: (a.frame_len > 0).then_some(a.frame_len),
    };
    let rec = reconstruct_detailed(&record, &choice)?;
    write_signal(&a.output, &rec.signal, a.bits)?;

    let iterations: usize = rec.frames.iter().map(|f| f.solution.iterations).sum();
    let converged = rec.frames.iter().filter(|f| f.solution.converged).count();
    println!(
        "algo={} k={} frames={} converged={}/{} iterations={}",
        a.algo,
        a.k,
        rec.frames.len(),
        converged,
        rec.frames.len(),
        iterations
    );
    if !rec.all_converged() {
        eprintln!(
            "warning: {} frame(s) stopped before reaching tol; best iterate kept",
            rec.frames.len() - converged
        );
    }
    if rec.ridge_used() {
        eprintln!("warning: ill-conditioned least squares; ridge fallback used");
    }
    if let Some(path) = &a.diagnostics {
        let mut w = create(path)?;
        rec.write_diagnostics_csv(&mut w).map_err(|e| io_error(path, e))?;
        finish(w, path)?;
    }
    if let Some(ref_path) = &a.metrics_against {
        let reference = load_signal(ref_path, record.channel(), 0)?;
        let report = MetricsReport::evaluate(reference.samples(), rec.signal.samples(), record.achieved_cr())?;
        let id = a.signal_id.clone().unwrap_or_else(|| default_id(&a.input));
        emit_metrics(&id, &report, a.metrics_out.as_deref())?;
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    if !(a.cr >= 1.0) {
        return Err(CliError::usage(format!("compression ratio must be >= 1 (got {})", a.cr)));
    }
    let cr = match &a.record {
        Some(p) => read_pecs(p)?.achieved_cr(),
        None => a.cr,
    };
    let reference = load_signal(&a.reference, Channel::Generic, 0)?;
    let estimate = load_signal(&a.estimate, Channel::Generic, 0)?;
    let report = MetricsReport::evaluate(reference.samples(), estimate.samples(), cr)?;
    let id = a.signal_id.clone().unwrap_or_else(|| default_id(&a.reference));
    emit_metrics(&id, &report, a.out.as_deref())
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::usage(format!("{what}: expected two comma-separated numbers, got '{text}'"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    Ok((x, y))
}

/// `none`, `calibrated`, `uniform:LO,HI` or `gaussian:MEAN,STD`, in µs.
pub fn parse_jitter(text: &str) -> Result<JitterDist, CliError> {
    match text.trim() {
        "none" => return Ok(JitterDist::None),
        "calibrated" => return Ok(JitterModel::calibrated().detect),
        _ => {}
    }
    let (kind, params) = text
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("unknown jitter '{text}'")))?;
    let (p, q) = parse_pair(params, "jitter")?;
    match kind.trim() {
        "uniform" => Ok(JitterDist::Uniform { lo: p * 1e-6, hi: q * 1e-6 }),
        "gaussian" => Ok(JitterDist::Gaussian { mean: p * 1e-6, std: q * 1e-6 }),
        other => Err(CliError::usage(format!("unknown jitter kind '{other}'"))),
    }
}

pub fn parse_ppm(text: &str, nodes: usize) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad ppm value '{}'", v.trim())))
        })
        .collect::<Result<_, _>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; nodes]),
        n if n == nodes => Ok(values),
        n => Err(CliError::usage(format!("{n} ppm values given for {nodes} nodes"))),
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn cmd_syncsim(a: SyncsimArgs) -> Result<(), CliError> {
    let ppm = parse_ppm(&a.ppm, a.nodes)?;
    let detect = parse_jitter(&a.jitter)?;
    let (lat_lo, lat_hi) = parse_pair(&a.parse_latency, "parse latency")?;
    let config = SimConfig {
        n_edge_nodes: a.nodes,
        sync_interval_s: a.interval,
        duration_s: a.minutes * 60.0,
        rng_seed: a.seed,
        sample_rate_hz: a.sample_rate,
        event_interval_s: a.event_interval,
        max_ppm: a.max_ppm,
    };
    let clocks: Vec<ClockModel> = ppm.iter().map(|&p| ClockModel::with_ppm(p)).collect();
    let jitter = JitterModel {
        detect,
        parse_latency_range_s: (lat_lo * 1e-3, lat_hi * 1e-3),
    };

    let trace = run_simulation(&config, &clocks, &jitter)?;
    let summary = trace.summary(a.sample_rate)?;

    let mut w = create(&a.output)?;
    trace.write_csv(&mut w).map_err(|e| io_error(&a.output, e))?;
    finish(w, &a.output)?;

    let summary_path = a.summary.clone().unwrap_or_else(|| with_extension(&a.output, "json"));
    let doc = serde_json::json!({
        "config": config,
        "ppm": ppm,
        "jitter": jitter,
        "summary": summary,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::runtime(e.to_string()))?;
    fs::write(&summary_path, text + "\n").map_err(|e| io_error(&summary_path, e))?;

    let svg_path = a.histogram.clone().unwrap_or_else(|| with_extension(&a.output, "svg"));
    let errors_us: Vec<f64> = trace.samples.iter().map(|s| s.pairwise_err_s * 1e6).collect();
    let plot = svg::histogram(
        &errors_us,
        HISTOGRAM_BINS,
        &format!("Pairwise timestamp error, {} nodes, seed {}", a.nodes, a.seed),
        "max - min corrected timestamp (us)",
    );
    fs::write(&svg_path, plot).map_err(|e| io_error(&svg_path, e))?;

    println!("syncs={} events={}", summary.sync_count, summary.event_count);
    println!(
        "response_diff_us median={:.3} std={:.3} max={:.3}",
        summary.median_response_diff_s * 1e6,
        summary.std_response_diff_s * 1e6,
        summary.max_response_diff_s * 1e6
    );
    println!("max_pairwise_err_us={:.3}", summary.max_pairwise_err_s * 1e6);
    match summary.max_fs_hz {
        Some(f) => println!("max_fs_khz={:.2}", f / 1e3),
        None => println!("max_fs_khz=unbounded"),
    }
    println!(
        "single_sample@{}Hz={}",
        a.sample_rate,
        if summary.single_sample_pass { "pass" } else { "fail" }
    );
    Ok(())
}

fn cmd_budget(a: BudgetArgs) -> Result<(), CliError> {
    let rate = effective_rate(BASELINE_RATE_BPS, a.cr)?;
    let profile = LinkProfile::default();
    let transports = match a.transport {
        Some(t) => vec![t],
        None => vec![Transport::Wifi, Transport::Bluetooth],
    };
    println!("cr={} effective_rate={} kbps", a.cr, round_sig(rate / 1e3, 3));
    for t in transports {
        println!("{t}: {}", format_power(&profile.power_lookup(t, a.cr)));
    }
    Ok(())
}
