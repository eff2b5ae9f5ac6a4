//! The `qoe` command line.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qoe_core::advice_engine::{diagnose_with, DeviceState, RuleTable, SessionContext};
use qoe_core::analytics::{fit_through_origin, residuals};
use qoe_core::config::PipelineConfig;
use qoe_core::mos_model::{estimate_from_throughput, estimate_network_detailed, score_metrics};
use qoe_core::playback_sim::{extract_metrics, simulate_session, BufferSample, StallEvent};
use qoe_core::{
    AppQoSMetrics, BandwidthTrace, CalibrationSlope, HistogramSpec, MosEstimate, MosScore,
    NetworkQoS, PlayerConfig, QuantizedLevels, RegressionFit, ResidualReport, TechnologyScope,
    VideoProfile,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{parse_grouping, query_stats, Metric};
use crate::store::{IngestError, ReportStore};

#[derive(Debug, Parser)]
#[command(
    name = "qoe",
    version,
    about = "Video QoE estimation, diagnosis and report collection"
)]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = "QOE_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub show_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Network QoS and video parameters to application metrics and MOS.
    Estimate(EstimateArgs),
    /// Replay a bandwidth trace through the player model.
    Simulate(SimulateArgs),
    /// Score measured application metrics.
    Score(ScoreArgs),
    /// Diagnose a device-state snapshot.
    Advise(AdviseArgs),
    /// Append a JSONL file of reports to the store.
    Ingest(IngestArgs),
    /// Aggregate stored reports.
    Stats(StatsArgs),
    /// Fit reported MOS against model MOS through the origin.
    Calibrate(CalibrateArgs),
    /// Run the HTTP collector.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    All,
    Wifi,
    Umts,
}

impl From<Scope> for TechnologyScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::All => TechnologyScope::All,
            Scope::Wifi => TechnologyScope::Wifi,
            Scope::Umts => TechnologyScope::Umts,
        }
    }
}

#[derive(Debug, Args)]
pub struct VideoArgs {
    /// Media size, bytes.
    #[arg(long)]
    pub media_size: f64,
    /// Media duration, seconds.
    #[arg(long)]
    pub duration: f64,
    /// Apply the calibration slope for this technology scope.
    #[arg(long, value_enum)]
    pub calibrate: Option<Scope>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Link bandwidth, bytes/second.
    #[arg(long, required_unless_present = "throughput")]
    pub bandwidth: Option<f64>,
    /// Round-trip time, seconds.
    #[arg(long, required_unless_present = "throughput")]
    pub rtt: Option<f64>,
    /// Packet loss probability.
    #[arg(long, default_value_t = 0.0)]
    pub loss: f64,
    /// Use this average throughput (bytes/second) instead of the TCP model.
    #[arg(long, conflicts_with_all = ["bandwidth", "rtt"])]
    pub throughput: Option<f64>,
    #[command(flatten)]
    pub video: VideoArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Trace CSV with header `time_s,rate_Bps`.
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub video: VideoArgs,
    /// Include the buffer trajectory in the output.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Initial buffering time, seconds.
    #[arg(long)]
    pub t_init: f64,
    /// Rebuffering events per second.
    #[arg(long)]
    pub f_rebuf: f64,
    /// Mean rebuffering duration, seconds.
    #[arg(long)]
    pub t_rebuf: f64,
    /// Apply the calibration slope for this technology scope.
    #[arg(long, value_enum)]
    pub calibrate: Option<Scope>,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    /// JSON `{"device": {...}, "session": {...}}`; `-` reads stdin.
    pub input: PathBuf,
    /// Replacement rule table (JSON).
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Store file; defaults to the configured path.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSONL file, one report per line; `-` reads stdin.
    pub input: PathBuf,
    #[command(flatten)]
    pub store: StoreArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// t_init, f_rebuf, t_rebuf or mos.
    #[arg(long)]
    pub metric: String,
    /// `technology` to split by technology group.
    #[arg(long)]
    pub group_by: Option<String>,
    #[command(flatten)]
    pub store: StoreArg,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with header `model,reported`.
    pub input: PathBuf,
    /// Residual histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; defaults to the configured one.
    #[arg(long)]
    pub listen: Option<String>,
    #[command(flatten)]
    pub store: StoreArg,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qoe_core::Error),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Failed(String),
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    json: bool,
    value: &T,
    text: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    if json {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out, "{s}")?;
    } else {
        text(out)?;
    }
    Ok(())
}

fn slope_for(
    cfg: &PipelineConfig,
    scope: Option<Scope>,
) -> Result<Option<CalibrationSlope>, CliError> {
    Ok(scope.map(|s| cfg.calibration.slope(s.into())).transpose()?)
}

fn video_and_player(
    cfg: &PipelineConfig,
    v: &VideoArgs,
) -> Result<(VideoProfile, PlayerConfig), CliError> {
    let video = cfg.video.profile(v.media_size, v.duration)?;
    let player = cfg.player.player_for(&video)?;
    Ok((video, player))
}

fn write_score(
    out: &mut dyn Write,
    levels: &QuantizedLevels,
    base: &MosScore,
    calibrated: Option<&MosScore>,
) -> io::Result<()> {
    writeln!(out, "levels        {levels}")?;
    writeln!(out, "mos (base)    {:.4}", base.value)?;
    if let Some(c) = calibrated {
        writeln!(out, "mos (calib.)  {:.4}", c.value)?;
    }
    Ok(())
}

fn write_metrics(out: &mut dyn Write, m: &AppQoSMetrics) -> io::Result<()> {
    writeln!(out, "t_init        {:.3} s", m.t_init)?;
    writeln!(out, "f_rebuf       {:.6} /s", m.f_rebuf)?;
    writeln!(out, "t_rebuf       {:.3} s", m.t_rebuf)?;
    writeln!(out, "pauses        {}", m.n_pauses)
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(flatten)]
    estimate: MosEstimate,
    mos: f64,
}

fn estimate(
    cfg: &PipelineConfig,
    a: &EstimateArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (video, player) = video_and_player(cfg, &a.video)?;
    let slope = slope_for(cfg, a.video.calibrate)?;
    let est = match a.throughput {
        Some(tp) => estimate_from_throughput(
            tp,
            &video,
            &player,
            &cfg.quantization,
            &cfg.mos,
            slope.as_ref(),
        )?,
        None => {
            let (bw, rtt) = (a.bandwidth.unwrap_or_default(), a.rtt.unwrap_or_default());
            let qos = NetworkQoS::new(bw, rtt, a.loss)?;
            let tcp = cfg.tcp.params_for_rtt(rtt);
            estimate_network_detailed(
                &qos,
                &tcp,
                &video,
                &player,
                &cfg.quantization,
                &cfg.mos,
                slope.as_ref(),
            )?
        }
    };
    let o = EstimateOutput {
        estimate: est,
        mos: est.score().value,
    };
    emit(out, json, &o, |w| {
        writeln!(w, "throughput    {:.1} B/s", est.throughput)?;
        write_metrics(w, &est.metrics)?;
        write_score(w, &est.levels, &est.base, est.calibrated.as_ref())
    })
}

#[derive(Serialize)]
struct SimulateOutput {
    t_init: f64,
    stall_events: Vec<StallEvent<f64>>,
    reproduction_time: f64,
    download_complete_time: f64,
    metrics: AppQoSMetrics,
    levels: QuantizedLevels,
    base: MosScore,
    calibrated: Option<MosScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffer_trajectory: Option<Vec<BufferSample<f64>>>,
}

fn simulate(
    cfg: &PipelineConfig,
    a: &SimulateArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let file = fs::File::open(&a.trace)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.trace.display())))?;
    let trace = BandwidthTrace::from_csv(file)?;
    let (video, player) = video_and_player(cfg, &a.video)?;
    let timeline = simulate_session(&trace, &video, &player)?;
    let metrics = extract_metrics(&timeline);
    let slope = slope_for(cfg, a.video.calibrate)?;
    let (levels, base, calibrated) =
        score_metrics(&metrics, &cfg.quantization, &cfg.mos, slope.as_ref())?;
    let o = SimulateOutput {
        t_init: timeline.t_init,
        stall_events: timeline.stall_events.clone(),
        reproduction_time: timeline.reproduction_time,
        download_complete_time: timeline.download_complete_time,
        metrics,
        levels,
        base,
        calibrated,
        buffer_trajectory: a.trajectory.then(|| timeline.buffer_trajectory.clone()),
    };
    emit(out, json, &o, |w| {
        writeln!(w, "download done {:.3} s", o.download_complete_time)?;
        writeln!(w, "reproduction  {:.3} s", o.reproduction_time)?;
        for s in &o.stall_events {
            writeln!(w, "stall         {:.3} s for {:.3} s", s.start, s.duration)?;
        }
        write_metrics(w, &metrics)?;
        write_score(w, &levels, &base, calibrated.as_ref())?;
        if let Some(traj) = &o.buffer_trajectory {
            writeln!(w, "time,downloaded,played,buffered,backlog,state")?;
            for b in traj {
                writeln!(
                    w,
                    "{},{},{},{},{},{:?}",
                    b.time, b.downloaded, b.played, b.buffered, b.backlog, b.state
                )?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ScoreOutput {
    levels: QuantizedLevels,
    base: MosScore,
    calibrated: Option<MosScore>,
    mos: f64,
}

fn score(
    cfg: &PipelineConfig,
    a: &ScoreArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let pauses = usize::from(a.f_rebuf > 0.0);
    let metrics = AppQoSMetrics::new(a.t_init, a.f_rebuf, a.t_rebuf, pauses);
    if !metrics.is_valid() {
        return Err(CliError::Input(
            "metrics must be finite and non-negative".into(),
        ));
    }
    let slope = slope_for(cfg, a.calibrate)?;
    let (levels, base, calibrated) =
        score_metrics(&metrics, &cfg.quantization, &cfg.mos, slope.as_ref())?;
    let o = ScoreOutput {
        levels,
        base,
        calibrated,
        mos: calibrated.unwrap_or(base).value,
    };
    emit(out, json, &o, |w| {
        write_score(w, &levels, &base, calibrated.as_ref())
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdviseInput {
    device: DeviceState,
    #[serde(default)]
    session: SessionContext,
}

#[derive(Serialize)]
struct AdviceLine {
    cause: String,
    advice: String,
}

fn advise(
    cfg: &PipelineConfig,
    a: &AdviseArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let input: AdviseInput = serde_json::from_str(&read_input(&a.input)?)
        .map_err(|e| CliError::Input(format!("device state: {e}")))?;
    input.device.validate().map_err(CliError::Input)?;
    input.session.validate().map_err(CliError::Input)?;
    let table = match &a.rules {
        Some(p) => RuleTable::from_json(&read_input(p)?)
            .map_err(|e| CliError::Input(format!("rules: {e}")))?,
        None => RuleTable::standard(),
    };
    let lines: Vec<AdviceLine> = diagnose_with(&table, &input.device, &input.session, &cfg.advice)
        .into_iter()
        .map(|d| AdviceLine {
            cause: d.cause.label().to_owned(),
            advice: d.advice.text().to_owned(),
        })
        .collect();
    emit(out, json, &lines, |w| {
        if lines.is_empty() {
            writeln!(w, "no issues found")?;
        }
        for l in &lines {
            writeln!(w, "{}: {}", l.cause, l.advice)?;
        }
        Ok(())
    })
}

fn open_store(cfg: &PipelineConfig, s: &StoreArg) -> Result<ReportStore, CliError> {
    let path = s
        .store
        .clone()
        .unwrap_or_else(|| cfg.collector.store_path.clone());
    ReportStore::open(&path).map_err(|e| CliError::Failed(e.to_string()))
}

#[derive(Serialize)]
struct Rejection {
    line: usize,
    errors: Vec<String>,
}

#[derive(Serialize)]
struct IngestOutput {
    accepted: Vec<u64>,
    rejected: Vec<Rejection>,
}

fn ingest(
    cfg: &PipelineConfig,
    a: &IngestArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let text = read_input(&a.input)?;
    let store = open_store(cfg, &a.store)?;
    let mut o = IngestOutput {
        accepted: Vec::new(),
        rejected: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match store.ingest(line) {
            Ok(seq) => o.accepted.push(seq),
            Err(IngestError::Invalid(v)) => o.rejected.push(Rejection {
                line: i + 1,
                errors: v.iter().map(ToString::to_string).collect(),
            }),
            Err(e @ IngestError::Malformed(_)) => o.rejected.push(Rejection {
                line: i + 1,
                errors: vec![e.to_string()],
            }),
            Err(IngestError::Storage(e)) => return Err(CliError::Failed(e.to_string())),
        }
    }
    emit(out, json, &o, |w| {
        writeln!(
            w,
            "accepted {} report(s) into {}",
            o.accepted.len(),
            store.path().display()
        )?;
        for r in &o.rejected {
            writeln!(w, "line {}: {}", r.line, r.errors.join("; "))?;
        }
        Ok(())
    })?;
    if o.rejected.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} line(s) rejected",
            o.rejected.len()
        )))
    }
}

fn stats(
    cfg: &PipelineConfig,
    a: &StatsArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let metric: Metric = a
        .metric
        .parse()
        .map_err(|e: crate::stats::QueryError| CliError::Input(e.to_string()))?;
    let grouped =
        parse_grouping(a.group_by.as_deref()).map_err(|e| CliError::Input(e.to_string()))?;
    let store = open_store(cfg, &a.store)?;
    let result = query_stats(&store.reports(), metric, grouped)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    emit(out, json, &result, |w| write!(w, "{result}"))
}

#[derive(Deserialize)]
struct PairRow {
    model: f64,
    reported: f64,
}

#[derive(Serialize)]
struct CalibrateOutput {
    fit: RegressionFit,
    /// Calibrated model minus reported.
    residuals: ResidualReport,
}

fn calibrate(a: &CalibrateArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read_input(&a.input)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let (mut model, mut reported) = (Vec::new(), Vec::new());
    for row in rdr.deserialize::<PairRow>() {
        let row = row.map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
        model.push(row.model);
        reported.push(row.reported);
    }
    let fit = fit_through_origin(&model, &reported)?;
    let predicted: Vec<f64> = model.iter().map(|&m| fit.predict(m)).collect();
    let mut spec = HistogramSpec::default();
    if let Some(b) = a.bins {
        spec.bins = b;
    }
    let res = residuals(&predicted, &reported, &spec)?;
    let o = CalibrateOutput {
        fit,
        residuals: res,
    };
    emit(out, json, &o, |w| {
        writeln!(w, "n             {}", fit.n)?;
        writeln!(w, "slope         {:.6}", fit.slope)?;
        writeln!(w, "r_squared     {:.6} (uncentered)", fit.r_squared)?;
        match fit.pearson_r {
            Some(r) => writeln!(w, "pearson_r     {r:.6}")?,
            None => writeln!(w, "pearson_r     undefined")?,
        }
        writeln!(w, "within 0.5    {:.4}", o.residuals.frac_within_half)?;
        writeln!(
            w,
            "model below   {:.4}",
            o.residuals.frac_model_below_reported
        )
    })
}

fn serve(cfg: &PipelineConfig, a: &ServeArgs) -> Result<(), CliError> {
    let store = Arc::new(open_store(cfg, &a.store)?);
    let listen = a
        .listen
        .clone()
        .unwrap_or_else(|| cfg.collector.listen.clone());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, crate::http::router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    if cli.show_config {
        return emit(out, cli.json, &cfg, |w| {
            write!(w, "{}", cfg.to_toml_string())
        });
    }
    let json = cli.json;
    match &cli.command {
        Some(Command::Estimate(a)) => estimate(&cfg, a, json, out),
        Some(Command::Simulate(a)) => simulate(&cfg, a, json, out),
        Some(Command::Score(a)) => score(&cfg, a, json, out),
        Some(Command::Advise(a)) => advise(&cfg, a, json, out),
        Some(Command::Ingest(a)) => ingest(&cfg, a, json, out),
        Some(Command::Stats(a)) => stats(&cfg, a, json, out),
        Some(Command::Calibrate(a)) => calibrate(a, json, out),
        Some(Command::Serve(a)) => serve(&cfg, a),
        None => Err(CliError::Input("no command given (see --help)".into())),
    }
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Input(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}
