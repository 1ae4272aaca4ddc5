//! Command-line surface: reproducible certification runs with
//! machine-readable artifacts. Every artifact embeds the fully-resolved
//! configuration and seed; the timestamp is confined to one header field so
//! re-runs are byte-identical apart from it.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhs::{
    falsify, fine_grained_game_max, model_fgsi_value, saturating_model, FalsificationRun,
    ModelFgsi, SteeringBounds,
};
use crate::montecarlo::{estimate_s, scan_theta, simulate_counts, ExperimentConfig, ScanRow};
use crate::optics::{
    parse_table, reference_table, solve_angles, verify_table_row, RowReport, TableRow,
    WaveplateSequence, TABLE_ROUNDING_TOLERANCE,
};
use crate::quantum::{gghz_state, Axis, Observable};
use crate::steering::{fgsi_value, optimal_scenario, OutcomePattern};

/// Environment variable supplying the default RNG seed.
pub const SEED_ENV_VAR: &str = "STEERCERT_SEED";

/// Tolerance on |S − 4| for the scan-theta certification exit code.
pub const CERTIFICATION_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "steercert",
    version,
    about = "Certification toolkit for tripartite steering of GGHZ states"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact S, a Monte Carlo estimate, and the classical bounds per state angle.
    ScanTheta {
        /// Angle grid: a single angle (0.25pi) or start:end:count (0.05pi:0.45pi:9).
        #[arg(long)]
        grid: Option<String>,
        /// Simulated events per setting combination.
        #[arg(long)]
        events: Option<u64>,
        /// Per-detector detection probability in (0, 1].
        #[arg(long)]
        efficiency: Option<f64>,
        /// Dark-count substitution probability in [0, 1).
        #[arg(long)]
        dark: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classical bounds, the saturating model, and a falsification-sampler summary.
    Bounds {
        /// Number of random hybrid models to sample (0 for bounds only).
        #[arg(long)]
        samples: Option<u64>,
        /// Hidden variables per sampled model (1..=16).
        #[arg(long)]
        lambdas: Option<usize>,
        /// Charlie's measurement pair, e.g. x,y.
        #[arg(long)]
        charlie: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Randomized falsification run against the known-measurement bound.
    Falsify {
        /// Number of random hybrid models to sample.
        #[arg(long)]
        samples: Option<u64>,
        /// Hidden variables per sampled model (1..=16).
        #[arg(long)]
        lambdas: Option<usize>,
        /// Charlie's measurement pair, e.g. x,y.
        #[arg(long)]
        charlie: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Waveplate angles realizing the optimal measurements for one state angle.
    SolveAngles {
        /// State angle, e.g. 0.2pi or 0.628.
        #[arg(long)]
        theta: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Deviation report for a waveplate settings table (bundled table by default).
    VerifyTable {
        /// Path to a settings table; omit for the bundled one.
        path: Option<PathBuf>,
        /// Pass tolerance on the Bloch deviation.
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate coincidence counts for one state angle and estimate S.
    Simulate {
        /// State angle, e.g. 0.3pi.
        #[arg(long)]
        theta: Option<String>,
        /// Simulated events per setting combination.
        #[arg(long)]
        events: Option<u64>,
        /// Per-detector detection probability in (0, 1].
        #[arg(long)]
        efficiency: Option<f64>,
        /// Dark-count substitution probability in [0, 1).
        #[arg(long)]
        dark: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config file; flag values override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact format (CSV for tables, JSON for nested reports).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Artifact path; written to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; defaults to the config file, then STEERCERT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Config-file record; unknown keys (such as an echoed "command") are ignored
/// so an embedded config round-trips.
#[derive(Deserialize, Debug, Default)]
struct FileConfig {
    grid: Option<String>,
    theta: Option<AngleSpec>,
    events: Option<u64>,
    seed: Option<u64>,
    efficiency: Option<f64>,
    dark: Option<f64>,
    samples: Option<u64>,
    lambdas: Option<usize>,
    charlie: Option<String>,
    tolerance: Option<f64>,
    table: Option<String>,
    format: Option<String>,
}

/// An angle, either a number in radians or a string with a trailing "pi".
#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum AngleSpec {
    Radians(f64),
    Literal(String),
}

impl AngleSpec {
    fn resolve(&self) -> Result<f64> {
        match self {
            AngleSpec::Radians(r) => Ok(*r),
            AngleSpec::Literal(s) => parse_angle(s),
        }
    }
}

/// Fully-resolved parameters echoed into every artifact.
#[derive(Serialize, Debug)]
struct ResolvedConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambdas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    charlie: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<String>,
    format: &'static str,
}

impl ResolvedConfig {
    fn new(command: &'static str, format: Format) -> Self {
        ResolvedConfig {
            command,
            grid: None,
            theta: None,
            events: None,
            seed: None,
            efficiency: None,
            dark: None,
            samples: None,
            lambdas: None,
            charlie: None,
            tolerance: None,
            table: None,
            format: format.name(),
        }
    }
}

/// Parses an angle literal: a plain number is radians, a trailing "pi"
/// multiplies by π (e.g. 0.25pi).
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    let (num, factor) = match t.strip_suffix("pi") {
        Some(prefix) => (prefix.trim(), std::f64::consts::PI),
        None => (t, 1.0),
    };
    num.parse::<f64>()
        .map(|v| v * factor)
        .map_err(|_| Error::Invalid {
            what: "angle",
            reason: format!("cannot parse {text:?} (expected e.g. 0.25pi or 0.785)"),
        })
}

/// Parses a grid literal: either one angle or start:end:count with inclusive
/// endpoints.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_angle(single)?]),
        [start, end, count] => {
            let start = parse_angle(start)?;
            let end = parse_angle(end)?;
            let count: usize = count.parse().map_err(|_| Error::Invalid {
                what: "grid",
                reason: format!("count {count:?} is not an integer"),
            })?;
            if count == 0 {
                return Err(Error::Invalid {
                    what: "grid",
                    reason: "count must be at least 1".into(),
                });
            }
            if count == 1 {
                return Ok(vec![start]);
            }
            let step = (end - start) / (count - 1) as f64;
            Ok((0..count).map(|n| start + step * n as f64).collect())
        }
        _ => Err(Error::Invalid {
            what: "grid",
            reason: format!("expected ANGLE or START:END:COUNT, got {text:?}"),
        }),
    }
}

fn parse_charlie(text: &str) -> Result<([Observable; 2], String)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Invalid {
            what: "charlie pair",
            reason: format!("expected two comma-separated axes, got {text:?}"),
        });
    }
    let a: Axis = parts[0].parse()?;
    let b: Axis = parts[1].parse()?;
    Ok((
        [Observable::pauli(a), Observable::pauli(b)],
        format!(
            "{},{}",
            parts[0].to_ascii_lowercase(),
            parts[1].to_ascii_lowercase()
        ),
    ))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid {
        what: "config file",
        reason: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid {
        what: "config file",
        reason: format!("{}: {e}", path.display()),
    })
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.parse().map_err(|_| Error::Invalid {
            what: "seed",
            reason: format!("{SEED_ENV_VAR}={text:?} is not a u64"),
        }),
        Err(_) => Ok(0),
    }
}

fn resolve_format(flag: Option<Format>, file: Option<&str>, default: Format) -> Result<Format> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match file {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some(other) => Err(Error::Invalid {
            what: "format",
            reason: format!("expected csv or json, got {other:?}"),
        }),
        None => Ok(default),
    }
}

fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes the artifact to `out` (or stdout) and the human summary to the
/// remaining stream.
fn emit(artifact: &str, out: Option<&Path>, summary: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact).map_err(|e| Error::Invalid {
                what: "output path",
                reason: format!("{}: {e}", path.display()),
            })?;
            println!("{summary}");
            println!("artifact written to {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(artifact.as_bytes()).ok();
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn csv_header(config: &ResolvedConfig, columns: &str) -> String {
    let mut text = String::new();
    text.push_str(&format!("# generated_at = {}\n", unix_timestamp()));
    text.push_str(&format!(
        "# config = {}\n",
        serde_json::to_string(config).expect("config serializes")
    ));
    text.push_str(columns);
    text.push('\n');
    text
}

fn json_artifact(config: &ResolvedConfig, payload: serde_json::Value) -> String {
    let mut root = serde_json::Map::new();
    root.insert("generated_at".into(), unix_timestamp().into());
    root.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    if let serde_json::Value::Object(map) = payload {
        for (k, v) in map {
            root.insert(k, v);
        }
    }
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Object(root)).expect("serializable");
    text.push('\n');
    text
}

/// Parses arguments and runs the selected command, returning the process exit
/// code. Usage errors print a diagnostic to stderr and return 1; scan-theta
/// returns 2 when certification fails.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    let result = match cli.command {
        Command::ScanTheta {
            grid,
            events,
            efficiency,
            dark,
            common,
        } => cmd_scan_theta(grid, events, efficiency, dark, common),
        Command::Bounds {
            samples,
            lambdas,
            charlie,
            common,
        } => cmd_bounds(samples, lambdas, charlie, common, false),
        Command::Falsify {
            samples,
            lambdas,
            charlie,
            common,
        } => cmd_bounds(samples, lambdas, charlie, common, true),
        Command::SolveAngles { theta, common } => cmd_solve_angles(theta, common),
        Command::VerifyTable {
            path,
            tolerance,
            common,
        } => cmd_verify_table(path, tolerance, common),
        Command::Simulate {
            theta,
            events,
            efficiency,
            dark,
            common,
        } => cmd_simulate(theta, events, efficiency, dark, common),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_scan_theta(
    grid: Option<String>,
    events: Option<u64>,
    efficiency: Option<f64>,
    dark: Option<f64>,
    common: CommonArgs,
) -> Result<u8> {
    let file = load_file_config(common.config.as_deref())?;
    let grid_text = grid.or(file.grid.clone()).ok_or_else(|| Error::Invalid {
        what: "scan-theta",
        reason: "missing --grid".into(),
    })?;
    let grid_values = parse_grid(&grid_text)?;
    let events = events.or(file.events).unwrap_or(10_000);
    let seed = resolve_seed(common.seed, file.seed)?;
    let efficiency = efficiency.or(file.efficiency).unwrap_or(1.0);
    let dark = dark.or(file.dark).unwrap_or(0.0);
    let format = resolve_format(common.format, file.format.as_deref(), Format::Csv)?;

    let template =
        ExperimentConfig::new(grid_values.first().copied().unwrap_or(0.1), events, seed)?
            .with_efficiency(efficiency)?
            .with_dark_rate(dark)?;
    let rows = scan_theta(&grid_values, &template);

    let mut config = ResolvedConfig::new("scan-theta", format);
    config.grid = Some(grid_text);
    config.events = Some(events);
    config.seed = Some(seed);
    config.efficiency = Some(efficiency);
    config.dark = Some(dark);

    let artifact = match format {
        Format::Csv => {
            let mut text = csv_header(
                &config,
                "theta,exact_s,s_hat,s_stderr,bound_known,bound_unknown,annotation",
            );
            for row in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.theta,
                    row.exact_s,
                    row.s_hat,
                    row.s_stderr,
                    row.bound_known,
                    row.bound_unknown,
                    csv_field(row.annotation.as_deref().unwrap_or("")),
                ));
            }
            text
        }
        Format::Json => json_artifact(
            &config,
            serde_json::json!({ "rows": serde_json::to_value(&rows).expect("rows serialize") }),
        ),
    };

    let certified = rows
        .iter()
        .all(|r: &ScanRow| (r.exact_s - 4.0).abs() <= CERTIFICATION_TOLERANCE);
    let summary = format!(
        "scanned {} angle(s): exact S {} the algebraic maximum 4 (tolerance {:.0e})",
        rows.len(),
        if certified { "matches" } else { "MISSES" },
        CERTIFICATION_TOLERANCE
    );
    emit(&artifact, common.out.as_deref(), &summary)?;
    Ok(if certified { 0 } else { 2 })
}

fn cmd_bounds(
    samples: Option<u64>,
    lambdas: Option<usize>,
    charlie: Option<String>,
    common: CommonArgs,
    sampler_only: bool,
) -> Result<u8> {
    let file = load_file_config(common.config.as_deref())?;
    let samples = samples.or(file.samples).unwrap_or(10_000);
    let lambdas = lambdas.or(file.lambdas).unwrap_or(8);
    let seed = resolve_seed(common.seed, file.seed)?;
    let charlie_text = charlie.or(file.charlie).unwrap_or_else(|| "x,y".into());
    let (charlie_pair, charlie_canonical) = parse_charlie(&charlie_text)?;
    let format = resolve_format(common.format, file.format.as_deref(), Format::Json)?;
    if format == Format::Csv {
        return Err(Error::Invalid {
            what: "format",
            reason: "bounds and falsify emit nested reports; use json".into(),
        });
    }

    let command_name = if sampler_only { "falsify" } else { "bounds" };
    let bounds = SteeringBounds::for_charlie_pair(&charlie_pair[0], &charlie_pair[1]);
    let pattern = OutcomePattern::canonical();

    let falsification: Option<FalsificationRun> = if samples > 0 {
        Some(falsify(
            samples as usize,
            lambdas,
            seed,
            &charlie_pair,
            &pattern,
        )?)
    } else {
        None
    };

    let mut config = ResolvedConfig::new(command_name, format);
    config.samples = Some(samples);
    config.lambdas = Some(lambdas);
    config.seed = Some(seed);
    config.charlie = Some(charlie_canonical);

    let mut payload = serde_json::Map::new();
    payload.insert(
        "bounds".into(),
        serde_json::to_value(bounds).expect("bounds serialize"),
    );
    let mut summary_lines = vec![format!(
        "bound (known measurements)   = {:.5}",
        bounds.known_measurements
    )];
    summary_lines.push(format!(
        "bound (unknown measurements) = {:.5}",
        bounds.unknown_measurements
    ));
    summary_lines.push(format!(
        "algebraic maximum            = {:.5}",
        bounds.algebraic_max
    ));

    if !sampler_only {
        let model = saturating_model(&charlie_pair[0], &charlie_pair[1]);
        let game = fine_grained_game_max(&charlie_pair[0], &charlie_pair[1], (0, 0));
        let saturating_s = match model_fgsi_value(&model, &charlie_pair, &pattern) {
            ModelFgsi::Defined(b) => b.value,
            ModelFgsi::Undefined { .. } => f64::NAN,
        };
        payload.insert(
            "saturating_model".into(),
            serde_json::json!({
                "s": saturating_s,
                "lambda_count": model.lambda_count(),
                "charlie_state_bloch": [game.maximizer.x, game.maximizer.y, game.maximizer.z],
                "game_max_probability": game.probability,
            }),
        );
        summary_lines.push(format!(
            "saturating model: S = {saturating_s:.5} with {} hidden variables, Charlie state along ({:.4}, {:.4}, {:.4})",
            model.lambda_count(), game.maximizer.x, game.maximizer.y, game.maximizer.z
        ));
    }

    if let Some(run) = &falsification {
        payload.insert(
            "falsification".into(),
            serde_json::to_value(run).expect("run serializes"),
        );
        summary_lines.push(format!(
            "falsification: max S = {:.5} over {} models ({} defined, {} discarded); bound {}",
            run.max_s,
            run.samples,
            run.defined,
            run.discarded,
            if run.bound_respected {
                "respected"
            } else {
                "VIOLATED"
            }
        ));
    } else {
        summary_lines.push("falsification: skipped (--samples 0)".into());
    }

    let artifact = json_artifact(&config, serde_json::Value::Object(payload));
    emit(&artifact, common.out.as_deref(), &summary_lines.join("\n"))?;
    Ok(0)
}

fn cmd_solve_angles(theta: Option<String>, common: CommonArgs) -> Result<u8> {
    let file = load_file_config(common.config.as_deref())?;
    let theta = match theta {
        Some(text) => parse_angle(&text)?,
        None => file
            .theta
            .as_ref()
            .ok_or_else(|| Error::Invalid {
                what: "solve-angles",
                reason: "missing --theta".into(),
            })?
            .resolve()?,
    };
    let format = resolve_format(common.format, file.format.as_deref(), Format::Json)?;
    if format == Format::Csv {
        return Err(Error::Invalid {
            what: "format",
            reason: "solve-angles emits a nested report; use json".into(),
        });
    }
    let scenario = optimal_scenario(theta)?;

    let solve = |target: &Observable| -> Result<(WaveplateSequence, [f64; 3])> {
        let seq = solve_angles(target)?;
        let deg = seq
            .sandwich_angles_deg()
            .expect("solver returns sandwiches");
        Ok((seq, deg))
    };
    let (_, b0_deg) = solve(scenario.bob(0))?;
    let (_, b1_deg) = solve(scenario.bob(1))?;
    let (_, y_deg) = solve(scenario.alice(1))?;

    let mut config = ResolvedConfig::new("solve-angles", format);
    config.theta = Some(theta);

    let bloch_of = |o: &Observable| {
        let b = o.bloch();
        [b.x, b.y, b.z]
    };
    let payload = serde_json::json!({
        "b0": { "target_bloch": bloch_of(scenario.bob(0)), "qwp_hwp_qwp_deg": b0_deg },
        "b1": { "target_bloch": bloch_of(scenario.bob(1)), "qwp_hwp_qwp_deg": b1_deg },
        "a0_c0": { "target_bloch": bloch_of(scenario.alice(0)), "hwp_deg": 22.5 },
        "a1_c1": { "target_bloch": bloch_of(scenario.alice(1)), "qwp_hwp_qwp_deg": y_deg },
    });
    let fmt3 = |d: &[f64; 3]| format!("({:.1}°, {:.1}°, {:.1}°)", d[0], d[1], d[2]);
    let summary = format!(
        "theta = {theta:.6} rad\nB0: QWP-HWP-QWP {}\nB1: QWP-HWP-QWP {}\nA0/C0: HWP 22.5°\nA1/C1: QWP-HWP-QWP {}",
        fmt3(&b0_deg),
        fmt3(&b1_deg),
        fmt3(&y_deg)
    );
    let artifact = json_artifact(&config, payload);
    emit(&artifact, common.out.as_deref(), &summary)?;
    Ok(0)
}

fn cmd_verify_table(
    path: Option<PathBuf>,
    tolerance: Option<f64>,
    common: CommonArgs,
) -> Result<u8> {
    let file = load_file_config(common.config.as_deref())?;
    let path = path.or_else(|| file.table.as_ref().map(PathBuf::from));
    let tolerance = tolerance
        .or(file.tolerance)
        .unwrap_or(TABLE_ROUNDING_TOLERANCE);
    let format = resolve_format(common.format, file.format.as_deref(), Format::Json)?;

    let rows: Vec<TableRow> = match &path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Invalid {
                what: "settings table",
                reason: format!("{}: {e}", p.display()),
            })?;
            parse_table(&text)?
        }
        None => reference_table(),
    };
    let reports: Vec<RowReport> = rows
        .iter()
        .map(|r| verify_table_row(r, tolerance))
        .collect();

    let mut config = ResolvedConfig::new("verify-table", format);
    config.tolerance = Some(tolerance);
    config.table = Some(
        path.as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "bundled".into()),
    );

    let artifact = match format {
        Format::Csv => {
            let mut text = csv_header(
                &config,
                "theta_over_pi,convention,b0_deviation,b0_swapped,b1_deviation,b1_swapped,best,pass",
            );
            for report in &reports {
                for per in &report.per_convention {
                    let conv = serde_json::to_value(per.convention).expect("convention serializes");
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        report.theta / std::f64::consts::PI,
                        conv.as_str().unwrap(),
                        per.b0_deviation,
                        per.b0_swapped,
                        per.b1_deviation,
                        per.b1_swapped,
                        per.convention == report.best_convention,
                        report.pass,
                    ));
                }
            }
            text
        }
        Format::Json => json_artifact(
            &config,
            serde_json::json!({
                "tolerance": tolerance,
                "rows": serde_json::to_value(&reports).expect("reports serialize"),
            }),
        ),
    };

    let passed = reports.iter().filter(|r| r.pass).count();
    let mut summary = format!(
        "verified {} rows at tolerance {tolerance}: {passed} pass, {} flagged",
        reports.len(),
        reports.len() - passed
    );
    for report in &reports {
        let conv = serde_json::to_value(report.best_convention).expect("serializes");
        summary.push_str(&format!(
            "\n  theta = {:.2}pi: best {} | B0 dev {:.4}{} | B1 dev {:.4}{} | {}",
            report.theta / std::f64::consts::PI,
            conv.as_str().unwrap(),
            report.b0_deviation,
            if report
                .per_convention
                .iter()
                .any(|p| p.convention == report.best_convention && p.b0_swapped)
            {
                " (ports swapped)"
            } else {
                ""
            },
            report.b1_deviation,
            if report
                .per_convention
                .iter()
                .any(|p| p.convention == report.best_convention && p.b1_swapped)
            {
                " (ports swapped)"
            } else {
                ""
            },
            if report.pass { "pass" } else { "flag" }
        ));
    }
    emit(&artifact, common.out.as_deref(), &summary)?;
    Ok(0)
}

fn cmd_simulate(
    theta: Option<String>,
    events: Option<u64>,
    efficiency: Option<f64>,
    dark: Option<f64>,
    common: CommonArgs,
) -> Result<u8> {
    let file = load_file_config(common.config.as_deref())?;
    let theta = match theta {
        Some(text) => parse_angle(&text)?,
        None => file
            .theta
            .as_ref()
            .ok_or_else(|| Error::Invalid {
                what: "simulate",
                reason: "missing --theta".into(),
            })?
            .resolve()?,
    };
    let events = events.or(file.events).unwrap_or(100_000);
    let seed = resolve_seed(common.seed, file.seed)?;
    let efficiency = efficiency.or(file.efficiency).unwrap_or(1.0);
    let dark = dark.or(file.dark).unwrap_or(0.0);
    let format = resolve_format(common.format, file.format.as_deref(), Format::Json)?;

    let experiment = ExperimentConfig::new(theta, events, seed)?
        .with_efficiency(efficiency)?
        .with_dark_rate(dark)?;
    let state = gghz_state(theta)?;
    let scenario = optimal_scenario(theta)?;
    let pattern = OutcomePattern::canonical();
    let counts = simulate_counts(&state, &scenario, &experiment)?;
    let estimate = estimate_s(&counts, &pattern);
    let exact = fgsi_value(&state, &scenario, &pattern)?.value;
    let bounds = SteeringBounds::reference();

    let mut config = ResolvedConfig::new("simulate", format);
    config.theta = Some(theta);
    config.events = Some(events);
    config.seed = Some(seed);
    config.efficiency = Some(efficiency);
    config.dark = Some(dark);

    let artifact = match format {
        Format::Csv => {
            let mut text = csv_header(
                &config,
                "theta,setting_i,setting_j,setting_k,a,b,c,count,p_hat,stderr,s_hat,s_stderr",
            );
            for (s, &(i, j, k)) in counts.settings.iter().enumerate() {
                for abc in 0..8u8 {
                    let (a, b, c) = ((abc >> 2) & 1, (abc >> 1) & 1, abc & 1);
                    let term = estimate.terms.iter().find_map(|t| {
                        t.estimate().filter(|e| {
                            (e.term.i, e.term.j, e.term.k) == (i, j, k)
                                && (e.term.a, e.term.b, e.term.c) == (a, b, c)
                        })
                    });
                    let (p_hat, stderr) = match term {
                        Some(e) => (e.p_hat.to_string(), e.stderr.to_string()),
                        None => (String::new(), String::new()),
                    };
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        theta,
                        i,
                        j,
                        k,
                        a,
                        b,
                        c,
                        counts.count(s, a, b, c),
                        p_hat,
                        stderr,
                        estimate.s_hat,
                        estimate.s_stderr,
                    ));
                }
            }
            text
        }
        Format::Json => json_artifact(
            &config,
            serde_json::json!({
                "counts": serde_json::to_value(&counts).expect("counts serialize"),
                "estimate": serde_json::to_value(&estimate).expect("estimate serializes"),
                "exact_s": exact,
                "bounds": serde_json::to_value(bounds).expect("bounds serialize"),
            }),
        ),
    };

    let summary = format!(
        "s_hat = {:.6} ± {:.6} (exact {:.6}) | bounds: known {:.5}, unknown {}, algebraic max {}{}",
        estimate.s_hat,
        estimate.s_stderr,
        exact,
        bounds.known_measurements,
        bounds.unknown_measurements,
        bounds.algebraic_max,
        if estimate.partial {
            format!(" | PARTIAL, discarded terms {:?}", estimate.discarded_terms)
        } else {
            String::new()
        }
    );
    emit(&artifact, common.out.as_deref(), &summary)?;
    Ok(0)
}
