//! Batch front-end: config ingestion, scenario subcommands, sweep runner and
//! CSV/JSON emitters.
//!
//! Every run writes a `manifest.json` next to its outputs with the exact
//! config snapshot, seed, command line, output list and truncation-tail
//! diagnostics; every emitted file carries a reference to that manifest.
//! Outputs are byte-identical for identical config and seed. Exit codes:
//! 0 success, 2 config error, 3 non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuit::{Experiment, ExperimentConfig, TrialRecord};
use crate::error::{Error, Result};
use crate::steering::{
    check_spacetime_ordering, evaluate_steering, loss_bound, platonic_settings, Event,
    EventGeometry, MeasurementSet, SteeringResult,
};
use crate::tomography::{
    mc_uncertainty, reconstruct_mle, singlet_ket, synth_counts, Basis, TomographyCounts,
    TwoQubitDensityMatrix, ALL_BASES,
};

/// Top-level config file: protocol settings plus the experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of measurement settings (2, 3, 4, 6, 10 or 16).
    #[serde(default = "default_n_settings")]
    pub n_settings: usize,
    pub experiment: ExperimentConfig,
}

fn default_n_settings() -> usize {
    6
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn settings(&self) -> Result<MeasurementSet> {
        platonic_settings(self.n_settings)
    }
}

/// Timing-check geometry file. Spelled out field by field because serde's
/// `flatten` would defeat `deny_unknown_fields`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub signal_speed_fraction: f64,
    pub pair_generation: Event,
    pub rng_choice: Event,
    pub bsm: Event,
    pub bob_detection: Event,
    pub alice_report: Event,
}

impl GeometryFile {
    pub fn geometry(&self) -> EventGeometry {
        EventGeometry {
            pair_generation: self.pair_generation,
            rng_choice: self.rng_choice,
            bsm: self.bsm,
            bob_detection: self.bob_detection,
            alice_report: self.alice_report,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "steersim", version, about = "Event-ready steering simulation toolkit")]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Loss-dependent steering bound curve as CSV (ε, C_n(ε), dense-set
    /// approximation of the many-settings limit).
    Bounds(BoundsArgs),
    /// Sampled protocol run: steering result JSON plus a trial-record CSV.
    Simulate(SimulateArgs),
    /// Exact (non-sampled) sweep of ε, S_n and herald rate over channel loss
    /// or source-2 squeezing.
    Sweep(SweepArgs),
    /// Two-qubit tomography from a counts CSV or from synthetic counts.
    Tomo(TomoArgs),
    /// Space-time ordering report for a geometry file.
    Timing(TimingArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Number of measurement settings.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// ε grid: comma-separated values or start:stop:step.
    #[arg(long, default_value = "0.05:1.0:0.05")]
    pub grid: String,
    /// Dense direction count for the many-settings column.
    #[arg(long, default_value_t = 100)]
    pub dense: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Number of trials to sample.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Sample conditioned on the trigger (practical at high loss).
    #[arg(long, default_value_t = false)]
    pub conditional: bool,
    /// RNG seed; falls back to the config's rng_seed, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Sweep axis: `loss_db` or `xi2`.
    #[arg(long)]
    pub axis: String,
    /// Axis values: comma-separated or start:stop:step.
    #[arg(long)]
    pub values: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Counts CSV with rows `basis_a,basis_b,count` (bases x±, y±, z±).
    #[arg(long, conflicts_with = "synth")]
    pub counts: Option<PathBuf>,
    /// Generate synthetic counts for a named state: `singlet` or `mixed`.
    #[arg(long)]
    pub synth: Option<String>,
    /// Expected total synthetic counts.
    #[arg(long, default_value_t = 1e5)]
    pub mean_total: f64,
    /// Monte-Carlo resamples for the fidelity uncertainty.
    #[arg(long, default_value_t = 200)]
    pub resamples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// TOML geometry file.
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u128,
    pub truncation_tail: Option<f64>,
}

const MANIFEST_NAME: &str = "manifest.json";

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_NAME), json)?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Parses `a,b,c` lists or `start:stop:step` ranges.
pub fn parse_value_list(text: &str) -> Result<Vec<f64>> {
    let bad = |_| Error::Config(format!("cannot parse value list `{text}`"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "range must be start:stop:step, got `{text}`"
            )));
        }
        let start: f64 = parts[0].trim().parse().map_err(bad)?;
        let stop: f64 = parts[1].trim().parse().map_err(bad)?;
        let step: f64 = parts[2].trim().parse().map_err(bad)?;
        if step <= 0.0 || stop < start {
            return Err(Error::Config(format!("degenerate range `{text}`")));
        }
        let count = ((stop - start) / step + 1.5).floor() as usize;
        Ok((0..count)
            .map(|i| start + i as f64 * step)
            .filter(|v| *v <= stop + 1e-12)
            .collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(bad))
            .collect()
    }
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let t0 = Instant::now();
    let grid = parse_value_list(&args.grid)?;
    let settings = platonic_settings(args.n)?;
    let curve = loss_bound(&settings, &grid)?;
    let dense = MeasurementSet::sphere_spiral(args.dense)?;
    let dense_curve = loss_bound(&dense, &[])?;

    fs::create_dir_all(&args.out)?;
    let mut csv = format!("# manifest: {MANIFEST_NAME}\nepsilon,c_n,c_inf_approx\n");
    for &eps in &grid {
        let c = curve.value_at(eps)?;
        let ci = dense_curve.value_at(eps)?;
        csv.push_str(&format!("{},{},{}\n", fmt_f64(eps), fmt_f64(c), fmt_f64(ci)));
    }
    let out_csv = args.out.join("bounds.csv");
    fs::write(&out_csv, csv)?;

    write_manifest(
        &args.out,
        &RunManifest {
            command: format!("bounds --n {} --grid {} --dense {}", args.n, args.grid, args.dense),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            config: serde_json::json!({"n": args.n, "grid": grid, "dense": args.dense}),
            outputs: vec!["bounds.csv".into()],
            wall_clock_ms: t0.elapsed().as_millis(),
            truncation_tail: None,
        },
    )
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    manifest: &'static str,
    n_settings: usize,
    trials: u64,
    conditional: bool,
    #[serde(flatten)]
    result: SteeringResult,
    verdict: &'static str,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let settings = cfg.settings()?;
    let seed = args.seed.or(cfg.experiment.rng_seed).unwrap_or(0);
    let experiment = Experiment::build(&cfg.experiment)?;
    let records = if args.conditional {
        experiment.sample_conditional_trials(&settings, args.trials, seed)?
    } else {
        experiment.sample_trials(&settings, args.trials, seed)?
    };
    let curve = loss_bound(&settings, &[])?;
    let result = evaluate_steering(&records, settings.len(), &curve)?;
    let verdict = if result.s_n > result.bound { "PASS" } else { "FAIL" };

    fs::create_dir_all(&args.out)?;
    let output = SimulateOutput {
        manifest: MANIFEST_NAME,
        n_settings: settings.len(),
        trials: args.trials,
        conditional: args.conditional,
        result,
        verdict,
    };
    fs::write(
        args.out.join("result.json"),
        serde_json::to_string_pretty(&output).expect("result serializes"),
    )?;

    let mut csv = format!("# manifest: {MANIFEST_NAME}\ntrial,setting,herald,alice_outcome,bob_outcome\n");
    for (i, r) in records.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            i,
            r.setting,
            r.herald,
            r.alice_outcome.map(|v| v.to_string()).unwrap_or_default(),
            r.bob_outcome.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    fs::write(args.out.join("trials.csv"), csv)?;

    write_manifest(
        &args.out,
        &RunManifest {
            command: format!(
                "simulate --config {} --trials {}{}",
                args.config.display(),
                args.trials,
                if args.conditional { " --conditional" } else { "" }
            ),
            version: env!("CARGO_PKG_VERSION"),
            seed: Some(seed),
            config: serde_json::to_value(&cfg).expect("config serializes"),
            outputs: vec!["result.json".into(), "trials.csv".into()],
            wall_clock_ms: t0.elapsed().as_millis(),
            truncation_tail: Some(experiment.tail_weight()),
        },
    )
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    use rayon::prelude::*;
    let t0 = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let settings = cfg.settings()?;
    let values = parse_value_list(&args.values)?;
    enum Axis {
        LossDb,
        Xi2,
    }
    let axis = match args.axis.as_str() {
        "loss_db" => Axis::LossDb,
        "xi2" => Axis::Xi2,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected loss_db or xi2)"
            )))
        }
    };

    // (axis value, ε, S_n, herald rate, truncation tail)
    type SweepRow = (f64, f64, f64, f64, f64);
    // Points evaluate concurrently; output rows keep the axis order.
    let rows: Result<Vec<SweepRow>> = values
        .par_iter()
        .map(|&v| {
            let mut point = cfg.experiment.clone();
            match axis {
                Axis::LossDb => point.channel_loss_db = v,
                Axis::Xi2 => point.source2.squeezing = v,
            }
            let experiment = Experiment::build(&point)?;
            let analysis = experiment.steering_analysis(&settings)?;
            Ok((
                v,
                analysis.epsilon,
                analysis.s_n,
                analysis.herald_rate,
                experiment.tail_weight(),
            ))
        })
        .collect();
    let rows = rows?;

    fs::create_dir_all(&args.out)?;
    let mut csv = format!(
        "# manifest: {MANIFEST_NAME}\n{},epsilon,s_n,herald_rate\n",
        args.axis
    );
    for &(v, eps, s, rate, _) in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(v),
            fmt_f64(eps),
            fmt_f64(s),
            fmt_f64(rate)
        ));
    }
    fs::write(args.out.join("sweep.csv"), csv)?;

    let max_tail = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    write_manifest(
        &args.out,
        &RunManifest {
            command: format!(
                "sweep --config {} --axis {} --values {}",
                args.config.display(),
                args.axis,
                args.values
            ),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            config: serde_json::to_value(&cfg).expect("config serializes"),
            outputs: vec!["sweep.csv".into()],
            wall_clock_ms: t0.elapsed().as_millis(),
            truncation_tail: Some(max_tail),
        },
    )
}

/// Reads a counts CSV: rows `basis_a,basis_b,count`, optional header,
/// exactly one row per projector pair.
pub fn read_counts_csv(path: &Path) -> Result<TomographyCounts> {
    let text = fs::read_to_string(path)?;
    let mut counts = [0u64; 36];
    let mut filled = [false; 36];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "{}:{}: expected basis_a,basis_b,count",
                path.display(),
                lineno + 1
            )));
        }
        if fields[2].parse::<u64>().is_err() && lineno == 0 {
            continue; // header row
        }
        let a = Basis::parse(fields[0])?;
        let b = Basis::parse(fields[1])?;
        let n: u64 = fields[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad count `{}`", fields[2])))?;
        let i = ALL_BASES.iter().position(|x| *x == a).unwrap();
        let j = ALL_BASES.iter().position(|x| *x == b).unwrap();
        if filled[i * 6 + j] {
            return Err(Error::Config(format!(
                "duplicate row for ({}, {})",
                a.label(),
                b.label()
            )));
        }
        counts[i * 6 + j] = n;
        filled[i * 6 + j] = true;
    }
    if !filled.iter().all(|&f| f) {
        return Err(Error::Config("counts CSV is missing projector pairs".into()));
    }
    Ok(TomographyCounts::new(counts))
}

#[derive(Debug, Serialize)]
struct TomoOutput {
    manifest: &'static str,
    real: Vec<f64>,
    imag: Vec<f64>,
    fidelity_singlet: f64,
    mc_fidelity_mean: f64,
    mc_fidelity_sd: f64,
    iterations: usize,
    converged: bool,
}

pub fn cmd_tomo(args: &TomoArgs) -> Result<()> {
    let t0 = Instant::now();
    let seed = args.seed.unwrap_or(0);
    let counts = match (&args.counts, &args.synth) {
        (Some(path), None) => read_counts_csv(path)?,
        (None, Some(name)) => {
            let rho = match name.as_str() {
                "singlet" => TwoQubitDensityMatrix::from_pure(&singlet_ket()),
                "mixed" => TwoQubitDensityMatrix::maximally_mixed(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown synthetic state `{other}` (expected singlet or mixed)"
                    )))
                }
            };
            synth_counts(&rho, args.mean_total, seed)?
        }
        _ => {
            return Err(Error::Config(
                "tomo needs exactly one of --counts or --synth".into(),
            ))
        }
    };

    let rec = reconstruct_mle(&counts).map_err(|diag| diag.0)?;
    let (mean, sd) = mc_uncertainty(&counts, &singlet_ket(), args.resamples.max(100), seed)?;
    let (real, imag) = rec.rho.to_flat();

    fs::create_dir_all(&args.out)?;
    let output = TomoOutput {
        manifest: MANIFEST_NAME,
        real,
        imag,
        fidelity_singlet: rec.rho.fidelity(&singlet_ket()),
        mc_fidelity_mean: mean,
        mc_fidelity_sd: sd,
        iterations: rec.iterations,
        converged: rec.converged,
    };
    fs::write(
        args.out.join("rho.json"),
        serde_json::to_string_pretty(&output).expect("rho serializes"),
    )?;

    write_manifest(
        &args.out,
        &RunManifest {
            command: "tomo".into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: Some(seed),
            config: serde_json::json!({
                "counts": args.counts.as_ref().map(|p| p.display().to_string()),
                "synth": args.synth,
                "mean_total": args.mean_total,
                "resamples": args.resamples,
            }),
            outputs: vec!["rho.json".into()],
            wall_clock_ms: t0.elapsed().as_millis(),
            truncation_tail: None,
        },
    )
}

pub fn cmd_timing(args: &TimingArgs) -> Result<()> {
    let text = fs::read_to_string(&args.geometry)?;
    let file: GeometryFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.geometry.display())))?;
    let report = check_spacetime_ordering(&file.geometry(), file.signal_speed_fraction)?;
    for c in &report.constraints {
        println!(
            "{:45} {}  margin {:14.3} ns",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.margin_ns
        );
    }
    println!(
        "overall: {}",
        if report.all_pass { "PASS" } else { "FAIL" }
    );
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(
            out.join("timing.json"),
            serde_json::to_string_pretty(&serde_json::json!({
                "manifest": MANIFEST_NAME,
                "report": report,
            }))
            .expect("report serializes"),
        )?;
        write_manifest(
            out,
            &RunManifest {
                command: format!("timing --geometry {}", args.geometry.display()),
                version: env!("CARGO_PKG_VERSION"),
                seed: None,
                config: serde_json::to_value(&file).expect("geometry serializes"),
                outputs: vec!["timing.json".into()],
                wall_clock_ms: 0,
                truncation_tail: None,
            },
        )?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::OutOfRange { .. }
        | Error::UnsupportedSettingCount(_)
        | Error::BadGeometry(_)
        | Error::BadDirection(_) => 2,
        Error::NonConvergence { .. } => 3,
        _ => 1,
    }
}

/// Parses the process arguments and runs the chosen subcommand, returning
/// the process exit code.
pub fn run() -> i32 {
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // clap prints its own message; usage problems are config errors
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &args.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Tomo(a) => cmd_tomo(a),
        Command::Timing(a) => cmd_timing(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Writes trial records as CSV (used by library callers; the CLI embeds the
/// same format).
pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut csv = String::from("trial,setting,herald,alice_outcome,bob_outcome\n");
    for (i, r) in records.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            i,
            r.setting,
            r.herald,
            r.alice_outcome.map(|v| v.to_string()).unwrap_or_default(),
            r.bob_outcome.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_list_parsing() {
        assert_eq!(parse_value_list("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let r = parse_value_list("0.1:0.3:0.1").unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[2] - 0.3).abs() < 1e-12);
        assert!(parse_value_list("1:0:0.1").is_err());
        assert!(parse_value_list("abc").is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let toml_text = r#"
            n_settings = 6
            [experiment]
            swap_enabled = false
            made_up_knob = 3
            [experiment.source1]
            squeezing = 0.0
            [experiment.source2]
            squeezing = 0.1
        "#;
        let parsed: std::result::Result<RunConfig, _> = toml::from_str(toml_text);
        assert!(parsed.is_err());
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let toml_text = r#"
            [experiment]
            swap_enabled = false
            [experiment.source1]
            squeezing = 0.0
            [experiment.source2]
            squeezing = 0.1
            singlet_fidelity = 0.982
        "#;
        let cfg: RunConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(cfg.n_settings, 6);
        assert_eq!(cfg.experiment.n_max, 6);
        assert_eq!(cfg.experiment.detectors.a_plus.efficiency, 1.0);
    }

    #[test]
    fn counts_roundtrip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let mut text = String::from("basis_a,basis_b,count\n");
        for (i, a) in ALL_BASES.iter().enumerate() {
            for (j, b) in ALL_BASES.iter().enumerate() {
                text.push_str(&format!("{},{},{}\n", a.label(), b.label(), i * 6 + j));
            }
        }
        fs::write(&path, text).unwrap();
        let counts = read_counts_csv(&path).unwrap();
        for k in 0..36 {
            assert_eq!(counts.counts[k], k as u64);
        }
    }

    #[test]
    fn incomplete_counts_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        fs::write(&path, "x+,x+,5\n").unwrap();
        assert!(read_counts_csv(&path).is_err());
    }
}
