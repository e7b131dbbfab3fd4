use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};

use ton_analytics::ingest::{meter_csv_string, parse_meter_csv, parse_plant_config, MeterSeries};
use ton_analytics::report::{
    emit_plot_data, emit_report, parse_report, run_analyze, AnalyzeOptions, PlotKind, ReportFormat,
};
use ton_analytics::synth::{
    case_study_profile, case_study_profiles, generate_series, CycleProfile, CASE_STUDY_PROFILE_NAMES,
};

#[derive(Parser)]
#[command(name = "ton-analytics", version, about = "ON-cycle run-time and energy analysis for batch process loads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Structured,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Plot {
    Histogram,
    Scatter,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze meter data against a plant configuration.
    ///
    /// Writes report.json (and report.txt for --format text) into --out.
    /// Exits 0 when no load is anomalous, 2 when at least one is, 1 on error.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        meters: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "structured")]
        format: Format,
        #[arg(long, default_value_t = 5.0)]
        bin_width: f64,
        /// Run the analysis twice and fail unless both reports are identical.
        #[arg(long)]
        seed_check: bool,
    },
    /// Generate a synthetic meter CSV.
    Simulate {
        /// A built-in profile (cleaning, shot_peening, trowalising_370,
        /// trowalising_510, or `all` for all four) or a TOML profile file.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth cycles as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Extract plot data from a structured report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        plot: Plot,
        #[arg(long)]
        load: String,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn analyze(
    config: PathBuf,
    meters: Vec<PathBuf>,
    out: PathBuf,
    format: Format,
    bin_width: f64,
    seed_check: bool,
) -> Result<i32> {
    let config = parse_plant_config(&read(&config)?).context("plant config")?;
    let mut series: Vec<MeterSeries> = Vec::new();
    for path in &meters {
        series.extend(parse_meter_csv(&read(path)?).with_context(|| format!("meter data {}", path.display()))?);
    }
    for s in &series {
        if config.load(s.load_id()).is_none() {
            eprintln!("warning: series `{}` has no configured load and is ignored", s.load_id());
        }
    }

    let options = AnalyzeOptions { bin_width_min: bin_width, ..AnalyzeOptions::default() };
    let generated_at = Utc::now();
    let report = run_analyze(&config, &series, &options, generated_at)?;
    let structured = emit_report(&report, ReportFormat::Structured);
    if seed_check {
        let again = emit_report(&run_analyze(&config, &series, &options, generated_at)?, ReportFormat::Structured);
        if again != structured {
            bail!("determinism check failed: two runs produced different reports");
        }
    }

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), &structured)?;
    match format {
        Format::Structured => println!("{}", out.join("report.json").display()),
        Format::Text => {
            let text = emit_report(&report, ReportFormat::Text);
            fs::write(out.join("report.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(report.exit_code())
}

fn simulate(profile: String, seed: u64, out: PathBuf, truth: Option<PathBuf>) -> Result<i32> {
    let profiles = if profile == "all" {
        case_study_profiles()
    } else if CASE_STUDY_PROFILE_NAMES.contains(&profile.as_str()) {
        vec![case_study_profile(&profile)?]
    } else {
        vec![CycleProfile::from_toml(&read(&PathBuf::from(&profile))?)?]
    };
    let mut series = Vec::new();
    let mut truths = Vec::new();
    for p in &profiles {
        let (s, t) = generate_series(p, seed)?;
        series.push(s);
        truths.push(t);
    }
    fs::write(&out, meter_csv_string(&series)?).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = truth {
        fs::write(&path, serde_json::to_string_pretty(&truths)?)?;
    }
    Ok(0)
}

fn plot(input: PathBuf, plot: Plot, load: String) -> Result<i32> {
    let report = parse_report(&read(&input)?)?;
    let kind = match plot {
        Plot::Histogram => PlotKind::Histogram,
        Plot::Scatter => PlotKind::Scatter,
    };
    print!("{}", emit_plot_data(&report, kind, &load)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Analyze { config, meters, out, format, bin_width, seed_check } => {
            analyze(config, meters, out, format, bin_width, seed_check)
        }
        Command::Simulate { profile, seed, out, truth } => simulate(profile, seed, out, truth),
        Command::Report { input, plot: kind, load } => plot(input, kind, load),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
