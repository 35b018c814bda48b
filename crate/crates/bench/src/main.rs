use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hexfem::element::ElementKind;
use hexfem::mesh::NotchedPreset;
use hexfem::solver::case::CaseFile;
use hexfem_bench::cases::cube_side;
use hexfem_bench::{compare_distortion_sensitivity, run_benchmark, run_case_file, BenchmarkCase, NotchedOptions};
use hexfem_bench::{Report, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "hexfem-bench", version, about = "Runs the hexahedral element benchmarks and checks them against reference data")]
struct Cli {
    /// Directory for curves, VTK files and report.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
    /// Element kind(s): q1, q1stc, q1stc+ (repeatable).
    #[arg(long = "kind", global = true, value_parser = parse_kind)]
    kinds: Vec<ElementKind>,
    /// Run independent element kinds concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Five-element membrane patch.
    PatchMembrane {
        /// Elasto-plastic load path instead of the elastic patch test.
        #[arg(long)]
        plastic: bool,
    },
    /// Seven-element solid patch.
    PatchSolid,
    /// Unit cube under partial pressure.
    Cube {
        /// Total element count; must be a cube number.
        #[arg(long, default_value_t = 512)]
        nel: usize,
    },
    /// Asymmetrically notched specimen.
    Notched {
        /// In-plane distortion amplitude (mm).
        #[arg(long, default_value_t = 0.0)]
        dxy: f64,
        /// Through-thickness distortion amplitude (mm).
        #[arg(long, default_value_t = 0.0)]
        dz: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// coarse (~700 elements) or medium (~3000 elements).
        #[arg(long, default_value = "coarse", value_parser = parse_preset)]
        preset: NotchedPreset,
        #[arg(long, default_value_t = 15)]
        steps: usize,
        /// Final top displacement (mm).
        #[arg(long, default_value_t = 0.3)]
        umax: f64,
        /// Compare curves over these distortion levels instead of a single run.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        compare: Vec<f64>,
    },
    /// Runs a TOML case file.
    Run { case: PathBuf },
}

fn parse_kind(s: &str) -> Result<ElementKind, String> {
    ElementKind::parse(s).ok_or_else(|| format!("unknown element kind `{s}` (expected q1, q1stc or q1stc+)"))
}

fn parse_preset(s: &str) -> Result<NotchedPreset, String> {
    NotchedPreset::parse(s).map_err(|e| e.to_string())
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let opts = RunOptions { kinds: cli.kinds.clone(), out: cli.out.clone(), parallel: cli.parallel };
    let result = match &cli.command {
        Command::PatchMembrane { plastic: false } => run_benchmark(&BenchmarkCase::MembraneElastic, &opts),
        Command::PatchMembrane { plastic: true } => run_benchmark(&BenchmarkCase::MembranePlastic, &opts),
        Command::PatchSolid => run_benchmark(&BenchmarkCase::SolidPatch, &opts),
        Command::Cube { nel } => match cube_side(*nel) {
            Some(per_side) => run_benchmark(&BenchmarkCase::Cube { per_side }, &opts),
            None => return usage_error(&format!("--nel {nel} is not a cube number")),
        },
        Command::Notched { dxy, dz, seed, preset, steps, umax, compare } => {
            if *dxy < 0.0 || *dz < 0.0 || *steps == 0 || !(*umax > 0.0) || compare.iter().any(|d| *d < 0.0) {
                return usage_error("distortions must be non-negative, steps and --umax positive");
            }
            let base = NotchedOptions { preset: *preset, d_xy: *dxy, d_z: *dz, seed: *seed, steps: *steps, u_max: *umax };
            if compare.is_empty() {
                run_benchmark(&BenchmarkCase::Notched(base), &opts)
            } else {
                let kinds = if opts.kinds.is_empty() { vec![ElementKind::Q1STc, ElementKind::Q1STcPlus] } else { opts.kinds.clone() };
                compare_distortion_sensitivity(&base, &kinds, compare, &opts)
            }
        }
        Command::Run { case } => {
            match CaseFile::load(case) {
                Ok(c) => run_case_file(&c, cli.out.as_deref()),
                Err(e) => return usage_error(&e.to_string()),
            }
        }
    };
    match result {
        Ok(report) => {
            emit(&report, cli.report);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &Report, format: ReportFormat) {
    match format {
        ReportFormat::Json => println!("{}", report.to_json()),
        ReportFormat::Text => print!("{}", report.to_text()),
    }
}
