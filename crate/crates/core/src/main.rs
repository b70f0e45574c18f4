use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use divaudit::report::{run_audits, run_selected, Report, RunOptions};
use divaudit::rules::TieBreak;
use divaudit::scenario::{builtin, parse_scenario, Audit, Scenario, BUILTINS};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Tie {
    Error,
    Id,
}

#[derive(Parser, Debug)]
#[command(name = "divaudit", version, about = "Audit affirmative-action choice rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value = "json", env = "DIVAUDIT_FORMAT")]
    format: Format,

    /// Largest universe whose subsets are enumerated.
    #[arg(long, global = true, default_value_t = 12, env = "DIVAUDIT_MAX_UNIVERSE")]
    max_universe: usize,

    /// Largest menu family the rationality audits build.
    #[arg(long, global = true, default_value_t = 1 << 14, env = "DIVAUDIT_MAX_MENU_ENUM")]
    max_menu_enum: u64,

    /// Overrides the scenario's tie-break.
    #[arg(long, global = true, value_enum, env = "DIVAUDIT_TIE_BREAK")]
    tie_break: Option<Tie>,

    /// Default number of lowered scores for gross-substitutes audits.
    #[arg(long, global = true, default_value_t = 2, env = "DIVAUDIT_GS_PERTURB")]
    gs_perturb: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the audits listed in a scenario file.
    Audit { file: PathBuf },
    /// Run a built-in scenario.
    Demo { name: String },
    /// Synthesize a separable utility for the scenario's rule.
    Synthesize { file: PathBuf },
    /// List the built-in scenarios.
    ListDemos,
}

fn load(text: &str, origin: &str) -> Result<Scenario, ExitCode> {
    parse_scenario(text).map_err(|e| {
        eprintln!("{origin}:{e}");
        ExitCode::from(2)
    })
}

fn read(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn emit(report: &Report, format: Format) -> ExitCode {
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        max_universe: cli.max_universe,
        max_menu_enum: cli.max_menu_enum,
        tie_break: cli.tie_break.map(|t| match t {
            Tie::Error => TieBreak::Error,
            Tie::Id => TieBreak::ById,
        }),
        gs_perturb: cli.gs_perturb,
    };
    let outcome = match &cli.command {
        Command::ListDemos => {
            for b in &BUILTINS {
                println!("{:<12} {}", b.name, b.summary);
            }
            return ExitCode::SUCCESS;
        }
        Command::Demo { name } => match builtin(name) {
            None => {
                let known: Vec<&str> = BUILTINS.iter().map(|b| b.name).collect();
                eprintln!("unknown demo `{name}`; known: {}", known.join(", "));
                return ExitCode::from(2);
            }
            Some(b) => load(b.text, b.name).map(|sc| run_audits(&sc, &opts)),
        },
        Command::Audit { file } => read(file).and_then(|t| load(&t, &file.display().to_string())).map(|sc| run_audits(&sc, &opts)),
        Command::Synthesize { file } => {
            read(file).and_then(|t| load(&t, &file.display().to_string())).map(|sc| run_selected(&sc, &[Audit::Separability], &opts))
        }
    };
    match outcome {
        Ok(report) => emit(&report, cli.format),
        Err(code) => code,
    }
}
