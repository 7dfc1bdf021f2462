use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use levem_cli::{output, run, Command, Envelope, Format, Scenario, Suite};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "levem", version, about = "Levitated-particle qubit interferometer simulations")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Scenario file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Data file format
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Verb {
    /// Derived model parameters
    Derive,
    /// Classical trajectory in the trap
    Trajectory,
    /// Resistive cooling run and rate fits
    Cool,
    /// Interference fringe scan
    Fringes,
    /// Remote-qubit population
    Remote,
    /// Two-particle entanglement entropy
    Entangle,
    /// Oracle and schedule checks; exits 1 on any breach
    Validate {
        #[arg(long, value_enum, default_value = "oracle")]
        suite: Suite,
    },
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let scenario = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    let command = match cli.verb {
        Verb::Derive => Command::Derive,
        Verb::Trajectory => Command::Trajectory,
        Verb::Cool => Command::Cool,
        Verb::Fringes => Command::Fringes,
        Verb::Remote => Command::Remote,
        Verb::Entangle => Command::Entangle,
        Verb::Validate { suite } => Command::Validate(suite),
    };

    let start = Instant::now();
    let report = match run(command, &scenario, cli.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    let mut tables = report.tables;
    let hash = scenario.hash();
    for t in &mut tables {
        t.metadata.insert(0, ("scenario_hash".into(), hash.clone()));
        t.metadata.insert(1, ("command".into(), command.name().into()));
        t.metadata.insert(2, ("seed".into(), cli.seed.to_string()));
    }
    let files = match output::write_tables(&cli.out, &tables, cli.format) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: writing {}: {e}", cli.out.display());
            return ExitCode::from(2);
        }
    };
    let results = serde_json::json!({ "derived": report.derived, "outputs": report.outputs });
    let envelope = Envelope {
        tool: "levem",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name().into(),
        scenario_hash: hash,
        result_hash: hex(&Sha256::digest(results.to_string().as_bytes())),
        scenario: scenario.to_json(),
        seed: cli.seed,
        threads,
        wall_time,
        derived: report.derived,
        outputs: report.outputs,
        files: files.iter().map(|p| p.display().to_string()).collect(),
        warnings: report.warnings,
        breaches: report.breaches,
    };
    let env_path = cli.out.join(format!("{}.envelope.json", command.name()));
    let body = serde_json::to_string_pretty(&envelope).expect("envelope serializes");
    if let Err(e) = std::fs::write(&env_path, body + "\n") {
        eprintln!("error: writing {}: {e}", env_path.display());
        return ExitCode::from(2);
    }
    for w in &envelope.warnings {
        eprintln!("warning: {w}");
    }
    for b in &envelope.breaches {
        eprintln!("breach: {b}");
    }
    println!("{}", env_path.display());
    if envelope.breaches.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
