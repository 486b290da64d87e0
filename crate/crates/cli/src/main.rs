use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iag_cli::render;
use iag_cli::repl::{parse_line, Line, HELP};
use iag_core::dsl::{parse_program, Program};
use iag_core::runtime::{parse_schedule, write_schedule, Config, Simulation, TickReport};
use iag_service::{serve, ServeOptions, Session};

#[derive(Parser)]
#[command(name = "iag", version, about = "Run, replay, serve and edit intentional-agent scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run a scenario headless, or serve it over a WebSocket.
    Run(RunArgs),
    /// Drive a scenario interactively from standard input.
    Repl(ReplArgs),
    /// Parse and validate a scenario file.
    Check { file: PathBuf },
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    /// Override the scenario's world seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Resolution steps per agent per tick.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Write one JSON TickReport per line (`-` for stdout).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the accepted command schedule as JSON lines.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20)]
    ticks: u64,
    /// Serve the protocol instead of running headless.
    #[arg(long, conflicts_with = "replay")]
    serve: bool,
    #[arg(long, default_value_t = 7878)]
    port: u16,
    /// Replay a recorded command schedule.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// No per-tick summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ReplArgs {
    #[command(flatten)]
    common: Common,
}

/// Exit 1: the input was rejected. Exit 2: the run itself went wrong.
enum Failure {
    Rejected(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| Failure::Rejected(e.render(&path.display().to_string())))
}

fn load(common: &Common) -> Result<Simulation, Failure> {
    let program = load_program(&common.file)?;
    let config = Config { budget: common.budget, seed: common.seed, ..Config::default() };
    Simulation::load(&program, config).map_err(|e| Failure::Rejected(format!("{}: {e}", common.file.display())))
}

struct TraceOut(Option<Box<dyn Write>>);

impl TraceOut {
    fn open(path: Option<&PathBuf>) -> io::Result<TraceOut> {
        Ok(TraceOut(match path {
            None => None,
            Some(p) if p.as_os_str() == "-" => Some(Box::new(io::stdout())),
            Some(p) => Some(Box::new(BufWriter::new(fs::File::create(p)?))),
        }))
    }

    fn write(&mut self, report: &TickReport) -> io::Result<()> {
        if let Some(w) = &mut self.0 {
            writeln!(w, "{}", report.to_json_line())?;
        }
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        if let Some(w) = &mut self.0 {
            w.flush()?;
        }
        Ok(())
    }
}

fn record(path: Option<&PathBuf>, sim: &Simulation) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, write_schedule(sim.command_log())),
        None => Ok(()),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut sim = load(&args.common)?;
    if args.serve {
        let options = ServeOptions { trace: args.common.trace.clone(), record: args.common.record.clone(), ..ServeOptions::default() };
        let server = serve(Session::new(sim), &format!("127.0.0.1:{}", args.port), options)?;
        eprintln!("serving ws://{} (paused; send `resume` or `step`)", server.local_addr());
        server.wait()?;
        return Ok(());
    }
    let schedule = match &args.replay {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))?;
            parse_schedule(&text).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    let summaries = !args.quiet && args.common.trace.as_ref().is_none_or(|p| p.as_os_str() != "-");
    let mut trace = TraceOut::open(args.common.trace.as_ref())?;
    let (reports, errors) = sim.run_schedule(&schedule, args.ticks);
    for r in &reports {
        trace.write(r)?;
        if summaries {
            println!("{}", render::tick_summary(r));
        }
    }
    trace.finish()?;
    record(args.common.record.as_ref(), &sim)?;
    if !errors.is_empty() {
        return Err(Failure::Runtime(errors.join("\n")));
    }
    Ok(())
}

fn repl(args: ReplArgs) -> Result<(), Failure> {
    let mut session = Session::new(load(&args.common)?);
    let mut trace = TraceOut::open(args.common.trace.as_ref())?;
    let stdin = io::stdin();
    let mut out = io::stdout();
    for (n, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        match parse_line(&line, n as u64 + 1) {
            Ok(Line::Empty) => {}
            Ok(Line::Help) => writeln!(out, "{HELP}")?,
            Ok(Line::Quit) => break,
            Ok(Line::Request(req)) => {
                let handled = session.handle(&req);
                let text = render::response(&req.verb, &handled.response);
                if !text.is_empty() {
                    writeln!(out, "{text}")?;
                }
                for p in &handled.pushes {
                    if let iag_service::Push::TickReport { report, .. } = p {
                        trace.write(report)?;
                    }
                    let text = render::push(p);
                    if !text.is_empty() {
                        writeln!(out, "{text}")?;
                    }
                }
                record(args.common.record.as_ref(), session.sim())?;
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
        out.flush()?;
    }
    trace.finish()?;
    Ok(())
}

fn check(file: &Path) -> Result<(), Failure> {
    let program = load_program(file)?;
    Simulation::load(&program, Config::default()).map_err(|e| Failure::Rejected(format!("{}: {e}", file.display())))?;
    let spawns = program.scenario.as_ref().map_or(0, |s| s.spawns.len());
    println!("{}: ok ({} classes, {spawns} agents)", file.display(), program.classes.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Commands::Run(args) => run(args),
        Commands::Repl(args) => repl(args),
        Commands::Check { file } => check(&file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
