use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use d2a_core::agent::{run_e2e_eval, run_teacher_forced, EvalOptions, Session, TurnOutput};
use d2a_core::corpus::{annotate, read_corpus, stats, verify, write_corpus, write_dialogue, Dialogue, FixtureDir};
use d2a_core::lang::ExecLimits;
use d2a_core::metrics::BleuMode;
use d2a_core::stack::display_json;

use crate::agents::{build_agent, AgentArgs, AgentKind};
use crate::service::{self, AppState, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "d2a", version, about = "Program-stack dialogue agents over an in-memory object store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re-execute every annotated program and check recorded outcomes and signatures.
    Replay(ReplayArgs),
    /// End-to-end and teacher-forced evaluation of an agent.
    Eval(EvalArgs),
    /// Corpus statistics as JSON.
    Stats { corpus: PathBuf },
    /// Talk to an agent in the terminal.
    Chat(ChatArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// Fixture directory; defaults to `fixtures/` next to the corpus.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    corpus: PathBuf,
    #[command(flatten)]
    fixtures: FixtureArgs,
    /// Recompute outcomes and signatures and write the corpus here instead of verifying.
    #[arg(long)]
    annotate: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    corpus: PathBuf,
    #[command(flatten)]
    fixtures: FixtureArgs,
    #[arg(long, value_enum, default_value = "oracle")]
    agent: AgentKind,
    #[command(flatten)]
    agent_args: AgentArgs,
    /// Corpus to retrieve examples from; defaults to the evaluated corpus
    /// (a dialogue never sees its own turns).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Average sentence-level BLEU instead of corpus BLEU.
    #[arg(long)]
    macro_bleu: bool,
    /// Skip the teacher-forced code edit distance run.
    #[arg(long)]
    no_teacher_forced: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ChatArgs {
    /// Fixture name inside the fixture directory.
    #[arg(long, default_value = "zoology")]
    fixture: String,
    #[arg(long, default_value = "data/fixtures")]
    fixtures: PathBuf,
    /// Annotated corpus for the oracle, the mock and example retrieval.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "llm")]
    agent: AgentKind,
    #[command(flatten)]
    agent_args: AgentArgs,
    /// Dialogue uid that scripted agents replay.
    #[arg(long)]
    script: Option<String>,
    /// Write the conversation as an annotated corpus file on exit.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "data/fixtures")]
    fixtures: PathBuf,
    /// Annotated corpus for the oracle, the mock and example retrieval.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    agent_args: AgentArgs,
    /// Seconds one user turn may take.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Write all sessions to this JSON file on shutdown.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

type CliResult = Result<i32, String>;

fn load_corpus(path: &Path) -> Result<Vec<Dialogue>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_corpus(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn fixture_dir(corpus: &Path, explicit: &Option<PathBuf>) -> Result<FixtureDir, String> {
    let root = explicit
        .clone()
        .unwrap_or_else(|| corpus.parent().unwrap_or(Path::new(".")).join("fixtures"));
    FixtureDir::open(&root).map_err(|e| e.to_string())
}

fn replay_cmd(args: ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&args.corpus)?;
    let fixtures = fixture_dir(&args.corpus, &args.fixtures.fixtures)?;
    let limits = ExecLimits::default();
    if let Some(target) = args.annotate {
        let mut annotated = Vec::new();
        for d in &corpus {
            let mut env = fixtures.load(&d.uid).map_err(|e| e.to_string())?;
            annotated.push(annotate(d, &mut env, &limits).map_err(|e| e.to_string())?);
        }
        std::fs::write(&target, write_corpus(&annotated)).map_err(|e| format!("{}: {e}", target.display()))?;
        let _ = writeln!(out, "annotated {} dialogues into {}", annotated.len(), target.display());
        return Ok(0);
    }
    let mut failures = 0;
    let mut executions = 0;
    for d in &corpus {
        let result = fixtures.load(&d.uid).and_then(|mut env| verify(d, &mut env, &limits));
        match result {
            Ok(steps) => executions += steps.len(),
            Err(e) => {
                failures += 1;
                let _ = writeln!(err, "FAIL {e}");
            }
        }
    }
    let _ = writeln!(
        out,
        "{} dialogues, {} executions, {} failed",
        corpus.len(),
        executions,
        failures
    );
    Ok(if failures > 0 { 1 } else { 0 })
}

fn eval_cmd(args: EvalArgs, out: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&args.corpus)?;
    let fixtures = fixture_dir(&args.corpus, &args.fixtures.fixtures)?;
    let pool_corpus = match &args.pool {
        Some(p) => load_corpus(p)?,
        None => corpus.clone(),
    };
    let agent = build_agent(args.agent, &args.agent_args, &pool_corpus, &fixtures)?;
    let opts = EvalOptions {
        limits: ExecLimits::default(),
        bleu_mode: if args.macro_bleu { BleuMode::MacroSentence } else { BleuMode::Corpus },
        workers: args.workers,
    };
    let mut report = run_e2e_eval(&corpus, agent.as_ref(), &fixtures, &opts).map_err(|e| e.to_string())?;
    if !args.no_teacher_forced {
        let tf = run_teacher_forced(&corpus, agent.as_ref(), &fixtures, &opts).map_err(|e| e.to_string())?;
        report.mean_code_edits = Some(tf.mean_code_edits);
    }
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let text = if args.json { report.to_json() } else { report.to_table() };
    let _ = write!(out, "{text}");
    Ok(0)
}

fn stats_cmd(corpus: PathBuf, out: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&corpus)?;
    let s = stats(&corpus).map_err(|e| e.to_string())?;
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&s).map_err(|e| e.to_string())?);
    Ok(0)
}

fn print_turn(out: &mut dyn Write, t: &TurnOutput) {
    for d in &t.directives {
        let _ = writeln!(out, "  [goal {} -> {}]", d.uid, d.status.as_str());
        if let Some(code) = &d.code {
            for line in code.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
    }
    for e in &t.executions {
        let outcome = match &e.outcome.error {
            None => format!("result {}", display_json(&e.outcome.return_value)),
            Some(err) => format!("error {}: {}", err.name, err.message),
        };
        let _ = writeln!(out, "  [goal {} executed] {outcome} (signature {})", e.uid, e.signature);
    }
    for d in &t.deferred {
        let _ = writeln!(out, "  [goal {} stays drafting: placeholders {:?}]", d.uid, d.placeholders);
    }
    for n in &t.notes {
        let _ = writeln!(out, "  [note] {n}");
    }
    let _ = writeln!(out, "agent: {}", t.response);
}

fn chat_cmd(args: ChatArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let fixtures = FixtureDir::open(&args.fixtures).map_err(|e| e.to_string())?;
    let corpus = match &args.corpus {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };
    let agent = build_agent(args.agent, &args.agent_args, &corpus, &fixtures)?;
    let env = fixtures.load_named(&args.fixture).map_err(|e| e.to_string())?;
    let script = args.script.clone().unwrap_or_else(|| args.fixture.clone());
    let mut session = Session::new("chat", script, args.fixture.clone(), env);
    let limits = ExecLimits::default();
    let _ = writeln!(out, "commands: /stack /reset /quit");
    let _ = writeln!(out, "agent: {}", session.last_agent_turn());
    let mut line = String::new();
    loop {
        let _ = write!(out, "> ");
        let _ = out.flush();
        line.clear();
        if input.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            break;
        }
        match line.trim() {
            "" => continue,
            "/quit" => break,
            "/stack" => {
                let _ = writeln!(out, "{}", session.stack.serialize());
            }
            "/reset" => {
                session.reset();
                let _ = writeln!(out, "agent: {}", session.last_agent_turn());
            }
            text => match session.user_turn(agent.as_ref(), text, &limits) {
                Ok(t) => print_turn(out, &t),
                Err(e) => {
                    let _ = writeln!(out, "  [error] {e}");
                }
            },
        }
    }
    if let Some(path) = &args.export {
        let text = format!("<corpus>\n{}</corpus>\n", write_dialogue(&session.transcript()));
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        let _ = writeln!(out, "transcript written to {}", path.display());
    }
    Ok(0)
}

fn serve_cmd(args: ServeArgs) -> CliResult {
    let fixtures = FixtureDir::open(&args.fixtures).map_err(|e| e.to_string())?;
    let corpus = match &args.corpus {
        Some(p) => load_corpus(p)?,
        None => Vec::new(),
    };
    let mut agents = HashMap::new();
    for kind in [AgentKind::Noop, AgentKind::Oracle, AgentKind::Mock, AgentKind::Llm] {
        match build_agent(kind, &args.agent_args, &corpus, &fixtures) {
            Ok(a) => {
                agents.insert(kind.name().to_string(), a);
            }
            Err(e) => eprintln!("agent {} unavailable: {e}", kind.name()),
        }
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| format!("bad address: {e}"))?;
    let app = AppState::new(ServiceConfig {
        fixtures,
        agents,
        limits: ExecLimits::default(),
        turn_timeout: Duration::from_secs(args.timeout),
    });
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(service::serve(Arc::clone(&app), addr, args.snapshot))
        .map_err(|e| e.to_string())?;
    Ok(0)
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(argv: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Replay(a) => replay_cmd(a, out, err),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Stats { corpus } => stats_cmd(corpus, out),
        Command::Chat(a) => chat_cmd(a, input, out),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
