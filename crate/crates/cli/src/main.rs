use std::fs;
use std::io::{self, Read};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowers::prover::{Parallelism, SearchBudget};
use flowers::semantics::{Bounds, FuzzConfig};
use flowers::syntax::Signature;
use flowers_cli::commands::{self, Outcome, EXIT_PARSE};
use flowers_cli::protocol::Service;
use flowers_cli::serve;

/// Proof checker, prover and countermodel finder for the flower calculus.
#[derive(Parser)]
#[command(name = "flowers", version)]
struct Cli {
    /// Signature file (`name arity` per line). Without it, predicates are
    /// declared by first use.
    #[arg(long, global = true)]
    sig: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GoalArgs {
    /// Goal text, or `@FILE`, or `-` for standard input.
    goal: String,
    /// Read the goal as a formula (`~ & | -> forall exists`) and encode it.
    #[arg(long)]
    formula: bool,
}

#[derive(Args)]
struct BudgetArgs {
    /// Default budget, as `steps=N,depth=N,inst=N,timeout=MS,worlds=N,domain=N`.
    #[arg(long, env = "FLOWERS_BUDGET", default_value = "")]
    budget: String,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_inst: Option<usize>,
    /// Milliseconds.
    #[arg(long)]
    timeout: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Canonical form, digest and metrics of a bouquet.
    Parse(GoalArgs),
    /// Replay a proof file, printing every intermediate state.
    Print { file: String },
    /// Check a proof file: exit 0 valid, 1 invalid step, 2 parse error.
    Check { file: String },
    /// Search for a proof: exit 0 proved, 3 refuted, 4 unknown.
    Prove {
        #[command(flatten)]
        goal: GoalArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Explore with one thread (deterministic output; the default).
        #[arg(long, conflicts_with = "threads")]
        single_thread: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// Write the proof or countermodel here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Translate a formula to a bouquet, or with --to-formula the reverse.
    Translate {
        text: String,
        #[arg(long)]
        to_formula: bool,
    },
    /// Search for a finite Kripke countermodel.
    Falsify {
        #[command(flatten)]
        goal: GoalArgs,
        #[arg(long, default_value_t = 2)]
        worlds: usize,
        #[arg(long, default_value_t = 1)]
        domain: usize,
        #[arg(long)]
        json: bool,
    },
    /// Randomized soundness check of the rules against Kripke semantics.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        natural: usize,
        #[arg(long, default_value_t = 500)]
        cultural: usize,
        #[arg(long, default_value_t = 10)]
        models: usize,
        /// Disable the pollination side condition (should report violations).
        #[arg(long)]
        mutate: bool,
    },
    /// Serve the session protocol over stdio (default) or HTTP.
    Serve {
        #[arg(long)]
        http: Option<SocketAddr>,
        /// Directory for session snapshots; existing ones are restored.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

fn read_source(arg: &str) -> io::Result<String> {
    if arg == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else if let Some(path) = arg.strip_prefix('@') {
        fs::read_to_string(path)
    } else {
        Ok(arg.to_string())
    }
}

fn read_file(arg: &str) -> io::Result<String> {
    if arg == "-" {
        read_source(arg)
    } else {
        fs::read_to_string(arg)
    }
}

fn budget(b: &BudgetArgs) -> Result<SearchBudget, String> {
    let mut out: SearchBudget = b.budget.parse().map_err(|e| format!("budget: {e}"))?;
    if let Some(n) = b.max_steps {
        out.max_steps = n;
    }
    if let Some(n) = b.max_depth {
        out.max_depth = n;
    }
    if let Some(n) = b.max_inst {
        out.max_instantiations_per_binder = n;
    }
    if let Some(n) = b.timeout {
        out.timeout = n;
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<Outcome, (i32, String)> {
    let io_err = |e: io::Error| (EXIT_PARSE, format!("{e}\n"));
    let sig = match &cli.sig {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err)?;
            Signature::parse(&text).map_err(|e| (EXIT_PARSE, format!("signature: {e}\n")))?
        }
        None => Signature::new(),
    };
    Ok(match cli.cmd {
        Cmd::Parse(g) => commands::parse(&read_source(&g.goal).map_err(io_err)?, g.formula, &sig),
        Cmd::Print { file } => commands::print(&read_file(&file).map_err(io_err)?, &sig),
        Cmd::Check { file } => commands::check(&read_file(&file).map_err(io_err)?, &sig),
        Cmd::Prove {
            goal,
            budget: b,
            single_thread: _,
            threads,
            out,
        } => {
            let budget = budget(&b).map_err(|e| (EXIT_PARSE, format!("{e}\n")))?;
            let par = match threads {
                Some(n) if n > 1 => Parallelism::Threads(n),
                _ => Parallelism::Single,
            };
            let o = commands::prove(&read_source(&goal.goal).map_err(io_err)?, goal.formula, &sig, &budget, par);
            match out {
                Some(path) if o.code != EXIT_PARSE => {
                    fs::write(&path, &o.stdout).map_err(io_err)?;
                    Outcome {
                        stdout: format!("wrote {}\n", path.display()),
                        ..o
                    }
                }
                _ => o,
            }
        }
        Cmd::Translate { text, to_formula } => {
            commands::translate(&read_source(&text).map_err(io_err)?, to_formula, &sig)
        }
        Cmd::Falsify {
            goal,
            worlds,
            domain,
            json,
        } => commands::falsify(
            &read_source(&goal.goal).map_err(io_err)?,
            goal.formula,
            &sig,
            Bounds::new(worlds, domain),
            json,
        ),
        Cmd::Fuzz {
            seed,
            natural,
            cultural,
            models,
            mutate,
        } => commands::fuzz(&FuzzConfig {
            seed,
            natural_steps: natural,
            cultural_steps: cultural,
            models,
            check_pollination: !mutate,
            ..FuzzConfig::default()
        }),
        Cmd::Serve { http, snapshots } => {
            let svc = match snapshots {
                Some(dir) => Service::with_snapshots(sig, dir).map_err(io_err)?,
                None => Service::new(sig),
            };
            match http {
                Some(addr) => serve::run_http(svc, addr).map_err(io_err)?,
                None => serve::serve_lines(&svc, io::stdin().lock(), io::stdout().lock()).map_err(io_err)?,
            }
            Outcome {
                code: 0,
                stdout: String::new(),
                stderr: String::new(),
            }
        }
    })
}

fn main() -> ExitCode {
    let o = run(Cli::parse()).unwrap_or_else(|(code, stderr)| Outcome {
        code,
        stdout: String::new(),
        stderr,
    });
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    ExitCode::from(o.code as u8)
}
