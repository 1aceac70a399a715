use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use cztree::bmo::KernelWindow;
use cztree::hardy::SplitLimits;
use cztree::runner::commands::{self, DecomposeMode};
use cztree::runner::{RunConfig, Suite};
use cztree::{CzSet, Exponent, FinFunc, Tree, Window};

#[derive(Parser)]
#[command(name = "cztree", about = "Calderon-Zygmund sets, maximal functions, BMO and H1 on homogeneous trees")]
struct Cli {
    /// Branching number: every vertex has m children.
    #[arg(long, global = true, default_value_t = 2)]
    m: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Working window, `root=<vertex>,depth=<int>`.
    #[arg(long, global = true, default_value = "root=0:,depth=4")]
    window: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure of a vertex `n:w`, a set `cz root=<v> h=<h>` or `trap root=<v> h=<h>`.
    Measure {
        #[arg(allow_hyphen_values = true)]
        target: String,
    },
    Ball {
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        radius: u64,
    },
    /// Band, measure and enlargement of a CZ set.
    Cz { set: String },
    Cover {
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long)]
        n: Option<u64>,
    },
    BmoNorm {
        #[arg(long, default_value = "1")]
        q: String,
        /// Function JSON; `-` reads stdin.
        #[arg(long = "in", default_value = "-")]
        input: String,
    },
    /// Sharp maximal function at a vertex, or on the window without `--at`.
    Sharp {
        #[arg(long, default_value = "1")]
        q: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long = "in", default_value = "-")]
        input: String,
    },
    /// Maximal average of a nonnegative function over admissible trapezoids.
    Maximal {
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long = "in", default_value = "-")]
        input: String,
    },
    Decompose {
        #[arg(long, default_value = "2")]
        q: String,
        #[arg(long = "in", default_value = "-")]
        input: String,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "all")]
        j: Option<i64>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 4096)]
        max_omega: usize,
    },
    H1 {
        #[arg(long = "in", default_value = "-")]
        input: String,
        #[arg(long, default_value = "auto")]
        family: String,
        #[arg(long, default_value = "random:0:16")]
        candidates: String,
    },
    Hormander {
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value = "auto")]
        family: String,
    },
    /// Runs one property suite; exits 1 on a counterexample.
    Check {
        suite: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Runs every suite and reports the empirical constants.
    Constants {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, default_value = "1")]
    q: String,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "3/2")]
    p0: String,
    #[arg(long, default_value_t = 200)]
    size: usize,
}

fn read_input(path: &str) -> cztree::Result<String> {
    let mut text = String::new();
    let read = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    read.map_err(|e| cztree::Error::InvalidInput(format!("reading {path}: {e}")))?;
    Ok(text)
}

fn read_function(tree: &Tree, path: &str) -> cztree::Result<FinFunc> {
    FinFunc::from_json(tree, &read_input(path)?)
}

fn config(cli: &Cli, tree: &Tree, window: &Window, run: &RunArgs) -> cztree::Result<RunConfig> {
    let mut c = RunConfig::new(tree.m(), window.clone(), cli.seed);
    c.q = Exponent::parse(&run.q)?;
    c.p = Exponent::parse(&run.p)?;
    c.p0 = Exponent::parse(&run.p0)?;
    c.suite_size = run.size;
    Ok(c)
}

/// JSON output and whether a counterexample was found.
fn run(cli: &Cli) -> cztree::Result<(Value, bool)> {
    let tree = Tree::new(cli.m)?;
    let window = Window::parse(&tree, &cli.window)?;
    let ok = |v: Value| Ok((v, false));
    match &cli.command {
        Command::Measure { target } => ok(commands::measure(&tree, target)?),
        Command::Ball { at, radius } => ok(commands::ball(&tree, &tree.parse_vertex(at)?, *radius)),
        Command::Cz { set } => ok(commands::cz(&tree, &CzSet::parse(&tree, set)?)),
        Command::Cover { at, n } => {
            let at = at.as_deref().map(|s| tree.parse_vertex(s)).transpose()?;
            ok(commands::cover(&tree, at.as_ref(), *n)?)
        }
        Command::BmoNorm { q, input } => {
            ok(commands::bmo(&tree, &read_function(&tree, input)?, &Exponent::parse(q)?)?)
        }
        Command::Sharp { q, at, input } => {
            let f = read_function(&tree, input)?;
            let at = at.as_deref().map(|s| tree.parse_vertex(s)).transpose()?;
            ok(commands::sharp(&tree, &f, &Exponent::parse(q)?, at.as_ref(), &window)?)
        }
        Command::Maximal { at, input } => {
            ok(commands::maximal(&tree, &read_function(&tree, input)?, &tree.parse_vertex(at)?)?)
        }
        Command::Decompose { q, input, j, all, max_omega } => {
            let g = read_function(&tree, input)?;
            let mode = match (j, all) {
                (Some(j), false) => DecomposeMode::Level(*j),
                (None, true) => DecomposeMode::All,
                _ => return Err(cztree::Error::InvalidInput("decompose needs --j <int> or --all".into())),
            };
            let limits = SplitLimits { max_omega: *max_omega };
            ok(commands::decompose(&tree, &g, &Exponent::parse(q)?, mode, limits)?)
        }
        Command::H1 { input, family, candidates } => {
            let g = read_function(&tree, input)?;
            let family = commands::parse_family_window(&tree, family, &window)?;
            let candidates = commands::parse_candidates(&tree, candidates, &family)?;
            ok(commands::h1(&tree, &g, &family, &candidates)?)
        }
        Command::Hormander { kernel, family } => {
            let kernel = KernelWindow::from_json(&tree, &read_input(kernel)?)?;
            let family = commands::parse_family_window(&tree, family, &kernel.window)?;
            ok(commands::hormander(&tree, &kernel, &family)?)
        }
        Command::Check { suite, run } => {
            let config = config(cli, &tree, &window, run)?;
            let (report, passed) = commands::check(&config, &[Suite::parse(suite)?])?;
            Ok((report.to_json(), !passed))
        }
        Command::Constants { run } => {
            let config = config(cli, &tree, &window, run)?;
            let (report, passed) = commands::check(&config, &Suite::ALL)?;
            Ok((commands::constants_summary(&report), !passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, failed)) => {
            let text = serde_json::to_string_pretty(&value).expect("JSON serializes");
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("error: writing {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => println!("{text}"),
            }
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
