use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use distflag::commands::{run, Command, Format, Options};
use distflag::document::parse_rational;
use distflag_core::pipeline::Route;
use distflag_core::Rational;

/// Flag, reduction and classification tools for rank-2 distributions and
/// class-one PDE systems.
#[derive(Debug, Parser)]
#[command(name = "distflag", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Input document; `-` reads stdin.
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Evaluation point, `x=0,y=1/2`.
    #[arg(long, value_parser = pairs)]
    point: Option<Pairs>,
    /// Parameter values, `m=3`.
    #[arg(long = "param", value_parser = pairs)]
    params: Option<Pairs>,
    #[arg(long, value_parser = route)]
    route: Option<Route>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 16)]
    max_steps: usize,
    /// Function for `check-integral`.
    #[arg(long)]
    expr: Option<String>,
    /// Use generalized symmetries in `check-sym`.
    #[arg(long)]
    generalized: bool,
}

#[derive(Debug, Clone)]
struct Pairs(Vec<(String, Rational)>);

fn pairs(s: &str) -> Result<Pairs, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, got `{}`", p))?;
            let q = parse_rational(v).ok_or_else(|| format!("`{}` is not a rational", v))?;
            Ok((k.trim().to_string(), q))
        })
        .collect::<Result<_, String>>()
        .map(Pairs)
}

fn route(s: &str) -> Result<Route, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = if cli.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        std::fs::read_to_string(&cli.input)
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {}", cli.input.display(), e);
            return ExitCode::from(2);
        }
    };
    let opts = Options {
        seed: cli.seed,
        trials: cli.trials,
        tolerance: cli.tolerance,
        point: cli.point.map(|p| p.0).unwrap_or_default(),
        params: cli.params.map(|p| p.0).unwrap_or_default(),
        route: cli.route,
        format: cli.format,
        max_steps: cli.max_steps,
        expr: cli.expr,
        generalized: cli.generalized,
    };
    let out = run(cli.command, &text, &opts);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}
