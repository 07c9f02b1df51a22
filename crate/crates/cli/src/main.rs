//! Command-line front end: word algebra, the cut-complex oracle, exact
//! lattice bookkeeping, step-calculus simulation, the classification table,
//! and the approximability verdict, all emitting JSON (the table also as
//! text).
//!
//! Exit codes: 0 success, 1 domain error (JSON diagnostics on stderr),
//! 2 parse error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use curvepair::cellsurf::{canonical_pair, oracle_word_sweep, realize};
use curvepair::enumerate::{classify_approximable, golden_table, theorem_table, witness};
use curvepair::mmp::{self, EndStateKind, StepKind, TraceRow};
use curvepair::pairalg::{normalize, verify_diffeo_table, PairError, PairWord, TopPair};
use curvepair::piclattice::{
    coble_example, dp2_check, minus_two_solutions, p1xp1_parity_check, tower_example, BaseSurface,
    Center, PicLattice,
};
use serde::Serialize;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curvepair", version, about = "Curves on real rational surfaces: \
pair words, oracles, lattices, step calculus, and the classification table")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Symbolic word algebra on pairs.
    Pair {
        #[command(subcommand)]
        cmd: PairCmd,
    },
    /// Independent polygon-complex route: realize, cut, classify.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Exact intersection-lattice bookkeeping for a blown-up surface.
    Lattice(LatticeArgs),
    /// Step-calculus simulation from a terminal configuration.
    Mmp {
        #[command(subcommand)]
        cmd: MmpCmd,
    },
    /// The classification table of curve types by self-intersection.
    Table(TableArgs),
    /// Approximability verdict for a pair word.
    Classify {
        /// Pair word, e.g. "KF + 5*RP2".
        #[arg(long)]
        pair: String,
    },
    /// Replayable construction plan for a pair word.
    Witness {
        #[arg(long)]
        pair: String,
    },
    /// Named numeric reports on the lattice side.
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
}

#[derive(Subcommand)]
enum PairCmd {
    /// Parse a word and print its canonical pair.
    Normalize { word: String },
    /// Verify both diffeomorphism tables up to r crosscaps.
    Table {
        #[arg(long, default_value_t = 8)]
        rmax: u32,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Realize a word as a polygon complex and classify by cutting.
    Pair { word: String },
    /// Compare the word algebra against the oracle on every word up to a
    /// summand complexity.
    Sweep {
        #[arg(long, default_value_t = 6)]
        max: u32,
    },
}

#[derive(Args)]
struct LatticeArgs {
    /// Base surface: p2, quadric, p1xp1, or hirzebruch:N.
    #[arg(long)]
    base: String,
    /// Curve class on the base generators, comma-separated integers.
    #[arg(long, value_delimiter = ',', required = true)]
    class: Vec<i64>,
    /// Blow-up centers in order: R (real), C (conjugate pair), with a
    /// trailing * for centers on the curve. Example: --blowups "R*,C,R".
    #[arg(long, value_delimiter = ',')]
    blowups: Vec<String>,
}

#[derive(Subcommand)]
enum MmpCmd {
    /// Build a terminal configuration and apply inverse steps to it.
    Simulate {
        /// E.g. section-t2:2, p2-conic, conic-bundle-k, minus-one:3rp2.
        #[arg(long = "end-state")]
        end_state: String,
        /// Comma-separated steps: conj-off, conj-on, real-off[:left|:right],
        /// real-on.
        #[arg(long, value_delimiter = ',')]
        steps: Vec<String>,
    },
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = -2, allow_negative_numbers = true)]
    emin: i64,
    #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
    emax: i64,
    #[arg(long, default_value_t = 10)]
    bound: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Compare against the built-in published table; exit 1 on any
    /// difference.
    #[arg(long)]
    golden: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Degree-two del Pezzo with C = −aK: the forced real singular member.
    Dp2 {
        #[arg(long)]
        a: u32,
    },
    /// Symmetric nodal-curve family of degree d.
    Coble {
        #[arg(long)]
        d: u32,
    },
    /// Tower of r infinitely-near centers and its cycle of classes.
    Tower {
        #[arg(long)]
        r: u32,
    },
    /// Genus parity for bidegree (a1, a2) on the quadric.
    Parity {
        #[arg(long, allow_negative_numbers = true)]
        a1: i64,
        #[arg(long, allow_negative_numbers = true)]
        a2: i64,
    },
    /// Integer solutions of the C(C+K) = −2 constraint.
    MinusTwo,
}

/// Failures split by exit code; domain errors carry their JSON payload.
enum Failure {
    Parse(String),
    Domain(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Parse(msg) => {
                eprintln!("{}", serde_json::json!({ "error": msg, "kind": "parse" }));
                ExitCode::from(2)
            }
            Failure::Domain(msg) => {
                eprintln!("{}", serde_json::json!({ "error": msg, "kind": "domain" }));
                ExitCode::from(1)
            }
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Domain(e.to_string())
}

/// Word parse errors exit 2; everything else a word evaluation can raise is a
/// domain error.
fn pair_err(e: PairError) -> Failure {
    match e {
        PairError::Parse(msg) => Failure::Parse(msg),
        other => Failure::Domain(other.to_string()),
    }
}

fn parse_word(text: &str) -> Result<PairWord, Failure> {
    text.parse::<PairWord>().map_err(pair_err)
}

fn eval_word(text: &str) -> Result<TopPair, Failure> {
    normalize(&parse_word(text)?).map_err(pair_err)
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string(value).map_err(domain)?);
    Ok(())
}

fn parse_base(text: &str) -> Result<BaseSurface, Failure> {
    match text {
        "p2" => Ok(BaseSurface::P2),
        "quadric" => Ok(BaseSurface::Quadric),
        "p1xp1" => Ok(BaseSurface::P1xP1),
        _ => match text.strip_prefix("hirzebruch:") {
            Some(n) => n
                .parse::<u32>()
                .map(BaseSurface::Hirzebruch)
                .map_err(|_| Failure::Parse(format!("bad Hirzebruch index in `{text}`"))),
            None => Err(Failure::Parse(format!(
                "unknown base `{text}` (expected p2, quadric, p1xp1, hirzebruch:N)"
            ))),
        },
    }
}

fn parse_center(text: &str) -> Result<Center, Failure> {
    match text {
        "R" => Ok(Center::Real { on_curve: false }),
        "R*" => Ok(Center::Real { on_curve: true }),
        "C" => Ok(Center::ConjPair { on_curve: false }),
        "C*" => Ok(Center::ConjPair { on_curve: true }),
        _ => Err(Failure::Parse(format!(
            "unknown center `{text}` (expected R, R*, C, or C*)"
        ))),
    }
}

#[derive(Serialize)]
struct LatticeReport {
    base: BaseSurface,
    rank: usize,
    curve: Vec<String>,
    self_int: String,
    k_class: Vec<String>,
    p_a: i64,
    real_topology: String,
    conjugation_invariant: bool,
}

fn run_lattice(args: &LatticeArgs) -> Result<(), Failure> {
    let base = parse_base(&args.base)?;
    let mut lattice = PicLattice::new(base, &args.class).map_err(domain)?;
    for token in &args.blowups {
        lattice.blow_up(parse_center(token)?);
    }
    let curve = lattice.curve.clone();
    let report = LatticeReport {
        base,
        rank: lattice.rank(),
        curve: curve.iter().map(|x| x.to_string()).collect(),
        self_int: lattice.curve_self_int().to_string(),
        k_class: lattice.k_class().iter().map(|x| x.to_string()).collect(),
        p_a: lattice.arithmetic_genus(&curve).map_err(domain)?,
        real_topology: lattice.real_topology().to_string(),
        conjugation_invariant: lattice.is_conjugation_invariant(&curve).map_err(domain)?,
    };
    emit(&report)
}

fn run_simulate(end_state: &str, steps: &[String]) -> Result<(), Failure> {
    let kind: EndStateKind = end_state.parse().map_err(|e: mmp::MmpError| {
        Failure::Parse(e.to_string())
    })?;
    let mut state = mmp::end_state(kind).map_err(domain)?;
    let mut rows = vec![TraceRow {
        step: kind.to_string(),
        csq: state.csq,
        pair: state.pair,
    }];
    for token in steps {
        let step: StepKind = token
            .parse()
            .map_err(|e: mmp::MmpError| Failure::Parse(e.to_string()))?;
        state = state.apply_inverse_step(step).map_err(domain)?;
        rows.push(TraceRow { step: step.to_string(), csq: state.csq, pair: state.pair });
    }
    emit(&rows)
}

fn run_table(args: &TableArgs) -> Result<(), Failure> {
    let table = theorem_table(args.emin, args.emax, args.bound).map_err(domain)?;
    match args.format {
        Format::Text => print!("{table}"),
        Format::Json => emit(&table)?,
    }
    if args.golden && table != golden_table() {
        return Err(Failure::Domain(
            "computed table differs from the built-in published table".into(),
        ));
    }
    Ok(())
}

/// Exactly the pinned report shape for `check dp2`.
#[derive(Serialize)]
struct Dp2Out {
    self_pairing: i64,
    p_a: i64,
    forced: bool,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Pair { cmd: PairCmd::Normalize { word } } => emit(&eval_word(&word)?),
        Cmd::Pair { cmd: PairCmd::Table { rmax } } => {
            emit(&verify_diffeo_table(rmax).map_err(pair_err)?)
        }
        Cmd::Oracle { cmd: OracleCmd::Pair { word } } => {
            let r = realize(&parse_word(&word)?).map_err(domain)?;
            emit(&canonical_pair(&r.surface, &r.curve).map_err(domain)?)
        }
        Cmd::Oracle { cmd: OracleCmd::Sweep { max } } => emit(&oracle_word_sweep(max)),
        Cmd::Lattice(args) => run_lattice(&args),
        Cmd::Mmp { cmd: MmpCmd::Simulate { end_state, steps } } => {
            run_simulate(&end_state, &steps)
        }
        Cmd::Table(args) => run_table(&args),
        Cmd::Classify { pair } => emit(&classify_approximable(&eval_word(&pair)?)),
        Cmd::Witness { pair } => emit(&witness(&eval_word(&pair)?).map_err(domain)?),
        Cmd::Check { cmd } => match cmd {
            CheckCmd::Dp2 { a } => {
                let r = dp2_check(a).map_err(domain)?;
                emit(&Dp2Out { self_pairing: r.self_pairing, p_a: r.p_a, forced: r.forced })
            }
            CheckCmd::Coble { d } => emit(&coble_example(d).map_err(domain)?),
            CheckCmd::Tower { r } => emit(&tower_example(r).map_err(domain)?),
            CheckCmd::Parity { a1, a2 } => emit(&p1xp1_parity_check(a1, a2).map_err(domain)?),
            CheckCmd::MinusTwo => emit(&minus_two_solutions()),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.exit(),
    }
}
