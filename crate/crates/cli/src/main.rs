use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use matword::catalog::{catalog_gln, catalog_sl2, catalog_sp2n, catalog_torus2, CatalogEntry};
use matword::certify::{certify_with_sampling, Polarity, Property};
use matword::curve::{builtin_curve, lift_curve, sl2_start, PathLift, TargetCurve};
use matword::factor::{
    gln_ldu, gln_lu, gln_ulu, one_param_factor, one_param_factor_sl2, sl2_121, sl2_1212,
    sp2n_121_onto_z, sp2n_1213_regenerating, Factorization,
};
use matword::fiber::{
    documented_fibers_sl2, find_spec, newton_fiber_sample, torus_component_count,
    torus_exponent_matrix, FiberSampleReport, TorusComponents,
};
use matword::group::GroupName;
use matword::io::{parse_curve_samples, parse_int_rows, parse_matrix};
use matword::numeric::{CMatrix, IntMatrix, Tolerances};
use matword::word::ParamPoint;
use matword::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_EXCLUDED: u8 = 2;
const EXIT_FAILS: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;
const EXIT_TRACKING: u8 = 5;

#[derive(Parser)]
#[command(name = "matword", version, about = "Factor matrices along words of subvarieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a target matrix along a solvable word.
    Factor {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        word: String,
        #[arg(long)]
        target: PathBuf,
    },
    /// Certify a property of a word.
    Check {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        word: String,
        #[arg(long)]
        property: String,
        /// Random points for the numerical dominance fallback.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Sample the fibre of mu_w over a target by multi-start Gauss-Newton.
    Fiber {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        word: String,
        #[arg(long, conflicts_with = "identity", required_unless_present = "identity")]
        target: Option<PathBuf>,
        #[arg(long)]
        identity: bool,
        #[arg(long, default_value_t = 50)]
        starts: usize,
    },
    /// Count the components of the kernel of a torus monomial map.
    TorusComponents {
        /// Integer exponent matrix, e.g. "[[1,2],[2,1]]".
        #[arg(long, conflicts_with = "word", required_unless_present = "word")]
        matrix: Option<String>,
        /// A word over the (C*)^2 letters.
        #[arg(long)]
        word: Option<String>,
    },
    /// Lift a curve of targets through mu_w.
    Lift {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        word: String,
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        curve: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupKind {
    Sl2,
    Gln,
    Sp2n,
    Torus2,
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long, value_enum)]
    group: GroupKind,
    /// Size parameter for gln (n x n) and sp2n (2n x 2n).
    #[arg(long, default_value_t = 2)]
    n: usize,
}

impl GroupArgs {
    fn catalog(&self, seed: u64) -> Result<CatalogEntry, Error> {
        if self.n == 0 {
            return Err(Error::Input("--n must be at least 1".into()));
        }
        Ok(match self.group {
            GroupKind::Sl2 => catalog_sl2(),
            GroupKind::Gln => catalog_gln(self.n),
            GroupKind::Sp2n => catalog_sp2n(self.n, seed),
            GroupKind::Torus2 => catalog_torus2(),
        })
    }
}

#[derive(Serialize)]
struct RunReport<T: Serialize> {
    command: Vec<String>,
    seed: u64,
    tolerances: Tolerances,
    outcome: T,
}

/// What a command produced: the JSON payload, the human rendering and the
/// exit code.
struct Outcome {
    payload: Value,
    text: String,
    code: u8,
}

impl Outcome {
    fn ok(payload: impl Serialize, text: String) -> Self {
        Self { payload: to_value(payload), text, code: 0 }
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report serialises")
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ExcludedLocus(_) | Error::DSingular | Error::LeadingMinorZero { .. } => EXIT_EXCLUDED,
        Error::TrackingFailure { .. } => EXIT_TRACKING,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut tol = Tolerances::default();
    if let Some(r) = cli.rank_tol {
        tol.rank_tol = r;
    }
    if let Some(r) = cli.residual_tol {
        tol.residual_tol = r;
    }
    let result = tol.validate().and_then(|()| run(&cli.command, cli.seed, &tol));
    let outcome = result.unwrap_or_else(|e| Outcome {
        payload: json!({ "error": e.to_string() }),
        text: format!("error: {e}"),
        code: exit_code(&e),
    });
    if cli.json {
        let report = RunReport {
            command: std::env::args().skip(1).collect(),
            seed: cli.seed,
            tolerances: tol,
            outcome: outcome.payload,
        };
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    } else if outcome.code == 0 || outcome.code == EXIT_FAILS || outcome.code == EXIT_UNKNOWN {
        println!("{}", outcome.text);
    } else {
        eprintln!("{}", outcome.text);
    }
    ExitCode::from(outcome.code)
}

fn run(command: &Command, seed: u64, tol: &Tolerances) -> Result<Outcome, Error> {
    match command {
        Command::Factor { group, word, target } => {
            let entry = group.catalog(seed)?;
            let g = read_matrix(target)?;
            let f = factor_with(&entry, group.n, word, &g, seed, tol)?;
            let text = format!(
                "word {}\nparams {}\nresidual {:.3e}, retries {}",
                f.word,
                fmt_point(&f.params),
                f.residual,
                f.retries
            );
            Ok(Outcome::ok(&f, text))
        }
        Command::Check { group, word, property, samples } => {
            let entry = group.catalog(seed)?;
            let w = entry.word(word)?;
            let p = Property::parse(property).ok_or_else(|| {
                Error::Input(format!(
                    "unknown property `{property}` (expected dominant, surjective, open, birational or irreducible)"
                ))
            })?;
            let cert = certify_with_sampling(&entry, &w, p, entry.certificates(), *samples, seed, tol);
            let chain = cert.chain();
            let code = match cert.polarity {
                Polarity::Holds => 0,
                Polarity::Fails => EXIT_FAILS,
                Polarity::Unknown => EXIT_UNKNOWN,
            };
            let text = chain.join("\n");
            Ok(Outcome { payload: json!({ "certificate": cert, "chain": chain }), text, code })
        }
        Command::Fiber { group, word, target, identity, starts } => {
            let entry = group.catalog(seed)?;
            let w = entry.word(word)?;
            let g = match target {
                Some(path) if !identity => read_matrix(path)?,
                _ => entry.group.identity(),
            };
            let specs = if entry.group.name == GroupName::Sl2 { documented_fibers_sl2() } else { Vec::new() };
            let spec = find_spec(&specs, &w, &g);
            let report = newton_fiber_sample(&entry, &w, &g, *starts, seed, tol, spec)?;
            let check = spec.map(|s| matword::fiber::verify_component_spec(&entry, s, 20, seed)).transpose()?;
            let text = fiber_text(&report, check.as_ref().map(|c| c.passed()));
            Ok(Outcome::ok(json!({ "sample": report, "components": check }), text))
        }
        Command::TorusComponents { matrix, word } => {
            let m = match (matrix, word) {
                (Some(s), _) => IntMatrix::from_rows(&parse_int_rows(s)?)?,
                (None, Some(w)) => {
                    let e = catalog_torus2();
                    torus_exponent_matrix(&e, &e.word(w)?)?
                }
                (None, None) => return Err(Error::Input("give --matrix or --word".into())),
            };
            let c = torus_component_count(&m)?;
            let text = format!(
                "components {}, invariant factors [{}]",
                c.count,
                c.invariant_factors.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            );
            Ok(Outcome::ok(torus_json(&c), text))
        }
        Command::Lift { group, word, curve, builtin, steps } => {
            let entry = group.catalog(seed)?;
            let w = entry.word(word)?;
            let curve = match (curve, builtin) {
                (Some(path), _) => {
                    TargetCurve::sampled(parse_curve_samples(&read(path)?)?, entry.group, tol)?
                }
                (None, Some(name)) => builtin_curve(name)?,
                (None, None) => return Err(Error::Input("give --curve or --builtin".into())),
            };
            if curve.group != entry.group {
                return Err(Error::Input(format!("curve lies in {}, not {}", curve.group, entry.group)));
            }
            let g0 = curve.at(0.0);
            let start = if entry.group.name == GroupName::Sl2 {
                sl2_start(&entry, &w, &g0, seed, tol)?
            } else {
                factor_with(&entry, group.n, word, &g0, seed, tol)?.params
            };
            let lift = lift_curve(&entry, &w, &curve, &start, *steps, tol)?;
            let text = lift_text(&lift);
            Ok(Outcome::ok(&lift, text))
        }
    }
}

fn factor_with(
    entry: &CatalogEntry,
    n: usize,
    word: &str,
    g: &CMatrix,
    seed: u64,
    tol: &Tolerances,
) -> Result<Factorization, Error> {
    let size = entry.group.ambient_size;
    if g.shape() != (size, size) {
        return Err(Error::Shape(format!("target is {}x{}, {} needs {size}x{size}", g.nrows(), g.ncols(), entry.group)));
    }
    match (entry.group.name, word) {
        (GroupName::Sl2, "121") => sl2_121(g, tol),
        (GroupName::Sl2, "1212") => sl2_1212(g, tol),
        (GroupName::Sl2, "2312" | "one-param") => one_param_factor_sl2(g, seed, tol),
        (GroupName::Gln, "12") => gln_lu(g, tol),
        (GroupName::Gln, "212") => gln_ulu(g, seed, tol),
        (GroupName::Gln, "ldu") => gln_ldu(g, tol),
        (GroupName::Gln, "one-param") => one_param_factor(g, seed, tol),
        (GroupName::Sp2n, "121") => sp2n_121_onto_z(g, tol),
        (GroupName::Sp2n, "1213") => sp2n_1213_regenerating(g, n, seed, tol).map(|(f, _)| f),
        _ => Err(Error::Unsupported(format!("factoring along `{word}` in {}", entry.group))),
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &PathBuf) -> Result<CMatrix, Error> {
    parse_matrix(&read(path)?)
}

fn big_json(b: &impl ToString) -> Value {
    let s = b.to_string();
    s.parse::<i64>().map(Value::from).unwrap_or(Value::String(s))
}

fn torus_json(c: &TorusComponents) -> Value {
    json!({
        "count": big_json(&c.count),
        "invariant_factors": c.invariant_factors.iter().map(big_json).collect::<Vec<_>>(),
    })
}

fn fmt_real(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn fmt_complex(z: Complex64) -> String {
    if z.im.abs() < 1e-12 {
        fmt_real(z.re)
    } else {
        format!("{}{}{}i", fmt_real(z.re), if z.im < 0.0 { "-" } else { "+" }, fmt_real(z.im.abs()))
    }
}

fn fmt_point(p: &ParamPoint) -> String {
    let blocks: Vec<String> = p
        .blocks
        .iter()
        .map(|b| match b.as_slice() {
            [z] => fmt_complex(*z),
            zs => format!("[{}]", zs.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(", ")),
        })
        .collect();
    format!("({})", blocks.join(", "))
}

fn fiber_text(r: &FiberSampleReport, spec_passed: Option<bool>) -> String {
    let mut out = format!(
        "{} starts, {} converged, {} distinct solutions",
        r.starts,
        r.converged,
        r.solutions.len()
    );
    if !r.component_names.is_empty() {
        for (k, name) in r.component_names.iter().enumerate() {
            let hits = r.solutions.iter().filter(|s| s.component == Some(k)).count();
            out.push_str(&format!("\n  {name}: {hits}"));
        }
        out.push_str(&format!("\n  unclassified: {}", r.unclassified()));
    }
    if let Some(ok) = spec_passed {
        out.push_str(&format!("\ndocumented components verified: {}", if ok { "yes" } else { "no" }));
    }
    if r.solutions.len() <= 4 {
        for s in &r.solutions {
            out.push_str(&format!("\n  {} (nullity {})", fmt_point(&s.params), s.nullity));
        }
    }
    out
}

fn lift_text(l: &PathLift) -> String {
    let last = l.nodes.last().expect("nodes");
    let jumps = if l.suspected_jumps.is_empty() {
        "none".to_owned()
    } else {
        l.suspected_jumps.iter().map(|t| fmt_real(*t)).collect::<Vec<_>>().join(", ")
    };
    format!(
        "lifted {} along {} over {} nodes ({} substeps)\nmax residual {:.3e}, suspected jumps: {}\np(1) = {}",
        l.curve,
        l.word,
        l.nodes.len(),
        l.substeps,
        l.max_residual,
        jumps,
        fmt_point(&last.params)
    )
}
