//! qhs: command-line workbench for diagram spaces, linking forms, surgery
//! homology, bracket evaluation, and the invariant algebra.
//!
//! Output is JSON by default (--table for an aligned key listing). Results
//! are cached on disk under $QHS_CACHE_DIR (default: <system temp>/qhs-cache),
//! keyed by tool version and the full argument list; --no-cache bypasses the
//! cache entirely.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qhs_core::augmented::{dim_augmented, PrimeSupport};
use qhs_core::bracket::{
    bracket, parse_label, EvalContext, InvariantExpr, ManifoldModel, Monomial,
    SurgeryDatum, Symbol,
};
use qhs_core::homology::{
    glue, lagrangian_invariants, mu_p, standard_surgery_identification, Order, PieceWithBoundary,
};
use qhs_core::hopf::{
    coproduct, dim_check, dual_system, duality_is_identity, duality_matrix, enumerate_tn,
    IndexUniverse,
};
use qhs_core::jacobi;
use qhs_core::linking::{
    from_framing_matrix, is_isomorphic, normalize, orthogonal_sum, Linking,
};
use qhs_core::matrix::{format_fraction, IntMatrix};

#[derive(Parser)]
#[command(name = "qhs", version, about = "rational homology sphere workbench")]
struct Cli {
    /// Render output as an aligned table instead of JSON
    #[arg(long, global = true)]
    table: bool,
    /// Bypass the on-disk result cache
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Jacobi diagram spaces modulo AS and IHX
    #[command(subcommand)]
    Jacobi(JacobiCmd),
    /// Augmented diagram spaces over a finite prime support
    #[command(subcommand)]
    Aug(AugCmd),
    /// Linking forms on finite abelian groups
    #[command(subcommand)]
    Linking(LinkingCmd),
    /// First homology of glued surgery pieces
    #[command(subcommand)]
    Homology(HomologyCmd),
    /// Bracket expansion and invariant evaluation
    #[command(subcommand)]
    Bracket(BracketCmd),
    /// Index sets, dual systems, and the coproduct
    #[command(subcommand)]
    Hopf(HopfCmd),
}

#[derive(Subcommand)]
enum JacobiCmd {
    /// Dimension of the degree-n space
    Dim { n: usize },
    /// Canonical keys of a quotient basis
    Basis { n: usize },
}

#[derive(Subcommand)]
enum AugCmd {
    /// Dimension of the degree-n augmented space
    Dim {
        n: usize,
        #[command(flatten)]
        primes: PrimesArg,
    },
}

#[derive(Args)]
struct PrimesArg {
    /// Comma-separated ascending prime support, e.g. 2,3,5
    #[arg(long, value_delimiter = ',')]
    primes: Vec<u64>,
}

#[derive(Subcommand)]
enum LinkingCmd {
    /// Canonical block decomposition of a linking form
    Normalize { form: String },
    /// Orthogonal sum of two forms
    Sum { a: String, b: String },
    /// Exact isomorphism test
    Iso { a: String, b: String },
    /// Linking form of a surgery framing matrix
    FromFraming { matrix: String },
}

#[derive(Subcommand)]
enum HomologyCmd {
    /// Glue two pieces along their boundary
    Glue {
        a: String,
        b: String,
        /// Identification matrix (JSON, a file path, or "standard")
        #[arg(long)]
        ident: String,
    },
    /// Lagrangian elementary divisors and torsion of a piece
    Lagrangian { piece: String },
    /// mu_p of a genus-1 piece
    MuP {
        piece: String,
        #[arg(short)]
        p: u64,
    },
}

#[derive(Subcommand)]
enum BracketCmd {
    /// Evaluate an invariant expression on a bracket
    Eval {
        /// Product of symbols, e.g. "nu_2*nu_3" or "nu_2^2"
        #[arg(long)]
        expr: String,
        /// Base model: "S3" or summand labels joined by '#'
        #[arg(long, default_value = "S3")]
        base: String,
        /// Comma-separated surgery summand labels, e.g. g2,g3
        #[arg(long, value_delimiter = ',', default_value = "")]
        data: Vec<String>,
    },
}

#[derive(Subcommand)]
enum HopfCmd {
    /// Enumerate the index set T_n
    Tn {
        n: usize,
        #[command(flatten)]
        primes: PrimesArg,
    },
    /// Check that the dual-system evaluation matrix is the identity
    Duality {
        n: usize,
        #[command(flatten)]
        primes: PrimesArg,
    },
    /// Coproduct of a monomial expression
    Coproduct { expr: String },
    /// Compare |T_n| with the augmented dimension
    DimCheck {
        n: usize,
        #[command(flatten)]
        primes: PrimesArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rendered = if cli.no_cache {
        compute_rendered(&cli)
    } else {
        match cache_lookup() {
            Some(hit) => Ok(hit),
            None => {
                let r = compute_rendered(&cli);
                if let Ok(out) = &r {
                    cache_store(out);
                }
                r
            }
        }
    };
    match rendered {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn compute_rendered(cli: &Cli) -> Result<String, String> {
    let value = run(&cli.cmd)?;
    Ok(render(&value, cli.table))
}

fn render(v: &Value, table: bool) -> String {
    if !table {
        return format!("{v}\n");
    }
    let mut out = String::new();
    match v.as_object() {
        Some(map) => {
            let width = map.keys().map(String::len).max().unwrap_or(0);
            for (k, val) in map {
                out.push_str(&format!("{k:width$}  {}\n", scalar_text(val)));
            }
        }
        None => out.push_str(&format!("{}\n", scalar_text(v))),
    }
    out
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(scalar_text).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

// cache key covers the tool version and the argument list minus the cache
// control flag itself, so cached and uncached runs render identically
fn cache_key() -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    for arg in std::env::args().skip(1).filter(|a| a != "--no-cache") {
        h.update([0u8]);
        h.update(arg.as_bytes());
    }
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_dir() -> PathBuf {
    std::env::var_os("QHS_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("qhs-cache"))
}

fn cache_lookup() -> Option<String> {
    let path = cache_dir().join(cache_key());
    fs::read_to_string(path).ok()
}

fn cache_store(payload: &str) {
    let dir = cache_dir();
    if fs::create_dir_all(&dir).is_err() {
        return;
    }
    let key = cache_key();
    let tmp = dir.join(format!("{key}.tmp.{}", std::process::id()));
    if fs::write(&tmp, payload).is_ok() {
        let _ = fs::rename(&tmp, dir.join(key));
    }
}

fn run(cmd: &Cmd) -> Result<Value, String> {
    match cmd {
        Cmd::Jacobi(JacobiCmd::Dim { n }) => Ok(json!({
            "degree": n,
            "dim": jacobi::dim(*n),
        })),
        Cmd::Jacobi(JacobiCmd::Basis { n }) => {
            let space = jacobi::space(*n);
            Ok(json!({
                "degree": n,
                "dim": space.quotient_dim(),
                "basis": space.basis().iter().map(|k| k.to_hex()).collect::<Vec<_>>(),
            }))
        }
        Cmd::Aug(AugCmd::Dim { n, primes }) => {
            let support = support_of(primes)?;
            Ok(json!({ "dim": bigint_value(&dim_augmented(*n, &support)) }))
        }
        Cmd::Linking(LinkingCmd::Normalize { form }) => {
            let l = parse_linking(form)?;
            Ok(normalize(&l).to_json())
        }
        Cmd::Linking(LinkingCmd::Sum { a, b }) => {
            let (a, b) = (parse_linking(a)?, parse_linking(b)?);
            Ok(orthogonal_sum(&a, &b).to_json())
        }
        Cmd::Linking(LinkingCmd::Iso { a, b }) => {
            let (a, b) = (parse_linking(a)?, parse_linking(b)?);
            let iso = is_isomorphic(&a, &b).map_err(|e| e.to_string())?;
            Ok(json!({ "isomorphic": iso }))
        }
        Cmd::Linking(LinkingCmd::FromFraming { matrix }) => {
            let m = IntMatrix::from_json(&read_json_arg(matrix)?).map_err(|e| e.to_string())?;
            Ok(from_framing_matrix(&m).map_err(|e| e.to_string())?.to_json())
        }
        Cmd::Homology(HomologyCmd::Glue { a, b, ident }) => {
            let (a, b) = (parse_piece(a)?, parse_piece(b)?);
            let ident = if ident == "standard" {
                standard_surgery_identification(a.genus())
            } else {
                IntMatrix::from_json(&read_json_arg(ident)?).map_err(|e| e.to_string())?
            };
            let g = glue(&a, &b, &ident).map_err(|e| e.to_string())?;
            let (torsion, free_rank) = g.invariants();
            Ok(json!({
                "generators": g.generator_names(),
                "invariant_factors": torsion.iter().map(BigInt::to_string).collect::<Vec<_>>(),
                "free_rank": free_rank,
                "order": match g.order() {
                    Order::Finite(n) => n.to_string(),
                    Order::Infinite => "infinite".to_string(),
                },
            }))
        }
        Cmd::Homology(HomologyCmd::Lagrangian { piece }) => {
            let p = parse_piece(piece)?;
            let (d, torsion) = lagrangian_invariants(&p).map_err(|e| e.to_string())?;
            Ok(json!({
                "d": d.iter().map(BigInt::to_string).collect::<Vec<_>>(),
                "torsion": torsion.iter().map(BigInt::to_string).collect::<Vec<_>>(),
            }))
        }
        Cmd::Homology(HomologyCmd::MuP { piece, p }) => {
            let t = parse_piece(piece)?;
            let mu = mu_p(&t, *p).map_err(|e| e.to_string())?;
            Ok(json!({ "p": p, "mu": mu }))
        }
        Cmd::Bracket(BracketCmd::Eval { expr, base, data }) => {
            let e = parse_expr(expr)?;
            let base = parse_model(base)?;
            let data: Vec<SurgeryDatum> = data
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| parse_label(s).map(SurgeryDatum::new).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let sum = bracket(&base, &data);
            let value = EvalContext::new()
                .evaluate(&e, &sum)
                .map_err(|e| e.to_string())?;
            Ok(json!({
                "value": format_fraction(&value),
                "terms": sum.terms().len(),
            }))
        }
        Cmd::Hopf(HopfCmd::Tn { n, primes }) => {
            let support = support_of(primes)?;
            let u = IndexUniverse::build(*n, &support);
            let tn = enumerate_tn(*n, &u);
            Ok(json!({
                "n": n,
                "count": tn.len(),
                "indices": tn.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
            }))
        }
        Cmd::Hopf(HopfCmd::Duality { n, primes }) => {
            let support = support_of(primes)?;
            let u = IndexUniverse::build(*n, &support);
            let sys = dual_system(*n, &u).map_err(|e| e.to_string())?;
            let m = duality_matrix(&sys).map_err(|e| e.to_string())?;
            Ok(json!({
                "n": n,
                "size": m.len(),
                "identity": duality_is_identity(&m),
            }))
        }
        Cmd::Hopf(HopfCmd::Coproduct { expr }) => {
            let e = parse_expr(expr)?;
            let d = coproduct(&e);
            Ok(json!({
                "terms": d.terms().iter().map(|((l, r), c)| json!({
                    "left": monomial_text(l),
                    "right": monomial_text(r),
                    "coeff": format_fraction(c),
                })).collect::<Vec<_>>(),
            }))
        }
        Cmd::Hopf(HopfCmd::DimCheck { n, primes }) => {
            let support = support_of(primes)?;
            let (tn, aug) = dim_check(*n, &support);
            Ok(json!({
                "tn": bigint_value(&tn),
                "aug": bigint_value(&aug),
                "equal": tn == aug,
            }))
        }
    }
}

fn bigint_value(n: &BigInt) -> Value {
    match n.to_u64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn support_of(arg: &PrimesArg) -> Result<PrimeSupport, String> {
    PrimeSupport::new(&arg.primes).map_err(|e| e.to_string())
}

fn read_json_arg(s: &str) -> Result<Value, String> {
    let text = if s.trim_start().starts_with(['{', '[']) {
        s.to_string()
    } else {
        fs::read_to_string(s).map_err(|e| format!("cannot read {s}: {e}"))?
    };
    serde_json::from_str(&text).map_err(|e| format!("invalid json: {e}"))
}

fn parse_linking(s: &str) -> Result<Linking, String> {
    Linking::from_json(&read_json_arg(s)?).map_err(|e| e.to_string())
}

fn parse_piece(s: &str) -> Result<PieceWithBoundary, String> {
    match s {
        "solid-torus" => return Ok(PieceWithBoundary::solid_torus()),
        "unknot-exterior" => return Ok(PieceWithBoundary::unknot_exterior()),
        "hopf-link-exterior" => return Ok(PieceWithBoundary::hopf_link_exterior()),
        "split-unlink-exterior" => return Ok(PieceWithBoundary::split_unlink_exterior()),
        _ => {}
    }
    if let Some(d) = s.strip_prefix("d-torus:") {
        let d: u64 = d.parse().map_err(|_| format!("bad d-torus parameter {d:?}"))?;
        return Ok(PieceWithBoundary::d_torus(d));
    }
    if let Some(d) = s.strip_prefix("solid-torus-torsion:") {
        let d: u64 = d.parse().map_err(|_| format!("bad torsion parameter {d:?}"))?;
        return Ok(PieceWithBoundary::solid_torus_with_torsion(d));
    }
    PieceWithBoundary::from_json(&read_json_arg(s)?).map_err(|e| e.to_string())
}

fn parse_model(s: &str) -> Result<ManifoldModel, String> {
    if s == "S3" {
        return Ok(ManifoldModel::s3());
    }
    let summands = s
        .split('#')
        .map(|l| parse_label(l).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ManifoldModel::from_summands(summands))
}

/// Parses a product of symbol powers: "nu_2*nu_3", "nu_2^2",
/// "lambda_4_c0*nu_5".
fn parse_expr(s: &str) -> Result<InvariantExpr, String> {
    let mut acc = InvariantExpr::constant(BigRational::one());
    for factor in s.split('*') {
        let factor = factor.trim();
        let (name, exp) = match factor.split_once('^') {
            Some((n, e)) => (
                n,
                e.parse::<u32>().map_err(|_| format!("bad exponent in {factor:?}"))?,
            ),
            None => (factor, 1),
        };
        let sym = parse_symbol(name)?;
        acc = acc.mul(&InvariantExpr::symbol(sym).pow(exp));
    }
    Ok(acc)
}

fn parse_symbol(name: &str) -> Result<Symbol, String> {
    if let Some(p) = name.strip_prefix("nu_") {
        p.parse::<u64>().map_err(|_| format!("bad prime in {name:?}"))?;
        return Ok(Symbol::new(1, p));
    }
    if let Some(rest) = name.strip_prefix("lambda_") {
        if let Some((k, i)) = rest.split_once('_') {
            let k: usize = k.parse().map_err(|_| format!("bad degree in {name:?}"))?;
            return Ok(Symbol::new(k, i));
        }
    }
    Err(format!("unknown symbol {name:?}"))
}

fn monomial_text(m: &Monomial) -> String {
    if m.is_empty() {
        return "1".to_string();
    }
    m.iter()
        .map(|(s, e)| {
            if *e == 1 {
                s.to_string()
            } else {
                format!("{s}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}
