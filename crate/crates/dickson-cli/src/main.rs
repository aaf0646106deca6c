//! The `dickson` command-line tool: expression expansion, invariance
//! checks, Steenrod operations, free-module bases, rewriting, and the
//! coset-sum transfer.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dickson::genexpr::GenSymbol;
use dickson::glgroup::{
    borel_generators, gl_generators, is_invariant, parabolic_generators,
    unitriangular_generators, Composition, SubgroupTag,
};
use dickson::invariants::scalar_combination;
use dickson::modbasis::{
    dickson_monomials_of_degree, enumerate_basis, rewrite, xi, BasisFamily,
};
use dickson::parse::{parse_expr, parse_genexpr, parse_superpoly, Parsed};
use dickson::steenrod::{apply_beta, apply_p};
use dickson::superpoly::SuperPoly;
use dickson::transfer::{transfer, verify_exterior_transfer, verify_main};
use dickson::verify::{self, Scope};
use dickson::GenExpr;

#[derive(Parser)]
#[command(
    name = "dickson",
    about = "Exact invariant theory over F_p: Dickson and Mui invariants, \
             Steenrod operations, free module bases, and the transfer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Ring {
    /// Prime modulus (2..=13).
    #[arg(long)]
    p: u32,
    /// Number of variables.
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct Format {
    /// Output format.
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Expand an expression to a canonical polynomial.
    Expand {
        #[command(flatten)]
        ring: Ring,
        #[command(flatten)]
        format: Format,
        /// Also print the algebraic and topological degrees.
        #[arg(long)]
        degrees: bool,
        /// Expression, e.g. "d[2,0]^2*d[2,1]^7" or "x1*y1^5".
        expr: String,
    },
    /// Check invariance under a subgroup's generators (exit 1 when not).
    InvariantCheck {
        #[command(flatten)]
        ring: Ring,
        /// Subgroup: gl, un, borel, or parabolic.
        #[arg(long)]
        group: String,
        /// Composition for parabolic groups, e.g. "1,2" (top-left first).
        #[arg(long)]
        composition: Option<String>,
        /// Use the transposed subgroup.
        #[arg(long)]
        transposed: bool,
        expr: String,
    },
    /// Apply a Steenrod operation (odd p): --op P^k or --op beta.
    Steenrod {
        #[command(flatten)]
        ring: Ring,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        op: String,
        expr: String,
    },
    /// List a free module basis over the Dickson algebra.
    Basis {
        #[command(flatten)]
        ring: Ring,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        family: String,
    },
    /// Rewrite onto a free module basis; emits the decomposition.
    Rewrite {
        #[command(flatten)]
        ring: Ring,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        family: String,
        expr: String,
    },
    /// The epimorphism onto the invariants: the unit coefficient of the
    /// rewrite.
    Xi {
        #[command(flatten)]
        ring: Ring,
        #[arg(long)]
        family: String,
        expr: String,
    },
    /// Coset-sum transfer of an invariant.
    Transfer {
        #[command(flatten)]
        ring: Ring,
        #[command(flatten)]
        format: Format,
        /// Source subgroup: p1n1, pn11, or un.
        #[arg(long)]
        family: String,
        /// Run the transfer-vs-xi verification reports instead.
        #[arg(long)]
        report: bool,
        /// Seed for the randomized report checks.
        #[arg(long, default_value_t = 0xD1C6_50)]
        seed: u64,
        #[arg(default_value = "")]
        expr: String,
    },
    /// Run the identity-verification suite.
    Verify {
        /// fast: (2,3), (3,2); full adds (3,3), (5,2), (2,4).
        #[arg(long, default_value = "fast", value_parser = ["fast", "full"])]
        scope: String,
        #[command(flatten)]
        format: Format,
        #[arg(long, default_value_t = 0xD1C6_50)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> dickson::Result<ExitCode> {
    match cli.command {
        Command::Expand { ring, format, degrees, expr } => {
            let f = parse_superpoly(&expr, ring.p, ring.n)?;
            if format.format == "json" {
                println!("{}", f.to_json());
            } else {
                println!("{f}");
            }
            if degrees {
                match f.homogeneous_degree() {
                    Some(d) => {
                        let top = f
                            .terms()
                            .next()
                            .map(|(m, _)| m.topological_degree())
                            .unwrap_or(0);
                        println!("degree: algebraic {d}, topological {top}");
                    }
                    None => println!("degree: inhomogeneous"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::InvariantCheck { ring, group, composition, transposed, expr } => {
            let f = parse_superpoly(&expr, ring.p, ring.n)?;
            let gens = match group.as_str() {
                "gl" => gl_generators(ring.p, ring.n)?,
                "un" => unitriangular_generators(ring.p, ring.n, transposed)?,
                "borel" => borel_generators(ring.p, ring.n, transposed)?,
                "parabolic" => {
                    let comp = composition.ok_or_else(|| dickson::Error::UnsupportedFamily(
                        "parabolic needs --composition".into(),
                    ))?;
                    let parts: Vec<usize> = comp
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| dickson::Error::UnsupportedFamily(comp.clone()))?;
                    parabolic_generators(ring.p, &Composition::new(parts)?, transposed)?
                }
                other => return Err(dickson::Error::UnsupportedFamily(other.to_string())),
            };
            let ok = is_invariant(&f, &gens)?;
            println!("{ok}");
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Steenrod { ring, format, op, expr } => {
            let f = parse_superpoly(&expr, ring.p, ring.n)?;
            let result = if op == "beta" {
                apply_beta(&f)?
            } else if let Some(k) = op.strip_prefix("P^") {
                let k: u32 = k.parse().map_err(|_| dickson::Error::UnsupportedFamily(op.clone()))?;
                apply_p(k, &f)?
            } else {
                return Err(dickson::Error::UnsupportedFamily(format!(
                    "unknown operation '{op}' (use P^k or beta)"
                )));
            };
            if format.format == "json" {
                println!("{}", result.to_json());
            } else {
                println!("{result}");
                if let Some(expr) = dickson_refactor(&result)? {
                    println!("= {expr}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Basis { ring, format, family } => {
            let family = BasisFamily::parse(&family)?;
            let basis = enumerate_basis(family, ring.p, ring.n)?;
            if format.format == "json" {
                let items: Vec<String> = basis.iter().map(|b| b.to_string()).collect();
                println!("{}", serde_json::json!({ "family": family.name(), "basis": items }));
            } else {
                for b in &basis {
                    println!("{b}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rewrite { ring, format, family, expr } => {
            let family = BasisFamily::parse(&family)?;
            let f = parse_genexpr(&expr, ring.p, ring.n)?;
            let dec = rewrite(&f, family)?;
            if format.format == "json" {
                println!("{}", dec.to_json());
            } else {
                for (b, c) in &dec.pairs {
                    println!("{b}  ->  {c}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Xi { ring, family, expr } => {
            let family = BasisFamily::parse(&family)?;
            let f = parse_genexpr(&expr, ring.p, ring.n)?;
            println!("{}", xi(&f, family)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Transfer { ring, format, family, report, seed, expr } => {
            if report {
                let mut pass = true;
                let mut items = Vec::new();
                let main = verify_main(ring.p, ring.n, seed, 50)?;
                items.push(("thm-main", main.is_ok()));
                pass &= main.is_ok();
                if ring.p > 2 {
                    let ext = verify_exterior_transfer(ring.p, ring.n, seed, 20)?;
                    items.push(("thm-final", ext.is_ok()));
                    pass &= ext.is_ok();
                }
                let table: Vec<serde_json::Value> = items
                    .iter()
                    .map(|(tag, ok)| serde_json::json!({ "tag": tag, "pass": ok }))
                    .collect();
                println!("{}", serde_json::json!({ "pass": pass, "items": table }));
                return Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
            let tag = match family.as_str() {
                "p1n1" => SubgroupTag::P1N1,
                "pn11" => SubgroupTag::PN11,
                "un" => SubgroupTag::Un,
                other => return Err(dickson::Error::UnsupportedFamily(other.to_string())),
            };
            let f = match parse_expr(&expr, ring.p, ring.n)? {
                Parsed::Gen(g) => g.expand()?,
                Parsed::Super(s) => s,
            };
            let out = transfer(&f, tag)?;
            if format.format == "json" {
                let dickson_form = dickson_refactor(&out.value)?.map(|e| e.to_string());
                println!(
                    "{}",
                    serde_json::json!({
                        "schema": "dickson/1",
                        "expanded": serde_json::from_str::<serde_json::Value>(&out.value.to_json())
                            .expect("valid json"),
                        "dickson": dickson_form,
                    })
                );
            } else {
                println!("{}", out.value);
                if let Some(e) = dickson_refactor(&out.value)? {
                    println!("= {e}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { scope, format, seed } => {
            let scope = Scope::parse(&scope).expect("validated by clap");
            let config = verify::Config {
                scope,
                seed,
                degree_bound: verify::default_degree_bound(),
            };
            let report = verify::run(&config);
            if format.format == "json" {
                println!("{}", report.to_json());
            } else {
                for item in &report.items {
                    let status = if item.pass { "pass" } else { "FAIL" };
                    if item.detail.is_empty() {
                        println!("{status}  {:<32} {:>6} ms", item.tag, item.millis);
                    } else {
                        println!(
                            "{status}  {:<32} {:>6} ms  {}",
                            item.tag, item.millis, item.detail
                        );
                    }
                }
            }
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

/// When the value is a `GL`-invariant polynomial, express it in the Dickson
/// generators.
fn dickson_refactor(f: &SuperPoly) -> dickson::Result<Option<GenExpr>> {
    if f.is_zero() || !f.is_polynomial() {
        return Ok(None);
    }
    if !is_invariant(f, &gl_generators(f.p(), f.n())?)? {
        return Ok(None);
    }
    let p = f.p();
    let n = f.n();
    // Solve per homogeneous component over the Dickson monomials.
    let mut acc = GenExpr::zero(p, n)?;
    let mut by_degree: std::collections::BTreeMap<u32, SuperPoly> = Default::default();
    for (m, c) in f.terms() {
        let e = by_degree
            .entry(m.degree())
            .or_insert_with(|| SuperPoly::zero(p, n).expect("validated"));
        *e = e.add(&SuperPoly::from_terms(p, n, [(m.clone(), c as i64)])?)?;
    }
    for (deg, comp) in by_degree {
        let pool = dickson_monomials_of_degree(p, n, deg as u64)?;
        let polys: Vec<SuperPoly> = pool.iter().map(|(_, f)| f.clone()).collect();
        let Some(lambda) = scalar_combination(&comp, &polys)? else {
            return Ok(None);
        };
        for ((exps, _), c) in pool.iter().zip(lambda) {
            if c == 0 {
                continue;
            }
            let mut term = GenExpr::scalar(p, n, c as i64)?;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = term
                        .mul(&GenExpr::symbol(p, n, GenSymbol::D { m: n, i })?.pow(e)?)?;
                }
            }
            acc = acc.add(&term)?;
        }
    }
    Ok(Some(acc))
}
