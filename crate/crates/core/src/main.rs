//! Command-line front end: verify bivectors, evaluate Schouten brackets,
//! search ansatz spaces, and run the built-in verification corpus.

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use jetviber::fixtures::{self, Sources};
use jetviber::lang::{print_canonical, Session};
use jetviber::report::{Report, Status};
use jetviber::schouten::{check_bivector, schouten_bracket, CheckReport};
use jetviber::search::search;
use jetviber::{Atom, DiffPoly, EquationModel};

#[derive(Parser)]
#[command(
    name = "jetviber",
    version,
    about = "Exact jet-space calculus for variational bivectors of scalar PDEs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check declared bivectors against the session's equation
    Verify {
        /// Session file declaring variables, an equation, and bivectors
        session: PathBuf,
        /// Bivector names to check (default: all declared)
        names: Vec<String>,
        /// Bind functions or constants, e.g. "h1 = u[x]; a = 2" (repeatable)
        #[arg(long)]
        instantiate: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate the Schouten bracket of two declared bivectors
    Schouten {
        session: PathBuf,
        /// First bivector name
        a: String,
        /// Second bivector name (default: repeat the first)
        b: Option<String>,
        /// Assert that the bracket vanishes; a nonzero bracket fails
        #[arg(long)]
        poisson: bool,
        /// Show only terms with an odd jet of order above K (the `O(K)` tail)
        #[arg(long, value_name = "K")]
        truncate: Option<usize>,
        #[arg(long)]
        instantiate: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Enumerate variational bivectors from a polynomial ansatz
    Search {
        session: PathBuf,
        /// Highest odd jet order admitted in the ansatz slots
        #[arg(long, default_value_t = 2)]
        max_jet_order: usize,
        /// Comma-separated coefficient variables, e.g. "x,y,u[x],u[x,y]"
        #[arg(long, default_value = "")]
        coeff_vars: String,
        /// Total degree bound for coefficient monomials
        #[arg(long, default_value_t = 0)]
        coeff_degree: u32,
        /// Session fragment declaring bivectors to test for span membership
        #[arg(long, value_name = "FILE")]
        contains: Option<PathBuf>,
        #[arg(long)]
        instantiate: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the built-in verification corpus
    Fixtures {
        /// Run a single task: wave, uxyz, laplace2d, laplace3d, poincare
        #[arg(long)]
        only: Option<String>,
        /// Read session files from this directory instead of the built-ins
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, result) = match cli.cmd {
        Cmd::Verify {
            session,
            names,
            instantiate,
            format,
        } => (format, verify_cmd(&session, &names, &instantiate)),
        Cmd::Schouten {
            session,
            a,
            b,
            poisson,
            truncate,
            instantiate,
            format,
        } => (
            format,
            schouten_cmd(&session, &a, b.as_deref(), poisson, truncate, &instantiate),
        ),
        Cmd::Search {
            session,
            max_jet_order,
            coeff_vars,
            coeff_degree,
            contains,
            instantiate,
            format,
        } => (
            format,
            search_cmd(
                &session,
                max_jet_order,
                &coeff_vars,
                coeff_degree,
                contains.as_deref(),
                &instantiate,
            ),
        ),
        Cmd::Fixtures {
            only,
            data_dir,
            format,
        } => {
            let sources = match &data_dir {
                Some(dir) => Sources::from_dir(dir),
                None => Sources::builtin(),
            };
            (format, fixtures::run(only.as_deref(), &sources))
        }
    };
    match result {
        Ok(report) => {
            let text = match format {
                Format::Text => report.render_text(),
                Format::Json => format!("{}\n", report.render_json()),
            };
            // Tolerate a closed pipe (e.g. `| head`): the report is the
            // exit code's business either way.
            let _ = io::Write::write_all(&mut io::stdout(), text.as_bytes());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Loads a session file and applies `--instantiate` blocks, each a
/// `;`-separated list of `name = expression` bindings.
fn load_session(path: &Path, instantiate: &[String]) -> Result<Session, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut s = Session::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    for block in instantiate {
        for part in block.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, rhs) = part
                .split_once('=')
                .ok_or_else(|| format!("--instantiate expects `name = expression`, got `{part}`"))?;
            let e = s
                .parse_expression(rhs.trim())
                .map_err(|e| format!("--instantiate {}: {e}", name.trim()))?;
            s.add_instantiation(name.trim(), e)?;
        }
    }
    Ok(s)
}

fn model_and_names(s: &Session, names: &[String]) -> Result<(EquationModel, Vec<String>), String> {
    let eq = fixtures::model_of(s)?;
    let names = if names.is_empty() {
        s.bivectors.iter().map(|(n, _)| n.clone()).collect()
    } else {
        names.to_vec()
    };
    if names.is_empty() {
        return Err("the session declares no bivectors".to_string());
    }
    Ok((eq, names))
}

fn verify_cmd(path: &Path, names: &[String], instantiate: &[String]) -> Result<Report, String> {
    let s = load_session(path, instantiate)?;
    let (eq, names) = model_and_names(&s, names)?;
    let mut report = Report::new();
    for name in &names {
        let s = &s;
        let eq = &eq;
        report.run("verify", name, || {
            let checked = fixtures::bivector_named(s, name)
                .and_then(|b| check_bivector(&b, eq).map_err(|e| e.to_string()));
            match checked {
                Ok(CheckReport::Pass { nabla }) => {
                    let lines: Vec<String> = nabla
                        .values()
                        .map(|(tau, a)| {
                            format!("A[{}] = {}", tau.render(&s.var_names), print_canonical(a, s))
                        })
                        .collect();
                    (Status::Pass, lines.join("\n"))
                }
                Ok(CheckReport::Fail(v)) => {
                    (Status::Fail, fixtures::describe_violation(&v, s))
                }
                Err(e) => (Status::Error, e),
            }
        });
    }
    Ok(report)
}

fn schouten_cmd(
    path: &Path,
    a: &str,
    b: Option<&str>,
    poisson: bool,
    truncate: Option<usize>,
    instantiate: &[String],
) -> Result<Report, String> {
    let s = load_session(path, instantiate)?;
    let eq = fixtures::model_of(&s)?;
    let b = b.unwrap_or(a);
    let ba = fixtures::bivector_named(&s, a)?;
    let bb = fixtures::bivector_named(&s, b)?;
    let mut report = Report::new();
    let item = format!("[[{a}, {b}]]");
    report.run("schouten", &item, || {
        let w = match schouten_bracket(&ba, &bb, &eq) {
            Ok(w) => w,
            Err(e) => return (Status::Error, e.to_string()),
        };
        let shown = match truncate {
            Some(k) => w.p_above(k),
            None => w.clone(),
        };
        let mut payload = print_canonical(&shown, &s);
        if truncate.is_some() && shown != w {
            payload.push_str(&format!(
                "\n(part above cutoff; {} of {} terms shown)",
                shown.n_terms(),
                w.n_terms()
            ));
        }
        if poisson && !w.is_zero() {
            (Status::Fail, payload)
        } else {
            (Status::Pass, payload)
        }
    });
    Ok(report)
}

/// Splits a comma-separated variable list, respecting `[...]` nesting, and
/// resolves each entry to a single even atom. A bare `u` means `u[]`.
fn parse_coeff_vars(s: &Session, list: &str) -> Result<Vec<Atom>, String> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in list.chars() {
        match c {
            '[' => {
                depth += 1;
                cur.push(c);
            }
            ']' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                items.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    items.push(cur);
    let mut out = Vec::new();
    for raw in items {
        let tok = raw.trim();
        if tok.is_empty() {
            continue;
        }
        let src = if tok == "u" { "u[]" } else { tok };
        let e = s
            .parse_expression(src)
            .map_err(|e| format!("--coeff-vars `{tok}`: {e}"))?;
        out.push(
            single_even_atom(&e)
                .ok_or_else(|| format!("--coeff-vars `{tok}` is not a single even variable"))?,
        );
    }
    Ok(out)
}

fn single_even_atom(e: &DiffPoly) -> Option<Atom> {
    let mut terms = e.terms();
    let (m, c) = terms.next()?;
    if terms.next().is_some() || !c.is_integer() || *c != num_rational::BigRational::from_integer(1.into()) {
        return None;
    }
    if !m.odds.is_empty() || m.evens.len() != 1 {
        return None;
    }
    let (atom, k) = &m.evens[0];
    if *k == 1 {
        Some(atom.clone())
    } else {
        None
    }
}

fn search_cmd(
    path: &Path,
    max_jet_order: usize,
    coeff_vars: &str,
    coeff_degree: u32,
    contains: Option<&Path>,
    instantiate: &[String],
) -> Result<Report, String> {
    let s = load_session(path, instantiate)?;
    let eq = fixtures::model_of(&s)?;
    let vars = parse_coeff_vars(&s, coeff_vars)?;
    let n_vars = s.var_names.len();
    let out = search(&eq, n_vars, max_jet_order, &vars, coeff_degree).map_err(|e| e.to_string())?;

    let mut report = Report::new();
    report.run("search", "ansatz", || {
        (
            Status::Pass,
            format!(
                "{} odd slots x {} coefficient monomials = {} unknowns; {} relations",
                out.ansatz.slots().len(),
                out.ansatz.len() / out.ansatz.slots().len().max(1),
                out.ansatz.len(),
                out.system.rows.len()
            ),
        )
    });
    report.run("search", "dimension", || {
        (Status::Pass, format!("{}", out.basis.len()))
    });
    for (i, v) in out.basis.iter().enumerate() {
        let e = out.ansatz.combine(v);
        report.run("search", &format!("basis[{i}]"), || {
            (Status::Pass, print_canonical(&e, &s))
        });
    }

    if let Some(frag_path) = contains {
        let frag = std::fs::read_to_string(frag_path)
            .map_err(|e| format!("cannot read {}: {e}", frag_path.display()))?;
        let before: Vec<String> = s.bivectors.iter().map(|(n, _)| n.clone()).collect();
        let mut extended = s.clone();
        extended.extend(&frag).map_err(|e| format!("{}: {e}", frag_path.display()))?;
        let fresh: Vec<String> = extended
            .bivectors
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| !before.contains(n))
            .collect();
        if fresh.is_empty() {
            return Err(format!("{} declares no new bivectors", frag_path.display()));
        }
        for name in fresh {
            let e = extended.resolved(extended.bivector(&name).unwrap())?;
            let inside = match out.ansatz.coordinates(&e) {
                Some(v) => out.system.satisfied_by(&v),
                None => false,
            };
            report.run("search", &format!("{name} lies in the span"), || {
                if inside {
                    (Status::Pass, String::new())
                } else {
                    (Status::Fail, String::new())
                }
            });
        }
    }
    Ok(report)
}
