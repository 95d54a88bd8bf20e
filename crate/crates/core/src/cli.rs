//! Command-line driver. Exit codes: 10 SAT/true, 20 UNSAT/false, 2 usage or input errors,
//! 0 for successful listing, encoding and cross-checks, 1 for cross-check disagreements.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{formulas_up_to, parse, random_formula_upto, subformula_chain, Formula};
use crate::oracles::{brute_sat, ModelBudget};
use crate::reductions::{ladner_encode, Qbf};
use crate::semantics::{eval, eval_cond, Condition, Model};
use crate::solver::{preset, solve_with, EngineOptions, LogicPreset, PRESET_NAMES};
use crate::ties::FormulaCtx;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

/// Largest corpus enumerated exhaustively; above this many subformulas formulas are sampled.
const EXHAUSTIVE_LIMIT: usize = 5;
const SAMPLES: usize = 2000;
const RECHECK_BUDGET: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "sumsat", version, about = "Satisfiability for modal logics of sums of Kripke frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide satisfiability of a formula in a named logic
    Solve {
        #[arg(long)]
        logic: String,
        #[arg(long = "formula")]
        formula_flag: Option<String>,
        formula: Option<String>,
        /// Search for a model by brute force
        #[arg(long)]
        witness: bool,
        /// World budget for the witness search
        #[arg(long, default_value_t = 4)]
        budget: usize,
        #[arg(long)]
        stats: bool,
    },
    /// Evaluate a formula at a world of a JSON model
    ModelCheck {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0)]
        world: usize,
        #[arg(long = "formula")]
        formula_flag: Option<String>,
        formula: Option<String>,
        /// JSON condition: one list of formula strings per modality
        #[arg(long)]
        condition: Option<String>,
    },
    /// Print the modal encoding of a QBF such as "A1 E2 : p1 | ~p2"
    EncodeQbf {
        #[arg(long = "formula")]
        formula_flag: Option<String>,
        qbf: Option<String>,
    },
    /// Compare the solver with brute-force search over small frames
    CrossCheck {
        #[arg(long)]
        logic: String,
        /// Largest number of distinct subformulas
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        /// World budget; defaults to the logic's own
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        stats: bool,
    },
    /// List the available logics
    ListLogics,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn usage(io: &mut Io, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(io.err, "error: {msg}");
    EXIT_USAGE
}

fn pick_text(flag: Option<String>, positional: Option<String>) -> Result<String, String> {
    match (flag, positional) {
        (Some(t), None) | (None, Some(t)) => Ok(t),
        (Some(_), Some(_)) => Err("give the formula either with --formula or positionally, not both".into()),
        (None, None) => Err("missing formula".into()),
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(io.out, "{rendered}");
                return EXIT_OK;
            }
            let _ = write!(io.err, "{rendered}");
            return EXIT_USAGE;
        }
    };
    match cli.command {
        Command::Solve { logic, formula_flag, formula, witness, budget, stats } => {
            let text = match pick_text(formula_flag, formula) {
                Ok(t) => t,
                Err(e) => return usage(&mut io, e),
            };
            run_solve(&mut io, &logic, &text, witness, budget, stats)
        }
        Command::ModelCheck { model, world, formula_flag, formula, condition } => {
            let text = match pick_text(formula_flag, formula) {
                Ok(t) => t,
                Err(e) => return usage(&mut io, e),
            };
            run_model_check(&mut io, &model, world, &text, condition.as_deref())
        }
        Command::EncodeQbf { formula_flag, qbf } => {
            let text = match pick_text(formula_flag, qbf) {
                Ok(t) => t,
                Err(e) => return usage(&mut io, e),
            };
            match Qbf::parse(&text).and_then(|q| ladner_encode(&q)) {
                Ok(f) => {
                    let _ = writeln!(io.out, "{}", f.render());
                    EXIT_OK
                }
                Err(e) => usage(&mut io, e),
            }
        }
        Command::CrossCheck { logic, max_size, budget, seed, stats } => match preset(&logic) {
            Ok(p) => run_cross_check(&p, max_size, budget, seed, stats, io.out, io.err),
            Err(e) => usage(&mut io, e),
        },
        Command::ListLogics => {
            for name in PRESET_NAMES {
                let p = preset(name).expect("listed presets exist");
                let alphabet = p.alphabet.map_or("any".to_string(), |a| a.to_string());
                let _ = writeln!(io.out, "{name}\tmodalities={alphabet}\t{}", p.description);
            }
            EXIT_OK
        }
    }
}

fn run_solve(io: &mut Io, logic: &str, text: &str, witness: bool, budget: usize, stats: bool) -> i32 {
    let p = match preset(logic) {
        Ok(p) => p,
        Err(e) => return usage(io, e),
    };
    let alphabet = p.alphabet.unwrap_or(usize::MAX);
    let phi = match parse(text, alphabet) {
        Ok(f) => f,
        Err(e) => return usage(io, e),
    };
    let outcome = match solve_with(&p, &phi, EngineOptions::default()) {
        Ok(o) => o,
        Err(e) => return usage(io, e),
    };
    let _ = writeln!(io.out, "{}", if outcome.sat { "SAT" } else { "UNSAT" });
    let _ = writeln!(io.out, "stats: {}", outcome.stats);
    if stats {
        let _ = writeln!(io.out, "subformulas: {}", subformula_chain(&phi).len());
    }
    if witness && outcome.sat {
        match &p.brute {
            None => {
                let _ = writeln!(io.out, "no witness within budget");
                let _ = writeln!(io.err, "note: {logic} has no brute-force frame class");
            }
            Some(check) => {
                let ctx = FormulaCtx::new(&phi, p.alphabet.unwrap_or(1));
                match brute_sat(&check.tag, ModelBudget::new(budget), &ctx) {
                    Ok(Some(model)) => {
                        let world = (0..model.frame.worlds()).find(|&w| eval(&model, w, &phi)).unwrap_or(0);
                        let _ = writeln!(io.out, "witness world: {world}");
                        let _ = writeln!(io.out, "{}", model.to_json());
                    }
                    Ok(None) => {
                        let _ = writeln!(io.out, "no witness within budget");
                    }
                    Err(e) => return usage(io, e),
                }
            }
        }
    }
    if outcome.sat {
        EXIT_SAT
    } else {
        EXIT_UNSAT
    }
}

fn run_model_check(io: &mut Io, model_path: &str, world: usize, text: &str, condition: Option<&str>) -> i32 {
    let model = match std::fs::read_to_string(model_path) {
        Ok(s) => match Model::from_json(&s) {
            Ok(m) => m,
            Err(e) => return usage(io, format!("{model_path}: {e}")),
        },
        Err(e) => return usage(io, format!("{model_path}: {e}")),
    };
    let alphabet = model.frame.alphabet();
    if world >= model.frame.worlds() {
        return usage(io, format!("world {world} out of range (model has {})", model.frame.worlds()));
    }
    let phi = match parse(text, alphabet) {
        Ok(f) => f,
        Err(e) => return usage(io, e),
    };
    let gamma = match condition {
        None => Condition::empty(alphabet),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(s) => match Condition::from_json(&s, alphabet) {
                Ok(c) => c,
                Err(e) => return usage(io, format!("{path}: {e}")),
            },
            Err(e) => return usage(io, format!("{path}: {e}")),
        },
    };
    let value = eval_cond(&model, world, &gamma, &phi);
    let _ = writeln!(io.out, "{value}");
    if value {
        EXIT_SAT
    } else {
        EXIT_UNSAT
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossReport {
    pub checked: usize,
    pub sat: usize,
    /// `(formula, solver answer, brute-force answer)`
    pub disagreements: Vec<(Formula, bool, bool)>,
    /// Solver SAT with brute force UNSAT at the budget, confirmed by the larger recheck.
    pub rechecked: usize,
}

/// The formulas a cross-check visits: all of them up to the exhaustive limit, otherwise a seeded sample.
pub fn cross_check_corpus(max_size: usize, alphabet: usize, seed: u64) -> Vec<Formula> {
    if max_size <= EXHAUSTIVE_LIMIT {
        formulas_up_to(max_size, 2, alphabet as u32)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLES).map(|_| random_formula_upto(&mut rng, max_size, 2, alphabet as u32)).collect()
    }
}

/// Compare `solve` with brute-force satisfiability over the preset's frame class.
pub fn cross_check(p: &LogicPreset, corpus: &[Formula], budget: Option<usize>) -> Result<CrossReport, String> {
    let check = p.brute.as_ref().ok_or_else(|| format!("{} has no brute-force frame class", p.name))?;
    let alphabet = p.alphabet.unwrap_or(1);
    let mut report = CrossReport::default();
    for phi in corpus {
        let ctx = FormulaCtx::new(phi, alphabet);
        let worlds = budget.unwrap_or_else(|| check.budget.worlds(ctx.len()));
        let solver = solve_with(p, phi, EngineOptions::default()).map_err(|e| e.to_string())?.sat;
        let found = |n: usize| -> Result<bool, String> {
            Ok(brute_sat(&check.tag, ModelBudget::new(n), &ctx).map_err(|e| e.to_string())?.is_some())
        };
        let brute = found(worlds)?;
        report.checked += 1;
        report.sat += solver as usize;
        if solver == brute {
            continue;
        }
        if solver && !check.complete && worlds < RECHECK_BUDGET && found(RECHECK_BUDGET)? {
            report.rechecked += 1;
            continue;
        }
        report.disagreements.push((phi.clone(), solver, brute));
    }
    Ok(report)
}

pub fn run_cross_check(
    p: &LogicPreset,
    max_size: usize,
    budget: Option<usize>,
    seed: u64,
    stats: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let corpus = cross_check_corpus(max_size, p.alphabet.unwrap_or(1), seed);
    let report = match cross_check(p, &corpus, budget) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    for (phi, solver, brute) in &report.disagreements {
        let _ = writeln!(out, "DISAGREE {} solver={} brute={}", phi.render(), solver, brute);
    }
    let _ = writeln!(out, "{}: {} formulas, {} disagreements", p.name, report.checked, report.disagreements.len());
    if stats {
        let _ = writeln!(out, "sat={} rechecked={}", report.sat, report.rechecked);
    }
    if report.disagreements.is_empty() {
        EXIT_OK
    } else {
        EXIT_DISAGREE
    }
}
