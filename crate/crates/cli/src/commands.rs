//! Subcommand bodies. Each returns its exit code and output so tests can
//! call them without spawning a process.

use flowers::bridge::{decode, encode, parse_formula_inferring};
use flowers::calculus::{check_derivation, CheckError, ProofFile, StepFailure};
use flowers::prover::{prove_with, Parallelism, SearchBudget, SearchOutcome};
use flowers::semantics::{find_countermodel, fuzz_soundness, Bounds, FuzzConfig};
use flowers::syntax::{
    bound_vars, depth, digest, free_vars, parse_bouquet_inferring, Bouquet, Signature,
};

/// Exit code and streams of one command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_REFUTED: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;

/// A goal read either as a bouquet or as a formula to encode.
pub fn read_goal(text: &str, formula: bool, sig: &Signature) -> Result<(Bouquet, Signature), String> {
    if formula {
        let (f, sig) = parse_formula_inferring(text.trim(), sig).map_err(|e| e.to_string())?;
        Ok((encode(&f), sig))
    } else {
        parse_bouquet_inferring(text, sig).map_err(|e| e.to_string())
    }
}

/// Canonical form, digest and basic metrics of a bouquet.
pub fn parse(text: &str, formula: bool, sig: &Signature) -> Outcome {
    let (b, sig) = match read_goal(text, formula, sig) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(EXIT_PARSE, format!("parse error: {e}\n")),
    };
    let fv: Vec<String> = free_vars(&b).iter().map(ToString::to_string).collect();
    let bv: Vec<String> = bound_vars(&b).iter().map(ToString::to_string).collect();
    let d = b.flowers.iter().map(depth).max().unwrap_or(0);
    Outcome::ok(format!(
        "bouquet: {b}\ndigest: {}\nsig: {}\nfree: {}\nbound: {}\ndepth: {d}\n",
        digest(&b),
        sig.to_compact(),
        fv.join(" "),
        bv.join(" "),
    ))
}

fn load_proof(text: &str, sig: &Signature) -> Result<ProofFile, Outcome> {
    if text.trim().is_empty() {
        return Err(Outcome::fail(EXIT_PARSE, "parse error: empty proof file\n".into()));
    }
    ProofFile::parse(text, sig).map_err(|e| Outcome::fail(EXIT_PARSE, format!("parse error: {e}\n")))
}

fn check_report(e: &CheckError) -> String {
    match &e.failure {
        StepFailure::Rule(r) => format!("invalid step {}: {r}\n", e.step),
        StepFailure::DigestMismatch { .. } => format!("invalid step {}: {}\n", e.step, e.failure),
    }
}

/// Exit 0 when every step applies and matches its digest; the proof must
/// also end at the empty bouquet.
pub fn check(text: &str, sig: &Signature) -> Outcome {
    let pf = match load_proof(text, sig) {
        Ok(pf) => pf,
        Err(o) => return o,
    };
    match check_derivation(&pf.derivation) {
        Ok(end) if end.is_empty() => Outcome::ok(format!("ok: {} steps, proved\n", pf.derivation.len())),
        Ok(end) => Outcome::fail(
            EXIT_INVALID,
            format!(
                "invalid: {} steps check but end at `{end}`, not the empty bouquet\n",
                pf.derivation.len()
            ),
        ),
        Err(e) => Outcome::fail(EXIT_INVALID, check_report(&e)),
    }
}

/// Every intermediate state of a proof file, one per line with its digest.
pub fn print(text: &str, sig: &Signature) -> Outcome {
    let pf = match load_proof(text, sig) {
        Ok(pf) => pf,
        Err(o) => return o,
    };
    match pf.derivation.states() {
        Ok(states) => {
            let mut out = String::new();
            for (i, s) in states.iter().enumerate() {
                let how = match i {
                    0 => "goal".to_string(),
                    _ => pf.derivation.steps[i - 1].instance.to_string(),
                };
                let shown = if s.is_empty() { "∅".to_string() } else { s.to_string() };
                out.push_str(&format!("{i:>3}  {}  {shown}\n     by {how}\n", digest(s)));
            }
            Outcome::ok(out)
        }
        Err(e) => Outcome::fail(EXIT_INVALID, check_report(&e)),
    }
}

pub fn prove(text: &str, formula: bool, sig: &Signature, budget: &SearchBudget, par: Parallelism) -> Outcome {
    let (goal, sig) = match read_goal(text, formula, sig) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(EXIT_PARSE, format!("parse error: {e}\n")),
    };
    match prove_with(&goal, budget, par) {
        SearchOutcome::Proved(derivation) => Outcome::ok(
            ProofFile {
                signature: sig,
                derivation,
            }
            .to_string(),
        ),
        SearchOutcome::Refuted(c) => Outcome {
            code: EXIT_REFUTED,
            stdout: format!("refuted\n{c}"),
            stderr: String::new(),
        },
        SearchOutcome::Unknown { steps } => Outcome {
            code: EXIT_UNKNOWN,
            stdout: "unknown\n".into(),
            stderr: format!("budget exhausted after {steps} rule applications ({budget})\n"),
        },
    }
}

/// Formula to bouquet, or bouquet to formula.
pub fn translate(text: &str, to_formula: bool, sig: &Signature) -> Outcome {
    match read_goal(text, !to_formula, sig) {
        Ok((b, _)) if to_formula => Outcome::ok(format!("{}\n", decode(&b))),
        Ok((b, _)) => Outcome::ok(format!("{b}\n")),
        Err(e) => Outcome::fail(EXIT_PARSE, format!("parse error: {e}\n")),
    }
}

/// Exit 0 with a countermodel, 1 when none exists within `bounds`.
pub fn falsify(text: &str, formula: bool, sig: &Signature, bounds: Bounds, json: bool) -> Outcome {
    let (goal, _) = match read_goal(text, formula, sig) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(EXIT_PARSE, format!("parse error: {e}\n")),
    };
    match find_countermodel(&goal, bounds) {
        Some(c) if json => Outcome::ok(format!("{}\n", c.to_json())),
        Some(c) => Outcome::ok(c.to_string()),
        None => Outcome {
            code: EXIT_INVALID,
            stdout: format!(
                "no countermodel with at most {} worlds and {} elements\n",
                bounds.worlds, bounds.domain
            ),
            stderr: String::new(),
        },
    }
}

/// JSON report; exit 1 when any violation was found.
pub fn fuzz(cfg: &FuzzConfig) -> Outcome {
    let report = fuzz_soundness(cfg);
    let code = if report.violations.is_empty() { 0 } else { EXIT_INVALID };
    Outcome {
        code,
        stdout: format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")),
        stderr: String::new(),
    }
}
