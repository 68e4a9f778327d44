//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use flowers::bridge::{encode, enumerate_formulas, formula_valid_in, parse_formula_inferring};
use flowers::calculus::{build_strong_deduction_bwd, build_strong_deduction_fwd, check_derivation, is_proof, ProofFile};
use flowers::prover::{implication, prove, SearchBudget, SearchOutcome};
use flowers::random::{rng, TermGen};
use flowers::semantics::{enumerate_models, find_countermodel, Bounds, FuzzConfig};
use flowers::syntax::{alpha_eq, canonicalize, parse_bouquet, print_bouquet, Bouquet, Signature};
use flowers_cli::commands;

const FIG8: &str = include_str!("../../../proofs/fig8.fproof");

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn within(t: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let e = t.elapsed();
    if e < limit {
        Ok(e)
    } else {
        Err(format!("{what} took {e:?}, limit {limit:?}"))
    }
}

fn golden_replay() -> Verdict {
    let t = Instant::now();
    let o = commands::check(FIG8, &Signature::new());
    let e = within(t, Duration::from_millis(100), "check")?;
    if o.code != 0 {
        return Err(format!("exit {}: {}", o.code, o.stderr.trim()));
    }
    let pf = ProofFile::parse(FIG8, &Signature::new()).map_err(|e| e.to_string())?;
    let end = check_derivation(&pf.derivation).map_err(|e| e.to_string())?;
    if !end.is_empty() {
        return Err(format!("ends at `{end}`"));
    }
    Ok(format!("{} steps in {e:?}", pf.derivation.len()))
}

fn prover_corpus() -> Verdict {
    let fig8 = ProofFile::parse(FIG8, &Signature::new()).map_err(|e| e.to_string())?;
    let mut goals: Vec<(String, Bouquet, Signature)> = [
        "a -> a",
        "a -> b -> a",
        "a & b -> a",
        "a -> a | b",
        "false -> a",
        "~~(a | ~a)",
        "(forall x. p(x)) -> p(y)",
        "p(y) -> exists x. p(x)",
    ]
    .iter()
    .map(|f| {
        let (f2, sig) = parse_formula_inferring(f, &Signature::new()).expect("corpus parses");
        (f.to_string(), encode(&f2), sig)
    })
    .collect();
    goals.push(("figure goal".into(), fig8.derivation.start.clone(), fig8.signature.clone()));
    let t = Instant::now();
    let mut steps = 0;
    for (name, g, sig) in &goals {
        match prove(g, &SearchBudget::default()) {
            SearchOutcome::Proved(d) => {
                let text = ProofFile {
                    signature: sig.clone(),
                    derivation: d.clone(),
                }
                .to_string();
                let o = commands::check(&text, &Signature::new());
                if o.code != 0 || !is_proof(&d) {
                    return Err(format!("{name}: emitted proof does not re-check: {}", o.stderr.trim()));
                }
                steps += d.len();
            }
            other => return Err(format!("{name}: {other:?}")),
        }
    }
    let e = within(t, Duration::from_secs(5), "corpus")?;
    Ok(format!("{} goals, {steps} steps in {e:?}", goals.len()))
}

fn refutation_corpus() -> Verdict {
    let t = Instant::now();
    let mut sizes = Vec::new();
    for f in ["a | ~a", "~~a -> a", "((a -> b) -> a) -> a"] {
        let (f2, _) = parse_formula_inferring(f, &Signature::new()).expect("corpus parses");
        let goal = encode(&f2);
        let c = find_countermodel(&goal, Bounds::new(2, 1)).ok_or_else(|| format!("{f}: no countermodel"))?;
        if !c.refutes(&goal) || c.model.worlds() > 2 {
            return Err(format!("{f}: countermodel does not re-verify"));
        }
        sizes.push(c.model.worlds());
    }
    let e = within(t, Duration::from_secs(1), "refutations")?;
    Ok(format!("worlds {sizes:?} in {e:?}"))
}

fn soundness_fuzz() -> Verdict {
    let t = Instant::now();
    let cfg = FuzzConfig::default();
    let o = commands::fuzz(&cfg);
    let report: serde_json::Value = serde_json::from_str(&o.stdout).map_err(|e| e.to_string())?;
    let violations = report["violations"].as_array().map_or(usize::MAX, Vec::len);
    if o.code != 0 || violations != 0 {
        return Err(format!("{violations} violations"));
    }
    let (nat, cult) = (&report["natural_checked"], &report["cultural_checked"]);
    if nat.as_u64() != Some(cfg.natural_steps as u64) || cult.as_u64() != Some(cfg.cultural_steps as u64) {
        return Err(format!("checked {nat} natural and {cult} cultural steps"));
    }
    let mutated = commands::fuzz(&FuzzConfig {
        check_pollination: false,
        ..cfg
    });
    let report: serde_json::Value = serde_json::from_str(&mutated.stdout).map_err(|e| e.to_string())?;
    let caught = report["violations"].as_array().map_or(0, Vec::len);
    if caught == 0 {
        return Err("disabling the pollination check went unnoticed".into());
    }
    let e = within(t, Duration::from_secs(120), "fuzz")?;
    Ok(format!("{nat} natural, {cult} cultural, 0 violations; mutant caught {caught}; {e:?}"))
}

fn deduction_builders() -> Verdict {
    let gen = TermGen {
        max_depth: 2,
        max_width: 2,
        ..TermGen::propositional(&["a", "b"])
    };
    let budget = SearchBudget {
        timeout: 500,
        ..SearchBudget::default()
    };
    let mut r = rng(7);
    let (mut done, mut tried) = (0, 0);
    while done < 100 {
        tried += 1;
        if tried > 5000 {
            return Err(format!("only {done} provable pairs in {tried} tries"));
        }
        let phi = gen.bouquet(&mut r);
        let mut psi = gen.bouquet(&mut r);
        if r.gen_bool(0.5) {
            psi.flowers.extend(phi.flowers.iter().cloned());
            psi = canonicalize(&psi);
        }
        let SearchOutcome::Proved(proof) = prove(&implication(&psi, &phi), &budget) else { continue };
        let d = build_strong_deduction_bwd(&proof).map_err(|e| format!("bwd on `{}`: {e}", proof.start))?;
        let end = check_derivation(&d).map_err(|e| format!("bwd output for `{}`: {e}", proof.start))?;
        if !alpha_eq(&d.start, &phi) || !alpha_eq(&end, &psi) {
            return Err(format!("bwd endpoints `{}` to `{end}`, wanted `{phi}` to `{psi}`", d.start));
        }
        let back = build_strong_deduction_fwd(&d).map_err(|e| format!("fwd on `{}`: {e}", d.start))?;
        check_derivation(&back).map_err(|e| format!("fwd output: {e}"))?;
        if !is_proof(&back) || !alpha_eq(&back.start, &canonicalize(&implication(&psi, &phi))) {
            return Err(format!("fwd gave `{}`, wanted a proof of `{}`", back.start, implication(&psi, &phi)));
        }
        done += 1;
    }
    Ok(format!("{done} proofs from {tried} random pairs"))
}

fn bridge_equivalidity() -> Verdict {
    let formulas = enumerate_formulas(&["a", "b"], 3);
    let sig = Signature::from_pairs([("a", 0), ("b", 0)]);
    let models: Vec<_> = enumerate_models(Bounds::new(3, 1), &sig).collect();
    let mut disagreements = Vec::new();
    for f in &formulas {
        let b = encode(f);
        for m in &models {
            if flowers::semantics::valid_in(m, &b) != formula_valid_in(m, f) {
                disagreements.push(f.to_string());
                break;
            }
        }
    }
    match disagreements.first() {
        None => Ok(format!("{} formulas x {} models agree", formulas.len(), models.len())),
        Some(f) => Err(format!("{} disagreements, first `{f}`", disagreements.len())),
    }
}

fn parser_printer() -> Verdict {
    let sig = Signature::from_pairs([("a", 0), ("b", 0), ("p", 1), ("q", 2)]);
    let gen = TermGen::new(&sig);
    let mut r = rng(11);
    for i in 0..1000 {
        let b = gen.bouquet(&mut r);
        let text = print_bouquet(&b);
        let back = parse_bouquet(&text, &sig).map_err(|e| format!("case {i}: `{text}`: {e}"))?;
        if back != b || print_bouquet(&back) != text {
            return Err(format!("case {i}: `{text}` came back as `{back}`"));
        }
    }
    const ALPHABET: &[u8] = b"[]|>.,;() abpqxyz'\t\n{}";
    for _ in 0..200 {
        let len = r.gen_range(0..60);
        let s: String = (0..len).map(|_| ALPHABET[r.gen_range(0..ALPHABET.len())] as char).collect();
        let printed = print_bouquet(&gen.bouquet(&mut r));
        let mangled: String = printed.chars().filter(|_| r.gen_bool(0.9)).collect();
        for text in [s, mangled] {
            if std::panic::catch_unwind(|| parse_bouquet(&text, &sig)).is_err() {
                return Err(format!("parser panicked on `{text}`"));
            }
        }
    }
    Ok("1000 round trips, 400 fuzzed inputs".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("golden proof replay", golden_replay),
        ("prover corpus", prover_corpus),
        ("refutation corpus", refutation_corpus),
        ("soundness fuzz", soundness_fuzz),
        ("deduction builders", deduction_builders),
        ("bridge equivalidity", bridge_equivalidity),
        ("parser and printer", parser_printer),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
