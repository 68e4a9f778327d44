//! Derivations, their checker, and the line-oriented proof file format.
//!
//! ```text
//! # comment (whole lines only; `#` also occurs inside paths)
//! sig: p/1 q/1
//! goal: <bouquet>
//! <rule> @ <path> [params...] => <digest>
//! ```

use std::fmt;

use thiserror::Error;

use super::{apply_rule_with, ApplyOptions, Params, RuleError, RuleInstance, RuleName};
use crate::context::Path;
use crate::syntax::{
    canonicalize, digest, parse_bouquet, parse_bouquet_raw, parse_flower, parse_garden,
    parse_petals, print_bouquet, Bouquet, Digest, Signature, Substitution, Var,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationStep {
    pub instance: RuleInstance,
    /// Digest of the bouquet this step produces.
    pub digest: Digest,
}

/// A start bouquet and a sequence of rule applications.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Derivation {
    pub start: Bouquet,
    pub steps: Vec<DerivationStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepFailure {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("digest mismatch: file says {expected}, replay gives {found}")]
    DigestMismatch { expected: Digest, found: Digest },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {failure}")]
pub struct CheckError {
    /// Zero-based index of the failing step.
    pub step: usize,
    pub failure: StepFailure,
}

impl Derivation {
    pub fn new(start: &Bouquet) -> Self {
        Derivation {
            start: canonicalize(start),
            steps: Vec::new(),
        }
    }

    /// Applies `inst` to `state`, which must be the current end of the
    /// derivation, and records the step.
    pub fn push(&mut self, state: &Bouquet, inst: RuleInstance) -> Result<Bouquet, RuleError> {
        let next = apply_rule_with(state, &inst, &ApplyOptions::default())?;
        self.steps.push(DerivationStep {
            instance: inst,
            digest: digest(&next),
        });
        Ok(next)
    }

    /// Builds a derivation by applying `instances` in order.
    pub fn replay(
        start: &Bouquet,
        instances: impl IntoIterator<Item = RuleInstance>,
    ) -> Result<(Derivation, Bouquet), CheckError> {
        let mut d = Derivation::new(start);
        let mut state = d.start.clone();
        for (step, inst) in instances.into_iter().enumerate() {
            state = d.push(&state, inst).map_err(|e| CheckError {
                step,
                failure: e.into(),
            })?;
        }
        Ok((d, state))
    }

    /// Every intermediate bouquet, starting with `start`.
    pub fn states(&self) -> Result<Vec<Bouquet>, CheckError> {
        let mut out = vec![canonicalize(&self.start)];
        check_with(self, &ApplyOptions::default(), |b| out.push(b.clone()))?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Replays every step; returns the final bouquet.
pub fn check_derivation(d: &Derivation) -> Result<Bouquet, CheckError> {
    check_with(d, &ApplyOptions::default(), |_| {})
}

pub fn check_derivation_with(d: &Derivation, opts: &ApplyOptions) -> Result<Bouquet, CheckError> {
    check_with(d, opts, |_| {})
}

fn check_with(
    d: &Derivation,
    opts: &ApplyOptions,
    mut visit: impl FnMut(&Bouquet),
) -> Result<Bouquet, CheckError> {
    let mut state = canonicalize(&d.start);
    for (step, s) in d.steps.iter().enumerate() {
        state = apply_rule_with(&state, &s.instance, opts).map_err(|e| CheckError {
            step,
            failure: e.into(),
        })?;
        let found = digest(&state);
        if found != s.digest {
            return Err(CheckError {
                step,
                failure: StepFailure::DigestMismatch {
                    expected: s.digest,
                    found,
                },
            });
        }
        visit(&state);
    }
    Ok(state)
}

/// A checked derivation ending in the empty bouquet.
pub fn is_proof(d: &Derivation) -> bool {
    matches!(check_derivation(d), Ok(b) if b.is_empty())
}

/// A derivation together with the signature its terms are written in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofFile {
    pub signature: Signature,
    pub derivation: Derivation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ProofFileError {
    pub line: usize,
    pub msg: String,
}

impl ProofFile {
    /// Parses a proof file. Symbols declared in a `sig:` header are added to
    /// `base`.
    pub fn parse(text: &str, base: &Signature) -> Result<ProofFile, ProofFileError> {
        let mut sig = base.clone();
        let mut start: Option<Bouquet> = None;
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| ProofFileError { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("sig:") {
                if start.is_some() {
                    return Err(err("`sig:` must precede `goal:`".into()));
                }
                let extra = Signature::parse_compact(rest).map_err(|e| err(e.to_string()))?;
                sig.merge(&extra).map_err(|e| err(e.to_string()))?;
            } else if let Some(rest) = line.strip_prefix("goal:") {
                if start.is_some() {
                    return Err(err("duplicate `goal:`".into()));
                }
                start = Some(parse_bouquet(rest.trim(), &sig).map_err(|e| err(e.to_string()))?);
            } else {
                if start.is_none() {
                    return Err(err("step before `goal:`".into()));
                }
                steps.push(parse_step(line, &sig).map_err(err)?);
            }
        }
        let start = start.ok_or(ProofFileError {
            line: text.lines().count(),
            msg: "missing `goal:`".into(),
        })?;
        Ok(ProofFile {
            signature: sig,
            derivation: Derivation { start, steps },
        })
    }
}

impl fmt::Display for ProofFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.signature.is_empty() {
            writeln!(f, "sig: {}", self.signature.to_compact())?;
        }
        writeln!(f, "goal: {}", print_bouquet(&self.derivation.start))?;
        for s in &self.derivation.steps {
            writeln!(f, "{} => {}", s.instance, s.digest)?;
        }
        Ok(())
    }
}

/// Parses `<rule> @ <path> [params...] => <digest>`.
pub fn parse_step(line: &str, sig: &Signature) -> Result<DerivationStep, String> {
    let (body, hex) = line
        .rsplit_once("=>")
        .ok_or("expected `=> <digest>` at the end of the step")?;
    let digest: Digest = hex.trim().parse()?;
    let instance = parse_instance(body.trim(), sig)?;
    Ok(DerivationStep { instance, digest })
}

/// Parses `<rule> @ <path> [params...]`.
pub fn parse_instance(text: &str, sig: &Signature) -> Result<RuleInstance, String> {
    let (rule, rest) = text
        .split_once('@')
        .ok_or("expected `<rule> @ <path>`")?;
    let rule: RuleName = rule.trim().parse()?;
    let rest = rest.trim_start();
    let (path, params) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let path: Path = path.parse().map_err(|e: crate::context::PathSyntaxError| e.to_string())?;
    let params = parse_params(rule, params, sig)?;
    Ok(RuleInstance { rule, path, params })
}

fn parse_params(rule: RuleName, text: &str, sig: &Signature) -> Result<Params, String> {
    let mut p = Params::default();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            break;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
            i += 1;
        }
        let key: String = chars[start..i].iter().collect();
        if key.is_empty() {
            return Err(format!("expected a parameter name at `{}`", chars[i..].iter().collect::<String>()));
        }
        if key == "nodup" {
            set_once(&mut p.nodup, &key)?;
            continue;
        }
        if chars.get(i) != Some(&'=') {
            return Err(format!("expected `=` after `{key}`"));
        }
        i += 1;
        let value: String = if chars.get(i) == Some(&'{') {
            let mut depth = 0;
            let begin = i + 1;
            loop {
                match chars.get(i) {
                    None => return Err(format!("unclosed `{{` in `{key}`")),
                    Some('{') => depth += 1,
                    Some('}') => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            let v = chars[begin..i].iter().collect();
            i += 1;
            v
        } else {
            let begin = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            chars[begin..i].iter().collect()
        };
        let dup = || format!("duplicate parameter `{key}`");
        let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{key}` expects a number"));
        match key.as_str() {
            "petal" => replace(&mut p.petal, num(&value)?).ok_or_else(dup)?,
            "case" => replace(&mut p.case, num(&value)?).ok_or_else(dup)?,
            "petals" => {
                let mut ks = Vec::new();
                for part in value.split(',').filter(|s| !s.trim().is_empty()) {
                    ks.push(num(part)?);
                }
                replace(&mut p.petals, ks).ok_or_else(dup)?
            }
            "subst" => replace(&mut p.subst, parse_subst(&value)?).ok_or_else(dup)?,
            "insert" => {
                let b = parse_bouquet_raw(&value, sig).map_err(|e| format!("in `insert`: {e}"))?;
                replace(&mut p.insert, b).ok_or_else(dup)?
            }
            "glue" => {
                let g = parse_petals(&value, sig).map_err(|e| format!("in `glue`: {e}"))?;
                replace(&mut p.glue, g).ok_or_else(dup)?
            }
            "gen" if rule == RuleName::Apet => {
                let g = parse_garden(&value, sig).map_err(|e| format!("in `gen`: {e}"))?;
                replace(&mut p.gen_garden, g).ok_or_else(dup)?
            }
            "gen" => {
                let f = parse_flower(&value, sig).map_err(|e| format!("in `gen`: {e}"))?;
                replace(&mut p.gen_flower, f).ok_or_else(dup)?
            }
            _ => return Err(format!("unknown parameter `{key}`")),
        }
    }
    Ok(p)
}

fn replace<T>(slot: &mut Option<T>, v: T) -> Option<()> {
    if slot.is_some() {
        return None;
    }
    *slot = Some(v);
    Some(())
}

fn set_once(flag: &mut bool, key: &str) -> Result<(), String> {
    if *flag {
        return Err(format!("duplicate parameter `{key}`"));
    }
    *flag = true;
    Ok(())
}

/// Parses `x:=y, z:=w` (the braces already stripped).
pub fn parse_subst(text: &str) -> Result<Substitution, String> {
    let mut pairs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once(":=")
            .ok_or_else(|| format!("expected `x:=y`, found `{part}`"))?;
        let (k, v) = (k.trim(), v.trim());
        let ident = |s: &str| {
            let mut cs = s.chars();
            matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        };
        if !ident(k) || !ident(v) {
            return Err(format!("bad variable in `{part}`"));
        }
        if pairs.iter().any(|(x, _): &(Var, Var)| x.name() == k) {
            return Err(format!("`{k}` mapped twice"));
        }
        pairs.push((Var::new(k), Var::new(v)));
    }
    Ok(Substitution::new(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Garden;

    fn sig() -> Signature {
        Signature::from_pairs([("p", 1), ("q", 1), ("a", 0), ("b", 0)])
    }

    #[test]
    fn zero_step_derivation_of_the_empty_bouquet_is_a_proof() {
        let d = Derivation::new(&Bouquet::empty());
        assert_eq!(check_derivation(&d), Ok(Bouquet::empty()));
        assert!(is_proof(&d));
    }

    #[test]
    fn replay_records_digests_and_check_accepts() {
        let start = parse_bouquet("[a |> a]", &sig()).unwrap();
        let steps = vec![
            RuleInstance::new(RuleName::PollDown, "0/petal:0/area#{0}".parse().unwrap()),
            RuleInstance::new(RuleName::Epet, "area#{0}".parse().unwrap()).with(|p| p.petal = Some(0)),
        ];
        let (d, end) = Derivation::replay(&start, steps).unwrap();
        assert!(end.is_empty());
        assert!(is_proof(&d));
        assert_eq!(d.states().unwrap().len(), 3);
    }

    #[test]
    fn digest_mismatch_is_reported_at_its_step() {
        let start = parse_bouquet("[a |> a]", &sig()).unwrap();
        let (mut d, _) = Derivation::replay(
            &start,
            [RuleInstance::new(RuleName::PollDown, "0/petal:0/area#{0}".parse().unwrap())],
        )
        .unwrap();
        d.steps[0].digest = Digest([0, 0, 0, 0]);
        let e = check_derivation(&d).unwrap_err();
        assert_eq!(e.step, 0);
        assert!(matches!(e.failure, StepFailure::DigestMismatch { .. }));
    }

    #[test]
    fn proof_file_round_trip() {
        let start = parse_bouquet("[a |> a]", &sig()).unwrap();
        let (d, _) = Derivation::replay(
            &start,
            [
                RuleInstance::new(RuleName::PollDown, "0/petal:0/area#{0}".parse().unwrap()),
                RuleInstance::new(RuleName::Epet, "area#{0}".parse().unwrap())
                    .with(|p| p.petal = Some(0)),
            ],
        )
        .unwrap();
        let file = ProofFile {
            signature: Signature::from_pairs([("a", 0)]),
            derivation: d,
        };
        let text = file.to_string();
        assert!(text.starts_with("sig: a/0\ngoal: [a |> a]\npoll_down @ 0/petal:0/area#{0} => "));
        let back = ProofFile::parse(&text, &Signature::new()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn params_of_every_kind_parse() {
        let s = sig();
        let i = parse_instance("ipet @ 0/petal:0/area#{0} petal=1 subst={z:=y, w:=v} nodup", &s).unwrap();
        assert_eq!(i.params.petal, Some(1));
        assert!(i.params.nodup);
        assert_eq!(i.params.subst.as_ref().unwrap().to_string(), "{w:=v, z:=y}");
        let i = parse_instance("poll_up @ 0/pistil/area insert={[x. p(x) |> q(x) ; .], a}", &s).unwrap();
        assert_eq!(print_bouquet(i.params.insert.as_ref().unwrap()), "[x. p(x) |> q(x) ; .], a");
        let i = parse_instance("glue @ area#{0} glue={. ; b}", &s).unwrap();
        assert_eq!(i.params.glue, Some(vec![Garden::default(), Garden::of(vec![crate::syntax::Flower::atom("b", &[])])]));
        let i = parse_instance("apet @ area#{0} petal=0 gen={z. q(z)} subst={z:=y}", &s).unwrap();
        assert!(i.params.gen_garden.is_some());
        let i = parse_instance("apis @ area#{0} gen={[x. p(x) |>]} subst={x:=y}", &s).unwrap();
        assert!(i.params.gen_flower.is_some());
        let i = parse_instance("pull @ area#{0} petals={0,2}", &s).unwrap();
        assert_eq!(i.params.petals, Some(vec![0, 2]));
        for (text, round) in [
            ("ipet @ 0/petal:0/area#{0} petal=1 subst={w:=v, z:=y} nodup", true),
            ("glue @ area#{0} glue={. ; b}", true),
            ("epis @ area", true),
        ] {
            let i = parse_instance(text, &s).unwrap();
            assert_eq!(i.to_string() == text, round);
        }
    }

    #[test]
    fn malformed_steps_are_rejected() {
        let s = sig();
        assert!(parse_instance("bloom @ area", &s).is_err());
        assert!(parse_instance("epet area", &s).is_err());
        assert!(parse_instance("epet @ area petal=x", &s).is_err());
        assert!(parse_instance("epet @ area petal=1 petal=2", &s).is_err());
        assert!(parse_instance("grow @ area insert={r(x)}", &s).is_err());
        assert!(parse_instance("grow @ area insert={a", &s).is_err());
        assert!(parse_instance("ipis @ area#{0} subst={x=y}", &s).is_err());
        assert!(parse_step("epis @ area", &s).is_err());
        assert!(parse_step("epis @ area => 123", &s).is_err());
        assert!(ProofFile::parse("epis @ area => 00000000", &s).is_err());
        assert!(ProofFile::parse("", &s).is_err());
    }
}
