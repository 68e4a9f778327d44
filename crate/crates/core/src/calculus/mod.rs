//! The rewrite rules, read bottom-up: each application turns a goal into the
//! premiss that suffices to establish it. Results are always canonical.

mod deduction;
mod derivation;
mod enumerate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::context::{resolve_area, split, Context, ContextError, Path, Polarity};
use crate::syntax::{
    alpha_eq_flower, bound_vars_flower, free_vars, print_bouquet, print_flower, print_garden,
    print_petals, subst_flowers, subst_garden, Bloom, Bouquet, CaptureError, Flower, Garden,
    Substitution, Var,
};

pub use deduction::{build_strong_deduction_bwd, build_strong_deduction_fwd, lift, lift_onto, DeductionError};
pub use derivation::{
    check_derivation, check_derivation_with, is_proof, parse_instance, parse_step, parse_subst, CheckError, Derivation, DerivationStep, ProofFile, ProofFileError,
    StepFailure,
};
pub use enumerate::{applicable_instances, areas};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    PollDown,
    PollUp,
    Epis,
    Epet,
    Srep,
    Ipis,
    Ipet,
    Grow,
    Crop,
    Pull,
    Glue,
    Apis,
    Apet,
}

impl RuleName {
    pub const ALL: [RuleName; 13] = [
        RuleName::PollDown,
        RuleName::PollUp,
        RuleName::Epis,
        RuleName::Epet,
        RuleName::Srep,
        RuleName::Ipis,
        RuleName::Ipet,
        RuleName::Grow,
        RuleName::Crop,
        RuleName::Pull,
        RuleName::Glue,
        RuleName::Apis,
        RuleName::Apet,
    ];

    pub const NATURAL: [RuleName; 7] = [
        RuleName::PollDown,
        RuleName::PollUp,
        RuleName::Epis,
        RuleName::Epet,
        RuleName::Srep,
        RuleName::Ipis,
        RuleName::Ipet,
    ];

    pub fn is_natural(self) -> bool {
        RuleName::NATURAL.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::PollDown => "poll_down",
            RuleName::PollUp => "poll_up",
            RuleName::Epis => "epis",
            RuleName::Epet => "epet",
            RuleName::Srep => "srep",
            RuleName::Ipis => "ipis",
            RuleName::Ipet => "ipet",
            RuleName::Grow => "grow",
            RuleName::Crop => "crop",
            RuleName::Pull => "pull",
            RuleName::Glue => "glue",
            RuleName::Apis => "apis",
            RuleName::Apet => "apet",
        }
    }

    /// The polarity a cultural rule demands of its context.
    pub fn required_polarity(self) -> Option<Polarity> {
        match self {
            RuleName::Grow | RuleName::Pull | RuleName::Apis => Some(Polarity::Positive),
            RuleName::Crop | RuleName::Glue | RuleName::Apet => Some(Polarity::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// Rule-specific payload. Which fields a rule accepts is fixed by
/// [`Params::check`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Params {
    /// Petal index (epet, ipet, apet).
    pub petal: Option<usize>,
    /// Index of the case-split flower inside the pistil (srep).
    pub case: Option<usize>,
    /// Petal indices to remove (pull).
    pub petals: Option<Vec<usize>>,
    /// Instantiation (ipis, ipet) or the instance witness (apis, apet).
    pub subst: Option<Substitution>,
    /// Literal bouquet to insert (poll_up, grow).
    pub insert: Option<Bouquet>,
    /// Literal petals to add (glue).
    pub glue: Option<Vec<Garden>>,
    /// Generalized flower (apis).
    pub gen_flower: Option<Flower>,
    /// Generalized petal (apet).
    pub gen_garden: Option<Garden>,
    /// Non-duplicating ipis/ipet.
    pub nodup: bool,
}

impl Params {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.petal.is_some() {
            out.push("petal");
        }
        if self.case.is_some() {
            out.push("case");
        }
        if self.petals.is_some() {
            out.push("petals");
        }
        if self.subst.is_some() {
            out.push("subst");
        }
        if self.insert.is_some() {
            out.push("insert");
        }
        if self.glue.is_some() {
            out.push("glue");
        }
        if self.gen_flower.is_some() || self.gen_garden.is_some() {
            out.push("gen");
        }
        if self.nodup {
            out.push("nodup");
        }
        out
    }

    /// Rejects missing required and unexpected parameters.
    pub fn check(&self, rule: RuleName) -> Result<(), RuleError> {
        let (required, optional): (&[&str], &[&str]) = match rule {
            RuleName::PollDown | RuleName::Epis | RuleName::Crop => (&[], &[]),
            RuleName::PollUp | RuleName::Grow => (&["insert"], &[]),
            RuleName::Epet => (&[], &["petal"]),
            RuleName::Srep => (&["case"], &[]),
            RuleName::Ipis => (&["subst"], &["nodup"]),
            RuleName::Ipet => (&["petal", "subst"], &["nodup"]),
            RuleName::Pull => (&["petals"], &[]),
            RuleName::Glue => (&["glue"], &[]),
            RuleName::Apis => (&["gen", "subst"], &[]),
            RuleName::Apet => (&["petal", "gen", "subst"], &[]),
        };
        let present = self.present();
        for r in required {
            if !present.contains(r) {
                return Err(bad_params(rule, format!("missing parameter `{r}`")));
            }
        }
        for p in &present {
            if !required.contains(p) && !optional.contains(p) {
                return Err(bad_params(rule, format!("unexpected parameter `{p}`")));
            }
        }
        if rule == RuleName::Apis && self.gen_flower.is_none() {
            return Err(bad_params(rule, "`gen` must be a flower"));
        }
        if rule == RuleName::Apet && self.gen_garden.is_none() {
            return Err(bad_params(rule, "`gen` must be a garden"));
        }
        Ok(())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if let Some(k) = self.petal {
            parts.push(format!("petal={k}"));
        }
        if let Some(k) = self.case {
            parts.push(format!("case={k}"));
        }
        if let Some(ps) = &self.petals {
            let items: Vec<String> = ps.iter().map(|i| i.to_string()).collect();
            parts.push(format!("petals={{{}}}", items.join(",")));
        }
        if let Some(s) = &self.subst {
            parts.push(format!("subst={s}"));
        }
        if let Some(b) = &self.insert {
            parts.push(format!("insert={{{}}}", print_bouquet(b)));
        }
        if let Some(g) = &self.glue {
            parts.push(format!("glue={{{}}}", print_petals(g)));
        }
        if let Some(g) = &self.gen_flower {
            parts.push(format!("gen={{{}}}", print_flower(g)));
        }
        if let Some(g) = &self.gen_garden {
            parts.push(format!("gen={{{}}}", print_garden(g)));
        }
        if self.nodup {
            parts.push("nodup".to_string());
        }
        f.write_str(&parts.join(" "))
    }
}

/// A rule, where to apply it, and its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleInstance {
    pub rule: RuleName,
    pub path: Path,
    pub params: Params,
}

impl RuleInstance {
    pub fn new(rule: RuleName, path: Path) -> Self {
        RuleInstance {
            rule,
            path,
            params: Params::default(),
        }
    }

    pub fn with(mut self, f: impl FnOnce(&mut Params)) -> Self {
        f(&mut self.params);
        self
    }
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.rule, self.path)?;
        let params = self.params.to_string();
        if !params.is_empty() {
            write!(f, " {params}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error(transparent)]
    BadPath(#[from] ContextError),
    #[error("{rule}: bad parameters: {reason}")]
    BadParams { rule: RuleName, reason: String },
    #[error("{rule}: side condition violated: {reason}")]
    SideConditionViolated { rule: RuleName, reason: String },
    #[error("{rule}: requires a {required} context, found {found}")]
    PolarityMismatch {
        rule: RuleName,
        required: Polarity,
        found: Polarity,
    },
    #[error("{rule}: `{flower}` is not pollinated here")]
    NotPollinated { rule: RuleName, flower: String },
    #[error("{rule}: {source}")]
    Capture { rule: RuleName, source: CaptureError },
}

fn bad_params(rule: RuleName, reason: impl Into<String>) -> RuleError {
    RuleError::BadParams {
        rule,
        reason: reason.into(),
    }
}

fn violated(rule: RuleName, reason: impl Into<String>) -> RuleError {
    RuleError::SideConditionViolated {
        rule,
        reason: reason.into(),
    }
}

/// Switches for the side-condition checks. Everything is on by default;
/// turning a check off is only meant for mutation testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApplyOptions {
    pub check_pollination: bool,
    pub check_polarity: bool,
    pub check_capture: bool,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions {
            check_pollination: true,
            check_polarity: true,
            check_capture: true,
        }
    }
}

pub fn apply_rule(b: &Bouquet, inst: &RuleInstance) -> Result<Bouquet, RuleError> {
    apply_rule_with(b, inst, &ApplyOptions::default())
}

pub fn apply_rule_with(
    b: &Bouquet,
    inst: &RuleInstance,
    opts: &ApplyOptions,
) -> Result<Bouquet, RuleError> {
    let rule = inst.rule;
    let params = &inst.params;
    params.check(rule)?;
    let path = &inst.path;
    let area = resolve_area(&b.flowers, &path.steps)?;
    let polarity = path.polarity();
    let demand = |required: Polarity| -> Result<(), RuleError> {
        if opts.check_polarity && polarity != required {
            Err(RuleError::PolarityMismatch {
                rule,
                required,
                found: polarity,
            })
        } else {
            Ok(())
        }
    };
    if let Some(required) = rule.required_polarity() {
        demand(required)?;
    }
    match rule {
        RuleName::PollDown | RuleName::Crop => {
            let (ctx, content) = split(b, path)?;
            if rule == RuleName::PollDown && opts.check_pollination {
                check_pollinated(rule, &ctx, &content.flowers)?;
            }
            Ok(ctx.fill(&[]))
        }
        RuleName::PollUp | RuleName::Grow => {
            if path.selection.as_ref().is_some_and(|s| !s.is_empty()) {
                return Err(bad_params(rule, "insertion path must not select flowers"));
            }
            let insert = params.insert.as_ref().expect("checked");
            let ctx = Context {
                frame: b.clone(),
                hole: path.steps.clone(),
            };
            if rule == RuleName::PollUp && opts.check_pollination {
                check_pollinated(rule, &ctx, &insert.flowers)?;
            }
            Ok(ctx.fill(&insert.flowers))
        }
        RuleName::Epis => {
            let (ctx, content) = split(b, path)?;
            let wrapped = Flower::bloom(Garden::default(), vec![Garden::of(content.flowers)]);
            Ok(ctx.fill(&[wrapped]))
        }
        _ => {
            let i = single_target(rule, path, area.len())?;
            let bloom = area[i]
                .as_bloom()
                .ok_or_else(|| violated(rule, format!("flower {i} is an atom")))?;
            let replacement = rewrite_flower(rule, params, bloom, &area[i], opts, &demand)?;
            let (ctx, _) = split(b, path)?;
            Ok(ctx.fill(&replacement))
        }
    }
}

fn check_pollinated(rule: RuleName, ctx: &Context, flowers: &[Flower]) -> Result<(), RuleError> {
    let candidates = ctx.pollination_candidates();
    for f in flowers {
        if !candidates.iter().any(|c| alpha_eq_flower(c.flower, f)) {
            return Err(RuleError::NotPollinated {
                rule,
                flower: print_flower(f),
            });
        }
    }
    Ok(())
}

fn single_target(rule: RuleName, path: &Path, len: usize) -> Result<usize, RuleError> {
    match path.selection.as_deref() {
        Some([i]) if *i < len => Ok(*i),
        Some([i]) => Err(ContextError::BadPath {
            step: path.steps.len(),
            reason: format!("selection index {i} out of range (area has {len})"),
        }
        .into()),
        _ => Err(bad_params(rule, "path must select exactly one flower")),
    }
}

fn check_support(rule: RuleName, s: &Substitution, binders: &[Var]) -> Result<(), RuleError> {
    if let Some(x) = s.support().iter().find(|x| !binders.contains(x)) {
        return Err(violated(rule, format!("`{x}` is not a binder of the instantiated garden")));
    }
    Ok(())
}

fn check_capture(
    rule: RuleName,
    s: &Substitution,
    scope: &Flower,
    opts: &ApplyOptions,
) -> Result<(), RuleError> {
    if !opts.check_capture {
        return Ok(());
    }
    let image = s.image();
    if let Some(var) = bound_vars_flower(scope).into_iter().find(|v| image.contains(v)) {
        return Err(RuleError::Capture {
            rule,
            source: CaptureError { var },
        });
    }
    Ok(())
}

fn minus(binders: &[Var], support: &BTreeSet<Var>) -> Vec<Var> {
    binders
        .iter()
        .filter(|x| !support.contains(x))
        .cloned()
        .collect()
}

/// `⟨x·σΦ⟩ ⫐ σΔ` for a flower `⟨x,y·Φ⟩ ⫐ Δ` and `σ : y`.
fn instantiate_pistil(rule: RuleName, bloom: &Bloom, s: &Substitution, opts: &ApplyOptions) -> Result<Flower, RuleError> {
    check_support(rule, s, &bloom.pistil.binders)?;
    let scope = Flower::bloom(Garden::of(bloom.pistil.flowers.clone()), bloom.petals.clone());
    check_capture(rule, s, &scope, opts)?;
    Ok(Flower::bloom(
        Garden::new(
            minus(&bloom.pistil.binders, &s.support()),
            subst_flowers(s, &bloom.pistil.flowers),
        ),
        bloom.petals.iter().map(|p| subst_garden(s, p)).collect(),
    ))
}

/// `⟨x·σΦ⟩` for a garden `⟨x,y·Φ⟩` and `σ : y`.
fn instantiate_garden(rule: RuleName, g: &Garden, s: &Substitution, opts: &ApplyOptions) -> Result<Garden, RuleError> {
    check_support(rule, s, &g.binders)?;
    let scope = Flower::bloom(Garden::of(g.flowers.clone()), vec![]);
    check_capture(rule, s, &scope, opts)?;
    Ok(Garden::new(
        minus(&g.binders, &s.support()),
        subst_flowers(s, &g.flowers),
    ))
}

fn petal_index(rule: RuleName, bloom: &Bloom, k: usize) -> Result<usize, RuleError> {
    if k < bloom.petals.len() {
        Ok(k)
    } else {
        Err(violated(
            rule,
            format!("no petal {k} (flower has {})", bloom.petals.len()),
        ))
    }
}

fn rewrite_flower(
    rule: RuleName,
    params: &Params,
    bloom: &Bloom,
    original: &Flower,
    opts: &ApplyOptions,
    demand: &dyn Fn(Polarity) -> Result<(), RuleError>,
) -> Result<Vec<Flower>, RuleError> {
    let mut out = bloom.clone();
    match rule {
        RuleName::Epet => {
            let k = match params.petal {
                Some(k) => petal_index(rule, bloom, k)?,
                None => bloom
                    .petals
                    .iter()
                    .position(Garden::is_empty)
                    .ok_or_else(|| violated(rule, "flower has no empty petal"))?,
            };
            if !bloom.petals[k].is_empty() {
                return Err(violated(rule, format!("petal {k} is not empty")));
            }
            Ok(vec![])
        }
        RuleName::Srep => {
            let k = params.case.expect("checked");
            let case = bloom
                .pistil
                .flowers
                .get(k)
                .ok_or_else(|| violated(rule, format!("no pistil flower {k}")))?;
            let split_flower = match case {
                Flower::Bloom(c) if c.pistil.is_empty() => c,
                _ => return Err(violated(rule, format!("pistil flower {k} does not have an empty pistil"))),
            };
            let delta = &bloom.petals;
            let delta_fv = free_vars(&Bouquet::new(vec![Flower::bloom(Garden::default(), delta.clone())]));
            for g in &split_flower.petals {
                if let Some(x) = g.binders.iter().find(|x| delta_fv.contains(x)) {
                    return Err(violated(rule, format!("binder `{x}` would capture a variable of the petals")));
                }
            }
            let mut phi = bloom.pistil.flowers.clone();
            phi.remove(k);
            let cases: Vec<Flower> = split_flower
                .petals
                .iter()
                .map(|g| Flower::bloom(g.clone(), delta.clone()))
                .collect();
            Ok(vec![Flower::bloom(
                Garden::new(bloom.pistil.binders.clone(), phi),
                vec![Garden::of(cases)],
            )])
        }
        RuleName::Ipis => {
            let s = params.subst.as_ref().expect("checked");
            let instance = instantiate_pistil(rule, bloom, s, opts)?;
            if params.nodup {
                demand(Polarity::Negative)?;
                Ok(vec![instance])
            } else {
                Ok(vec![instance, original.clone()])
            }
        }
        RuleName::Ipet => {
            let k = petal_index(rule, bloom, params.petal.expect("checked"))?;
            let s = params.subst.as_ref().expect("checked");
            let instance = instantiate_garden(rule, &bloom.petals[k], s, opts)?;
            if params.nodup {
                demand(Polarity::Positive)?;
                out.petals[k] = instance;
            } else {
                out.petals.insert(k, instance);
            }
            Ok(vec![Flower::Bloom(out)])
        }
        RuleName::Pull => {
            let remove = params.petals.as_ref().expect("checked");
            for &k in remove {
                petal_index(rule, bloom, k)?;
            }
            out.petals = bloom
                .petals
                .iter()
                .enumerate()
                .filter(|(k, _)| !remove.contains(k))
                .map(|(_, p)| p.clone())
                .collect();
            Ok(vec![Flower::Bloom(out)])
        }
        RuleName::Glue => {
            out.petals.extend(params.glue.as_ref().expect("checked").iter().cloned());
            Ok(vec![Flower::Bloom(out)])
        }
        RuleName::Apis => {
            let gen = params.gen_flower.as_ref().expect("checked");
            let gen_bloom = gen
                .as_bloom()
                .ok_or_else(|| violated(rule, "generalization must be a non-atomic flower"))?;
            let s = params.subst.as_ref().expect("checked");
            let instance = instantiate_pistil(rule, gen_bloom, s, opts)?;
            if !alpha_eq_flower(&instance, original) {
                return Err(violated(rule, "generalization does not instantiate to the target flower"));
            }
            Ok(vec![gen.clone()])
        }
        RuleName::Apet => {
            let k = petal_index(rule, bloom, params.petal.expect("checked"))?;
            let gen = params.gen_garden.as_ref().expect("checked");
            let s = params.subst.as_ref().expect("checked");
            let instance = instantiate_garden(rule, gen, s, opts)?;
            let same = alpha_eq_flower(
                &Flower::bloom(instance, vec![]),
                &Flower::bloom(bloom.petals[k].clone(), vec![]),
            );
            if !same {
                return Err(violated(rule, "generalization does not instantiate to the target petal"));
            }
            out.petals[k] = gen.clone();
            Ok(vec![Flower::Bloom(out)])
        }
        _ => unreachable!("area rules are handled by the caller"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_bouquet, print_bouquet, Signature};

    fn sig() -> Signature {
        Signature::from_pairs([("p", 1), ("q", 1), ("r", 2), ("a", 0), ("b", 0), ("c", 0)])
    }

    fn parse(t: &str) -> Bouquet {
        parse_bouquet(t, &sig()).unwrap()
    }

    fn inst(rule: RuleName, path: &str) -> RuleInstance {
        RuleInstance::new(rule, path.parse().unwrap())
    }

    fn subst(pairs: &[(&str, &str)]) -> Substitution {
        Substitution::new(pairs.iter().map(|(k, v)| (Var::new(k), Var::new(v))))
    }

    fn apply(b: &str, i: &RuleInstance) -> Result<String, RuleError> {
        apply_rule(&parse(b), i).map(|r| print_bouquet(&r))
    }

    #[test]
    fn poll_down_erases_pollinated_flowers() {
        let i = inst(RuleName::PollDown, "1/petal:0/area#{0}");
        assert_eq!(apply("a, [b |> a]", &i).unwrap(), "a, [b |> .]");
        let i = inst(RuleName::PollDown, "0/petal:0/area#{0}");
        assert_eq!(apply("[a |> a]", &i).unwrap(), "[a |> .]");
        assert!(matches!(
            apply("[b |> a]", &i),
            Err(RuleError::NotPollinated { .. })
        ));
        // A flower never pollinates itself.
        assert!(apply("a", &inst(RuleName::PollDown, "area#{0}")).is_err());
        assert_eq!(apply("a, a", &inst(RuleName::PollDown, "area#{0}")).unwrap(), "a");
    }

    #[test]
    fn poll_up_inserts_a_pollinated_copy() {
        let i = inst(RuleName::PollUp, "1/pistil/area").with(|p| p.insert = Some(parse("a")));
        assert_eq!(apply("a, [b |>]", &i).unwrap(), "a, [a, b |>]");
        let i = inst(RuleName::PollUp, "0/pistil/area").with(|p| p.insert = Some(parse("a")));
        assert!(matches!(apply("[|> a]", &i), Err(RuleError::NotPollinated { .. })));
    }

    #[test]
    fn epis_wraps_the_selection() {
        assert_eq!(apply("a, b", &inst(RuleName::Epis, "area")).unwrap(), "[|> a, b]");
        assert_eq!(apply("a, b", &inst(RuleName::Epis, "area#{1}")).unwrap(), "a, [|> b]");
        assert_eq!(apply("", &inst(RuleName::Epis, "area")).unwrap(), "[|> .]");
    }

    #[test]
    fn epet_removes_a_flower_with_an_empty_petal() {
        let i = inst(RuleName::Epet, "area#{0}").with(|p| p.petal = Some(0));
        assert_eq!(apply("[a |> . ; b]", &i).unwrap(), "");
        let i = inst(RuleName::Epet, "area#{0}").with(|p| p.petal = Some(1));
        assert!(matches!(
            apply("[a |> . ; b]", &i),
            Err(RuleError::SideConditionViolated { .. })
        ));
        // A petal with only binders is not empty.
        let i = inst(RuleName::Epet, "area#{0}");
        assert!(apply("[a |> x.]", &i).is_err());
        assert!(apply("[a |>]", &i).is_err());
    }

    #[test]
    fn srep_distributes_the_petals() {
        let i = inst(RuleName::Srep, "area#{0}").with(|p| p.case = Some(1));
        assert_eq!(
            apply("[a, [|> b ; c] |> q(x)]", &i).unwrap(),
            "[a |> [b |> q(x)], [c |> q(x)]]"
        );
    }

    #[test]
    fn srep_nullary_case_is_ex_falso() {
        let i = inst(RuleName::Srep, "area#{0}").with(|p| p.case = Some(0));
        assert_eq!(apply("[[|>] |> a]", &i).unwrap(), "[|> .]");
    }

    #[test]
    fn srep_freshens_duplicated_binders() {
        let i = inst(RuleName::Srep, "area#{0}").with(|p| p.case = Some(0));
        let out = apply("[[|> a ; b] |> x. q(x)]", &i).unwrap();
        assert_eq!(out, "[|> [a |> x. q(x)], [b |> x'. q(x')]]");
    }

    #[test]
    fn ipis_keeps_the_original_and_adds_the_instance() {
        let i = inst(RuleName::Ipis, "0/petal:0/area#{0}")
            .with(|p| p.subst = Some(subst(&[("x", "y")])));
        let out = apply("[y. |> [x. p(x) |> q(x)]]", &i).unwrap();
        assert_eq!(out, "[y. |> [p(y) |> q(y)], [x. p(x) |> q(x)]]");
    }

    #[test]
    fn ipis_nodup_needs_a_negative_context() {
        let i = inst(RuleName::Ipis, "0/pistil/area#{0}")
            .with(|p| {
                p.subst = Some(subst(&[("x", "w")]));
                p.nodup = true;
            });
        let out = apply("[[x. p(x) |>] |> q(w)]", &i).unwrap();
        assert_eq!(out, "[[p(w) |>] |> q(w)]");
        let i = inst(RuleName::Ipis, "area#{0}").with(|p| {
            p.subst = Some(subst(&[("x", "y")]));
            p.nodup = true;
        });
        assert!(matches!(
            apply("[x. p(x) |>]", &i),
            Err(RuleError::PolarityMismatch { .. })
        ));
    }

    #[test]
    fn ipis_checks_support_and_capture() {
        let i = inst(RuleName::Ipis, "area#{0}").with(|p| p.subst = Some(subst(&[("z", "y")])));
        assert!(matches!(
            apply("[x. p(x) |>]", &i),
            Err(RuleError::SideConditionViolated { .. })
        ));
        let i = inst(RuleName::Ipis, "area#{0}").with(|p| p.subst = Some(subst(&[("x", "y")])));
        assert!(matches!(
            apply("[x. p(x) |> y. r(x, y)]", &i),
            Err(RuleError::Capture { .. })
        ));
    }

    #[test]
    fn ipet_adds_an_instantiated_petal() {
        let i = inst(RuleName::Ipet, "area#{0}").with(|p| {
            p.petal = Some(0);
            p.subst = Some(subst(&[("z", "y")]));
        });
        assert_eq!(
            apply("[y. p(y) |> z. q(z)]", &i).unwrap(),
            "[y. p(y) |> q(y) ; z. q(z)]"
        );
        let nodup = i.with(|p| p.nodup = true);
        assert_eq!(apply("[y. p(y) |> z. q(z)]", &nodup).unwrap(), "[y. p(y) |> q(y)]");
    }

    #[test]
    fn cultural_rules_respect_polarity() {
        let grow = inst(RuleName::Grow, "area").with(|p| p.insert = Some(parse("b")));
        assert_eq!(apply("a", &grow).unwrap(), "a, b");
        let grow_neg = inst(RuleName::Grow, "0/pistil/area").with(|p| p.insert = Some(parse("b")));
        assert!(matches!(
            apply("[a |>]", &grow_neg),
            Err(RuleError::PolarityMismatch { .. })
        ));
        let crop = inst(RuleName::Crop, "0/pistil/area#{0}");
        assert_eq!(apply("[a, b |>]", &crop).unwrap(), "[b |>]");
        assert!(apply("a", &inst(RuleName::Crop, "area#{0}")).is_err());
        let pull = inst(RuleName::Pull, "area#{0}").with(|p| p.petals = Some(vec![0]));
        assert_eq!(apply("[a |> b ; c]", &pull).unwrap(), "[a |> c]");
        let glue = inst(RuleName::Glue, "0/pistil/area#{0}")
            .with(|p| p.glue = Some(vec![Garden::of(parse("c").flowers)]));
        assert_eq!(apply("[[a |> b] |>]", &glue).unwrap(), "[[a |> b ; c] |>]");
    }

    #[test]
    fn apis_and_apet_verify_the_generalization() {
        let gen = parse("[x. p(x) |> q(x)]").flowers[0].clone();
        let apis = inst(RuleName::Apis, "area#{0}").with(|p| {
            p.gen_flower = Some(gen.clone());
            p.subst = Some(subst(&[("x", "y")]));
        });
        assert_eq!(apply("[p(y) |> q(y)]", &apis).unwrap(), "[x. p(x) |> q(x)]");
        assert!(apply("[p(y) |> q(z)]", &apis).is_err());
        let apet = inst(RuleName::Apet, "0/pistil/area#{0}").with(|p| {
            p.petal = Some(0);
            p.gen_garden = Some(Garden::new(vec![Var::new("z")], parse("q(z)").flowers));
            p.subst = Some(subst(&[("z", "y")]));
        });
        assert_eq!(apply("[[a |> q(y)] |>]", &apet).unwrap(), "[[a |> z. q(z)] |>]");
    }

    #[test]
    fn params_are_type_checked() {
        let i = inst(RuleName::Srep, "area#{0}");
        assert!(matches!(apply("[a |>]", &i), Err(RuleError::BadParams { .. })));
        let i = inst(RuleName::PollDown, "area#{0}").with(|p| p.case = Some(0));
        assert!(matches!(apply("a, a", &i), Err(RuleError::BadParams { .. })));
        let i = inst(RuleName::Epet, "area");
        assert!(matches!(apply("[a |> .]", &i), Err(RuleError::BadParams { .. })));
    }

    #[test]
    fn instance_text_form() {
        let i = inst(RuleName::Ipet, "0/petal:0/area#{0}").with(|p| {
            p.petal = Some(1);
            p.subst = Some(subst(&[("z", "y")]));
            p.nodup = true;
        });
        assert_eq!(i.to_string(), "ipet @ 0/petal:0/area#{0} petal=1 subst={z:=y} nodup");
    }
}
