//! Randomized soundness oracle: natural steps must relate equivalent
//! bouquets and cultural steps must have a premiss entailing the conclusion.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{entails, random_model, Bounds};
use crate::calculus::{apply_rule_with, applicable_instances, areas, ApplyOptions, RuleInstance, RuleName};
use crate::context::{resolve_area, Context, Path, Polarity};
use crate::random::{rng, TermGen};
use crate::syntax::{
    free_vars_flower, fresh_var, names_in, subst_flowers, subst_garden, Bouquet, Flower, Garden, Signature,
    Substitution, Var,
};

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub natural_steps: usize,
    pub cultural_steps: usize,
    pub models: usize,
    pub bounds: Bounds,
    /// Off only to show that the harness notices unsound steps.
    pub check_pollination: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 1,
            natural_steps: 1000,
            cultural_steps: 500,
            models: 10,
            bounds: Bounds::new(3, 2),
            check_pollination: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepKind {
    Natural,
    Cultural,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: StepKind,
    /// Case index; together with the run seed it reproduces the step.
    pub case: usize,
    pub conclusion: String,
    pub instance: String,
    pub premiss: String,
    pub model: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FuzzReport {
    pub natural_checked: usize,
    pub cultural_checked: usize,
    pub violations: Vec<Violation>,
}

fn fuzz_sig() -> Signature {
    Signature::from_pairs([("a", 0), ("b", 0), ("p", 1), ("q", 1)])
}

fn fuzz_case_seed(seed: u64, case: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (case as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

pub fn fuzz_soundness(cfg: &FuzzConfig) -> FuzzReport {
    let sig = fuzz_sig();
    let terms = TermGen::new(&sig);
    let opts = ApplyOptions {
        check_pollination: cfg.check_pollination,
        ..ApplyOptions::default()
    };
    let mut report = FuzzReport::default();
    let total = cfg.natural_steps + cfg.cultural_steps;
    for case in 0..total {
        let kind = if case < cfg.natural_steps {
            StepKind::Natural
        } else {
            StepKind::Cultural
        };
        let mut r = rng(fuzz_case_seed(cfg.seed, case));
        let (before, inst, after) = loop {
            let b = terms.bouquet(&mut r);
            let candidates = match kind {
                StepKind::Natural => natural_candidates(&b, &mut r, &terms, cfg.check_pollination),
                StepKind::Cultural => cultural_candidates(&b, &mut r, &terms),
            };
            let Some(inst) = candidates.choose(&mut r) else { continue };
            if let Ok(after) = apply_rule_with(&b, inst, &opts) {
                break (b, inst.clone(), after);
            }
        };
        for _ in 0..cfg.models {
            let m = random_model(&mut r, cfg.bounds, &sig);
            let sound = match kind {
                StepKind::Natural => entails(&m, &before, &after) && entails(&m, &after, &before),
                StepKind::Cultural => entails(&m, &after, &before),
            };
            if !sound {
                report.violations.push(Violation {
                    kind,
                    case,
                    conclusion: before.to_string(),
                    instance: inst.to_string(),
                    premiss: after.to_string(),
                    model: m.to_string(),
                });
                break;
            }
        }
        match kind {
            StepKind::Natural => report.natural_checked += 1,
            StepKind::Cultural => report.cultural_checked += 1,
        }
    }
    report
}

fn natural_candidates(b: &Bouquet, r: &mut impl Rng, terms: &TermGen, guarded: bool) -> Vec<RuleInstance> {
    let mut out = applicable_instances(b, None, &RuleName::NATURAL);
    if guarded || r.gen_bool(0.5) {
        return out;
    }
    // Unguarded pollination steps, for the mutation check.
    out.clear();
    for steps in areas(b) {
        let area = resolve_area(&b.flowers, &steps).expect("enumerated");
        for j in 0..area.len() {
            out.push(RuleInstance::new(RuleName::PollDown, Path::flower(steps.clone(), j)));
        }
        let ctx = Context {
            frame: b.clone(),
            hole: steps.clone(),
        };
        let mut scope = ctx.binders_in_scope();
        scope.extend(terms.free.iter().cloned());
        if let Some(f) = terms.flower(r, 1, &mut scope) {
            out.push(
                RuleInstance::new(RuleName::PollUp, Path::area(steps.clone()))
                    .with(|p| p.insert = Some(Bouquet::new(vec![f]))),
            );
        }
    }
    out
}

fn polarity(steps: &[crate::context::Step]) -> Polarity {
    Path::area(steps.to_vec()).polarity()
}

fn cultural_candidates(b: &Bouquet, r: &mut impl Rng, terms: &TermGen) -> Vec<RuleInstance> {
    let mut out = applicable_instances(b, None, &[RuleName::Crop, RuleName::Pull]);
    let avoid: HashSet<Var> = {
        let mut n = names_in(&b.flowers);
        n.extend(terms.free.iter().cloned());
        n
    };
    let fresh = fresh_var(&Var::new("g"), &avoid);
    for steps in areas(b) {
        let pol = polarity(&steps);
        let ctx = Context {
            frame: b.clone(),
            hole: steps.clone(),
        };
        let mut scope = ctx.binders_in_scope();
        scope.extend(terms.free.iter().cloned());
        if pol == Polarity::Positive {
            if let Some(f) = terms.flower(r, 2, &mut scope) {
                out.push(
                    RuleInstance::new(RuleName::Grow, Path::area(steps.clone()))
                        .with(|p| p.insert = Some(Bouquet::new(vec![f]))),
                );
            }
        }
        let area = resolve_area(&b.flowers, &steps).expect("enumerated");
        for (j, f) in area.iter().enumerate() {
            let Flower::Bloom(bl) = f else { continue };
            let at = Path::flower(steps.clone(), j);
            match pol {
                Polarity::Positive => {
                    // apis: abstract every occurrence of one free variable.
                    if let Some(v) = free_vars_flower(f).into_iter().next() {
                        let s = Substitution::new([(v.clone(), fresh.clone())]);
                        let mut binders = bl.pistil.binders.clone();
                        binders.push(fresh.clone());
                        let gen = Flower::bloom(
                            Garden::new(binders, subst_flowers(&s, &bl.pistil.flowers)),
                            bl.petals.iter().map(|g| subst_garden(&s, g)).collect(),
                        );
                        out.push(RuleInstance::new(RuleName::Apis, at.clone()).with(|p| {
                            p.gen_flower = Some(gen);
                            p.subst = Some(Substitution::new([(fresh.clone(), v.clone())]));
                        }));
                    }
                }
                Polarity::Negative => {
                    let mut inner = scope.clone();
                    inner.extend(bl.pistil.binders.iter().cloned());
                    let petal = Garden::of(terms.flower(r, 1, &mut inner).into_iter().collect());
                    out.push(RuleInstance::new(RuleName::Glue, at.clone()).with(|p| p.glue = Some(vec![petal])));
                    for (k, g) in bl.petals.iter().enumerate() {
                        let wrapped = Flower::bloom(g.clone(), vec![]);
                        let Some(v) = free_vars_flower(&wrapped).into_iter().next() else { continue };
                        let s = Substitution::new([(v.clone(), fresh.clone())]);
                        let mut binders = g.binders.clone();
                        binders.push(fresh.clone());
                        let gen = Garden::new(binders, subst_flowers(&s, &g.flowers));
                        out.push(RuleInstance::new(RuleName::Apet, at.clone()).with(|p| {
                            p.petal = Some(k);
                            p.gen_garden = Some(gen);
                            p.subst = Some(Substitution::new([(fresh.clone(), v.clone())]));
                        }));
                    }
                }
            }
        }
    }
    out
}
