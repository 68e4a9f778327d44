//! Enumeration of rule instances that apply to a bouquet.

use std::collections::BTreeSet;

use super::{apply_rule, RuleInstance, RuleName};
use crate::context::{resolve_area, split, Context, Path, Polarity, Step};
use crate::syntax::{alpha_eq_flower, free_vars, Bouquet, Flower, Substitution, Var};

/// Every area of `b` as a step list, in pre-order (root first, then each
/// flower's pistil and petals left to right).
pub fn areas(b: &Bouquet) -> Vec<Vec<Step>> {
    fn go(fs: &[Flower], prefix: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        out.push(prefix.clone());
        for (i, f) in fs.iter().enumerate() {
            if let Flower::Bloom(bl) = f {
                prefix.push(Step::Pistil { flower: i });
                go(&bl.pistil.flowers, prefix, out);
                prefix.pop();
                for (k, p) in bl.petals.iter().enumerate() {
                    prefix.push(Step::Petal { flower: i, petal: k });
                    go(&p.flowers, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(&b.flowers, &mut Vec::new(), &mut out);
    out
}

/// Rule instances from `fragment` that apply to `b`, optionally restricted
/// to the area (and selection) of `at`.
///
/// Parameter-free rules are enumerated completely. poll_up offers the
/// pollination candidates; ipis/ipet instantiate one binder at a time with
/// a variable visible at the site; pull removes one petal at a time. grow,
/// glue, apis and apet need invented terms and are never listed.
pub fn applicable_instances(
    b: &Bouquet,
    at: Option<&Path>,
    fragment: &[RuleName],
) -> Vec<RuleInstance> {
    let want = |r: RuleName| fragment.contains(&r);
    let fv: BTreeSet<Var> = free_vars(b);
    let mut out = Vec::new();
    for steps in areas(b) {
        if at.is_some_and(|p| p.steps != steps) {
            continue;
        }
        let area = resolve_area(&b.flowers, &steps).expect("enumerated areas resolve");
        let polarity = Polarity::of(Path::area(steps.clone()).inversions());
        let ctx = Context {
            frame: b.clone(),
            hole: steps.clone(),
        };
        let scope: Vec<Var> = ctx.binders_in_scope();
        let flower_path = |j: usize| Path::flower(steps.clone(), j);
        for (j, f) in area.iter().enumerate() {
            if want(RuleName::PollDown) {
                let (c, content) = split(b, &flower_path(j)).expect("index in range");
                if c.is_pollinated(&content.flowers) {
                    out.push(RuleInstance::new(RuleName::PollDown, flower_path(j)));
                }
            }
            if want(RuleName::Epis) {
                out.push(RuleInstance::new(RuleName::Epis, flower_path(j)));
            }
            if want(RuleName::Crop) && polarity == Polarity::Negative {
                out.push(RuleInstance::new(RuleName::Crop, flower_path(j)));
            }
            let Flower::Bloom(bl) = f else { continue };
            if want(RuleName::Epet) {
                if let Some(k) = bl.petals.iter().position(|p| p.is_empty()) {
                    out.push(
                        RuleInstance::new(RuleName::Epet, flower_path(j)).with(|p| p.petal = Some(k)),
                    );
                }
            }
            if want(RuleName::Srep) {
                for (k, g) in bl.pistil.flowers.iter().enumerate() {
                    if matches!(g, Flower::Bloom(inner) if inner.pistil.is_empty()) {
                        out.push(
                            RuleInstance::new(RuleName::Srep, flower_path(j)).with(|p| p.case = Some(k)),
                        );
                    }
                }
            }
            if want(RuleName::Ipis) {
                let visible = visible(&fv, &scope, &bl.pistil.binders, &[]);
                for y in &bl.pistil.binders {
                    for v in visible.iter().filter(|v| *v != y) {
                        let s = Substitution::new([(y.clone(), v.clone())]);
                        let base = RuleInstance::new(RuleName::Ipis, flower_path(j))
                            .with(|p| p.subst = Some(s.clone()));
                        if polarity == Polarity::Negative {
                            out.push(base.clone().with(|p| p.nodup = true));
                        }
                        out.push(base);
                    }
                }
            }
            if want(RuleName::Ipet) {
                for (k, petal) in bl.petals.iter().enumerate() {
                    let visible = visible(&fv, &scope, &bl.pistil.binders, &petal.binders);
                    for z in &petal.binders {
                        for v in visible.iter().filter(|v| *v != z) {
                            let s = Substitution::new([(z.clone(), v.clone())]);
                            let base = RuleInstance::new(RuleName::Ipet, flower_path(j)).with(|p| {
                                p.petal = Some(k);
                                p.subst = Some(s.clone());
                            });
                            if polarity == Polarity::Positive {
                                out.push(base.clone().with(|p| p.nodup = true));
                            }
                            out.push(base);
                        }
                    }
                }
            }
            if want(RuleName::Pull) && polarity == Polarity::Positive {
                for k in 0..bl.petals.len() {
                    out.push(
                        RuleInstance::new(RuleName::Pull, flower_path(j)).with(|p| p.petals = Some(vec![k])),
                    );
                }
            }
        }
        if want(RuleName::PollUp) {
            let mut seen: Vec<&Flower> = Vec::new();
            let candidates = ctx.pollination_candidates();
            for c in &candidates {
                if seen.iter().any(|s| alpha_eq_flower(s, c.flower)) {
                    continue;
                }
                seen.push(c.flower);
                out.push(
                    RuleInstance::new(RuleName::PollUp, Path::area(steps.clone()))
                        .with(|p| p.insert = Some(Bouquet::new(vec![c.flower.clone()]))),
                );
            }
        }
    }
    if let Some(sel) = at.and_then(|p| p.selection.as_ref()) {
        out.retain(|i| match &i.path.selection {
            Some(s) => s == sel,
            None => sel.is_empty(),
        });
    }
    out.retain(|i| apply_rule(b, i).is_ok());
    out
}

fn visible(fv: &BTreeSet<Var>, scope: &[Var], pistil: &[Var], petal: &[Var]) -> Vec<Var> {
    let mut out: Vec<Var> = fv.iter().cloned().collect();
    for v in scope.iter().chain(pistil).chain(petal) {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}
