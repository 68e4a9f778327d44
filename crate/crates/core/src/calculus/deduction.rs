//! Lifting derivations into contexts and the two directions of the strong
//! deduction theorem.
//!
//! Rule paths and parameters address canonical states, and canonicalization
//! may reorder and rename. A lifted step is therefore re-addressed through
//! an alpha-witness between the naively filled state and the actual one.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{check_derivation, is_proof, CheckError, Derivation, RuleError, RuleInstance, RuleName};
use crate::context::{split, Context, Path, Polarity, Step};
use crate::syntax::{
    alpha_eq_flower, alpha_witness, canonicalize, free_vars, freshen_binders, names_in,
    subst_flowers, Address, AlphaWitness, Bouquet, Flower, Garden, Substitution, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeductionError {
    #[error("input derivation does not check: {0}")]
    Check(#[from] CheckError),
    #[error("input is not a proof of a flower `(Ψ ⫐ Φ)`: {0}")]
    Shape(String),
    #[error("step {step}: {rule} would apply in a context of the wrong polarity")]
    PolarityMismatch { step: usize, rule: RuleName },
    #[error("step {step}: cannot re-address: {reason}")]
    Translate { step: usize, reason: String },
    #[error("step {step}: {source}")]
    Rule { step: usize, source: RuleError },
}

/// Lifts `d` into `ctx`: a derivation from `ctx[start]` to `ctx[end]`.
pub fn lift(d: &Derivation, ctx: &Context) -> Result<Derivation, DeductionError> {
    let start = ctx.fill(&d.start.flowers);
    lift_onto(d, ctx, &start)
}

/// Like [`lift`], starting from `actual`, a canonical bouquet alpha-equal
/// to `ctx[start]`.
pub fn lift_onto(d: &Derivation, ctx: &Context, actual: &Bouquet) -> Result<Derivation, DeductionError> {
    let states = d.states()?;
    let shift = ctx.hole_area().len();
    let mut out = Derivation {
        start: actual.clone(),
        steps: Vec::new(),
    };
    let mut cur = actual.clone();
    for (step, s) in d.steps.iter().enumerate() {
        let raw = ctx.fill_raw(&states[step].flowers);
        let w = alpha_witness(&raw.flowers, &cur.flowers).ok_or_else(|| DeductionError::Translate {
            step,
            reason: "lifted state is not alpha-equal to the filled context".into(),
        })?;
        let tr = Translator {
            raw: &raw,
            cur: &cur,
            w: &w,
        };
        let inst = tr
            .instance(&s.instance, ctx, shift, states[step].flowers.len())
            .map_err(|reason| DeductionError::Translate { step, reason })?;
        let polarity = inst.path.polarity();
        let required = inst.rule.required_polarity().or(match (inst.rule, inst.params.nodup) {
            (RuleName::Ipis, true) => Some(Polarity::Negative),
            (RuleName::Ipet, true) => Some(Polarity::Positive),
            _ => None,
        });
        if required.is_some_and(|r| r != polarity) {
            return Err(DeductionError::PolarityMismatch {
                step,
                rule: inst.rule,
            });
        }
        cur = out
            .push(&cur, inst)
            .map_err(|source| DeductionError::Rule { step, source })?;
    }
    Ok(out)
}

struct Translator<'a> {
    raw: &'a Bouquet,
    cur: &'a Bouquet,
    w: &'a AlphaWitness,
}

fn extend(addr: &[u32], more: &[u32]) -> Address {
    let mut out = addr.to_vec();
    out.extend_from_slice(more);
    out
}

impl Translator<'_> {
    fn flower_index(&self, raw_flower: &Address) -> Result<usize, String> {
        self.w
            .flowers
            .get(raw_flower)
            .and_then(|a| a.last())
            .map(|&i| i as usize)
            .ok_or_else(|| format!("no image for flower at {raw_flower:?}"))
    }

    fn petal_index(&self, raw_flower: &Address, k: usize) -> Result<usize, String> {
        self.w
            .petals
            .get(&(raw_flower.clone(), k))
            .copied()
            .ok_or_else(|| format!("no image for petal {k} of flower at {raw_flower:?}"))
    }

    /// Maps raw steps onto the current state; returns the new steps and the
    /// raw address of the area reached.
    fn steps(&self, raw_steps: &[Step]) -> Result<(Vec<Step>, Address), String> {
        let mut area: Address = Vec::new();
        let mut out = Vec::new();
        for s in raw_steps {
            let f = extend(&area, &[s.flower() as u32]);
            let i = self.flower_index(&f)?;
            out.push(match *s {
                Step::Pistil { .. } => Step::Pistil { flower: i },
                Step::Petal { petal, .. } => Step::Petal {
                    flower: i,
                    petal: self.petal_index(&f, petal)?,
                },
            });
            area = extend(&f, &[s.garden_code()]);
        }
        Ok((out, area))
    }

    /// Resolves a variable occurring at the garden `site` of the raw state
    /// to its name in the current state.
    fn resolve(&self, site: &[u32], v: &Var) -> Var {
        let mut chain: Vec<(Address, &[Var])> = Vec::new();
        let mut area: &[Flower] = &self.raw.flowers;
        let mut addr: Address = Vec::new();
        for pair in site.chunks(2) {
            let f = extend(&addr, &[pair[0]]);
            let Some(Flower::Bloom(b)) = area.get(pair[0] as usize) else {
                break;
            };
            chain.push((extend(&f, &[0]), &b.pistil.binders));
            if pair[1] == 0 {
                area = &b.pistil.flowers;
            } else {
                let g = &b.petals[pair[1] as usize - 1];
                chain.push((extend(&f, &[pair[1]]), &g.binders));
                area = &g.flowers;
            }
            addr = extend(&f, &[pair[1]]);
        }
        for (g, binders) in chain.iter().rev() {
            if binders.contains(v) {
                return self.w.binders.get(&(g.clone(), v.clone())).cloned().unwrap_or_else(|| v.clone());
            }
        }
        v.clone()
    }

    /// Renames a literal's free variables for `site`, after freshening its
    /// own binders away from every name in sight.
    fn literal(&self, site: &[u32], flowers: &[Flower]) -> Vec<Flower> {
        let (fresh, _) = freshen_binders(flowers, &self.avoid());
        let mut map = Vec::new();
        for v in free_vars(&Bouquet::new(fresh.clone())) {
            map.push((v.clone(), self.resolve(site, &v)));
        }
        subst_flowers(&Substitution::new(map), &fresh)
    }

    fn avoid(&self) -> HashSet<Var> {
        let mut names = names_in(&self.cur.flowers);
        names.extend(names_in(&self.raw.flowers));
        names
    }

    fn subst_at(&self, keys_site: &Address, values_site: &[u32], s: &Substitution) -> Substitution {
        Substitution::new(s.iter().map(|(k, v)| {
            let k2 = self
                .w
                .binders
                .get(&(keys_site.clone(), k.clone()))
                .cloned()
                .unwrap_or_else(|| k.clone());
            (k2, self.resolve(values_site, v))
        }))
    }

    /// A generalization literal: its binders are freshened and `σ` follows
    /// the renaming on its keys and on values naming those binders.
    fn generalization(
        &self,
        site: &[u32],
        own: &[Var],
        flower: Flower,
        s: &Substitution,
    ) -> (Flower, Substitution) {
        let (fresh, map): (Vec<Flower>, HashMap<Var, Var>) = freshen_binders(&[flower], &self.avoid());
        let mut free_map = Vec::new();
        for v in free_vars(&Bouquet::new(fresh.clone())) {
            free_map.push((v.clone(), self.resolve(site, &v)));
        }
        let renamed = subst_flowers(&Substitution::new(free_map), &fresh).remove(0);
        let s2 = Substitution::new(s.iter().map(|(k, v)| {
            let k2 = map.get(k).cloned().unwrap_or_else(|| k.clone());
            let v2 = if own.contains(v) {
                map.get(v).cloned().unwrap_or_else(|| v.clone())
            } else {
                self.resolve(site, v)
            };
            (k2, v2)
        }));
        (renamed, s2)
    }

    fn instance(
        &self,
        inst: &RuleInstance,
        ctx: &Context,
        shift: usize,
        top_len: usize,
    ) -> Result<RuleInstance, String> {
        let rule = inst.rule;
        let p = &inst.path;
        let mut raw_steps = ctx.hole.clone();
        let mut raw_sel = p.selection.clone();
        match p.steps.split_first() {
            Some((first, rest)) => {
                raw_steps.push(match *first {
                    Step::Pistil { flower } => Step::Pistil { flower: flower + shift },
                    Step::Petal { flower, petal } => Step::Petal {
                        flower: flower + shift,
                        petal,
                    },
                });
                raw_steps.extend_from_slice(rest);
            }
            None => {
                raw_sel = match raw_sel {
                    Some(sel) => Some(sel.iter().map(|i| i + shift).collect()),
                    None if matches!(rule, RuleName::PollUp | RuleName::Grow) => None,
                    None => Some((shift..shift + top_len).collect()),
                };
            }
        }
        let (steps, area) = self.steps(&raw_steps)?;
        let selection = match &raw_sel {
            None => None,
            Some(sel) => {
                let mut v = Vec::new();
                for &j in sel {
                    v.push(self.flower_index(&extend(&area, &[j as u32]))?);
                }
                v.sort_unstable();
                Some(v)
            }
        };
        let target = raw_sel
            .as_ref()
            .and_then(|s| s.first())
            .map(|&j| extend(&area, &[j as u32]));
        let target_of = || target.clone().ok_or_else(|| format!("{rule} needs a target flower"));
        let mut params = inst.params.clone();
        if let Some(k) = params.petal {
            params.petal = Some(self.petal_index(&target_of()?, k)?);
        }
        if let Some(k) = params.case {
            params.case = Some(self.flower_index(&extend(&target_of()?, &[0, k as u32]))?);
        }
        if let Some(ks) = &params.petals {
            let t = target_of()?;
            let mut v = Vec::new();
            for &k in ks {
                v.push(self.petal_index(&t, k)?);
            }
            v.sort_unstable();
            params.petals = Some(v);
        }
        if let Some(b) = &params.insert {
            params.insert = Some(Bouquet::new(self.literal(&area, &b.flowers)));
        }
        if let Some(g) = &params.glue {
            let pistil_site = extend(&target_of()?, &[0]);
            let wrapped = Flower::bloom(Garden::default(), g.clone());
            let lit = self.literal(&pistil_site, &[wrapped]).remove(0);
            params.glue = Some(lit.as_bloom().expect("wrapped petals").petals.clone());
        }
        match rule {
            RuleName::Ipis => {
                let g = extend(&target_of()?, &[0]);
                params.subst = params.subst.as_ref().map(|s| self.subst_at(&g, &g, s));
            }
            RuleName::Ipet => {
                let k = inst.params.petal.expect("checked") as u32;
                let g = extend(&target_of()?, &[k + 1]);
                params.subst = params.subst.as_ref().map(|s| self.subst_at(&g, &g, s));
            }
            RuleName::Apis => {
                if let (Some(f), Some(s)) = (params.gen_flower.take(), params.subst.take()) {
                    let own = f.as_bloom().map(|b| b.pistil.binders.clone()).unwrap_or_default();
                    let (f2, s2) = self.generalization(&area, &own, f, &s);
                    params.gen_flower = Some(f2);
                    params.subst = Some(s2);
                }
            }
            RuleName::Apet => {
                if let (Some(g), Some(s)) = (params.gen_garden.take(), params.subst.take()) {
                    let site = extend(&target_of()?, &[0]);
                    let own = g.binders.clone();
                    let (f2, s2) = self.generalization(&site, &own, Flower::bloom(g, vec![]), &s);
                    params.gen_garden = Some(f2.as_bloom().expect("wrapped garden").pistil.clone());
                    params.subst = Some(s2);
                }
            }
            _ => {}
        }
        Ok(RuleInstance {
            rule,
            path: Path { steps, selection },
            params,
        })
    }
}

/// From a derivation `Φ ⇝* Ψ`, a proof of `(Ψ ⫐ Φ)`: lift the derivation
/// into the petal, then `poll_down` and `epet`.
pub fn build_strong_deduction_fwd(d: &Derivation) -> Result<Derivation, DeductionError> {
    let end = check_derivation(d)?;
    let ctx = Context {
        frame: Bouquet::new(vec![Flower::bloom(Garden::of(end.flowers.clone()), vec![Garden::default()])]),
        hole: vec![Step::Petal { flower: 0, petal: 0 }],
    };
    let mut out = lift(d, &ctx)?;
    let mut cur = check_derivation(&out)?;
    let n = out.len();
    let tail = [
        RuleInstance::new(RuleName::PollDown, "0/petal:0/area".parse().expect("static path")),
        RuleInstance::new(RuleName::Epet, "area#{0}".parse().expect("static path")).with(|p| p.petal = Some(0)),
    ];
    for (i, inst) in tail.into_iter().enumerate() {
        cur = out
            .push(&cur, inst)
            .map_err(|source| DeductionError::Rule { step: n + i, source })?;
    }
    Ok(out)
}

fn find_top(cur: &Bouquet, shape: &Flower, exclude: Option<usize>) -> Result<usize, DeductionError> {
    cur.flowers
        .iter()
        .enumerate()
        .position(|(i, f)| Some(i) != exclude && alpha_eq_flower(f, shape))
        .ok_or_else(|| DeductionError::Shape(format!("lost track of `{shape}`")))
}

/// From a proof of `(Ψ ⫐ Φ)`, a derivation `Φ ⇝* Ψ` (using grow, so not
/// purely natural).
pub fn build_strong_deduction_bwd(p: &Derivation) -> Result<Derivation, DeductionError> {
    check_derivation(p)?;
    if !is_proof(p) {
        return Err(DeductionError::Shape("the derivation does not end in the empty bouquet".into()));
    }
    let start = canonicalize(&p.start);
    let (_psi, phi) = match start.flowers.as_slice() {
        [Flower::Bloom(b)] if b.pistil.binders.is_empty() && b.petals.len() == 1 && b.petals[0].binders.is_empty() => {
            (b.pistil.flowers.clone(), b.petals[0].flowers.clone())
        }
        _ => return Err(DeductionError::Shape(format!("`{start}` is not a single flower (Ψ ⫐ Φ)"))),
    };
    let implication = start.flowers[0].clone();
    let wrap = |inner: Vec<Flower>| Flower::bloom(Garden::default(), vec![Garden::of(inner)]);

    let mut d = Derivation::new(&Bouquet::new(phi.clone()));
    let mut cur = d.start.clone();
    let step = |d: &mut Derivation, cur: &mut Bouquet, inst: RuleInstance| -> Result<(), DeductionError> {
        let n = d.len();
        *cur = d
            .push(cur, inst)
            .map_err(|source| DeductionError::Rule { step: n, source })?;
        Ok(())
    };
    let path = |s: String| -> Path { s.parse().expect("generated path") };

    // Φ ⇝ (⫐Φ)
    step(&mut d, &mut cur, RuleInstance::new(RuleName::Epis, Path::root()))?;
    // ⇝ (Ψ⫐Φ), (⫐Φ)
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::Grow, Path::root()).with(|p| p.insert = Some(start.clone())),
    )?;
    // ⇝ (Ψ⫐Φ), ((Ψ⫐Φ)⫐Φ)
    let e = find_top(&cur, &wrap(phi.clone()), None)?;
    let g = find_top(&cur, &implication, Some(e))?;
    let copy = cur.flowers[g].clone();
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::PollUp, path(format!("{e}/pistil/area")))
            .with(|p| p.insert = Some(Bouquet::new(vec![copy]))),
    )?;
    // ⇝* ((Ψ⫐Φ)⫐Φ), by the hypothesis lifted beside it
    let nested = Flower::bloom(Garden::of(vec![implication.clone()]), vec![Garden::of(phi.clone())]);
    let h = find_top(&cur, &nested, None)?;
    let g = find_top(&cur, &implication, Some(h))?;
    let (ctx, _) = split(&cur, &Path::flower(vec![], g)).expect("index found above");
    let lifted = lift_onto(p, &ctx, &cur)?;
    cur = check_derivation(&lifted)?;
    d.steps.extend(lifted.steps);
    // ⇝ Ψ, ((Ψ⫐Φ)⫐Φ)
    let h_flower = cur.flowers[0].clone();
    let inner_psi = h_flower.as_bloom().expect("nested implication").pistil.flowers[0]
        .as_bloom()
        .expect("implication")
        .pistil
        .flowers
        .clone();
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::Grow, Path::root()).with(|p| p.insert = Some(Bouquet::new(inner_psi))),
    )?;
    // ⇝ Ψ, ((⫐Φ)⫐Φ)
    let h = find_top(&cur, &h_flower, None)?;
    step(&mut d, &mut cur, RuleInstance::new(RuleName::PollDown, path(format!("{h}/pistil/0/pistil/area"))))?;
    // ⇝ Ψ, (⫐(Φ⫐Φ))
    let h = find_top(&cur, &Flower::bloom(Garden::of(vec![wrap(phi.clone())]), vec![Garden::of(phi.clone())]), None)?;
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::Srep, Path::flower(vec![], h)).with(|p| p.case = Some(0)),
    )?;
    // ⇝ Ψ, (⫐(Φ⫐))
    let split_shape = {
        let b = cur.flowers.iter().find(|f| {
            f.as_bloom().is_some_and(|b| {
                b.pistil.is_empty()
                    && b.petals.len() == 1
                    && b.petals[0].flowers.len() == 1
                    && alpha_eq_flower(
                        &b.petals[0].flowers[0],
                        &Flower::bloom(Garden::of(phi.clone()), vec![Garden::of(phi.clone())]),
                    )
            })
        });
        b.cloned()
            .ok_or_else(|| DeductionError::Shape("lost track of the distributed flower".into()))?
    };
    let h = find_top(&cur, &split_shape, None)?;
    step(&mut d, &mut cur, RuleInstance::new(RuleName::PollDown, path(format!("{h}/petal:0/0/petal:0/area"))))?;
    // ⇝ Ψ, (⫐·)
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::Epet, path(format!("{h}/petal:0/area#{{0}}"))).with(|p| p.petal = Some(0)),
    )?;
    // ⇝ Ψ
    let h = find_top(&cur, &wrap(vec![]), None)?;
    step(
        &mut d,
        &mut cur,
        RuleInstance::new(RuleName::Epet, Path::flower(vec![], h)).with(|p| p.petal = Some(0)),
    )?;
    Ok(d)
}
