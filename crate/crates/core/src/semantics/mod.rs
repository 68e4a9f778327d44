//! Finite Kripke structures and forcing.
//!
//! Worlds are `0..n`. Element `i` of a world's domain is the token `i`, and
//! domains are prefixes `0..size`, so domain inclusion along the order is a
//! comparison of sizes. Element 0 is the default of every evaluation.

mod enumerate;
mod fuzz;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{free_vars, Bouquet, Flower, Garden, Var};

pub use enumerate::{enumerate_models, find_countermodel, random_model, Bounds};
pub use fuzz::{fuzz_soundness, FuzzConfig, FuzzReport, StepKind, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KripkeModel {
    /// `order[v][w]` iff `v ≤ w`.
    pub order: Vec<Vec<bool>>,
    /// Domain size per world.
    pub domains: Vec<usize>,
    /// Per world, the true tuples of each predicate.
    pub interp: Vec<BTreeMap<String, BTreeSet<Vec<usize>>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model has no worlds")]
    NoWorlds,
    #[error("order, domains and interpretation disagree on the number of worlds")]
    Shape,
    #[error("world {0} has an empty domain")]
    EmptyDomain(usize),
    #[error("order is not reflexive at world {0}")]
    NotReflexive(usize),
    #[error("order is not transitive: {0} ≤ {1} ≤ {2}")]
    NotTransitive(usize, usize, usize),
    #[error("domain shrinks from world {0} to world {1}")]
    DomainNotMonotone(usize, usize),
    #[error("`{pred}` loses a tuple from world {from} to world {to}")]
    InterpNotMonotone { pred: String, from: usize, to: usize },
    #[error("`{pred}` at world {world} holds of a tuple outside the domain")]
    TupleOutOfDomain { pred: String, world: usize },
}

impl KripkeModel {
    /// Checks the preorder and both monotonicity conditions.
    pub fn new(
        order: Vec<Vec<bool>>,
        domains: Vec<usize>,
        interp: Vec<BTreeMap<String, BTreeSet<Vec<usize>>>>,
    ) -> Result<Self, ModelError> {
        let m = KripkeModel { order, domains, interp };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.domains.len();
        if n == 0 {
            return Err(ModelError::NoWorlds);
        }
        if self.order.len() != n || self.order.iter().any(|r| r.len() != n) || self.interp.len() != n {
            return Err(ModelError::Shape);
        }
        for w in 0..n {
            if self.domains[w] == 0 {
                return Err(ModelError::EmptyDomain(w));
            }
            if !self.order[w][w] {
                return Err(ModelError::NotReflexive(w));
            }
            for (pred, tuples) in &self.interp[w] {
                if tuples.iter().flatten().any(|&e| e >= self.domains[w]) {
                    return Err(ModelError::TupleOutOfDomain {
                        pred: pred.clone(),
                        world: w,
                    });
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if !self.order[a][b] {
                    continue;
                }
                for c in 0..n {
                    if self.order[b][c] && !self.order[a][c] {
                        return Err(ModelError::NotTransitive(a, b, c));
                    }
                }
                if self.domains[a] > self.domains[b] {
                    return Err(ModelError::DomainNotMonotone(a, b));
                }
                for (pred, tuples) in &self.interp[a] {
                    let later = self.interp[b].get(pred);
                    if tuples.iter().any(|t| !later.is_some_and(|l| l.contains(t))) {
                        return Err(ModelError::InterpNotMonotone {
                            pred: pred.clone(),
                            from: a,
                            to: b,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn worlds(&self) -> usize {
        self.domains.len()
    }

    /// Worlds accessible from `w`, including `w`.
    pub fn above(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.worlds()).filter(move |&v| self.order[w][v])
    }

    pub fn holds(&self, w: usize, pred: &str, tuple: &[usize]) -> bool {
        self.interp[w].get(pred).is_some_and(|s| s.contains(tuple))
    }
}

/// A total evaluation: explicit values plus a default for every other
/// variable.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Evaluation {
    pub values: BTreeMap<Var, usize>,
    pub default: usize,
}

impl Evaluation {
    pub fn get(&self, x: &Var) -> usize {
        self.values.get(x).copied().unwrap_or(self.default)
    }

    /// `self ⟨vars⟩ g`: `g` on `vars`, `self` elsewhere.
    pub fn update(&self, vars: &[Var], g: &Evaluation) -> Evaluation {
        let mut out = self.clone();
        for x in vars {
            out.values.insert(x.clone(), g.get(x));
        }
        out
    }

    /// Pointwise equality on `vars`.
    pub fn agrees_on<'a>(&self, other: &Evaluation, vars: impl IntoIterator<Item = &'a Var>) -> bool {
        vars.into_iter().all(|x| self.get(x) == other.get(x))
    }
}

/// Innermost binding last.
struct Env(Vec<(Var, usize)>, usize);

impl Env {
    fn from(e: &Evaluation) -> Self {
        Env(e.values.iter().map(|(k, v)| (k.clone(), *v)).collect(), e.default)
    }

    fn get(&self, x: &Var) -> usize {
        self.0.iter().rev().find(|(k, _)| k == x).map_or(self.1, |(_, v)| *v)
    }
}

/// Calls `f` on every assignment of `vars` into `0..size`, stopping as soon
/// as `f` returns `stop`. Returns whether it stopped.
fn each_assignment(env: &mut Env, vars: &[Var], size: usize, stop: bool, f: &mut dyn FnMut(&mut Env) -> bool) -> bool {
    match vars.split_first() {
        None => f(env) == stop,
        Some((x, rest)) => {
            for e in 0..size {
                env.0.push((x.clone(), e));
                let hit = each_assignment(env, rest, size, stop, f);
                env.0.pop();
                if hit {
                    return true;
                }
            }
            false
        }
    }
}

fn forces_all(m: &KripkeModel, w: usize, env: &mut Env, fs: &[Flower]) -> bool {
    fs.iter().all(|f| forces_flower(m, w, env, f))
}

fn forces_garden_somehow(m: &KripkeModel, w: usize, env: &mut Env, g: &Garden) -> bool {
    each_assignment(env, &g.binders, m.domains[w], true, &mut |env| forces_all(m, w, env, &g.flowers))
}

fn forces_flower(m: &KripkeModel, w: usize, env: &mut Env, f: &Flower) -> bool {
    match f {
        Flower::Atom(a) => {
            let tuple: Vec<usize> = a.args.iter().map(|x| env.get(x)).collect();
            m.holds(w, &a.pred, &tuple)
        }
        Flower::Bloom(b) => m.above(w).all(|v| {
            let refuted = each_assignment(env, &b.pistil.binders, m.domains[v], true, &mut |env| {
                forces_all(m, v, env, &b.pistil.flowers)
                    && !b.petals.iter().any(|p| forces_garden_somehow(m, v, env, p))
            });
            !refuted
        }),
    }
}

/// `w, e ⊩ b`. The values of `e` must lie in the domain of `w`.
pub fn forces(m: &KripkeModel, w: usize, e: &Evaluation, b: &Bouquet) -> bool {
    forces_all(m, w, &mut Env::from(e), &b.flowers)
}

pub fn forces_flower_at(m: &KripkeModel, w: usize, e: &Evaluation, f: &Flower) -> bool {
    forces_flower(m, w, &mut Env::from(e), f)
}

/// Every evaluation of `vars` into the domain of `w`.
pub fn evaluations(m: &KripkeModel, w: usize, vars: &[Var]) -> Vec<Evaluation> {
    let mut out = Vec::new();
    let mut env = Env(Vec::new(), 0);
    each_assignment(&mut env, vars, m.domains[w], true, &mut |env| {
        out.push(Evaluation {
            values: env.0.iter().cloned().collect(),
            default: 0,
        });
        false
    });
    out
}

/// `premiss ⊨ conclusion` in `m`: at every world, under every evaluation of
/// the free variables, forcing the premiss forces the conclusion.
pub fn entails(m: &KripkeModel, premiss: &Bouquet, conclusion: &Bouquet) -> bool {
    let mut fv = free_vars(premiss);
    fv.extend(free_vars(conclusion));
    let fv: Vec<Var> = fv.into_iter().collect();
    (0..m.worlds()).all(|w| {
        let mut env = Env(Vec::new(), 0);
        !each_assignment(&mut env, &fv, m.domains[w], true, &mut |env| {
            forces_all(m, w, env, &premiss.flowers) && !forces_all(m, w, env, &conclusion.flowers)
        })
    })
}

pub fn valid_in(m: &KripkeModel, b: &Bouquet) -> bool {
    entails(m, &Bouquet::empty(), b)
}

/// A world and evaluation of a model where a bouquet is not forced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Countermodel {
    pub model: KripkeModel,
    pub world: usize,
    pub evaluation: BTreeMap<String, usize>,
}

impl Countermodel {
    pub fn evaluation(&self) -> Evaluation {
        Evaluation {
            values: self.evaluation.iter().map(|(k, v)| (Var::new(k), *v)).collect(),
            default: 0,
        }
    }

    /// Whether the witness really refutes `b`.
    pub fn refutes(&self, b: &Bouquet) -> bool {
        self.model.validate().is_ok()
            && self.world < self.model.worlds()
            && self.evaluation.values().all(|&v| v < self.model.domains[self.world])
            && !forces(&self.model, self.world, &self.evaluation(), b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("countermodels serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for KripkeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "worlds: {}", self.worlds())?;
        let mut edges = Vec::new();
        for a in 0..self.worlds() {
            for b in 0..self.worlds() {
                if a != b && self.order[a][b] {
                    edges.push(format!("{a}<={b}"));
                }
            }
        }
        writeln!(f, "order: {}", if edges.is_empty() { "-".into() } else { edges.join(" ") })?;
        for w in 0..self.worlds() {
            let mut facts = Vec::new();
            for (pred, tuples) in &self.interp[w] {
                for t in tuples {
                    if t.is_empty() {
                        facts.push(pred.clone());
                    } else {
                        let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                        facts.push(format!("{pred}({})", args.join(",")));
                    }
                }
            }
            let facts = if facts.is_empty() { "-".into() } else { facts.join(" ") };
            writeln!(f, "world {w}: domain {} | {facts}", self.domains[w])?;
        }
        Ok(())
    }
}

impl fmt::Display for Countermodel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.model)?;
        let vals: Vec<String> = self.evaluation.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(
            f,
            "refuted at: world {} [{}]",
            self.world,
            vals.join(" ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_bouquet, Signature};

    fn sig() -> Signature {
        Signature::from_pairs([("a", 0), ("b", 0), ("p", 1)])
    }

    fn parse(t: &str) -> Bouquet {
        parse_bouquet(t, &sig()).unwrap()
    }

    fn facts(list: &[&str]) -> BTreeMap<String, BTreeSet<Vec<usize>>> {
        list.iter().map(|a| (a.to_string(), BTreeSet::from([vec![]]))).collect()
    }

    /// `0 ≤ 1`, `a` true only at 1.
    fn lem_model() -> KripkeModel {
        KripkeModel::new(
            vec![vec![true, true], vec![false, true]],
            vec![1, 1],
            vec![facts(&[]), facts(&["a"])],
        )
        .unwrap()
    }

    #[test]
    fn validation_catches_broken_models() {
        let bad = KripkeModel::new(vec![vec![true, true], vec![false, true]], vec![1, 1], vec![facts(&["a"]), facts(&[])]);
        assert!(matches!(bad, Err(ModelError::InterpNotMonotone { .. })));
        let bad = KripkeModel::new(vec![vec![false]], vec![1], vec![facts(&[])]);
        assert_eq!(bad, Err(ModelError::NotReflexive(0)));
        let bad = KripkeModel::new(vec![vec![true, true], vec![false, true]], vec![2, 1], vec![facts(&[]), facts(&[])]);
        assert_eq!(bad, Err(ModelError::DomainNotMonotone(0, 1)));
    }

    #[test]
    fn empty_bouquet_is_forced_and_falsum_is_not() {
        let m = lem_model();
        for w in 0..2 {
            assert!(forces(&m, w, &Evaluation::default(), &Bouquet::empty()));
            assert!(!forces(&m, w, &Evaluation::default(), &parse("[|>]")));
        }
    }

    #[test]
    fn excluded_middle_fails_at_the_root() {
        let m = lem_model();
        let lem = parse("[|> a ; [a |>]]");
        assert!(!forces(&m, 0, &Evaluation::default(), &lem));
        assert!(forces(&m, 1, &Evaluation::default(), &lem));
        assert!(!entails(&m, &Bouquet::empty(), &lem));
    }

    #[test]
    fn entailment_basics() {
        let m = lem_model();
        let phi = parse("[a |> b], a");
        assert!(entails(&m, &phi, &Bouquet::empty()));
        assert!(entails(&m, &phi, &phi));
    }

    #[test]
    fn quantifiers_range_over_the_later_domain() {
        // 0 ≤ 1, domains 1 and 2, p(0) at both worlds.
        let mut i0 = BTreeMap::new();
        i0.insert("p".to_string(), BTreeSet::from([vec![0]]));
        let m = KripkeModel::new(vec![vec![true, true], vec![false, true]], vec![1, 2], vec![i0.clone(), i0]).unwrap();
        let all_p = parse("[x. |> p(x)]");
        assert!(!forces(&m, 0, &Evaluation::default(), &all_p));
        let some_p = parse("[|> x. p(x)]");
        assert!(forces(&m, 0, &Evaluation::default(), &some_p));
    }

    #[test]
    fn update_laws() {
        let x = Var::new("x");
        let y = Var::new("y");
        let f = Evaluation {
            values: BTreeMap::from([(x.clone(), 1)]),
            default: 0,
        };
        let g = Evaluation {
            values: BTreeMap::from([(y.clone(), 2)]),
            default: 0,
        };
        assert_eq!(f.update(&[], &g), f);
        assert!(f.update(&[x.clone(), y.clone()], &f).agrees_on(&f, [&x, &y]));
        let u = f.update(std::slice::from_ref(&y), &g);
        assert_eq!((u.get(&x), u.get(&y)), (1, 2));
    }

    #[test]
    fn countermodel_formats() {
        let c = Countermodel {
            model: lem_model(),
            world: 0,
            evaluation: BTreeMap::new(),
        };
        assert_eq!(
            c.to_string(),
            "worlds: 2\norder: 0<=1\nworld 0: domain 1 | -\nworld 1: domain 1 | a\nrefuted at: world 0 []\n"
        );
        assert_eq!(
            c.to_json(),
            r#"{"model":{"order":[[true,true],[false,true]],"domains":[1,1],"interp":[{},{"a":[[]]}]},"world":0,"evaluation":{}}"#
        );
        assert_eq!(Countermodel::from_json(&c.to_json()).unwrap(), c);
        assert!(c.refutes(&parse("[|> a ; [a |>]]")));
    }
}
