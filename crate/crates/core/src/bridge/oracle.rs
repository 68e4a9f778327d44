//! Textbook Kripke forcing for formulas, written independently of flower
//! forcing so the two can be checked against each other.

use std::collections::{BTreeMap, BTreeSet};

use super::Formula;
use crate::semantics::KripkeModel;
use crate::syntax::{Atom, Var};

/// `w, env ⊩ f`. Variables missing from `env` denote element 0.
pub fn formula_forces(m: &KripkeModel, w: usize, env: &BTreeMap<Var, usize>, f: &Formula) -> bool {
    match f {
        Formula::Atom(a) => {
            let t: Vec<usize> = a.args.iter().map(|x| env.get(x).copied().unwrap_or(0)).collect();
            m.interp[w].get(&*a.pred).is_some_and(|s| s.contains(&t))
        }
        Formula::Top => true,
        Formula::Bottom => false,
        Formula::And(a, b) => formula_forces(m, w, env, a) && formula_forces(m, w, env, b),
        Formula::Or(a, b) => formula_forces(m, w, env, a) || formula_forces(m, w, env, b),
        Formula::Implies(a, b) => (0..m.domains.len())
            .filter(|&v| m.order[w][v])
            .all(|v| !formula_forces(m, v, env, a) || formula_forces(m, v, env, b)),
        Formula::Forall(x, a) => (0..m.domains.len()).filter(|&v| m.order[w][v]).all(|v| {
            (0..m.domains[v]).all(|d| {
                let mut e = env.clone();
                e.insert(x.clone(), d);
                formula_forces(m, v, &e, a)
            })
        }),
        Formula::Exists(x, a) => (0..m.domains[w]).any(|d| {
            let mut e = env.clone();
            e.insert(x.clone(), d);
            formula_forces(m, w, &e, a)
        }),
    }
}

fn free(f: &Formula, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match f {
        Formula::Atom(Atom { args, .. }) => out.extend(args.iter().filter(|x| !bound.contains(x)).cloned()),
        Formula::Top | Formula::Bottom => {}
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            free(a, bound, out);
            free(b, bound, out);
        }
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            bound.push(x.clone());
            free(a, bound, out);
            bound.pop();
        }
    }
}

/// Forced at every world under every evaluation of its free variables.
pub fn formula_valid_in(m: &KripkeModel, f: &Formula) -> bool {
    let mut fv = BTreeSet::new();
    free(f, &mut Vec::new(), &mut fv);
    let fv: Vec<Var> = fv.into_iter().collect();
    (0..m.domains.len()).all(|w| {
        let n = m.domains[w];
        let total = n.pow(fv.len() as u32);
        (0..total).all(|mut code| {
            let mut env = BTreeMap::new();
            for x in &fv {
                env.insert(x.clone(), code % n);
                code /= n;
            }
            formula_forces(m, w, &env, f)
        })
    })
}

/// Every propositional formula over `atoms`, `⊤` and `⊥` with depth at
/// most `max_depth` (leaves have depth 1).
pub fn enumerate_formulas(atoms: &[&str], max_depth: usize) -> Vec<Formula> {
    let mut levels: Vec<Vec<Formula>> = Vec::new();
    let mut leaves: Vec<Formula> = atoms.iter().map(|a| Formula::atom(a, &[])).collect();
    leaves.push(Formula::Top);
    leaves.push(Formula::Bottom);
    if max_depth == 0 {
        return Vec::new();
    }
    levels.push(leaves);
    for _ in 1..max_depth {
        let below: Vec<Formula> = levels.iter().flatten().cloned().collect();
        let last = levels.last().expect("nonempty");
        let mut next = Vec::new();
        for a in last {
            next.push(Formula::not(a.clone()));
        }
        for a in &below {
            for b in &below {
                if !last.contains(a) && !last.contains(b) {
                    continue;
                }
                next.push(Formula::and(a.clone(), b.clone()));
                next.push(Formula::or(a.clone(), b.clone()));
                next.push(Formula::implies(a.clone(), b.clone()));
            }
        }
        levels.push(next);
    }
    levels.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lem_model() -> KripkeModel {
        let mut top = BTreeMap::new();
        top.insert("a".to_string(), BTreeSet::from([vec![]]));
        KripkeModel::new(vec![vec![true, true], vec![false, true]], vec![1, 1], vec![BTreeMap::new(), top]).unwrap()
    }

    #[test]
    fn excluded_middle_and_double_negation() {
        let m = lem_model();
        let a = Formula::atom("a", &[]);
        let lem = Formula::or(a.clone(), Formula::not(a.clone()));
        assert!(!formula_valid_in(&m, &lem));
        assert!(formula_valid_in(&m, &Formula::not(Formula::not(lem))));
        assert!(formula_valid_in(&m, &Formula::implies(a.clone(), a)));
    }

    #[test]
    fn enumeration_counts() {
        // Depth 1: a, b, ⊤, ⊥. Depth 2 adds 4 negations and 3·4·4 binaries.
        assert_eq!(enumerate_formulas(&["a", "b"], 1).len(), 4);
        assert_eq!(enumerate_formulas(&["a", "b"], 2).len(), 4 + 4 + 48);
        let d3 = enumerate_formulas(&["a", "b"], 3);
        assert_eq!(d3.len(), 56 + 52 + 3 * (56 * 56 - 4 * 4));
        assert!(d3.iter().all(|f| f.depth() <= 3));
    }
}
