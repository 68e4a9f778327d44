//! Bounded model enumeration and countermodel search.
//!
//! Orders are partial orders whose arrows point from lower to higher world
//! index. Any finite Kripke structure is forcing-equivalent to one of these:
//! worlds of a cycle force the same flowers and collapse, and a finite
//! partial order has a linear extension.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{evaluations, forces, Countermodel, KripkeModel};
use crate::syntax::{free_vars, Bouquet, Signature, Var};

/// At most `worlds` worlds and `domain` elements per world.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub worlds: usize,
    pub domain: usize,
}

impl Bounds {
    pub fn new(worlds: usize, domain: usize) -> Self {
        Bounds { worlds, domain }
    }
}

type Interp = BTreeMap<String, BTreeSet<Vec<usize>>>;

fn transitive_closure(order: &mut [Vec<bool>]) {
    let n = order.len();
    for k in 0..n {
        for i in 0..n {
            if order[i][k] {
                for j in 0..n {
                    if order[k][j] {
                        order[i][j] = true;
                    }
                }
            }
        }
    }
}

/// Upward-pointing partial orders on `n` worlds.
fn orders(n: usize) -> Vec<Vec<Vec<bool>>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let mut o = vec![vec![false; n]; n];
        for (i, row) in o.iter_mut().enumerate() {
            row[i] = true;
        }
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                o[i][j] = true;
            }
        }
        let before = o.clone();
        transitive_closure(&mut o);
        if o == before {
            out.push(o);
        }
    }
    out
}

/// Domain sizes in `1..=max`, non-decreasing along the order.
fn domain_vectors(order: &[Vec<bool>], max: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn go(w: usize, order: &[Vec<bool>], max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if w == cur.len() {
            out.push(cur.clone());
            return;
        }
        let lo = (0..w).filter(|&v| order[v][w]).map(|v| cur[v]).max().unwrap_or(1);
        for d in lo..=max {
            cur[w] = d;
            go(w + 1, order, max, cur, out);
        }
    }
    go(0, order, max, &mut cur, &mut out);
    out
}

fn tuples(size: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..size).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Monotone per-world extensions of one predicate.
fn extensions(order: &[Vec<bool>], domains: &[usize], arity: usize) -> Vec<Vec<BTreeSet<Vec<usize>>>> {
    let mut out = Vec::new();
    fn go(
        w: usize,
        order: &[Vec<bool>],
        domains: &[usize],
        arity: usize,
        cur: &mut Vec<BTreeSet<Vec<usize>>>,
        out: &mut Vec<Vec<BTreeSet<Vec<usize>>>>,
    ) {
        if w == domains.len() {
            out.push(cur.clone());
            return;
        }
        let floor: BTreeSet<Vec<usize>> = (0..w).filter(|&v| order[v][w]).flat_map(|v| cur[v].iter().cloned()).collect();
        let optional: Vec<Vec<usize>> = tuples(domains[w], arity).into_iter().filter(|t| !floor.contains(t)).collect();
        for mask in 0u64..(1 << optional.len()) {
            let mut s = floor.clone();
            s.extend(optional.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone()));
            cur.push(s);
            go(w + 1, order, domains, arity, cur, out);
            cur.pop();
        }
    }
    go(0, order, domains, arity, &mut Vec::new(), &mut out);
    out
}

/// Every model within `bounds` over the predicates of `sig`, smaller models
/// first. Isomorphic copies may repeat.
pub fn enumerate_models(bounds: Bounds, sig: &Signature) -> impl Iterator<Item = KripkeModel> {
    let preds: Vec<(String, usize)> = sig.iter().map(|(n, a)| (n.to_string(), a)).collect();
    (1..=bounds.worlds.max(1)).flat_map(move |n| {
        let preds = preds.clone();
        let frames: Vec<(Vec<Vec<bool>>, Vec<usize>)> = orders(n)
            .into_iter()
            .flat_map(|o| {
                domain_vectors(&o, bounds.domain.max(1))
                    .into_iter()
                    .map(move |d| (o.clone(), d))
            })
            .collect();
        frames.into_iter().flat_map(move |(order, domains)| {
            let choices: Vec<Vec<Vec<BTreeSet<Vec<usize>>>>> = preds
                .iter()
                .map(|(_, a)| extensions(&order, &domains, *a))
                .collect();
            Product::new(choices.iter().map(Vec::len).collect()).map({
                let preds = preds.clone();
                let order = order.clone();
                let domains = domains.clone();
                move |idx| {
                    let mut interp: Vec<Interp> = vec![BTreeMap::new(); domains.len()];
                    for (p, &i) in idx.iter().enumerate() {
                        for (w, s) in choices[p][i].iter().enumerate() {
                            if !s.is_empty() {
                                interp[w].insert(preds[p].0.clone(), s.clone());
                            }
                        }
                    }
                    KripkeModel {
                        order: order.clone(),
                        domains: domains.clone(),
                        interp,
                    }
                }
            })
        })
    })
}

/// Odometer over index vectors `[0, sizes[i])`.
struct Product {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Product {
    fn new(sizes: Vec<usize>) -> Self {
        let next = if sizes.contains(&0) {
            None
        } else {
            Some(vec![0; sizes.len()])
        };
        Product { sizes, next }
    }
}

impl Iterator for Product {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut n = cur.clone();
        for i in (0..n.len()).rev() {
            n[i] += 1;
            if n[i] < self.sizes[i] {
                self.next = Some(n);
                return Some(cur);
            }
            n[i] = 0;
        }
        Some(cur)
    }
}

/// A uniformly shaped random model within `bounds`.
pub fn random_model(rng: &mut impl Rng, bounds: Bounds, sig: &Signature) -> KripkeModel {
    let n = rng.gen_range(1..=bounds.worlds.max(1));
    let mut order = vec![vec![false; n]; n];
    for (i, row) in order.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = i == j || (i < j && rng.gen_bool(0.5));
        }
    }
    transitive_closure(&mut order);
    let mut domains = vec![0; n];
    for w in 0..n {
        let lo = (0..w).filter(|&v| order[v][w]).map(|v| domains[v]).max().unwrap_or(1);
        domains[w] = rng.gen_range(lo..=bounds.domain.max(lo));
    }
    let mut interp: Vec<Interp> = vec![BTreeMap::new(); n];
    for (pred, arity) in sig.iter() {
        for w in 0..n {
            let mut s: BTreeSet<Vec<usize>> = (0..w)
                .filter(|&v| order[v][w])
                .flat_map(|v| interp[v].get(pred).cloned().unwrap_or_default())
                .collect();
            for t in tuples(domains[w], arity) {
                if rng.gen_bool(0.4) {
                    s.insert(t);
                }
            }
            if !s.is_empty() {
                interp[w].insert(pred.to_string(), s);
            }
        }
    }
    KripkeModel { order, domains, interp }
}

/// The first world and evaluation, in enumeration order, where `b` is not
/// forced.
pub fn find_countermodel(b: &Bouquet, bounds: Bounds) -> Option<Countermodel> {
    let sig = Signature::of_flowers(&b.flowers);
    let fv: Vec<Var> = free_vars(b).into_iter().collect();
    for m in enumerate_models(bounds, &sig) {
        for w in 0..m.worlds() {
            for e in evaluations(&m, w, &fv) {
                if !forces(&m, w, &e, b) {
                    let evaluation = e.values.iter().map(|(k, v)| (k.name().to_string(), *v)).collect();
                    return Some(Countermodel {
                        model: m,
                        world: w,
                        evaluation,
                    });
                }
            }
        }
    }
    None
}
