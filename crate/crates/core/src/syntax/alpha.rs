//! Alpha-equivalence up to multiset reordering.
//!
//! Matching is a backtracking search written in continuation-passing style:
//! every choice point (which right-hand flower or petal a left-hand one is
//! paired with, and which binder a bound variable maps to) calls the
//! continuation for the rest of the term and undoes its bindings when the
//! continuation fails. Variables free in the matched terms are rigid.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use super::{Bouquet, Flower, Garden, Var};

/// Position of a flower or garden inside a bouquet.
///
/// The top-level area is `[]`; flower `i` of an area `A` is `A ++ [i]`; the
/// pistil of a flower `F` is `F ++ [0]` and its petal `k` is `F ++ [k + 1]`.
pub type Address = Vec<u32>;

/// The correspondence found by a successful match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlphaWitness {
    /// Left flower address to right flower address.
    pub flowers: HashMap<Address, Address>,
    /// (left flower address, petal index) to right petal index.
    pub petals: HashMap<(Address, usize), usize>,
    /// (left garden address, binder) to the matching right binder.
    pub binders: HashMap<(Address, Var), Var>,
}

pub fn alpha_eq(a: &Bouquet, b: &Bouquet) -> bool {
    a == b || Matcher::new(false).run(&a.flowers, &b.flowers)
}

pub fn alpha_eq_flower(a: &Flower, b: &Flower) -> bool {
    a == b
        || (skeleton(a) == skeleton(b)
            && Matcher::new(false).run(std::slice::from_ref(a), std::slice::from_ref(b)))
}

pub fn alpha_witness(a: &[Flower], b: &[Flower]) -> Option<AlphaWitness> {
    let mut m = Matcher::new(true);
    let mut found = None;
    let ok = m.flowers(a, &Vec::new(), b, &Vec::new(), &mut |m: &mut Matcher| {
        found = Some(m.witness());
        true
    });
    if ok {
        found
    } else {
        None
    }
}

/// Name-insensitive shape hash; equal for alpha-equivalent flowers.
fn skeleton(f: &Flower) -> u64 {
    let mut h = DefaultHasher::new();
    match f {
        Flower::Atom(a) => {
            0u8.hash(&mut h);
            a.pred.hash(&mut h);
            a.args.len().hash(&mut h);
        }
        Flower::Bloom(b) => {
            1u8.hash(&mut h);
            garden_skeleton(&b.pistil).hash(&mut h);
            let mut petals: Vec<u64> = b.petals.iter().map(garden_skeleton).collect();
            petals.sort_unstable();
            petals.hash(&mut h);
        }
    }
    h.finish()
}

fn garden_skeleton(g: &Garden) -> u64 {
    let mut h = DefaultHasher::new();
    g.binders.len().hash(&mut h);
    let mut inner: Vec<u64> = g.flowers.iter().map(skeleton).collect();
    inner.sort_unstable();
    inner.hash(&mut h);
    h.finish()
}

fn child(addr: &Address, i: usize) -> Address {
    let mut out = addr.clone();
    out.push(i as u32);
    out
}

type K<'k> = &'k mut dyn FnMut(&mut Matcher) -> bool;

struct Slot {
    scope: usize,
    partner: Option<usize>,
    name: Var,
    garden: Address,
}

struct Scope {
    id: usize,
    pushed_a: usize,
    pushed_b: usize,
}

struct Matcher {
    record: bool,
    env_a: Vec<(Var, usize)>,
    env_b: Vec<(Var, usize)>,
    slots_a: Vec<Slot>,
    slots_b: Vec<Slot>,
    next_scope: usize,
    /// Assigned (left slot, right slot) pairs, in order.
    trail: Vec<(usize, usize)>,
    flower_log: Vec<(Address, Address)>,
    petal_log: Vec<((Address, usize), usize)>,
}

type Mark = (usize, usize, usize);

impl Matcher {
    fn new(record: bool) -> Self {
        Matcher {
            record,
            env_a: Vec::new(),
            env_b: Vec::new(),
            slots_a: Vec::new(),
            slots_b: Vec::new(),
            next_scope: 0,
            trail: Vec::new(),
            flower_log: Vec::new(),
            petal_log: Vec::new(),
        }
    }

    fn run(&mut self, a: &[Flower], b: &[Flower]) -> bool {
        self.flowers(a, &Vec::new(), b, &Vec::new(), &mut |_| true)
    }

    fn mark(&self) -> Mark {
        (self.trail.len(), self.flower_log.len(), self.petal_log.len())
    }

    fn undo(&mut self, mark: Mark) {
        while self.trail.len() > mark.0 {
            let (x, y) = self.trail.pop().unwrap();
            self.slots_a[x].partner = None;
            self.slots_b[y].partner = None;
        }
        self.flower_log.truncate(mark.1);
        self.petal_log.truncate(mark.2);
    }

    fn assign(&mut self, x: usize, y: usize) {
        self.slots_a[x].partner = Some(y);
        self.slots_b[y].partner = Some(x);
        self.trail.push((x, y));
    }

    fn witness(&self) -> AlphaWitness {
        let mut w = AlphaWitness {
            flowers: self.flower_log.iter().cloned().collect(),
            petals: self.petal_log.iter().cloned().collect(),
            binders: HashMap::new(),
        };
        for slot in &self.slots_a {
            if let Some(p) = slot.partner {
                w.binders.insert(
                    (slot.garden.clone(), slot.name.clone()),
                    self.slots_b[p].name.clone(),
                );
            }
        }
        w
    }

    fn open_scope(&mut self, a: &Garden, ga: &Address, b: &Garden, gb: &Address) -> Option<Scope> {
        if a.binders.len() != b.binders.len() {
            return None;
        }
        let id = self.next_scope;
        self.next_scope += 1;
        for x in &a.binders {
            self.slots_a.push(Slot {
                scope: id,
                partner: None,
                name: x.clone(),
                garden: ga.clone(),
            });
            self.env_a.push((x.clone(), self.slots_a.len() - 1));
        }
        for y in &b.binders {
            self.slots_b.push(Slot {
                scope: id,
                partner: None,
                name: y.clone(),
                garden: gb.clone(),
            });
            self.env_b.push((y.clone(), self.slots_b.len() - 1));
        }
        Some(Scope {
            id,
            pushed_a: a.binders.len(),
            pushed_b: b.binders.len(),
        })
    }

    fn discard_scope(&mut self, scope: &Scope) {
        let la = self.env_a.len() - scope.pushed_a;
        self.env_a.truncate(la);
        let lb = self.env_b.len() - scope.pushed_b;
        self.env_b.truncate(lb);
    }

    /// Pairs up the binders of `scope` that no atom constrained, pops the
    /// scope and continues.
    fn close_scope(&mut self, scope: &Scope, k: K) -> bool {
        let a_top = self.env_a.len();
        let b_top = self.env_b.len();
        let free_a: Vec<usize> = self.env_a[a_top - scope.pushed_a..]
            .iter()
            .map(|(_, s)| *s)
            .filter(|s| self.slots_a[*s].partner.is_none())
            .collect();
        let free_b: Vec<usize> = self.env_b[b_top - scope.pushed_b..]
            .iter()
            .map(|(_, s)| *s)
            .filter(|s| self.slots_b[*s].partner.is_none())
            .collect();
        debug_assert_eq!(free_a.len(), free_b.len());
        debug_assert!(free_a.iter().all(|s| self.slots_a[*s].scope == scope.id));
        for (x, y) in free_a.into_iter().zip(free_b) {
            self.assign(x, y);
        }
        let saved_a = self.env_a.split_off(a_top - scope.pushed_a);
        let saved_b = self.env_b.split_off(b_top - scope.pushed_b);
        if k(self) {
            return true;
        }
        self.env_a.extend(saved_a);
        self.env_b.extend(saved_b);
        false
    }

    fn lookup(env: &[(Var, usize)], x: &Var) -> Option<usize> {
        env.iter().rev().find(|(n, _)| n == x).map(|(_, s)| *s)
    }

    fn var_pair(&mut self, u: &Var, v: &Var) -> bool {
        match (Self::lookup(&self.env_a, u), Self::lookup(&self.env_b, v)) {
            (None, None) => u == v,
            (Some(x), Some(y)) => match (self.slots_a[x].partner, self.slots_b[y].partner) {
                (Some(p), _) => p == y,
                (None, Some(_)) => false,
                (None, None) => {
                    if self.slots_a[x].scope == self.slots_b[y].scope {
                        self.assign(x, y);
                        true
                    } else {
                        false
                    }
                }
            },
            _ => false,
        }
    }

    fn flowers(&mut self, a: &[Flower], aa: &Address, b: &[Flower], ba: &Address, k: K) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let ska: Vec<u64> = a.iter().map(skeleton).collect();
        let skb: Vec<u64> = b.iter().map(skeleton).collect();
        let mut sa = ska.clone();
        let mut sb = skb.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return false;
        }
        let mut used = vec![false; b.len()];
        let mut args = FlowerArgs {
            a,
            ska: &ska,
            aa,
            b,
            skb: &skb,
            ba,
        };
        self.flowers_from(0, &mut args, &mut used, k)
    }

    fn flowers_from(&mut self, i: usize, args: &mut FlowerArgs, used: &mut Vec<bool>, k: K) -> bool {
        if i == args.a.len() {
            return k(self);
        }
        let mut tried: Vec<usize> = Vec::new();
        for j in 0..args.b.len() {
            if used[j] || args.ska[i] != args.skb[j] {
                continue;
            }
            // Syntactically identical candidates behave identically.
            if tried.iter().any(|&t| args.b[t] == args.b[j]) {
                continue;
            }
            tried.push(j);
            used[j] = true;
            let mark = self.mark();
            let fa = child(args.aa, i);
            let fb = child(args.ba, j);
            if self.record {
                self.flower_log.push((fa.clone(), fb.clone()));
            }
            let (a_i, b_j) = (&args.a[i], &args.b[j]);
            let ok = self.flower(a_i, &fa, b_j, &fb, &mut |m: &mut Matcher| {
                m.flowers_from(i + 1, args, used, k)
            });
            if ok {
                return true;
            }
            self.undo(mark);
            used[j] = false;
        }
        false
    }

    fn flower(&mut self, a: &Flower, fa: &Address, b: &Flower, fb: &Address, k: K) -> bool {
        match (a, b) {
            (Flower::Atom(x), Flower::Atom(y)) => {
                if x.pred != y.pred || x.args.len() != y.args.len() {
                    return false;
                }
                for (u, v) in x.args.iter().zip(&y.args) {
                    if !self.var_pair(u, v) {
                        return false;
                    }
                }
                k(self)
            }
            (Flower::Bloom(x), Flower::Bloom(y)) => {
                if x.petals.len() != y.petals.len() {
                    return false;
                }
                let pa = child(fa, 0);
                let pb = child(fb, 0);
                let Some(scope) = self.open_scope(&x.pistil, &pa, &y.pistil, &pb) else {
                    return false;
                };
                let ok = self.flowers(&x.pistil.flowers, &pa, &y.pistil.flowers, &pb, &mut |m| {
                    let mut used = vec![false; y.petals.len()];
                    m.petals_from(0, &x.petals, fa, &y.petals, fb, &mut used, &mut |m| {
                        m.close_scope(&scope, k)
                    })
                });
                if !ok {
                    self.discard_scope(&scope);
                }
                ok
            }
            _ => false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn petals_from(
        &mut self,
        i: usize,
        a: &[Garden],
        fa: &Address,
        b: &[Garden],
        fb: &Address,
        used: &mut Vec<bool>,
        k: K,
    ) -> bool {
        if i == a.len() {
            return k(self);
        }
        let ska = garden_skeleton(&a[i]);
        let mut tried: Vec<usize> = Vec::new();
        for j in 0..b.len() {
            if used[j] || garden_skeleton(&b[j]) != ska {
                continue;
            }
            if tried.iter().any(|&t| b[t] == b[j]) {
                continue;
            }
            tried.push(j);
            used[j] = true;
            let mark = self.mark();
            if self.record {
                self.petal_log.push(((fa.clone(), i), j));
            }
            let ga = child(fa, i + 1);
            let gb = child(fb, j + 1);
            let ok = match self.open_scope(&a[i], &ga, &b[j], &gb) {
                None => false,
                Some(scope) => {
                    let ok = self.flowers(&a[i].flowers, &ga, &b[j].flowers, &gb, &mut |m| {
                        m.close_scope(&scope, &mut |m| m.petals_from(i + 1, a, fa, b, fb, used, k))
                    });
                    if !ok {
                        self.discard_scope(&scope);
                    }
                    ok
                }
            };
            if ok {
                return true;
            }
            self.undo(mark);
            used[j] = false;
        }
        false
    }
}

struct FlowerArgs<'x> {
    a: &'x [Flower],
    ska: &'x [u64],
    aa: &'x Address,
    b: &'x [Flower],
    skb: &'x [u64],
    ba: &'x Address,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_bouquet_raw, Signature};

    fn sig() -> Signature {
        Signature::from_pairs([("p", 1), ("q", 1), ("s", 2), ("a", 0), ("b", 0)])
    }

    fn parse(t: &str) -> Bouquet {
        parse_bouquet_raw(t, &sig()).unwrap()
    }

    #[test]
    fn binder_renaming() {
        assert!(alpha_eq(&parse("[x. p(x) |>]"), &parse("[y. p(y) |>]")));
    }

    #[test]
    fn free_variables_are_rigid() {
        assert!(!alpha_eq(&parse("p(x)"), &parse("p(y)")));
        assert!(!alpha_eq(&parse("[x. p(y) |>]"), &parse("[y. p(y) |>]")));
    }

    #[test]
    fn multiset_reordering() {
        let ab = Bouquet::new(vec![Flower::atom("a", &[]), Flower::atom("b", &[])]);
        let ba = Bouquet::new(vec![Flower::atom("b", &[]), Flower::atom("a", &[])]);
        assert!(alpha_eq(&ab, &ba));
    }

    #[test]
    fn binder_sets_match_in_any_order() {
        assert!(alpha_eq(&parse("[x, y. s(x, y) |>]"), &parse("[u, v. s(v, u) |>]")));
        assert!(!alpha_eq(&parse("[x, y. s(x, y) |>]"), &parse("[u, v. s(u, u) |>]")));
    }

    #[test]
    fn pistil_binders_scope_over_petals() {
        assert!(alpha_eq(
            &parse("[x. p(x) |> q(x) ; y. s(x, y)]"),
            &parse("[u. p(u) |> v. s(u, v) ; q(u)]")
        ));
        assert!(!alpha_eq(
            &parse("[x. p(x) |> q(x)]"),
            &parse("[u. p(u) |> u'. q(u')]")
        ));
    }

    #[test]
    fn backtracking_through_sibling_choices() {
        // The first pairing of the two blooms is wrong; matching must retry.
        let a = parse("[x. p(x), q(x) |>], [y. p(y) |> q(y)]");
        let b = parse("[u. p(u) |> q(u)], [v. q(v), p(v) |>]");
        assert!(alpha_eq(&a, &b));
    }

    #[test]
    fn shadowing_is_lexical() {
        // Not Barendregt: the inner x shadows the outer one.
        let a = parse("[x. |> [x. p(x) |>], q(x)]");
        let b = parse("[u. |> [v. p(v) |>], q(u)]");
        assert!(alpha_eq(&a, &b));
        let c = parse("[u. |> [v. p(u) |>], q(u)]");
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn witness_maps_positions_and_binders() {
        let a = parse("a, [x. p(x) |> q(x)]");
        let b = parse("[y. p(y) |> q(y)], a");
        let w = alpha_witness(&a.flowers, &b.flowers).unwrap();
        assert_eq!(w.flowers[&vec![0]], vec![1]);
        assert_eq!(w.flowers[&vec![1]], vec![0]);
        assert_eq!(w.binders[&(vec![1, 0], Var::new("x"))], Var::new("y"));
    }
}
