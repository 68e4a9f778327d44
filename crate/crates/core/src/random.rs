//! Seeded random terms for fuzzing and property tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::syntax::{canonicalize, Atom, Bouquet, Flower, Garden, Signature, Var};

/// A deterministic generator from a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape bounds for random bouquets.
#[derive(Clone, Debug)]
pub struct TermGen {
    pub preds: Vec<(String, usize)>,
    /// Variables that may occur free.
    pub free: Vec<Var>,
    pub max_depth: usize,
    /// Maximum flowers per area.
    pub max_width: usize,
    pub max_petals: usize,
    /// Chance that a garden binds one more variable.
    pub binder_chance: f64,
}

const BINDER_NAMES: [&str; 4] = ["x", "y", "z", "u"];

impl TermGen {
    pub fn new(sig: &Signature) -> Self {
        TermGen {
            preds: sig.iter().map(|(n, a)| (n.to_string(), a)).collect(),
            free: vec![Var::new("v"), Var::new("w")],
            max_depth: 3,
            max_width: 3,
            max_petals: 2,
            binder_chance: 0.3,
        }
    }

    /// Propositional terms over `atoms`.
    pub fn propositional(atoms: &[&str]) -> Self {
        TermGen {
            preds: atoms.iter().map(|a| (a.to_string(), 0)).collect(),
            free: Vec::new(),
            binder_chance: 0.0,
            ..TermGen::new(&Signature::new())
        }
    }

    /// A canonical random bouquet.
    pub fn bouquet(&self, rng: &mut impl Rng) -> Bouquet {
        let mut scope = self.free.clone();
        let width = rng.gen_range(0..=self.max_width);
        let flowers = (0..width)
            .filter_map(|_| self.flower(rng, self.max_depth, &mut scope))
            .collect();
        canonicalize(&Bouquet::new(flowers))
    }

    /// A random flower of depth at most `depth`, with free variables drawn
    /// from `scope`. `None` only when `depth` is 0 and no atom fits.
    pub fn flower(&self, rng: &mut impl Rng, depth: usize, scope: &mut Vec<Var>) -> Option<Flower> {
        if depth == 0 || rng.gen_bool(0.5) {
            if let Some(a) = self.atom(rng, scope) {
                return Some(a);
            }
            if depth == 0 {
                return None;
            }
        }
        let pistil = self.garden(rng, depth - 1, scope);
        let mark = scope.len();
        scope.extend(pistil.binders.iter().cloned());
        let n = rng.gen_range(0..=self.max_petals);
        let petals = (0..n).map(|_| self.garden(rng, depth - 1, scope)).collect();
        scope.truncate(mark);
        Some(Flower::bloom(pistil, petals))
    }

    fn garden(&self, rng: &mut impl Rng, depth: usize, scope: &mut Vec<Var>) -> Garden {
        let mut binders = Vec::new();
        while binders.len() < 2 && rng.gen_bool(self.binder_chance) {
            binders.push(Var::new(BINDER_NAMES.choose(rng).expect("nonempty")));
        }
        binders.sort();
        binders.dedup();
        let mark = scope.len();
        scope.extend(binders.iter().cloned());
        let width = rng.gen_range(0..=self.max_width.min(2));
        let flowers = (0..width).filter_map(|_| self.flower(rng, depth, scope)).collect();
        scope.truncate(mark);
        Garden::new(binders, flowers)
    }

    fn atom(&self, rng: &mut impl Rng, scope: &[Var]) -> Option<Flower> {
        let usable: Vec<&(String, usize)> = self
            .preds
            .iter()
            .filter(|(_, a)| *a == 0 || !scope.is_empty())
            .collect();
        let (name, arity) = usable.choose(rng)?;
        let args: Vec<Var> = (0..*arity)
            .map(|_| scope.choose(rng).expect("scope checked").clone())
            .collect();
        Some(Flower::Atom(Atom::new(name, args)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{depth, satisfies_barendregt};

    #[test]
    fn same_seed_same_term() {
        let g = TermGen::new(&Signature::from_pairs([("p", 1), ("a", 0)]));
        assert_eq!(g.bouquet(&mut rng(7)), g.bouquet(&mut rng(7)));
    }

    #[test]
    fn terms_are_canonical_and_bounded() {
        let g = TermGen::new(&Signature::from_pairs([("p", 1), ("r", 2), ("a", 0)]));
        let mut r = rng(1);
        for _ in 0..200 {
            let b = g.bouquet(&mut r);
            assert!(satisfies_barendregt(&b));
            assert!(b.flowers.iter().all(|f| depth(f) <= g.max_depth));
        }
    }
}
