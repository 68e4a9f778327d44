use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use flowers::bridge::{decode, encode, formula_valid_in, Formula};
use flowers::calculus::{
    apply_rule, applicable_instances, areas, build_strong_deduction_fwd, check_derivation, is_proof, Derivation,
    RuleName,
};
use flowers::context::{resolve_area, split, Context, Path, Step};
use flowers::random::{rng, TermGen};
use flowers::semantics::{forces, forces_flower_at, random_model, valid_in, Bounds, Evaluation, KripkeModel};
use flowers::syntax::{
    alpha_eq, alpha_eq_flower, apply_subst, bound_vars, canonicalize, depth, digest, free_vars, freshen_binders,
    is_capture_avoiding, parse_bouquet, print_bouquet, satisfies_barendregt, Bouquet, Flower, Garden, Signature,
    Substitution, Var,
};

fn sig() -> Signature {
    Signature::from_pairs([("a", 0), ("b", 0), ("p", 1), ("q", 1)])
}

fn bouquet(seed: u64) -> Bouquet {
    TermGen::new(&sig()).bouquet(&mut rng(seed))
}

fn model(seed: u64) -> KripkeModel {
    random_model(&mut rng(seed), Bounds::new(3, 2), &sig())
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::atom("a", &[])),
        Just(Formula::atom("b", &[])),
        Just(Formula::atom("p", &["x"])),
        Just(Formula::atom("q", &["y"])),
        Just(Formula::Top),
        Just(Formula::Bottom),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner.clone().prop_map(Formula::not),
            (prop_oneof![Just("x"), Just("y")], inner.clone()).prop_map(|(x, a)| Formula::forall(x, a)),
            (prop_oneof![Just("x"), Just("y")], inner).prop_map(|(x, a)| Formula::exists(x, a)),
        ]
    })
}

/// Every flower position `(area, index)` of `b`.
fn positions(b: &Bouquet) -> Vec<(Vec<Step>, usize)> {
    areas(b)
        .into_iter()
        .flat_map(|steps| {
            let n = resolve_area(&b.flowers, &steps).unwrap().len();
            (0..n).map(move |i| (steps.clone(), i))
        })
        .collect()
}

/// Whether the flower at `pos` may pollinate the hole `hole`, by the
/// definition: a sibling of an area on the way down (other than the flower
/// entered there), or a pistil flower of a flower entered through a petal.
fn visible(pos: &(Vec<Step>, usize), hole: &[Step]) -> bool {
    let (area, i) = pos;
    if area.len() <= hole.len() && hole[..area.len()] == area[..] {
        return area.len() == hole.len() || hole[area.len()].flower() != *i;
    }
    if let Some((Step::Pistil { flower }, prefix)) = area.split_last() {
        if prefix.len() < hole.len() && hole[..prefix.len()] == prefix[..] {
            return matches!(hole[prefix.len()], Step::Petal { flower: f, .. } if f == *flower);
        }
    }
    false
}

fn flower_at<'b>(b: &'b Bouquet, pos: &(Vec<Step>, usize)) -> &'b Flower {
    &resolve_area(&b.flowers, &pos.0).unwrap()[pos.1]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn canonicalize_is_idempotent_and_barendregt(seed in any::<u64>()) {
        let b = bouquet(seed);
        let c = canonicalize(&b);
        prop_assert_eq!(&canonicalize(&c), &c);
        prop_assert!(satisfies_barendregt(&c));
        prop_assert!(alpha_eq(&b, &c));
    }

    #[test]
    fn renaming_binders_preserves_alpha_class(seed in any::<u64>()) {
        let b = bouquet(seed);
        let avoid: HashSet<Var> = free_vars(&b).into_iter().collect();
        let (renamed, _) = freshen_binders(&b.flowers, &avoid);
        let renamed = Bouquet::new(renamed);
        prop_assert!(alpha_eq(&b, &renamed));
        prop_assert!(alpha_eq(&canonicalize(&renamed), &b));
        prop_assert_eq!(free_vars(&renamed), free_vars(&b));
        let d = |b: &Bouquet| b.flowers.iter().map(depth).max().unwrap_or(0);
        prop_assert_eq!(d(&renamed), d(&b));
    }

    #[test]
    fn reordering_keeps_the_digest(seed in any::<u64>(), rot in any::<usize>()) {
        let b = bouquet(seed);
        let mut fs = b.flowers.clone();
        if !fs.is_empty() {
            let k = rot % fs.len();
            fs.rotate_left(k);
        }
        fs.reverse();
        prop_assert_eq!(digest(&canonicalize(&Bouquet::new(fs))), digest(&b));
    }

    #[test]
    fn free_variables_under_substitution(seed in any::<u64>(), target in prop_oneof![Just("v"), Just("w"), Just("u9")]) {
        let b = bouquet(seed);
        let s = Substitution::new([(Var::new("v"), Var::new(target))]);
        prop_assume!(is_capture_avoiding(&s, &b));
        let after = apply_subst(&s, &b).unwrap();
        let expected: BTreeSet<Var> = free_vars(&b).iter().map(|x| s.apply_var(x)).collect();
        prop_assert_eq!(free_vars(&after), expected);
        let d = |b: &Bouquet| b.flowers.iter().map(depth).max().unwrap_or(0);
        prop_assert_eq!(d(&after), d(&b));
        prop_assert_eq!(bound_vars(&after).len(), bound_vars(&b).len());
    }

    #[test]
    fn fill_after_split_is_identity(seed in any::<u64>(), pick in any::<prop::sample::Index>(), mask in any::<u8>()) {
        let b = bouquet(seed);
        let all = areas(&b);
        let steps = all[pick.index(all.len())].clone();
        let n = resolve_area(&b.flowers, &steps).unwrap().len();
        let sel: Vec<usize> = (0..n).filter(|i| mask >> (i % 8) & 1 == 1).collect();
        for path in [Path::area(steps.clone()), Path::select(steps.clone(), sel)] {
            let (ctx, content) = split(&b, &path).unwrap();
            prop_assert_eq!(ctx.fill(&content.flowers), b.clone());
        }
    }

    #[test]
    fn composition_adds_inversions(s1 in any::<u64>(), s2 in any::<u64>(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let (b1, b2) = (bouquet(s1), bouquet(s2));
        let a1 = areas(&b1);
        let a2 = areas(&b2);
        let outer = Context { frame: b1.clone(), hole: a1[i.index(a1.len())].clone() };
        let inner = Context { frame: b2.clone(), hole: a2[j.index(a2.len())].clone() };
        let both = Context::compose(&outer, &inner);
        prop_assert_eq!(both.inversions(), outer.inversions() + inner.inversions());
        let x = vec![Flower::atom("a", &[])];
        prop_assert_eq!(both.fill_raw(&x), outer.fill_raw(&inner.fill_raw(&x).flowers));
    }

    #[test]
    fn pollination_matches_the_quadratic_reference(seed in any::<u64>()) {
        let b = bouquet(seed);
        let all = positions(&b);
        for hole in areas(&b) {
            let ctx = Context { frame: b.clone(), hole: hole.clone() };
            for pos in &all {
                let phi = flower_at(&b, pos);
                let reference = all.iter().any(|q| visible(q, &hole) && alpha_eq_flower(flower_at(&b, q), phi));
                prop_assert_eq!(ctx.pollinates(phi), reference, "{} at {:?}", phi, hole);
            }
        }
    }

    #[test]
    fn forcing_is_monotone(s1 in any::<u64>(), s2 in any::<u64>()) {
        let b = bouquet(s1);
        let m = model(s2);
        let fv: Vec<Var> = free_vars(&b).into_iter().collect();
        for w in 0..m.worlds() {
            for e in flowers::semantics::evaluations(&m, w, &fv) {
                if forces(&m, w, &e, &b) {
                    for v in m.above(w) {
                        prop_assert!(forces(&m, v, &e, &b));
                    }
                }
            }
        }
    }

    #[test]
    fn negation_mirrors_forcing(s1 in any::<u64>(), s2 in any::<u64>()) {
        // w ⊩ (Φ ⫐) iff no world above w forces Φ.
        let b = bouquet(s1);
        let m = model(s2);
        let neg = Flower::bloom(Garden::of(b.flowers.clone()), vec![]);
        let e = Evaluation::default();
        for w in 0..m.worlds() {
            let expected = m.above(w).all(|v| !forces(&m, v, &e, &b));
            prop_assert_eq!(forces_flower_at(&m, w, &e, &neg), expected);
        }
    }

    #[test]
    fn encode_is_barendregt_and_equivalid(f in formula(), s in any::<u64>()) {
        let b = encode(&f);
        prop_assert!(satisfies_barendregt(&b));
        let m = model(s);
        prop_assert_eq!(valid_in(&m, &b), formula_valid_in(&m, &f));
        prop_assert_eq!(valid_in(&m, &encode(&decode(&b))), valid_in(&m, &b));
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let b = bouquet(seed);
        let text = print_bouquet(&b);
        prop_assert_eq!(parse_bouquet(&text, &sig()).unwrap(), b);
    }

    #[test]
    fn parser_never_panics(text in "[\\[\\]|>.,;()a-z' ]{0,40}") {
        let _ = parse_bouquet(&text, &sig());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, ..ProptestConfig::default() })]

    /// Random walks of natural steps turn into proofs of `(end ⫐ start)`.
    #[test]
    fn forward_deduction_on_random_natural_derivations(seed in any::<u64>(), len in 0usize..5) {
        let mut r = rng(seed);
        let start = TermGen::new(&sig()).bouquet(&mut r);
        let mut d = Derivation::new(&start);
        let mut cur = d.start.clone();
        for _ in 0..len {
            let options = applicable_instances(&cur, None, &RuleName::NATURAL);
            let Some(inst) = options.get(rand::Rng::gen_range(&mut r, 0..options.len().max(1))).cloned() else { break };
            prop_assume!(apply_rule(&cur, &inst).is_ok());
            cur = d.push(&cur, inst).unwrap();
        }
        let proof = build_strong_deduction_fwd(&d).unwrap();
        check_derivation(&proof).unwrap();
        prop_assert!(is_proof(&proof));
        let expected = Bouquet::new(vec![Flower::bloom(Garden::of(cur.flowers.clone()), vec![Garden::of(d.start.flowers.clone())])]);
        prop_assert!(alpha_eq(&proof.start, &canonicalize(&expected)));
    }
}
