//! Ordinary first-order formulas, and their translation to and from
//! flowers. The kernel never depends on this module.

mod oracle;
mod parse;

use std::fmt;

use crate::syntax::{canonicalize, Atom, Bouquet, Flower, Garden, Var};

pub use oracle::{enumerate_formulas, formula_forces, formula_valid_in};
pub use parse::{parse_formula, parse_formula_inferring, FormulaError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Top,
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `¬A` is `Implies(A, Bottom)`.
    Implies(Box<Formula>, Box<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, args: &[&str]) -> Self {
        Formula::Atom(Atom::new(pred, args.iter().map(Var::new)))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Self {
        Formula::implies(a, Formula::Bottom)
    }

    pub fn forall(x: &str, a: Formula) -> Self {
        Formula::Forall(Var::new(x), Box::new(a))
    }

    pub fn exists(x: &str, a: Formula) -> Self {
        Formula::Exists(Var::new(x), Box::new(a))
    }

    /// Leaves have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => 1,
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Implies(a, b) if **b == Formula::Bottom => 1 + a.depth(),
            Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Forall(_, a) | Formula::Exists(_, a) => 1 + a.depth(),
        }
    }

    /// Conjunction of a list; `⊤` when empty.
    pub fn conj(mut fs: Vec<Formula>) -> Formula {
        match fs.pop() {
            None => Formula::Top,
            Some(last) => fs.into_iter().rev().fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Disjunction of a list; `⊥` when empty.
    pub fn disj(mut fs: Vec<Formula>) -> Formula {
        match fs.pop() {
            None => Formula::Bottom,
            Some(last) => fs.into_iter().rev().fold(last, |acc, f| Formula::or(f, acc)),
        }
    }
}

fn encode_into(f: &Formula, out: &mut Vec<Flower>) {
    match f {
        Formula::Atom(a) => out.push(Flower::Atom(a.clone())),
        Formula::Top => {}
        Formula::Bottom => out.push(Flower::bloom(Garden::default(), vec![])),
        Formula::And(a, b) => {
            encode_into(a, out);
            encode_into(b, out);
        }
        Formula::Or(a, b) => {
            let mut petals = disjuncts(encode_flowers(a));
            petals.extend(disjuncts(encode_flowers(b)));
            out.push(Flower::bloom(Garden::default(), petals));
        }
        Formula::Implies(a, b) => out.push(Flower::bloom(
            Garden::of(encode_flowers(a)),
            disjuncts(encode_flowers(b)),
        )),
        Formula::Forall(x, a) => {
            let mut inner = encode_flowers(a);
            match inner.as_mut_slice() {
                [Flower::Bloom(b)] if !b.pistil.binders.contains(x) => {
                    b.pistil.binders.insert(0, x.clone());
                    out.push(inner.pop().expect("one flower"));
                }
                _ => out.push(Flower::bloom(Garden::new(vec![x.clone()], vec![]), vec![Garden::of(inner)])),
            }
        }
        Formula::Exists(x, a) => out.push(Flower::bloom(
            Garden::default(),
            vec![Garden::new(vec![x.clone()], encode_flowers(a))],
        )),
    }
}

/// The petals of a bare disjunction `(⫐ Δ)`, or the whole bouquet as one
/// petal.
fn disjuncts(mut fs: Vec<Flower>) -> Vec<Garden> {
    match fs.as_mut_slice() {
        [Flower::Bloom(b)] if b.pistil.is_empty() => std::mem::take(&mut b.petals),
        _ => vec![Garden::of(fs)],
    }
}

fn encode_flowers(f: &Formula) -> Vec<Flower> {
    let mut out = Vec::new();
    encode_into(f, &mut out);
    out
}

/// Conjunction is juxtaposition, `A ⊃ B` is `(A ⫐ B)`, `A ∨ B` is
/// `(⫐ A ; B)`, `∀x.A` binds `x` in a pistil and `∃x.A` binds it in a petal.
/// Nested disjunctions share one flower, so `⊥` as a consequent leaves no
/// petal: `¬A` is `(A ⫐)`.
pub fn encode(f: &Formula) -> Bouquet {
    canonicalize(&Bouquet::new(encode_flowers(f)))
}

fn decode_flower(f: &Flower) -> Formula {
    match f {
        Flower::Atom(a) => Formula::Atom(a.clone()),
        Flower::Bloom(b) => {
            let petals: Vec<Formula> = b
                .petals
                .iter()
                .map(|g| {
                    let body = decode_flowers(&g.flowers);
                    g.binders
                        .iter()
                        .rev()
                        .fold(body, |acc, y| Formula::Exists(y.clone(), Box::new(acc)))
                })
                .collect();
            let consequent = Formula::disj(petals);
            let body = if b.pistil.flowers.is_empty() {
                consequent
            } else {
                Formula::implies(decode_flowers(&b.pistil.flowers), consequent)
            };
            b.pistil
                .binders
                .iter()
                .rev()
                .fold(body, |acc, x| Formula::Forall(x.clone(), Box::new(acc)))
        }
    }
}

fn decode_flowers(fs: &[Flower]) -> Formula {
    Formula::conj(fs.iter().map(decode_flower).collect())
}

/// `⟨x·Φ⟩ ⫐ Δ` reads as `∀x. ⋀Φ ⊃ ⋁ ∃y. ⋀Ψ` over the petals `⟨y·Ψ⟩` of
/// `Δ`; an empty pistil drops the implication.
pub fn decode(b: &Bouquet) -> Formula {
    decode_flowers(&b.flowers)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, 0, f)
    }
}

/// Binding strength: quantifiers and `->` 0, `|` 1, `&` 2, `~` and atoms 3.
fn write_formula(phi: &Formula, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = match phi {
        Formula::Forall(..) | Formula::Exists(..) => ctx > 0,
        Formula::Implies(_, b) if **b != Formula::Bottom => ctx > 0,
        Formula::Or(..) => ctx > 1,
        Formula::And(..) => ctx > 2,
        _ => false,
    };
    if wrap {
        f.write_str("(")?;
    }
    match phi {
        Formula::Atom(a) => {
            f.write_str(&a.pred)?;
            if !a.args.is_empty() {
                let args: Vec<&str> = a.args.iter().map(Var::name).collect();
                write!(f, "({})", args.join(", "))?;
            }
        }
        Formula::Top => f.write_str("true")?,
        Formula::Bottom => f.write_str("false")?,
        Formula::Implies(a, b) if **b == Formula::Bottom => {
            f.write_str("~")?;
            write_formula(a, 3, f)?;
        }
        Formula::Implies(a, b) => {
            write_formula(a, 1, f)?;
            f.write_str(" -> ")?;
            write_formula(b, 0, f)?;
        }
        Formula::Or(a, b) => {
            write_formula(a, 1, f)?;
            f.write_str(" | ")?;
            write_formula(b, 2, f)?;
        }
        Formula::And(a, b) => {
            write_formula(a, 2, f)?;
            f.write_str(" & ")?;
            write_formula(b, 3, f)?;
        }
        Formula::Forall(x, a) => {
            write!(f, "forall {x}. ")?;
            write_formula(a, 0, f)?;
        }
        Formula::Exists(x, a) => {
            write!(f, "exists {x}. ")?;
            write_formula(a, 0, f)?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}
