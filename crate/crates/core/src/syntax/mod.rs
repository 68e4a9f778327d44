//! Flowers, gardens and bouquets.
//!
//! Terms are plain immutable values. Multisets are stored as vectors; after
//! [`canonicalize`] every vector is sorted under the derived term order and
//! binders satisfy the Barendregt convention (all binders distinct, and
//! disjoint from the free variables).

mod alpha;
mod canon;
mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use alpha::{alpha_eq, alpha_eq_flower, alpha_witness, Address, AlphaWitness};
pub use canon::{
    canonicalize, digest, freshen_binders, fresh_var, names_in, satisfies_barendregt, Digest,
};
pub use text::{
    parse_bouquet, parse_bouquet_inferring, parse_bouquet_raw, parse_flower, parse_garden, parse_petals, print_bouquet, print_flower,
    print_garden, print_petals, ParseError, Signature, SignatureError,
};

/// A variable. Equality is by name; canonicalization keeps names unique
/// where the Barendregt convention requires it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// A predicate applied to variables, `p(x, y)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub pred: Arc<str>,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(pred: impl AsRef<str>, args: impl IntoIterator<Item = Var>) -> Self {
        Atom {
            pred: Arc::from(pred.as_ref()),
            args: args.into_iter().collect(),
        }
    }
}

// Predicate name, then arity, then arguments.
impl Ord for Atom {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.pred
            .cmp(&other.pred)
            .then(self.args.len().cmp(&other.args.len()))
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A sprinkler (binder set) together with a bouquet.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Garden {
    pub binders: Vec<Var>,
    pub flowers: Vec<Flower>,
}

impl Garden {
    pub fn new(binders: Vec<Var>, flowers: Vec<Flower>) -> Self {
        Garden { binders, flowers }
    }

    /// A garden without binders.
    pub fn of(flowers: Vec<Flower>) -> Self {
        Garden {
            binders: Vec::new(),
            flowers,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.binders.is_empty() && self.flowers.is_empty()
    }
}

/// A non-atomic flower `pistil ⫐ petal₁ ; … ; petalₙ`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Bloom {
    pub pistil: Garden,
    pub petals: Vec<Garden>,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Flower {
    Atom(Atom),
    Bloom(Bloom),
}

impl Flower {
    pub fn atom(pred: &str, args: &[&str]) -> Self {
        Flower::Atom(Atom::new(pred, args.iter().map(Var::new)))
    }

    pub fn bloom(pistil: Garden, petals: Vec<Garden>) -> Self {
        Flower::Bloom(Bloom { pistil, petals })
    }

    pub fn as_bloom(&self) -> Option<&Bloom> {
        match self {
            Flower::Bloom(b) => Some(b),
            Flower::Atom(_) => None,
        }
    }

    pub fn as_bloom_mut(&mut self) -> Option<&mut Bloom> {
        match self {
            Flower::Bloom(b) => Some(b),
            Flower::Atom(_) => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Flower::Atom(_))
    }
}

/// A finite multiset of flowers: the proof state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Bouquet {
    pub flowers: Vec<Flower>,
}

impl Bouquet {
    pub fn new(flowers: Vec<Flower>) -> Self {
        Bouquet { flowers }
    }

    pub fn empty() -> Self {
        Bouquet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.flowers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flowers.len()
    }
}

impl From<Vec<Flower>> for Bouquet {
    fn from(flowers: Vec<Flower>) -> Self {
        Bouquet { flowers }
    }
}

impl fmt::Display for Bouquet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_bouquet(self))
    }
}

impl fmt::Display for Flower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_flower(self))
    }
}

// ---------------------------------------------------------------------------
// Variables

pub fn free_vars(b: &Bouquet) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    fv_flowers(&b.flowers, &mut Vec::new(), &mut out);
    out
}

pub fn free_vars_flower(f: &Flower) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    fv_flower(f, &mut Vec::new(), &mut out);
    out
}

fn fv_flowers(fs: &[Flower], bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    for f in fs {
        fv_flower(f, bound, out);
    }
}

fn fv_flower(f: &Flower, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match f {
        Flower::Atom(a) => {
            for x in &a.args {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
        }
        Flower::Bloom(b) => {
            let mark = bound.len();
            bound.extend(b.pistil.binders.iter().cloned());
            fv_flowers(&b.pistil.flowers, bound, out);
            for petal in &b.petals {
                let inner = bound.len();
                bound.extend(petal.binders.iter().cloned());
                fv_flowers(&petal.flowers, bound, out);
                bound.truncate(inner);
            }
            bound.truncate(mark);
        }
    }
}

/// All binders at every depth, with multiplicity, in traversal order.
pub fn bound_vars(b: &Bouquet) -> Vec<Var> {
    let mut out = Vec::new();
    bv_flowers(&b.flowers, &mut out);
    out
}

pub fn bound_vars_flower(f: &Flower) -> Vec<Var> {
    let mut out = Vec::new();
    bv_flowers(std::slice::from_ref(f), &mut out);
    out
}

fn bv_flowers(fs: &[Flower], out: &mut Vec<Var>) {
    for f in fs {
        if let Flower::Bloom(b) = f {
            bv_garden(&b.pistil, out);
            for p in &b.petals {
                bv_garden(p, out);
            }
        }
    }
}

fn bv_garden(g: &Garden, out: &mut Vec<Var>) {
    out.extend(g.binders.iter().cloned());
    bv_flowers(&g.flowers, out);
}

pub fn depth(f: &Flower) -> usize {
    match f {
        Flower::Atom(_) => 0,
        Flower::Bloom(b) => {
            let pistil = garden_depth(&b.pistil);
            let petals = b.petals.iter().map(garden_depth).max().unwrap_or(0);
            1 + pistil.max(petals)
        }
    }
}

fn garden_depth(g: &Garden) -> usize {
    g.flowers.iter().map(depth).max().unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Substitutions

/// A finite-support renaming of variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Substitution {
    map: BTreeMap<Var, Var>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("substitution captures variable `{var}`")]
pub struct CaptureError {
    pub var: Var,
}

impl Substitution {
    pub fn identity() -> Self {
        Substitution::default()
    }

    /// Builds a substitution; pairs mapping a variable to itself are dropped.
    pub fn new(pairs: impl IntoIterator<Item = (Var, Var)>) -> Self {
        let map = pairs.into_iter().filter(|(k, v)| k != v).collect();
        Substitution { map }
    }

    pub fn get(&self, x: &Var) -> Option<&Var> {
        self.map.get(x)
    }

    pub fn apply_var(&self, x: &Var) -> Var {
        self.map.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    pub fn support(&self) -> BTreeSet<Var> {
        self.map.keys().cloned().collect()
    }

    pub fn image(&self) -> BTreeSet<Var> {
        self.map.values().cloned().collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Var)> {
        self.map.iter()
    }

    /// The substitution with `vars` removed from its support.
    pub fn without(&self, vars: &[Var]) -> Substitution {
        if vars.iter().all(|v| !self.map.contains_key(v)) {
            return self.clone();
        }
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(k, _)| !vars.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|(k, v)| format!("{k}:={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn is_capture_avoiding(s: &Substitution, b: &Bouquet) -> bool {
    is_capture_avoiding_in(s, &b.flowers)
}

pub fn is_capture_avoiding_in(s: &Substitution, flowers: &[Flower]) -> bool {
    first_capture(s, flowers).is_none()
}

fn first_capture(s: &Substitution, flowers: &[Flower]) -> Option<Var> {
    if s.is_identity() {
        return None;
    }
    let image = s.image();
    let mut bv = Vec::new();
    bv_flowers(flowers, &mut bv);
    bv.into_iter().find(|v| image.contains(v))
}

/// Applies `s` to every flower, checking capture-avoidance first.
pub fn apply_subst(s: &Substitution, b: &Bouquet) -> Result<Bouquet, CaptureError> {
    if let Some(var) = first_capture(s, &b.flowers) {
        return Err(CaptureError { var });
    }
    Ok(Bouquet::new(subst_flowers(s, &b.flowers)))
}

/// Substitution without the capture check; the garden clause removes the
/// garden's own binders from the support before descending.
pub fn subst_flowers(s: &Substitution, fs: &[Flower]) -> Vec<Flower> {
    fs.iter().map(|f| subst_flower(s, f)).collect()
}

pub fn subst_flower(s: &Substitution, f: &Flower) -> Flower {
    if s.is_identity() {
        return f.clone();
    }
    match f {
        Flower::Atom(a) => Flower::Atom(Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|x| s.apply_var(x)).collect(),
        }),
        Flower::Bloom(b) => {
            let inner = s.without(&b.pistil.binders);
            Flower::Bloom(Bloom {
                pistil: Garden {
                    binders: b.pistil.binders.clone(),
                    flowers: subst_flowers(&inner, &b.pistil.flowers),
                },
                petals: b.petals.iter().map(|p| subst_garden(&inner, p)).collect(),
            })
        }
    }
}

pub fn subst_garden(s: &Substitution, g: &Garden) -> Garden {
    let inner = s.without(&g.binders);
    Garden {
        binders: g.binders.clone(),
        flowers: subst_flowers(&inner, &g.flowers),
    }
}
