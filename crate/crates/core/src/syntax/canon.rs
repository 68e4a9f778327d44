use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use sha2::Digest as _;
use sha2::Sha256;

use super::{bound_vars, free_vars, print_bouquet, Atom, Bloom, Bouquet, Flower, Garden, Var};

/// Returns the canonical alpha-variant of `b`.
///
/// Multisets are sorted, then binders that repeat another binder or clash with
/// a free variable are renamed (`x` becomes `x'`, `x''`, ...), then the result
/// is sorted again. Renaming is a deterministic function of the sorted term,
/// so multiset-equal inputs produce identical output.
pub fn canonicalize(b: &Bouquet) -> Bouquet {
    let mut flowers = b.flowers.clone();
    sort_flowers(&mut flowers);
    if !satisfies_barendregt(&Bouquet::new(flowers.clone())) {
        let mut renamer = Renamer::new(&flowers);
        renamer.flowers(&mut flowers, &HashMap::new());
        sort_flowers(&mut flowers);
    }
    Bouquet::new(flowers)
}

fn sort_flowers(fs: &mut [Flower]) {
    for f in fs.iter_mut() {
        if let Flower::Bloom(b) = f {
            sort_garden(&mut b.pistil);
            for p in b.petals.iter_mut() {
                sort_garden(p);
            }
            b.petals.sort();
        }
    }
    fs.sort();
}

fn sort_garden(g: &mut Garden) {
    g.binders.sort();
    g.binders.dedup();
    sort_flowers(&mut g.flowers);
}

/// Both Barendregt conditions: binders pairwise distinct, and no binder is
/// also a free variable.
pub fn satisfies_barendregt(b: &Bouquet) -> bool {
    let bv = bound_vars(b);
    let mut seen = HashSet::new();
    if !bv.iter().all(|v| seen.insert(v)) {
        return false;
    }
    let fv = free_vars(b);
    bv.iter().all(|v| !fv.contains(v))
}

/// Every variable name occurring in `flowers`, bound or free.
pub fn names_in(flowers: &[Flower]) -> HashSet<Var> {
    fn go(fs: &[Flower], out: &mut HashSet<Var>) {
        for f in fs {
            match f {
                Flower::Atom(a) => out.extend(a.args.iter().cloned()),
                Flower::Bloom(b) => {
                    for g in std::iter::once(&b.pistil).chain(&b.petals) {
                        out.extend(g.binders.iter().cloned());
                        go(&g.flowers, out);
                    }
                }
            }
        }
    }
    let mut out = HashSet::new();
    go(flowers, &mut out);
    out
}

/// A variable named after `base` (primes added) that is not in `avoid`.
pub fn fresh_var(base: &Var, avoid: &HashSet<Var>) -> Var {
    let stem = base.name().trim_end_matches('\'');
    let stem = if stem.is_empty() { "v" } else { stem };
    let mut candidate = format!("{stem}'");
    loop {
        let v = Var::new(&candidate);
        if !avoid.contains(&v) {
            return v;
        }
        candidate.push('\'');
    }
}

/// Renames every binder of `flowers` to a name outside `avoid` (and outside
/// the names already in `flowers`). Returns the renamed flowers and the map
/// from old binder names to new ones.
pub fn freshen_binders(
    flowers: &[Flower],
    avoid: &HashSet<Var>,
) -> (Vec<Flower>, HashMap<Var, Var>) {
    let mut taken: HashSet<Var> = avoid.clone();
    taken.extend(names_in(flowers));
    let mut renamer = Renamer {
        used: taken.clone(),
        taken,
        force: true,
        log: HashMap::new(),
    };
    let mut out = flowers.to_vec();
    renamer.flowers(&mut out, &HashMap::new());
    (out, renamer.log)
}

struct Renamer {
    /// Names a binder may not keep: free variables and binders already seen.
    used: HashSet<Var>,
    /// Names a fresh binder may not take.
    taken: HashSet<Var>,
    force: bool,
    log: HashMap<Var, Var>,
}

impl Renamer {
    fn new(flowers: &[Flower]) -> Self {
        let b = Bouquet::new(flowers.to_vec());
        Renamer {
            used: free_vars(&b).into_iter().collect(),
            taken: names_in(flowers),
            force: false,
            log: HashMap::new(),
        }
    }

    fn bind(&mut self, binders: &mut [Var], env: &HashMap<Var, Var>) -> HashMap<Var, Var> {
        let mut env = env.clone();
        for x in binders.iter_mut() {
            let new = if self.force || self.used.contains(x) {
                fresh_var(x, &self.taken)
            } else {
                x.clone()
            };
            self.used.insert(new.clone());
            self.taken.insert(new.clone());
            if new != *x {
                self.log.insert(x.clone(), new.clone());
            }
            env.insert(x.clone(), new.clone());
            *x = new;
        }
        env
    }

    fn flowers(&mut self, fs: &mut [Flower], env: &HashMap<Var, Var>) {
        for f in fs.iter_mut() {
            match f {
                Flower::Atom(Atom { args, .. }) => {
                    for x in args.iter_mut() {
                        if let Some(y) = env.get(x) {
                            *x = y.clone();
                        }
                    }
                }
                Flower::Bloom(Bloom { pistil, petals }) => {
                    let inner = self.bind(&mut pistil.binders, env);
                    self.flowers(&mut pistil.flowers, &inner);
                    for p in petals.iter_mut() {
                        let petal_env = self.bind(&mut p.binders, &inner);
                        self.flowers(&mut p.flowers, &petal_env);
                    }
                }
            }
        }
    }
}

/// Short content hash of a bouquet: the first four bytes of the SHA-256 of
/// its canonical printed form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 4]);

pub fn digest(b: &Bouquet) -> Digest {
    let canon = canonicalize(b);
    let hash = Sha256::digest(print_bouquet(&canon).as_bytes());
    Digest([hash[0], hash[1], hash[2], hash[3]])
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for byte in self.0 {
            write!(f, "{byte:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl FromStr for Digest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 8 || !s.bytes().all(|c| c.is_ascii_hexdigit()) {
            return Err(format!("expected 8 hex digits, found `{s}`"));
        }
        let mut out = [0u8; 4];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|e| e.to_string())?;
        }
        Ok(Digest(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, parse_bouquet, Signature};

    fn sig() -> Signature {
        Signature::from_pairs([("p", 1), ("q", 1)])
    }

    #[test]
    fn duplicate_binder_is_freshened() {
        let b = parse_bouquet("[x. |> p(x)], [x. |> q(x)]", &sig()).unwrap();
        let c = canonicalize(&b);
        assert_eq!(print_bouquet(&c), "[x. |> p(x)], [x'. |> q(x')]");
        assert!(satisfies_barendregt(&c));
        assert!(alpha_eq(&b, &c));
    }

    #[test]
    fn binder_clashing_with_free_variable_is_renamed() {
        let b = parse_bouquet("p(x), [x. q(x) |>]", &sig()).unwrap();
        let c = canonicalize(&b);
        assert_eq!(print_bouquet(&c), "p(x), [x'. q(x') |>]");
    }

    #[test]
    fn canonical_input_is_unchanged() {
        let b = parse_bouquet("p(x), [y. q(y) |> p(y)]", &sig()).unwrap();
        assert_eq!(canonicalize(&b), b);
    }

    #[test]
    fn digest_round_trips_through_hex() {
        let b = parse_bouquet("p(x)", &sig()).unwrap();
        let d = digest(&b);
        assert_eq!(d.to_string().parse::<Digest>().unwrap(), d);
        assert!("xyz".parse::<Digest>().is_err());
    }

    #[test]
    fn freshen_renames_every_binder() {
        let b = parse_bouquet("[x. p(x) |> y. q(y)]", &sig()).unwrap();
        let avoid: HashSet<Var> = [Var::new("x'")].into_iter().collect();
        let (out, log) = freshen_binders(&b.flowers, &avoid);
        assert_eq!(log.len(), 2);
        assert_eq!(log[&Var::new("x")], Var::new("x''"));
        assert!(alpha_eq(&b, &Bouquet::new(out)));
    }
}
