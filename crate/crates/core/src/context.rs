//! One-hole contexts, paths and the pollination relation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::syntax::{alpha_eq_flower, canonicalize, Bouquet, Flower, Var};

/// One step from an area into a garden of one of its flowers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Pistil { flower: usize },
    Petal { flower: usize, petal: usize },
}

impl Step {
    pub fn flower(&self) -> usize {
        match *self {
            Step::Pistil { flower } | Step::Petal { flower, .. } => flower,
        }
    }

    fn with_flower(self, flower: usize) -> Step {
        match self {
            Step::Pistil { .. } => Step::Pistil { flower },
            Step::Petal { petal, .. } => Step::Petal { flower, petal },
        }
    }

    /// Garden code used in [`crate::syntax::Address`]: 0 for the pistil,
    /// `k + 1` for petal `k`.
    pub fn garden_code(&self) -> u32 {
        match *self {
            Step::Pistil { .. } => 0,
            Step::Petal { petal, .. } => petal as u32 + 1,
        }
    }
}

/// A route from the root to an area, optionally selecting some of the
/// area's flowers by index. Without a selection the whole area is meant.
///
/// Text form: `0/pistil/1/petal:0/area#{0,2}`; the root area is `area`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Path {
    pub steps: Vec<Step>,
    pub selection: Option<Vec<usize>>,
}

impl Path {
    pub fn root() -> Self {
        Path::default()
    }

    pub fn area(steps: Vec<Step>) -> Self {
        Path {
            steps,
            selection: None,
        }
    }

    pub fn select(steps: Vec<Step>, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Path {
            steps,
            selection: Some(indices),
        }
    }

    /// The path of the single flower `i` in the area of `self`.
    pub fn flower(steps: Vec<Step>, i: usize) -> Self {
        Path::select(steps, vec![i])
    }

    pub fn inversions(&self) -> usize {
        inversions_of(&self.steps)
    }

    pub fn polarity(&self) -> Polarity {
        Polarity::of(self.inversions())
    }

    /// The address of the target area in [`crate::syntax::Address`] form.
    pub fn address(&self) -> Vec<u32> {
        steps_address(&self.steps)
    }
}

pub fn steps_address(steps: &[Step]) -> Vec<u32> {
    let mut out = Vec::with_capacity(2 * steps.len());
    for s in steps {
        out.push(s.flower() as u32);
        out.push(s.garden_code());
    }
    out
}

fn inversions_of(steps: &[Step]) -> usize {
    steps
        .iter()
        .filter(|s| matches!(s, Step::Pistil { .. }))
        .count()
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            match s {
                Step::Pistil { flower } => write!(f, "{flower}/pistil/")?,
                Step::Petal { flower, petal } => write!(f, "{flower}/petal:{petal}/")?,
            }
        }
        f.write_str("area")?;
        if let Some(sel) = &self.selection {
            let items: Vec<String> = sel.iter().map(|i| i.to_string()).collect();
            write!(f, "#{{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed path `{text}`: {reason}")]
pub struct PathSyntaxError {
    pub text: String,
    pub reason: String,
}

impl FromStr for Path {
    type Err = PathSyntaxError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| PathSyntaxError {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (body, selection) = match text.split_once('#') {
            None => (text, None),
            Some((body, sel)) => {
                let inner = sel
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| err("selection must be `{i,j,...}`"))?;
                let mut idx = Vec::new();
                for part in inner.split(',').filter(|p| !p.is_empty()) {
                    idx.push(part.parse::<usize>().map_err(|_| err("bad selection index"))?);
                }
                let sorted = idx.windows(2).all(|w| w[0] < w[1]);
                if !sorted {
                    return Err(err("selection indices must be strictly increasing"));
                }
                (body, Some(idx))
            }
        };
        let tokens: Vec<&str> = body.split('/').collect();
        if tokens.last() != Some(&"area") {
            return Err(err("path must end with `area`"));
        }
        let tokens = &tokens[..tokens.len() - 1];
        if !tokens.len().is_multiple_of(2) {
            return Err(err("expected `<flower>/<pistil|petal:k>` pairs"));
        }
        let mut steps = Vec::new();
        for pair in tokens.chunks(2) {
            let flower = pair[0]
                .parse::<usize>()
                .map_err(|_| err("flower index must be a number"))?;
            let step = if pair[1] == "pistil" {
                Step::Pistil { flower }
            } else if let Some(k) = pair[1].strip_prefix("petal:") {
                let petal = k.parse::<usize>().map_err(|_| err("bad petal index"))?;
                Step::Petal { flower, petal }
            } else {
                return Err(err("expected `pistil` or `petal:k`"));
            };
            steps.push(step);
        }
        Ok(Path { steps, selection })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn of(inversions: usize) -> Self {
        if inversions.is_multiple_of(2) {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("path step {step} does not resolve: {reason}")]
    BadPath { step: usize, reason: String },
}

fn bad(step: usize, reason: impl Into<String>) -> ContextError {
    ContextError::BadPath {
        step,
        reason: reason.into(),
    }
}

/// Follows `steps` from the root and returns the flowers of the area reached.
pub fn resolve_area<'b>(flowers: &'b [Flower], steps: &[Step]) -> Result<&'b [Flower], ContextError> {
    let mut area = flowers;
    for (n, s) in steps.iter().enumerate() {
        let f = area
            .get(s.flower())
            .ok_or_else(|| bad(n, format!("no flower {} (area has {})", s.flower(), area.len())))?;
        let b = f
            .as_bloom()
            .ok_or_else(|| bad(n, format!("flower {} is an atom", s.flower())))?;
        area = match *s {
            Step::Pistil { .. } => &b.pistil.flowers,
            Step::Petal { petal, .. } => {
                &b.petals
                    .get(petal)
                    .ok_or_else(|| bad(n, format!("no petal {petal} (flower has {})", b.petals.len())))?
                    .flowers
            }
        };
    }
    Ok(area)
}

fn area_mut<'b>(flowers: &'b mut Vec<Flower>, steps: &[Step]) -> &'b mut Vec<Flower> {
    let mut area = flowers;
    for s in steps {
        let b = area[s.flower()].as_bloom_mut().expect("context hole resolves");
        area = match *s {
            Step::Pistil { .. } => &mut b.pistil.flowers,
            Step::Petal { petal, .. } => &mut b.petals[petal].flowers,
        };
    }
    area
}

/// A bouquet with one hole. The hole sits in the area reached by `hole`;
/// filling appends to that area.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Context {
    pub frame: Bouquet,
    pub hole: Vec<Step>,
}

impl Context {
    /// The empty context `□`.
    pub fn hole() -> Self {
        Context::default()
    }

    pub fn inversions(&self) -> usize {
        inversions_of(&self.hole)
    }

    pub fn polarity(&self) -> Polarity {
        Polarity::of(self.inversions())
    }

    /// Fills the hole without reordering or renaming.
    pub fn fill_raw(&self, content: &[Flower]) -> Bouquet {
        let mut flowers = self.frame.flowers.clone();
        area_mut(&mut flowers, &self.hole).extend(content.iter().cloned());
        Bouquet::new(flowers)
    }

    /// Fills the hole and canonicalizes.
    pub fn fill(&self, content: &[Flower]) -> Bouquet {
        canonicalize(&self.fill_raw(content))
    }

    /// The flowers sharing the hole's area.
    pub fn hole_area(&self) -> &[Flower] {
        resolve_area(&self.frame.flowers, &self.hole).expect("context hole resolves")
    }

    /// Variables bound by the gardens enclosing the hole, outermost first.
    pub fn binders_in_scope(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut area: &[Flower] = &self.frame.flowers;
        for s in &self.hole {
            let b = area[s.flower()].as_bloom().expect("context hole resolves");
            out.extend(b.pistil.binders.iter().cloned());
            area = match *s {
                Step::Pistil { .. } => &b.pistil.flowers,
                Step::Petal { petal, .. } => {
                    out.extend(b.petals[petal].binders.iter().cloned());
                    &b.petals[petal].flowers
                }
            };
        }
        out
    }

    /// `outer[inner]`: the context whose hole is the hole of `inner` placed
    /// in the hole of `outer`.
    pub fn compose(outer: &Context, inner: &Context) -> Context {
        let shift = outer.hole_area().len();
        let frame = outer.fill_raw(&inner.frame.flowers);
        let mut hole = outer.hole.clone();
        if let Some((first, rest)) = inner.hole.split_first() {
            hole.push(first.with_flower(first.flower() + shift));
            hole.extend_from_slice(rest);
        }
        Context { frame, hole }
    }

    /// Every flower that can be pollinated in this context, with where it
    /// sits in the frame and how it pollinates.
    pub fn pollination_candidates(&self) -> Vec<Candidate<'_>> {
        let mut out = Vec::new();
        let mut area: &[Flower] = &self.frame.flowers;
        for (depth, s) in self.hole.iter().enumerate() {
            let here = &self.hole[..depth];
            for (j, f) in area.iter().enumerate() {
                if j != s.flower() {
                    out.push(Candidate {
                        flower: f,
                        area: here.to_vec(),
                        index: j,
                        kind: PollinationKind::Cross,
                    });
                }
            }
            let b = area[s.flower()].as_bloom().expect("context hole resolves");
            area = match *s {
                Step::Pistil { .. } => &b.pistil.flowers,
                Step::Petal { petal, .. } => {
                    let pistil_steps = {
                        let mut v = here.to_vec();
                        v.push(Step::Pistil { flower: s.flower() });
                        v
                    };
                    for (j, f) in b.pistil.flowers.iter().enumerate() {
                        out.push(Candidate {
                            flower: f,
                            area: pistil_steps.clone(),
                            index: j,
                            kind: PollinationKind::SelfPollination,
                        });
                    }
                    &b.petals[petal].flowers
                }
            };
        }
        for (j, f) in area.iter().enumerate() {
            out.push(Candidate {
                flower: f,
                area: self.hole.clone(),
                index: j,
                kind: PollinationKind::Cross,
            });
        }
        out
    }

    /// Whether `flower` alpha-matches some pollination candidate.
    pub fn pollinates(&self, flower: &Flower) -> bool {
        self.pollination_candidates()
            .iter()
            .any(|c| alpha_eq_flower(c.flower, flower))
    }

    /// Each flower of `phi` is justified by some candidate, independently.
    pub fn is_pollinated(&self, phi: &[Flower]) -> bool {
        if phi.is_empty() {
            return true;
        }
        let candidates = self.pollination_candidates();
        phi.iter()
            .all(|f| candidates.iter().any(|c| alpha_eq_flower(c.flower, f)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PollinationKind {
    Cross,
    SelfPollination,
}

/// A flower available in a context, located as flower `index` of the frame
/// area reached by `area`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate<'c> {
    pub flower: &'c Flower,
    pub area: Vec<Step>,
    pub index: usize,
    pub kind: PollinationKind,
}

impl Candidate<'_> {
    pub fn path(&self) -> Path {
        Path::flower(self.area.clone(), self.index)
    }
}

/// Removes the flowers `path` selects and returns them with the remaining
/// context. `fill(split(b, p)) == b` whenever `b` is canonical.
pub fn split(b: &Bouquet, path: &Path) -> Result<(Context, Bouquet), ContextError> {
    let area = resolve_area(&b.flowers, &path.steps)?;
    let selected: Vec<usize> = match &path.selection {
        None => (0..area.len()).collect(),
        Some(sel) => {
            if let Some(&i) = sel.iter().find(|&&i| i >= area.len()) {
                return Err(bad(
                    path.steps.len(),
                    format!("selection index {i} out of range (area has {})", area.len()),
                ));
            }
            sel.clone()
        }
    };
    let mut flowers = b.flowers.clone();
    let target = area_mut(&mut flowers, &path.steps);
    let mut content = Vec::with_capacity(selected.len());
    for &i in selected.iter().rev() {
        content.push(target.remove(i));
    }
    content.reverse();
    Ok((
        Context {
            frame: Bouquet::new(flowers),
            hole: path.steps.clone(),
        },
        Bouquet::new(content),
    ))
}
