//! Interactive proof sessions: a goal, the current bouquet, and an undo
//! stack of applied instances.

use serde::Serialize;
use thiserror::Error;

use flowers::bridge::decode;
use flowers::calculus::{
    apply_rule, applicable_instances, areas, parse_instance, Derivation, ProofFile, RuleError, RuleInstance, RuleName,
};
use flowers::context::{resolve_area, Context, Path, PollinationKind, Polarity, Step};
use flowers::syntax::{digest, print_bouquet, print_flower, Bouquet, Flower, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("no session `{0}`")]
    BadSession(String),
    #[error("action was listed for state {listed}, current state is {current}")]
    StaleAction { listed: String, current: String },
    #[error("no action `{0}` in the current state")]
    UnknownAction(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("the current state is not the empty bouquet")]
    NotProved,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

impl SessionError {
    /// Stable error code for the wire.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::BadSession(_) => "BadSession",
            SessionError::StaleAction { .. } => "StaleAction",
            SessionError::UnknownAction(_) => "UnknownAction",
            SessionError::Rule(RuleError::SideConditionViolated { .. })
            | SessionError::Rule(RuleError::NotPollinated { .. })
            | SessionError::Rule(RuleError::PolarityMismatch { .. })
            | SessionError::Rule(RuleError::Capture { .. }) => "SideConditionViolated",
            SessionError::Rule(_) => "BadInstance",
            SessionError::NothingToUndo => "NothingToUndo",
            SessionError::NotProved => "NotProved",
            SessionError::BadRequest(_) => "BadRequest",
            SessionError::UnknownMethod(_) => "UnknownMethod",
        }
    }
}

/// One rule instance offered in a given state.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ActionDescriptor {
    /// `<state digest>:<index>`; valid only while the state is unchanged.
    pub id: String,
    pub rule: String,
    pub caption: String,
    pub path: String,
    pub params: String,
    /// The whole instance in proof-file syntax.
    pub instance: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct NodeView {
    pub path: String,
    /// `area`, `atom` or `bloom`.
    pub kind: &'static str,
    pub polarity: &'static str,
    pub text: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CandidateView {
    pub path: String,
    /// `cross` or `self`.
    pub kind: &'static str,
    pub text: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct StateView {
    pub session: String,
    pub digest: String,
    pub bouquet: String,
    pub goal: String,
    pub formula: String,
    pub steps: usize,
    pub proved: bool,
    pub nodes: Vec<NodeView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<String>,
    /// Flowers that pollinate the selected node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pollination: Option<Vec<CandidateView>>,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub signature: Signature,
    pub goal: Bouquet,
    pub current: Bouquet,
    /// Applied instances with the state each was applied to.
    pub undo: Vec<(RuleInstance, Bouquet)>,
}

fn polarity_str(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
    }
}

impl Session {
    pub fn new(id: String, goal: &Bouquet, signature: Signature) -> Self {
        let goal = Derivation::new(goal).start;
        Session {
            id,
            signature,
            current: goal.clone(),
            goal,
            undo: Vec::new(),
        }
    }

    pub fn digest(&self) -> String {
        digest(&self.current).to_string()
    }

    pub fn log(&self) -> Vec<RuleInstance> {
        self.undo.iter().map(|(i, _)| i.clone()).collect()
    }

    fn all_instances(&self) -> Vec<RuleInstance> {
        applicable_instances(&self.current, None, &RuleName::ALL)
    }

    /// Listed actions, optionally only those at `at` (same area and, when
    /// given, the same selection).
    pub fn actions(&self, at: Option<&Path>) -> Vec<ActionDescriptor> {
        let d = self.digest();
        self.all_instances()
            .into_iter()
            .enumerate()
            .filter(|(_, i)| match at {
                None => true,
                Some(p) => {
                    i.path.steps == p.steps
                        && match &p.selection {
                            None => true,
                            Some(sel) => i.path.selection.as_ref().map_or(sel.is_empty(), |s| s == sel),
                        }
                }
            })
            .map(|(n, i)| self.describe(&d, n, &i))
            .collect()
    }

    fn describe(&self, digest: &str, n: usize, i: &RuleInstance) -> ActionDescriptor {
        let params = i.params.to_string();
        ActionDescriptor {
            id: format!("{digest}:{n}"),
            rule: i.rule.to_string(),
            caption: caption(&self.current, i),
            path: i.path.to_string(),
            params,
            instance: i.to_string(),
        }
    }

    /// Applies a listed action.
    pub fn apply_action(&mut self, id: &str) -> Result<(), SessionError> {
        let (listed, n) = id.split_once(':').ok_or_else(|| SessionError::UnknownAction(id.to_string()))?;
        self.check_fresh(listed)?;
        let n: usize = n.parse().map_err(|_| SessionError::UnknownAction(id.to_string()))?;
        let inst = self
            .all_instances()
            .into_iter()
            .nth(n)
            .ok_or_else(|| SessionError::UnknownAction(id.to_string()))?;
        self.apply_instance(inst)
    }

    /// Applies an instance written in proof-file syntax, which may carry
    /// parameters no listing offers (grow, glue, apis, apet).
    pub fn apply_text(&mut self, listed: &str, text: &str) -> Result<(), SessionError> {
        self.check_fresh(listed)?;
        let inst = parse_instance(text, &self.signature).map_err(SessionError::BadRequest)?;
        self.apply_instance(inst)
    }

    fn check_fresh(&self, listed: &str) -> Result<(), SessionError> {
        let current = self.digest();
        if listed != current {
            return Err(SessionError::StaleAction {
                listed: listed.to_string(),
                current,
            });
        }
        Ok(())
    }

    pub fn apply_instance(&mut self, inst: RuleInstance) -> Result<(), SessionError> {
        let next = apply_rule(&self.current, &inst)?;
        let prior = std::mem::replace(&mut self.current, next);
        self.undo.push((inst, prior));
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), SessionError> {
        let (_, prior) = self.undo.pop().ok_or(SessionError::NothingToUndo)?;
        self.current = prior;
        Ok(())
    }

    /// The proof file of the session; only once the state is empty.
    pub fn export(&self) -> Result<String, SessionError> {
        if !self.current.is_empty() {
            return Err(SessionError::NotProved);
        }
        let (derivation, _) = Derivation::replay(&self.goal, self.log()).expect("session steps replay");
        Ok(ProofFile {
            signature: self.signature.clone(),
            derivation,
        }
        .to_string())
    }

    pub fn state(&self, selected: Option<&Path>) -> StateView {
        StateView {
            session: self.id.clone(),
            digest: self.digest(),
            bouquet: print_bouquet(&self.current),
            goal: print_bouquet(&self.goal),
            formula: decode(&self.current).to_string(),
            steps: self.undo.len(),
            proved: self.current.is_empty(),
            nodes: nodes(&self.current),
            selected: selected.map(Path::to_string),
            pollination: selected.map(|p| pollination(&self.current, p)),
        }
    }
}

fn nodes(b: &Bouquet) -> Vec<NodeView> {
    let mut out = Vec::new();
    for steps in areas(b) {
        let area_path = Path::area(steps.clone());
        let polarity = area_path.polarity();
        let area = resolve_area(&b.flowers, &steps).expect("enumerated");
        out.push(NodeView {
            path: area_path.to_string(),
            kind: "area",
            polarity: polarity_str(polarity),
            text: print_bouquet(&Bouquet::new(area.to_vec())),
        });
        for (j, f) in area.iter().enumerate() {
            out.push(NodeView {
                path: Path::flower(steps.clone(), j).to_string(),
                kind: if f.is_atom() { "atom" } else { "bloom" },
                polarity: polarity_str(polarity),
                text: print_flower(f),
            });
        }
    }
    out
}

/// Candidates available at the area of `p`, minus the selected flowers
/// themselves. Empty when `p` does not resolve.
fn pollination(b: &Bouquet, p: &Path) -> Vec<CandidateView> {
    if resolve_area(&b.flowers, &p.steps).is_err() {
        return Vec::new();
    }
    let ctx = Context {
        frame: b.clone(),
        hole: p.steps.clone(),
    };
    let selected = |c: &flowers::context::Candidate<'_>| {
        c.area == p.steps && p.selection.as_ref().is_some_and(|s| s.contains(&c.index))
    };
    ctx.pollination_candidates()
        .iter()
        .filter(|c| !selected(c))
        .map(|c| CandidateView {
            path: c.path().to_string(),
            kind: match c.kind {
                PollinationKind::Cross => "cross",
                PollinationKind::SelfPollination => "self",
            },
            text: print_flower(c.flower),
        })
        .collect()
}

fn target(b: &Bouquet, steps: &[Step], i: &RuleInstance) -> String {
    let area = resolve_area(&b.flowers, steps).unwrap_or(&[]);
    let picked: Vec<&Flower> = match &i.path.selection {
        Some(sel) => sel.iter().filter_map(|&k| area.get(k)).collect(),
        None => area.iter().collect(),
    };
    picked.iter().map(|f| print_flower(f)).collect::<Vec<_>>().join(", ")
}

fn caption(b: &Bouquet, i: &RuleInstance) -> String {
    let what = target(b, &i.path.steps, i);
    let p = &i.params;
    let subst = p.subst.as_ref().map(|s| s.to_string()).unwrap_or_default();
    match i.rule {
        RuleName::PollDown => format!("erase pollinated {what}"),
        RuleName::PollUp => format!(
            "copy {} here",
            p.insert.as_ref().map(print_bouquet).unwrap_or_default()
        ),
        RuleName::Epis => format!("wrap {what} in an empty pistil"),
        RuleName::Epet => format!("discharge {what} (empty petal)"),
        RuleName::Srep => format!("split {what} on case {}", p.case.unwrap_or(0)),
        RuleName::Ipis if p.nodup => format!("instantiate {what} with {subst}, dropping the original"),
        RuleName::Ipis => format!("instantiate {what} with {subst}"),
        RuleName::Ipet if p.nodup => format!(
            "choose {subst} in petal {} of {what}, dropping the original",
            p.petal.unwrap_or(0)
        ),
        RuleName::Ipet => format!("choose {subst} in petal {} of {what}", p.petal.unwrap_or(0)),
        RuleName::Crop => format!("erase hypothesis {what}"),
        RuleName::Pull => format!("remove petals {:?} of {what}", p.petals.clone().unwrap_or_default()),
        RuleName::Grow => "grow a flower here".to_string(),
        RuleName::Glue => format!("add a petal to {what}"),
        RuleName::Apis | RuleName::Apet => format!("generalize {what}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowers::syntax::parse_bouquet;

    fn sig() -> Signature {
        Signature::from_pairs([("a", 0), ("b", 0)])
    }

    fn session(text: &str) -> Session {
        Session::new("t".into(), &parse_bouquet(text, &sig()).unwrap(), sig())
    }

    #[test]
    fn apply_undo_export() {
        let mut s = session("[a |> a]");
        let before = s.digest();
        let down = s.actions(None).into_iter().find(|a| a.rule == "poll_down").unwrap();
        s.apply_action(&down.id).unwrap();
        assert_eq!(s.state(None).bouquet, "[a |> .]");
        s.undo().unwrap();
        assert_eq!(s.digest(), before);
        s.apply_action(&down.id).unwrap();
        assert!(matches!(s.apply_action(&down.id), Err(SessionError::StaleAction { .. })));
        assert_eq!(s.export(), Err(SessionError::NotProved));
        let epet = s.actions(None).into_iter().find(|a| a.rule == "epet").unwrap();
        s.apply_action(&epet.id).unwrap();
        let proof = s.export().unwrap();
        assert!(proof.contains("poll_down @ 0/petal:0/area#{0} => "));
        assert!(s.state(None).proved);
    }

    #[test]
    fn side_conditions_pass_through() {
        let mut s = session("[a |> b]");
        let d = s.digest();
        let err = s.apply_text(&d, "poll_down @ 0/petal:0/area#{0}").unwrap_err();
        assert_eq!(err.code(), "SideConditionViolated");
        let err = s.apply_text(&d, "grow @ 0/pistil/area insert={a}").unwrap_err();
        assert_eq!(err.code(), "SideConditionViolated");
        assert_eq!(s.undo(), Err(SessionError::NothingToUndo));
    }

    #[test]
    fn metadata() {
        let s = session("a, [a |> b]");
        let st = s.state(Some(&"1/petal:0/area".parse().unwrap()));
        let kinds: Vec<(&str, &str)> = st.nodes.iter().map(|n| (n.path.as_str(), n.polarity)).collect();
        assert!(kinds.contains(&("1/pistil/area#{0}", "negative")));
        assert!(kinds.contains(&("1/petal:0/area#{0}", "positive")));
        let pol = st.pollination.unwrap();
        let texts: Vec<(&str, &str)> = pol.iter().map(|c| (c.path.as_str(), c.kind)).collect();
        assert_eq!(
            texts,
            vec![("area#{0}", "cross"), ("1/pistil/area#{0}", "self"), ("1/petal:0/area#{0}", "cross")]
        );
    }
}
