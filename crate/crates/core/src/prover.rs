//! Proof search in the natural fragment.
//!
//! Every natural rule is invertible, so the simplifiers (epet, poll_down,
//! srep) are applied eagerly without backtracking. The remaining moves
//! (ipet, ipis, poll_up) grow the bouquet and are explored by iterative
//! deepening on their count, with a digest-keyed visited table per round.
//!
//! poll_down only erases atoms anywhere and blooms at positive polarity:
//! erasing a duplicated hypothesis bloom would undo the poll_up that made
//! it. Moves are filtered the same way: ipet only at positive polarity,
//! ipis only at negative polarity, and poll_up only copies hypothesis
//! blooms into hypothesis areas.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::calculus::{
    apply_rule, applicable_instances, areas, Derivation, RuleInstance, RuleName,
};
use crate::context::{resolve_area, split, Context, Path, Polarity, Step};
use crate::semantics::{find_countermodel, Bounds, Countermodel};
use crate::syntax::{alpha_eq_flower, digest, fresh_var, names_in, Bouquet, Digest, Flower, Garden, Var};

/// Limits for one call to [`prove`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Rule applications, simplifiers included. Default 200 000.
    pub max_steps: usize,
    /// Growth moves (ipet, ipis, poll_up) on one branch. Default 6.
    pub max_depth: usize,
    /// Instantiations of one binder on one branch. Default 2.
    pub max_instantiations_per_binder: usize,
    /// Wall-clock limit in milliseconds. Default 5000.
    pub timeout: u64,
    /// Countermodel search bounds, tried before proof search. Default
    /// 2 worlds with 1 element.
    pub refute: Bounds,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_steps: 200_000,
            max_depth: 6,
            max_instantiations_per_binder: 2,
            timeout: 5000,
            refute: Bounds::new(2, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("unknown budget key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` needs a positive integer, got `{value}`")]
    BadValue { key: String, value: String },
    #[error("expected `key=value`, got `{0}`")]
    Syntax(String),
}

/// `steps=N,depth=N,inst=N,timeout=MS,worlds=N,domain=N`, any subset, in
/// any order; missing keys keep their defaults.
impl FromStr for SearchBudget {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, BudgetError> {
        let mut b = SearchBudget::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| BudgetError::Syntax(item.to_string()))?;
            let (key, value) = (key.trim(), value.trim());
            let n: usize = value
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| BudgetError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                })?;
            match key {
                "steps" => b.max_steps = n,
                "depth" => b.max_depth = n,
                "inst" => b.max_instantiations_per_binder = n,
                "timeout" => b.timeout = n as u64,
                "worlds" => b.refute.worlds = n,
                "domain" => b.refute.domain = n,
                _ => return Err(BudgetError::UnknownKey(key.to_string())),
            }
        }
        Ok(b)
    }
}

impl fmt::Display for SearchBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "steps={},depth={},inst={},timeout={},worlds={},domain={}",
            self.max_steps,
            self.max_depth,
            self.max_instantiations_per_binder,
            self.timeout,
            self.refute.worlds,
            self.refute.domain
        )
    }
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    /// A derivation from the goal to the empty bouquet.
    Proved(Derivation),
    Refuted(Box<Countermodel>),
    /// The budget ran out; `steps` rule applications were tried.
    Unknown { steps: usize },
}

impl SearchOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, SearchOutcome::Refuted(_))
    }
}

/// How the top of each deepening round is explored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Deterministic: the same goal and budget give the same derivation.
    #[default]
    Single,
    /// Sibling branches of the root in parallel, sharing the visited table.
    /// The proof found may vary between runs.
    Threads(usize),
}

pub fn prove(goal: &Bouquet, budget: &SearchBudget) -> SearchOutcome {
    prove_with(goal, budget, Parallelism::Single)
}

pub fn prove_with(goal: &Bouquet, budget: &SearchBudget, par: Parallelism) -> SearchOutcome {
    if let Some(c) = find_countermodel(goal, budget.refute) {
        return SearchOutcome::Refuted(Box::new(c));
    }
    let search = Search::new(budget);
    let start = Derivation::new(goal).start;
    match search.run(&start, par) {
        Some(instances) => {
            let (d, end) = Derivation::replay(&start, instances).expect("search replays its own steps");
            debug_assert!(end.is_empty());
            SearchOutcome::Proved(d)
        }
        None => SearchOutcome::Unknown {
            steps: search.steps.load(Ordering::Relaxed),
        },
    }
}

/// The single flower `(hyps ⫐ goal)`.
pub fn implication(hyps: &Bouquet, goal: &Bouquet) -> Bouquet {
    Bouquet::new(vec![Flower::bloom(
        Garden::of(hyps.flowers.clone()),
        vec![Garden::of(goal.flowers.clone())],
    )])
}

/// Proves `(hyps ⫐ goal)`. A proof converts to a derivation `goal ⇝* hyps`
/// with [`crate::calculus::build_strong_deduction_bwd`].
pub fn prove_hypothetical(hyps: &Bouquet, goal: &Bouquet, budget: &SearchBudget) -> SearchOutcome {
    prove(&implication(hyps, goal), budget)
}

struct Search {
    budget: SearchBudget,
    deadline: Instant,
    steps: AtomicUsize,
    exhausted: AtomicBool,
    /// Digest to the most growth moves it was explored with this round.
    visited: Mutex<HashMap<Digest, usize>>,
}

/// Branch-local state: instantiation counts per binder.
#[derive(Clone, Default)]
struct Branch {
    instantiated: HashMap<String, usize>,
}

impl Search {
    fn new(budget: &SearchBudget) -> Self {
        Search {
            budget: *budget,
            deadline: Instant::now() + Duration::from_millis(budget.timeout),
            steps: AtomicUsize::new(0),
            exhausted: AtomicBool::new(false),
            visited: Mutex::new(HashMap::new()),
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.exhausted.load(Ordering::Relaxed) {
            return true;
        }
        if self.steps.load(Ordering::Relaxed) >= self.budget.max_steps || Instant::now() >= self.deadline {
            self.exhausted.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }

    fn apply(&self, b: &Bouquet, inst: &RuleInstance) -> Option<Bouquet> {
        self.steps.fetch_add(1, Ordering::Relaxed);
        apply_rule(b, inst).ok()
    }

    fn run(&self, start: &Bouquet, par: Parallelism) -> Option<Vec<RuleInstance>> {
        for limit in 0..=self.budget.max_depth {
            self.visited.lock().expect("visited lock").clear();
            let mut log = Vec::new();
            let found = match par {
                Parallelism::Single => self.dfs(start, limit, &Branch::default(), &mut log),
                Parallelism::Threads(n) => self.root_parallel(start, limit, n.max(1), &mut log),
            };
            if found {
                return Some(log);
            }
            if self.out_of_budget() {
                return None;
            }
        }
        None
    }

    fn root_parallel(&self, start: &Bouquet, limit: usize, threads: usize, log: &mut Vec<RuleInstance>) -> bool {
        let Some(state) = self.simplify(start, log) else { return false };
        if state.is_empty() {
            return true;
        }
        if limit == 0 {
            return false;
        }
        let moves = self.moves(&state, &Branch::default());
        let results: Vec<Option<Vec<RuleInstance>>> = std::thread::scope(|s| {
            let chunks: Vec<Vec<(usize, &(RuleInstance, Option<String>))>> = (0..threads)
                .map(|t| moves.iter().enumerate().skip(t).step_by(threads).collect())
                .collect();
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    let state = &state;
                    s.spawn(move || {
                        let mut found = Vec::new();
                        for (i, (inst, binder)) in chunk {
                            if let Some(tail) = self.try_move(state, inst, binder, limit, &Branch::default()) {
                                found.push((i, tail));
                                break;
                            }
                        }
                        found
                    })
                })
                .collect();
            let mut all: Vec<(usize, Vec<RuleInstance>)> =
                handles.into_iter().flat_map(|h| h.join().expect("search thread")).collect();
            all.sort_by_key(|(i, _)| *i);
            all.into_iter().map(|(_, t)| Some(t)).collect()
        });
        match results.into_iter().flatten().next() {
            Some(tail) => {
                log.extend(tail);
                true
            }
            None => false,
        }
    }

    /// Applies one growth move and searches below it; the log of a success.
    fn try_move(
        &self,
        state: &Bouquet,
        inst: &RuleInstance,
        binder: &Option<String>,
        limit: usize,
        branch: &Branch,
    ) -> Option<Vec<RuleInstance>> {
        let next = self.apply(state, inst)?;
        let mut sub = branch.clone();
        if let Some(x) = binder {
            *sub.instantiated.entry(x.clone()).or_default() += 1;
        }
        let mut log = vec![inst.clone()];
        self.dfs(&next, limit - 1, &sub, &mut log).then_some(log)
    }

    fn dfs(&self, state: &Bouquet, limit: usize, branch: &Branch, log: &mut Vec<RuleInstance>) -> bool {
        let mark = log.len();
        let Some(state) = self.simplify(state, log) else {
            log.truncate(mark);
            return false;
        };
        if state.is_empty() {
            return true;
        }
        if limit == 0 || self.out_of_budget() {
            log.truncate(mark);
            return false;
        }
        {
            let mut visited = self.visited.lock().expect("visited lock");
            let d = digest(&state);
            if visited.get(&d).is_some_and(|&seen| seen >= limit) {
                log.truncate(mark);
                return false;
            }
            visited.insert(d, limit);
        }
        for (inst, binder) in self.moves(&state, branch) {
            if let Some(tail) = self.try_move(&state, &inst, &binder, limit, branch) {
                log.extend(tail);
                return true;
            }
            if self.out_of_budget() {
                break;
            }
        }
        log.truncate(mark);
        false
    }

    /// Applies simplifiers until none applies. `None` when out of budget.
    fn simplify(&self, start: &Bouquet, log: &mut Vec<RuleInstance>) -> Option<Bouquet> {
        let mut cur = start.clone();
        while let Some(inst) = simplifier(&cur) {
            if self.out_of_budget() {
                return None;
            }
            cur = self.apply(&cur, &inst).expect("simplifier instances are checked");
            log.push(inst);
        }
        Some(cur)
    }

    /// Growth moves in priority order, each with the binder it
    /// instantiates.
    fn moves(&self, b: &Bouquet, branch: &Branch) -> Vec<(RuleInstance, Option<String>)> {
        let limit = self.budget.max_instantiations_per_binder;
        let avoid = names_in(&b.flowers);
        let fresh = fresh_var(&Var::new("c"), &avoid);
        let mut out = Vec::new();
        for rule in [RuleName::Ipet, RuleName::Ipis] {
            let wanted = if rule == RuleName::Ipet {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let mut insts = applicable_instances(b, None, &[rule]);
            insts.retain(|i| !i.params.nodup && i.path.polarity() == wanted);
            insts.extend(fresh_instances(b, rule, wanted, &fresh));
            sort_innermost(&mut insts);
            for inst in insts {
                let (x, _) = inst.params.subst.as_ref().and_then(|s| s.iter().next()).expect("one binder");
                let key = format!("{}:{}", rule.as_str(), base_name(x));
                if branch.instantiated.get(&key).copied().unwrap_or(0) < limit {
                    out.push((inst, Some(key)));
                }
            }
        }
        let mut ups = poll_up_moves(b);
        sort_innermost(&mut ups);
        out.extend(ups.into_iter().map(|i| (i, None)));
        out
    }
}

fn base_name(x: &Var) -> &str {
    x.name().trim_end_matches('\'')
}

/// Instances of `rule` that instantiate one binder with `fresh`.
fn fresh_instances(b: &Bouquet, rule: RuleName, wanted: Polarity, fresh: &Var) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for steps in areas(b) {
        if Path::area(steps.clone()).polarity() != wanted {
            continue;
        }
        let area = resolve_area(&b.flowers, &steps).expect("enumerated");
        for (j, f) in area.iter().enumerate() {
            let Flower::Bloom(bl) = f else { continue };
            let at = Path::flower(steps.clone(), j);
            let subst = |y: &Var| crate::syntax::Substitution::new([(y.clone(), fresh.clone())]);
            if rule == RuleName::Ipis {
                for y in &bl.pistil.binders {
                    out.push(RuleInstance::new(rule, at.clone()).with(|p| p.subst = Some(subst(y))));
                }
            } else {
                for (k, g) in bl.petals.iter().enumerate() {
                    for z in &g.binders {
                        out.push(RuleInstance::new(rule, at.clone()).with(|p| {
                            p.petal = Some(k);
                            p.subst = Some(subst(z));
                        }));
                    }
                }
            }
        }
    }
    out.retain(|i| apply_rule(b, i).is_ok());
    out
}

/// Copies of hypothesis blooms into hypothesis areas.
fn poll_up_moves(b: &Bouquet) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for steps in areas(b) {
        if Path::area(steps.clone()).polarity() != Polarity::Negative {
            continue;
        }
        let ctx = Context {
            frame: b.clone(),
            hole: steps.clone(),
        };
        let mut seen: Vec<&Flower> = Vec::new();
        for c in ctx.pollination_candidates() {
            if c.flower.is_atom() || Path::area(c.area.clone()).polarity() != Polarity::Negative {
                continue;
            }
            if seen.iter().any(|s| alpha_eq_flower(s, c.flower)) {
                continue;
            }
            seen.push(c.flower);
            out.push(
                RuleInstance::new(RuleName::PollUp, Path::area(steps.clone()))
                    .with(|p| p.insert = Some(Bouquet::new(vec![c.flower.clone()]))),
            );
        }
    }
    out
}

/// Deeper paths first, then left to right.
fn sort_innermost(insts: &mut [RuleInstance]) {
    insts.sort_by(|a, b| {
        b.path
            .steps
            .len()
            .cmp(&a.path.steps.len())
            .then_with(|| a.path.address().cmp(&b.path.address()))
    });
}

/// The first simplifier instance by rule priority, then innermost path.
fn simplifier(b: &Bouquet) -> Option<RuleInstance> {
    let mut all = areas(b);
    all.sort_by(|x, y| {
        y.len()
            .cmp(&x.len())
            .then_with(|| crate::context::steps_address(x).cmp(&crate::context::steps_address(y)))
    });
    for rule in [RuleName::Epet, RuleName::PollDown, RuleName::Srep] {
        for steps in &all {
            if let Some(inst) = simplifier_at(b, steps, rule) {
                return Some(inst);
            }
        }
    }
    None
}

fn simplifier_at(b: &Bouquet, steps: &[Step], rule: RuleName) -> Option<RuleInstance> {
    let area = resolve_area(&b.flowers, steps).expect("enumerated");
    let polarity = Path::area(steps.to_vec()).polarity();
    for (j, f) in area.iter().enumerate() {
        let at = Path::flower(steps.to_vec(), j);
        let inst = match (rule, f) {
            (RuleName::Epet, Flower::Bloom(bl)) => {
                let k = bl.petals.iter().position(Garden::is_empty)?;
                RuleInstance::new(rule, at).with(|p| p.petal = Some(k))
            }
            (RuleName::PollDown, f) if f.is_atom() || polarity == Polarity::Positive => {
                let (ctx, content) = split(b, &at).expect("index in range");
                if !ctx.is_pollinated(&content.flowers) {
                    continue;
                }
                RuleInstance::new(rule, at)
            }
            (RuleName::Srep, Flower::Bloom(bl)) => {
                let k = bl
                    .pistil
                    .flowers
                    .iter()
                    .position(|g| matches!(g, Flower::Bloom(c) if c.pistil.is_empty()))?;
                RuleInstance::new(rule, at).with(|p| p.case = Some(k))
            }
            _ => continue,
        };
        if apply_rule(b, &inst).is_ok() {
            return Some(inst);
        }
    }
    None
}
