use flowers::calculus::{
    applicable_instances, check_derivation, is_proof, CheckError, Derivation, ProofFile, RuleName, StepFailure,
};
use flowers::context::split;
use flowers::syntax::{
    bound_vars, depth, free_vars, is_capture_avoiding, parse_bouquet, print_bouquet, Signature, Substitution, Var,
};

const FIG8: &str = include_str!("../../../proofs/fig8.fproof");

fn load() -> ProofFile {
    ProofFile::parse(FIG8, &Signature::default()).unwrap()
}

#[test]
fn replays_to_the_empty_bouquet() {
    let pf = load();
    let t = std::time::Instant::now();
    let end = check_derivation(&pf.derivation).unwrap();
    assert!(t.elapsed().as_secs_f64() < 0.1);
    assert!(end.is_empty());
    assert!(is_proof(&pf.derivation));
    assert_eq!(pf.derivation.len(), 11);
}

#[test]
fn follows_the_rule_sequence() {
    let rules: Vec<&str> = load().derivation.steps.iter().map(|s| s.instance.rule.as_str()).collect();
    assert_eq!(
        rules,
        [
            "ipet", "poll_up", "ipis", "srep", "poll_down", "poll_down", "srep", "epet", "epet", "epet", "epet"
        ]
    );
    assert!(load().derivation.steps.iter().all(|s| s.instance.rule.is_natural()));
}

#[test]
fn intermediate_states_match_the_printed_lines() {
    let pf = load();
    let states = pf.derivation.states().unwrap();
    let sig = &pf.signature;
    let expect = |i: usize, text: &str| {
        assert_eq!(states[i], parse_bouquet(text, sig).unwrap(), "state {i}");
    };
    expect(1, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y) |> q(y)]]");
    expect(2, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y), [x'. |> [p(x') |>] ; q(x')] |> q(y)]]");
    expect(3, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y), [|> [p(y) |>] ; q(y)] |> q(y)]]");
    expect(4, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y) |> [[p(y) |>] |> q(y)], [q(y) |> q(y)]]]");
    expect(6, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y) |> [[|>] |> q(y)], [q(y) |> .]]]");
    expect(7, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y) |> [|> .], [q(y) |> .]]]");
    expect(9, "[[x. |> [p(x) |>] ; q(x)] |> [y. p(y) |> .]]");
    expect(10, "[[x. |> [p(x) |>] ; q(x)] |> .]");
}

#[test]
fn swapping_steps_three_and_four_fails_there() {
    let mut d = load().derivation;
    d.steps.swap(2, 3);
    let err: CheckError = check_derivation(&d).unwrap_err();
    assert_eq!(err.step, 2);
    assert!(matches!(err.failure, StepFailure::Rule(_) | StepFailure::DigestMismatch { .. }));
}

#[test]
fn corrupted_digest_is_reported() {
    let text = FIG8.replace("=> d7268d65", "=> 00000000");
    let pf = ProofFile::parse(&text, &Signature::default()).unwrap();
    let err = check_derivation(&pf.derivation).unwrap_err();
    assert_eq!(err.step, 3);
    assert!(matches!(err.failure, StepFailure::DigestMismatch { .. }));
}

#[test]
fn printing_the_file_reparses_to_the_same_proof() {
    let pf = load();
    let again = ProofFile::parse(&pf.to_string(), &Signature::default()).unwrap();
    assert_eq!(again, pf);
}

#[test]
fn goal_metrics() {
    let pf = load();
    let goal = &pf.derivation.start;
    assert!(free_vars(goal).is_empty());
    let mut bv: Vec<String> = bound_vars(goal).iter().map(|v| v.name().to_string()).collect();
    bv.sort();
    assert_eq!(bv, ["x", "y", "z"]);
    assert_eq!(depth(&goal.flowers[0]), 3);
    let s = Substitution::new([(Var::new("x"), Var::new("w"))]);
    assert!(is_capture_avoiding(&s, goal));
}

#[test]
fn first_step_is_offered() {
    let pf = load();
    let goal = &pf.derivation.start;
    let offered = applicable_instances(goal, Some(&"0/petal:0/area#{0}".parse().unwrap()), &RuleName::NATURAL);
    let first = &pf.derivation.steps[0].instance;
    assert!(offered.contains(first), "{first} not in {offered:?}");
}

#[test]
fn split_at_the_pistil_area() {
    let pf = load();
    let (ctx, content) = split(&pf.derivation.start, &"0/pistil/area".parse().unwrap()).unwrap();
    assert_eq!(print_bouquet(&content), "[x. |> q(x) ; [p(x) |>]]");
    assert_eq!(ctx.inversions(), 1);
    assert_eq!(ctx.fill(&content.flowers), pf.derivation.start);
}

#[test]
fn zero_step_proof_of_the_empty_bouquet() {
    let d = Derivation::new(&Default::default());
    assert!(check_derivation(&d).unwrap().is_empty());
    assert!(is_proof(&d));
}
