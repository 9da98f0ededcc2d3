use super::*;
use crate::corpus;
use crate::diag::codes;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn codes_of(src: &str) -> Vec<&'static str> {
    parse(src).unwrap_err().iter().map(|d| d.code).collect()
}

fn roundtrip(src: &str) {
    let unit = parse(src).unwrap();
    let text = render(&unit);
    let again = parse(&text).unwrap_or_else(|d| panic!("{d:?}\n{text}"));
    assert_eq!(again.normalized(), unit.normalized(), "\n{text}");
}

#[test]
fn smallest_machine() {
    let unit = parse("machine M { initial state A {} }").unwrap();
    assert_eq!(unit.machines.len(), 1);
    let m = &unit.machines[0];
    assert_eq!(m.states.len(), 1);
    assert_eq!(m.initial().name.name, "A");
    assert!(m.transitions.is_empty());
}

#[test]
fn aggregation_corpus_shape() {
    let unit = parse(corpus::AGGREGATION).unwrap();
    let m = unit.machine(corpus::AGGREGATION_MACHINE).unwrap();
    assert_eq!(m.requires.len(), 1);
    assert_eq!(m.requires[0].name, "AggregationIface");
    assert_eq!(m.states.len(), 2);
    let iface = unit.interface("AggregationIface").unwrap();
    assert_eq!(iface.events.len(), 2);
    assert_eq!(iface.operations.len(), 2);
    assert_eq!(unit.modules.len(), 1);
}

#[test]
fn missing_initial_state() {
    let errs = parse("machine M { state A {} }").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].code, codes::NO_INITIAL);
    assert!(errs[0].message.contains("no initial state"));
}

#[test]
fn duplicate_initial_state() {
    assert_eq!(
        codes_of("machine M { initial state A initial state B }"),
        [codes::DUPLICATE_INITIAL]
    );
}

#[test]
fn bad_character() {
    assert!(codes_of("machine M { initial state A } $").contains(&codes::LEXICAL));
}

#[test]
fn unexpected_token() {
    assert_eq!(
        codes_of("machine M { initial state A } transition"),
        [codes::SYNTAX]
    );
    assert_eq!(codes_of("machine { }"), [codes::SYNTAX]);
}

#[test]
fn final_state_shape() {
    let src = "machine M { initial state A final state F { during #T } transition A -> F }";
    assert_eq!(codes_of(src), [codes::SHAPE]);
    let src = "machine M { initial state A final state F transition F -> A }";
    assert_eq!(codes_of(src), [codes::SHAPE]);
}

#[test]
fn unknown_type_is_rejected() {
    assert_eq!(codes_of("interface I { var x: float }"), [codes::SYNTAX]);
}

#[test]
fn module_needs_a_controller() {
    assert_eq!(codes_of("module X { platform P; }"), [codes::SHAPE]);
}

#[test]
fn shape_errors_are_all_reported() {
    let errs =
        parse("machine M { state A } machine N { initial state A initial state B }").unwrap_err();
    let got: Vec<_> = errs.iter().map(|d| d.code).collect();
    assert_eq!(got, [codes::NO_INITIAL, codes::DUPLICATE_INITIAL]);
}

#[test]
fn precedence() {
    let unit =
        parse("machine M { initial state A transition A -> A [a or b and not c == 1 + 2 * -3] }")
            .unwrap();
    let g = unit.machines[0].transitions[0].guard.as_ref().unwrap();
    assert_eq!(text::expr(g), "a or b and not c == 1 + 2 * -3");
    let ExprKind::Binary(BinOp::Or, _, rhs) = &g.kind else {
        panic!("{g:?}")
    };
    let ExprKind::Binary(BinOp::And, _, rhs) = &rhs.kind else {
        panic!()
    };
    // Unary operators bind tightest: `not c` is the left operand of `==`.
    let ExprKind::Binary(BinOp::Eq, not, sum) = &rhs.kind else {
        panic!()
    };
    assert!(matches!(not.kind, ExprKind::Unary(UnOp::Not, _)));
    let ExprKind::Binary(BinOp::Add, _, prod) = &sum.kind else {
        panic!()
    };
    let ExprKind::Binary(BinOp::Mul, _, neg) = &prod.kind else {
        panic!()
    };
    assert!(matches!(neg.kind, ExprKind::Unary(UnOp::Neg, _)));
}

#[test]
fn ternary_is_loosest() {
    let unit = parse("machine M { initial state A transition A -> A [p or q ? r : s] }").unwrap();
    let g = unit.machines[0].transitions[0].guard.as_ref().unwrap();
    let ExprKind::Cond(c, _, _) = &g.kind else {
        panic!("{g:?}")
    };
    assert!(matches!(c.kind, ExprKind::Binary(BinOp::Or, ..)));
}

#[test]
fn actions_and_triggers() {
    let src = "machine M { clock T initial state A { entry #T; x := since(T); Go(1, 2.5) } \
               state B transition A -> B on e [since(T) >= 25] / #T }";
    let unit = parse(src).unwrap();
    let m = &unit.machines[0];
    let entry = &m.states[0].entry.as_ref().unwrap().actions;
    assert!(matches!(&entry[0], Action::ResetClock { clock, .. } if clock.name == "T"));
    assert!(matches!(&entry[1], Action::Assign { target, .. } if target.name == "x"));
    assert!(
        matches!(&entry[2], Action::Call { op, args, .. } if op.name == "Go" && args.len() == 2)
    );
    let t = &m.transitions[0];
    assert_eq!(t.trigger.as_ref().unwrap().name, "e");
    assert!(t.guard.is_some());
    assert!(m.states[1].entry.is_none());
}

#[test]
fn transition_order_is_textual() {
    let src = "machine M { initial state A state B state C \
               transition A -> C transition B -> A transition A -> B transition A -> A }";
    let unit = parse(src).unwrap();
    let targets: Vec<_> = unit.machines[0]
        .transitions
        .iter()
        .map(|t| t.target.name.as_str())
        .collect();
    assert_eq!(targets, ["C", "A", "B", "A"]);
}

#[test]
fn declaration_order_is_kept() {
    let unit = parse(corpus::TAXIS).unwrap();
    assert_eq!(
        unit.order,
        [
            DeclRef::Interface(0),
            DeclRef::Machine(0),
            DeclRef::Operation(0),
            DeclRef::Module(0)
        ]
    );
}

#[test]
fn spans_locate_declarations() {
    let src = "machine M {\n  initial state Alpha\n}";
    let unit = parse(src).unwrap();
    let s = &unit.machines[0].states[0];
    assert_eq!(&src[s.name.span.start..s.name.span.end], "Alpha");
    assert_eq!((s.name.span.line, s.name.span.col), (2, 17));
    let m = &unit.machines[0];
    assert_eq!((m.span.start, m.span.end), (0, src.len()));
}

#[test]
fn trivial_roundtrip() {
    roundtrip("machine M { initial state A {} }");
}

#[test]
fn corpus_roundtrips() {
    roundtrip(corpus::AGGREGATION);
    roundtrip(corpus::TAXIS);
}

#[test]
fn literal_roundtrip() {
    roundtrip(
        "interface I { var a: real = -0.7 var b: real = 1e-9 var c: vector2d = vec2(-1.5, 2.0) \
         var d: int = -3 var e: boolean = true var f: real = 12345678.125 }",
    );
}

#[test]
fn parse_is_deterministic() {
    for src in [
        corpus::AGGREGATION,
        corpus::TAXIS,
        "machine M { state A } $ @",
    ] {
        assert_eq!(parse(src), parse(src));
    }
}

fn fuzz_source(seed: u64) -> String {
    crate::fuzz::model(&mut ChaCha8Rng::seed_from_u64(seed)).source
}

proptest! {
    #[test]
    fn rendered_models_reparse_equal(seed in any::<u64>()) {
        let src = fuzz_source(seed);
        let unit = parse(&src).unwrap();
        let again = parse(&render(&unit)).unwrap();
        prop_assert_eq!(again.normalized(), unit.normalized());
    }

    #[test]
    fn rendering_is_a_fixed_point(seed in any::<u64>()) {
        let once = render(&parse(&fuzz_source(seed)).unwrap());
        let twice = render(&parse(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn diagnostics_stay_inside_source(src in "[a-z{}()\\[\\];:=<>#/ .0-9\n-]{0,80}") {
        if let Err(diags) = parse(&src) {
            prop_assert!(!diags.is_empty());
            for d in diags {
                prop_assert!(d.span.start <= d.span.end && d.span.end <= src.len(), "{:?}", d);
            }
        }
    }

    #[test]
    fn mangled_corpus_never_panics(cut in 0usize..2000, junk in "[^\\x00]{0,4}") {
        let src = corpus::TAXIS;
        let cut = cut.min(src.len());
        let cut = (0..=cut).rev().find(|&i| src.is_char_boundary(i)).unwrap();
        let mangled = src[..cut].to_string() + &junk + &src[cut..];
        match parse(&mangled) {
            Ok(_) => {}
            Err(diags) => {
                for d in diags {
                    prop_assert!(d.span.end <= mangled.len());
                }
            }
        }
    }
}
