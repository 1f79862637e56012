use proptest::prelude::*;

use exforge::toylang::{run_source, tokenize, ConstructKind, Limits, RunStatus};

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..20).prop_map(|n| n.to_string()),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(String::from)
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), prop::sample::select(vec!["+", "-", "*", "<", "==", "&&", "||", "%"]), inner)
            .prop_map(|(l, op, r)| format!("({l} {op} {r})"))
    })
}

fn block(depth: u32) -> BoxedStrategy<Vec<String>> {
    let simple = prop_oneof![
        (prop::sample::select(vec!["a", "b", "c"]), expr()).prop_map(|(v, e)| format!("{v} = {e}")),
        expr().prop_map(|e| format!("print {e}")),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(|v| format!("read {v}")),
        (1i64..5).prop_map(|n| format!("alloc arr {n}\narr[0] = {n}\nprint arr[0]\nfree arr")),
    ];
    if depth == 0 {
        return prop::collection::vec(simple, 1..4).boxed();
    }
    let nested = prop_oneof![
        3 => simple,
        1 => (expr(), block(depth - 1), block(depth - 1))
            .prop_map(|(c, t, e)| format!("if {c} {{\n{}\n}} else {{\n{}\n}}", t.join("\n"), e.join("\n"))),
        1 => (1i64..4, block(depth - 1))
            .prop_map(|(n, body)| format!("k = {n}\nwhile k > 0 {{\n{}\nk = k - 1\n}}", body.join("\n"))),
    ];
    prop::collection::vec(nested, 1..5).boxed()
}

/// Terminating programs over three pre-bound scalars.
fn program() -> impl Strategy<Value = Vec<String>> {
    block(2).prop_map(|stmts| {
        let mut all = vec!["a = 1".to_string(), "b = 2".to_string(), "c = 3".to_string()];
        all.extend(stmts);
        all
    })
}

fn input() -> impl Strategy<Value = String> {
    prop::collection::vec(-50i64..50, 0..6).prop_map(|v| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn runs_are_deterministic(p in program(), input in input()) {
        let src = p.join("\n");
        let a = run_source(&src, &input, &Limits::default()).unwrap();
        let b = run_source(&src, &input, &Limits::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn a_prefix_never_costs_more(p in program(), input in input(), cut in 3usize..20) {
        let cut = cut.min(p.len());
        let short = run_source(&p[..cut].join("\n"), &input, &Limits::default()).unwrap();
        let full = run_source(&p.join("\n"), &input, &Limits::default()).unwrap();
        prop_assert!(short.metrics.steps <= full.metrics.steps);
        prop_assert!(full.output.starts_with(&short.output));
        if short.status != RunStatus::Ok {
            prop_assert_eq!(short, full);
        }
    }

    #[test]
    fn step_limit_stops_at_the_limit(p in program(), input in input(), frac in 0.0f64..1.0) {
        let src = p.join("\n");
        let free = run_source(&src, &input, &Limits::default()).unwrap();
        let exact = Limits { max_steps: free.metrics.steps, ..Limits::default() };
        prop_assert_eq!(&run_source(&src, &input, &exact).unwrap(), &free);
        if free.status == RunStatus::Ok && free.metrics.steps > 0 {
            let max_steps = (free.metrics.steps as f64 * frac) as u64;
            let r = run_source(&src, &input, &Limits { max_steps, ..Limits::default() }).unwrap();
            prop_assert_eq!(r.status, RunStatus::StepLimit);
            prop_assert_eq!(r.metrics.steps, max_steps);
        }
    }

    #[test]
    fn comments_and_layout_change_nothing(p in program(), input in input()) {
        let plain = run_source(&p.join("\n"), &input, &Limits::default()).unwrap();
        let noisy: String = p.iter().map(|s| format!("  {s}   # while alloc print\n\n")).collect();
        let mut noisy = run_source(&noisy, &input, &Limits::default()).unwrap();
        // a runtime error keeps its message; only its position moves
        if let (RunStatus::RuntimeError(a), RunStatus::RuntimeError(b)) = (&plain.status, &mut noisy.status) {
            prop_assert_eq!(&a.message, &b.message);
            (b.line, b.col) = (a.line, a.col);
        }
        prop_assert_eq!(plain, noisy);
    }

    #[test]
    fn trace_only_names_constructs_in_the_source(p in program(), input in input()) {
        let src = p.join("\n");
        let tokens: Vec<String> = tokenize(&src).unwrap().into_iter().map(|t| t.text).collect();
        let r = run_source(&src, &input, &Limits::default()).unwrap();
        for kind in &r.metrics.trace {
            let word = match kind {
                ConstructKind::Assign => "=",
                ConstructKind::Read => "read",
                ConstructKind::Print => "print",
                ConstructKind::If => "if",
                ConstructKind::While => "while",
                ConstructKind::Alloc => "alloc",
                ConstructKind::Free => "free",
                ConstructKind::ArrayRef => "[",
            };
            prop_assert!(tokens.iter().any(|t| t == word), "{kind:?} traced but absent");
        }
        // the three leading assignments always run
        prop_assert!(r.metrics.trace.contains(&ConstructKind::Assign));
    }

    #[test]
    fn token_positions_point_at_their_text(p in program()) {
        let src = p.join("\n");
        let lines: Vec<Vec<char>> = src.split('\n').map(|l| l.chars().collect()).collect();
        let tokens = tokenize(&src).unwrap();
        for pair in tokens.windows(2) {
            prop_assert!((pair[0].line, pair[0].col) < (pair[1].line, pair[1].col));
            prop_assert!(pair[0].end() <= (pair[1].line, pair[1].col));
        }
        for t in &tokens {
            let line = &lines[t.line as usize - 1];
            let start = t.col as usize - 1;
            let text: String = line[start..start + t.text.chars().count()].iter().collect();
            prop_assert_eq!(text, t.text.clone());
        }
    }
}
