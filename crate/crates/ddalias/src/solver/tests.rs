use super::*;
use crate::ir::parse_program;

fn load(name: &str) -> ProgramIR {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn cfg(v: Variant, a: Abstraction) -> VariantConfig {
    VariantConfig::new(v, a)
}

fn node(p: &ProgramIR, label: &str) -> NodeId {
    p.node_by_label(label).unwrap()
}

fn edges(r: &SolveResult, pairs: &BTreeSet<(NameId, NameId)>) -> BTreeSet<String> {
    pairs.iter().map(|&e| r.names.render_edge(e)).collect()
}

fn texts(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn receiver_edges(p: &ProgramIR, r: &SolveResult, call: &str, var: &str) -> BTreeSet<String> {
    let t = r.names.id(&AbstractName::Var(p.var_by_name(var).unwrap()));
    edges(r, &r.restrict_in(node(p, call), &BTreeSet::from([t])))
}

#[test]
fn fig2_id_resolves_one_target() {
    let p = load("fig2.ir");
    let r = solve(&p, cfg(Variant::Id, Abstraction::Tba)).unwrap();
    let n28 = node(&p, "n28");
    let t = r.names.by_text("t").unwrap();
    assert!(r.din(n28).contains(&t));
    assert_eq!(receiver_edges(&p, &r, "n28", "t"), texts(&["t→Y"]));
    let all: BTreeSet<String> = r
        .all_aliases()
        .iter()
        .map(|e| r.names.render_edge(e))
        .collect();
    assert_eq!(all, texts(&["q→z", "p→z", "x→X", "z→X", "X.f→Y", "t→Y"]));
    assert_eq!(r.call_graph[&n28], texts(&["Y::vfun"]));
}

#[test]
fn fig2_ex_and_cd_resolve_two_targets() {
    let p = load("fig2.ir");
    let ex = solve_ex(&p, Abstraction::Tba).unwrap();
    assert_eq!(receiver_edges(&p, &ex, "n28", "t"), texts(&["t→Y", "t→Z"]));
    let all: BTreeSet<String> = ex
        .all_aliases()
        .iter()
        .map(|e| ex.names.render_edge(e))
        .collect();
    assert!(all.is_superset(&texts(&["y→X", "X.f→Z"])));
    let cd = solve(&p, cfg(Variant::Cd, Abstraction::Tba)).unwrap();
    assert_eq!(receiver_edges(&p, &cd, "n28", "t"), texts(&["t→Y", "t→Z"]));
}

#[test]
fn fig5_object_store() {
    let p = load("fig5.ir");
    let on = solve(
        &p,
        cfg(Variant::Id, Abstraction::Tba).with_object_store(true),
    )
    .unwrap();
    assert_eq!(receiver_edges(&p, &on, "n05", "t"), texts(&["t→B"]));
    let off = solve(&p, cfg(Variant::Id, Abstraction::Tba)).unwrap();
    assert_eq!(receiver_edges(&p, &off, "n05", "t"), texts(&["t→B", "t→C"]));
}

#[test]
fn fig14_java_gain() {
    let p = load("fig14.ir");
    let jd = solve(&p, cfg(Variant::Jd, Abstraction::Tba)).unwrap();
    assert_eq!(receiver_edges(&p, &jd, "n28", "t"), texts(&["t→Y"]));
    let ex = solve_ex(&p, Abstraction::Tba).unwrap();
    assert_eq!(receiver_edges(&p, &ex, "n28", "t"), texts(&["t→Y", "t→Z"]));
}

#[test]
fn empty_program_does_nothing() {
    let p = parse_program("func main() { }").unwrap();
    let r = solve(&p, cfg(Variant::Id, Abstraction::Tba)).unwrap();
    assert!(r.states.iter().all(|s| *s == NodeState::default()));
    assert_eq!(r.counters.rounds, 1);
    assert_eq!(r.counters.demand_visits, 0);
}

#[test]
fn resolve_virtual_cases() {
    let p = load("fig2.ir");
    let names = NameTable::new(&p, Abstraction::Tba);
    let [t, y, z] = ["t", "&Y", "&Z"].map(|s| names.by_text(s).unwrap());
    let n28 = node(&p, "n28");
    let one: AliasRel = [(t, y)].into_iter().collect();
    assert_eq!(
        resolve_virtual(&p, &names, n28, &one).unwrap(),
        texts(&["Y::vfun"])
    );
    let two: AliasRel = [(t, y), (t, z)].into_iter().collect();
    assert_eq!(
        resolve_virtual(&p, &names, n28, &two).unwrap(),
        texts(&["Y::vfun", "Z::vfun"])
    );
    assert!(resolve_virtual(&p, &names, n28, &AliasRel::new())
        .unwrap()
        .is_empty());
}

#[test]
fn trace_goldens() {
    let p = load("fig2.ir");
    for (v, file) in [
        (Variant::Id, "fig2_id.trace"),
        (Variant::Cd, "fig2_cd.trace"),
    ] {
        let opts = SolveOptions {
            trace: true,
            ..SolveOptions::default()
        };
        let r = solve_with(&p, cfg(v, Abstraction::Tba), opts).unwrap();
        let table = diagnostics_trace(&r, &p);
        let golden = std::fs::read_to_string(format!(
            "{}/../../fixtures/golden/{file}",
            env!("CARGO_MANIFEST_DIR")
        ))
        .unwrap();
        assert_eq!(table.render(), golden, "{v}");
    }
}

#[test]
fn trace_union_is_final_state() {
    let p = load("fig2.ir");
    let opts = SolveOptions {
        trace: true,
        ..SolveOptions::default()
    };
    let r = solve_with(&p, cfg(Variant::Id, Abstraction::Tba), opts).unwrap();
    let table = diagnostics_trace(&r, &p);
    let mut fin = BTreeSet::new();
    for &n in p.entry_nodes() {
        if matches!(p.node(n).kind, StmtKind::VirtualCall { .. })
            || n == p.entry_cfg().start
            || n == p.entry_cfg().end
        {
            continue;
        }
        fin.extend(r.state(n).dout.iter().map(|&x| r.names.text(x).to_string()));
        fin.extend(r.state(n).aout.iter().map(|e| r.names.render_edge(e)));
    }
    assert_eq!(table.shown, fin);
}

#[test]
fn one_statement_trace_has_one_round() {
    let p = parse_program("class X { }\nfunc main() { var x: X*\n n1: x = new X }").unwrap();
    let opts = SolveOptions {
        trace: true,
        ..SolveOptions::default()
    };
    let r = solve_with(&p, cfg(Variant::Id, Abstraction::Tba), opts).unwrap();
    let t = diagnostics_trace(&r, &p);
    assert_eq!(t.rounds, 1);
    assert_eq!(
        t.render(),
        "stmt | r1 demand | r1 ptg\nn1: x = new X | ∅ | ∅\n"
    );
}

#[test]
fn fixpoint_and_orders_on_fixtures() {
    for f in [
        "fig2.ir", "fig3a.ir", "fig4a.ir", "fig4b.ir", "fig5.ir", "fig12.ir", "fig14.ir",
    ] {
        let p = load(f);
        for v in [Variant::Id, Variant::Cd, Variant::Ex, Variant::Jd] {
            for a in [Abstraction::Tba, Abstraction::Asb] {
                let Ok(base) = solve(&p, cfg(v, a)) else {
                    continue;
                };
                assert!(check_fixpoint(&p, &base).unwrap().is_empty(), "{f} {v} {a}");
                for order in [
                    WorklistOrder::Lifo,
                    WorklistOrder::Rpo,
                    WorklistOrder::Shuffled(1),
                    WorklistOrder::Shuffled(2),
                ] {
                    let opts = SolveOptions {
                        order,
                        ..SolveOptions::default()
                    };
                    let other = solve_with(&p, cfg(v, a), opts).unwrap();
                    assert_eq!(other.states, base.states, "{f} {v} {a} {order:?}");
                }
            }
        }
    }
}

#[test]
fn budget_is_enforced() {
    let p = load("fig2.ir");
    let opts = SolveOptions {
        budget: Some(3),
        ..SolveOptions::default()
    };
    let err = solve_with(&p, cfg(Variant::Id, Abstraction::Tba), opts).unwrap_err();
    assert!(matches!(err, AnalysisError::BudgetExceeded { .. }));
}

#[test]
fn virtual_call_bodies_are_spliced_on_the_fly() {
    let text = "class X { field f: X* }\nclass Y : X { }\nvirtual m in X, Y\n\
        func X::m(this: X*) { var u: X*\n x1: u = new X\n }\n\
        func Y::m(this: X*) { var w: X*\n y1: w = this\n y2: w->f = new Y\n }\n\
        func main() { var a: X* var b: X*\n n1: a = new Y\n n2: vcall a->m()\n n3: b = a->f\n n4: vcall b->m()\n }";
    let p = parse_program(text).unwrap();
    for v in [Variant::Id, Variant::Ex] {
        let r = solve(&p, cfg(v, Abstraction::Tba)).unwrap();
        assert_eq!(r.call_graph[&node(&p, "n2")], texts(&["Y::m"]), "{v}");
        assert_eq!(receiver_edges(&p, &r, "n4", "b"), texts(&["b→Y"]), "{v}");
        assert!(check_fixpoint(&p, &r).unwrap().is_empty());
    }
}

#[test]
fn direct_call_matches_inlined_program() {
    let call = "class X { }\nclass Y : X { }\nvirtual m in X, Y\n\
        func f(q: X*) -> X* { var r: X*\n f1: r = q\n f2: return r }\n\
        func main() { var a: X* var b: X*\n n1: a = new Y\n n2: call f(a) -> b\n n3: vcall b->m()\n }";
    let inlined = "class X { }\nclass Y : X { }\nvirtual m in X, Y\n\
        func main() { var a: X* var b: X* var q: X* var r: X*\n n1: a = new Y\n\
          i1: q = a\n i2: r = q\n i3: b = r\n n3: vcall b->m()\n }";
    for v in [Variant::Id, Variant::Ex] {
        let p = parse_program(call).unwrap();
        let r = solve(&p, cfg(v, Abstraction::Tba)).unwrap();
        let q = parse_program(inlined).unwrap();
        let s = solve(&q, cfg(v, Abstraction::Tba)).unwrap();
        assert_eq!(
            receiver_edges(&p, &r, "n3", "b"),
            receiver_edges(&q, &s, "n3", "b")
        );
        assert_eq!(r.call_graph[&node(&p, "n3")], texts(&["Y::m"]));
    }
}
