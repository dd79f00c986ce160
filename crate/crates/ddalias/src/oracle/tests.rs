use std::collections::BTreeSet;

use super::*;
use crate::ir::{parse_program, NodeId};
use crate::transfer::Mutation;
use crate::Abstraction::{Asb, Tba};

fn load(name: &str) -> ProgramIR {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn node(p: &ProgramIR, label: &str) -> NodeId {
    p.node_by_label(label).unwrap()
}

fn labels(p: &ProgramIR, ns: &[NodeId]) -> Vec<String> {
    ns.iter()
        .map(|&n| p.node(n).label.clone())
        .filter(|l| l != "start" && l != "end")
        .collect()
}

const LOOP: &str = "class X { }\nfunc main() { var a: X*\n\
    n1: skip\n n2: skip\n n3: skip\n n4: skip\n n5: skip\n n6: skip\n\
    edges: n1->n2, n2->n3, n2->n4, n3->n5, n4->n5, n5->n2, n5->n6 }";

const DIAMOND: &str = "class X { }\nclass Y : X { }\nvirtual vfun in X, Y\n\
    func main() { var t: X*\n\
    n1: t = new X\n n2: t = new Y\n n3: skip\n n4: vcall t->vfun()\n\
    edges: n1->n2, n1->n3, n2->n4, n3->n4 }";

#[test]
fn diamond_has_two_paths_to_the_join() {
    let p = parse_program(DIAMOND).unwrap();
    assert_eq!(
        enumerate_paths(&p, node(&p, "n4"), 10, 100).unwrap().len(),
        2
    );
}

#[test]
fn loop_paths_match_the_qualified_decomposition() {
    let p = parse_program(LOOP).unwrap();
    let paths = enumerate_paths(&p, node(&p, "n5"), 8, 1000).unwrap();
    let split: Vec<(Vec<String>, Vec<String>)> = paths
        .iter()
        .map(|r| (labels(&p, &r.forward), labels(&p, &r.backward)))
        .collect();
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert!(split.contains(&(v(&["n1", "n2", "n3"]), v(&["n2", "n4", "n5", "n6"]))));
    assert!(split.contains(&(v(&["n1", "n2", "n3", "n5", "n2", "n4"]), v(&["n6"]))));
    let rho = paths
        .iter()
        .find(|r| labels(&p, &r.forward) == v(&["n1", "n2", "n3"]))
        .unwrap();
    assert_eq!(rho.pred(), Some(node(&p, "n3")));
    assert_eq!(rho.succ(), Some(node(&p, "n2")));
    for r in &paths {
        let w = r.walk();
        assert!(w
            .windows(2)
            .all(|e| p.entry_cfg().edges.contains(&(e[0], e[1]))));
    }
    assert!(matches!(
        enumerate_paths(&p, node(&p, "n5"), 50, 10),
        Err(OracleError::PathBudgetExceeded { cap: 10 })
    ));
}

#[test]
fn straight_line_has_one_path_per_pivot() {
    let p = load("fig2.ir");
    for &n in p.entry_nodes() {
        assert_eq!(enumerate_paths(&p, n, 100, 10).unwrap().len(), 1);
    }
}

#[test]
fn single_path_mop_equals_mfp() {
    let p = load("fig2.ir");
    let n28 = node(&p, "n28");
    for v in [Variant::Id, Variant::Cd, Variant::Ex] {
        let cfg = VariantConfig::new(v, Tba);
        let r = solve(&p, cfg).unwrap();
        let rho = &enumerate_paths(&p, n28, 100, 10).unwrap()[0];
        assert_eq!(&mop_along_path(&p, rho, cfg).unwrap(), r.state(n28), "{v}");
        assert_eq!(
            &mop_meet(&p, n28, 100, 10, cfg).unwrap(),
            r.state(n28),
            "{v}"
        );
    }
}

#[test]
fn path_without_assignments_is_empty() {
    let p = parse_program(LOOP).unwrap();
    let cfg = VariantConfig::new(Variant::Id, Tba);
    for r in enumerate_paths(&p, node(&p, "n5"), 8, 1000).unwrap() {
        assert_eq!(mop_along_path(&p, &r, cfg).unwrap(), NodeState::default());
    }
}

#[test]
fn fig3a_path_finds_the_store_through_p() {
    let p = load("fig3a.ir");
    let cfg = VariantConfig::new(Variant::Id, Asb);
    let rho = &enumerate_paths(&p, node(&p, "n03"), 10, 10).unwrap()[0];
    let st = mop_along_path(&p, rho, cfg).unwrap();
    let names = NameTable::new(&p, Asb);
    let z = names.by_text("z").unwrap();
    assert_eq!(
        names.render_pairs(restrict_one(&st.ain, &[z].into())),
        "{(z,&a)}"
    );
}

#[test]
fn diamond_mop_holds_the_one_sided_alias() {
    let p = parse_program(DIAMOND).unwrap();
    let cfg = VariantConfig::new(Variant::Id, Tba);
    let n4 = node(&p, "n4");
    let names = NameTable::new(&p, Tba);
    let [t, y, x] = ["t", "&Y", "&X"].map(|s| names.by_text(s).unwrap());
    let per: Vec<bool> = enumerate_paths(&p, n4, 10, 10)
        .unwrap()
        .iter()
        .map(|r| mop_along_path(&p, r, cfg).unwrap().ain.contains(t, y))
        .collect();
    assert_eq!(per.iter().filter(|&&b| b).count(), 1);
    let mop = mop_meet(&p, n4, 10, 10, cfg).unwrap();
    assert!(mop.ain.contains(t, y) && mop.ain.contains(t, x));
    let r = solve(&p, cfg).unwrap();
    assert!(r.state(n4).ain.contains(t, y));
    let rep = check_mfp_vs_mop(&p, cfg, 10).unwrap();
    assert!(rep.passed(), "{}", rep.to_json());
}

#[test]
fn mfp_contains_mop_on_fixtures() {
    for f in ["fig2.ir", "fig3a.ir", "fig4b.ir", "fig5.ir", "fig12.ir"] {
        let p = load(f);
        for v in [Variant::Id, Variant::Cd, Variant::Ex] {
            for a in [Tba, Asb] {
                let rep = check_mfp_vs_mop(&p, VariantConfig::new(v, a), 14).unwrap();
                assert!(rep.checks_run > 0);
                assert!(rep.passed(), "{f} {v} {a}: {}", rep.to_json());
            }
        }
    }
}

#[test]
fn mfp_equals_mop_on_straight_line() {
    let p = load("fig2.ir");
    let cfg = VariantConfig::new(Variant::Id, Tba);
    let r = solve(&p, cfg).unwrap();
    let w = &enumerate_walks(&p, 100, 10).unwrap()[0];
    let states = solve_walk(&p, cfg, w).unwrap();
    for (i, &n) in w.iter().enumerate() {
        assert_eq!(&states[i], r.state(n));
    }
}

#[test]
fn concrete_run_of_unrolled_loop_body() {
    let p = parse_program(
        "class T1 { field f: T1* }\nclass T2 : T1 { }\nfunc main() { var x: T1* var y: T1*\n\
         n01: y = new T1\n n02: x = y\n n03: x->f = new T2\n }",
    )
    .unwrap();
    let run = run_concrete(&p).unwrap();
    let last = &run[p
        .entry_nodes()
        .iter()
        .position(|&n| n == node(&p, "n03"))
        .unwrap()];
    let f = p.field_by_name("f").unwrap();
    let x = p.var_by_name("x").unwrap();
    let y = p.var_by_name("y").unwrap();
    assert_eq!(
        last.cells[&Cell::Field(Loc::Heap(0), f)],
        Value::Addr(Loc::Heap(1))
    );
    assert_eq!(Loc::Heap(1).to_string(), "l2");
    assert!(last
        .alias_pairs
        .contains(&(AccessExpr::Var(x), AccessExpr::Var(y))));
    assert_eq!(last.heap.len(), 2);
}

#[test]
fn concrete_address_of_is_an_alias_pair() {
    let p =
        parse_program("class X { }\nfunc main() { var p: X** var z: X*\n n1: p = &z\n }").unwrap();
    let run = run_concrete(&p).unwrap();
    let pv = p.var_by_name("p").unwrap();
    let z = p.var_by_name("z").unwrap();
    assert!(run[1]
        .alias_pairs
        .contains(&(AccessExpr::Var(pv), AccessExpr::AddrOf(z))));
}

#[test]
fn concrete_errors() {
    let undef =
        parse_program("class X { }\nfunc main() { var a: X* var b: X*\n n1: a = b\n }").unwrap();
    assert!(matches!(
        run_concrete(&undef),
        Err(OracleError::UseBeforeDefine(_))
    ));
    let null =
        parse_program("class X { field f: X* }\nfunc main() { var a: X* var b: X*\n n1: a = null\n n2: b = a->f\n }")
            .unwrap();
    assert!(matches!(
        run_concrete(&null),
        Err(OracleError::NullDereference(_))
    ));
    let branchy = parse_program(DIAMOND).unwrap();
    assert!(matches!(
        run_concrete(&branchy),
        Err(OracleError::NotStraightLine)
    ));
}

#[test]
fn concrete_run_is_deterministic() {
    let p = load("fig2.ir");
    assert_eq!(run_concrete(&p).unwrap(), run_concrete(&p).unwrap());
}

#[test]
fn soundness_on_straight_line_fixtures() {
    for f in ["fig2.ir", "fig3a.ir", "fig4a.ir", "fig4b.ir", "fig5.ir"] {
        let p = load(f);
        for v in [Variant::Id, Variant::Cd, Variant::Ex] {
            for a in [Tba, Asb] {
                let rep = check_soundness(&p, VariantConfig::new(v, a)).unwrap();
                assert!(rep.checks_run > 0, "{f} {v} {a}");
                assert!(rep.passed(), "{f} {v} {a}: {}", rep.to_json());
            }
        }
    }
}

#[test]
fn fig4b_both_stores_are_found() {
    let p = load("fig4b.ir");
    let n03 = node(&p, "n03");
    let run = run_concrete(&p).unwrap();
    let st = run.iter().find(|s| s.node == n03).unwrap();
    let [x, y] = ["x", "y"].map(|s| AccessExpr::Var(p.var_by_name(s).unwrap()));
    assert!(st.alias_pairs.contains(&(x, y)));
    let r = solve(&p, VariantConfig::new(Variant::Id, Asb)).unwrap();
    let names = &r.names;
    let a = names.by_text("&a").unwrap();
    for v in ["x", "y"] {
        assert!(
            r.state(n03).aout.contains(names.by_text(v).unwrap(), a),
            "{v}"
        );
    }
    assert!(r.din(node(&p, "n02")).contains(&a));
}

#[test]
fn disabling_address_speculation_is_unsound() {
    let p = load("fig4b.ir");
    for a in [Tba, Asb] {
        let cfg =
            VariantConfig::new(Variant::Id, a).with_mutation(Some(Mutation::NoAddrSpeculation));
        let rep = check_soundness(&p, cfg).unwrap();
        assert!(!rep.passed(), "{a}");
        assert!(rep
            .violations
            .iter()
            .any(|v| v.check == "soundness" && v.witness.starts_with('z')));
    }
}

#[test]
fn precision_chain_on_fixtures() {
    for f in ["fig2.ir", "fig3a.ir", "fig4b.ir", "fig5.ir", "fig12.ir"] {
        let p = load(f);
        for a in [Tba, Asb] {
            let rep = check_precision_chain(&p, a).unwrap();
            assert!(rep.passed(), "{f} {a}: {}", rep.to_json());
        }
    }
}

#[test]
fn receivers_are_demanded() {
    for f in ["fig2.ir", "fig3a.ir", "fig4b.ir", "fig5.ir", "fig12.ir"] {
        let p = load(f);
        for v in [Variant::Id, Variant::Cd, Variant::Ex] {
            let r = solve(&p, VariantConfig::new(v, Tba)).unwrap();
            let rep = check_demand_origin(&p, &r);
            assert_eq!(rep.checks_run, p.origin.len());
            assert!(rep.passed(), "{f} {v}");
        }
    }
}

#[test]
fn report_json_is_a_list_of_violations() {
    let rep = Report {
        checks_run: 1,
        violations: vec![Violation {
            check: "soundness".into(),
            node: "n04".into(),
            witness: "z holds l1".into(),
            expected: "{(z,&Y)}".into(),
            actual: "missing {(z,&Y)}".into(),
        }],
    };
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    let keys: BTreeSet<&str> = v[0]
        .as_object()
        .unwrap()
        .keys()
        .map(|k| k.as_str())
        .collect();
    assert_eq!(
        keys,
        BTreeSet::from(["check", "node", "witness", "expected", "actual"])
    );
}
