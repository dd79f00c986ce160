use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddalias"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Writes `text` to a file unique to the calling test.
fn program(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ddalias-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const LOOPING_BRANCHES: &str = "class X { }\nvirtual m in X\nfunc main() { var x: X*\n n1: x = new X\n n2: skip\n \
    n3: skip\n n4: skip\n n5: skip\n n6: vcall x->m()\n edges: n2->n3, n2->n4, n3->n5, n5->n2, n5->n6\n}\n";

#[test]
fn analyze_prints_demands_and_aliases_per_node() {
    let o = run(&[
        "analyze",
        "--variant",
        "id",
        "--abstraction",
        "tba",
        &fixture("fig2.ir"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("n28 Din: {t}\n"), "{out}");
    let ain = out.lines().find(|l| l.starts_with("n28 Ain: ")).unwrap();
    assert!(ain.contains("(t,&Y)") && !ain.contains("(t,&Z)"), "{ain}");
    assert!(out.contains("n28: {Y::vfun} monomorphic"));
}

#[test]
fn analyze_ex_prints_universal_demand() {
    let out = stdout(&run(&["analyze", "--variant", "ex", &fixture("fig2.ir")]));
    assert!(out.contains("n28 Din: all\n"));
    assert!(out.contains("n28: {Y::vfun, Z::vfun} polymorphic"));
}

#[test]
fn analyze_json_has_metrics_block() {
    let o = run(&[
        "analyze",
        "--variant",
        "ex",
        &fixture("fig2.ir"),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for k in [
        "program",
        "variant",
        "abstraction",
        "nodes",
        "calls",
        "metrics",
    ] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["program"], "fig2.ir");
    assert_eq!(v["metrics"]["edges"], 2);
    assert_eq!(v["calls"][0]["id"], "n28");
    let n28 = v["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["id"] == "n28")
        .unwrap();
    let ain: Vec<&str> = n28["ain"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert!(ain.contains(&"(t,&Y)") && ain.contains(&"(t,&Z)"));
}

#[test]
fn analyze_with_trace_appends_the_round_table() {
    let out = stdout(&run(&["analyze", "--trace", &fixture("fig2.ir")]));
    assert!(out.contains("stmt | r1 demand | r1 ptg"));
}

#[test]
fn jd_rejects_address_of() {
    let o = run(&["analyze", "--variant", "jd", &fixture("fig2.ir")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("statement n03: address-of not permitted under jd"),
        "{}",
        stderr(&o)
    );
    assert!(stdout(&o).is_empty());
}

#[test]
fn id_rejects_java_programs() {
    let o = run(&["analyze", "--variant", "id", &fixture("fig14.ir")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("use jd or ex"));
}

#[test]
fn missing_file_exits_1() {
    let o = run(&["analyze", "/nonexistent/prog.ir"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/prog.ir"));
}

#[test]
fn syntax_error_exits_1() {
    let p = program("syntax.ir", "class X {\nfunc main() {\n");
    let o = run(&["analyze", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn bad_flag_value_exits_1() {
    let o = run(&["analyze", "--variant", "zz", &fixture("fig2.ir")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn object_store_under_asb_exits_1() {
    let o = run(&[
        "analyze",
        "--object-store",
        "--abstraction",
        "asb",
        &fixture("fig5.ir"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("object store requires tba"));
}

#[test]
fn exhausted_budget_exits_2() {
    let o = run(&["analyze", "--budget", "1", &fixture("fig2.ir")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no fixed point after"));
}

#[test]
fn too_many_paths_exits_2() {
    let p = program("loop.ir", LOOPING_BRANCHES);
    let o = run(&["verify", "--max-path-len", "60", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("more than 10000 paths"));
}

#[test]
fn verify_passes_on_every_fixture() {
    for f in [
        "fig2.ir", "fig3a.ir", "fig4a.ir", "fig4b.ir", "fig5.ir", "fig12.ir", "fig14.ir",
    ] {
        let o = run(&["verify", &fixture(f)]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stdout(&o));
        assert!(stdout(&o).ends_with(" 0 violations\n"));
    }
}

#[test]
fn verify_json_passing_is_an_empty_list() {
    let o = run(&["verify", "--format", "json", &fixture("fig2.ir")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "[]");
}

#[test]
fn verify_random_campaign_passes() {
    let o = run(&["verify", "--random", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_flags_the_broken_build_with_a_witness() {
    let o = run(&[
        "verify",
        "--mutate",
        "no-addr-speculation",
        &fixture("fig4b.ir"),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let list = v.as_array().unwrap();
    assert!(!list.is_empty());
    let hit = list
        .iter()
        .find(|w| w["check"] == "soundness")
        .expect("soundness witness");
    for k in ["check", "node", "witness", "expected", "actual"] {
        assert!(hit.get(k).is_some(), "{k}");
    }
}

#[test]
fn trace_matches_goldens() {
    for (v, golden) in [
        ("id", "golden/fig2_id.trace"),
        ("cd", "golden/fig2_cd.trace"),
    ] {
        let o = run(&["trace", "--variant", v, &fixture("fig2.ir")]);
        assert_eq!(o.status.code(), Some(0));
        let want = std::fs::read_to_string(fixture(golden)).unwrap();
        assert_eq!(stdout(&o), want, "{v}");
    }
}

#[test]
fn trace_of_one_statement() {
    let p = program(
        "one.ir",
        "class X { }\nfunc main() { var x: X*\n n1: x = new X }\n",
    );
    let out = stdout(&run(&["trace", p.to_str().unwrap()]));
    assert_eq!(out, "stmt | r1 demand | r1 ptg\nn1: x = new X | ∅ | ∅\n");
}

#[test]
fn trace_json() {
    let o = run(&["trace", "--format", "json", &fixture("fig2.ir")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rounds"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn devirt_text_and_json() {
    let out = stdout(&run(&["devirt", &fixture("fig2.ir")]));
    assert!(
        out.starts_with("n28: {Y::vfun} monomorphic\nmono=1 edges=1 classTypes=4\n"),
        "{out}"
    );
    let o = run(&[
        "devirt",
        "--variant",
        "ex",
        "--format",
        "json",
        "--timing",
        &fixture("fig2.ir"),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["program"], "fig2.ir");
    assert_eq!(v["metrics"]["classTypes"], 7);
    assert!(v["perf"]["ms"].is_number());
}

#[test]
fn object_store_narrows_receiver_types() {
    let on = stdout(&run(&["analyze", "--object-store", &fixture("fig5.ir")]));
    let off = stdout(&run(&["analyze", &fixture("fig5.ir")]));
    assert_ne!(on, off);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let f2 = fixture("fig2.ir");
    let f12 = fixture("fig12.ir");
    let cases: Vec<Vec<&str>> = vec![
        vec!["analyze", "--variant", "ex", "--abstraction", "asb", &f2],
        vec!["analyze", "--format", "json", &f12],
        vec!["devirt", "--format", "json", &f2],
        vec!["trace", "--variant", "cd", &f2],
        vec!["verify", "--format", "json", &f12],
        vec!["analyze", "--order", "shuffled", "--seed", "3", &f2],
    ];
    for args in cases {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), Some(0));
    }
}

#[test]
fn worklist_order_does_not_change_the_result() {
    let f = fixture("fig12.ir");
    let base = stdout(&run(&["analyze", "--format", "json", &f]));
    for order in ["lifo", "rpo", "shuffled"] {
        assert_eq!(
            stdout(&run(&["analyze", "--format", "json", "--order", order, &f])),
            base,
            "{order}"
        );
    }
}
