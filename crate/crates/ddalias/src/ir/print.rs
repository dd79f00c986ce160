//! Rendering of programs, statements and expressions back to source text.
//!
//! [`print_program`] emits every edge explicitly so that the printed text
//! parses back to a structurally identical [`ProgramIR`].

use std::collections::BTreeMap;
use std::fmt::Write;

use super::*;

fn var_text(p: &ProgramIR, v: VarId, qualified: bool) -> String {
    if qualified {
        p.var_name(v)
    } else {
        p.var(v).name.clone()
    }
}

fn expr_text(p: &ProgramIR, e: &AccessExpr, qualified: bool) -> String {
    let v = |x: VarId| var_text(p, x, qualified);
    match *e {
        AccessExpr::Var(x) => v(x),
        AccessExpr::Deref(x) => format!("*{}", v(x)),
        AccessExpr::Arrow(x, f) => format!("{}->{}", v(x), p.field_name(f)),
        AccessExpr::Dot(x, f) => format!("{}.{}", v(x), p.field_name(f)),
        AccessExpr::AddrOf(x) => format!("&{}", v(x)),
        AccessExpr::New(c, _) => format!("new {}", p.class(c).name),
        AccessExpr::Null => "null".to_string(),
    }
}

/// Source form of an expression, with variables of non-entry functions
/// qualified by their function name.
pub fn render_expr(p: &ProgramIR, e: &AccessExpr) -> String {
    expr_text(p, e, true)
}

fn kind_text(p: &ProgramIR, s: &Statement, qualified: bool) -> String {
    let v = |x: VarId| var_text(p, x, qualified);
    let args = |a: &[VarId]| a.iter().map(|&x| v(x)).collect::<Vec<_>>().join(", ");
    let ret = |r: &Option<VarId>| r.map(|r| format!(" -> {}", v(r))).unwrap_or_default();
    match &s.kind {
        StmtKind::Assign {
            lhs: AccessExpr::Var(l),
            rhs: AccessExpr::Var(r),
        } if p.func(s.func).ret == Some(*l) => {
            format!("return {}", v(*r))
        }
        StmtKind::Assign { lhs, rhs } => format!(
            "{} = {}",
            expr_text(p, lhs, qualified),
            expr_text(p, rhs, qualified)
        ),
        StmtKind::VirtualCall { receiver, method } => {
            let sep = if p.java { "." } else { "->" };
            format!("vcall {}{sep}{method}()", v(*receiver))
        }
        StmtKind::DirectCall {
            callee,
            args: a,
            ret: r,
        } => {
            format!("call {}({}){}", p.func(*callee).name, args(a), ret(r))
        }
        StmtKind::IndirectCall {
            fp,
            targets,
            args: a,
            ret: r,
        } => {
            let ts: Vec<_> = targets.iter().map(|&t| p.func(t).name.as_str()).collect();
            format!(
                "fcall {}({}) targets {{{}}}{}",
                v(*fp),
                args(a),
                ts.join(", "),
                ret(r)
            )
        }
        StmtKind::Skip => "skip".to_string(),
    }
}

/// `label: statement`, as in the source.
pub fn render_stmt(p: &ProgramIR, s: &Statement) -> String {
    format!("{}: {}", s.label, kind_text(p, s, true))
}

fn ty_text(p: &ProgramIR, t: Ty) -> String {
    let stars = if p.java {
        t.level.saturating_sub(1)
    } else {
        t.level
    };
    format!("{}{}", p.class(t.class).name, "*".repeat(stars as usize))
}

/// Prints a program in the textual IR format.
pub fn print_program(p: &ProgramIR) -> String {
    let mut out = String::new();
    if p.java {
        out.push_str("lang java\n");
    }
    for c in &p.classes {
        let _ = write!(out, "class {}", c.name);
        if let Some(parent) = c.parent {
            let _ = write!(out, " : {}", p.class(parent).name);
        }
        out.push_str(" {");
        for (f, t) in &c.fields {
            let _ = write!(out, " field {}: {}", p.field_name(*f), ty_text(p, *t));
        }
        out.push_str(" }\n");
    }
    let mut virtuals: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in &p.classes {
        for m in &c.virtuals {
            virtuals.entry(m).or_default().push(&c.name);
        }
    }
    for (m, cs) in virtuals {
        let _ = writeln!(out, "virtual {m} in {}", cs.join(", "));
    }
    let default_entry = p.func_by_name("main").unwrap_or(FuncId(0));
    if p.entry != default_entry {
        let _ = writeln!(out, "entry {}", p.entry_cfg().name);
    }
    for (i, cfg) in p.functions.iter().enumerate() {
        let fid = FuncId(i as u32);
        let params: Vec<_> = cfg
            .params
            .iter()
            .map(|&v| format!("{}: {}", p.var(v).name, ty_text(p, p.var(v).ty)))
            .collect();
        let _ = write!(out, "\nfunc {}({})", cfg.name, params.join(", "));
        if let Some(r) = cfg.ret {
            let _ = write!(out, " -> {}", ty_text(p, p.var(r).ty));
        }
        out.push_str(" {\n");
        for (vi, d) in p.vars.iter().enumerate() {
            let v = VarId(vi as u32);
            if d.func == fid && !cfg.params.contains(&v) && cfg.ret != Some(v) {
                let _ = writeln!(out, "  var {}: {}", d.name, ty_text(p, d.ty));
            }
        }
        for &n in &cfg.nodes[1..cfg.nodes.len() - 1] {
            let s = p.node(n);
            let _ = writeln!(out, "  {}: {}", s.label, kind_text(p, s, false));
        }
        let label = |n: NodeId| {
            if n == cfg.start {
                "start".to_string()
            } else if n == cfg.end {
                "end".to_string()
            } else {
                p.node(n).label.clone()
            }
        };
        let edges: Vec<_> = cfg
            .edges
            .iter()
            .map(|&(a, b)| format!("{}->{}", label(a), label(b)))
            .collect();
        let _ = writeln!(out, "  edges: {}", edges.join(", "));
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_round_trip() {
        for text in [
            include_str!("../../../../fixtures/fig2.ir"),
            include_str!("../../../../fixtures/fig4b.ir"),
            include_str!("../../../../fixtures/fig5.ir"),
            include_str!("../../../../fixtures/fig12.ir"),
            include_str!("../../../../fixtures/fig14.ir"),
        ] {
            let p = parse_program(text).unwrap();
            let q = parse_program(&print_program(&p)).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn calls_and_returns_round_trip() {
        let text = "class X { }\nvirtual m in X\n\
            func id(a: X*) -> X* { n10: return a }\n\
            func main() { var x: X* var y: X* var fp: X*\n\
              n1: x = new X\n n2: call id(x) -> y\n n3: fcall fp(y) targets {id} -> x\n n4: vcall x->m()\n }";
        let p = parse_program(text).unwrap();
        let printed = print_program(&p);
        assert!(printed.contains("n10: return a"));
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn render_forms() {
        let p = parse_program(include_str!("../../../../fixtures/fig2.ir")).unwrap();
        let s = p.node(p.node_by_label("n23").unwrap());
        assert_eq!(render_stmt(&p, s), "n23: x->f = new Y");
        let s = p.node(p.node_by_label("n15").unwrap());
        assert_eq!(render_stmt(&p, s), "n15: *p = x");
    }
}
