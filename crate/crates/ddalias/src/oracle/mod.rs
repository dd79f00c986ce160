//! Independent checks of the solver: per-path solutions over enumerated
//! walks, a concrete interpreter, and containment checkers between them.

mod concrete;
mod paths;

use serde::Serialize;

pub use concrete::{access_exprs, run_concrete, Cell, ConcreteState, HeapObject, Loc, Value};
pub use paths::{
    enumerate_paths, enumerate_walks, mop_along_path, mop_meet, solve_walk, QualifiedPath,
};

use crate::absdomain::{
    abs_name, addr_name, restrict_one, AliasRel, DemandSet, NameId, NameTable, ObjectStore,
};
use crate::ir::{render_expr, AccessExpr, ProgramIR, StmtKind};
use crate::solver::{solve, NodeState, SolveResult};
use crate::transfer::{AnalysisError, Variant, VariantConfig};

/// Default bound on the number of enumerated walks.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("more than {cap} paths")]
    PathBudgetExceeded { cap: usize },
    #[error("null dereference in `{0}`")]
    NullDereference(String),
    #[error("use of undefined value in `{0}`")]
    UseBeforeDefine(String),
    #[error("ill-typed access `{0}`")]
    IllTyped(String),
    #[error("program is not straight-line")]
    NotStraightLine,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl From<crate::absdomain::AbsError> for OracleError {
    fn from(e: crate::absdomain::AbsError) -> Self {
        OracleError::Analysis(e.into())
    }
}

/// A failed check with the evidence that refutes it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub check: String,
    pub node: String,
    pub witness: String,
    pub expected: String,
    pub actual: String,
}

/// Outcome of a group of checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks_run: usize,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: Report) {
        self.checks_run += other.checks_run;
        self.violations.extend(other.violations);
    }

    /// The violations as a JSON list.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.violations).expect("serializable")
    }
}

fn render_pairs(names: &NameTable, a: impl IntoIterator<Item = (NameId, NameId)>) -> String {
    names.render_pairs(a)
}

/// Compares one per-path state against the solver's state at the same
/// node.
fn contained(
    names: &NameTable,
    label: &str,
    witness: &str,
    path: &NodeState,
    mfp: &NodeState,
    universal: bool,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut set = |what: &str, extra: String| {
        out.push(Violation {
            check: "mfp-contains-mop".to_string(),
            node: label.to_string(),
            witness: witness.to_string(),
            expected: format!("{what} ⊇ path value"),
            actual: format!("missing {extra}"),
        });
    };
    for (what, a, b) in [
        ("Ain", &path.ain, &mfp.ain),
        ("Aout", &path.aout, &mfp.aout),
    ] {
        let missing: Vec<_> = a.iter().filter(|&(x, y)| !b.contains(x, y)).collect();
        if !missing.is_empty() {
            set(what, render_pairs(names, missing));
        }
    }
    if !universal {
        for (what, a, b) in [
            ("Din", &path.din, &mfp.din),
            ("Dout", &path.dout, &mfp.dout),
        ] {
            let missing: DemandSet = a.difference(b).copied().collect();
            if !missing.is_empty() {
                set(what, names.render_set(&missing));
            }
        }
    }
    out
}

/// Checks that the solver's state at every entry-function node contains
/// the state of every enumerated path through that node.
pub fn check_mfp_vs_mop(
    p: &ProgramIR,
    cfg: VariantConfig,
    max_len: usize,
) -> Result<Report, OracleError> {
    let r = solve(p, cfg)?;
    let mut rep = Report::default();
    for w in enumerate_walks(p, max_len, DEFAULT_PATH_CAP)? {
        let states = solve_walk(p, cfg, &w)?;
        for (i, &n) in w.iter().enumerate() {
            rep.checks_run += 1;
            let rho = QualifiedPath {
                forward: w[..i].to_vec(),
                pivot: n,
                backward: w[i + 1..].to_vec(),
            };
            let label = &p.node(n).label;
            let found = contained(
                &r.names,
                label,
                &rho.render(p),
                &states[i],
                r.state(n),
                r.universal_demand(),
            );
            rep.violations.extend(found);
        }
    }
    Ok(rep)
}

/// Abstract names of the location `l`.
fn loc_names(
    p: &ProgramIR,
    names: &NameTable,
    l: Loc,
    heap: &[HeapObject],
    store: Option<&ObjectStore>,
) -> DemandSet {
    match l {
        Loc::Var(y) => addr_name(p, names, y, store).into_iter().collect(),
        Loc::Heap(k) => {
            let o = &heap[k as usize];
            let e = AccessExpr::New(o.class, o.site);
            abs_name(p, names, &e, &AliasRel::new(), store).unwrap_or_default()
        }
    }
}

/// Checks a solve result against concrete execution: whenever the cell
/// of a pointer expression `α` holds the address `β` after a node, every
/// name of that cell the analysis also gives `α` must be paired with
/// every name of `β` in `Aout`, provided those names are demanded there.
pub fn check_soundness_of(p: &ProgramIR, r: &SolveResult) -> Result<Report, OracleError> {
    let run = run_concrete(p)?;
    let exprs = access_exprs(p);
    let store = if r.config.object_store_active() {
        r.object_store.as_ref()
    } else {
        None
    };
    let mut rep = Report::default();
    for st in &run {
        let n = st.node;
        let aout = &r.state(n).aout;
        let dout = r.dout(n);
        for e in &exprs {
            if e.is_addr() {
                continue;
            }
            let Some(c) = concrete_cell(p, st, e) else {
                continue;
            };
            let Some(Value::Addr(l)) = st.cells.get(&c).copied() else {
                continue;
            };
            let seen = abs_name(p, &r.names, e, aout, store)?;
            let abar: DemandSet = cell_names(p, &r.names, st, e, store)?
                .intersection(&seen)
                .copied()
                .collect();
            if abar.is_empty() || !abar.is_subset(&dout) {
                continue;
            }
            rep.checks_run += 1;
            let bbar = loc_names(p, &r.names, l, &st.heap, store);
            let missing: Vec<(NameId, NameId)> = abar
                .iter()
                .flat_map(|&a| bbar.iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| !aout.contains(a, b))
                .collect();
            if !missing.is_empty() {
                rep.violations.push(Violation {
                    check: "soundness".to_string(),
                    node: p.node(n).label.clone(),
                    witness: format!("{} holds {}", render_expr(p, e), render_loc(p, l, &st.heap)),
                    expected: render_pairs(
                        &r.names,
                        abar.iter().flat_map(|&a| bbar.iter().map(move |&b| (a, b))),
                    ),
                    actual: format!("missing {}", render_pairs(&r.names, missing)),
                });
            }
        }
    }
    Ok(rep)
}

/// Abstract names of the cell `e` denotes in a recorded state: the
/// expression named as if its base pointed exactly to the object it
/// points to concretely.
fn cell_names(
    p: &ProgramIR,
    names: &NameTable,
    st: &ConcreteState,
    e: &AccessExpr,
    store: Option<&ObjectStore>,
) -> Result<DemandSet, OracleError> {
    let through_base = matches!(e, AccessExpr::Deref(_) | AccessExpr::Arrow(..))
        || (p.java && matches!(e, AccessExpr::Dot(..)));
    let mut rel = AliasRel::new();
    if through_base {
        let x = e.var_of().expect("pointer base");
        let Some(Value::Addr(l)) = st.cells.get(&Cell::Var(x)).copied() else {
            return Ok(DemandSet::new());
        };
        let xn = names.id(&crate::absdomain::AbstractName::Var(x));
        for b in loc_names(p, names, l, &st.heap, store) {
            rel.insert(xn, b);
        }
    }
    Ok(abs_name(p, names, e, &rel, store)?)
}

/// Runs the analysis and checks it against concrete execution.
pub fn check_soundness(p: &ProgramIR, cfg: VariantConfig) -> Result<Report, OracleError> {
    let r = solve(p, cfg)?;
    check_soundness_of(p, &r)
}

fn render_loc(p: &ProgramIR, l: Loc, heap: &[HeapObject]) -> String {
    match l {
        Loc::Var(y) => format!("&{}", p.var_name(y)),
        Loc::Heap(k) => {
            let o = &heap[k as usize];
            format!(
                "l{} (new {} at {})",
                k + 1,
                p.class(o.class).name,
                p.sites[o.site.index()].label
            )
        }
    }
}

/// The cell an lvalue denotes in a recorded state.
fn concrete_cell(p: &ProgramIR, st: &ConcreteState, e: &AccessExpr) -> Option<Cell> {
    let target = |x| match st.cells.get(&Cell::Var(x)) {
        Some(Value::Addr(l)) => Some(*l),
        _ => None,
    };
    Some(match *e {
        AccessExpr::Var(x) => Cell::Var(x),
        AccessExpr::Deref(x) => match target(x)? {
            Loc::Var(v) => Cell::Var(v),
            Loc::Heap(_) => return None,
        },
        AccessExpr::Arrow(x, f) => Cell::Field(target(x)?, f),
        AccessExpr::Dot(x, f) if p.java => Cell::Field(target(x)?, f),
        AccessExpr::Dot(a, f) => Cell::Field(Loc::Var(a), f),
        _ => return None,
    })
}

/// Checks that every alias the improved analysis finds is also found by
/// the exhaustive one, and that the conventional analysis agrees with
/// the exhaustive one on the names it demands. Java programs compare the
/// java variant against the exhaustive one instead.
pub fn check_precision_chain(
    p: &ProgramIR,
    abstraction: crate::Abstraction,
) -> Result<Report, OracleError> {
    let ex = solve(p, VariantConfig::new(Variant::Ex, abstraction))?;
    let demand_variant = if p.java { Variant::Jd } else { Variant::Id };
    let id = solve(p, VariantConfig::new(demand_variant, abstraction))?;
    let cd = if p.java {
        None
    } else {
        Some(solve(p, VariantConfig::new(Variant::Cd, abstraction))?)
    };
    let check = format!("ex-contains-{demand_variant}");
    let mut rep = Report::default();
    let names = &ex.names;
    for &n in p.entry_nodes() {
        let label = &p.node(n).label;
        let (e, i) = (ex.state(n), id.state(n));
        for (what, big, small) in [("Ain", &e.ain, &i.ain), ("Aout", &e.aout, &i.aout)] {
            rep.checks_run += 1;
            let missing: Vec<_> = small.iter().filter(|&(x, y)| !big.contains(x, y)).collect();
            if !missing.is_empty() {
                rep.violations.push(Violation {
                    check: check.clone(),
                    node: label.clone(),
                    witness: format!("{what} under {abstraction}"),
                    expected: format!("Ex ⊇ {demand_variant:?}"),
                    actual: format!("Ex lacks {}", render_pairs(names, missing)),
                });
            }
        }
        let Some(cd) = &cd else { continue };
        let c = cd.state(n);
        for (what, ea, ca, d) in [
            ("Ain", &e.ain, &c.ain, &c.din),
            ("Aout", &e.aout, &c.aout, &c.dout),
        ] {
            rep.checks_run += 1;
            let (re, rc) = (restrict_one(ea, d), restrict_one(ca, d));
            if re != rc {
                rep.violations.push(Violation {
                    check: "cd-equals-ex-restricted".to_string(),
                    node: label.clone(),
                    witness: format!("{what} under {abstraction}, demand {}", names.render_set(d)),
                    expected: render_pairs(names, re),
                    actual: render_pairs(names, rc),
                });
            }
        }
    }
    Ok(rep)
}

/// Checks that the receiver of every virtual call is demanded at the call.
pub fn check_demand_origin(p: &ProgramIR, r: &SolveResult) -> Report {
    let mut rep = Report::default();
    for &c in &p.origin {
        let StmtKind::VirtualCall { receiver, .. } = p.node(c).kind else {
            continue;
        };
        rep.checks_run += 1;
        let x = r.names.id(&crate::absdomain::AbstractName::Var(receiver));
        let din = r.din(c);
        if !din.contains(&x) {
            rep.violations.push(Violation {
                check: "receiver-demanded".to_string(),
                node: p.node(c).label.clone(),
                witness: p.var_name(receiver),
                expected: format!("{} ∈ Din", p.var_name(receiver)),
                actual: format!("Din = {}", r.names.render_set(&din)),
            });
        }
    }
    rep
}

/// True when the program is straight-line and runs without a null
/// dereference or a read of an undefined value.
pub fn runs_cleanly(p: &ProgramIR) -> bool {
    run_concrete(p).is_ok()
}

#[cfg(test)]
mod tests;
