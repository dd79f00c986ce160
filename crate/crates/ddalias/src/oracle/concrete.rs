//! A concrete interpreter for straight-line programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::OracleError;
use crate::ir::{
    render_expr, AccessExpr, ClassId, FieldId, NodeId, ProgramIR, SiteId, StmtKind, VarId,
};

/// A memory location: the storage of a variable or a heap object.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Loc {
    Var(VarId),
    /// The `k`-th allocated heap object, rendered `l{k+1}`.
    Heap(u32),
}

/// Contents of a pointer cell.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Value {
    Undef,
    Null,
    Addr(Loc),
}

/// A cell holding a pointer: a variable or a field of an object.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Cell {
    Var(VarId),
    Field(Loc, FieldId),
}

/// A heap object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeapObject {
    pub class: ClassId,
    pub site: SiteId,
}

/// Memory after a statement, plus the concrete alias pairs among the
/// program's access expressions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConcreteState {
    pub node: NodeId,
    /// Pointer cells that have been written.
    pub cells: BTreeMap<Cell, Value>,
    pub heap: Vec<HeapObject>,
    /// Pairs `(α, β)` of access expressions with `⟦α⟧ = ⟦β⟧`: two
    /// pointers to the same location, or a pointer and the address it
    /// holds.
    pub alias_pairs: BTreeSet<(AccessExpr, AccessExpr)>,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Var(v) => write!(f, "v{}", v.0),
            Loc::Heap(k) => write!(f, "l{}", k + 1),
        }
    }
}

struct Machine<'a> {
    p: &'a ProgramIR,
    cells: BTreeMap<Cell, Value>,
    heap: Vec<HeapObject>,
}

impl Machine<'_> {
    fn read(&self, c: Cell, e: &AccessExpr) -> Result<Value, OracleError> {
        match self.cells.get(&c).copied().unwrap_or(Value::Undef) {
            Value::Undef => Err(OracleError::UseBeforeDefine(render_expr(self.p, e))),
            v => Ok(v),
        }
    }

    /// The object a pointer variable points to.
    fn target(&self, x: VarId, e: &AccessExpr) -> Result<Loc, OracleError> {
        match self.read(Cell::Var(x), e)? {
            Value::Addr(l) => Ok(l),
            Value::Null => Err(OracleError::NullDereference(render_expr(self.p, e))),
            Value::Undef => unreachable!(),
        }
    }

    /// The cell an lvalue denotes.
    fn lvalue(&self, e: &AccessExpr) -> Result<Option<Cell>, OracleError> {
        Ok(Some(match *e {
            AccessExpr::Var(x) => Cell::Var(x),
            AccessExpr::Deref(x) => match self.target(x, e)? {
                Loc::Var(v) => Cell::Var(v),
                Loc::Heap(_) => return Err(OracleError::IllTyped(render_expr(self.p, e))),
            },
            AccessExpr::Arrow(x, f) => Cell::Field(self.target(x, e)?, f),
            AccessExpr::Dot(x, f) if self.p.java => Cell::Field(self.target(x, e)?, f),
            AccessExpr::Dot(a, f) => Cell::Field(Loc::Var(a), f),
            _ => return Ok(None),
        }))
    }

    fn rvalue(&mut self, e: &AccessExpr) -> Result<Value, OracleError> {
        match *e {
            AccessExpr::AddrOf(x) => Ok(Value::Addr(Loc::Var(x))),
            AccessExpr::Null => Ok(Value::Null),
            AccessExpr::New(c, s) => {
                let l = Loc::Heap(self.heap.len() as u32);
                self.heap.push(HeapObject { class: c, site: s });
                for (f, _) in self.p.fields_of(c) {
                    self.cells.insert(Cell::Field(l, f), Value::Null);
                }
                Ok(Value::Addr(l))
            }
            _ => {
                let c = self.lvalue(e)?.expect("lvalue");
                self.read(c, e)
            }
        }
    }

    fn step(&mut self, n: NodeId) -> Result<(), OracleError> {
        match &self.p.node(n).kind {
            StmtKind::Assign { lhs, rhs } => {
                let v = self.rvalue(rhs)?;
                let c = self.lvalue(lhs)?.expect("lvalue");
                self.cells.insert(c, v);
            }
            StmtKind::VirtualCall { receiver, .. } => {
                self.target(*receiver, &AccessExpr::Var(*receiver))?;
            }
            StmtKind::Skip => {}
            StmtKind::DirectCall { .. } | StmtKind::IndirectCall { .. } => {
                return Err(OracleError::NotStraightLine);
            }
        }
        Ok(())
    }

    /// The value an expression would have now, without side effects and
    /// without failing.
    fn peek(&self, e: &AccessExpr) -> Option<Value> {
        match *e {
            AccessExpr::AddrOf(x) => Some(Value::Addr(Loc::Var(x))),
            AccessExpr::New(..) | AccessExpr::Null => None,
            _ => {
                let c = self.lvalue(e).ok()??;
                self.cells.get(&c).copied()
            }
        }
    }
}

/// Pointer-valued access expressions of the program: every lvalue and
/// every `&x` on some side of an assignment, and every base variable.
pub fn access_exprs(p: &ProgramIR) -> BTreeSet<AccessExpr> {
    let mut out = BTreeSet::new();
    for &n in p.entry_nodes() {
        match p.node(n).kind {
            StmtKind::Assign { lhs, rhs } => {
                for e in [lhs, rhs] {
                    if !matches!(e, AccessExpr::New(..) | AccessExpr::Null) {
                        out.insert(e);
                    }
                    if let Some(b) = e.base_of() {
                        out.insert(AccessExpr::Var(b));
                    }
                }
            }
            StmtKind::VirtualCall { receiver, .. } => {
                out.insert(AccessExpr::Var(receiver));
            }
            _ => {}
        }
    }
    out.retain(|e| p.expr_ty(e).is_some_and(|t| t.level >= 1));
    out
}

/// Executes a straight-line entry function and records the state after
/// every node.
pub fn run_concrete(p: &ProgramIR) -> Result<Vec<ConcreteState>, OracleError> {
    if !p.is_straight_line() {
        return Err(OracleError::NotStraightLine);
    }
    let exprs = access_exprs(p);
    let mut m = Machine {
        p,
        cells: BTreeMap::new(),
        heap: Vec::new(),
    };
    let mut out = Vec::new();
    for &n in p.entry_nodes() {
        m.step(n)?;
        let vals: Vec<(AccessExpr, Value)> = exprs
            .iter()
            .filter_map(|e| Some((*e, m.peek(e)?)))
            .collect();
        let mut pairs = BTreeSet::new();
        for (i, &(a, va)) in vals.iter().enumerate() {
            let Value::Addr(la) = va else { continue };
            for &(b, vb) in &vals[i + 1..] {
                if vb == va {
                    pairs.insert((a, b));
                }
            }
            if let Loc::Var(y) = la {
                pairs.insert((a, AccessExpr::AddrOf(y)));
            }
        }
        out.push(ConcreteState {
            node: n,
            cells: m.cells.clone(),
            heap: m.heap.clone(),
            alias_pairs: pairs,
        });
    }
    Ok(out)
}
