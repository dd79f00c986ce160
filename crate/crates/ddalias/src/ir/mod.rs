//! The analysed language: a three-address IR with classes, single
//! inheritance, fields, virtual methods and the address-of operator.
//!
//! A [`ProgramIR`] is produced by [`parse_program`] and is immutable
//! afterwards. Statements of every function live in one arena indexed by
//! [`NodeId`]; each function additionally owns a synthetic `start` and
//! `end` node so that its [`Cfg`] has a unique entry and exit.

mod parse;
mod print;
mod supergraph;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

pub use parse::parse_program;
pub use print::{print_program, render_expr, render_stmt};
pub use supergraph::{build_supergraph, Edge, SgNode, Supergraph};

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            /// Position of the entity in its owning table.
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// A declared variable (local, parameter or return slot).
    VarId
);
id_type!(
    /// A declared class.
    ClassId
);
id_type!(
    /// An interned field name.
    FieldId
);
id_type!(
    /// A statement node in the program arena.
    NodeId
);
id_type!(
    /// A function.
    FuncId
);
id_type!(
    /// An allocation site (one per textual `new`).
    SiteId
);

/// A class type with a number of pointer levels.
///
/// Level 0 is an object (a stack object in C mode). In Java mode every
/// declared class-typed variable is a reference and therefore has level 1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Ty {
    pub class: ClassId,
    pub level: u8,
}

/// A class declaration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassDecl {
    pub name: String,
    pub parent: Option<ClassId>,
    /// Fields declared directly in this class.
    pub fields: Vec<(FieldId, Ty)>,
    /// Virtual methods defined or overridden in this class.
    pub virtuals: BTreeSet<String>,
}

/// A declared variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    /// Name as written in its function.
    pub name: String,
    pub func: FuncId,
    pub ty: Ty,
}

/// An allocation site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Site {
    /// Label of the statement containing the allocation.
    pub label: String,
    pub class: ClassId,
    pub node: NodeId,
}

/// The kind tag of an [`AccessExpr`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ExprKind {
    Var,
    Deref,
    Arrow,
    Dot,
    AddrOf,
    New,
    Null,
}

/// A left or right hand side of an assignment.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AccessExpr {
    /// `x`
    Var(VarId),
    /// `*x`
    Deref(VarId),
    /// `x->f`
    Arrow(VarId, FieldId),
    /// `x.f`
    Dot(VarId, FieldId),
    /// `&x`
    AddrOf(VarId),
    /// `new T`, identified by its allocation site.
    New(ClassId, SiteId),
    /// `null`
    Null,
}

impl AccessExpr {
    pub fn kind(&self) -> ExprKind {
        match self {
            AccessExpr::Var(_) => ExprKind::Var,
            AccessExpr::Deref(_) => ExprKind::Deref,
            AccessExpr::Arrow(..) => ExprKind::Arrow,
            AccessExpr::Dot(..) => ExprKind::Dot,
            AccessExpr::AddrOf(_) => ExprKind::AddrOf,
            AccessExpr::New(..) => ExprKind::New,
            AccessExpr::Null => ExprKind::Null,
        }
    }

    /// The variable occurring in the expression, if any.
    pub fn var_of(&self) -> Option<VarId> {
        match *self {
            AccessExpr::Var(x)
            | AccessExpr::Deref(x)
            | AccessExpr::Arrow(x, _)
            | AccessExpr::Dot(x, _)
            | AccessExpr::AddrOf(x) => Some(x),
            AccessExpr::New(..) | AccessExpr::Null => None,
        }
    }

    /// The pointer variable dereferenced by `*x` and `x->f`.
    pub fn base_of(&self) -> Option<VarId> {
        match *self {
            AccessExpr::Deref(x) | AccessExpr::Arrow(x, _) => Some(x),
            _ => None,
        }
    }

    /// The field accessed, if any.
    pub fn field(&self) -> Option<FieldId> {
        match *self {
            AccessExpr::Arrow(_, f) | AccessExpr::Dot(_, f) => Some(f),
            _ => None,
        }
    }

    /// True for `&x`.
    pub fn is_addr(&self) -> bool {
        matches!(self, AccessExpr::AddrOf(_))
    }

    /// True for the forms permitted on the left of an assignment.
    pub fn is_lvalue(&self) -> bool {
        matches!(
            self,
            AccessExpr::Var(_) | AccessExpr::Deref(_) | AccessExpr::Arrow(..) | AccessExpr::Dot(..)
        )
    }
}

/// What a statement does.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StmtKind {
    Assign {
        lhs: AccessExpr,
        rhs: AccessExpr,
    },
    VirtualCall {
        receiver: VarId,
        method: String,
    },
    DirectCall {
        callee: FuncId,
        args: Vec<VarId>,
        ret: Option<VarId>,
    },
    IndirectCall {
        fp: VarId,
        targets: Vec<FuncId>,
        args: Vec<VarId>,
        ret: Option<VarId>,
    },
    Skip,
}

/// A node of a function's control flow graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Statement {
    pub id: NodeId,
    /// Source label, or `start`/`end` (qualified by function name outside
    /// the entry function) for synthetic boundary nodes.
    pub label: String,
    pub func: FuncId,
    pub kind: StmtKind,
}

impl Statement {
    /// The assignment sides, if this is an assignment.
    pub fn assign(&self) -> Option<(AccessExpr, AccessExpr)> {
        match self.kind {
            StmtKind::Assign { lhs, rhs } => Some((lhs, rhs)),
            _ => None,
        }
    }
}

/// The control flow graph of one function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub name: String,
    pub params: Vec<VarId>,
    /// Slot written by `return y`, present when the function declares a
    /// return type.
    pub ret: Option<VarId>,
    pub start: NodeId,
    pub end: NodeId,
    /// Nodes in textual order, `start` first and `end` last.
    pub nodes: Vec<NodeId>,
    /// Directed edges, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Cfg {
    pub fn succs(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.iter().filter(move |e| e.0 == n).map(|e| e.1)
    }

    pub fn preds(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.iter().filter(move |e| e.1 == n).map(|e| e.0)
    }
}

/// A parsed and validated program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgramIR {
    /// True when the source declared `lang java`: variables are references
    /// and `x.f` dereferences `x`.
    pub java: bool,
    pub classes: Vec<ClassDecl>,
    pub fields: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub sites: Vec<Site>,
    pub nodes: Vec<Statement>,
    pub functions: Vec<Cfg>,
    pub entry: FuncId,
    /// Every virtual call statement.
    pub origin: BTreeSet<NodeId>,
    /// Every variable whose address is taken somewhere.
    pub addr_taken: BTreeSet<VarId>,
}

/// Errors raised while reading or validating a program.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: undeclared class `{name}`")]
    UndeclaredClass { name: String, line: usize },
    #[error("line {line}: undeclared variable `{name}`")]
    UndeclaredVariable { name: String, line: usize },
    #[error("line {line}: undeclared field `{name}`")]
    UndeclaredField { name: String, line: usize },
    #[error("cyclic class hierarchy through `{0}`")]
    CyclicHierarchy(String),
    #[error("malformed statement {label}: {msg}")]
    MalformedStatement { label: String, msg: String },
    #[error("malformed control flow in `{func}`: {msg}")]
    MalformedCfg { func: String, msg: String },
    #[error("statement {label}: unknown callee `{name}`")]
    UnknownCallee { name: String, label: String },
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
}

impl ProgramIR {
    pub fn class(&self, c: ClassId) -> &ClassDecl {
        &self.classes[c.index()]
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.classes
            .iter()
            .position(|c| c.name == name)
            .map(|i| ClassId(i as u32))
    }

    pub fn var(&self, v: VarId) -> &VarDecl {
        &self.vars[v.index()]
    }

    pub fn node(&self, n: NodeId) -> &Statement {
        &self.nodes[n.index()]
    }

    pub fn func(&self, f: FuncId) -> &Cfg {
        &self.functions[f.index()]
    }

    pub fn entry_cfg(&self) -> &Cfg {
        self.func(self.entry)
    }

    pub fn func_by_name(&self, name: &str) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name)
            .map(|i| FuncId(i as u32))
    }

    pub fn field_name(&self, f: FieldId) -> &str {
        &self.fields[f.index()]
    }

    pub fn field_by_name(&self, name: &str) -> Option<FieldId> {
        self.fields
            .iter()
            .position(|f| f == name)
            .map(|i| FieldId(i as u32))
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|s| s.label == label).map(|s| s.id)
    }

    /// Display name of a variable: bare for the entry function, otherwise
    /// qualified as `func::name`.
    pub fn var_name(&self, v: VarId) -> String {
        let d = self.var(v);
        if d.func == self.entry {
            d.name.clone()
        } else {
            format!("{}::{}", self.func(d.func).name, d.name)
        }
    }

    /// Finds a variable by display name.
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        (0..self.vars.len())
            .map(|i| VarId(i as u32))
            .find(|&v| self.var_name(v) == name)
    }

    /// True for a class-typed variable holding an object rather than a
    /// pointer (C mode stack objects).
    pub fn is_object_var(&self, v: VarId) -> bool {
        self.var(v).ty.level == 0
    }

    /// Ancestors of `c`, starting with `c` itself.
    pub fn ancestors(&self, c: ClassId) -> Vec<ClassId> {
        let mut out = vec![c];
        let mut cur = self.class(c).parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.class(p).parent;
        }
        out
    }

    /// `c` and all classes that inherit from it.
    pub fn descendants(&self, c: ClassId) -> BTreeSet<ClassId> {
        (0..self.classes.len())
            .map(|i| ClassId(i as u32))
            .filter(|&d| self.ancestors(d).contains(&c))
            .collect()
    }

    pub fn is_subclass(&self, sub: ClassId, sup: ClassId) -> bool {
        self.ancestors(sub).contains(&sup)
    }

    /// Fields visible in class `c` (declared or inherited).
    pub fn fields_of(&self, c: ClassId) -> Vec<(FieldId, Ty)> {
        let mut out = Vec::new();
        for a in self.ancestors(c) {
            out.extend(self.class(a).fields.iter().copied());
        }
        out
    }

    pub fn field_ty(&self, c: ClassId, f: FieldId) -> Option<Ty> {
        self.fields_of(c)
            .into_iter()
            .find(|(g, _)| *g == f)
            .map(|(_, t)| t)
    }

    /// The class whose definition of `method` an object of class `c` runs.
    pub fn dispatch(&self, c: ClassId, method: &str) -> Option<ClassId> {
        self.ancestors(c)
            .into_iter()
            .find(|&a| self.class(a).virtuals.contains(method))
    }

    /// Static type of an access expression, if it is well typed.
    pub fn expr_ty(&self, e: &AccessExpr) -> Option<Ty> {
        match *e {
            AccessExpr::Var(x) => Some(self.var(x).ty),
            AccessExpr::Deref(x) => {
                let t = self.var(x).ty;
                (t.level >= 2).then(|| Ty {
                    class: t.class,
                    level: t.level - 1,
                })
            }
            AccessExpr::Arrow(x, f) => {
                let t = self.var(x).ty;
                if t.level != 1 {
                    return None;
                }
                self.field_ty(t.class, f)
            }
            AccessExpr::Dot(x, f) => {
                let t = self.var(x).ty;
                let want = if self.java { 1 } else { 0 };
                if t.level != want {
                    return None;
                }
                self.field_ty(t.class, f)
            }
            AccessExpr::AddrOf(x) => {
                let t = self.var(x).ty;
                Some(Ty {
                    class: t.class,
                    level: t.level + 1,
                })
            }
            AccessExpr::New(c, _) => Some(Ty { class: c, level: 1 }),
            AccessExpr::Null => None,
        }
    }

    /// True when `e` reads through a pointer to an object, i.e. `x.f` in
    /// Java mode; such a `Dot` behaves like `x->f`.
    pub fn dot_derefs(&self, e: &AccessExpr) -> bool {
        matches!(e, AccessExpr::Dot(..)) && self.java
    }

    /// Node ids of the entry function in textual order.
    pub fn entry_nodes(&self) -> &[NodeId] {
        &self.entry_cfg().nodes
    }

    /// True when the entry function is a single chain without calls other
    /// than virtual calls to methods without bodies.
    pub fn is_straight_line(&self) -> bool {
        let cfg = self.entry_cfg();
        let chain = cfg
            .nodes
            .iter()
            .all(|&n| cfg.succs(n).count() <= 1 && cfg.preds(n).count() <= 1);
        chain && self.is_single_function()
    }

    /// True when no statement transfers control to another function body.
    pub fn is_single_function(&self) -> bool {
        self.nodes.iter().all(|s| match &s.kind {
            StmtKind::DirectCall { .. } | StmtKind::IndirectCall { .. } => false,
            StmtKind::VirtualCall { method, receiver } => {
                let c = self.var(*receiver).ty.class;
                self.descendants(c).iter().all(|&d| {
                    self.dispatch(d, method)
                        .map(|k| {
                            self.func_by_name(&format!("{}::{}", self.class(k).name, method))
                                .is_none()
                        })
                        .unwrap_or(true)
                })
            }
            _ => true,
        })
    }
}

impl fmt::Display for ExprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExprKind::Var => "var",
            ExprKind::Deref => "deref",
            ExprKind::Arrow => "arrow",
            ExprKind::Dot => "dot",
            ExprKind::AddrOf => "address-of",
            ExprKind::New => "new",
            ExprKind::Null => "null",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> ProgramIR {
        parse_program(include_str!("../../../../fixtures/fig2.ir")).unwrap()
    }

    #[test]
    fn var_and_base_of_each_form() {
        let p = fig2();
        let x = p.var_by_name("x").unwrap();
        let f = p.field_by_name("f").unwrap();
        assert_eq!(AccessExpr::Arrow(x, f).var_of(), Some(x));
        assert_eq!(AccessExpr::Arrow(x, f).base_of(), Some(x));
        assert_eq!(AccessExpr::Deref(x).base_of(), Some(x));
        assert_eq!(AccessExpr::Dot(x, f).base_of(), None);
        assert_eq!(AccessExpr::AddrOf(x).var_of(), Some(x));
        assert_eq!(AccessExpr::AddrOf(x).base_of(), None);
        assert_eq!(AccessExpr::Null.var_of(), None);
        let c = p.class_by_name("X").unwrap();
        assert_eq!(AccessExpr::New(c, SiteId(0)).var_of(), None);
    }

    #[test]
    fn hierarchy_queries() {
        let p = fig2();
        let [x, y, z] = ["X", "Y", "Z"].map(|n| p.class_by_name(n).unwrap());
        assert_eq!(p.ancestors(z), vec![z, y, x]);
        assert_eq!(p.descendants(x), [x, y, z].into_iter().collect());
        assert_eq!(p.dispatch(z, "vfun"), Some(z));
        assert!(p.field_ty(z, p.field_by_name("f").unwrap()).is_some());
    }
}
