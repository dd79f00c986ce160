//! The interprocedural control flow graph.
//!
//! Node ids of the supergraph extend the program's [`NodeId`] space: ids
//! below `p.nodes.len()` are program statements, larger ids are synthesized
//! binding copies. For a call `c` to a callee `g` the supergraph contains
//!
//! ```text
//! c -> q1 = a1 -> ... -> start_g      (parameter bindings)
//! end_g -> r = ret_g -> succ(c)       (return binding)
//! c -> succ(c)                        (bypass for the caller's frame)
//! ```
//!
//! Binding nodes are private to one `(call, callee)` pair. Virtual calls
//! start without callees; their edge bundles are prepared up front and
//! spliced in by [`Supergraph::activate`] once the solver resolves the
//! receiver.

use std::collections::{BTreeMap, BTreeSet};

use super::*;

/// A directed supergraph edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
}

/// A supergraph node: either a program statement or a binding copy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SgNode {
    pub id: NodeId,
    pub label: String,
    pub func: FuncId,
    pub kind: StmtKind,
    /// The `(call, callee)` pair a synthesized binding belongs to.
    pub binding: Option<(NodeId, FuncId)>,
}

/// Interprocedural CFG with on-the-fly growth of virtual call edges.
#[derive(Clone, Debug)]
pub struct Supergraph {
    pub nodes: Vec<SgNode>,
    succs: Vec<BTreeSet<NodeId>>,
    preds: Vec<BTreeSet<NodeId>>,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Edge bundles of virtual call targets that are not yet active.
    pending: BTreeMap<(NodeId, FuncId), Vec<Edge>>,
    /// Callees currently connected at each call node.
    calls: BTreeMap<NodeId, BTreeSet<FuncId>>,
}

impl Supergraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &SgNode {
        &self.nodes[n.index()]
    }

    pub fn succs(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.succs[n.index()].iter().copied()
    }

    pub fn preds(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.preds[n.index()].iter().copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// All edges currently present, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        self.ids()
            .flat_map(|a| self.succs(a).map(move |b| Edge { from: a, to: b }))
            .collect()
    }

    /// Functions with a body that a virtual call could dispatch to.
    pub fn candidates(&self, call: NodeId) -> BTreeSet<FuncId> {
        self.pending
            .range((call, FuncId(0))..=(call, FuncId(u32::MAX)))
            .map(|(&(_, f), _)| f)
            .collect()
    }

    /// Callees currently connected at each call node.
    pub fn call_graph(&self) -> &BTreeMap<NodeId, BTreeSet<FuncId>> {
        &self.calls
    }

    /// Reverse postorder rank of every node over the present edges and
    /// every prepared virtual call bundle, starting from the entry. Nodes
    /// not reached rank last, in id order.
    pub fn rpo_ranks(&self) -> Vec<usize> {
        let mut adj: Vec<Vec<NodeId>> = self
            .succs
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect();
        for e in self.pending.values().flatten() {
            adj[e.from.index()].push(e.to);
        }
        let mut seen = vec![false; self.len()];
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(self.entry, 0usize)];
        seen[self.entry.index()] = true;
        while let Some((n, i)) = stack.pop() {
            if let Some(&m) = adj[n.index()].get(i) {
                stack.push((n, i + 1));
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    stack.push((m, 0));
                }
            } else {
                post.push(n);
            }
        }
        let mut rank = vec![usize::MAX; self.len()];
        for (k, n) in post.iter().rev().enumerate() {
            rank[n.index()] = k;
        }
        let unreached = rank.iter_mut().filter(|r| **r == usize::MAX);
        for (next, r) in (post.len()..).zip(unreached) {
            *r = next;
        }
        rank
    }

    fn add_edge(&mut self, e: Edge) -> bool {
        let fresh = self.succs[e.from.index()].insert(e.to);
        self.preds[e.to.index()].insert(e.from);
        fresh
    }

    /// Connects `callee` at virtual call `call`. Returns the edges that
    /// were added, empty if the pair was already active or the callee has
    /// no body.
    pub fn activate(&mut self, call: NodeId, callee: FuncId) -> Vec<Edge> {
        let Some(bundle) = self.pending.remove(&(call, callee)) else {
            return Vec::new();
        };
        self.calls.entry(call).or_default().insert(callee);
        bundle.into_iter().filter(|&e| self.add_edge(e)).collect()
    }
}

fn push(
    nodes: &mut Vec<SgNode>,
    label: String,
    func: FuncId,
    kind: StmtKind,
    binding: (NodeId, FuncId),
) -> NodeId {
    let id = NodeId(nodes.len() as u32);
    nodes.push(SgNode {
        id,
        label,
        func,
        kind,
        binding: Some(binding),
    });
    id
}

/// Builds the supergraph of `p`. Direct and indirect calls are connected
/// to every declared target; virtual calls to functions named
/// `Class::method` are prepared but left inactive.
pub fn build_supergraph(p: &ProgramIR) -> Supergraph {
    let mut nodes: Vec<SgNode> = p
        .nodes
        .iter()
        .map(|s| SgNode {
            id: s.id,
            label: s.label.clone(),
            func: s.func,
            kind: s.kind.clone(),
            binding: None,
        })
        .collect();
    let mut edges: Vec<Edge> = Vec::new();
    let mut pending: BTreeMap<(NodeId, FuncId), Vec<Edge>> = BTreeMap::new();
    let mut calls: BTreeMap<NodeId, BTreeSet<FuncId>> = BTreeMap::new();

    for cfg in &p.functions {
        for &(a, b) in &cfg.edges {
            edges.push(Edge { from: a, to: b });
        }
        for &c in &cfg.nodes {
            let s = p.node(c);
            let (targets, actuals, ret, is_virtual): (
                Vec<FuncId>,
                Vec<VarId>,
                Option<VarId>,
                bool,
            ) = match &s.kind {
                StmtKind::DirectCall { callee, args, ret } => {
                    (vec![*callee], args.clone(), *ret, false)
                }
                StmtKind::IndirectCall {
                    targets, args, ret, ..
                } => (targets.clone(), args.clone(), *ret, false),
                StmtKind::VirtualCall { receiver, method } => (
                    virtual_bodies(p, *receiver, method),
                    vec![*receiver],
                    None,
                    true,
                ),
                _ => continue,
            };
            if !is_virtual {
                calls.entry(c).or_default();
            }
            for g in targets {
                let gcfg = p.func(g);
                let mut bundle = Vec::new();
                let mut prev = c;
                // A method body without formals simply ignores the receiver.
                let formals: &[VarId] = if is_virtual && gcfg.params.len() != 1 {
                    &[]
                } else {
                    &gcfg.params
                };
                for (k, (&q, &a)) in formals.iter().zip(&actuals).enumerate() {
                    let kind = StmtKind::Assign {
                        lhs: AccessExpr::Var(q),
                        rhs: AccessExpr::Var(a),
                    };
                    let b = push(
                        &mut nodes,
                        format!("{}>{}#{}", s.label, gcfg.name, k),
                        g,
                        kind,
                        (c, g),
                    );
                    bundle.push(Edge { from: prev, to: b });
                    prev = b;
                }
                bundle.push(Edge {
                    from: prev,
                    to: gcfg.start,
                });
                let mut last = gcfg.end;
                if let (Some(r), Some(slot)) = (ret, gcfg.ret) {
                    let kind = StmtKind::Assign {
                        lhs: AccessExpr::Var(r),
                        rhs: AccessExpr::Var(slot),
                    };
                    let b = push(
                        &mut nodes,
                        format!("{}<{}", s.label, gcfg.name),
                        s.func,
                        kind,
                        (c, g),
                    );
                    bundle.push(Edge {
                        from: gcfg.end,
                        to: b,
                    });
                    last = b;
                }
                for succ in cfg.succs(c) {
                    bundle.push(Edge {
                        from: last,
                        to: succ,
                    });
                }
                if is_virtual {
                    pending.insert((c, g), bundle);
                } else {
                    calls.entry(c).or_default().insert(g);
                    edges.extend(bundle);
                }
            }
        }
    }

    let n = nodes.len();
    let mut sg = Supergraph {
        nodes,
        succs: vec![BTreeSet::new(); n],
        preds: vec![BTreeSet::new(); n],
        entry: p.entry_cfg().start,
        exit: p.entry_cfg().end,
        pending,
        calls,
    };
    for e in edges {
        sg.add_edge(e);
    }
    sg
}

/// Functions named `Class::method` that a call of `method` on `receiver`
/// may dispatch to, judged by the receiver's declared type.
fn virtual_bodies(p: &ProgramIR, receiver: VarId, method: &str) -> Vec<FuncId> {
    let c = p.var(receiver).ty.class;
    let mut out = BTreeSet::new();
    for d in p.descendants(c) {
        if let Some(k) = p.dispatch(d, method) {
            if let Some(f) = p.func_by_name(&format!("{}::{}", p.class(k).name, method)) {
                out.insert(f);
            }
        }
    }
    out.into_iter().collect()
}
