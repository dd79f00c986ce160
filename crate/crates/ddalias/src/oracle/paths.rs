//! Qualified control flow paths and per-path solutions.

use std::collections::BTreeSet;

use serde::Serialize;

use super::OracleError;
use crate::absdomain::{AliasRel, DemandSet, NameTable, ObjectStore};
use crate::ir::{NodeId, ProgramIR};
use crate::solver::NodeState;
use crate::transfer::{validate, Transfer, Variant, VariantConfig};

/// One occurrence of `pivot` on a start-to-end walk of the entry function.
///
/// `forward` runs from the start node to the node before the occurrence
/// and `backward` from the node after it to the end node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct QualifiedPath {
    pub forward: Vec<NodeId>,
    pub pivot: NodeId,
    pub backward: Vec<NodeId>,
}

impl QualifiedPath {
    /// The underlying walk.
    pub fn walk(&self) -> Vec<NodeId> {
        let mut w = self.forward.clone();
        w.push(self.pivot);
        w.extend(&self.backward);
        w
    }

    /// Position of the pivot occurrence within [`QualifiedPath::walk`].
    pub fn position(&self) -> usize {
        self.forward.len()
    }

    /// Predecessor of the pivot on this path.
    pub fn pred(&self) -> Option<NodeId> {
        self.forward.last().copied()
    }

    /// Successor of the pivot on this path.
    pub fn succ(&self) -> Option<NodeId> {
        self.backward.first().copied()
    }

    /// Labels of the walk, with the pivot occurrence in brackets.
    pub fn render(&self, p: &ProgramIR) -> String {
        let label = |n: &NodeId| p.node(*n).label.clone();
        let mut parts: Vec<String> = self.forward.iter().map(label).collect();
        parts.push(format!("[{}]", label(&self.pivot)));
        parts.extend(self.backward.iter().map(label));
        parts.join(" ")
    }
}

/// Every start-to-end walk of the entry function with at most `max_len`
/// statements between start and end, in lexicographic order of node ids.
pub fn enumerate_walks(
    p: &ProgramIR,
    max_len: usize,
    cap: usize,
) -> Result<Vec<Vec<NodeId>>, OracleError> {
    let cfg = p.entry_cfg();
    let mut out = Vec::new();
    let mut stack = vec![cfg.start];
    fn go(
        p: &ProgramIR,
        stack: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        max_len: usize,
        cap: usize,
    ) -> Result<(), OracleError> {
        let cfg = p.entry_cfg();
        let n = *stack.last().unwrap();
        if n == cfg.end {
            if out.len() == cap {
                return Err(OracleError::PathBudgetExceeded { cap });
            }
            out.push(stack.clone());
            return Ok(());
        }
        let succs: BTreeSet<NodeId> = cfg.succs(n).collect();
        for s in succs {
            // start and end are not counted as statements
            let inner = stack.len() - 1 + usize::from(s != cfg.end);
            if inner > max_len {
                continue;
            }
            stack.push(s);
            go(p, stack, out, max_len, cap)?;
            stack.pop();
        }
        Ok(())
    }
    go(p, &mut stack, &mut out, max_len, cap)?;
    Ok(out)
}

/// `Paths(pivot)` bounded by `max_len` statements per walk.
pub fn enumerate_paths(
    p: &ProgramIR,
    pivot: NodeId,
    max_len: usize,
    cap: usize,
) -> Result<Vec<QualifiedPath>, OracleError> {
    let mut out = Vec::new();
    for w in enumerate_walks(p, max_len, cap)? {
        for (i, &n) in w.iter().enumerate() {
            if n == pivot {
                out.push(QualifiedPath {
                    forward: w[..i].to_vec(),
                    pivot,
                    backward: w[i + 1..].to_vec(),
                });
                if out.len() > cap {
                    return Err(OracleError::PathBudgetExceeded { cap });
                }
            }
        }
    }
    Ok(out)
}

/// Per-occurrence states of a walk: the transfer functions iterated over
/// the fixed occurrence sequence until demands and aliases are stable.
pub fn solve_walk(
    p: &ProgramIR,
    cfg: VariantConfig,
    walk: &[NodeId],
) -> Result<Vec<NodeState>, OracleError> {
    validate(p, &cfg)?;
    let names = NameTable::new(p, cfg.abstraction);
    let tr = Transfer::new(p, &names, cfg);
    let universal: DemandSet = names.ids().collect();
    let exhaustive = cfg.variant == Variant::Ex;
    let mut states = vec![NodeState::default(); walk.len()];
    let mut store = ObjectStore::new();
    let mut lifted = vec![false; walk.len()];
    loop {
        let before = (states.clone(), store.clone());
        if !exhaustive {
            for i in (0..walk.len()).rev() {
                let kind = &p.node(walk[i]).kind;
                let dout = states.get(i + 1).map(|s| s.din.clone()).unwrap_or_default();
                let st = &states[i];
                if cfg.object_store_active() {
                    if let Some((l, r)) = p.node(walk[i]).assign() {
                        let (a, b) =
                            tr.relevance(&l, &r, &st.aout.image(&dout), &st.ain, Some(&store))?;
                        if a || b {
                            store.extend(tr.objects(kind));
                        }
                    }
                }
                let din = tr.demand_in_with(
                    kind,
                    &dout,
                    &st.aout,
                    &st.ain,
                    tr.store(&store),
                    !lifted[i],
                )?;
                states[i].din = din;
                states[i].dout = dout;
            }
        }
        for i in 0..walk.len() {
            let ain = if i == 0 {
                AliasRel::new()
            } else {
                states[i - 1].aout.clone()
            };
            let dout = if exhaustive {
                &universal
            } else {
                &states[i].dout
            };
            let aout = tr.alias_out(&p.node(walk[i]).kind, &ain, dout, tr.store(&store))?;
            states[i].ain = ain;
            states[i].aout = aout;
        }
        if (&states, &store) == (&before.0, &before.1) {
            let mut any = false;
            for (i, &n) in walk.iter().enumerate() {
                if !lifted[i]
                    && tr.kill_pending(&p.node(n).kind, &states[i].ain, tr.store(&store))?
                {
                    lifted[i] = true;
                    any = true;
                }
            }
            if !any {
                return Ok(states);
            }
        }
    }
}

/// The state of the pivot occurrence of `rho`.
pub fn mop_along_path(
    p: &ProgramIR,
    rho: &QualifiedPath,
    cfg: VariantConfig,
) -> Result<NodeState, OracleError> {
    Ok(solve_walk(p, cfg, &rho.walk())?.swap_remove(rho.position()))
}

/// Union of the per-path states over every enumerated path through
/// `pivot`.
pub fn mop_meet(
    p: &ProgramIR,
    pivot: NodeId,
    max_len: usize,
    cap: usize,
    cfg: VariantConfig,
) -> Result<NodeState, OracleError> {
    let mut out = NodeState::default();
    for w in enumerate_walks(p, max_len, cap)? {
        let states = solve_walk(p, cfg, &w)?;
        for (i, &n) in w.iter().enumerate() {
            if n == pivot {
                merge(&mut out, &states[i]);
            }
        }
    }
    Ok(out)
}

pub(crate) fn merge(into: &mut NodeState, s: &NodeState) {
    into.din.extend(s.din.iter().copied());
    into.dout.extend(s.dout.iter().copied());
    into.ain.union_with(&s.ain);
    into.aout.union_with(&s.aout);
}
