//! Round-by-round tables of demands and points-to edges.
//!
//! A cell shows the facts at the point after a statement that are new in
//! that round: absent at that point in the previous round and absent from
//! every point at the end of the previous round. Trailing rounds that add
//! nothing are dropped.

use std::collections::BTreeSet;

use serde::Serialize;

use super::SolveResult;
use crate::absdomain::NameId;
use crate::ir::{render_stmt, ProgramIR, StmtKind};

/// One statement of the table; `cells` holds `(demand, ptg)` per round,
/// `None` for call statements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub stmt: String,
    pub cells: Vec<Option<(String, String)>>,
}

/// The round table of the entry function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceTable {
    pub rounds: usize,
    pub rows: Vec<TraceRow>,
    /// Every fact shown in some cell, as rendered text.
    pub shown: BTreeSet<String>,
}

impl TraceTable {
    /// Pipe-separated text with one header line and one line per
    /// statement.
    pub fn render(&self) -> String {
        let mut out = String::from("stmt");
        for k in 1..=self.rounds {
            out.push_str(&format!(" | r{k} demand | r{k} ptg"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.stmt);
            for c in &row.cells {
                match c {
                    Some((d, a)) => out.push_str(&format!(" | {d} | {a}")),
                    None => out.push_str(" |  | "),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn render_edges(r: &SolveResult, pairs: &BTreeSet<(NameId, NameId)>) -> String {
    if pairs.is_empty() {
        return "∅".to_string();
    }
    let parts: Vec<String> = pairs.iter().map(|&e| r.names.render_edge(e)).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Builds the round table from a solve run with tracing enabled.
pub fn diagnostics_trace(r: &SolveResult, p: &ProgramIR) -> TraceTable {
    let nodes = p.entry_nodes();
    let rows_of = &nodes[1..nodes.len().saturating_sub(1).max(1)];
    let universal = r.universal_demand();
    let mut cells: Vec<Vec<Option<(String, String)>>> = vec![Vec::new(); rows_of.len()];
    let mut shown = BTreeSet::new();
    let mut last_useful = 0;
    for (k, snap) in r.rounds.iter().enumerate() {
        let prev = k.checked_sub(1).map(|j| &r.rounds[j]);
        let mut seen_d: BTreeSet<NameId> = BTreeSet::new();
        let mut seen_a: BTreeSet<(NameId, NameId)> = BTreeSet::new();
        if let Some(prev) = prev {
            for &n in nodes {
                seen_d.extend(prev.dout[n.index()].iter().copied());
                seen_a.extend(prev.aout[n.index()].iter());
            }
        }
        let mut any = false;
        for (i, &n) in rows_of.iter().enumerate() {
            if matches!(
                p.node(n).kind,
                StmtKind::VirtualCall { .. }
                    | StmtKind::DirectCall { .. }
                    | StmtKind::IndirectCall { .. }
            ) {
                cells[i].push(None);
                continue;
            }
            let d: BTreeSet<NameId> = snap.dout[n.index()]
                .iter()
                .copied()
                .filter(|x| {
                    !seen_d.contains(x) && prev.is_none_or(|q| !q.dout[n.index()].contains(x))
                })
                .collect();
            let a: BTreeSet<(NameId, NameId)> = snap.aout[n.index()]
                .iter()
                .filter(|e| {
                    !seen_a.contains(e)
                        && prev.is_none_or(|q| !q.aout[n.index()].contains(e.0, e.1))
                })
                .collect();
            any |= !d.is_empty() || !a.is_empty();
            shown.extend(d.iter().map(|&x| r.names.text(x).to_string()));
            shown.extend(a.iter().map(|&e| r.names.render_edge(e)));
            let dtext = if universal {
                "all".to_string()
            } else {
                r.names.render_set(&d)
            };
            cells[i].push(Some((dtext, render_edges(r, &a))));
        }
        if any {
            last_useful = k + 1;
        }
    }
    let rounds = last_useful.max(usize::from(!r.rounds.is_empty()));
    let rows = rows_of
        .iter()
        .zip(cells)
        .map(|(&n, mut c)| {
            c.truncate(rounds);
            TraceRow {
                stmt: render_stmt(p, p.node(n)),
                cells: c,
            }
        })
        .collect();
    TraceTable {
        rounds,
        rows,
        shown,
    }
}
