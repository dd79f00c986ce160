//! Virtual call resolution from analysis results, and the precision
//! metrics derived from it.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::absdomain::{AbstractName, AliasRel, DemandSet, NameId};
use crate::ir::{ClassId, ProgramIR, StmtKind};
use crate::solver::{resolve_virtual, SolveResult};

/// Resolution of one virtual call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CallResolution {
    /// Label of the call statement.
    pub id: String,
    pub callees: BTreeSet<String>,
    pub monomorphic: bool,
    /// True when the analysis found no pointee for the receiver and the
    /// callees come from the declared type and its subclasses.
    pub fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub mono: usize,
    pub edges: usize,
    #[serde(rename = "classTypes")]
    pub class_types: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Perf {
    pub nodes: usize,
    pub visits: u64,
    /// Wall time of the solve in milliseconds; left out of reports that
    /// must be reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DevirtReport {
    pub program: String,
    pub variant: String,
    pub abstraction: String,
    pub calls: Vec<CallResolution>,
    pub metrics: Metrics,
    pub perf: Perf,
}

impl DevirtReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One line per call, then the metrics.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.calls {
            let set: Vec<&str> = c.callees.iter().map(String::as_str).collect();
            let tag = match (c.monomorphic, c.fallback) {
                (_, true) => "unresolved-fallback",
                (true, false) => "monomorphic",
                (false, false) => "polymorphic",
            };
            out.push_str(&format!("{}: {{{}}} {}\n", c.id, set.join(", "), tag));
        }
        let m = &self.metrics;
        out.push_str(&format!(
            "mono={} edges={} classTypes={}\n",
            m.mono, m.edges, m.class_types
        ));
        out
    }
}

/// Callees of a call on a receiver of class `c` by class hierarchy.
fn hierarchy_callees(p: &ProgramIR, c: ClassId, method: &str) -> BTreeSet<String> {
    p.descendants(c)
        .into_iter()
        .filter_map(|d| p.dispatch(d, method))
        .map(|k| format!("{}::{}", p.class(k).name, method))
        .collect()
}

/// Resolves every virtual call of the program from the final `Ain` of
/// its node.
pub fn devirtualize(result: &SolveResult, p: &ProgramIR) -> DevirtReport {
    let mut calls = Vec::new();
    for &c in &p.origin {
        let StmtKind::VirtualCall { receiver, method } = &p.node(c).kind else {
            continue;
        };
        // The solver already checked that every pointee dispatches.
        let found = resolve_virtual(p, &result.names, c, &result.state(c).ain).unwrap_or_default();
        let fallback = found.is_empty();
        let callees = if fallback {
            hierarchy_callees(p, p.var(*receiver).ty.class, method)
        } else {
            found
        };
        calls.push(CallResolution {
            id: p.node(c).label.clone(),
            monomorphic: callees.len() == 1,
            callees,
            fallback,
        });
    }
    let metrics = Metrics {
        mono: calls.iter().filter(|c| c.monomorphic).count(),
        edges: calls.iter().map(|c| c.callees.len()).sum(),
        class_types: class_type_metric(result, p),
    };
    DevirtReport {
        program: String::new(),
        variant: result.config.variant.to_string(),
        abstraction: result.config.abstraction.to_string(),
        calls,
        metrics,
        perf: Perf {
            nodes: result.graph.len(),
            visits: result.counters.visits(),
            ms: Some(result.elapsed.as_secs_f64() * 1000.0),
        },
    }
}

/// Distinct `(name, class)` pairs where `name` points to an object of
/// `class` at some node and `name` is demanded there. Pointees that are
/// pointer variables carry no class and are not counted.
pub fn class_type_metric(result: &SolveResult, p: &ProgramIR) -> usize {
    class_pairs(result, result, p).len()
}

/// [`class_type_metric`] of the aliases of `aliases` over the demands of
/// `demands`.
pub fn class_type_metric_over(
    aliases: &SolveResult,
    demands: &SolveResult,
    p: &ProgramIR,
) -> usize {
    class_pairs(aliases, demands, p).len()
}

fn class_pairs(
    aliases: &SolveResult,
    demands: &SolveResult,
    p: &ProgramIR,
) -> BTreeSet<(NameId, ClassId)> {
    let names = &aliases.names;
    let mut out = BTreeSet::new();
    let mut add = |a: &AliasRel, d: &DemandSet| {
        for (x, y) in a.iter() {
            let Some(c) = names.name(y).object_class(p) else {
                continue;
            };
            if d.contains(&x) && !matches!(names.name(x), AbstractName::AddrVar(_)) {
                out.insert((x, c));
            }
        }
    };
    for n in aliases.graph.ids() {
        let st = aliases.state(n);
        add(&st.ain, &demands.din(n));
        add(&st.aout, &demands.dout(n));
    }
    out
}
