//! The bidirectional worklist solver.
//!
//! Demands flow backward and aliases forward, and each side reads the
//! other. The solver alternates an inner demand fixed point with an inner
//! alias fixed point until both worklists are empty:
//!
//! * a change of `Din_n` puts the predecessors of `n` on both worklists,
//! * a change of `Aout_n` puts the successors of `n` on both worklists and
//!   `n` itself on the demand worklist, since `Dout'_n` reads `Aout_n`.
//!
//! The exhaustive variant skips the demand side and starts with every
//! node on the alias worklist.

mod trace;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::absdomain::{
    restrict_one, AbstractName, AliasRel, DemandSet, NameId, NameTable, ObjectStore,
};
use crate::ir::{build_supergraph, AccessExpr, NodeId, ProgramIR, StmtKind, Supergraph};
use crate::transfer::{
    validate, AnalysisError, Transfer, UsedPointerStore, Variant, VariantConfig,
};
use crate::Abstraction;

pub use trace::{diagnostics_trace, TraceRow, TraceTable};

/// Data flow values of one node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NodeState {
    pub din: DemandSet,
    pub dout: DemandSet,
    pub ain: AliasRel,
    pub aout: AliasRel,
}

/// Extraction order of the worklists.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
    /// Uniformly random extraction from a seeded generator.
    Shuffled(u64),
    /// Reverse postorder: the alias worklist yields the node earliest in
    /// reverse postorder, the demand worklist the latest.
    Rpo,
}

/// Knobs of a solve that do not change its result.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub order: WorklistOrder,
    /// Keep per-round snapshots for [`diagnostics_trace`].
    pub trace: bool,
    /// Maximum node visits; defaults to `64 × nodes × names`.
    pub budget: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            order: WorklistOrder::Fifo,
            trace: false,
            budget: None,
        }
    }
}

/// Work done by a solve.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Alternations of a demand and an alias fixed point.
    pub rounds: u32,
    pub demand_visits: u64,
    pub alias_visits: u64,
}

impl Counters {
    /// Total node visits on both sides.
    pub fn visits(&self) -> u64 {
        self.demand_visits + self.alias_visits
    }
}

/// `Dout` and `Aout` of every node at the end of one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundSnapshot {
    pub dout: Vec<DemandSet>,
    pub aout: Vec<AliasRel>,
}

/// Fixed point of one analysis.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub config: VariantConfig,
    pub names: NameTable,
    /// The supergraph with every virtual call edge found during the solve.
    pub graph: Supergraph,
    /// Indexed by supergraph node id.
    pub states: Vec<NodeState>,
    /// Callees per call node: function names for direct and indirect
    /// calls, `Class::method` for virtual calls.
    pub call_graph: BTreeMap<NodeId, BTreeSet<String>>,
    pub counters: Counters,
    pub object_store: Option<ObjectStore>,
    pub used_pointers: Option<UsedPointerStore>,
    pub rounds: Vec<RoundSnapshot>,
    /// Cd stores whose speculative kill was lifted because their targets
    /// stayed unknown at a fixed point.
    pub kill_lifted: BTreeSet<NodeId>,
    /// Wall time of the solve.
    pub elapsed: Duration,
}

impl SolveResult {
    pub fn state(&self, n: NodeId) -> &NodeState {
        &self.states[n.index()]
    }

    /// True for the exhaustive variant, where every name is demanded.
    pub fn universal_demand(&self) -> bool {
        self.config.variant == Variant::Ex
    }

    pub fn din(&self, n: NodeId) -> DemandSet {
        if self.universal_demand() {
            self.names.ids().collect()
        } else {
            self.state(n).din.clone()
        }
    }

    pub fn dout(&self, n: NodeId) -> DemandSet {
        if self.universal_demand() {
            self.names.ids().collect()
        } else {
            self.state(n).dout.clone()
        }
    }

    /// `Aout_n` restricted to the names in `d`.
    pub fn restrict_out(&self, n: NodeId, d: &DemandSet) -> BTreeSet<(NameId, NameId)> {
        restrict_one(&self.state(n).aout, d)
    }

    /// `Ain_n` restricted to the names in `d`.
    pub fn restrict_in(&self, n: NodeId, d: &DemandSet) -> BTreeSet<(NameId, NameId)> {
        restrict_one(&self.state(n).ain, d)
    }

    /// Union of `Aout` over all nodes.
    pub fn all_aliases(&self) -> AliasRel {
        let mut out = AliasRel::new();
        for s in &self.states {
            out.union_with(&s.aout);
        }
        out
    }

    /// Names the receiver of `call` points to in `Ain`, rendered.
    pub fn pointees_at(&self, call: NodeId, var: &str, p: &ProgramIR) -> BTreeSet<String> {
        let Some(v) = p.var_by_name(var) else {
            return BTreeSet::new();
        };
        let x = self.names.id(&AbstractName::Var(v));
        self.state(call)
            .ain
            .pointees(x)
            .map(|b| self.names.text(b).to_string())
            .collect()
    }
}

struct Worklist {
    queue: VecDeque<NodeId>,
    queued: Vec<bool>,
    order: WorklistOrder,
    rng: ChaCha8Rng,
    /// Priority keys for [`WorklistOrder::Rpo`].
    ranked: BTreeSet<(usize, NodeId)>,
    keys: Vec<usize>,
}

impl Worklist {
    fn new(n: usize, order: WorklistOrder, keys: Vec<usize>) -> Self {
        let seed = if let WorklistOrder::Shuffled(s) = order {
            s
        } else {
            0
        };
        Worklist {
            queue: VecDeque::new(),
            queued: vec![false; n],
            order,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ranked: BTreeSet::new(),
            keys,
        }
    }

    fn push(&mut self, n: NodeId) {
        if !self.queued[n.index()] {
            self.queued[n.index()] = true;
            if self.order == WorklistOrder::Rpo {
                let k = self.keys.get(n.index()).copied().unwrap_or(usize::MAX);
                self.ranked.insert((k, n));
            } else {
                self.queue.push_back(n);
            }
        }
    }

    fn pop(&mut self) -> Option<NodeId> {
        let n = match self.order {
            WorklistOrder::Rpo => self.ranked.pop_first().map(|(_, n)| n),
            WorklistOrder::Fifo => self.queue.pop_front(),
            WorklistOrder::Lifo => self.queue.pop_back(),
            WorklistOrder::Shuffled(_) => {
                if self.queue.is_empty() {
                    None
                } else {
                    let i = self.rng.random_range(0..self.queue.len());
                    self.queue.swap_remove_back(i)
                }
            }
        }?;
        self.queued[n.index()] = false;
        Some(n)
    }

    fn is_empty(&self) -> bool {
        self.queue.is_empty() && self.ranked.is_empty()
    }
}

/// Callee names a virtual call on `receiver` dispatches to given the
/// objects the receiver points to in `ain`.
pub fn resolve_virtual(
    p: &ProgramIR,
    names: &NameTable,
    call: NodeId,
    ain: &AliasRel,
) -> Result<BTreeSet<String>, AnalysisError> {
    let StmtKind::VirtualCall { receiver, method } = &p.node(call).kind else {
        return Ok(BTreeSet::new());
    };
    let x = names.id(&AbstractName::Var(*receiver));
    let mut out = BTreeSet::new();
    for b in ain.pointees(x) {
        let Some(c) = names.name(b).object_class(p) else {
            continue;
        };
        let k = p
            .dispatch(c, method)
            .ok_or_else(|| AnalysisError::MethodNotInHierarchy {
                class: p.class(c).name.clone(),
                method: method.clone(),
            })?;
        out.insert(format!("{}::{}", p.class(k).name, method));
    }
    Ok(out)
}

/// Runs the configured analysis to its fixed point.
pub fn solve(p: &ProgramIR, cfg: VariantConfig) -> Result<SolveResult, AnalysisError> {
    solve_with(p, cfg, SolveOptions::default())
}

/// The exhaustive analysis.
pub fn solve_ex(p: &ProgramIR, abstraction: Abstraction) -> Result<SolveResult, AnalysisError> {
    solve(p, VariantConfig::new(Variant::Ex, abstraction))
}

/// Nodes whose names depend on the object store.
fn store_sensitive(sg: &Supergraph, p: &ProgramIR) -> Vec<NodeId> {
    sg.ids()
        .filter(|&n| match sg.node(n).kind {
            StmtKind::Assign { lhs, rhs } => [lhs, rhs].iter().any(|e| match *e {
                AccessExpr::Dot(a, _) | AccessExpr::AddrOf(a) => p.is_object_var(a),
                _ => false,
            }),
            _ => false,
        })
        .collect()
}

struct Engine<'a> {
    p: &'a ProgramIR,
    tr: Transfer<'a>,
    sg: Supergraph,
    states: Vec<NodeState>,
    store: ObjectStore,
    dwl: Worklist,
    awl: Worklist,
    counters: Counters,
    budget: u64,
    sensitive: Vec<NodeId>,
    exhaustive: bool,
    /// Nodes where Cd's speculative kill has been lifted.
    lifted: Vec<bool>,
}

impl Engine<'_> {
    /// Lifts the kill at every Cd store whose targets are still unknown
    /// and queues those stores again. Returns whether any kill was lifted.
    fn lift_kills(&mut self) -> Result<bool, AnalysisError> {
        let mut any = false;
        for n in self.sg.ids().collect::<Vec<_>>() {
            if self.lifted[n.index()] {
                continue;
            }
            let st = &self.states[n.index()];
            if self
                .tr
                .kill_pending(&self.sg.node(n).kind, &st.ain, self.tr.store(&self.store))?
            {
                self.lifted[n.index()] = true;
                self.dwl.push(n);
                any = true;
            }
        }
        Ok(any)
    }

    fn tick(&mut self) -> Result<(), AnalysisError> {
        if self.counters.visits() >= self.budget {
            return Err(AnalysisError::BudgetExceeded {
                visits: self.counters.visits(),
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn visit_demand(&mut self, n: NodeId) -> Result<(), AnalysisError> {
        self.tick()?;
        self.counters.demand_visits += 1;
        let mut dout = DemandSet::new();
        for s in self.sg.succs(n) {
            dout.extend(self.states[s.index()].din.iter().copied());
        }
        let kind = self.sg.node(n).kind.clone();
        let st = &self.states[n.index()];
        if self.tr.cfg.object_store_active() {
            if let StmtKind::Assign { lhs, rhs } = kind {
                let dout_prime = st.aout.image(&dout);
                let (l, r) =
                    self.tr
                        .relevance(&lhs, &rhs, &dout_prime, &st.ain, Some(&self.store))?;
                let mut grew = false;
                if l || r {
                    for o in self.tr.objects(&kind) {
                        grew |= self.store.insert(o);
                    }
                }
                if grew {
                    for &m in &self.sensitive {
                        self.dwl.push(m);
                        self.awl.push(m);
                    }
                }
            }
        }
        let st = &self.states[n.index()];
        let kill = !self.lifted[n.index()];
        let din = self.tr.demand_in_with(
            &kind,
            &dout,
            &st.aout,
            &st.ain,
            self.tr.store(&self.store),
            kill,
        )?;
        let changed = din != st.din;
        let st = &mut self.states[n.index()];
        st.dout = dout;
        if changed {
            st.din = din;
            let preds: Vec<_> = self.sg.preds(n).collect();
            for m in preds {
                self.dwl.push(m);
                self.awl.push(m);
            }
        }
        Ok(())
    }

    fn visit_alias(&mut self, n: NodeId) -> Result<(), AnalysisError> {
        self.tick()?;
        self.counters.alias_visits += 1;
        let mut ain = AliasRel::new();
        for m in self.sg.preds(n) {
            ain.union_with(&self.states[m.index()].aout);
        }
        if self.p.origin.contains(&n) {
            self.grow_calls(n, &ain)?;
        }
        let kind = &self.sg.node(n).kind;
        let aout = self.tr.alias_out(
            kind,
            &ain,
            &self.states[n.index()].dout,
            self.tr.store(&self.store),
        )?;
        let st = &mut self.states[n.index()];
        st.ain = ain;
        if aout != st.aout {
            st.aout = aout;
            let succs: Vec<_> = self.sg.succs(n).collect();
            for s in succs {
                self.awl.push(s);
                if !self.exhaustive {
                    self.dwl.push(s);
                }
            }
            if !self.exhaustive {
                self.dwl.push(n);
            }
        }
        Ok(())
    }

    /// Splices in the bodies of newly resolved virtual callees.
    fn grow_calls(&mut self, call: NodeId, ain: &AliasRel) -> Result<(), AnalysisError> {
        let targets = resolve_virtual(self.p, self.tr.names, call, ain)?;
        for f in self.sg.candidates(call) {
            if !targets.contains(&self.p.func(f).name) {
                continue;
            }
            let fresh = self.sg.activate(call, f);
            for e in &fresh {
                self.awl.push(e.to);
                if !self.exhaustive {
                    self.dwl.push(e.from);
                }
            }
            if self.exhaustive && !fresh.is_empty() {
                for &m in &self.p.func(f).nodes {
                    self.awl.push(m);
                }
            }
        }
        Ok(())
    }
}

/// Runs the configured analysis with explicit solver options.
pub fn solve_with(
    p: &ProgramIR,
    cfg: VariantConfig,
    opts: SolveOptions,
) -> Result<SolveResult, AnalysisError> {
    let started = Instant::now();
    validate(p, &cfg)?;
    let names = NameTable::new(p, cfg.abstraction);
    let sg = build_supergraph(p);
    let n = sg.len();
    let budget = opts
        .budget
        .unwrap_or(64 * n.max(1) as u64 * names.len().max(1) as u64);
    let sensitive = store_sensitive(&sg, p);
    let ranks = if opts.order == WorklistOrder::Rpo {
        sg.rpo_ranks()
    } else {
        Vec::new()
    };
    let exhaustive = cfg.variant == Variant::Ex;
    let mut e = Engine {
        p,
        tr: Transfer::new(p, &names, cfg),
        sg,
        states: vec![NodeState::default(); n],
        store: ObjectStore::new(),
        dwl: Worklist::new(
            n,
            opts.order,
            ranks.iter().map(|r| usize::MAX - r).collect(),
        ),
        awl: Worklist::new(n, opts.order, ranks),
        counters: Counters::default(),
        budget,
        sensitive,
        exhaustive,
        lifted: vec![false; n],
    };
    if exhaustive {
        for m in e.sg.ids().collect::<Vec<_>>() {
            e.awl.push(m);
        }
    } else {
        for &o in &p.origin {
            e.dwl.push(o);
        }
        e.awl.push(e.sg.entry);
    }
    let mut rounds = Vec::new();
    loop {
        while !e.dwl.is_empty() || !e.awl.is_empty() {
            e.counters.rounds += 1;
            while let Some(m) = e.dwl.pop() {
                e.visit_demand(m)?;
            }
            while let Some(m) = e.awl.pop() {
                e.visit_alias(m)?;
            }
            if opts.trace {
                rounds.push(RoundSnapshot {
                    dout: e.states.iter().map(|s| s.dout.clone()).collect(),
                    aout: e.states.iter().map(|s| s.aout.clone()).collect(),
                });
            }
        }
        if !e.lift_kills()? {
            break;
        }
    }

    let mut call_graph = BTreeMap::new();
    for (&c, fs) in e.sg.call_graph() {
        if !p.origin.contains(&c) {
            call_graph.insert(c, fs.iter().map(|&f| p.func(f).name.clone()).collect());
        }
    }
    for &c in &p.origin {
        call_graph.insert(c, resolve_virtual(p, &names, c, &e.states[c.index()].ain)?);
    }
    let object_store = cfg.object_store_active().then(|| e.store.clone());
    let used_pointers = cfg.use_used_pointer_store.then(|| e.tr.used.clone());
    let kill_lifted = e.sg.ids().filter(|m| e.lifted[m.index()]).collect();
    let Engine {
        sg,
        states,
        counters,
        ..
    } = e;
    Ok(SolveResult {
        config: cfg,
        names,
        graph: sg,
        states,
        call_graph,
        counters,
        object_store,
        used_pointers,
        rounds,
        kill_lifted,
        elapsed: started.elapsed(),
    })
}

/// Re-applies every transfer function to a solved state and reports the
/// nodes where anything would change.
pub fn check_fixpoint(p: &ProgramIR, r: &SolveResult) -> Result<Vec<String>, AnalysisError> {
    let tr = Transfer::new(p, &r.names, r.config);
    let empty = ObjectStore::new();
    let store = tr.store(r.object_store.as_ref().unwrap_or(&empty));
    let mut bad = Vec::new();
    for n in r.graph.ids() {
        let st = r.state(n);
        let node = r.graph.node(n);
        let mut ain = AliasRel::new();
        for m in r.graph.preds(n) {
            ain.union_with(&r.state(m).aout);
        }
        let aout = tr.alias_out(&node.kind, &ain, &st.dout, store)?;
        if ain != st.ain || aout != st.aout {
            bad.push(format!("{}: alias values are not stable", node.label));
        }
        if r.universal_demand() {
            continue;
        }
        let mut dout = DemandSet::new();
        for m in r.graph.succs(n) {
            dout.extend(r.state(m).din.iter().copied());
        }
        let din = tr.demand_in_with(
            &node.kind,
            &dout,
            &st.aout,
            &st.ain,
            store,
            !r.kill_lifted.contains(&n),
        )?;
        if dout != st.dout || din != st.din {
            bad.push(format!("{}: demand values are not stable", node.label));
        }
        if let (Some(s), &StmtKind::Assign { lhs, rhs }) = (store, &node.kind) {
            let (l, rr) = tr.relevance(&lhs, &rhs, &st.aout.image(&st.dout), &st.ain, Some(s))?;
            if (l || rr) && tr.objects(&node.kind).iter().any(|o| !s.contains(o)) {
                bad.push(format!("{}: object store is not closed", node.label));
            }
        }
    }
    for &c in &p.origin {
        let want = resolve_virtual(p, &r.names, c, &r.state(c).ain)?;
        let active: BTreeSet<String> = r
            .graph
            .call_graph()
            .get(&c)
            .into_iter()
            .flatten()
            .map(|&f| p.func(f).name.clone())
            .collect();
        let with_body: BTreeSet<String> = r
            .graph
            .candidates(c)
            .iter()
            .map(|&f| p.func(f).name.clone())
            .chain(active.iter().cloned())
            .filter(|name| want.contains(name))
            .collect();
        if active != with_body {
            bad.push(format!(
                "{}: call graph disagrees with Ain",
                p.node(c).label
            ));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests;
