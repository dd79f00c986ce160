//! Per-statement demand and alias transfer functions.
//!
//! The demand side runs against control flow: `Din = (Dout - Dkill) ∪ Dgen`.
//! The alias side runs with it: `Aout = (Ain - Akill) ∪ Agen`. Both sides
//! name expressions over the incoming alias relation `Ain` of the node.
//!
//! Alias pairs are generated as points-to edges: the names of `ℓ` are
//! paired with the address names `r` evaluates to, where a non-address
//! name on the right contributes the objects it points to in `Ain`.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::absdomain::{
    abs_name, addr_name, AbsError, AbstractName, AliasRel, DemandSet, NameId, NameTable, ObjId,
    ObjectStore,
};
use crate::ir::{AccessExpr, ProgramIR, StmtKind, VarId};
use crate::Abstraction;

/// Which analysis to run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Variant {
    /// Demand driven with speculation on addresses of variables.
    Id,
    /// Demand driven with speculation on the bases of indirect stores.
    Cd,
    /// Exhaustive: every name is demanded everywhere.
    Ex,
    /// Demand driven for programs without `&`, `*` and `->`.
    Jd,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Id => "id",
            Variant::Cd => "cd",
            Variant::Ex => "ex",
            Variant::Jd => "jd",
        })
    }
}

/// Deliberate defects used as negative controls for the oracles.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Mutation {
    /// Id without demands for addresses of variables.
    NoAddrSpeculation,
}

/// Selects the variant, heap abstraction and optional refinements.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct VariantConfig {
    pub variant: Variant,
    pub abstraction: Abstraction,
    pub use_object_store: bool,
    pub use_used_pointer_store: bool,
    pub mutation: Option<Mutation>,
}

impl VariantConfig {
    pub fn new(variant: Variant, abstraction: Abstraction) -> Self {
        VariantConfig {
            variant,
            abstraction,
            use_object_store: false,
            use_used_pointer_store: false,
            mutation: None,
        }
    }

    pub fn with_object_store(mut self, on: bool) -> Self {
        self.use_object_store = on;
        self
    }

    pub fn with_used_pointer_store(mut self, on: bool) -> Self {
        self.use_used_pointer_store = on;
        self
    }

    pub fn with_mutation(mut self, m: Option<Mutation>) -> Self {
        self.mutation = m;
        self
    }

    /// True when the object store takes part in naming.
    pub fn object_store_active(&self) -> bool {
        self.use_object_store && self.abstraction == Abstraction::Tba && self.variant != Variant::Ex
    }
}

/// Pointers dereferenced on the left of some assignment.
pub type UsedPointerStore = BTreeSet<VarId>;

/// `{x | some statement has ℓ ≡ *x or ℓ ≡ x->f}`.
pub fn used_pointer_store(p: &ProgramIR) -> UsedPointerStore {
    p.nodes
        .iter()
        .filter_map(|s| s.assign())
        .filter_map(|(l, _)| l.base_of())
        .collect()
}

/// Errors that stop an analysis.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Unsupported(#[from] AbsError),
    #[error("statement {label}: {what} not permitted under jd")]
    JdForbidden { label: String, what: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("`{method}` is not defined for class `{class}` or its ancestors")]
    MethodNotInHierarchy { class: String, method: String },
    #[error("no fixed point after {visits} node visits (budget {budget})")]
    BudgetExceeded { visits: u64, budget: u64 },
}

/// Rejects programs and configurations the chosen variant cannot handle.
pub fn validate(p: &ProgramIR, cfg: &VariantConfig) -> Result<(), AnalysisError> {
    if cfg.use_object_store && cfg.abstraction != Abstraction::Tba {
        return Err(AnalysisError::InvalidConfig(
            "the object store requires tba".into(),
        ));
    }
    if p.java && matches!(cfg.variant, Variant::Id | Variant::Cd) {
        return Err(AnalysisError::InvalidConfig(format!(
            "{} reads `x.f` as a field of the object `x`; use jd or ex for java programs",
            cfg.variant
        )));
    }
    for s in &p.nodes {
        let Some((l, r)) = s.assign() else { continue };
        for e in [l, r] {
            if let AccessExpr::Deref(y) = e {
                if p.var(y).ty.level < 2 {
                    return Err(AbsError::UnsupportedExpr(format!(
                        "{}: *{}",
                        s.label,
                        p.var_name(y)
                    ))
                    .into());
                }
            }
            let what = match e {
                AccessExpr::AddrOf(_) => "address-of",
                AccessExpr::Deref(_) => "dereference",
                AccessExpr::Arrow(..) => "`->`",
                _ => continue,
            };
            if cfg.variant == Variant::Jd {
                return Err(AnalysisError::JdForbidden {
                    label: s.label.clone(),
                    what: what.into(),
                });
            }
        }
    }
    Ok(())
}

/// Transfer functions of one program under one configuration.
pub struct Transfer<'a> {
    pub p: &'a ProgramIR,
    pub names: &'a NameTable,
    pub cfg: VariantConfig,
    pub used: UsedPointerStore,
}

impl<'a> Transfer<'a> {
    pub fn new(p: &'a ProgramIR, names: &'a NameTable, cfg: VariantConfig) -> Self {
        Transfer {
            p,
            names,
            cfg,
            used: used_pointer_store(p),
        }
    }

    fn var(&self, x: VarId) -> NameId {
        self.names.id(&AbstractName::Var(x))
    }

    fn speculates_addr(&self) -> bool {
        self.cfg.variant == Variant::Id && self.cfg.mutation != Some(Mutation::NoAddrSpeculation)
    }

    /// The store argument for naming, or `None` when it is not in use.
    pub fn store<'s>(&self, s: &'s ObjectStore) -> Option<&'s ObjectStore> {
        self.cfg.object_store_active().then_some(s)
    }

    pub fn abs(
        &self,
        e: &AccessExpr,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<DemandSet, AbsError> {
        abs_name(self.p, self.names, e, ain, store)
    }

    /// Expressions whose demand dies at the statement: `{ℓ}` when `ℓ ≡ x`.
    pub fn d_kill(kind: &StmtKind) -> BTreeSet<AccessExpr> {
        match kind {
            StmtKind::Assign {
                lhs: l @ AccessExpr::Var(_),
                ..
            } => BTreeSet::from([*l]),
            _ => BTreeSet::new(),
        }
    }

    /// `{&x | x ∈ var(a), x address-taken}`.
    pub fn addr_expr(&self, a: &AccessExpr, store: Option<&ObjectStore>) -> DemandSet {
        a.var_of()
            .filter(|x| self.p.addr_taken.contains(x))
            .and_then(|x| addr_name(self.p, self.names, x, store))
            .into_iter()
            .collect()
    }

    /// Demand raised for the right side when the left side is demanded.
    pub fn ld_gen(
        &self,
        r: &AccessExpr,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<DemandSet, AbsError> {
        let spec = self.speculates_addr();
        let addr = |out: &mut DemandSet| {
            if spec {
                out.extend(self.addr_expr(r, store));
            }
        };
        let mut out = DemandSet::new();
        match self.cfg.variant {
            Variant::Jd => match *r {
                AccessExpr::Dot(x, _) => {
                    out.insert(self.var(x));
                    out.extend(self.abs(r, ain, store)?);
                }
                AccessExpr::Var(x) => {
                    out.insert(self.var(x));
                }
                _ => {}
            },
            _ => {
                if let Some(b) = r.base_of() {
                    out.insert(self.var(b));
                    addr(&mut out);
                    out.extend(self.abs(r, ain, store)?);
                } else if r.is_addr() {
                    if spec {
                        out.extend(self.abs(r, ain, store)?);
                    }
                } else if r.var_of().is_some() {
                    out.extend(self.abs(r, ain, store)?);
                    addr(&mut out);
                }
            }
        }
        Ok(out)
    }

    /// Demand raised for the left side when the right side is demanded.
    pub fn rd_gen(&self, l: &AccessExpr, store: Option<&ObjectStore>) -> DemandSet {
        let mut out = DemandSet::new();
        match self.cfg.variant {
            Variant::Jd => {
                if let AccessExpr::Dot(x, _) = *l {
                    out.insert(self.var(x));
                }
            }
            _ => {
                out.extend(l.base_of().map(|b| self.var(b)));
                if self.speculates_addr() {
                    out.extend(self.addr_expr(l, store));
                }
            }
        }
        out
    }

    /// True when `v` may be the target of a store through `x`.
    fn store_target(&self, v: VarId, x: VarId) -> bool {
        let (tv, tx) = (self.p.var(v).ty, self.p.var(x).ty);
        self.p.addr_taken.contains(&v)
            && tv.level + 1 == tx.level
            && (self.p.is_subclass(tv.class, tx.class) || self.p.is_subclass(tx.class, tv.class))
    }

    /// A plain pointer `p = &x` whose pointer is never dereferenced on a
    /// left side and is not demanded.
    fn unused_pointer(&self, l: &AccessExpr, r: &AccessExpr, demand: &DemandSet) -> bool {
        match (*l, r) {
            (AccessExpr::Var(p), AccessExpr::AddrOf(_)) => {
                self.cfg.use_used_pointer_store
                    && !self.used.contains(&p)
                    && !demand.contains(&self.var(p))
            }
            _ => false,
        }
    }

    /// Whether the left (`.0`) and right (`.1`) cases of the demand rule
    /// fire at an assignment.
    pub fn relevance(
        &self,
        l: &AccessExpr,
        r: &AccessExpr,
        dout_prime: &DemandSet,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<(bool, bool), AbsError> {
        let lbar = self.abs(l, ain, store)?;
        let rbar = self.abs(r, ain, store)?;
        let left = lbar.iter().any(|n| dout_prime.contains(n));
        let right = !matches!(r, AccessExpr::New(..))
            && !self.unused_pointer(l, r, dout_prime)
            && rbar.iter().any(|n| dout_prime.contains(n));
        Ok((left, right))
    }

    /// Demand generated at a node given the completed demand `Dout'`.
    pub fn d_gen(
        &self,
        kind: &StmtKind,
        dout_prime: &DemandSet,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<DemandSet, AbsError> {
        match *kind {
            StmtKind::VirtualCall { receiver, .. } => {
                self.ld_gen(&AccessExpr::Var(receiver), ain, store)
            }
            StmtKind::Assign { lhs, rhs } => {
                let (left, right) = self.relevance(&lhs, &rhs, dout_prime, ain, store)?;
                let mut out = DemandSet::new();
                if left {
                    out.extend(self.ld_gen(&rhs, ain, store)?);
                }
                if right {
                    out.extend(self.rd_gen(&lhs, store));
                }
                if self.cfg.variant == Variant::Cd {
                    out.extend(self.cd_base_demand(&lhs, dout_prime));
                }
                Ok(out)
            }
            _ => Ok(DemandSet::new()),
        }
    }

    /// Cd's speculative demand for the base of an indirect store that may
    /// write a demanded name.
    fn cd_base_demand(&self, l: &AccessExpr, dout_prime: &DemandSet) -> Option<NameId> {
        let hit = match *l {
            AccessExpr::Deref(x) => dout_prime.iter().any(|&d| match self.names.name(d) {
                AbstractName::Var(v) => self.store_target(v, x),
                _ => false,
            }),
            AccessExpr::Arrow(_, f) => dout_prime
                .iter()
                .any(|&d| self.names.name(d).field() == Some(f)),
            _ => false,
        };
        hit.then(|| self.var(l.base_of().unwrap()))
    }

    /// Cd's speculative kill: while the targets of `*x` are unknown, a
    /// store through `x` is assumed to define every demanded variable it
    /// could write.
    pub fn d_kill_cd(
        &self,
        kind: &StmtKind,
        dout: &DemandSet,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<DemandSet, AbsError> {
        let mut out = DemandSet::new();
        if self.cfg.variant != Variant::Cd {
            return Ok(out);
        }
        if let StmtKind::Assign {
            lhs: l @ AccessExpr::Deref(x),
            ..
        } = kind
        {
            if self.abs(l, ain, store)?.is_empty() {
                for &d in dout {
                    if let AbstractName::Var(v) = self.names.name(d) {
                        if self.store_target(v, *x) {
                            out.insert(d);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// True at a Cd store `*x = r` whose targets are still unknown, where
    /// [`Transfer::d_kill_cd`] applies. A solver lifts this kill once a
    /// fixed point leaves the targets unknown: the store then writes
    /// nothing on any execution.
    pub fn kill_pending(
        &self,
        kind: &StmtKind,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<bool, AbsError> {
        if self.cfg.variant != Variant::Cd {
            return Ok(false);
        }
        match kind {
            StmtKind::Assign {
                lhs: l @ AccessExpr::Deref(_),
                ..
            } => Ok(self.abs(l, ain, store)?.is_empty()),
            _ => Ok(false),
        }
    }

    /// `Din` of a node.
    pub fn demand_in(
        &self,
        kind: &StmtKind,
        dout: &DemandSet,
        aout: &AliasRel,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<DemandSet, AbsError> {
        self.demand_in_with(kind, dout, aout, ain, store, true)
    }

    /// `Din` of a node, without Cd's speculative kill when `kill` is false.
    pub fn demand_in_with(
        &self,
        kind: &StmtKind,
        dout: &DemandSet,
        aout: &AliasRel,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
        kill: bool,
    ) -> Result<DemandSet, AbsError> {
        let dout_prime = aout.image(dout);
        let mut din = dout.clone();
        if let StmtKind::Assign {
            lhs: AccessExpr::Var(x),
            ..
        } = kind
        {
            din.remove(&self.var(*x));
        }
        if kill {
            for d in self.d_kill_cd(kind, dout, ain, store)? {
                din.remove(&d);
            }
        }
        din.extend(self.d_gen(kind, &dout_prime, ain, store)?);
        Ok(din)
    }

    /// Stack objects named by the sides of an assignment.
    pub fn objects(&self, kind: &StmtKind) -> Vec<ObjId> {
        let Some((l, r)) = (match *kind {
            StmtKind::Assign { lhs, rhs } => Some((lhs, rhs)),
            _ => None,
        }) else {
            return Vec::new();
        };
        [l, r]
            .into_iter()
            .filter_map(|e| match e {
                AccessExpr::Dot(a, _) | AccessExpr::AddrOf(a) if self.p.is_object_var(a) => {
                    Some(ObjId::Var(a))
                }
                _ => None,
            })
            .collect()
    }

    /// Alias pairs generated at a node.
    pub fn a_gen(
        &self,
        kind: &StmtKind,
        dout: &DemandSet,
        ain: &AliasRel,
        store: Option<&ObjectStore>,
    ) -> Result<AliasRel, AbsError> {
        let mut out = AliasRel::new();
        let StmtKind::Assign { lhs, rhs } = kind else {
            return Ok(out);
        };
        let lbar = self.abs(lhs, ain, store)?;
        if lbar.is_empty() {
            return Ok(out);
        }
        let rbar = self.abs(rhs, ain, store)?;
        let fires = self.cfg.variant == Variant::Ex
            || lbar.iter().any(|n| dout.contains(n))
            || (!matches!(rhs, AccessExpr::New(..))
                && !self.unused_pointer(lhs, rhs, dout)
                && rbar.iter().any(|&n| dout.contains(&n) || ain.mentions(n)));
        if !fires {
            return Ok(out);
        }
        let mut vals = BTreeSet::new();
        for &b in &rbar {
            if self.names.name(b).is_addr() {
                vals.insert(b);
            } else {
                vals.extend(ain.pointees(b));
            }
        }
        for &a in &lbar {
            for &b in &vals {
                out.insert(a, b);
            }
        }
        Ok(out)
    }

    /// The name whose pairs are killed: `x` when `ℓ ≡ x`.
    pub fn a_kill(&self, kind: &StmtKind) -> Option<NameId> {
        match kind {
            StmtKind::Assign {
                lhs: AccessExpr::Var(x),
                ..
            } => Some(self.var(*x)),
            _ => None,
        }
    }

    /// `Aout` of a node.
    pub fn alias_out(
        &self,
        kind: &StmtKind,
        ain: &AliasRel,
        dout: &DemandSet,
        store: Option<&ObjectStore>,
    ) -> Result<AliasRel, AbsError> {
        let mut aout = ain.clone();
        if let Some(x) = self.a_kill(kind) {
            aout.retain(|&(a, _)| a != x);
        }
        aout.union_with(&self.a_gen(kind, dout, ain, store)?);
        Ok(aout)
    }
}
