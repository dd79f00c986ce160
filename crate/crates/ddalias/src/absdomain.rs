//! Abstract names, the alias relation and demand sets.
//!
//! Every abstract name of a program is known up front, so names are
//! interned into a [`NameTable`] whose ids follow the canonical text order.
//! Sets of ids therefore iterate in the order they are rendered.
//!
//! An [`AliasRel`] stores generated pairs oriented as `(name, &object)`,
//! i.e. as points-to edges. Membership is symmetric and transitive
//! consequences are derived on demand by [`alias_closure`].

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::ir::{AccessExpr, ClassId, FieldId, ProgramIR, SiteId, VarId};

/// Heap abstraction used to name objects.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Abstraction {
    /// Type based: all objects of one class share a name.
    Tba,
    /// Allocation site based: heap objects are named by their site and
    /// stack objects by their variable.
    Asb,
}

impl fmt::Display for Abstraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Abstraction::Tba => "tba",
            Abstraction::Asb => "asb",
        })
    }
}

/// A normalized access expression naming an abstract memory location.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AbstractName {
    /// The variable `x` itself.
    Var(VarId),
    /// `&x`: the location of variable `x`.
    AddrVar(VarId),
    /// `&T`: the summary object of class `T` (tba).
    AddrType(ClassId),
    /// `&s`: objects allocated at site `s` (asb).
    AddrSite(SiteId),
    /// `T.f` (tba).
    TypeField(ClassId, FieldId),
    /// `a.f` for a stack object `a` (asb).
    ObjField(VarId, FieldId),
    /// `s.f` for objects allocated at `s` (asb).
    SiteField(SiteId, FieldId),
}

impl AbstractName {
    /// True for names denoting the address of an object or variable.
    pub fn is_addr(&self) -> bool {
        matches!(
            self,
            AbstractName::AddrVar(_) | AbstractName::AddrType(_) | AbstractName::AddrSite(_)
        )
    }

    /// True for names of a field of some object.
    pub fn is_field(&self) -> bool {
        matches!(
            self,
            AbstractName::TypeField(..) | AbstractName::ObjField(..) | AbstractName::SiteField(..)
        )
    }

    pub fn field(&self) -> Option<FieldId> {
        match *self {
            AbstractName::TypeField(_, f)
            | AbstractName::ObjField(_, f)
            | AbstractName::SiteField(_, f) => Some(f),
            _ => None,
        }
    }

    /// Class of the object an address name denotes. `None` for the
    /// address of a pointer variable and for non-address names.
    pub fn object_class(&self, p: &ProgramIR) -> Option<ClassId> {
        match *self {
            AbstractName::AddrType(c) => Some(c),
            AbstractName::AddrSite(s) => Some(p.sites[s.index()].class),
            AbstractName::AddrVar(a) if p.is_object_var(a) => Some(p.var(a).ty.class),
            _ => None,
        }
    }

    /// Canonical text: `x`, `&x`, `&X`, `&n05`, `X.f`, `n05.f`, `a.f`.
    pub fn render(&self, p: &ProgramIR) -> String {
        match *self {
            AbstractName::Var(v) => p.var_name(v),
            AbstractName::AddrVar(v) => format!("&{}", p.var_name(v)),
            AbstractName::AddrType(c) => format!("&{}", p.class(c).name),
            AbstractName::AddrSite(s) => format!("&{}", p.sites[s.index()].label),
            AbstractName::TypeField(c, f) => format!("{}.{}", p.class(c).name, p.field_name(f)),
            AbstractName::ObjField(v, f) => format!("{}.{}", p.var_name(v), p.field_name(f)),
            AbstractName::SiteField(s, f) => {
                format!("{}.{}", p.sites[s.index()].label, p.field_name(f))
            }
        }
    }
}

/// Interned abstract name. Ids are ordered like the canonical texts.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NameId(pub u32);

impl NameId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The abstract-name universe of one program under one abstraction.
#[derive(Clone, Debug)]
pub struct NameTable {
    pub abstraction: Abstraction,
    names: Vec<AbstractName>,
    texts: Vec<String>,
    index: HashMap<AbstractName, NameId>,
}

impl NameTable {
    pub fn new(p: &ProgramIR, abstraction: Abstraction) -> Self {
        let mut all = BTreeSet::new();
        for (i, d) in p.vars.iter().enumerate() {
            let v = VarId(i as u32);
            all.insert(AbstractName::Var(v));
            if p.addr_taken.contains(&v) && (d.ty.level > 0 || abstraction == Abstraction::Asb) {
                all.insert(AbstractName::AddrVar(v));
            }
            if d.ty.level == 0 && abstraction == Abstraction::Asb {
                for (f, _) in p.fields_of(d.ty.class) {
                    all.insert(AbstractName::ObjField(v, f));
                }
            }
        }
        match abstraction {
            Abstraction::Tba => {
                for i in 0..p.classes.len() {
                    let c = ClassId(i as u32);
                    all.insert(AbstractName::AddrType(c));
                    for (f, _) in p.fields_of(c) {
                        all.insert(AbstractName::TypeField(c, f));
                    }
                }
            }
            Abstraction::Asb => {
                for (i, site) in p.sites.iter().enumerate() {
                    let s = SiteId(i as u32);
                    all.insert(AbstractName::AddrSite(s));
                    for (f, _) in p.fields_of(site.class) {
                        all.insert(AbstractName::SiteField(s, f));
                    }
                }
            }
        }
        let mut named: Vec<(String, AbstractName)> =
            all.into_iter().map(|n| (n.render(p), n)).collect();
        named.sort();
        let index = named
            .iter()
            .enumerate()
            .map(|(i, (_, n))| (*n, NameId(i as u32)))
            .collect();
        let (texts, names) = named.into_iter().unzip();
        NameTable {
            abstraction,
            names,
            texts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, n: &AbstractName) -> Option<NameId> {
        self.index.get(n).copied()
    }

    /// Id of a name known to be in the universe.
    pub fn id(&self, n: &AbstractName) -> NameId {
        self.index[n]
    }

    pub fn name(&self, id: NameId) -> AbstractName {
        self.names[id.index()]
    }

    pub fn text(&self, id: NameId) -> &str {
        &self.texts[id.index()]
    }

    /// Finds a name by its canonical text.
    pub fn by_text(&self, text: &str) -> Option<NameId> {
        self.texts
            .iter()
            .position(|t| t == text)
            .map(|i| NameId(i as u32))
    }

    pub fn ids(&self) -> impl Iterator<Item = NameId> {
        (0..self.names.len() as u32).map(NameId)
    }

    /// `{a, b}` in canonical order, `∅` when empty.
    pub fn render_set<'a>(&self, ids: impl IntoIterator<Item = &'a NameId>) -> String {
        let parts: Vec<&str> = ids.into_iter().map(|&i| self.text(i)).collect();
        if parts.is_empty() {
            "∅".to_string()
        } else {
            format!("{{{}}}", parts.join(", "))
        }
    }

    /// `(a,b)`.
    pub fn render_pair(&self, (a, b): (NameId, NameId)) -> String {
        format!("({},{})", self.text(a), self.text(b))
    }

    /// `{(a,b), (c,d)}` in the given order, or `∅`.
    pub fn render_pairs(&self, pairs: impl IntoIterator<Item = (NameId, NameId)>) -> String {
        let parts: Vec<String> = pairs.into_iter().map(|e| self.render_pair(e)).collect();
        if parts.is_empty() {
            "∅".to_string()
        } else {
            format!("{{{}}}", parts.join(", "))
        }
    }

    /// Points-to rendering `a→B` of the pair `(a, &B)`.
    pub fn render_edge(&self, (a, b): (NameId, NameId)) -> String {
        let t = self.text(b);
        format!("{}→{}", self.text(a), t.strip_prefix('&').unwrap_or(t))
    }
}

/// A set of demanded abstract names.
pub type DemandSet = BTreeSet<NameId>;

/// A set of alias pairs with symmetric membership.
///
/// Pairs are kept in a sorted vector, which makes the frequent clone,
/// compare and merge operations of the solver cheap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AliasRel {
    pairs: Vec<(NameId, NameId)>,
}

impl AliasRel {
    pub fn new() -> Self {
        Self::default()
    }

    fn has(&self, a: NameId, b: NameId) -> bool {
        self.pairs.binary_search(&(a, b)).is_ok()
    }

    /// Adds a pair; reflexive pairs are ignored. Returns true if new.
    pub fn insert(&mut self, a: NameId, b: NameId) -> bool {
        if a == b || self.has(b, a) {
            return false;
        }
        match self.pairs.binary_search(&(a, b)) {
            Ok(_) => false,
            Err(i) => {
                self.pairs.insert(i, (a, b));
                true
            }
        }
    }

    /// Symmetric membership.
    pub fn contains(&self, a: NameId, b: NameId) -> bool {
        self.has(a, b) || self.has(b, a)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stored pairs in their generated orientation, sorted.
    pub fn iter(&self) -> impl Iterator<Item = (NameId, NameId)> + '_ {
        self.pairs.iter().copied()
    }

    /// Second components of the stored pairs whose first component is `a`.
    pub fn pointees(&self, a: NameId) -> impl Iterator<Item = NameId> + '_ {
        let lo = self.pairs.partition_point(|&(x, _)| x < a);
        self.pairs[lo..]
            .iter()
            .take_while(move |&&(x, _)| x == a)
            .map(|&(_, b)| b)
    }

    /// True when `a` occurs in some pair.
    pub fn mentions(&self, a: NameId) -> bool {
        self.pointees(a).next().is_some() || self.pairs.iter().any(|&(_, b)| b == a)
    }

    /// Adds all pairs of `other`. Returns true if anything was added.
    pub fn union_with(&mut self, other: &AliasRel) -> bool {
        if other.pairs.is_empty() {
            return false;
        }
        if self.pairs.is_empty() {
            self.pairs = other.pairs.clone();
            return true;
        }
        let fresh: Vec<(NameId, NameId)> = other
            .pairs
            .iter()
            .copied()
            .filter(|&(a, b)| !self.contains(a, b))
            .collect();
        if fresh.is_empty() {
            return false;
        }
        let mut merged = Vec::with_capacity(self.pairs.len() + fresh.len());
        let (mut i, mut j) = (0, 0);
        while i < self.pairs.len() && j < fresh.len() {
            if self.pairs[i] < fresh[j] {
                merged.push(self.pairs[i]);
                i += 1;
            } else {
                merged.push(fresh[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&self.pairs[i..]);
        merged.extend_from_slice(&fresh[j..]);
        self.pairs = merged;
        true
    }

    /// Keeps the pairs satisfying `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&(NameId, NameId)) -> bool) {
        self.pairs.retain(|e| keep(e));
    }

    /// True when every pair of `self` is in `other`.
    pub fn is_subset(&self, other: &AliasRel) -> bool {
        self.pairs.iter().all(|&(a, b)| other.contains(a, b))
    }

    /// Names related to some member of `xs` by a single pair, plus `xs`.
    pub fn image(&self, xs: &BTreeSet<NameId>) -> BTreeSet<NameId> {
        let mut out = xs.clone();
        for &(a, b) in &self.pairs {
            if xs.contains(&a) {
                out.insert(b);
            }
            if xs.contains(&b) {
                out.insert(a);
            }
        }
        out
    }
}

impl FromIterator<(NameId, NameId)> for AliasRel {
    fn from_iter<I: IntoIterator<Item = (NameId, NameId)>>(iter: I) -> Self {
        let mut r = AliasRel::new();
        for (a, b) in iter {
            r.insert(a, b);
        }
        r
    }
}

/// Names reachable from `xs` through chains of pairs in `a`, read
/// symmetrically and transitively, including `xs` itself.
pub fn alias_closure(a: &AliasRel, xs: &BTreeSet<NameId>) -> BTreeSet<NameId> {
    let mut adj: HashMap<NameId, Vec<NameId>> = HashMap::new();
    for (x, y) in a.iter() {
        adj.entry(x).or_default().push(y);
        adj.entry(y).or_default().push(x);
    }
    let mut out = xs.clone();
    let mut queue: VecDeque<NameId> = xs.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(&n).into_iter().flatten() {
            if out.insert(m) {
                queue.push_back(m);
            }
        }
    }
    out
}

/// Identifier of an object recorded in an [`ObjectStore`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ObjId {
    /// A stack object.
    Var(VarId),
    /// Objects allocated at a site.
    Site(SiteId),
}

/// Objects accessed by statements found relevant so far. Under tba a
/// stack object contributes its field and address names only once it is
/// in the store.
pub type ObjectStore = BTreeSet<ObjId>;

/// Errors raised while naming expressions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbsError {
    #[error("`{0}` copies an object; only pointer assignments are analysed")]
    UnsupportedExpr(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
}

fn in_store(store: Option<&ObjectStore>, a: VarId) -> bool {
    store.is_none_or(|s| s.contains(&ObjId::Var(a)))
}

/// Name of `&x`, if it exists under the table's abstraction and store.
pub fn addr_name(
    p: &ProgramIR,
    names: &NameTable,
    x: VarId,
    store: Option<&ObjectStore>,
) -> Option<NameId> {
    let n = if p.is_object_var(x) && names.abstraction == Abstraction::Tba {
        if !in_store(store, x) {
            return None;
        }
        AbstractName::AddrType(p.var(x).ty.class)
    } else {
        AbstractName::AddrVar(x)
    };
    names.get(&n)
}

/// Field `f` of the object named by the address name `obj`.
fn field_of(p: &ProgramIR, names: &NameTable, obj: NameId, f: FieldId) -> Option<NameId> {
    let n = match names.name(obj) {
        AbstractName::AddrType(c) => AbstractName::TypeField(c, f),
        AbstractName::AddrSite(s) => AbstractName::SiteField(s, f),
        AbstractName::AddrVar(a) if p.is_object_var(a) => match names.abstraction {
            Abstraction::Asb => AbstractName::ObjField(a, f),
            Abstraction::Tba => AbstractName::TypeField(p.var(a).ty.class, f),
        },
        _ => return None,
    };
    names.get(&n)
}

/// Abstract names of an access expression over the alias relation `ain`.
///
/// `store`, when given, limits the names of stack objects to those in the
/// store. It only has an effect under tba.
pub fn abs_name(
    p: &ProgramIR,
    names: &NameTable,
    e: &AccessExpr,
    ain: &AliasRel,
    store: Option<&ObjectStore>,
) -> Result<BTreeSet<NameId>, AbsError> {
    let store = if names.abstraction == Abstraction::Tba {
        store
    } else {
        None
    };
    let mut out = BTreeSet::new();
    match *e {
        AccessExpr::Var(x) => {
            out.insert(names.id(&AbstractName::Var(x)));
        }
        AccessExpr::AddrOf(x) => out.extend(addr_name(p, names, x, store)),
        AccessExpr::Deref(y) => {
            if p.var(y).ty.level < 2 {
                return Err(AbsError::UnsupportedExpr(format!("*{}", p.var_name(y))));
            }
            for b in ain.pointees(names.id(&AbstractName::Var(y))) {
                if let AbstractName::AddrVar(v) = names.name(b) {
                    out.insert(names.id(&AbstractName::Var(v)));
                }
            }
        }
        AccessExpr::Arrow(x, f) => {
            for b in ain.pointees(names.id(&AbstractName::Var(x))) {
                out.extend(field_of(p, names, b, f));
            }
        }
        AccessExpr::Dot(x, f) if p.java => {
            for b in ain.pointees(names.id(&AbstractName::Var(x))) {
                out.extend(field_of(p, names, b, f));
            }
        }
        AccessExpr::Dot(a, f) => {
            let n = match names.abstraction {
                Abstraction::Asb => AbstractName::ObjField(a, f),
                Abstraction::Tba if in_store(store, a) => {
                    AbstractName::TypeField(p.var(a).ty.class, f)
                }
                Abstraction::Tba => return Ok(out),
            };
            out.extend(names.get(&n));
        }
        AccessExpr::New(c, s) => {
            let n = match names.abstraction {
                Abstraction::Tba => AbstractName::AddrType(c),
                Abstraction::Asb => AbstractName::AddrSite(s),
            };
            out.insert(names.id(&n));
        }
        AccessExpr::Null => {}
    }
    Ok(out)
}

/// Alias pairs oriented with the demanded name first.
pub type DemandedPairs = BTreeSet<(NameId, NameId)>;

/// Projection of an alias relation pair onto a demand set pair: the pairs
/// of `ain` with a component in `din`, and of `aout` with a component in
/// `dout`, each oriented with the demanded name first.
pub fn restrict(
    ain: &AliasRel,
    aout: &AliasRel,
    din: &DemandSet,
    dout: &DemandSet,
) -> (DemandedPairs, DemandedPairs) {
    (restrict_one(ain, din), restrict_one(aout, dout))
}

/// One component of [`restrict`].
pub fn restrict_one(a: &AliasRel, d: &DemandSet) -> DemandedPairs {
    let mut out = BTreeSet::new();
    for (x, y) in a.iter() {
        if d.contains(&x) {
            out.insert((x, y));
        }
        if d.contains(&y) {
            out.insert((y, x));
        }
    }
    out
}

/// Classes a variable of declared type `C*` may point to: `C` and its
/// descendants.
pub fn declared_pointees(p: &ProgramIR, x: &str) -> Result<BTreeSet<ClassId>, AbsError> {
    let v = p
        .var_by_name(x)
        .ok_or_else(|| AbsError::UndeclaredVariable(x.to_string()))?;
    Ok(p.descendants(p.var(v).ty.class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn fig(text: &str, abs: Abstraction) -> (ProgramIR, NameTable) {
        let p = parse_program(text).unwrap();
        let t = NameTable::new(&p, abs);
        (p, t)
    }

    fn fig2(abs: Abstraction) -> (ProgramIR, NameTable) {
        fig(include_str!("../../../fixtures/fig2.ir"), abs)
    }

    fn n(t: &NameTable, s: &str) -> NameId {
        t.by_text(s).unwrap_or_else(|| panic!("no name {s}"))
    }

    fn set(t: &NameTable, xs: &[&str]) -> BTreeSet<NameId> {
        xs.iter().map(|s| n(t, s)).collect()
    }

    #[test]
    fn ids_follow_text_order() {
        let (_, t) = fig2(Abstraction::Tba);
        let texts: Vec<_> = t.ids().map(|i| t.text(i).to_string()).collect();
        let mut sorted = texts.clone();
        sorted.sort();
        assert_eq!(texts, sorted);
        assert!(texts.contains(&"&z".to_string()));
        assert!(texts.contains(&"X.f".to_string()));
    }

    #[test]
    fn closure_examples() {
        let (_, t) = fig2(Abstraction::Tba);
        let [p, q, x, y, z] = ["p", "q", "x", "y", "z"].map(|s| n(&t, s));
        let a: AliasRel = [(p, q)].into_iter().collect();
        assert_eq!(
            alias_closure(&a, &BTreeSet::from([p])),
            BTreeSet::from([p, q])
        );
        let a: AliasRel = [(x, y), (y, z)].into_iter().collect();
        assert_eq!(
            alias_closure(&a, &BTreeSet::from([x])),
            BTreeSet::from([x, y, z])
        );
        assert_eq!(
            alias_closure(&AliasRel::new(), &BTreeSet::from([z])),
            BTreeSet::from([z])
        );
    }

    #[test]
    fn table_rows() {
        let (p, t) = fig2(Abstraction::Tba);
        let z = p.var_by_name("z").unwrap();
        let f = p.field_by_name("f").unwrap();
        let a: AliasRel = [(n(&t, "z"), n(&t, "&X"))].into_iter().collect();
        let got = abs_name(&p, &t, &AccessExpr::Arrow(z, f), &a, None).unwrap();
        assert_eq!(got, set(&t, &["X.f"]));
        let got = abs_name(&p, &t, &AccessExpr::Arrow(z, f), &AliasRel::new(), None).unwrap();
        assert!(got.is_empty());
        assert!(abs_name(&p, &t, &AccessExpr::Null, &a, None)
            .unwrap()
            .is_empty());
        let pv = p.var_by_name("p").unwrap();
        let a: AliasRel = [(n(&t, "p"), n(&t, "&z"))].into_iter().collect();
        assert_eq!(
            abs_name(&p, &t, &AccessExpr::Deref(pv), &a, None).unwrap(),
            set(&t, &["z"])
        );
        assert_eq!(
            abs_name(&p, &t, &AccessExpr::AddrOf(z), &a, None).unwrap(),
            set(&t, &["&z"])
        );

        let (p, t) = fig2(Abstraction::Asb);
        let (_, new) = p.node(p.node_by_label("n05").unwrap()).assign().unwrap();
        assert_eq!(
            abs_name(&p, &t, &new, &AliasRel::new(), None).unwrap(),
            set(&t, &["&n05"])
        );
    }

    #[test]
    fn object_store_filters_stack_objects() {
        let (p, t) = fig(include_str!("../../../fixtures/fig5.ir"), Abstraction::Tba);
        let f = p.field_by_name("f").unwrap();
        let [a1, a2] = ["a1", "a2"].map(|s| p.var_by_name(s).unwrap());
        let store = ObjectStore::from([ObjId::Var(a1)]);
        let none = AliasRel::new();
        let got = abs_name(&p, &t, &AccessExpr::Dot(a1, f), &none, Some(&store)).unwrap();
        assert_eq!(got, set(&t, &["A.f"]));
        assert!(
            abs_name(&p, &t, &AccessExpr::Dot(a2, f), &none, Some(&store))
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            abs_name(&p, &t, &AccessExpr::Dot(a2, f), &none, None).unwrap(),
            set(&t, &["A.f"])
        );
    }

    #[test]
    fn object_copy_is_rejected() {
        let text = "class X { }\nfunc main() { var a: X var y: X*\n n1: y = &a\n n2: a = *y }";
        let (p, t) = fig(text, Abstraction::Tba);
        let y = p.var_by_name("y").unwrap();
        let err = abs_name(&p, &t, &AccessExpr::Deref(y), &AliasRel::new(), None).unwrap_err();
        assert!(matches!(err, AbsError::UnsupportedExpr(_)));
    }

    #[test]
    fn restrict_examples() {
        let (_, t) = fig2(Abstraction::Tba);
        let ids: Vec<NameId> = t.ids().take(6).collect();
        let [d1, d2, a1, a2, a3, a4] = [ids[0], ids[1], ids[2], ids[3], ids[4], ids[5]];
        let ain: AliasRel = [(d1, a1), (d2, a2)].into_iter().collect();
        let aout: AliasRel = [(d1, a3), (d2, a4)].into_iter().collect();
        let (ri, ro) = restrict(&ain, &aout, &BTreeSet::from([d1]), &BTreeSet::from([d2]));
        assert_eq!(ri, BTreeSet::from([(d1, a1)]));
        assert_eq!(ro, BTreeSet::from([(d2, a4)]));
        let (ri, ro) = restrict(&ain, &aout, &BTreeSet::new(), &BTreeSet::new());
        assert!(ri.is_empty() && ro.is_empty());
        let [p, q, z] = ["p", "q", "&z"].map(|s| n(&t, s));
        let a: AliasRel = [(p, z), (q, z)].into_iter().collect();
        assert_eq!(
            restrict_one(&a, &BTreeSet::from([p, q])),
            BTreeSet::from([(p, z), (q, z)])
        );
    }

    #[test]
    fn declared_pointee_classes() {
        let (p, _) = fig2(Abstraction::Tba);
        let all: BTreeSet<_> = ["X", "Y", "Z"].map(|c| p.class_by_name(c).unwrap()).into();
        assert_eq!(declared_pointees(&p, "t").unwrap(), all);
        let text = "class X { }\nclass Y : X { }\nfunc main() { var y: Y* }";
        let q = parse_program(text).unwrap();
        assert_eq!(declared_pointees(&q, "y").unwrap().len(), 1);
        assert!(declared_pointees(&q, "nope").is_err());
    }

    #[test]
    fn edge_rendering_strips_address() {
        let (_, t) = fig2(Abstraction::Tba);
        assert_eq!(t.render_edge((n(&t, "X.f"), n(&t, "&Y"))), "X.f→Y");
        assert_eq!(
            t.render_set(&BTreeSet::from([n(&t, "z"), n(&t, "&z")])),
            "{&z, z}"
        );
        assert_eq!(t.render_set(&BTreeSet::new()), "∅");
    }
}
