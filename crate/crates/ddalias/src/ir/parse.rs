//! Reader for the textual IR.
//!
//! Parsing happens in two steps. The token stream is first turned into a
//! name-based syntax tree; resolution then interns classes, fields,
//! variables and labels, type checks every statement, wires up the
//! control flow edges and validates the resulting graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::*;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 14] = [
    "::", "->", ":", "{", "}", "(", ")", ",", ";", "=", "*", "&", ".", "→",
];

fn lex(text: &str) -> Result<Vec<Token>, IrError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            }
            let (line_no, col) = (li + 1, i + 1);
            if c.is_alphanumeric() || c == '_' || c == '$' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    line: line_no,
                    col,
                });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = PUNCTS
                .iter()
                .find(|p| rest.starts_with(**p))
                .ok_or_else(|| IrError::Syntax {
                    line: line_no,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })?;
            i += p.chars().count();
            let p = if *p == "→" { "->" } else { *p };
            out.push(Token {
                tok: Tok::Punct(p),
                line: line_no,
                col,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct AstTy {
    class: String,
    stars: u8,
    line: usize,
}

#[derive(Clone, Debug)]
enum AstExpr {
    Var(String),
    Deref(String),
    Arrow(String, String),
    Dot(String, String),
    AddrOf(String),
    New(String),
    Null,
}

#[derive(Clone, Debug)]
enum AstBody {
    Assign(AstExpr, AstExpr),
    Return(String),
    VCall(String, String),
    Call(String, Vec<String>, Option<String>),
    FCall(String, Vec<String>, Vec<String>, Option<String>),
    Skip,
}

#[derive(Clone, Debug)]
struct AstStmt {
    label: String,
    line: usize,
    body: AstBody,
}

#[derive(Clone, Debug)]
struct AstClass {
    name: String,
    parent: Option<String>,
    fields: Vec<(String, AstTy)>,
    line: usize,
}

#[derive(Clone, Debug)]
struct AstFunc {
    name: String,
    params: Vec<(String, AstTy)>,
    ret: Option<AstTy>,
    vars: Vec<(String, AstTy)>,
    stmts: Vec<AstStmt>,
    edges: Vec<(String, String, usize)>,
    line: usize,
}

#[derive(Default)]
struct Ast {
    java: bool,
    entry: Option<String>,
    classes: Vec<AstClass>,
    virtuals: Vec<(String, Vec<String>, usize)>,
    funcs: Vec<AstFunc>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, IrError> {
        let (line, col) = match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self
                .toks
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1)),
        };
        Err(IrError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), IrError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), IrError> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> Result<String, IrError> {
        match self.peek() {
            Some(Tok::Ident(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err("expected identifier"),
        }
    }

    /// `name` or `Class::name`.
    fn qualified(&mut self) -> Result<String, IrError> {
        let mut s = self.ident()?;
        if self.eat_punct("::") {
            s.push_str("::");
            s.push_str(&self.ident()?);
        }
        Ok(s)
    }

    fn ty(&mut self) -> Result<AstTy, IrError> {
        let line = self.line();
        let class = self.ident()?;
        let mut stars = 0u8;
        while self.eat_punct("*") {
            stars += 1;
        }
        Ok(AstTy { class, stars, line })
    }

    fn skip_separators(&mut self) {
        while self.eat_punct(",") || self.eat_punct(";") {}
    }

    fn program(&mut self) -> Result<Ast, IrError> {
        let mut ast = Ast::default();
        while self.peek().is_some() {
            if self.is_kw("lang") {
                self.pos += 1;
                let l = self.ident()?;
                match l.as_str() {
                    "java" => ast.java = true,
                    "c" | "cpp" => ast.java = false,
                    _ => return self.err(format!("unknown language `{l}`")),
                }
            } else if self.is_kw("entry") {
                self.pos += 1;
                ast.entry = Some(self.qualified()?);
            } else if self.is_kw("class") {
                ast.classes.push(self.class()?);
            } else if self.is_kw("virtual") {
                let line = self.line();
                self.pos += 1;
                let m = self.ident()?;
                self.expect_kw("in")?;
                let mut cs = vec![self.ident()?];
                while self.eat_punct(",") {
                    cs.push(self.ident()?);
                }
                ast.virtuals.push((m, cs, line));
            } else if self.is_kw("func") {
                ast.funcs.push(self.func()?);
            } else {
                return self.err("expected `class`, `virtual`, `func`, `lang` or `entry`");
            }
            self.skip_separators();
        }
        Ok(ast)
    }

    fn class(&mut self) -> Result<AstClass, IrError> {
        let line = self.line();
        self.expect_kw("class")?;
        let name = self.ident()?;
        let parent = if self.eat_punct(":") {
            Some(self.ident()?)
        } else {
            None
        };
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        loop {
            self.skip_separators();
            if self.eat_punct("}") {
                break;
            }
            self.expect_kw("field")?;
            let mut names = vec![self.ident()?];
            while self.eat_punct(",") {
                names.push(self.ident()?);
            }
            self.expect_punct(":")?;
            let t = self.ty()?;
            fields.extend(names.into_iter().map(|n| (n, t.clone())));
        }
        Ok(AstClass {
            name,
            parent,
            fields,
            line,
        })
    }

    fn func(&mut self) -> Result<AstFunc, IrError> {
        let line = self.line();
        self.expect_kw("func")?;
        let name = self.qualified()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let n = self.ident()?;
                self.expect_punct(":")?;
                params.push((n, self.ty()?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let ret = if self.eat_punct("->") {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect_punct("{")?;
        let mut f = AstFunc {
            name,
            params,
            ret,
            vars: Vec::new(),
            stmts: Vec::new(),
            edges: Vec::new(),
            line,
        };
        loop {
            self.skip_separators();
            if self.eat_punct("}") {
                break;
            }
            if self.peek().is_none() {
                return self.err("unterminated function body");
            }
            if self.is_kw("var") {
                self.pos += 1;
                let mut names = vec![self.ident()?];
                while self.eat_punct(",") {
                    names.push(self.ident()?);
                }
                self.expect_punct(":")?;
                let t = self.ty()?;
                f.vars.extend(names.into_iter().map(|n| (n, t.clone())));
            } else if self.is_kw("edges") && matches!(self.peek_at(1), Some(Tok::Punct(":"))) {
                self.pos += 2;
                loop {
                    let line = self.line();
                    let a = self.ident()?;
                    self.expect_punct("->")?;
                    let b = self.ident()?;
                    f.edges.push((a, b, line));
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            } else {
                f.stmts.push(self.stmt()?);
            }
        }
        Ok(f)
    }

    fn args(&mut self) -> Result<Vec<String>, IrError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(")") {
            loop {
                out.push(self.ident()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn stmt(&mut self) -> Result<AstStmt, IrError> {
        let line = self.line();
        let label = self.ident()?;
        self.expect_punct(":")?;
        let body = if self.is_kw("skip") {
            self.pos += 1;
            AstBody::Skip
        } else if self.is_kw("return") {
            self.pos += 1;
            AstBody::Return(self.ident()?)
        } else if self.is_kw("vcall") {
            self.pos += 1;
            let r = self.ident()?;
            if !(self.eat_punct("->") || self.eat_punct(".")) {
                return self.err("expected `->` or `.` after the receiver");
            }
            let m = self.ident()?;
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            AstBody::VCall(r, m)
        } else if self.is_kw("call") && !matches!(self.peek_at(1), Some(Tok::Punct(_))) {
            self.pos += 1;
            let f = self.qualified()?;
            let args = self.args()?;
            let ret = if self.eat_punct("->") {
                Some(self.ident()?)
            } else {
                None
            };
            AstBody::Call(f, args, ret)
        } else if self.is_kw("fcall") && !matches!(self.peek_at(1), Some(Tok::Punct(_))) {
            self.pos += 1;
            let fp = self.ident()?;
            let args = self.args()?;
            self.expect_kw("targets")?;
            self.expect_punct("{")?;
            let mut targets = Vec::new();
            if !self.is_punct("}") {
                loop {
                    targets.push(self.qualified()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("}")?;
            let ret = if self.eat_punct("->") {
                Some(self.ident()?)
            } else {
                None
            };
            AstBody::FCall(fp, args, targets, ret)
        } else {
            let lhs = self.expr()?;
            self.expect_punct("=")?;
            let rhs = self.expr()?;
            AstBody::Assign(lhs, rhs)
        };
        Ok(AstStmt { label, line, body })
    }

    fn expr(&mut self) -> Result<AstExpr, IrError> {
        if self.eat_punct("&") {
            return Ok(AstExpr::AddrOf(self.ident()?));
        }
        if self.eat_punct("*") {
            return Ok(AstExpr::Deref(self.ident()?));
        }
        if self.is_kw("new") && matches!(self.peek_at(1), Some(Tok::Ident(_))) {
            self.pos += 1;
            return Ok(AstExpr::New(self.ident()?));
        }
        if self.is_kw("null") {
            self.pos += 1;
            return Ok(AstExpr::Null);
        }
        let x = self.ident()?;
        if self.eat_punct("->") {
            return Ok(AstExpr::Arrow(x, self.ident()?));
        }
        if self.eat_punct(".") {
            return Ok(AstExpr::Dot(x, self.ident()?));
        }
        Ok(AstExpr::Var(x))
    }
}

/// Parses and validates a program in the textual IR format.
pub fn parse_program(text: &str) -> Result<ProgramIR, IrError> {
    let toks = lex(text)?;
    let ast = Parser { toks, pos: 0 }.program()?;
    Resolver::default().resolve(ast)
}

#[derive(Default)]
struct Resolver {
    classes: Vec<ClassDecl>,
    class_ix: HashMap<String, ClassId>,
    fields: Vec<String>,
    field_ix: HashMap<String, FieldId>,
    vars: Vec<VarDecl>,
    sites: Vec<Site>,
    nodes: Vec<Statement>,
    java: bool,
}

const RET_SLOT: &str = "$ret";

impl Resolver {
    fn class_id(&self, name: &str, line: usize) -> Result<ClassId, IrError> {
        self.class_ix
            .get(name)
            .copied()
            .ok_or_else(|| IrError::UndeclaredClass {
                name: name.into(),
                line,
            })
    }

    fn field_id(&mut self, name: &str) -> FieldId {
        if let Some(&f) = self.field_ix.get(name) {
            return f;
        }
        let f = FieldId(self.fields.len() as u32);
        self.fields.push(name.to_string());
        self.field_ix.insert(name.to_string(), f);
        f
    }

    fn ty(&self, t: &AstTy) -> Result<Ty, IrError> {
        let class = self.class_id(&t.class, t.line)?;
        let level = if self.java { t.stars + 1 } else { t.stars };
        Ok(Ty { class, level })
    }

    fn resolve(mut self, ast: Ast) -> Result<ProgramIR, IrError> {
        self.java = ast.java;
        for c in &ast.classes {
            if self.class_ix.contains_key(&c.name) {
                return Err(IrError::Duplicate(c.name.clone()));
            }
            self.class_ix
                .insert(c.name.clone(), ClassId(self.classes.len() as u32));
            self.classes.push(ClassDecl {
                name: c.name.clone(),
                parent: None,
                fields: Vec::new(),
                virtuals: BTreeSet::new(),
            });
        }
        for (i, c) in ast.classes.iter().enumerate() {
            if let Some(p) = &c.parent {
                self.classes[i].parent = Some(self.class_id(p, c.line)?);
            }
        }
        for (i, c) in ast.classes.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(ClassId(i as u32));
            while let Some(k) = cur {
                if !seen.insert(k) {
                    return Err(IrError::CyclicHierarchy(c.name.clone()));
                }
                cur = self.classes[k.index()].parent;
            }
        }
        for (i, c) in ast.classes.iter().enumerate() {
            for (fname, t) in &c.fields {
                let f = self.field_id(fname);
                let ty = self.ty(t)?;
                if ty.level == 0 {
                    return Err(IrError::MalformedStatement {
                        label: format!("class {}", c.name),
                        msg: format!("field `{fname}` must have a pointer type"),
                    });
                }
                if self.classes[i].fields.iter().any(|(g, _)| *g == f) {
                    return Err(IrError::Duplicate(format!("{}.{}", c.name, fname)));
                }
                self.classes[i].fields.push((f, ty));
            }
        }
        for (m, cs, line) in &ast.virtuals {
            for c in cs {
                let id = self.class_id(c, *line)?;
                self.classes[id.index()].virtuals.insert(m.clone());
            }
        }
        if ast.funcs.is_empty() {
            return Err(IrError::MalformedCfg {
                func: "<program>".into(),
                msg: "no functions".into(),
            });
        }
        let mut func_ix: HashMap<String, FuncId> = HashMap::new();
        for (i, f) in ast.funcs.iter().enumerate() {
            if func_ix.insert(f.name.clone(), FuncId(i as u32)).is_some() {
                return Err(IrError::Duplicate(f.name.clone()));
            }
        }
        let entry = match &ast.entry {
            Some(e) => *func_ix.get(e).ok_or_else(|| IrError::UnknownCallee {
                name: e.clone(),
                label: "entry".into(),
            })?,
            None => func_ix.get("main").copied().unwrap_or(FuncId(0)),
        };

        // Variables of every function come first so calls can refer to the
        // formals of functions defined later in the file.
        let mut scopes: Vec<HashMap<String, VarId>> = Vec::new();
        let mut params: Vec<Vec<VarId>> = Vec::new();
        let mut rets: Vec<Option<VarId>> = Vec::new();
        for (i, f) in ast.funcs.iter().enumerate() {
            let fid = FuncId(i as u32);
            let mut scope = HashMap::new();
            let mut ps = Vec::new();
            for (n, t) in &f.params {
                ps.push(self.declare(&mut scope, fid, n, t, &f.name)?);
            }
            let ret = match &f.ret {
                Some(t) => Some(self.declare(&mut scope, fid, RET_SLOT, t, &f.name)?),
                None => None,
            };
            for (n, t) in &f.vars {
                self.declare(&mut scope, fid, n, t, &f.name)?;
            }
            scopes.push(scope);
            params.push(ps);
            rets.push(ret);
        }

        let mut labels: BTreeSet<String> = BTreeSet::new();
        let mut functions = Vec::new();
        for (i, f) in ast.funcs.iter().enumerate() {
            let fid = FuncId(i as u32);
            let qual = |s: &str| {
                if fid == entry {
                    s.to_string()
                } else {
                    format!("{}::{}", f.name, s)
                }
            };
            let start = self.push_node(qual("start"), fid, StmtKind::Skip);
            let mut body = Vec::new();
            let mut by_label: HashMap<String, NodeId> = HashMap::new();
            by_label.insert("start".into(), start);
            for s in &f.stmts {
                if s.label == "start" || s.label == "end" || !labels.insert(s.label.clone()) {
                    return Err(IrError::Duplicate(s.label.clone()));
                }
                let id = NodeId(self.nodes.len() as u32);
                let kind = self.stmt(s, id, &scopes[i], &func_ix, &params, &rets, rets[i])?;
                self.push_node(s.label.clone(), fid, kind);
                by_label.insert(s.label.clone(), id);
                body.push(id);
            }
            let end = self.push_node(qual("end"), fid, StmtKind::Skip);
            by_label.insert("end".into(), end);
            let mut nodes = vec![start];
            nodes.extend(&body);
            nodes.push(end);

            let mut explicit: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
            for (a, b, line) in &f.edges {
                let look = |l: &String| {
                    by_label
                        .get(l)
                        .copied()
                        .ok_or_else(|| IrError::MalformedCfg {
                            func: f.name.clone(),
                            msg: format!("line {line}: unknown label `{l}` in edges"),
                        })
                };
                let (na, nb) = (look(a)?, look(b)?);
                if na == end || nb == start {
                    return Err(IrError::MalformedCfg {
                        func: f.name.clone(),
                        msg: format!("line {line}: edge {a}->{b} leaves end or enters start"),
                    });
                }
                explicit.entry(na).or_default().push(nb);
            }
            let mut edges = BTreeSet::new();
            for (k, &n) in nodes.iter().enumerate() {
                if n == end {
                    continue;
                }
                match explicit.get(&n) {
                    Some(ss) => edges.extend(ss.iter().map(|&s| (n, s))),
                    None => {
                        edges.insert((n, nodes[k + 1]));
                    }
                }
            }
            let cfg = Cfg {
                name: f.name.clone(),
                params: params[i].clone(),
                ret: rets[i],
                start,
                end,
                nodes,
                edges: edges.into_iter().collect(),
            };
            validate_cfg(&cfg)?;
            functions.push(cfg);
        }

        let origin = self
            .nodes
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::VirtualCall { .. }))
            .map(|s| s.id)
            .collect();
        let addr_taken = self
            .nodes
            .iter()
            .filter_map(|s| match s.kind {
                StmtKind::Assign {
                    rhs: AccessExpr::AddrOf(x),
                    ..
                } => Some(x),
                _ => None,
            })
            .collect();
        let _ = ast.funcs.iter().map(|f| f.line);
        Ok(ProgramIR {
            java: self.java,
            classes: self.classes,
            fields: self.fields,
            vars: self.vars,
            sites: self.sites,
            nodes: self.nodes,
            functions,
            entry,
            origin,
            addr_taken,
        })
    }

    fn declare(
        &mut self,
        scope: &mut HashMap<String, VarId>,
        func: FuncId,
        name: &str,
        t: &AstTy,
        fname: &str,
    ) -> Result<VarId, IrError> {
        if scope.contains_key(name) {
            return Err(IrError::Duplicate(format!("{fname}::{name}")));
        }
        let ty = self.ty(t)?;
        let v = VarId(self.vars.len() as u32);
        self.vars.push(VarDecl {
            name: name.to_string(),
            func,
            ty,
        });
        scope.insert(name.to_string(), v);
        Ok(v)
    }

    fn push_node(&mut self, label: String, func: FuncId, kind: StmtKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Statement {
            id,
            label,
            func,
            kind,
        });
        id
    }

    #[allow(clippy::too_many_arguments)]
    fn stmt(
        &mut self,
        s: &AstStmt,
        id: NodeId,
        scope: &HashMap<String, VarId>,
        funcs: &HashMap<String, FuncId>,
        params: &[Vec<VarId>],
        rets: &[Option<VarId>],
        own_ret: Option<VarId>,
    ) -> Result<StmtKind, IrError> {
        let var = |n: &str| {
            if n == RET_SLOT {
                return Err(IrError::UndeclaredVariable {
                    name: n.into(),
                    line: s.line,
                });
            }
            scope
                .get(n)
                .copied()
                .ok_or_else(|| IrError::UndeclaredVariable {
                    name: n.into(),
                    line: s.line,
                })
        };
        let bad = |msg: String| IrError::MalformedStatement {
            label: s.label.clone(),
            msg,
        };
        match &s.body {
            AstBody::Skip => Ok(StmtKind::Skip),
            AstBody::Return(y) => {
                let r = own_ret
                    .ok_or_else(|| bad("`return` in a function without a return type".into()))?;
                let (lhs, rhs) = (AccessExpr::Var(r), AccessExpr::Var(var(y)?));
                self.check_assign(&lhs, &rhs).map_err(bad)?;
                Ok(StmtKind::Assign { lhs, rhs })
            }
            AstBody::Assign(l, r) => {
                let lhs = self.expr(l, scope, s, id)?;
                let rhs = self.expr(r, scope, s, id)?;
                if !lhs.is_lvalue() {
                    return Err(bad(format!(
                        "{} not permitted on the left-hand side",
                        lhs.kind()
                    )));
                }
                self.check_assign(&lhs, &rhs).map_err(bad)?;
                Ok(StmtKind::Assign { lhs, rhs })
            }
            AstBody::VCall(r, m) => {
                let receiver = var(r)?;
                let t = self.vars[receiver.index()].ty;
                if t.level != 1 {
                    return Err(bad(format!("receiver `{r}` is not a pointer to an object")));
                }
                let defined = {
                    let mut cur = Some(t.class);
                    let mut found = false;
                    while let Some(c) = cur {
                        found |= self.classes[c.index()].virtuals.contains(m);
                        cur = self.classes[c.index()].parent;
                    }
                    found
                };
                if !defined {
                    return Err(bad(format!("method `{m}` is not declared for `{r}`")));
                }
                Ok(StmtKind::VirtualCall {
                    receiver,
                    method: m.clone(),
                })
            }
            AstBody::Call(f, args, ret) => {
                let callee = *funcs.get(f).ok_or_else(|| IrError::UnknownCallee {
                    name: f.clone(),
                    label: s.label.clone(),
                })?;
                let (args, ret) = self
                    .call_parts(args, ret, &[callee], &var, params, rets)
                    .map_err(bad)?;
                Ok(StmtKind::DirectCall { callee, args, ret })
            }
            AstBody::FCall(fp, args, targets, ret) => {
                let fp = var(fp)?;
                if targets.is_empty() {
                    return Err(bad("indirect call without targets".into()));
                }
                let mut ts = Vec::new();
                for t in targets {
                    ts.push(*funcs.get(t).ok_or_else(|| IrError::UnknownCallee {
                        name: t.clone(),
                        label: s.label.clone(),
                    })?);
                }
                let (args, ret) = self
                    .call_parts(args, ret, &ts, &var, params, rets)
                    .map_err(bad)?;
                Ok(StmtKind::IndirectCall {
                    fp,
                    targets: ts,
                    args,
                    ret,
                })
            }
        }
    }

    fn call_parts(
        &self,
        args: &[String],
        ret: &Option<String>,
        callees: &[FuncId],
        var: &dyn Fn(&str) -> Result<VarId, IrError>,
        params: &[Vec<VarId>],
        rets: &[Option<VarId>],
    ) -> Result<(Vec<VarId>, Option<VarId>), String> {
        let mut avs = Vec::new();
        for a in args {
            avs.push(var(a).map_err(|e| e.to_string())?);
        }
        let rv = match ret {
            Some(r) => Some(var(r).map_err(|e| e.to_string())?),
            None => None,
        };
        for &c in callees {
            let ps = &params[c.index()];
            if ps.len() != avs.len() {
                return Err(format!(
                    "expected {} arguments, found {}",
                    ps.len(),
                    avs.len()
                ));
            }
            for (&p, &a) in ps.iter().zip(&avs) {
                self.check_assign(&AccessExpr::Var(p), &AccessExpr::Var(a))?;
            }
            if let Some(r) = rv {
                let slot = rets[c.index()].ok_or("callee has no return value")?;
                self.check_assign(&AccessExpr::Var(r), &AccessExpr::Var(slot))?;
            }
        }
        Ok((avs, rv))
    }

    fn expr(
        &mut self,
        e: &AstExpr,
        scope: &HashMap<String, VarId>,
        s: &AstStmt,
        id: NodeId,
    ) -> Result<AccessExpr, IrError> {
        let var = |n: &str| {
            scope
                .get(n)
                .copied()
                .ok_or_else(|| IrError::UndeclaredVariable {
                    name: n.into(),
                    line: s.line,
                })
        };
        let bad = |msg: String| IrError::MalformedStatement {
            label: s.label.clone(),
            msg,
        };
        let field = |this: &mut Self, x: VarId, f: &str| -> Result<FieldId, IrError> {
            let c = this.vars[x.index()].ty.class;
            let fid = this.field_ix.get(f).copied();
            let has = fid.is_some_and(|fid| {
                let mut cur = Some(c);
                let mut found = false;
                while let Some(k) = cur {
                    found |= this.classes[k.index()]
                        .fields
                        .iter()
                        .any(|(g, _)| *g == fid);
                    cur = this.classes[k.index()].parent;
                }
                found
            });
            if has {
                Ok(fid.unwrap())
            } else {
                Err(IrError::UndeclaredField {
                    name: f.into(),
                    line: s.line,
                })
            }
        };
        let java_forbidden = |what: &str| bad(format!("{what} not permitted in a java program"));
        Ok(match e {
            AstExpr::Var(x) => AccessExpr::Var(var(x)?),
            AstExpr::Deref(x) => {
                if self.java {
                    return Err(java_forbidden("dereference"));
                }
                let v = var(x)?;
                if self.vars[v.index()].ty.level == 0 {
                    return Err(bad(format!("`*{x}` dereferences a non-pointer")));
                }
                AccessExpr::Deref(v)
            }
            AstExpr::Arrow(x, f) => {
                if self.java {
                    return Err(java_forbidden("`->`"));
                }
                let v = var(x)?;
                if self.vars[v.index()].ty.level != 1 {
                    return Err(bad(format!("`{x}->{f}` needs a pointer to an object")));
                }
                AccessExpr::Arrow(v, field(self, v, f)?)
            }
            AstExpr::Dot(x, f) => {
                let v = var(x)?;
                let want = if self.java { 1 } else { 0 };
                if self.vars[v.index()].ty.level != want {
                    return Err(bad(format!("`{x}.{f}` needs an object")));
                }
                AccessExpr::Dot(v, field(self, v, f)?)
            }
            AstExpr::AddrOf(x) => {
                if self.java {
                    return Err(java_forbidden("address-of"));
                }
                AccessExpr::AddrOf(var(x)?)
            }
            AstExpr::New(c) => {
                let class = self.class_id(c, s.line)?;
                let site = SiteId(self.sites.len() as u32);
                self.sites.push(Site {
                    label: s.label.clone(),
                    class,
                    node: id,
                });
                AccessExpr::New(class, site)
            }
            AstExpr::Null => AccessExpr::Null,
        })
    }

    fn lookup_ty(&self, e: &AccessExpr) -> Option<Ty> {
        let var_ty = |x: VarId| self.vars[x.index()].ty;
        let field_ty = |c: ClassId, f: FieldId| {
            let mut cur = Some(c);
            while let Some(k) = cur {
                if let Some((_, t)) = self.classes[k.index()].fields.iter().find(|(g, _)| *g == f) {
                    return Some(*t);
                }
                cur = self.classes[k.index()].parent;
            }
            None
        };
        match *e {
            AccessExpr::Var(x) => Some(var_ty(x)),
            AccessExpr::Deref(x) => {
                let t = var_ty(x);
                (t.level >= 1).then(|| Ty {
                    class: t.class,
                    level: t.level - 1,
                })
            }
            AccessExpr::Arrow(x, f) | AccessExpr::Dot(x, f) => field_ty(var_ty(x).class, f),
            AccessExpr::AddrOf(x) => {
                let t = var_ty(x);
                Some(Ty {
                    class: t.class,
                    level: t.level + 1,
                })
            }
            AccessExpr::New(c, _) => Some(Ty { class: c, level: 1 }),
            AccessExpr::Null => None,
        }
    }

    fn is_subclass(&self, sub: ClassId, sup: ClassId) -> bool {
        let mut cur = Some(sub);
        while let Some(k) = cur {
            if k == sup {
                return true;
            }
            cur = self.classes[k.index()].parent;
        }
        false
    }

    fn check_assign(&self, lhs: &AccessExpr, rhs: &AccessExpr) -> Result<(), String> {
        let lt = self.lookup_ty(lhs).ok_or("ill-typed left-hand side")?;
        if matches!(rhs, AccessExpr::Null) {
            return if lt.level >= 1 {
                Ok(())
            } else {
                Err("null assigned to an object".into())
            };
        }
        let rt = self.lookup_ty(rhs).ok_or("ill-typed right-hand side")?;
        if lt.level != rt.level {
            return Err(format!(
                "pointer level mismatch ({} vs {})",
                lt.level, rt.level
            ));
        }
        if lt.level == 0 && !matches!(rhs, AccessExpr::Deref(_)) {
            return Err("object copy is only expressible as `a = *y`".into());
        }
        if !self.is_subclass(rt.class, lt.class) {
            return Err(format!(
                "`{}` is not a subclass of `{}`",
                self.classes[rt.class.index()].name,
                self.classes[lt.class.index()].name
            ));
        }
        Ok(())
    }
}

fn validate_cfg(cfg: &Cfg) -> Result<(), IrError> {
    let walk = |from: NodeId, fwd: bool| {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            let next: Vec<NodeId> = if fwd {
                cfg.succs(n).collect()
            } else {
                cfg.preds(n).collect()
            };
            for m in next {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen
    };
    let reach = walk(cfg.start, true);
    let coreach = walk(cfg.end, false);
    for &n in &cfg.nodes {
        if !reach.contains(&n) {
            return Err(IrError::MalformedCfg {
                func: cfg.name.clone(),
                msg: format!("node {} is unreachable", n.0),
            });
        }
        if !coreach.contains(&n) {
            return Err(IrError::MalformedCfg {
                func: cfg.name.clone(),
                msg: format!("node {} cannot reach end", n.0),
            });
        }
    }
    Ok(())
}
