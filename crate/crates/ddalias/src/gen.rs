//! Seeded random programs for property campaigns and benchmarks.
//!
//! Classes come in modules. Each module has a root with two pointer fields
//! and further classes that each extend an earlier class of the module,
//! and every class overrides a virtual `vfun`. A program body is a
//! sequence of regions, each standing for an inlined procedure: it uses
//! one module, its own local variables and one global pointer per module,
//! and its branches and loops stay inside it. With one region and one
//! module the whole body shares every variable.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{parse_program, ProgramIR};

/// Control flow of a generated entry function.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    StraightLine,
    /// Forward branches only.
    Acyclic,
    /// Forward branches and back edges.
    Looping,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub shape: Shape,
    /// Statements of the body, initialization included.
    pub statements: usize,
    /// Number of class modules, at least 1.
    pub modules: usize,
    /// Classes per module, at least 1.
    pub classes: usize,
    /// Highest pointer level, 1 or 2.
    pub max_level: u8,
    /// Pointer variables per region.
    pub pointer_vars: usize,
    /// Stack objects per region.
    pub object_vars: usize,
    /// Number of virtual calls, at least 1.
    pub vcalls: usize,
    /// Number of regions, at least 1.
    pub regions: usize,
    /// Whether each region starts by allocating an object for every
    /// local pointer.
    pub init_prefix: bool,
    /// Whether that prefix also points every double pointer at a pointer
    /// and fills every field of the stack objects.
    pub init_all: bool,
}

impl GenConfig {
    /// Small single-region programs for exhaustive checks.
    pub fn small(shape: Shape, statements: usize) -> Self {
        GenConfig {
            shape,
            statements,
            modules: 1,
            classes: 4,
            max_level: 2,
            pointer_vars: 4,
            object_vars: 2,
            vcalls: 1,
            regions: 1,
            init_prefix: false,
            init_all: false,
        }
    }

    /// Large programs made of 25-statement regions.
    pub fn large(statements: usize, vcalls: usize) -> Self {
        GenConfig {
            shape: Shape::Looping,
            statements,
            modules: 4,
            classes: 3,
            max_level: 2,
            pointer_vars: 4,
            object_vars: 1,
            vcalls,
            regions: (statements / 25).max(1),
            init_prefix: true,
            init_all: false,
        }
    }

    /// Straight-line programs that start by initializing every variable,
    /// so that most of them run without a null dereference.
    pub fn runnable(statements: usize) -> Self {
        GenConfig {
            pointer_vars: 3,
            object_vars: 1,
            init_prefix: true,
            init_all: true,
            ..GenConfig::small(Shape::StraightLine, statements)
        }
    }

    /// Large programs with a single region where every statement may
    /// touch every variable.
    pub fn dense(statements: usize, vcalls: usize) -> Self {
        GenConfig {
            shape: Shape::Looping,
            statements,
            modules: 1,
            classes: 4,
            max_level: 2,
            pointer_vars: statements / 8,
            object_vars: statements / 40 + 1,
            vcalls,
            regions: 1,
            init_prefix: false,
            init_all: false,
        }
    }
}

/// Names visible in one region.
struct Scope {
    ptrs: Vec<String>,
    dptrs: Vec<String>,
    objs: Vec<String>,
    classes: Vec<String>,
    fields: [String; 2],
}

struct Gen<'a> {
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn pick(&mut self, xs: &[String]) -> String {
        xs.choose(&mut self.rng).cloned().expect("non-empty")
    }

    fn class_name(&self, m: usize, k: usize) -> String {
        if self.cfg.modules == 1 {
            format!("C{k}")
        } else {
            format!("M{m}C{k}")
        }
    }

    fn fields(&self, m: usize) -> [String; 2] {
        if self.cfg.modules == 1 {
            ["f".into(), "g".into()]
        } else {
            [format!("f{m}"), format!("g{m}")]
        }
    }

    /// A pointer-valued right side of level 1.
    fn rhs1(&mut self, s: &Scope) -> String {
        loop {
            let out = match self.rng.random_range(0..10) {
                0..=2 => self.pick(&s.ptrs),
                3 if !s.dptrs.is_empty() => format!("*{}", self.pick(&s.dptrs)),
                4 | 5 => format!("{}->{}", self.pick(&s.ptrs), self.pick(&s.fields)),
                6 if !s.objs.is_empty() => {
                    format!("{}.{}", self.pick(&s.objs), self.pick(&s.fields))
                }
                7 if !s.objs.is_empty() => format!("&{}", self.pick(&s.objs)),
                8 | 9 => format!("new {}", self.pick(&s.classes)),
                _ => continue,
            };
            return out;
        }
    }

    fn statement(&mut self, s: &Scope) -> String {
        loop {
            let out = match self.rng.random_range(0..12) {
                0..=3 => format!("{} = {}", self.pick(&s.ptrs), self.rhs1(s)),
                4 | 5 => format!(
                    "{}->{} = {}",
                    self.pick(&s.ptrs),
                    self.pick(&s.fields),
                    self.rhs1(s)
                ),
                6 if !s.objs.is_empty() => format!(
                    "{}.{} = {}",
                    self.pick(&s.objs),
                    self.pick(&s.fields),
                    self.rhs1(s)
                ),
                7 if !s.dptrs.is_empty() => format!("*{} = {}", self.pick(&s.dptrs), self.rhs1(s)),
                8 if !s.dptrs.is_empty() => {
                    format!("{} = &{}", self.pick(&s.dptrs), self.pick(&s.ptrs))
                }
                9 if !s.dptrs.is_empty() => {
                    format!("{} = {}", self.pick(&s.dptrs), self.pick(&s.dptrs))
                }
                10 => format!("{} = null", self.pick(&s.ptrs)),
                11 => format!("{} = new {}", self.pick(&s.ptrs), self.pick(&s.classes)),
                _ => continue,
            };
            return out;
        }
    }

    fn program(&mut self) -> String {
        let c = self.cfg;
        let (modules, regions) = (c.modules.max(1), c.regions.max(1));
        let mut out = String::new();
        for m in 0..modules {
            let [f, g] = self.fields(m);
            writeln!(
                out,
                "class {} {{ field {f}, {g}: {}* }}",
                self.class_name(m, 0),
                self.class_name(m, 0)
            )
            .unwrap();
            for k in 1..c.classes.max(1) {
                let parent = self.rng.random_range(0..k);
                writeln!(
                    out,
                    "class {} : {} {{ }}",
                    self.class_name(m, k),
                    self.class_name(m, parent)
                )
                .unwrap();
            }
        }
        let all: Vec<String> = (0..modules)
            .flat_map(|m| (0..c.classes.max(1)).map(move |k| (m, k)))
            .map(|(m, k)| self.class_name(m, k))
            .collect();
        writeln!(out, "virtual vfun in {}", all.join(", ")).unwrap();
        out.push_str("\nfunc main() {\n");

        let prefix = |r: usize| {
            if regions == 1 {
                String::new()
            } else {
                format!("r{r}")
            }
        };
        let mut scopes = Vec::new();
        for r in 0..regions {
            let m = self.rng.random_range(0..modules);
            let root = self.class_name(m, 0);
            let mut s = Scope {
                ptrs: (0..c.pointer_vars.max(1))
                    .map(|k| format!("{}p{k}", prefix(r)))
                    .collect(),
                dptrs: Vec::new(),
                objs: (0..c.object_vars)
                    .map(|k| format!("{}o{k}", prefix(r)))
                    .collect(),
                classes: (0..c.classes.max(1))
                    .map(|k| self.class_name(m, k))
                    .collect(),
                fields: self.fields(m),
            };
            if c.max_level >= 2 {
                s.dptrs = (0..c.pointer_vars.max(1).div_ceil(2))
                    .map(|k| format!("{}q{k}", prefix(r)))
                    .collect();
            }
            for p in &s.ptrs {
                writeln!(out, "  var {p}: {root}*").unwrap();
            }
            for q in &s.dptrs {
                writeln!(out, "  var {q}: {root}**").unwrap();
            }
            for o in &s.objs {
                let cls = self.pick(&s.classes);
                writeln!(out, "  var {o}: {cls}").unwrap();
            }
            if regions > 1 {
                s.ptrs.push(format!("g{m}"));
            }
            scopes.push(s);
        }
        if regions > 1 {
            for m in 0..modules {
                writeln!(out, "  var g{m}: {}*", self.class_name(m, 0)).unwrap();
            }
        }

        let total = c.statements.max(regions);
        let mut call_regions = BTreeSet::new();
        let vcalls = c.vcalls.max(1).min(total);
        while call_regions.len() < vcalls.min(regions) {
            call_regions.insert(self.rng.random_range(0..regions));
        }
        let mut body: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        for (r, s) in scopes.iter().enumerate() {
            let len = total / regions + usize::from(r < total % regions);
            let begin = body.len();
            if c.init_prefix {
                for p in s.ptrs.iter().filter(|p| !p.starts_with('g')).take(len) {
                    let cls = self.pick(&s.classes);
                    body.push(format!("{p} = new {cls}"));
                }
            }
            if c.init_all {
                for (k, q) in s.dptrs.iter().enumerate() {
                    body.push(format!("{q} = &{}", s.ptrs[k % s.ptrs.len()]));
                }
                for o in &s.objs {
                    for f in &s.fields {
                        let p = self.pick(&s.ptrs);
                        body.push(format!("{o}.{f} = {p}"));
                    }
                }
            }
            let first = body.len();
            let free = (begin + len).saturating_sub(first);
            let mine = if regions == 1 {
                vcalls
            } else {
                usize::from(call_regions.contains(&r))
            };
            let mut calls = BTreeSet::new();
            while calls.len() < mine.min(free) {
                calls.insert(self.rng.random_range(0..free));
            }
            for i in 0..free {
                if calls.contains(&i) {
                    let p = self.pick(&s.ptrs);
                    body.push(format!("vcall {p}->vfun()"));
                } else {
                    body.push(self.statement(s));
                }
            }
            let end = body.len();
            if c.shape == Shape::StraightLine {
                continue;
            }
            for i in first..end.saturating_sub(1) {
                if self.rng.random_bool(0.2) {
                    let j = self.rng.random_range(i + 1..end);
                    edges.push((i, i + 1));
                    if j != i + 1 {
                        edges.push((i, j));
                    }
                } else if c.shape == Shape::Looping && i > first && self.rng.random_bool(0.05) {
                    let j = self.rng.random_range(first..i);
                    edges.push((i, i + 1));
                    edges.push((i, j));
                }
            }
        }
        for (i, s) in body.iter().enumerate() {
            writeln!(out, "  s{:03}: {s}", i + 1).unwrap();
        }
        if !edges.is_empty() {
            let text: Vec<String> = edges
                .iter()
                .map(|(a, b)| format!("s{:03}->s{:03}", a + 1, b + 1))
                .collect();
            writeln!(out, "  edges: {}", text.join(", ")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

/// Program text for `seed`.
pub fn generate_text(cfg: &GenConfig, seed: u64) -> String {
    Gen {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
    .program()
}

/// Parsed program for `seed`.
pub fn generate(cfg: &GenConfig, seed: u64) -> ProgramIR {
    parse_program(&generate_text(cfg, seed)).expect("generated programs are well formed")
}

/// The first program from the seeds derived from `seed` that `accept`
/// admits.
pub fn generate_where(
    cfg: &GenConfig,
    seed: u64,
    accept: impl Fn(&ProgramIR) -> bool,
) -> ProgramIR {
    (0u64..)
        .map(|k| generate(cfg, seed.wrapping_mul(1_000_003).wrapping_add(k)))
        .find(|p| accept(p))
        .expect("unbounded search")
}
