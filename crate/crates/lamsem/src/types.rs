//! Simply-typed lambda-calculus with equi-recursive types, realized as
//! rational trees: a union-find term graph unified without an occurs check,
//! so self-applications receive cyclic arrow types instead of being
//! rejected. Type equality is bisimilarity of the unfolded trees, decided
//! over the product graph.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::smallstep::{step, StepOutcome};
use crate::syntax::Term;

/// Node label in the type graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeNode {
    Int,
    Arrow(usize, usize),
    Var(u32),
}

/// A frozen, rooted type graph. Cycles represent equi-recursive types;
/// every node is reachable from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGraph {
    nodes: Vec<TypeNode>,
    root: usize,
}

impl TypeGraph {
    pub fn new(nodes: Vec<TypeNode>, root: usize) -> TypeGraph {
        assert!(root < nodes.len());
        TypeGraph { nodes, root }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &TypeNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// True iff the rational trees unfolded from the two graphs are bisimilar.
/// Type variables are compared by identifier.
pub fn type_equal(g1: &TypeGraph, g2: &TypeGraph) -> bool {
    bisimilar(g1, g2, &mut |a, b| a == b)
}

/// Bisimilarity up to a consistent renaming of type variables; used to
/// compare principal types inferred by separate runs.
pub fn shape_equal(g1: &TypeGraph, g2: &TypeGraph) -> bool {
    let mut fwd: HashMap<u32, u32> = HashMap::new();
    let mut bwd: HashMap<u32, u32> = HashMap::new();
    bisimilar(g1, g2, &mut move |a, b| {
        *fwd.entry(a).or_insert(b) == b && *bwd.entry(b).or_insert(a) == a
    })
}

fn bisimilar(g1: &TypeGraph, g2: &TypeGraph, var_eq: &mut impl FnMut(u32, u32) -> bool) -> bool {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut work = vec![(g1.root, g2.root)];
    while let Some((a, b)) = work.pop() {
        if !seen.insert((a, b)) {
            continue;
        }
        match (g1.node(a), g2.node(b)) {
            (TypeNode::Int, TypeNode::Int) => {}
            (TypeNode::Var(x), TypeNode::Var(y)) => {
                if !var_eq(*x, *y) {
                    return false;
                }
            }
            (TypeNode::Arrow(d1, c1), TypeNode::Arrow(d2, c2)) => {
                work.push((*d1, *d2));
                work.push((*c1, *c2));
            }
            _ => return false,
        }
    }
    true
}

/// True iff `specific` is obtainable from `general` by substituting
/// rational trees for the latter's type variables; the variables of
/// `specific` are treated as rigid. Decided by matching over the product
/// graph.
pub fn instance_of(specific: &TypeGraph, general: &TypeGraph) -> bool {
    let mut binding: HashMap<u32, usize> = HashMap::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut work = vec![(general.root, specific.root)];
    while let Some((g, s)) = work.pop() {
        if !seen.insert((g, s)) {
            continue;
        }
        match (general.node(g), specific.node(s)) {
            (TypeNode::Var(v), _) => match binding.get(v) {
                Some(prev) => {
                    if !same_subtree(specific, *prev, s) {
                        return false;
                    }
                }
                None => {
                    binding.insert(*v, s);
                }
            },
            (TypeNode::Int, TypeNode::Int) => {}
            (TypeNode::Arrow(d1, c1), TypeNode::Arrow(d2, c2)) => {
                work.push((*d1, *d2));
                work.push((*c1, *c2));
            }
            _ => return false,
        }
    }
    true
}

/// Bisimilarity of two nodes of the same graph.
fn same_subtree(g: &TypeGraph, a: usize, b: usize) -> bool {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut work = vec![(a, b)];
    while let Some((a, b)) = work.pop() {
        if a == b || !seen.insert((a, b)) {
            continue;
        }
        match (g.node(a), g.node(b)) {
            (TypeNode::Int, TypeNode::Int) => {}
            (TypeNode::Var(x), TypeNode::Var(y)) => {
                if x != y {
                    return false;
                }
            }
            (TypeNode::Arrow(d1, c1), TypeNode::Arrow(d2, c2)) => {
                work.push((*d1, *d2));
                work.push((*c1, *c2));
            }
            _ => return false,
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Unification state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("constructor clash: `{left}` vs `{right}`")]
pub struct Clash {
    pub left: String,
    pub right: String,
}

/// Mutable term graph under construction: a union-find forest of labelled
/// nodes supporting rational-tree unification (no occurs check, so cyclic
/// solutions are created rather than rejected).
#[derive(Debug, Default)]
pub struct UnificationState {
    parent: Vec<usize>,
    label: Vec<TypeNode>,
    next_var: u32,
}

impl UnificationState {
    pub fn new() -> UnificationState {
        UnificationState::default()
    }

    fn alloc(&mut self, label: TypeNode) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.label.push(label);
        id
    }

    pub fn fresh_var(&mut self) -> usize {
        let v = self.next_var;
        self.next_var += 1;
        self.alloc(TypeNode::Var(v))
    }

    pub fn int(&mut self) -> usize {
        self.alloc(TypeNode::Int)
    }

    pub fn arrow(&mut self, dom: usize, cod: usize) -> usize {
        self.alloc(TypeNode::Arrow(dom, cod))
    }

    pub fn find(&mut self, mut n: usize) -> usize {
        while self.parent[n] != n {
            self.parent[n] = self.parent[self.parent[n]];
            n = self.parent[n];
        }
        n
    }

    /// Most general unifier over rational trees. Arrow nodes are merged
    /// before their children are unified, which makes unification of cyclic
    /// structures terminate.
    pub fn unify(&mut self, a: usize, b: usize) -> Result<(), Clash> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return Ok(());
        }
        match (self.label[ra].clone(), self.label[rb].clone()) {
            (TypeNode::Var(_), _) => {
                self.parent[ra] = rb;
                Ok(())
            }
            (_, TypeNode::Var(_)) => {
                self.parent[rb] = ra;
                Ok(())
            }
            (TypeNode::Int, TypeNode::Int) => {
                self.parent[ra] = rb;
                Ok(())
            }
            (TypeNode::Arrow(d1, c1), TypeNode::Arrow(d2, c2)) => {
                self.parent[ra] = rb;
                self.unify(d1, d2)?;
                self.unify(c1, c2)
            }
            (l, r) => Err(Clash {
                left: describe(&l),
                right: describe(&r),
            }),
        }
    }

    /// Freeze the class of `root` into an immutable graph containing
    /// exactly the reachable representatives.
    pub fn freeze(&mut self, root: usize) -> TypeGraph {
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut nodes: Vec<TypeNode> = Vec::new();
        let r = self.find(root);
        let mut work = vec![r];
        index.insert(r, 0);
        nodes.push(TypeNode::Int); // placeholder
        while let Some(n) = work.pop() {
            let slot = index[&n];
            let label = match self.label[n].clone() {
                TypeNode::Int => TypeNode::Int,
                TypeNode::Var(v) => TypeNode::Var(v),
                TypeNode::Arrow(d, c) => {
                    let rd = self.find(d);
                    let rc = self.find(c);
                    let id = *index.entry(rd).or_insert_with(|| {
                        nodes.push(TypeNode::Int);
                        work.push(rd);
                        nodes.len() - 1
                    });
                    let ic = *index.entry(rc).or_insert_with(|| {
                        nodes.push(TypeNode::Int);
                        work.push(rc);
                        nodes.len() - 1
                    });
                    TypeNode::Arrow(id, ic)
                }
            };
            nodes[slot] = label;
        }
        TypeGraph { nodes, root: 0 }
    }
}

fn describe(l: &TypeNode) -> String {
    match l {
        TypeNode::Int => "int".into(),
        TypeNode::Arrow(_, _) => "_ -> _".into(),
        TypeNode::Var(v) => format!("'{v}"),
    }
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Typing environment for open terms: names bound to frozen type graphs.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    entries: Vec<(String, TypeGraph)>,
}

impl TypeEnv {
    pub fn empty() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn bind(mut self, name: impl Into<String>, ty: TypeGraph) -> TypeEnv {
        self.entries.push((name.into(), ty));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IllTyped {
    #[error("ill-typed at `{at}`: cannot unify `{left}` with `{right}`")]
    Clash {
        at: String,
        left: String,
        right: String,
    },
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

/// Principal type inference under rational-tree unification. Constants get
/// `int`; abstraction and application follow the simply-typed rules.
pub fn infer(env: &TypeEnv, t: &Term) -> Result<TypeGraph, IllTyped> {
    let mut st = UnificationState::new();
    let mut scope: Vec<(String, usize)> = Vec::new();
    for (name, g) in &env.entries {
        let node = import(&mut st, g);
        scope.push((name.clone(), node));
    }
    let root = infer_node(&mut st, &mut scope, t)?;
    Ok(st.freeze(root))
}

/// Copy a frozen graph into the unification state, preserving cycles and
/// renaming its type variables apart from the state's own.
fn import(st: &mut UnificationState, g: &TypeGraph) -> usize {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut vars: HashMap<u32, u32> = HashMap::new();
    for i in 0..g.len() {
        let n = st.fresh_var();
        map.insert(i, n);
    }
    for i in 0..g.len() {
        let label = match g.node(i) {
            TypeNode::Int => TypeNode::Int,
            TypeNode::Var(v) => {
                let fresh = *vars.entry(*v).or_insert_with(|| {
                    let id = st.next_var;
                    st.next_var += 1;
                    id
                });
                TypeNode::Var(fresh)
            }
            TypeNode::Arrow(d, c) => TypeNode::Arrow(map[d], map[c]),
        };
        let n = map[&i];
        st.label[n] = label;
    }
    map[&g.root()]
}

fn infer_node(
    st: &mut UnificationState,
    scope: &mut Vec<(String, usize)>,
    t: &Term,
) -> Result<usize, IllTyped> {
    match t {
        Term::Var(x) => scope
            .iter()
            .rev()
            .find(|(name, _)| name.as_str() == x.as_ref())
            .map(|(_, n)| *n)
            .ok_or_else(|| IllTyped::Unbound(x.to_string())),
        Term::Const(_) => Ok(st.int()),
        Term::Abs(x, body) => {
            let param = st.fresh_var();
            scope.push((x.to_string(), param));
            let cod = infer_node(st, scope, body);
            scope.pop();
            Ok(st.arrow(param, cod?))
        }
        Term::App(fun, arg) => {
            let tf = infer_node(st, scope, fun)?;
            let ta = infer_node(st, scope, arg)?;
            let result = st.fresh_var();
            let expected = st.arrow(ta, result);
            st.unify(tf, expected).map_err(|c| IllTyped::Clash {
                at: t.to_string(),
                left: c.left,
                right: c.right,
            })?;
            Ok(result)
        }
    }
}

// ---------------------------------------------------------------------------
// Soundness test hooks
// ---------------------------------------------------------------------------

/// If `t` is typable and steps to `b`, then `b` is typable and the
/// original principal type still types `b` — that is, it is an instance of
/// `b`'s principal type. Reduction may generalize the principal type (a
/// discarded subterm can take its constraints with it), so requiring
/// bisimilar principal types would be too strong. Vacuously true when `t`
/// does not step.
pub fn check_preservation(t: &Term) -> bool {
    let ty = match infer(&TypeEnv::empty(), t) {
        Ok(ty) => ty,
        Err(_) => return false,
    };
    match step(t) {
        StepOutcome::NoStep => true,
        StepOutcome::Stepped(b) => match infer(&TypeEnv::empty(), &b) {
            Ok(ty2) => instance_of(&ty, &ty2),
            Err(_) => false,
        },
    }
}

/// A typable closed term is a value or steps.
pub fn check_progress(t: &Term) -> bool {
    t.is_value() || matches!(step(t), StepOutcome::Stepped(_))
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl fmt::Display for TypeGraph {
    /// Prints with cycle back-references: a node on a cycle is printed as
    /// `%k=(...)` at its first occurrence and plain `%k` afterwards; type
    /// variables print as `'a`, `'b`, ... in order of first occurrence;
    /// arrows are right-associative.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cyclic = self.cyclic_nodes();
        let mut pr = Printer {
            graph: self,
            cyclic,
            cycle_names: HashMap::new(),
            var_names: HashMap::new(),
        };
        let s = pr.node(self.root);
        write!(f, "{s}")
    }
}

impl TypeGraph {
    /// Nodes that lie on a cycle reachable from the root.
    fn cyclic_nodes(&self) -> HashSet<usize> {
        let mut cyclic = HashSet::new();
        let mut on_path: Vec<usize> = Vec::new();
        let mut done: HashSet<usize> = HashSet::new();
        self.visit(self.root, &mut on_path, &mut done, &mut cyclic);
        cyclic
    }

    fn visit(
        &self,
        n: usize,
        on_path: &mut Vec<usize>,
        done: &mut HashSet<usize>,
        cyclic: &mut HashSet<usize>,
    ) {
        if on_path.contains(&n) {
            cyclic.insert(n);
            return;
        }
        if !done.insert(n) {
            return;
        }
        if let TypeNode::Arrow(d, c) = self.node(n) {
            on_path.push(n);
            self.visit(*d, on_path, done, cyclic);
            self.visit(*c, on_path, done, cyclic);
            on_path.pop();
        }
    }
}

struct Printer<'a> {
    graph: &'a TypeGraph,
    cyclic: HashSet<usize>,
    cycle_names: HashMap<usize, usize>,
    var_names: HashMap<u32, usize>,
}

impl Printer<'_> {
    fn node(&mut self, n: usize) -> String {
        if self.cyclic.contains(&n) {
            if let Some(k) = self.cycle_names.get(&n) {
                return format!("%{k}");
            }
            let k = self.cycle_names.len() + 1;
            self.cycle_names.insert(n, k);
            let inner = self.label(n);
            return format!("%{k}=({inner})");
        }
        self.label(n)
    }

    fn label(&mut self, n: usize) -> String {
        match *self.graph.node(n) {
            TypeNode::Int => "int".into(),
            TypeNode::Var(v) => {
                let next = self.var_names.len();
                let idx = *self.var_names.entry(v).or_insert(next);
                var_name(idx)
            }
            TypeNode::Arrow(d, c) => {
                let dom_is_arrow =
                    matches!(self.graph.node(d), TypeNode::Arrow(_, _)) && !self.cyclic.contains(&d);
                let ds = self.node(d);
                let cs = self.node(c);
                if dom_is_arrow {
                    format!("({ds}) -> {cs}")
                } else {
                    format!("{ds} -> {cs}")
                }
            }
        }
    }
}

fn var_name(mut idx: usize) -> String {
    let mut s = String::from("'");
    loop {
        s.push((b'a' + (idx % 26) as u8) as char);
        if idx < 26 {
            break;
        }
        idx = idx / 26 - 1;
    }
    s
}
