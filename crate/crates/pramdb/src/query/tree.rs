//! Join trees by GYO ear removal, free-connex detection, and generalised
//! hypertree decompositions.

use serde::Deserialize;

use super::{Atom, ConjunctiveQuery};
use crate::error::{Error, Result};

/// Rooted tree over the atoms of a query (node `i` is body atom `i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl JoinTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    fn from_parents(root: usize, parent: Vec<Option<usize>>) -> JoinTree {
        let mut children = vec![Vec::new(); parent.len()];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        JoinTree { root, parent, children }
    }

    /// Parents first.
    pub fn top_down(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out
    }

    /// Children first.
    pub fn bottom_up(&self) -> Vec<usize> {
        let mut out = self.top_down();
        out.reverse();
        out
    }

    /// Parent (if any) followed by the children.
    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.parent[v].into_iter().chain(self.children[v].iter().copied()).collect()
    }

    /// For every variable, the nodes containing it form a connected subtree.
    pub fn is_connected_for(&self, sets: &[Vec<String>]) -> bool {
        let mut vars: Vec<&String> = sets.iter().flatten().collect();
        vars.sort();
        vars.dedup();
        vars.into_iter().all(|x| {
            let nodes = sets.iter().filter(|s| s.contains(x)).count();
            let edges = (0..self.len())
                .filter(|&v| self.parent[v].is_some_and(|p| sets[v].contains(x) && sets[p].contains(x)))
                .count();
            edges + 1 == nodes
        })
    }
}

/// GYO: repeatedly remove an ear — an edge whose variables shared with the
/// rest lie inside one other edge (its parent). Ears and witnesses are
/// tried in name order, so the tree is deterministic.
fn gyo(names: &[String], edges: &[Vec<String>]) -> Option<JoinTree> {
    let n = edges.len();
    if n == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]).then(a.cmp(&b)));
    let mut alive = vec![true; n];
    let mut parent = vec![None; n];
    for _ in 1..n {
        let ear = order.iter().copied().filter(|&e| alive[e]).find_map(|e| {
            let shared: Vec<&String> = edges[e]
                .iter()
                .filter(|x| (0..n).any(|g| g != e && alive[g] && edges[g].contains(x)))
                .collect();
            order
                .iter()
                .copied()
                .find(|&f| f != e && alive[f] && shared.iter().all(|x| edges[f].contains(x)))
                .map(|f| (e, f))
        });
        let (e, f) = ear?;
        alive[e] = false;
        parent[e] = Some(f);
    }
    let root = (0..n).find(|&v| alive[v]).unwrap();
    let t = JoinTree::from_parents(root, parent);
    debug_assert!(t.is_connected_for(edges));
    Some(t)
}

/// Join tree of an acyclic query; `None` if the query is cyclic.
pub fn gyo_join_tree(q: &ConjunctiveQuery) -> Option<JoinTree> {
    let names: Vec<String> = q.body.iter().map(|a| a.alias.clone()).collect();
    let edges: Vec<Vec<String>> = q.body.iter().map(|a| a.vars.clone()).collect();
    gyo(&names, &edges)
}

/// Join tree of the query with an extra atom over the head variables
/// (node `q.body.len()`), if that query is acyclic.
pub(crate) fn head_tree(q: &ConjunctiveQuery) -> Option<JoinTree> {
    let mut names: Vec<String> = q.body.iter().map(|a| a.alias.clone()).collect();
    let mut edges: Vec<Vec<String>> = q.body.iter().map(|a| a.vars.clone()).collect();
    // The head symbol never names a body atom; `\u{0}` keeps it unique.
    names.push(format!("\u{0}{}", q.name));
    edges.push(q.head.clone());
    gyo(&names, &edges)
}

/// Acyclic, and still acyclic with an extra atom over the free variables.
pub fn check_free_connex(q: &ConjunctiveQuery) -> bool {
    gyo_join_tree(q).is_some() && head_tree(q).is_some()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhdNode {
    pub id: String,
    pub chi: Vec<String>,
    pub mu: Vec<String>,
}

/// Generalised hypertree decomposition: tree nodes with bags `chi` and
/// covering atoms `mu` (atom aliases).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ghd {
    pub nodes: Vec<GhdNode>,
    pub tree: JoinTree,
}

#[derive(Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(untagged)]
enum Id {
    Num(i64),
    Str(String),
}

impl Id {
    fn name(&self) -> String {
        match self {
            Id::Num(n) => n.to_string(),
            Id::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    id: Id,
    chi: Vec<String>,
    mu: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GhdFile {
    nodes: Vec<NodeFile>,
    #[serde(default)]
    edges: Vec<[Id; 2]>,
    root: Option<Id>,
}

fn bad(msg: String) -> Error {
    Error::Decomposition(msg)
}

impl Ghd {
    /// `{nodes: [{id, chi, mu}], edges: [[id, id]], root}`; the edges must
    /// form a tree.
    pub fn from_json(text: &str) -> Result<Ghd> {
        let f: GhdFile = serde_json::from_str(text).map_err(|e| bad(format!("line {}: {e}", e.line())))?;
        let ids: Vec<String> = f.nodes.iter().map(|n| n.id.name()).collect();
        for (k, id) in ids.iter().enumerate() {
            if ids[..k].contains(id) {
                return Err(bad(format!("node id {id} repeated")));
            }
        }
        let idx = |id: &Id| {
            ids.iter().position(|x| *x == id.name()).ok_or_else(|| bad(format!("unknown node {}", id.name())))
        };
        let n = ids.len();
        if n == 0 {
            return Err(bad("no nodes".into()));
        }
        if f.edges.len() != n - 1 {
            return Err(bad(format!("{} edges for {n} nodes; not a tree", f.edges.len())));
        }
        let root = match &f.root {
            Some(r) => idx(r)?,
            None => 0,
        };
        let mut adj = vec![Vec::new(); n];
        for [a, b] in &f.edges {
            let (a, b) = (idx(a)?, idx(b)?);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = vec![root];
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(bad("edges do not connect all nodes".into()));
        }
        let nodes = f.nodes.into_iter().map(|x| GhdNode { id: x.id.name(), chi: x.chi, mu: x.mu }).collect();
        Ok(Ghd { nodes, tree: JoinTree::from_parents(root, parent) })
    }

    pub fn width(&self) -> usize {
        self.nodes.iter().map(|n| n.mu.len()).max().unwrap_or(0)
    }

    fn atom<'a>(&self, q: &'a ConjunctiveQuery, name: &str) -> Result<&'a Atom> {
        q.body
            .iter()
            .find(|a| a.alias == name)
            .ok_or_else(|| bad(format!("{name} is not an atom of the query")))
    }

    /// Tree-decomposition conditions, and every bag covered by its atoms.
    pub fn verify(&self, q: &ConjunctiveQuery) -> Result<()> {
        let vars = q.vars();
        for n in &self.nodes {
            if n.chi.is_empty() {
                return Err(bad(format!("node {}: empty bag", n.id)));
            }
            if let Some(x) = n.chi.iter().find(|x| !vars.contains(x)) {
                return Err(bad(format!("node {}: {x} is not a variable of the query", n.id)));
            }
            let mut cover: Vec<&String> = Vec::new();
            for a in &n.mu {
                cover.extend(self.atom(q, a)?.vars.iter());
            }
            if let Some(x) = n.chi.iter().find(|x| !cover.contains(x)) {
                return Err(bad(format!("node {}: {x} is in the bag but in none of its atoms", n.id)));
            }
        }
        if let Some(x) = vars.iter().find(|x| !self.nodes.iter().any(|n| n.chi.contains(x))) {
            return Err(bad(format!("variable {x} is in no bag")));
        }
        for a in &q.body {
            if !self.nodes.iter().any(|n| a.vars.iter().all(|x| n.chi.contains(x))) {
                return Err(bad(format!("no bag contains all variables of {}", a.alias)));
            }
        }
        let chis: Vec<Vec<String>> = self.nodes.iter().map(|n| n.chi.clone()).collect();
        if !self.tree.is_connected_for(&chis) {
            let x = vars
                .iter()
                .find(|x| {
                    let one: Vec<Vec<String>> =
                        chis.iter().map(|c| c.iter().filter(|y| y == x).cloned().collect()).collect();
                    !self.tree.is_connected_for(&one)
                })
                .unwrap();
            return Err(bad(format!("the bags containing {x} are not connected")));
        }
        Ok(())
    }

    /// Adds a leaf `{vars(A)}` with `μ = {A}` below a bag containing `A`'s
    /// variables, for every atom `A` in no `μ`. The width does not grow.
    pub fn complete(&self, q: &ConjunctiveQuery) -> Ghd {
        let mut g = self.clone();
        for a in &q.body {
            if g.nodes.iter().any(|n| n.mu.contains(&a.alias)) {
                continue;
            }
            let Some(v) = g.nodes.iter().position(|n| a.vars.iter().all(|x| n.chi.contains(x))) else { continue };
            let id = format!("{}+{}", g.nodes[v].id, a.alias);
            g.nodes.push(GhdNode { id, chi: a.vars.clone(), mu: vec![a.alias.clone()] });
            g.tree.parent.push(Some(v));
            g.tree.children.push(Vec::new());
            let w = g.tree.parent.len() - 1;
            g.tree.children[v].push(w);
        }
        g
    }

    /// Some connected set of nodes has bags covering exactly the free
    /// variables.
    pub fn is_free_connex(&self, q: &ConjunctiveQuery) -> bool {
        let cand: Vec<bool> = self.nodes.iter().map(|n| n.chi.iter().all(|x| q.head.contains(x))).collect();
        if q.head.is_empty() {
            return true;
        }
        let mut done = vec![false; self.nodes.len()];
        for s in 0..self.nodes.len() {
            if !cand[s] || done[s] {
                continue;
            }
            let mut comp = vec![s];
            done[s] = true;
            let mut i = 0;
            while i < comp.len() {
                for w in self.tree.neighbours(comp[i]) {
                    if cand[w] && !done[w] {
                        done[w] = true;
                        comp.push(w);
                    }
                }
                i += 1;
            }
            if q.head.iter().all(|x| comp.iter().any(|&v| self.nodes[v].chi.contains(x))) {
                return true;
            }
        }
        false
    }
}
