//! Depth-limited static callgraph rooted at the target method.
//!
//! Call facts come from an external extractor (or the sandbox) as JSON:
//!
//! ```json
//! {"methods": [{"id": "pkg.C.m(int)", "class": "pkg.C"}], "calls": [["pkg.C.m(int)", "pkg.D.n()"]]}
//! ```
//!
//! The graph is built breadth-first from the root, so every node carries its
//! shortest call distance from the root and nothing beyond the depth limit
//! is kept.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

pub const DEFAULT_DEPTH_LIMIT: u32 = 10;
pub const LARGE_LIBRARY_DEPTH_LIMIT: u32 = 5;

/// Default depth limit, reduced for libraries the user marks as large.
pub fn default_depth_limit(large_library: bool) -> u32 {
    if large_library {
        LARGE_LIBRARY_DEPTH_LIMIT
    } else {
        DEFAULT_DEPTH_LIMIT
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodFact {
    pub id: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FactsFile {
    methods: Vec<MethodFact>,
    #[serde(default)]
    calls: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallFacts {
    methods: BTreeMap<String, String>,
    calls: BTreeSet<(String, String)>,
}

impl CallFacts {
    pub fn load(path: &Path) -> Result<Self> {
        let file: FactsFile = error::read_json(path)?;
        Self::new(file.methods, file.calls).map_err(|e| match e {
            Error::Parse { location, message } => {
                Error::parse(format!("{}: {location}", path.display()), message)
            }
            e => e,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FactsFile = error::parse_json(text, "<facts>")?;
        Self::new(file.methods, file.calls)
    }

    pub fn new(
        methods: impl IntoIterator<Item = MethodFact>,
        calls: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (i, m) in methods.into_iter().enumerate() {
            if by_id.insert(m.id.clone(), m.class).is_some() {
                return Err(Error::parse(
                    format!("methods[{i}].id"),
                    format!("duplicate method id {:?}", m.id),
                ));
            }
        }
        let mut edges = BTreeSet::new();
        for (i, (from, to)) in calls.into_iter().enumerate() {
            for id in [&from, &to] {
                if !by_id.contains_key(id) {
                    return Err(Error::parse(
                        format!("calls[{i}]"),
                        format!("unknown method id {id:?}"),
                    ));
                }
            }
            edges.insert((from, to));
        }
        Ok(CallFacts {
            methods: by_id,
            calls: edges,
        })
    }

    pub fn method_count(&self) -> usize {
        self.methods.len()
    }

    pub fn call_count(&self) -> usize {
        self.calls.len()
    }

    pub fn class_of(&self, id: &str) -> Option<&str> {
        self.methods.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.methods.contains_key(id)
    }

    pub fn method_ids(&self) -> impl Iterator<Item = &str> {
        self.methods.keys().map(String::as_str)
    }

    pub fn calls(&self) -> impl Iterator<Item = (&str, &str)> {
        self.calls.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallGraphNode {
    pub id: String,
    pub signature: String,
    pub enclosing_class: String,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reach {
    pub id: String,
    pub relative_depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallGraph {
    root: String,
    depth_limit: u32,
    nodes: BTreeMap<String, CallGraphNode>,
    successors: BTreeMap<String, BTreeSet<String>>,
}

impl CallGraph {
    pub fn build(facts: &CallFacts, root: &str, depth_limit: u32) -> Result<Self> {
        if depth_limit == 0 {
            return Err(Error::BadArgs("depth limit must be positive".into()));
        }
        if !facts.contains(root) {
            return Err(Error::not_found(
                format!("root method {root:?}"),
                Vec::new(),
            ));
        }
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in facts.calls() {
            adjacency.entry(from).or_default().push(to);
        }

        let mut depths: BTreeMap<&str, u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        depths.insert(root, 0);
        queue.push_back(root);
        while let Some(current) = queue.pop_front() {
            let d = depths[current];
            if d == depth_limit {
                continue;
            }
            for &next in adjacency.get(current).into_iter().flatten() {
                if !depths.contains_key(next) {
                    depths.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }

        let nodes: BTreeMap<String, CallGraphNode> = depths
            .iter()
            .map(|(&id, &depth)| {
                let class = facts.class_of(id).unwrap_or_default().to_string();
                let signature = id
                    .strip_prefix(&class)
                    .and_then(|s| s.strip_prefix('.'))
                    .unwrap_or(id)
                    .to_string();
                (
                    id.to_string(),
                    CallGraphNode {
                        id: id.to_string(),
                        signature,
                        enclosing_class: class,
                        depth,
                    },
                )
            })
            .collect();
        let mut successors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (from, to) in facts.calls() {
            if nodes.contains_key(from) && nodes.contains_key(to) {
                successors
                    .entry(from.to_string())
                    .or_default()
                    .insert(to.to_string());
            }
        }
        Ok(CallGraph {
            root: root.to_string(),
            depth_limit,
            nodes,
            successors,
        })
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn depth_limit(&self) -> u32 {
        self.depth_limit
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&CallGraphNode> {
        self.nodes.get(id)
    }

    /// Nodes ordered by id.
    pub fn nodes(&self) -> impl Iterator<Item = &CallGraphNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.successors
            .iter()
            .flat_map(|(from, tos)| tos.iter().map(move |to| (from.as_str(), to.as_str())))
    }

    pub fn successors(&self, id: &str) -> impl Iterator<Item = &str> {
        self.successors
            .get(id)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    fn require(&self, id: &str) -> Result<()> {
        if self.nodes.contains_key(id) {
            Ok(())
        } else {
            let suggestions = crate::docs_index::suggest(id, self.nodes.keys().map(String::as_str));
            Err(Error::not_found(
                format!("method {id:?} in callgraph"),
                suggestions,
            ))
        }
    }

    /// Distances from `from` along graph edges, up to `max_depth`.
    fn distances_from<'a>(&'a self, from: &'a str, max_depth: u32) -> BTreeMap<&'a str, u32> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        let start = self
            .nodes
            .get_key_value(from)
            .map(|(k, _)| k.as_str())
            .unwrap_or(from);
        dist.insert(start, 0);
        queue.push_back(start);
        while let Some(current) = queue.pop_front() {
            let d = dist[current];
            if d == max_depth {
                continue;
            }
            for next in self.successors(current) {
                if !dist.contains_key(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    pub fn reach_methods(&self, from: &str, max_depth: u32) -> Result<Vec<Reach>> {
        self.require(from)?;
        let mut out: Vec<Reach> = self
            .distances_from(from, max_depth)
            .into_iter()
            .map(|(id, d)| Reach {
                id: id.to_string(),
                relative_depth: d,
            })
            .collect();
        out.sort_by(|a, b| (a.relative_depth, &a.id).cmp(&(b.relative_depth, &b.id)));
        Ok(out)
    }

    /// One shortest path from the root to `target`; ties are broken by the
    /// lexicographically smallest id sequence.
    pub fn path_to_method(&self, target: &str) -> Result<Vec<String>> {
        self.require(target)?;
        let target_depth = self.nodes[target].depth;
        // Distance from each node to the target, via reversed edges.
        let mut predecessors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in self.edges() {
            predecessors.entry(to).or_default().push(from);
        }
        let mut to_target: BTreeMap<&str, u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        to_target.insert(target, 0);
        queue.push_back(target);
        while let Some(current) = queue.pop_front() {
            let d = to_target[current];
            for &prev in predecessors.get(current).into_iter().flatten() {
                if !to_target.contains_key(prev) {
                    to_target.insert(prev, d + 1);
                    queue.push_back(prev);
                }
            }
        }

        let mut path = vec![self.root.clone()];
        let mut current = self.root.as_str();
        while current != target {
            let here = self.nodes[current].depth;
            let remaining = target_depth - here;
            current = self
                .successors(current)
                .find(|next| {
                    self.nodes[*next].depth == here + 1
                        && to_target.get(next).is_some_and(|&d| d == remaining - 1)
                })
                .expect("a shortest path exists for every node");
            path.push(current.to_string());
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facts(methods: &[&str], calls: &[(&str, &str)]) -> CallFacts {
        CallFacts::new(
            methods.iter().map(|m| MethodFact {
                id: m.to_string(),
                class: "C".into(),
            }),
            calls.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .unwrap()
    }

    fn depths(g: &CallGraph) -> Vec<(String, u32)> {
        g.nodes().map(|n| (n.id.clone(), n.depth)).collect()
    }

    #[test]
    fn chain_respects_limit() {
        let f = facts(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let g = CallGraph::build(&f, "A", 2).unwrap();
        assert_eq!(
            depths(&g),
            vec![("A".into(), 0), ("B".into(), 1), ("C".into(), 2)]
        );
        let g = CallGraph::build(&f, "A", 1).unwrap();
        assert!(g.node("C").is_none());
        assert_eq!(g.edges().count(), 1);
    }

    #[test]
    fn diamond_visits_join_once_and_breaks_ties_lexicographically() {
        let f = facts(
            &["A", "B", "C", "D"],
            &[("A", "C"), ("A", "B"), ("B", "D"), ("C", "D")],
        );
        let g = CallGraph::build(&f, "A", 10).unwrap();
        assert_eq!(g.node("D").unwrap().depth, 2);
        assert_eq!(g.len(), 4);
        assert_eq!(g.path_to_method("D").unwrap(), vec!["A", "B", "D"]);
        assert_eq!(g.path_to_method("A").unwrap(), vec!["A"]);
        let from_b: Vec<String> = g
            .reach_methods("B", 10)
            .unwrap()
            .into_iter()
            .map(|r| r.id)
            .collect();
        assert_eq!(from_b, vec!["B", "D"]);
        let leaf = g.reach_methods("D", 3).unwrap();
        assert_eq!(
            leaf,
            vec![Reach {
                id: "D".into(),
                relative_depth: 0
            }]
        );
    }

    #[test]
    fn cycles_terminate() {
        let f = facts(&["A", "B"], &[("A", "B"), ("B", "A")]);
        let g = CallGraph::build(&f, "A", 10).unwrap();
        assert_eq!(depths(&g), vec![("A".into(), 0), ("B".into(), 1)]);
        assert_eq!(g.edges().count(), 2);
    }

    #[test]
    fn facts_dedup_and_dangling_ids() {
        let json = r#"{"methods": [{"id": "a", "class": "X"}, {"id": "b", "class": "X"}, {"id": "c", "class": "Y"}],
                       "calls": [["a", "b"], ["a", "b"], ["b", "c"]]}"#;
        let f = CallFacts::from_json(json).unwrap();
        assert_eq!((f.method_count(), f.call_count()), (3, 2));
        let bad = r#"{"methods": [{"id": "a", "class": "X"}], "calls": [["a", "ghost"]]}"#;
        match CallFacts::from_json(bad).unwrap_err() {
            Error::Parse { message, .. } => assert!(message.contains("ghost")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_ids_are_not_found() {
        let f = facts(&["A"], &[]);
        assert_eq!(
            CallGraph::build(&f, "Z", 3).unwrap_err().code(),
            "NOT_FOUND"
        );
        let g = CallGraph::build(&f, "A", 3).unwrap();
        assert_eq!(g.reach_methods("Z", 1).unwrap_err().code(), "NOT_FOUND");
        assert_eq!(g.path_to_method("Z").unwrap_err().code(), "NOT_FOUND");
    }

    #[test]
    fn signature_strips_class_prefix() {
        let f = CallFacts::new(
            [MethodFact {
                id: "p.K.run(int)".into(),
                class: "p.K".into(),
            }],
            [],
        )
        .unwrap();
        let g = CallGraph::build(&f, "p.K.run(int)", 1).unwrap();
        let n = g.node("p.K.run(int)").unwrap();
        assert_eq!(
            (n.signature.as_str(), n.enclosing_class.as_str()),
            ("run(int)", "p.K")
        );
    }
}
