use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::domain::{DepKind, DependencyEdge, DependencyReport};

/// Adjacency view over a set of dependency edges, reusable across projects.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    ids: HashMap<String, usize>,
    names: Vec<String>,
    forward: Vec<BTreeSet<usize>>,
    backward: Vec<BTreeSet<usize>>,
}

impl DependencyGraph {
    pub fn new<'a>(edges: impl IntoIterator<Item = &'a DependencyEdge>, runtime_only: bool) -> Self {
        let mut g = DependencyGraph::default();
        for e in edges {
            if runtime_only && e.kind != DepKind::Runtime {
                continue;
            }
            let from = g.intern(&e.from);
            let to = g.intern(&e.to);
            if from == to {
                continue;
            }
            g.forward[from].insert(to);
            g.backward[to].insert(from);
        }
        g
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(i) = self.ids.get(name) {
            return *i;
        }
        let i = self.names.len();
        self.ids.insert(name.to_string(), i);
        self.names.push(name.to_string());
        self.forward.push(BTreeSet::new());
        self.backward.push(BTreeSet::new());
        i
    }

    fn reachable(adjacency: &[BTreeSet<usize>], start: usize) -> Vec<usize> {
        let mut seen = vec![false; adjacency.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(n) = queue.pop_front() {
            for &m in &adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    out.push(m);
                    queue.push_back(m);
                }
            }
        }
        out
    }

    /// Names reachable by following dependency edges from `node`, excluding itself.
    pub fn dependencies_of(&self, node: &str) -> BTreeSet<&str> {
        match self.ids.get(node) {
            Some(&i) => Self::reachable(&self.forward, i)
                .into_iter()
                .map(|j| self.names[j].as_str())
                .collect(),
            None => BTreeSet::new(),
        }
    }

    /// Counts for `project`; `vulnerable_packages` are matched against the
    /// transitively reachable dependencies.
    pub fn report(&self, project: &str, vulnerable_packages: &BTreeSet<String>) -> DependencyReport {
        let Some(&i) = self.ids.get(project) else {
            return DependencyReport::empty(project);
        };
        let deps = Self::reachable(&self.forward, i);
        let dependents = Self::reachable(&self.backward, i);
        let vulnerable = deps
            .iter()
            .filter(|j| vulnerable_packages.contains(&self.names[**j]))
            .count();
        DependencyReport {
            project: project.to_string(),
            direct_deps: self.forward[i].len() as u64,
            transitive_deps: deps.len() as u64,
            direct_dependents: self.backward[i].len() as u64,
            transitive_dependents: dependents.len() as u64,
            vulnerable_deps: vulnerable as u64,
        }
    }
}

/// Direct and transitive dependency counts in both directions. Cycle-safe;
/// each reachable node is counted once and the project itself never is.
pub fn dependency_analysis(
    edges: &[DependencyEdge],
    project: &str,
    runtime_only: bool,
    vulnerable_packages: &BTreeSet<String>,
) -> DependencyReport {
    DependencyGraph::new(edges, runtime_only).report(project, vulnerable_packages)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(from: &str, to: &str, kind: DepKind) -> DependencyEdge {
        DependencyEdge {
            from: from.into(),
            to: to.into(),
            kind,
            constraint: "*".into(),
        }
    }

    fn rt(pairs: &[(&str, &str)]) -> Vec<DependencyEdge> {
        pairs.iter().map(|(a, b)| edge(a, b, DepKind::Runtime)).collect()
    }

    #[test]
    fn chain() {
        let edges = rt(&[("A", "B"), ("B", "C")]);
        let none = BTreeSet::new();
        let a = dependency_analysis(&edges, "A", false, &none);
        assert_eq!((a.direct_deps, a.transitive_deps), (1, 2));
        let c = dependency_analysis(&edges, "C", false, &none);
        assert_eq!((c.direct_dependents, c.transitive_dependents), (1, 2));
        assert_eq!(c.transitive_deps, 0);
    }

    #[test]
    fn diamond_counts_shared_node_once() {
        let edges = rt(&[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]);
        let a = dependency_analysis(&edges, "A", false, &BTreeSet::new());
        assert_eq!(a.direct_deps, 2);
        assert_eq!(a.transitive_deps, 3);
        let d = dependency_analysis(&edges, "D", false, &BTreeSet::new());
        assert_eq!(d.transitive_dependents, 3);
    }

    #[test]
    fn empty_graph() {
        let r = dependency_analysis(&[], "A", false, &BTreeSet::new());
        assert_eq!(r, DependencyReport::empty("A"));
    }

    #[test]
    fn cycle_excludes_self() {
        let edges = rt(&[("A", "B"), ("B", "C"), ("C", "A")]);
        let r = dependency_analysis(&edges, "A", false, &BTreeSet::new());
        assert_eq!(r.transitive_deps, 2);
        assert_eq!(r.transitive_dependents, 2);
    }

    #[test]
    fn runtime_only_drops_dev_edges() {
        let mut edges = rt(&[("A", "B")]);
        edges.push(edge("A", "T", DepKind::Dev));
        edges.push(edge("T", "U", DepKind::Runtime));
        let all = dependency_analysis(&edges, "A", false, &BTreeSet::new());
        assert_eq!(all.transitive_deps, 3);
        let runtime = dependency_analysis(&edges, "A", true, &BTreeSet::new());
        assert_eq!(runtime.transitive_deps, 1);
    }

    #[test]
    fn vulnerable_matches_reachable_only() {
        let edges = rt(&[("A", "B"), ("B", "C"), ("X", "A")]);
        let vulnerable: BTreeSet<String> = ["C".to_string(), "X".to_string()].into();
        let r = dependency_analysis(&edges, "A", false, &vulnerable);
        assert_eq!(r.vulnerable_deps, 1);
    }
}
