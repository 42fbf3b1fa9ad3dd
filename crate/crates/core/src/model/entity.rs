//! The entity-level graph: merged label and edge distributions over every
//! candidate entity, plus the identity components that govern which entities
//! can coexist.

use std::collections::HashMap;

use super::merge::{merge_edges, merge_labels};
use super::pgd::{parse_cpt_key, Pgd};
use crate::error::{Error, Result};

pub type NodeId = u32;
pub type LabelId = u16;

/// Largest identity component whose configuration table is enumerated.
pub const COMPONENT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EntityNode {
    pub id: String,
    /// Sorted reference indices.
    pub refs: Vec<u32>,
    /// Dense distribution, one entry per label of the alphabet.
    pub label_dist: Vec<f64>,
}

impl EntityNode {
    pub fn possible_labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.label_dist
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i as LabelId)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeExistence {
    Independent(f64),
    /// Row-major `[label of a][label of b]` for the edge's endpoints `a < b`.
    Conditional(Box<[f64]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub existence: EdgeExistence,
}

/// One valid node-existence configuration of a component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    /// Bit `i` set when the component's `i`-th node exists.
    pub mask: u32,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityComponent {
    pub nodes: Vec<NodeId>,
    pub configs: Vec<Config>,
    pub normalizer: f64,
}

impl IdentityComponent {
    /// Probability that every node in `mask` exists.
    pub fn marginal(&self, mask: u32) -> f64 {
        self.configs
            .iter()
            .filter(|c| c.mask & mask == mask)
            .map(|c| c.prob)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityGraph {
    pub labels: Vec<String>,
    pub references: Vec<String>,
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<EntityEdge>,
    pub components: Vec<IdentityComponent>,
    /// For every reference, the entities containing it.
    pub ref_entities: Vec<Vec<NodeId>>,
    pub(crate) adjacency: Vec<Vec<(NodeId, u32)>>,
    pub(crate) node_component: Vec<u32>,
    pub(crate) node_slot: Vec<u8>,
    /// Per node, the slots of same-component nodes sharing a reference.
    pub(crate) conflicts: Vec<u32>,
    pub(crate) node_marginal: Vec<f64>,
    label_index: HashMap<String, LabelId>,
    node_index: HashMap<String, NodeId>,
}

impl EntityGraph {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn label_id(&self, label: &str) -> Option<LabelId> {
        self.label_index.get(label).copied()
    }

    pub fn node_id(&self, id: &str) -> Option<NodeId> {
        self.node_index.get(id).copied()
    }

    pub fn node(&self, v: NodeId) -> &EntityNode {
        &self.nodes[v as usize]
    }

    pub fn label_prob(&self, v: NodeId, l: LabelId) -> f64 {
        self.nodes[v as usize].label_dist[l as usize]
    }

    pub fn is_correlated(&self) -> bool {
        self.edges
            .iter()
            .any(|e| matches!(e.existence, EdgeExistence::Conditional(_)))
    }

    /// Neighbors of `v` with the index of the connecting edge, sorted by id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, u32)] {
        &self.adjacency[v as usize]
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<&EntityEdge> {
        let adj = &self.adjacency[u as usize];
        adj.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| &self.edges[adj[i].1 as usize])
    }

    /// `Pr((u,v).e = T | u.l = lu, v.l = lv)`; 0 when no edge is present.
    pub fn edge_prob(&self, u: NodeId, v: NodeId, lu: LabelId, lv: LabelId) -> f64 {
        match self.edge_between(u, v) {
            Some(e) => self.edge_entry(e, u, lu, lv),
            None => 0.0,
        }
    }

    /// Evaluates `e` with `u` (one of its endpoints) labeled `lu` and the
    /// other endpoint labeled `lv`.
    pub fn edge_entry(&self, e: &EntityEdge, u: NodeId, lu: LabelId, lv: LabelId) -> f64 {
        match &e.existence {
            EdgeExistence::Independent(p) => *p,
            EdgeExistence::Conditional(cpt) => {
                let n = self.labels.len();
                let (la, lb) = if u == e.a { (lu, lv) } else { (lv, lu) };
                cpt[la as usize * n + lb as usize]
            }
        }
    }

    pub fn component_of(&self, v: NodeId) -> usize {
        self.node_component[v as usize] as usize
    }

    /// True when the two entities share no reference.
    pub fn refs_disjoint(&self, u: NodeId, v: NodeId) -> bool {
        if u == v {
            return false;
        }
        let (cu, cv) = (self.node_component[u as usize], self.node_component[v as usize]);
        cu != cv || self.conflicts[u as usize] & (1 << self.node_slot[v as usize]) == 0
    }

    /// Marginal existence probability of a single node.
    pub fn existence(&self, v: NodeId) -> f64 {
        self.node_marginal[v as usize]
    }

    /// `Pr(V.n = T)` for the given nodes, computed per identity component.
    /// Nodes that share a reference yield 0.
    pub fn node_existence_marginal(&self, nodes: &[NodeId]) -> f64 {
        let mut groups: Vec<(u32, u32)> = Vec::with_capacity(nodes.len());
        for &v in nodes {
            let comp = self.node_component[v as usize];
            let bit = 1u32 << self.node_slot[v as usize];
            match groups.iter_mut().find(|(c, _)| *c == comp) {
                Some((_, mask)) => *mask |= bit,
                None => groups.push((comp, bit)),
            }
        }
        let mut prob = 1.0;
        for (comp, mask) in groups {
            prob *= if mask.count_ones() == 1 {
                let slot = mask.trailing_zeros() as usize;
                self.node_marginal[self.components[comp as usize].nodes[slot] as usize]
            } else {
                self.components[comp as usize].marginal(mask)
            };
        }
        prob
    }

    /// Rebuilds lookup structures from the stored fields. Used after
    /// deserialization.
    pub(crate) fn from_parts(
        labels: Vec<String>,
        references: Vec<String>,
        nodes: Vec<EntityNode>,
        edges: Vec<EntityEdge>,
        components: Vec<IdentityComponent>,
    ) -> Self {
        let n = nodes.len();
        let mut ref_entities = vec![Vec::new(); references.len()];
        for (v, node) in nodes.iter().enumerate() {
            for &r in &node.refs {
                ref_entities[r as usize].push(v as NodeId);
            }
        }
        let mut adjacency: Vec<Vec<(NodeId, u32)>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a as usize].push((e.b, i as u32));
            adjacency[e.b as usize].push((e.a, i as u32));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut node_component = vec![0u32; n];
        let mut node_slot = vec![0u8; n];
        let mut conflicts = vec![0u32; n];
        let mut node_marginal = vec![0.0; n];
        for (c, comp) in components.iter().enumerate() {
            for (slot, &v) in comp.nodes.iter().enumerate() {
                node_component[v as usize] = c as u32;
                node_slot[v as usize] = slot as u8;
                node_marginal[v as usize] = comp.marginal(1 << slot);
            }
            for (i, &u) in comp.nodes.iter().enumerate() {
                for (j, &v) in comp.nodes.iter().enumerate() {
                    if i != j && shares_ref(&nodes[u as usize].refs, &nodes[v as usize].refs) {
                        conflicts[u as usize] |= 1 << j;
                    }
                }
            }
        }
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as LabelId))
            .collect();
        let node_index = nodes
            .iter()
            .enumerate()
            .map(|(i, node)| (node.id.clone(), i as NodeId))
            .collect();
        EntityGraph {
            labels,
            references,
            nodes,
            edges,
            components,
            ref_entities,
            adjacency,
            node_component,
            node_slot,
            conflicts,
            node_marginal,
            label_index,
            node_index,
        }
    }
}

fn shares_ref(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Materializes the entity graph from a valid PGD.
pub fn build_entity_graph(pgd: &Pgd) -> Result<EntityGraph> {
    pgd.validate().into_result()?;
    let nl = pgd.labels.len();
    let label_index: HashMap<&str, usize> = pgd
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let ref_index: HashMap<&str, u32> = pgd
        .references
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i as u32))
        .collect();
    let ref_dists: Vec<Vec<f64>> = pgd
        .references
        .iter()
        .map(|r| {
            let mut d = vec![0.0; nl];
            for (l, &p) in &r.dist {
                d[label_index[l.as_str()]] = p;
            }
            d
        })
        .collect();

    // Declared sets in document order, then implicit singletons.
    let mut members: Vec<(String, Vec<u32>, Option<f64>)> = Vec::new();
    let mut has_singleton = vec![false; pgd.references.len()];
    for s in &pgd.sets {
        let mut refs: Vec<u32> = s.refs.iter().map(|r| ref_index[r.as_str()]).collect();
        refs.sort_unstable();
        if refs.len() == 1 {
            has_singleton[refs[0] as usize] = true;
        }
        members.push((s.id.clone(), refs, s.p));
    }
    for (i, r) in pgd.references.iter().enumerate() {
        if !has_singleton[i] {
            members.push((r.id.clone(), vec![i as u32], None));
        }
    }

    let nodes: Vec<EntityNode> = members
        .iter()
        .map(|(id, refs, _)| {
            let dists: Vec<&[f64]> = refs.iter().map(|&r| ref_dists[r as usize].as_slice()).collect();
            EntityNode {
                id: id.clone(),
                refs: refs.clone(),
                label_dist: merge_labels(&dists),
            }
        })
        .collect();
    let set_prob: Vec<Option<f64>> = members.iter().map(|m| m.2).collect();

    let components = build_components(&nodes, &set_prob, pgd.references.len())?;
    let edges = build_edges(pgd, &nodes, &ref_index, &label_index)?;
    Ok(EntityGraph::from_parts(
        pgd.labels.clone(),
        pgd.references.iter().map(|r| r.id.clone()).collect(),
        nodes,
        edges,
        components,
    ))
}

fn build_components(
    nodes: &[EntityNode],
    set_prob: &[Option<f64>],
    num_refs: usize,
) -> Result<Vec<IdentityComponent>> {
    // Union entities that share a reference.
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut first_owner: Vec<Option<usize>> = vec![None; num_refs];
    for (v, node) in nodes.iter().enumerate() {
        for &r in &node.refs {
            match first_owner[r as usize] {
                None => first_owner[r as usize] = Some(v),
                Some(o) => {
                    let (a, b) = (find(&mut parent, o), find(&mut parent, v));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<NodeId>> = HashMap::new();
    let mut order = Vec::new();
    for v in 0..nodes.len() {
        let root = find(&mut parent, v);
        let g = groups.entry(root).or_insert_with(|| {
            order.push(root);
            Vec::new()
        });
        g.push(v as NodeId);
    }
    order
        .into_iter()
        .map(|root| {
            let members = groups.remove(&root).unwrap_or_default();
            enumerate_configs(nodes, set_prob, members)
        })
        .collect()
}

/// Enumerates the exact covers of a component's references and weights each
/// by the product of its sets' existence factors.
fn enumerate_configs(
    nodes: &[EntityNode],
    set_prob: &[Option<f64>],
    members: Vec<NodeId>,
) -> Result<IdentityComponent> {
    let names = || members.iter().map(|&v| nodes[v as usize].id.clone()).collect::<Vec<_>>();
    if members.len() > COMPONENT_CAP {
        return Err(Error::ComponentTooLarge {
            component: names(),
            size: members.len(),
            cap: COMPONENT_CAP,
        });
    }
    let mut local_refs: Vec<u32> = members
        .iter()
        .flat_map(|&v| nodes[v as usize].refs.iter().copied())
        .collect();
    local_refs.sort_unstable();
    local_refs.dedup();
    let ref_mask = |v: NodeId| {
        nodes[v as usize].refs.iter().fold(0u32, |m, r| {
            m | 1 << local_refs.binary_search(r).expect("member reference")
        })
    };
    let masks: Vec<u32> = members.iter().map(|&v| ref_mask(v)).collect();
    let full = if local_refs.len() == 32 { u32::MAX } else { (1u32 << local_refs.len()) - 1 };

    let mut covers = Vec::new();
    exact_covers(&masks, full, 0, 0, &mut covers);

    let mut configs: Vec<Config> = covers
        .into_iter()
        .map(|mask| {
            let weight: f64 = members
                .iter()
                .enumerate()
                .map(|(slot, &v)| match set_prob[v as usize] {
                    Some(p) if mask & (1 << slot) != 0 => p,
                    Some(p) => 1.0 - p,
                    None => 1.0,
                })
                .product();
            Config { mask, prob: weight }
        })
        .filter(|c| c.prob > 0.0)
        .collect();
    let normalizer: f64 = configs.iter().map(|c| c.prob).sum();
    if normalizer <= 0.0 {
        return Err(Error::DegenerateComponent { component: names() });
    }
    for c in &mut configs {
        c.prob /= normalizer;
    }
    configs.sort_by_key(|c| c.mask);
    Ok(IdentityComponent {
        nodes: members,
        configs,
        normalizer,
    })
}

fn exact_covers(masks: &[u32], full: u32, covered: u32, chosen: u32, out: &mut Vec<u32>) {
    if covered == full {
        out.push(chosen);
        return;
    }
    let next = (!covered & full).trailing_zeros();
    for (slot, &m) in masks.iter().enumerate() {
        if m & (1 << next) != 0 && m & covered == 0 {
            exact_covers(masks, full, covered | m, chosen | 1 << slot, out);
        }
    }
}

/// A reference edge's existence as a dense `[label u][label v]` table, or a
/// scalar.
enum RefEdgeTable {
    Scalar(f64),
    Table(Vec<f64>),
}

fn build_edges(
    pgd: &Pgd,
    nodes: &[EntityNode],
    ref_index: &HashMap<&str, u32>,
    label_index: &HashMap<&str, usize>,
) -> Result<Vec<EntityEdge>> {
    let nl = pgd.labels.len();
    let tables: Vec<RefEdgeTable> = pgd
        .edges
        .iter()
        .map(|e| match (&e.p, &e.cpt) {
            (Some(p), _) => RefEdgeTable::Scalar(*p),
            (None, Some(cpt)) => {
                let mut t = vec![0.0; nl * nl];
                for (key, &p) in cpt {
                    let (a, b) = parse_cpt_key(key).expect("validated CPT key");
                    t[label_index[a] * nl + label_index[b]] = p;
                }
                RefEdgeTable::Table(t)
            }
            (None, None) => unreachable!("validated edge shape"),
        })
        .collect();

    let mut ref_entities: Vec<Vec<NodeId>> = vec![Vec::new(); pgd.references.len()];
    for (v, node) in nodes.iter().enumerate() {
        for &r in &node.refs {
            ref_entities[r as usize].push(v as NodeId);
        }
    }

    // (a, b, ref edge, transposed) for every entity pair a < b and every
    // declared reference edge running between them.
    let mut contributions: Vec<(NodeId, NodeId, u32, bool)> = Vec::new();
    for (i, e) in pgd.edges.iter().enumerate() {
        let (x, y) = (ref_index[e.u.as_str()], ref_index[e.v.as_str()]);
        for &s1 in &ref_entities[x as usize] {
            for &s2 in &ref_entities[y as usize] {
                if s1 == s2 || shares_ref(&nodes[s1 as usize].refs, &nodes[s2 as usize].refs) {
                    continue;
                }
                if s1 < s2 {
                    contributions.push((s1, s2, i as u32, false));
                } else {
                    contributions.push((s2, s1, i as u32, true));
                }
            }
        }
    }
    contributions.sort_unstable();

    let merge_fn = pgd.merge.edges;
    let mut edges = Vec::new();
    let mut start = 0;
    while start < contributions.len() {
        let (a, b) = (contributions[start].0, contributions[start].1);
        let mut end = start;
        while end < contributions.len() && contributions[end].0 == a && contributions[end].1 == b {
            end += 1;
        }
        let group = &contributions[start..end];
        start = end;

        let conditional = group
            .iter()
            .any(|&(_, _, i, _)| matches!(tables[i as usize], RefEdgeTable::Table(_)));
        let existence = if conditional {
            let rows: Vec<Vec<f64>> = group
                .iter()
                .map(|&(_, _, i, transposed)| match &tables[i as usize] {
                    RefEdgeTable::Scalar(p) => vec![*p; nl * nl],
                    RefEdgeTable::Table(t) if transposed => {
                        let mut out = vec![0.0; nl * nl];
                        for la in 0..nl {
                            for lb in 0..nl {
                                out[la * nl + lb] = t[lb * nl + la];
                            }
                        }
                        out
                    }
                    RefEdgeTable::Table(t) => t.clone(),
                })
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            EdgeExistence::Conditional(merge_edges(merge_fn, &refs).into_boxed_slice())
        } else {
            let rows: Vec<[f64; 1]> = group
                .iter()
                .map(|&(_, _, i, _)| match tables[i as usize] {
                    RefEdgeTable::Scalar(p) => [p],
                    RefEdgeTable::Table(_) => unreachable!(),
                })
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            EdgeExistence::Independent(merge_edges(merge_fn, &refs)[0])
        };
        let keep = match &existence {
            EdgeExistence::Independent(p) => *p > 0.0,
            EdgeExistence::Conditional(t) => t.iter().any(|&p| p > 0.0),
        };
        if keep {
            edges.push(EntityEdge { a, b, existence });
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn running_example_merges_labels_and_edges() {
        let g = build_entity_graph(&fixtures::running_example()).unwrap();
        let s34 = g.node_id("s34").unwrap();
        let (r, i) = (g.label_id("r").unwrap(), g.label_id("i").unwrap());
        assert_eq!(g.label_prob(s34, r), 0.5);
        assert_eq!(g.label_prob(s34, i), 0.5);
        let s2 = g.node_id("s2").unwrap();
        let a = g.label_id("a").unwrap();
        assert_eq!(g.edge_prob(s34, s2, r, a), 0.75);
    }

    #[test]
    fn running_example_existence_marginals() {
        let g = build_entity_graph(&fixtures::running_example()).unwrap();
        let id = |s: &str| g.node_id(s).unwrap();
        assert_eq!(g.node_existence_marginal(&[]), 1.0);
        assert!((g.node_existence_marginal(&[id("s34")]) - 0.8).abs() < 1e-12);
        assert!((g.node_existence_marginal(&[id("s3"), id("s4")]) - 0.2).abs() < 1e-12);
        assert_eq!(g.node_existence_marginal(&[id("s3"), id("s34")]), 0.0);
        assert!(!g.refs_disjoint(id("s3"), id("s34")));
        assert!(g.refs_disjoint(id("s3"), id("s4")));
    }

    #[test]
    fn singleton_only_graph_is_certain() {
        let mut pgd = fixtures::running_example();
        pgd.sets.retain(|s| s.refs.len() == 1);
        let g = build_entity_graph(&pgd).unwrap();
        for comp in &g.components {
            assert_eq!(comp.nodes.len(), 1);
            assert_eq!(comp.configs.len(), 1);
            assert_eq!(comp.configs[0].prob, 1.0);
        }
    }

    #[test]
    fn oversized_component_is_rejected() {
        let mut pgd = fixtures::running_example();
        for i in 0..COMPONENT_CAP {
            pgd.sets.push(crate::model::SetDoc {
                id: format!("dup{i}"),
                refs: vec!["r3".into(), "r4".into()],
                p: Some(0.01),
            });
        }
        match build_entity_graph(&pgd) {
            Err(Error::ComponentTooLarge { component, .. }) => {
                assert!(component.contains(&"s34".to_string()))
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn conditional_edges_transpose_to_canonical_orientation() {
        let pgd = Pgd::from_json(
            r#"{"labels":["a","b"],
                "references":[{"id":"x","dist":{"a":0.5,"b":0.5}},{"id":"y","dist":{"a":0.5,"b":0.5}}],
                "edges":[{"u":"y","v":"x","cpt":{"a,b":0.9,"b,a":0.1}}]}"#,
        )
        .unwrap();
        let g = build_entity_graph(&pgd).unwrap();
        let (x, y) = (g.node_id("x").unwrap(), g.node_id("y").unwrap());
        // y labeled a, x labeled b.
        assert_eq!(g.edge_prob(y, x, 0, 1), 0.9);
        assert_eq!(g.edge_prob(x, y, 1, 0), 0.9);
        assert_eq!(g.edge_prob(x, y, 0, 1), 0.1);
        assert_eq!(g.edge_prob(x, y, 0, 0), 0.0);
    }
}
