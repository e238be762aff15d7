//! Random entity graphs checked against simple-cycle enumeration.

use std::collections::BTreeSet;

use coplan::catalog::Catalog;
use coplan::scenario::Scenario;
use coplan::validator::{instantaneous_cycles, validate, Code};
use rand::Rng;

use super::{catalog, rng, scenario, Check};

pub const MAX_NODES: usize = 12;

/// One component with output `y` and one input per possible source entity.
pub fn node_catalog() -> Catalog {
    let mut text = String::from(
        "component Node\n  general name=node software_type=simulation_model license=MIT\n  technical api=component_api platform=test\n  mathematical temporal_resolution_s=1\n  domains Test\n  variable y causality=output variability=continuous unit=one topic=x start=0\n",
    );
    for i in 0..MAX_NODES {
        text.push_str(&format!(
            "  variable in{i:02} causality=input variability=continuous unit=one topic=x\n"
        ));
    }
    catalog(&text)
}

#[derive(Debug, Clone)]
pub struct Graph {
    pub n: usize,
    /// (source, target, time_shifted)
    pub edges: Vec<(usize, usize, bool)>,
}

pub fn name(i: usize) -> String {
    format!("e{i:02}")
}

impl Graph {
    pub fn random(r: &mut impl Rng) -> Self {
        let n = r.random_range(1..=MAX_NODES);
        let p = r.random_range(0.05..0.3);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if r.random_bool(p) {
                    edges.push((a, b, r.random_bool(0.25)));
                }
            }
        }
        let mut g = Graph { n, edges };
        // Break a found cycle on purpose half of the time.
        if r.random_bool(0.5) {
            if let Some(cycle) = g.simple_cycles().into_iter().next() {
                let (a, b) = (cycle[0], cycle[1 % cycle.len()]);
                for e in &mut g.edges {
                    if e.0 == a && e.1 == b {
                        e.2 = true;
                    }
                }
            }
        }
        g
    }

    pub fn scenario_text(&self) -> String {
        let mut s = String::from("scenario g base_step=1\nsimulator sim component=Node step=1\n");
        for i in 0..self.n {
            s.push_str(&format!("entity {} simulator=sim model=m\n", name(i)));
        }
        for &(a, b, shifted) in &self.edges {
            s.push_str(&format!(
                "connect {}.y -> {}.in{a:02}{}\n",
                name(a),
                name(b),
                if shifted { " time_shifted" } else { "" }
            ));
        }
        s
    }

    fn instantaneous(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, shifted) in &self.edges {
            if !shifted {
                adj[a].push(b);
            }
        }
        adj
    }

    /// Every simple cycle over non-shifted edges, each listed from its smallest vertex.
    pub fn simple_cycles(&self) -> Vec<Vec<usize>> {
        fn walk(
            adj: &[Vec<usize>],
            start: usize,
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let last = *path.last().unwrap();
            for &next in &adj[last] {
                if next == start {
                    out.push(path.clone());
                } else if next > start && !path.contains(&next) {
                    path.push(next);
                    walk(adj, start, path, out);
                    path.pop();
                }
            }
        }
        let adj = self.instantaneous();
        let mut out = Vec::new();
        for s in 0..self.n {
            walk(&adj, s, &mut vec![s], &mut out);
        }
        out
    }

    /// Groups of vertices lying on a common cycle, by mutual reachability.
    pub fn cyclic_groups(&self) -> BTreeSet<Vec<String>> {
        let on_cycle: BTreeSet<usize> = self.simple_cycles().into_iter().flatten().collect();
        let adj = self.instantaneous();
        let reach = |from: usize| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![from];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let reach: Vec<Vec<bool>> = (0..self.n).map(reach).collect();
        on_cycle
            .iter()
            .map(|&v| {
                on_cycle
                    .iter()
                    .filter(|&&w| reach[v][w] && reach[w][v])
                    .map(|&w| name(w))
                    .collect()
            })
            .collect()
    }
}

pub fn check(g: &Graph, cat: &Catalog) -> Result<bool, String> {
    let s: Scenario = scenario(&g.scenario_text(), cat);
    let expected = g.cyclic_groups();
    let got: BTreeSet<Vec<String>> = instantaneous_cycles(&s).into_iter().collect();
    if got != expected {
        return Err(format!("{g:?}: cycles {got:?}, oracle {expected:?}"));
    }
    let report = validate(&s, cat, None, None);
    let locations: BTreeSet<String> = report
        .with_code(Code::E006)
        .map(|f| f.location.clone())
        .collect();
    let expected_locations: BTreeSet<String> = expected.iter().map(|c| c.join(",")).collect();
    if locations != expected_locations {
        return Err(format!(
            "{g:?}: E006 at {locations:?}, oracle {expected_locations:?}"
        ));
    }
    if report.passed == !expected.is_empty() {
        return Err(format!(
            "{g:?}: passed={} with {} cyclic groups",
            report.passed,
            expected.len()
        ));
    }
    Ok(!expected.is_empty())
}

pub fn criterion_6() -> Check {
    let cat = node_catalog();
    let mut r = rng(6);
    let mut cyclic = 0;
    let mut shifted = 0;
    for _ in 0..100 {
        let g = Graph::random(&mut r);
        shifted += g.edges.iter().filter(|e| e.2).count();
        cyclic += usize::from(check(&g, &cat)?);
    }
    Ok(format!(
        "100 graphs, {cyclic} with instantaneous cycles, {shifted} time-shifted edges"
    ))
}
