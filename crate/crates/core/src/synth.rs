//! Deterministic synthetic fact bases for benchmarking.
//!
//! The generator lays out one flow region per source. Inside a region every
//! node hangs off a recent predecessor, giving long tree-shaped flows; extra
//! forward edges create merges (several paths per source/sink pair) and a
//! few backward edges create cycles. Nodes left over after the regions are
//! isolated, as unreached dataflow nodes are in real exports.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factbase::{FactBase, FactBaseBuilder, LoadError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub nodes: usize,
    pub edges: usize,
    pub plausible_edges: usize,
    pub sources: usize,
    pub sinks: usize,
    pub apis: usize,
    /// Share of nodes placed in flow regions, in percent.
    pub region_percent: usize,
    /// Share of actual edges carrying a library flow mark, in percent.
    pub marked_percent: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// The fact counts of a 383-warning export: 8,101 nodes, 6,901 edges,
    /// 26 sources, 265 sinks and 85 third-party APIs.
    pub fn reference_scale() -> Self {
        Self {
            nodes: 8101,
            edges: 6901,
            plausible_edges: 300,
            sources: 26,
            sinks: 265,
            apis: 85,
            region_percent: 78,
            marked_percent: 15,
            seed: 0x7ace_1e25,
        }
    }
}

const PACKAGES: [&str; 6] = ["rpc", "remoting", "registry", "config", "common", "cluster"];
const VERBS: [&str; 8] = [
    "encode", "decode", "format", "parse", "append", "convert", "wrap", "read",
];

pub fn generate(cfg: &SynthConfig) -> Result<FactBase, LoadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = FactBaseBuilder::new();

    for i in 1..=cfg.nodes {
        let pkg = PACKAGES[i % PACKAGES.len()];
        let label = if i % 3 == 0 {
            format!("{}(v{})", VERBS[i % VERBS.len()], i)
        } else {
            format!("v{i}")
        };
        b.node(
            i as u64,
            label,
            format!("org/apache/dubbo/{pkg}/Mod{}.java", i / 100),
            (i % 400 + 1) as u32,
            (i % 60 + 1) as u32,
        );
    }

    let in_regions = (cfg.nodes * cfg.region_percent / 100).max(cfg.sources);
    let per_region = (in_regions / cfg.sources.max(1)).max(2);
    let regions: Vec<Vec<u64>> = (0..cfg.sources)
        .map(|r| {
            let start = r * per_region + 1;
            (start..start + per_region).map(|n| n as u64).collect()
        })
        .collect();

    let mut edges: Vec<(u64, u64)> = Vec::with_capacity(cfg.edges);
    for region in &regions {
        for j in 1..region.len() {
            if edges.len() == cfg.edges {
                break;
            }
            let parent = rng.gen_range(j.saturating_sub(8)..j);
            edges.push((region[parent], region[j]));
        }
    }
    while edges.len() < cfg.edges {
        let region = &regions[rng.gen_range(0..regions.len())];
        let a = rng.gen_range(0..region.len() - 1);
        let hop = rng.gen_range(1..=24).min(region.len() - 1 - a);
        if rng.gen_range(0..100) < 5 && a > 0 {
            // back edge
            let back = rng.gen_range(0..a);
            edges.push((region[a], region[back]));
        } else {
            edges.push((region[a], region[a + hop]));
        }
    }

    for (i, (s, d)) in edges.iter().enumerate() {
        b.edge(i as u64 + 1, *s, *d);
    }
    let first_plausible = edges.len() as u64 + 1;
    let mut plausible = Vec::with_capacity(cfg.plausible_edges);
    for next_edge in (first_plausible..).take(cfg.plausible_edges) {
        let region = &regions[rng.gen_range(0..regions.len())];
        let a = rng.gen_range(0..region.len() - 1);
        let hop = rng.gen_range(1..=40).min(region.len() - 1 - a);
        b.plausible_edge(next_edge, region[a], region[a + hop]);
        plausible.push(next_edge);
    }

    for api in 1..=cfg.apis {
        let pkg = PACKAGES[api % PACKAGES.len()];
        let verb = VERBS[api % VERBS.len()];
        b.api(
            api as u64,
            format!("com.thirdparty.{pkg}.Lib{api}#{verb}(java.lang.Object)"),
        );
    }
    let mut marked: Vec<u64> = (1..=edges.len() as u64).collect();
    marked.shuffle(&mut rng);
    marked.truncate((edges.len() * cfg.marked_percent / 100).max(cfg.apis.min(edges.len())));
    marked.sort_unstable();
    for (i, e) in marked.iter().enumerate() {
        // every API gets at least one edge
        let api = if i < cfg.apis {
            i + 1
        } else {
            rng.gen_range(1..=cfg.apis)
        };
        b.library_flow(*e, api as u64);
    }
    if cfg.apis > 0 {
        for e in &plausible {
            // a tenth stay unmarked and therefore inert
            if rng.gen_range(0..10) > 0 {
                b.library_flow(*e, rng.gen_range(1..=cfg.apis) as u64);
            }
        }
    }

    for region in &regions {
        b.source(region[0]);
    }
    let mut sinks = BTreeSet::new();
    let candidates: Vec<u64> = regions
        .iter()
        .flat_map(|r| r[1..].iter().copied())
        .collect();
    while sinks.len() < cfg.sinks.min(candidates.len()) {
        // favor the far end of each region so flows are long
        let region = &regions[rng.gen_range(0..regions.len())];
        let lo = region.len() / 3;
        let pick = region[rng.gen_range(lo.max(1)..region.len())];
        sinks.insert(pick);
    }
    for s in sinks {
        b.sink(s);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scale_counts() {
        let fb = generate(&SynthConfig::reference_scale()).unwrap();
        let c = fb.counts();
        assert_eq!(
            (c.nodes, c.edges, c.sources, c.sinks, c.apis),
            (8101, 6901, 26, 265, 85)
        );
        assert_eq!(c.plausible_edges, 300);
        let used: BTreeSet<_> = fb.library_flows().values().collect();
        assert_eq!(used.len(), 85);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut cfg = SynthConfig::reference_scale();
        cfg.nodes = 900;
        cfg.edges = 700;
        cfg.sinks = 40;
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }
}
