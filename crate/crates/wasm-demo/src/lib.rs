//! Browser bindings for the clique pooling demo page. Every export returns a
//! JSON string; the plain-Rust functions behind them are usable natively.

use clique_pool::generate::random_connected;
use clique_pool::grid::{
    make_grid, verify_grid_equivalence, window_pool_oracle, GridImage, GridSpec,
};
use clique_pool::hierarchy::{build_hierarchy, pool_once, HierarchyOptions};
use clique_pool::{FeatureMatrix, Readout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct ImageLevel {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major pixel values.
    pub pixels: Vec<f64>,
}

#[derive(Serialize)]
pub struct GridDemo {
    pub levels: Vec<ImageLevel>,
    /// Node count of the pooled grid graph after each level.
    pub node_counts: Vec<usize>,
    /// Whether clique pooling matched sliding-window max pooling everywhere.
    pub verified: bool,
}

/// Pools a random single-channel image `levels` times with max readout.
pub fn grid_demo(
    width: usize,
    height: usize,
    levels: u32,
    seed: u64,
) -> clique_pool::Result<GridDemo> {
    let spec = GridSpec::new(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = FeatureMatrix::from_fn(spec.pixels(), 1, |_, _| rng.gen::<f64>());
    let report = verify_grid_equivalence(spec, &x, levels)?;
    let image = GridImage::new(width, height, x)?;

    let mut out = vec![ImageLevel {
        level: 0,
        width,
        height,
        pixels: image.pixels.as_slice().to_vec(),
    }];
    for level in 1..=levels as usize {
        let pooled = window_pool_oracle(&image, 1 << level, Readout::Max)?;
        out.push(ImageLevel {
            level,
            width: pooled.width,
            height: pooled.height,
            pixels: pooled.pixels.as_slice().to_vec(),
        });
    }
    let mut g = make_grid(spec);
    let mut node_counts = vec![g.node_count()];
    for _ in 0..levels {
        g = pool_once(&g, None, Readout::Max)?.graph;
        node_counts.push(g.node_count());
    }
    Ok(GridDemo {
        levels: out,
        node_counts,
        verified: report.passed(),
    })
}

#[derive(Serialize)]
pub struct GraphLevel {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// Members of each pool formed from this level; empty on the last level.
    pub pools: Vec<Vec<usize>>,
    /// Original nodes each node of this level covers.
    pub covers: Vec<Vec<usize>>,
}

/// Full hierarchy of a random connected graph.
pub fn graph_demo(n: usize, p: f64, seed: u64) -> clique_pool::Result<Vec<GraphLevel>> {
    if n == 0 || !(0.0..=1.0).contains(&p) {
        return Err(clique_pool::Error::InvalidArgument(format!(
            "need n > 0 and p in [0, 1], got n={n}, p={p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_connected(n, p, &mut rng);
    let h = build_hierarchy(&g, None, HierarchyOptions::default())?;
    Ok(h.levels()
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let mut covers = vec![Vec::new(); l.graph.node_count()];
            for (v, img) in h.image_sets(k).iter().enumerate() {
                for &u in img {
                    covers[u].push(v);
                }
            }
            GraphLevel {
                nodes: l.graph.node_count(),
                edges: l.graph.edge_list(),
                pools: l
                    .assignment
                    .as_ref()
                    .map(|a| a.pools.iter().map(|p| p.members.clone()).collect())
                    .unwrap_or_default(),
                covers,
            }
        })
        .collect())
}

fn to_js<T: Serialize>(r: clique_pool::Result<T>) -> Result<String, JsValue> {
    match r {
        Ok(v) => serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())),
        Err(e) => Err(JsValue::from_str(&e.to_string())),
    }
}

#[wasm_bindgen(js_name = gridDemo)]
pub fn grid_demo_js(
    width: usize,
    height: usize,
    levels: u32,
    seed: u64,
) -> Result<String, JsValue> {
    to_js(grid_demo(width, height, levels, seed))
}

#[wasm_bindgen(js_name = graphDemo)]
pub fn graph_demo_js(n: usize, p: f64, seed: u64) -> Result<String, JsValue> {
    to_js(graph_demo(n, p, seed))
}

#[wasm_bindgen(js_name = chainLength)]
pub fn chain_length_js(length: usize, pools: u32) -> Result<usize, JsValue> {
    clique_pool::grid::chain_length_after(length, pools)
        .map_err(|e| JsValue::from_str(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_levels_shrink_by_one_window_step() {
        let d = grid_demo(8, 8, 3, 0).unwrap();
        assert!(d.verified);
        let sides: Vec<_> = d.levels.iter().map(|l| (l.width, l.height)).collect();
        assert_eq!(sides, vec![(8, 8), (7, 7), (5, 5), (1, 1)]);
        assert_eq!(d.node_counts, vec![64, 49, 25, 1]);
        let d = grid_demo(32, 32, 4, 0).unwrap();
        assert_eq!(d.node_counts, vec![1024, 961, 841, 625, 289]);
    }

    #[test]
    fn graph_demo_ends_in_one_node() {
        let levels = graph_demo(12, 0.2, 3).unwrap();
        assert_eq!(levels.last().unwrap().nodes, 1);
        assert_eq!(levels[0].covers.len(), 12);
        assert!(levels.last().unwrap().pools.is_empty());
        assert!(graph_demo(0, 0.5, 0).is_err());
    }
}
