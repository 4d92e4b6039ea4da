//! Regular grids: images as 8-connected pixel graphs and chains as their
//! one-dimensional slice.
//!
//! On a grid every maximal clique is a full square window and all of them tie,
//! so clique pooling with max readout is stride-1 sliding-window max pooling
//! with window sides 2, 3, 5, 9, 17, … . [`verify_grid_equivalence`] checks
//! this level by level against [`window_pool_oracle`].

use serde::{Deserialize, Serialize};

use crate::coarsen::Readout;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hierarchy::pool_once;
use crate::matrix::FeatureMatrix;

/// `width × height` pixel lattice; each pixel is joined to its eight neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(width: usize, height: usize) -> Self {
        GridSpec { width, height }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn node(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Path graph `0 - 1 - … - (length-1)`.
pub fn make_chain(length: usize) -> Graph {
    let edges: Vec<_> = (1..length).map(|i| (i - 1, i)).collect();
    Graph::from_edges(length, &edges).expect("indices in range")
}

/// 8-connected lattice with row-major node ids `y * width + x`.
pub fn make_grid(spec: GridSpec) -> Graph {
    let GridSpec { width, height } = spec;
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let v = spec.node(x, y);
            if x + 1 < width {
                edges.push((v, spec.node(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((v, spec.node(x, y + 1)));
                if x + 1 < width {
                    edges.push((v, spec.node(x + 1, y + 1)));
                }
                if x > 0 {
                    edges.push((v, spec.node(x - 1, y + 1)));
                }
            }
        }
    }
    Graph::from_edges(spec.pixels(), &edges).expect("indices in range")
}

/// Chain length after `n_pools` poolings: each pooling `i` removes `2^(i-1)`
/// nodes, `2^n - 1` in total.
pub fn chain_length_after(length: usize, n_pools: u32) -> Result<usize> {
    let removed = 1usize
        .checked_shl(n_pools)
        .and_then(|p| p.checked_sub(1))
        .filter(|&r| r < usize::MAX / 2)
        .ok_or_else(|| Error::InvalidArgument(format!("{n_pools} pools is out of range")))?;
    if length < removed + 1 {
        return Err(Error::InvalidArgument(format!(
            "a chain of length {length} collapses before {n_pools} pools (needs length ≥ {})",
            removed + 1
        )));
    }
    Ok(length - removed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSchedule {
    /// Window side per pooling level, starting with level 1.
    pub sizes: Vec<usize>,
    pub stride: usize,
}

/// Window sides `[2, 3, 5, 9, 17, …]`: 2 at level 1, `2^(i-1) + 1` after.
pub fn pool_schedule(n_pools: u32) -> Result<PoolSchedule> {
    if n_pools == 0 {
        return Err(Error::InvalidArgument(
            "a pool schedule needs at least one pool".into(),
        ));
    }
    if n_pools > 62 {
        return Err(Error::InvalidArgument(format!(
            "{n_pools} pools is out of range"
        )));
    }
    let sizes = (1..=n_pools)
        .map(|i| if i == 1 { 2 } else { (1usize << (i - 1)) + 1 })
        .collect();
    Ok(PoolSchedule { sizes, stride: 1 })
}

/// Row-major `width × height` image with `F` channels per pixel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridImage {
    pub width: usize,
    pub height: usize,
    pub pixels: FeatureMatrix,
}

impl GridImage {
    pub fn new(width: usize, height: usize, pixels: FeatureMatrix) -> Result<Self> {
        if pixels.rows() != width * height {
            return Err(Error::Shape(format!(
                "{} pixel rows for a {width}x{height} image",
                pixels.rows()
            )));
        }
        Ok(GridImage {
            width,
            height,
            pixels,
        })
    }

    pub fn at(&self, x: usize, y: usize) -> &[f64] {
        self.pixels.row(y * self.width + x)
    }
}

/// Stride-1 sliding-window pooling without padding.
///
/// An axis of length 1 is treated as absent, so a `L × 1` image pools like a
/// chain with a `window × 1` window.
pub fn window_pool_oracle(image: &GridImage, window: usize, readout: Readout) -> Result<GridImage> {
    let span = |len: usize| if len == 1 { 1 } else { window };
    let (wx, wy) = (span(image.width), span(image.height));
    if window == 0 || wx > image.width || wy > image.height {
        return Err(Error::InvalidArgument(format!(
            "window {window} does not fit a {}x{} image",
            image.width, image.height
        )));
    }
    let ow = image.width - wx + 1;
    let oh = image.height - wy + 1;
    let f = image.pixels.cols();
    let mut out = FeatureMatrix::zeros(ow * oh, f);
    for oy in 0..oh {
        for ox in 0..ow {
            let row = out.row_mut(oy * ow + ox);
            match readout {
                Readout::Max => row.fill(f64::NEG_INFINITY),
                Readout::Mean => row.fill(0.0),
            }
            for y in oy..oy + wy {
                for x in ox..ox + wx {
                    for (o, &v) in row.iter_mut().zip(image.at(x, y)) {
                        match readout {
                            Readout::Max => *o = o.max(v),
                            Readout::Mean => *o += v,
                        }
                    }
                }
            }
            if readout == Readout::Mean {
                let k = (wx * wy) as f64;
                row.iter_mut().for_each(|o| *o /= k);
            }
        }
    }
    GridImage::new(ow, oh, out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub x: usize,
    pub y: usize,
    pub channel: usize,
    pub pooled: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLevelReport {
    pub level: usize,
    /// Grid side lengths entering this pooling level.
    pub input_size: (usize, usize),
    pub output_size: (usize, usize),
    pub expected_window: usize,
    /// Side of every maximal clique observed on the input grid; `None` when
    /// the cliques are not all squares of one size.
    pub clique_side: Option<usize>,
    /// Axis reach of the input grid's adjacency, in grid steps.
    pub reach: Option<usize>,
    pub expected_reach: usize,
    pub cumulative_window: usize,
    pub positions_match: bool,
    pub first_mismatch: Option<Mismatch>,
}

impl GridLevelReport {
    pub fn passed(&self) -> bool {
        self.clique_side == Some(self.expected_window)
            && self.reach == Some(self.expected_reach)
            && self.positions_match
            && self.first_mismatch.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub spec: GridSpec,
    pub levels: Vec<GridLevelReport>,
}

impl GridReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(GridLevelReport::passed)
    }
}

/// Checks, for each of `n_levels` poolings of an 8-connected grid with max
/// readout, that cliques are square windows of the scheduled size, that the
/// adjacency reach doubles, that pooled nodes sit at sliding-window positions,
/// and that pooled features equal sliding-window max pooling of the original
/// image with window `2^level`.
pub fn verify_grid_equivalence(
    spec: GridSpec,
    features: &FeatureMatrix,
    n_levels: u32,
) -> Result<GridReport> {
    if features.rows() != spec.pixels() {
        return Err(Error::Shape(format!(
            "{} feature rows for a {}x{} grid",
            features.rows(),
            spec.width,
            spec.height
        )));
    }
    chain_length_after(spec.width.min(spec.height), n_levels)?;
    let schedule = pool_schedule(n_levels.max(1))?;
    let image = GridImage::new(spec.width, spec.height, features.clone())?;

    let mut graph = make_grid(spec);
    let mut feats = features.clone();
    let mut size = (spec.width, spec.height);
    let mut positions: Vec<(usize, usize)> = (0..spec.pixels())
        .map(|v| (v % spec.width, v / spec.width))
        .collect();
    let mut levels = Vec::new();

    for level in 1..=n_levels as usize {
        let expected_window = schedule.sizes[level - 1];
        let expected_reach = 1usize << (level - 1);
        let reach = grid_reach(&graph, &positions, size);

        let step = pool_once(&graph, Some(&feats), Readout::Max)?;
        let clique_side = common_square_side(step.cliques.iter().map(|c| c.as_slice()), &positions);

        let side = clique_side.unwrap_or(expected_window);
        let out_size = (
            size.0.saturating_sub(side) + 1,
            size.1.saturating_sub(side) + 1,
        );
        let pool_positions: Vec<(usize, usize)> = step
            .assignment
            .pools
            .iter()
            .map(|p| {
                let xs = p.members.iter().map(|&m| positions[m].0).min().unwrap();
                let ys = p.members.iter().map(|&m| positions[m].1).min().unwrap();
                (xs, ys)
            })
            .collect();
        let positions_match = clique_side.is_some()
            && step
                .assignment
                .pools
                .iter()
                .all(|p| p.members.len() == side * side)
            && is_grid_layout(&pool_positions, out_size);

        let cumulative_window = 1usize << level;
        let pooled = step.features.as_ref().expect("features were supplied");
        // Values are only comparable once pooled nodes map onto window positions.
        let first_mismatch = if positions_match {
            let oracle = window_pool_oracle(&image, cumulative_window, Readout::Max)?;
            first_difference(pooled, &pool_positions, &oracle)
        } else {
            None
        };

        levels.push(GridLevelReport {
            level,
            input_size: size,
            output_size: out_size,
            expected_window,
            clique_side,
            reach,
            expected_reach,
            cumulative_window,
            positions_match,
            first_mismatch,
        });

        graph = step.graph;
        feats = step.features.unwrap();
        positions = pool_positions;
        size = out_size;
    }
    Ok(GridReport { spec, levels })
}

/// Reach `r` such that the graph is exactly "Chebyshev distance ≤ r" on the
/// given positions, or `None` if it is not of that form.
fn grid_reach(g: &Graph, positions: &[(usize, usize)], size: (usize, usize)) -> Option<usize> {
    let cheb = |a: (usize, usize), b: (usize, usize)| a.0.abs_diff(b.0).max(a.1.abs_diff(b.1));
    let reach = g
        .edges()
        .map(|(i, j)| cheb(positions[i], positions[j]))
        .max()
        .unwrap_or(0);
    let (w, h) = size;
    let mut expected = 0usize;
    for y in 0..h {
        for x in 0..w {
            let nx = (x + reach).min(w - 1) - x.saturating_sub(reach) + 1;
            let ny = (y + reach).min(h - 1) - y.saturating_sub(reach) + 1;
            expected += nx * ny - 1;
        }
    }
    (expected / 2 == g.edge_count()).then_some(reach)
}

fn common_square_side<'a>(
    cliques: impl Iterator<Item = &'a [usize]>,
    positions: &[(usize, usize)],
) -> Option<usize> {
    let mut side = None;
    for c in cliques {
        let (x0, x1) = min_max(c.iter().map(|&v| positions[v].0));
        let (y0, y1) = min_max(c.iter().map(|&v| positions[v].1));
        let s = x1 - x0 + 1;
        if y1 - y0 + 1 != s || c.len() != s * s {
            return None;
        }
        match side {
            None => side = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
    }
    side
}

fn min_max(it: impl Iterator<Item = usize>) -> (usize, usize) {
    it.fold((usize::MAX, 0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn is_grid_layout(positions: &[(usize, usize)], size: (usize, usize)) -> bool {
    if positions.len() != size.0 * size.1 {
        return false;
    }
    let mut seen = vec![false; positions.len()];
    for &(x, y) in positions {
        if x >= size.0 || y >= size.1 || std::mem::replace(&mut seen[y * size.0 + x], true) {
            return false;
        }
    }
    true
}

fn first_difference(
    pooled: &FeatureMatrix,
    positions: &[(usize, usize)],
    oracle: &GridImage,
) -> Option<Mismatch> {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by_key(|&p| (positions[p].1, positions[p].0));
    for p in order {
        let (x, y) = positions[p];
        for (channel, (&a, &b)) in pooled.row(p).iter().zip(oracle.at(x, y)).enumerate() {
            if a != b {
                return Some(Mismatch {
                    x,
                    y,
                    channel,
                    pooled: a,
                    oracle: b,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_hierarchy, HierarchyOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chains() {
        assert_eq!(make_chain(1).node_count(), 1);
        assert_eq!(make_chain(3).degrees(), vec![1, 2, 1]);
        let h = build_hierarchy(&make_chain(8), None, HierarchyOptions::default()).unwrap();
        assert_eq!(h.node_counts(), vec![8, 7, 5, 1]);
    }

    #[test]
    fn grids() {
        assert_eq!(make_grid(GridSpec::new(2, 2)), Graph::complete(4));
        let g = make_grid(GridSpec::new(4, 4));
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.degree(1), 5);
        assert_eq!(g.degree(5), 8);
    }

    #[test]
    fn chain_lengths() {
        assert_eq!(chain_length_after(32, 5).unwrap(), 1);
        assert_eq!(chain_length_after(7, 0).unwrap(), 7);
        assert_eq!(chain_length_after(10, 3).unwrap(), 3);
        assert!(chain_length_after(10, 4).is_err());
        assert!(chain_length_after(32, 6).is_err());
        assert!(chain_length_after(32, 200).is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(pool_schedule(5).unwrap().sizes, vec![2, 3, 5, 9, 17]);
        assert_eq!(pool_schedule(1).unwrap().sizes, vec![2]);
        assert_eq!(pool_schedule(6).unwrap().sizes, vec![2, 3, 5, 9, 17, 33]);
        assert_eq!(pool_schedule(3).unwrap().stride, 1);
        assert!(pool_schedule(0).is_err());
    }

    #[test]
    fn schedule_matches_chain_cliques() {
        // Clique sizes observed while pooling a chain of 64.
        let h = build_hierarchy(&make_chain(64), None, HierarchyOptions::default()).unwrap();
        let sizes: Vec<usize> = h.levels()[..6]
            .iter()
            .map(|l| l.cliques.max_size())
            .collect();
        assert_eq!(sizes, pool_schedule(6).unwrap().sizes);
    }

    #[test]
    fn oracle_examples() {
        let img = GridImage::new(
            2,
            2,
            FeatureMatrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            window_pool_oracle(&img, 2, Readout::Max)
                .unwrap()
                .pixels
                .as_slice(),
            &[4.0]
        );

        let row = GridImage::new(
            3,
            1,
            FeatureMatrix::from_vec(3, 1, vec![1.0, 5.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            window_pool_oracle(&row, 2, Readout::Max)
                .unwrap()
                .pixels
                .as_slice(),
            &[5.0, 5.0]
        );
        assert!(window_pool_oracle(&row, 4, Readout::Max).is_err());

        // 4x4 ramp: pixel value = y*4 + x; 2x2 block mean = value(x,y) + 2.5.
        let ramp = GridImage::new(4, 4, FeatureMatrix::from_fn(16, 1, |i, _| i as f64)).unwrap();
        let m = window_pool_oracle(&ramp, 2, Readout::Mean).unwrap();
        assert_eq!((m.width, m.height), (3, 3));
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(m.at(x, y)[0], (y * 4 + x) as f64 + 2.5);
            }
        }
        assert!(window_pool_oracle(&ramp, 5, Readout::Max).is_err());
    }

    #[test]
    fn one_dimensional_window() {
        // A 1×3 image as a 3-wide, 1-high strip pools with a 1-row window; the
        // sliding max over pairs is what the chain computes at level 1.
        let g = make_chain(3);
        let x = FeatureMatrix::from_vec(3, 1, vec![1.0, 5.0, 2.0]).unwrap();
        let step = pool_once(&g, Some(&x), Readout::Max).unwrap();
        assert_eq!(step.features.unwrap().as_slice(), &[5.0, 5.0]);
    }

    fn random_image(spec: GridSpec, f: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::from_fn(spec.pixels(), f, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn equivalence_small_grids() {
        let spec = GridSpec::new(4, 4);
        let r = verify_grid_equivalence(spec, &random_image(spec, 2, 1), 1).unwrap();
        assert!(r.passed(), "{r:?}");
        let spec = GridSpec::new(8, 8);
        let x = random_image(spec, 3, 2);
        let r = verify_grid_equivalence(spec, &x, 3).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.levels[2].output_size, (1, 1));
        assert_eq!(
            r.levels
                .iter()
                .map(|l| l.reach.unwrap())
                .collect::<Vec<_>>(),
            vec![1, 2, 4]
        );
    }

    #[test]
    fn equivalence_rectangular_grid() {
        let spec = GridSpec::new(8, 13);
        let r = verify_grid_equivalence(spec, &random_image(spec, 1, 3), 3).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.levels[2].output_size, (1, 6));
        assert!(verify_grid_equivalence(spec, &random_image(spec, 1, 3), 4).is_err());
    }
}
