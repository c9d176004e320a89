//! Lift builders: stochastic bridges, clock and node-clock lifts, the
//! diameter-time mixers, the Diaconis cycle lift and the four-cycle lift.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, diameter, rooted_spanning_tree, Graph};
use crate::lift::{InitMap, Lift, LiftMap, Metadata};
use crate::markov::{Distribution, StochasticMatrix, TimeVaryingChain, SUM_TOL};

pub use crate::lift::validate_lift;

/// Residual accepted on `P' pi_tilde = y`.
pub const CORRECTION_TOL: f64 = 1e-10;
/// Halvings of `gamma` tried by the irreducible mixer before giving up.
pub const GAMMA_RETRIES: usize = 20;

fn check_dist(g: &Graph, p: &Distribution) -> Result<()> {
    if p.len() == g.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: g.n(), found: p.len() })
    }
}

/// A local chain of length `D = diameter(g)` moving `p_src` onto `p_dst`.
///
/// Each commodity `p_src(i) p_dst(u)` waits at `i` for `D - d(i, u)` steps
/// and then walks the canonical shortest path to `u`; the aggregate flow
/// at each step is normalized per column (empty columns hold).
pub fn stochastic_bridge(g: &Graph, p_src: &Distribution, p_dst: &Distribution) -> Result<TimeVaryingChain> {
    check_dist(g, p_src)?;
    check_dist(g, p_dst)?;
    let n = g.n();
    let d = diameter(g)?;
    let mut flows = vec![DMatrix::<f64>::zeros(n, n); d];
    for i in 0..n {
        for u in 0..n {
            let m = p_src[i] * p_dst[u];
            if m == 0.0 {
                continue;
            }
            let path = graph::shortest_path(g, i, u)?;
            let wait = d + 1 - path.len();
            let pos = |t: usize| path[t.saturating_sub(wait)];
            for (t, flow) in flows.iter_mut().enumerate() {
                flow[(pos(t + 1), pos(t))] += m;
            }
        }
    }
    let steps = flows
        .into_iter()
        .map(|mut f| {
            for i in 0..n {
                let mass = f.column(i).sum();
                if mass == 0.0 {
                    f[(i, i)] = 1.0;
                } else {
                    f.column_mut(i).unscale_mut(mass);
                }
            }
            StochasticMatrix::renormalized(f, Some(g.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    TimeVaryingChain::new(n, steps)
}

/// Bridges from every point mass `e_i` to `pi`.
pub fn bridges_to(g: &Graph, pi: &Distribution) -> Result<Vec<TimeVaryingChain>> {
    (0..g.n())
        .map(|i| stochastic_bridge(g, &Distribution::point(g.n(), i), pi))
        .collect()
}

fn check_chain(g: &Graph, chain: &TimeVaryingChain) -> Result<usize> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    if chain.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: chain.n() });
    }
    Ok(chain.len())
}

fn layered_map(n: usize, layers: usize, width: usize) -> Result<LiftMap> {
    LiftMap::new(n, (0..layers * width).map(|l| l % n).collect())
}

/// Lift on `(T+1) N` nodes `(t, v)` running `P(1), ..., P(T)` and then
/// holding in the top layer; `F p = e_0 (x) p`.
pub fn clock_lift(g: &Graph, chain: &TimeVaryingChain) -> Result<Lift> {
    let t_len = check_chain(g, chain)?;
    let n = g.n();
    let idx = |t: usize, v: usize| t * n + v;
    let mut a = DMatrix::zeros((t_len + 1) * n, (t_len + 1) * n);
    for t in 1..=t_len {
        let p = chain.step(t);
        for v in 0..n {
            for w in 0..n {
                a[(idx(t, w), idx(t - 1, v))] = p.get(w, v);
            }
        }
    }
    for v in 0..n {
        a[(idx(t_len, v), idx(t_len, v))] = 1.0;
    }
    let map = layered_map(n, t_len + 1, n)?;
    let f = InitMap::from_points(&map, &(0..n).collect::<Vec<_>>())?;
    Lift::new(g.clone(), map, a, Some(f), Metadata::new("clock").with("T", t_len))
}

/// Lift on `T N` nodes cycling through `P(1), ..., P(T)` forever.
pub fn periodic_clock_lift(g: &Graph, chain: &TimeVaryingChain) -> Result<Lift> {
    let t_len = check_chain(g, chain)?;
    let n = g.n();
    let mut a = DMatrix::zeros(t_len * n, t_len * n);
    for t in 1..=t_len {
        let p = chain.step(t);
        let (from, to) = ((t - 1) * n, (t % t_len) * n);
        for v in 0..n {
            for w in 0..n {
                a[(to + w, from + v)] = p.get(w, v);
            }
        }
    }
    let map = layered_map(n, t_len, n)?;
    let f = InitMap::from_points(&map, &(0..n).collect::<Vec<_>>())?;
    Lift::new(g.clone(), map, a, Some(f), Metadata::new("periodic-clock").with("T", t_len))
}

fn check_per_node(g: &Graph, per_node: &[TimeVaryingChain]) -> Result<usize> {
    let n = g.n();
    if per_node.len() != n {
        return Err(Error::LengthMismatch(format!("{} chains for {n} nodes", per_node.len())));
    }
    let t_len = check_chain(g, &per_node[0])?;
    for c in per_node {
        if check_chain(g, c)? != t_len {
            return Err(Error::LengthMismatch("per-node chains differ in length".into()));
        }
    }
    Ok(t_len)
}

/// Index of `(t, v0, v)` in a node-clock lift over `n` base nodes.
pub fn node_clock_index(n: usize, t: usize, v0: usize, v: usize) -> usize {
    (t * n + v0) * n + v
}

/// Writes the per-node sequences into layers `0..=T` of a node-clock matrix.
fn fill_node_clock_layers(a: &mut DMatrix<f64>, per_node: &[TimeVaryingChain]) {
    let n = per_node.len();
    for (v0, chain) in per_node.iter().enumerate() {
        for t in 1..=chain.len() {
            let p = chain.step(t);
            for v in 0..n {
                for w in 0..n {
                    let x = p.get(w, v);
                    if x != 0.0 {
                        a[(node_clock_index(n, t, v0, w), node_clock_index(n, t - 1, v0, v))] = x;
                    }
                }
            }
        }
    }
}

/// Re-draws the remembered start from `pi` between layers `T` and `T+1`.
fn fill_reinit(a: &mut DMatrix<f64>, n: usize, t_len: usize, pi: &Distribution) {
    for v0 in 0..n {
        for v in 0..n {
            for w0 in 0..n {
                a[(node_clock_index(n, t_len + 1, w0, v), node_clock_index(n, t_len, v0, v))] = pi[w0];
            }
        }
    }
}

fn diagonal_init(map: &LiftMap, n: usize) -> Result<InitMap> {
    let points: Vec<usize> = (0..n).map(|i| node_clock_index(n, 0, i, i)).collect();
    InitMap::from_points(map, &points)
}

/// Lift on `(T+2) N^2` nodes `(t, v0, v)`: a walker started at `v0` follows
/// the chain of `v0`, then the start is redrawn from `pi` and the top layer
/// holds. `F e_i = e_(0, i, i)`.
pub fn node_clock_lift(g: &Graph, per_node: &[TimeVaryingChain], pi: &Distribution) -> Result<Lift> {
    let t_len = check_per_node(g, per_node)?;
    check_dist(g, pi)?;
    let n = g.n();
    let size = (t_len + 2) * n * n;
    let mut a = DMatrix::zeros(size, size);
    fill_node_clock_layers(&mut a, per_node);
    fill_reinit(&mut a, n, t_len, pi);
    for v0 in 0..n {
        for v in 0..n {
            let k = node_clock_index(n, t_len + 1, v0, v);
            a[(k, k)] = 1.0;
        }
    }
    let map = layered_map(n, (t_len + 2) * n, n)?;
    let f = diagonal_init(&map, n)?;
    Lift::new(g.clone(), map, a, Some(f), Metadata::new("node-clock").with("T", t_len))
}

/// Lift on `(T+1) N^2` nodes where `(T, v0, v)` wraps to `(0, v, v)`, so
/// every walker restarts the chain of its current node.
pub fn periodic_node_clock_lift(g: &Graph, per_node: &[TimeVaryingChain]) -> Result<Lift> {
    let t_len = check_per_node(g, per_node)?;
    let n = g.n();
    let size = (t_len + 1) * n * n;
    let mut a = DMatrix::zeros(size, size);
    fill_node_clock_layers(&mut a, per_node);
    for v0 in 0..n {
        for v in 0..n {
            a[(node_clock_index(n, 0, v, v), node_clock_index(n, t_len, v0, v))] = 1.0;
        }
    }
    let map = layered_map(n, (t_len + 1) * n, n)?;
    let f = diagonal_init(&map, n)?;
    Lift::new(g.clone(), map, a, Some(f), Metadata::new("periodic-node-clock").with("T", t_len))
}

/// Which diameter-time mixer to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixerVariant {
    /// Absorbing top layer `I (x) I`.
    Reducible,
    /// Absorbing top layer `I (x) P` for a reference `P`.
    Flows,
    /// Top layer `(1 - gamma) I (x) P_tilde` with a `gamma` jump back to the start layer.
    Irreducible,
}

#[derive(Clone, Debug)]
pub struct MixerParams {
    pub gamma: f64,
    pub reference: Option<StochasticMatrix>,
}

impl Default for MixerParams {
    fn default() -> Self {
        MixerParams {
            gamma: 1e-3,
            reference: None,
        }
    }
}

/// A diameter-time mixer and, for the irreducible variant, its parameters.
#[derive(Clone, Debug)]
pub struct DiameterMixer {
    pub lift: Lift,
    /// The `gamma` actually used after any halving.
    pub gamma: Option<f64>,
    /// The corrected top-layer chain `P_tilde = P + P'`.
    pub top_chain: Option<StochasticMatrix>,
    pub pi_tilde: Option<Distribution>,
}

pub fn diameter_mixer(g: &Graph, pi: &Distribution, variant: MixerVariant, params: &MixerParams) -> Result<DiameterMixer> {
    check_dist(g, pi)?;
    if !pi.has_full_support() {
        return Err(Error::InvalidDistribution("the target needs full support".into()));
    }
    if g.n() < 2 {
        return Err(Error::BadSize("the mixer needs at least two nodes".into()));
    }
    let bridges = bridges_to(g, pi)?;
    match variant {
        MixerVariant::Reducible => {
            let lift = node_clock_lift(g, &bridges, pi)?;
            let meta = Metadata::new("diameter").with("variant", "reducible");
            Ok(DiameterMixer {
                lift: relabel(lift, meta)?,
                gamma: None,
                top_chain: None,
                pi_tilde: None,
            })
        }
        MixerVariant::Flows => {
            let p = params.reference.as_ref().ok_or(Error::MissingReferenceChain)?;
            let p = p.clone().with_locality(g)?;
            p.require_stationary(pi, SUM_TOL)?;
            let lift = node_clock_lift(g, &bridges, pi)?;
            let n = g.n();
            let t_len = bridges[0].len();
            let mut a = lift.chain().matrix().clone();
            for v0 in 0..n {
                for v in 0..n {
                    let from = node_clock_index(n, t_len + 1, v0, v);
                    for w in 0..n {
                        a[(node_clock_index(n, t_len + 1, v0, w), from)] = p.get(w, v);
                    }
                }
            }
            let lift = Lift::new(
                g.clone(),
                lift.map().clone(),
                a,
                lift.init().cloned(),
                Metadata::new("diameter").with("variant", "flows"),
            )?;
            Ok(DiameterMixer {
                lift,
                gamma: None,
                top_chain: Some(p),
                pi_tilde: None,
            })
        }
        MixerVariant::Irreducible => {
            let p = match &params.reference {
                Some(p) => p.clone().with_locality(g)?,
                None => StochasticMatrix::metropolis(g, pi)?,
            };
            p.require_stationary(pi, SUM_TOL)?;
            let max = 1.0;
            if !(params.gamma > 0.0 && params.gamma < max) {
                return Err(Error::BadGamma { gamma: params.gamma, max });
            }
            let mut gamma = params.gamma;
            let mut last_err = None;
            for _ in 0..=GAMMA_RETRIES {
                match irreducible_mixer(g, pi, &p, &bridges, gamma) {
                    Ok(m) => return Ok(m),
                    Err(e @ (Error::GammaTooLarge(_) | Error::NegativeEntry { .. })) => {
                        last_err = Some(e);
                        gamma /= 2.0;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::GammaTooLarge(format!(
                "no admissible gamma after {GAMMA_RETRIES} halvings: {}",
                last_err.map_or_else(String::new, |e| e.to_string())
            )))
        }
    }
}

fn relabel(l: Lift, meta: Metadata) -> Result<Lift> {
    Lift::new(l.base().clone(), l.map().clone(), l.chain().matrix().clone(), l.init().cloned(), meta)
}

fn irreducible_mixer(
    g: &Graph,
    pi: &Distribution,
    p: &StochasticMatrix,
    bridges: &[TimeVaryingChain],
    gamma: f64,
) -> Result<DiameterMixer> {
    let n = g.n();
    let t_len = bridges[0].len();

    // average marginal over the bridge layers, one column per start
    let mut b = DMatrix::zeros(n, n);
    for (i, chain) in bridges.iter().enumerate() {
        for x in chain.trajectory(&Distribution::point(n, i))? {
            for (k, v) in x.as_slice().iter().enumerate() {
                b[(k, i)] += v / (t_len + 1) as f64;
            }
        }
    }
    let layers = (t_len + 1) as f64;
    let w = 1.0 / (1.0 + layers * gamma);
    let m = DMatrix::identity(n, n) * w + b * (1.0 - w);
    let pi_tilde = m
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(pi.as_slice()))
        .ok_or_else(|| Error::GammaTooLarge("singular system for pi_tilde".into()))?;
    if let Some(k) = pi_tilde.iter().position(|&v| v <= 0.0) {
        return Err(Error::GammaTooLarge(format!("pi_tilde[{k}] = {} is not positive", pi_tilde[k])));
    }
    let pi_tilde: Vec<f64> = pi_tilde.iter().copied().collect();

    // top layer must satisfy P_tilde pi_tilde = (pi_tilde - gamma pi) / (1 - gamma)
    let p_pt = p.apply(&pi_tilde);
    let y: Vec<f64> = (0..n)
        .map(|k| (pi_tilde[k] - gamma * pi[k]) / (1.0 - gamma) - p_pt[k])
        .collect();
    let correction = spanning_tree_correction(g, p, &pi_tilde, &y)?;
    let top = StochasticMatrix::new(p.matrix() + correction, Some(g.clone()))?;

    let size = (t_len + 2) * n * n;
    let mut a = DMatrix::zeros(size, size);
    fill_node_clock_layers(&mut a, bridges);
    fill_reinit(&mut a, n, t_len, pi);
    for v0 in 0..n {
        for v in 0..n {
            let from = node_clock_index(n, t_len + 1, v0, v);
            for w in 0..n {
                a[(node_clock_index(n, t_len + 1, v0, w), from)] += (1.0 - gamma) * top.get(w, v);
            }
            a[(node_clock_index(n, 0, v, v), from)] += gamma;
        }
    }

    // keep what the start layer reaches
    let starts: Vec<usize> = (0..n).map(|i| node_clock_index(n, 0, i, i)).collect();
    let keep = forward_closure(&a, &starts);
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |r, c| a[(keep[r], keep[c])]);
    let map = LiftMap::new(n, keep.iter().map(|&k| k % n).collect())?;
    let points: Vec<usize> = starts
        .iter()
        .map(|s| keep.binary_search(s).expect("start nodes are kept"))
        .collect();
    let f = InitMap::from_points(&map, &points)?;
    let meta = Metadata::new("diameter").with("variant", "irreducible").with("gamma", gamma);
    let lift = Lift::new(g.clone(), map, sub, Some(f), meta)?;
    if !lift.lifted().is_strongly_connected() {
        return Err(Error::InvalidLift("pruned mixer is not strongly connected".into()));
    }
    Ok(DiameterMixer {
        lift,
        gamma: Some(gamma),
        top_chain: Some(top),
        pi_tilde: Some(Distribution::new(pi_tilde)?),
    })
}

/// Sorted indices reachable from `starts` along nonzero entries of `a`.
fn forward_closure(a: &DMatrix<f64>, starts: &[usize]) -> Vec<usize> {
    let size = a.ncols();
    let mut seen = vec![false; size];
    let mut stack = starts.to_vec();
    for &s in starts {
        seen[s] = true;
    }
    while let Some(c) = stack.pop() {
        for r in 0..size {
            if !seen[r] && a[(r, c)] != 0.0 {
                seen[r] = true;
                stack.push(r);
            }
        }
    }
    (0..size).filter(|&k| seen[k]).collect()
}

/// `P'` supported on a rooted spanning tree of large entries of `P` plus the
/// diagonal, with zero column sums and `P' pi_tilde = y`.
///
/// The tree uses arcs `parent -> child` with `P_{child,parent} >= beta` for
/// the largest `beta` that still spans; entries are set from the leaves up.
pub fn spanning_tree_correction(g: &Graph, p: &StochasticMatrix, pi_tilde: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let n = g.n();
    if p.n() != n || pi_tilde.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let total: f64 = y.iter().sum();
    if total.abs() > CORRECTION_TOL {
        return Err(Error::InvalidParameter(format!("correction target sums to {total:.3e}")));
    }
    if pi_tilde.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidDistribution("pi_tilde must be positive".into()));
    }
    let mut correction = DMatrix::zeros(n, n);
    if y.iter().all(|&v| v == 0.0) {
        return Ok(correction);
    }

    let reversed = g.reversed();
    let tree_at = |beta: f64| rooted_spanning_tree(&reversed, |child, parent| p.get(child, parent) >= beta, 0);
    let mut levels: Vec<f64> = g.arcs().map(|(i, j)| p.get(j, i)).filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.is_empty() || tree_at(levels[0]).is_err() {
        return Err(Error::NoSpanningTree { root: 0 });
    }
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if tree_at(levels[mid]).is_ok() {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let tree = tree_at(levels[lo])?;

    for &k in &tree.leaves_first {
        if k == tree.root {
            continue;
        }
        let parent = tree.parent[k];
        let value = (y[k] - correction[(k, k)] * pi_tilde[k]) / pi_tilde[parent];
        correction[(k, parent)] = value;
        correction[(parent, parent)] -= value;
    }

    let residual = (&correction * nalgebra::DVector::from_column_slice(pi_tilde))
        .iter()
        .zip(y)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if residual > CORRECTION_TOL {
        return Err(Error::InvalidParameter(format!("correction residual {residual:.3e}")));
    }
    for i in 0..n {
        for j in 0..n {
            let value = p.get(i, j) + correction[(i, j)];
            if !(-1e-12..=1.0 + 1e-12).contains(&value) {
                return Err(Error::NegativeEntry { row: i, col: j, value });
            }
        }
    }
    Ok(correction)
}

fn diaconis_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::BadSize(format!("Diaconis lift needs even N >= 4, got {n}")));
    }
    let stay = 1.0 - 1.0 / n as f64;
    let flip = 1.0 / n as f64;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let (up, down) = ((k + 1) % n, (k + n - 1) % n);
        a[(up, k)] = stay;
        a[(n + up, k)] = flip;
        a[(n + down, n + k)] = stay;
        a[(down, n + k)] = flip;
    }
    Ok(a)
}

/// Lift of `cycle(N)` on `2N` nodes: `(+, k)` is node `k` and `(-, k)` is
/// node `N + k`. The walker keeps its direction with probability `1 - 1/N`.
pub fn diaconis_cycle_lift(n: usize) -> Result<Lift> {
    let a = diaconis_matrix(n)?;
    let map = layered_map(n, 2, n)?;
    Lift::new(graph::cycle(n)?, map, a, None, Metadata::new("diaconis").with("N", n))
}

/// `hold I + (1 - hold) A` for the Diaconis chain `A`. On even `N` the plain
/// chain is periodic, so only this variant has a finite full mixing time.
pub fn lazy_diaconis_cycle_lift(n: usize, hold: f64) -> Result<Lift> {
    if !(0.0..1.0).contains(&hold) {
        return Err(Error::InvalidParameter(format!("hold {hold} not in [0, 1)")));
    }
    let a = diaconis_matrix(n)? * (1.0 - hold) + DMatrix::identity(2 * n, 2 * n) * hold;
    let map = layered_map(n, 2, n)?;
    Lift::new(
        graph::cycle(n)?,
        map,
        a,
        None,
        Metadata::new("diaconis").with("N", n).with("hold", hold),
    )
}

/// The three-layer lift of `cycle(4)` together with the chain whose flows it matches.
#[derive(Clone, Debug)]
pub struct FourCycle {
    pub lift: Lift,
    pub reference: StochasticMatrix,
    pub phi: f64,
    pub epsilon: f64,
}

/// Layers `s = 0, 1, 2` at indices `4 s + v`. Layer 0 spreads to both
/// neighbours, layer 1 spreads over three nodes, and layer 2 returns to
/// layer 0 with probability `gamma` or otherwise moves like the reference.
pub fn four_cycle_lift(delta: f64, gamma: f64) -> Result<FourCycle> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} not in (0, 1)")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::BadGamma { gamma, max: 1.0 });
    }
    let phi = 1.5 * gamma / (1.0 + 2.0 * gamma);
    let epsilon = (1.0 - (1.0 + gamma / 2.0) / (1.0 - gamma) * (1.0 - 2.0 * delta)) / 2.0;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::GammaTooLargeForDelta { gamma, delta, epsilon });
    }
    let idx = |s: usize, v: usize| 4 * s + v;
    let (up, down) = (|v: usize| (v + 1) % 4, |v: usize| (v + 3) % 4);
    // partner across the "delta" edges {0,1}, {2,3}
    let near = |v: usize| v ^ 1;
    let far = |v: usize| 3 - v;
    let mut a = DMatrix::zeros(12, 12);
    for v in 0..4 {
        a[(idx(1, up(v)), idx(0, v))] = 0.5;
        a[(idx(1, down(v)), idx(0, v))] = 0.5;
        a[(idx(2, v), idx(1, v))] = 0.5;
        a[(idx(2, up(v)), idx(1, v))] = 0.25;
        a[(idx(2, down(v)), idx(1, v))] = 0.25;
        a[(idx(0, v), idx(2, v))] = gamma;
        a[(idx(2, near(v)), idx(2, v))] = (1.0 - gamma) * epsilon;
        a[(idx(2, far(v)), idx(2, v))] = (1.0 - gamma) * (1.0 - epsilon);
    }
    let g = graph::cycle(4)?;
    let map = layered_map(4, 3, 4)?;
    let f = InitMap::from_points(&map, &[0, 1, 2, 3])?;
    let lift = Lift::new(
        g.clone(),
        map,
        a,
        Some(f),
        Metadata::new("four-cycle").with("delta", delta).with("gamma", gamma),
    )?;
    let mut p = DMatrix::zeros(4, 4);
    for v in 0..4 {
        p[(v, v)] = phi;
        p[(near(v), v)] = (1.0 - phi) * delta;
        p[(far(v), v)] = (1.0 - phi) * (1.0 - delta);
    }
    Ok(FourCycle {
        lift,
        reference: StochasticMatrix::new(p, Some(g))?,
        phi,
        epsilon,
    })
}

/// `k` copies of `P` at indices `c N + j`; every step moves like `P` and
/// lands in a uniformly chosen copy.
pub fn si_replicated_lift(p: &StochasticMatrix, copies: usize) -> Result<Lift> {
    if copies == 0 {
        return Err(Error::BadSize("at least one copy is needed".into()));
    }
    let n = p.n();
    let base = p.locality().cloned().unwrap_or_else(|| p.support_graph());
    let size = copies * n;
    let k = copies as f64;
    let a = DMatrix::from_fn(size, size, |r, c| p.get(r % n, c % n) / k);
    let map = layered_map(n, copies, n)?;
    let f = InitMap::from_points(&map, &(0..n).collect::<Vec<_>>())?;
    Lift::new(base, map, a, Some(f), Metadata::new("replicated").with("copies", copies))
}
