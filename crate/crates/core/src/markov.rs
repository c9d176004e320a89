//! Distributions, column-stochastic matrices and time-varying chains.
//!
//! Convention: entry `(j, i)` of a transition matrix is the probability of
//! moving from node `i` to node `j`, so distributions evolve as `p <- P p`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Entries down to this value are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Allowed deviation of a distribution or column total from one.
pub const SUM_TOL: f64 = 1e-9;
/// Largest column deviation repaired by renormalization after a construction.
pub const RENORMALIZE_TOL: f64 = 1e-6;
/// Residual `|P pi - pi|_1` accepted by [`stationary`].
pub const STATIONARY_RESIDUAL: f64 = 1e-10;

/// Total variation distance between two equal-length vectors.
pub(crate) fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) fn l1(p: &[f64]) -> f64 {
    p.iter().map(|v| v.abs()).sum()
}

/// A probability vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct Distribution(Vec<f64>);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionJson {
    pub weights: Vec<f64>,
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = Error;
    fn try_from(d: DistributionJson) -> Result<Self> {
        Distribution::new(d.weights)
    }
}

impl From<Distribution> for DistributionJson {
    fn from(d: Distribution) -> Self {
        DistributionJson { weights: d.0 }
    }
}

impl Distribution {
    /// Validates nonnegativity (tiny negatives clamped) and unit mass.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        for w in weights.iter_mut() {
            if !w.is_finite() || *w < -CLAMP_TOL {
                return Err(Error::InvalidDistribution(format!("entry {w} is negative or not finite")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("mass {total} != 1")));
        }
        Ok(Distribution(weights))
    }

    /// Scales a nonnegative vector with positive mass to a distribution.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < -CLAMP_TOL) {
            return Err(Error::InvalidDistribution("cannot normalize".into()));
        }
        Distribution::new(weights.into_iter().map(|w| w.max(0.0) / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Distribution(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `(1/2) sum |p_i - q_i|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(tv(p.as_slice(), q.as_slice()))
}

/// Compressed-column view of a matrix for repeated products.
#[derive(Clone, Debug)]
pub struct SparseColumns {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseColumns {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.ncols();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for i in 0..n {
            for (j, &v) in m.column(i).iter().enumerate() {
                if v != 0.0 {
                    rows.push(j);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        SparseColumns { n, col_ptr, rows, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `out = M x`.
    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.col_ptr[i]..self.col_ptr[i + 1] {
                out[self.rows[k]] += self.vals[k] * xi;
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_into(x, &mut out);
        out
    }

    /// Nonzero `(row, value)` pairs of column `i`.
    pub fn column(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[i]..self.col_ptr[i + 1]).map(move |k| (self.rows[k], self.vals[k]))
    }
}

/// Dense column-stochastic matrix with an optional locality graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct StochasticMatrix {
    m: DMatrix<f64>,
    #[serde(skip)]
    locality: Option<Graph>,
}

/// On-disk form: `{"n": 2, "rows": [[..], [..]]}` with `rows[j][i] = P_{j,i}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for StochasticMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows.len() != j.n || j.rows.iter().any(|r| r.len() != j.n) {
            return Err(Error::Parse(format!("matrix rows do not form a {0}x{0} array", j.n)));
        }
        StochasticMatrix::from_rows(&j.rows, None)
    }
}

impl From<StochasticMatrix> for MatrixJson {
    fn from(p: StochasticMatrix) -> Self {
        MatrixJson {
            n: p.n(),
            rows: p.m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl StochasticMatrix {
    /// Validates stochasticity (within [`SUM_TOL`]) and locality.
    pub fn new(m: DMatrix<f64>, locality: Option<Graph>) -> Result<Self> {
        Self::checked(m, locality, SUM_TOL, false)
    }

    /// Like [`StochasticMatrix::new`] but repairs column drift up to
    /// [`RENORMALIZE_TOL`] by dividing each column by its sum.
    pub fn renormalized(m: DMatrix<f64>, locality: Option<Graph>) -> Result<Self> {
        Self::checked(m, locality, RENORMALIZE_TOL, true)
    }

    fn checked(mut m: DMatrix<f64>, locality: Option<Graph>, tol: f64, rescale: bool) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotStochastic(format!("shape {}x{}", m.nrows(), m.ncols())));
        }
        let n = m.ncols();
        if let Some(g) = &locality {
            if g.n() != n {
                return Err(Error::DimensionMismatch { expected: g.n(), found: n });
            }
        }
        for i in 0..n {
            let mut col = m.column_mut(i);
            for v in col.iter_mut() {
                if !v.is_finite() || *v < -CLAMP_TOL || *v > 1.0 + CLAMP_TOL {
                    return Err(Error::NotStochastic(format!("entry {v} in column {i}")));
                }
                *v = v.clamp(0.0, 1.0);
            }
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::NotStochastic(format!("column {i} sums to {s}")));
            }
            if rescale {
                col.iter_mut().for_each(|v| *v /= s);
            }
        }
        if let Some(g) = &locality {
            for i in 0..n {
                for j in 0..n {
                    if j != i && m[(j, i)] != 0.0 && !g.has_arc(i, j) {
                        return Err(Error::NotLocal { from: i, to: j });
                    }
                }
            }
        }
        Ok(StochasticMatrix { m, locality })
    }

    /// Builds from `rows[j][i] = P_{j,i}`.
    pub fn from_rows(rows: &[Vec<f64>], locality: Option<Graph>) -> Result<Self> {
        let n = rows.len();
        Self::new(DMatrix::from_fn(n, n, |j, i| rows[j][i]), locality)
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix { m: DMatrix::identity(n, n), locality: None }
    }

    /// Lazy walk `hold * I + (1 - hold) * (uniform step to a successor)`.
    pub fn lazy_walk(g: &Graph, hold: f64) -> Result<Self> {
        let n = g.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let succ = g.successors(i);
            if succ.is_empty() {
                m[(i, i)] = 1.0;
                continue;
            }
            m[(i, i)] = hold;
            for &j in succ {
                m[(j, i)] += (1.0 - hold) / succ.len() as f64;
            }
        }
        Self::new(m, Some(g.clone()))
    }

    /// Metropolis chain with uniform neighbor proposals targeting `pi`.
    pub fn metropolis(g: &Graph, pi: &Distribution) -> Result<Self> {
        let n = g.n();
        if pi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: pi.len() });
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let di = g.successors(i).len() as f64;
            let mut out = 0.0;
            for &j in g.successors(i) {
                let dj = g.successors(j).len().max(1) as f64;
                // proposal i->j is 1/(2 d_i); reverse proposal j->i is 1/(2 d_j)
                let accept = ((pi[j] / dj) / (pi[i] / di)).min(1.0);
                let p = accept / (2.0 * di);
                m[(j, i)] = p;
                out += p;
            }
            m[(i, i)] = 1.0 - out;
        }
        Self::renormalized(m, Some(g.clone()))
    }

    pub fn n(&self) -> usize {
        self.m.ncols()
    }

    /// `P_{j,i}`: probability of `i -> j`.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.m[(j, i)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn locality(&self) -> Option<&Graph> {
        self.locality.as_ref()
    }

    /// Attaches a locality graph after checking every off-diagonal entry.
    pub fn with_locality(self, g: &Graph) -> Result<Self> {
        Self::new(self.m, Some(g.clone()))
    }

    pub fn sparse(&self) -> SparseColumns {
        SparseColumns::from_dense(&self.m)
    }

    /// `P x` for an arbitrary (possibly signed) vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate().take(n) {
            if xi != 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += self.m[(j, i)] * xi;
                }
            }
        }
        out
    }

    /// Support digraph: arc `i -> j` whenever `P_{j,i} > CLAMP_TOL`, `i != j`.
    pub fn support_graph(&self) -> Graph {
        let n = self.n();
        let arcs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        Graph::directed(n, arcs.filter(|&(i, j)| i != j && self.m[(j, i)] > CLAMP_TOL))
            .expect("indices are in range")
    }

    /// `max_i sum_j |(P pi - pi)_j|`-style residual, in l1.
    pub fn stationarity_residual(&self, pi: &Distribution) -> f64 {
        let p = self.apply(pi.as_slice());
        p.iter().zip(pi.as_slice()).map(|(a, b)| (a - b).abs()).sum()
    }

    pub(crate) fn require_stationary(&self, pi: &Distribution, tol: f64) -> Result<()> {
        if pi.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: pi.len() });
        }
        let residual = self.stationarity_residual(pi);
        if residual > tol {
            Err(Error::NotStationary { residual })
        } else {
            Ok(())
        }
    }
}

/// `P^t p` by `t` successive products, each re-validated.
pub fn evolve(p_mat: &StochasticMatrix, p: &Distribution, t: usize) -> Result<Distribution> {
    if p.len() != p_mat.n() {
        return Err(Error::DimensionMismatch { expected: p_mat.n(), found: p.len() });
    }
    let sparse = p_mat.sparse();
    let mut x = p.clone();
    for _ in 0..t {
        x = Distribution::new(sparse.mul(x.as_slice()))?;
    }
    Ok(x)
}

pub fn is_irreducible(p: &StochasticMatrix) -> bool {
    p.n() == 1 || p.support_graph().is_strongly_connected()
}

/// Unique stationary distribution of an irreducible chain.
pub fn stationary(p: &StochasticMatrix) -> Result<Distribution> {
    if !is_irreducible(p) {
        return Err(Error::ReducibleChain);
    }
    let pi = solve_balance(p.matrix())?;
    let pi = Distribution::normalized(pi)?;
    let residual = p.stationarity_residual(&pi);
    if residual > STATIONARY_RESIDUAL {
        return Err(Error::NotStationary { residual });
    }
    Ok(pi)
}

/// Solves `(P - I) x = 0`, `sum x = 1` with one refinement step.
fn solve_balance(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.ncols();
    let mut sys = p - DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        sys[(n - 1, i)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = sys.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("singular balance system".into()))?;
    let r = &rhs - &sys * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x.iter().map(|v| if v.abs() < CLAMP_TOL { 0.0 } else { *v }).collect())
}

/// Default trajectory horizon `max(100, 50 n)`.
pub fn default_horizon(n: usize) -> usize {
    (50 * n).max(100)
}

/// Outcome of a mixing-time computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingTime {
    Mixed(usize),
    /// The threshold was still violated at the horizon.
    Unmixed,
}

impl MixingTime {
    pub fn steps(self) -> Option<usize> {
        match self {
            MixingTime::Mixed(t) => Some(t),
            MixingTime::Unmixed => None,
        }
    }

    /// True if the time is at least `bound` (an unmixed chain always is).
    pub fn at_least(self, bound: f64) -> bool {
        match self {
            MixingTime::Mixed(t) => t as f64 >= bound,
            MixingTime::Unmixed => true,
        }
    }

    pub fn at_most(self, bound: f64) -> bool {
        match self {
            MixingTime::Mixed(t) => t as f64 <= bound,
            MixingTime::Unmixed => false,
        }
    }

    /// Worst of two times.
    pub fn max(self, other: MixingTime) -> MixingTime {
        match (self, other) {
            (MixingTime::Mixed(a), MixingTime::Mixed(b)) => MixingTime::Mixed(a.max(b)),
            _ => MixingTime::Unmixed,
        }
    }
}

impl Serialize for MixingTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MixingTime::Mixed(t) => s.serialize_u64(*t as u64),
            MixingTime::Unmixed => s.serialize_str("unmixed"),
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")))
    }
}

/// Smallest `t` with `dist(x(t')) <= eps` for every `t'` in `[t, t_max]`,
/// where `x(t) = M^t x0`. Stops early once the state is a fixed point.
///
/// `anchor = (xbar, r)` names a fixed point of `M` with
/// `dist(x) <= tv(x, xbar) + (eps - r)`; once `tv(x, xbar) <= r` no later
/// state can violate the threshold, because `M` contracts in `l1`.
pub(crate) fn settle_time(
    op: &SparseColumns,
    x0: Vec<f64>,
    dist: impl Fn(&[f64]) -> f64,
    eps: f64,
    t_max: usize,
    anchor: Option<(&[f64], f64)>,
) -> MixingTime {
    let mut x = x0;
    let mut next = vec![0.0; x.len()];
    let mut last_bad: Option<usize> = None;
    for t in 0..=t_max {
        if dist(&x) > eps {
            last_bad = Some(t);
        }
        if t == t_max {
            break;
        }
        if let Some((xbar, r)) = anchor {
            if last_bad != Some(t) && tv(&x, xbar) <= r {
                break;
            }
        }
        op.mul_into(&x, &mut next);
        if next == x {
            // every later state equals this one
            if last_bad == Some(t) {
                last_bad = Some(t_max);
            }
            break;
        }
        std::mem::swap(&mut x, &mut next);
    }
    match last_bad {
        Some(t) if t == t_max => MixingTime::Unmixed,
        Some(t) => MixingTime::Mixed(t + 1),
        None => MixingTime::Mixed(0),
    }
}

/// Mixing time: worst case over point-mass starts of the time after which
/// the TV distance to `pi` stays within `eps` up to `t_max`.
pub fn mixing_time(p: &StochasticMatrix, pi: &Distribution, eps: f64, t_max: usize) -> Result<MixingTime> {
    check_eps(eps)?;
    p.require_stationary(pi, SUM_TOL)?;
    let op = p.sparse();
    let n = p.n();
    let target = pi.as_slice();
    let mut worst = MixingTime::Mixed(0);
    for i in 0..n {
        let x0 = Distribution::point(n, i).into_vec();
        worst = worst.max(settle_time(&op, x0, |x| tv(x, target), eps, t_max, Some((target, eps))));
        if worst == MixingTime::Unmixed {
            break;
        }
    }
    Ok(worst)
}

/// `Q_{i,j} = P_{i,j} pi_j`.
pub fn ergodic_flows(p: &StochasticMatrix, pi: &Distribution) -> Result<DMatrix<f64>> {
    if pi.len() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), found: pi.len() });
    }
    let mut q = p.matrix().clone();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        col *= pi[j];
    }
    Ok(q)
}

/// A finite sequence `P(1), ..., P(T)` over a common node set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainJson", into = "ChainJson")]
pub struct TimeVaryingChain {
    n: usize,
    steps: Vec<StochasticMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainJson {
    pub n: usize,
    pub steps: Vec<StochasticMatrix>,
}

impl TryFrom<ChainJson> for TimeVaryingChain {
    type Error = Error;
    fn try_from(c: ChainJson) -> Result<Self> {
        TimeVaryingChain::new(c.n, c.steps)
    }
}

impl From<TimeVaryingChain> for ChainJson {
    fn from(c: TimeVaryingChain) -> Self {
        ChainJson { n: c.n, steps: c.steps }
    }
}

impl TimeVaryingChain {
    /// All steps must be `n x n` and share the same locality graph.
    pub fn new(n: usize, steps: Vec<StochasticMatrix>) -> Result<Self> {
        for s in &steps {
            if s.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.n() });
            }
            if s.locality() != steps[0].locality() {
                return Err(Error::LengthMismatch("steps use different locality graphs".into()));
            }
        }
        Ok(TimeVaryingChain { n, steps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[StochasticMatrix] {
        &self.steps
    }

    /// `P(t)` with 1-based `t`.
    pub fn step(&self, t: usize) -> &StochasticMatrix {
        &self.steps[t - 1]
    }

    /// `P(t) ... P(1) p` for every `t` in `0..=T`.
    pub fn trajectory(&self, p: &Distribution) -> Result<Vec<Distribution>> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.len() });
        }
        let mut out = vec![p.clone()];
        for s in &self.steps {
            let next = Distribution::new(s.apply(out.last().expect("nonempty").as_slice()))?;
            out.push(next);
        }
        Ok(out)
    }

    /// `P(T) ... P(1) p`.
    pub fn apply(&self, p: &Distribution) -> Result<Distribution> {
        Ok(self.trajectory(p)?.pop().expect("nonempty"))
    }
}
