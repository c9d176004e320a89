//! Lifts of a base graph: projection, initialization maps, induced chains,
//! invariance and flow checks, (marginal) mixing times and scenario reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conductance::{phi_chain, phi_graph, MAX_LP_NODES};
use crate::error::{Error, Result};
use crate::graph::{diameter, Cut, Graph};
use crate::markov::{
    default_horizon, is_irreducible, l1, mixing_time, settle_time, stationary, tv, Distribution, MixingTime,
    SparseColumns, StochasticMatrix, SUM_TOL,
};

/// Tolerance on `A pi_hat = pi_hat` for induced chains.
pub const LIFT_STATIONARY_TOL: f64 = 1e-8;
/// Tolerance for invariance checks.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Flow deviation accepted as exact matching.
pub const EXACT_FLOW_TOL: f64 = 1e-8;
/// Step difference that ends the lazy iteration in [`lifted_stationary`].
pub const CESARO_TOL: f64 = 1e-13;
/// Iteration cap for [`lifted_stationary`].
pub const CESARO_CAP: usize = 100_000;
const TRANSIENT_RESIDUE: f64 = 1e-11;

/// Surjective projection from lifted nodes onto base nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftMap {
    base_n: usize,
    projection: Vec<usize>,
    fibers: Vec<Vec<usize>>,
}

impl LiftMap {
    pub fn new(base_n: usize, projection: Vec<usize>) -> Result<Self> {
        let mut fibers = vec![Vec::new(); base_n];
        for (l, &k) in projection.iter().enumerate() {
            if k >= base_n {
                return Err(Error::InvalidLift(format!("lifted node {l} projects to {k} >= {base_n}")));
            }
            fibers[k].push(l);
        }
        if let Some(k) = fibers.iter().position(Vec::is_empty) {
            return Err(Error::InvalidLift(format!("fiber of base node {k} is empty")));
        }
        Ok(LiftMap { base_n, projection, fibers })
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    pub fn lifted_n(&self) -> usize {
        self.projection.len()
    }

    pub fn project(&self, l: usize) -> usize {
        self.projection[l]
    }

    pub fn projection(&self) -> &[usize] {
        &self.projection
    }

    pub fn fiber(&self, k: usize) -> &[usize] {
        &self.fibers[k]
    }

    /// Fiber sums `C x`.
    pub fn collapse(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.base_n];
        for (l, &v) in x.iter().enumerate() {
            p[self.projection[l]] += v;
        }
        p
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.lifted_n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.lifted_n(), found: len })
        }
    }

    /// `x` with `C x = pi`, spread evenly inside each fiber.
    pub fn fiber_uniform(&self, pi: &Distribution) -> Vec<f64> {
        (0..self.lifted_n())
            .map(|l| {
                let k = self.projection[l];
                pi[k] / self.fibers[k].len() as f64
            })
            .collect()
    }
}

/// Column-stochastic `F` from base to lifted distributions, supported on fibers.
#[derive(Clone, Debug, PartialEq)]
pub struct InitMap(DMatrix<f64>);

impl InitMap {
    pub fn new(map: &LiftMap, f: DMatrix<f64>) -> Result<Self> {
        if f.nrows() != map.lifted_n() || f.ncols() != map.base_n() {
            return Err(Error::InvalidLift(format!(
                "init map is {}x{}, expected {}x{}",
                f.nrows(),
                f.ncols(),
                map.lifted_n(),
                map.base_n()
            )));
        }
        for j in 0..f.ncols() {
            let mut sum = 0.0;
            for k in 0..f.nrows() {
                let v = f[(k, j)];
                if v < 0.0 || (v != 0.0 && map.project(k) != j) {
                    return Err(Error::InvalidLift(format!("init map entry ({k}, {j}) = {v}")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidLift(format!("init map column {j} sums to {sum}")));
            }
        }
        Ok(InitMap(f))
    }

    /// `F e_j = e_{points[j]}`.
    pub fn from_points(map: &LiftMap, points: &[usize]) -> Result<Self> {
        let mut f = DMatrix::zeros(map.lifted_n(), map.base_n());
        for (j, &l) in points.iter().enumerate() {
            if l >= map.lifted_n() || j >= map.base_n() {
                return Err(Error::InvalidLift(format!("init point {l} for base node {j}")));
            }
            f[(l, j)] = 1.0;
        }
        InitMap::new(map, f)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (&self.0 * nalgebra::DVector::from_column_slice(p)).as_slice().to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j).iter().copied().collect()
    }
}

/// Construction name and parameters carried with a lift.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub construction: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl Metadata {
    pub fn new(construction: &str) -> Self {
        Metadata {
            construction: construction.to_string(),
            params: serde_json::Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// A lifted chain `A` on `lifted` together with its projection to `base`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "LiftJson", into = "LiftJson")]
pub struct Lift {
    base: Graph,
    lifted: Graph,
    map: LiftMap,
    a: StochasticMatrix,
    f: Option<InitMap>,
    metadata: Metadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftJson {
    pub base: Graph,
    pub lifted: Graph,
    pub projection: Vec<usize>,
    #[serde(rename = "A")]
    pub a: StochasticMatrix,
    #[serde(rename = "F")]
    pub f: Option<Vec<Vec<f64>>>,
    pub metadata: Metadata,
}

impl TryFrom<LiftJson> for Lift {
    type Error = Error;
    fn try_from(j: LiftJson) -> Result<Self> {
        let map = LiftMap::new(j.base.n(), j.projection)?;
        let f = match j.f {
            Some(rows) => {
                let ncols = map.base_n();
                if rows.len() != map.lifted_n() || rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::InvalidLift("init map has the wrong shape".into()));
                }
                Some(InitMap::new(&map, DMatrix::from_fn(rows.len(), ncols, |k, i| rows[k][i]))?)
            }
            None => None,
        };
        let a = j.a.with_locality(&j.lifted)?;
        Lift::assemble(j.base, j.lifted, map, a, f, j.metadata)
    }
}

impl From<Lift> for LiftJson {
    fn from(l: Lift) -> Self {
        let f = l
            .f
            .as_ref()
            .map(|f| f.0.row_iter().map(|r| r.iter().copied().collect()).collect());
        LiftJson {
            base: l.base,
            lifted: l.lifted,
            projection: l.map.projection,
            a: l.a,
            f,
            metadata: l.metadata,
        }
    }
}

impl Lift {
    /// The lifted graph is the off-diagonal support of `a`.
    pub fn new(
        base: Graph,
        map: LiftMap,
        a: DMatrix<f64>,
        f: Option<InitMap>,
        metadata: Metadata,
    ) -> Result<Self> {
        let a = StochasticMatrix::new(a, None)?;
        let lifted = a.support_graph();
        let a = a.with_locality(&lifted)?;
        Lift::assemble(base, lifted, map, a, f, metadata)
    }

    fn assemble(
        base: Graph,
        lifted: Graph,
        map: LiftMap,
        a: StochasticMatrix,
        f: Option<InitMap>,
        metadata: Metadata,
    ) -> Result<Self> {
        if map.base_n() != base.n() || map.lifted_n() != lifted.n() || a.n() != lifted.n() {
            return Err(Error::InvalidLift("graph, projection and chain sizes disagree".into()));
        }
        for (i, j) in lifted.arcs() {
            let (ci, cj) = (map.project(i), map.project(j));
            if !base.allows(ci, cj) {
                return Err(Error::InvalidLift(format!(
                    "lifted arc ({i}, {j}) projects to ({ci}, {cj}), not a base arc"
                )));
            }
        }
        Ok(Lift {
            base,
            lifted,
            map,
            a,
            f,
            metadata,
        })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn lifted(&self) -> &Graph {
        &self.lifted
    }

    pub fn map(&self) -> &LiftMap {
        &self.map
    }

    pub fn chain(&self) -> &StochasticMatrix {
        &self.a
    }

    pub fn init(&self) -> Option<&InitMap> {
        self.f.as_ref()
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn base_n(&self) -> usize {
        self.map.base_n()
    }

    pub fn lifted_n(&self) -> usize {
        self.map.lifted_n()
    }

    /// Replace the initialization map.
    pub fn with_init(mut self, f: Option<InitMap>) -> Self {
        self.f = f;
        self
    }

    /// `C A e_l`.
    fn collapsed_column(&self, op: &SparseColumns, l: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.base_n()];
        for (r, v) in op.column(l) {
            out[self.map.project(r)] += v;
        }
        out
    }
}

/// Re-checks every structural invariant of a lift: locality against the
/// base graph, stochasticity of `A`, and `C F = I`.
pub fn validate_lift(l: &Lift) -> Result<()> {
    let a = StochasticMatrix::new(l.a.matrix().clone(), Some(l.lifted.clone()))?;
    let f = l.f.as_ref().map(|f| InitMap::new(&l.map, f.0.clone())).transpose()?;
    Lift::assemble(l.base.clone(), l.lifted.clone(), l.map.clone(), a, f, l.metadata.clone()).map(|_| ())
}

/// `C x`.
pub fn marginal(l: &Lift, x: &Distribution) -> Result<Distribution> {
    l.map.check_len(x.len())?;
    Distribution::new(l.map.collapse(x.as_slice()))
}

/// `P^(x) = C A B^(x)` and the fibers that carried no mass.
#[derive(Clone, Debug)]
pub struct ConditionalUnlift {
    pub chain: StochasticMatrix,
    /// Base nodes whose column uses the uniform-over-fiber convention.
    pub empty_fibers: Vec<usize>,
}

pub fn conditional_unlift(l: &Lift, x: &Distribution) -> Result<ConditionalUnlift> {
    l.map.check_len(x.len())?;
    let n = l.base_n();
    let op = l.a.sparse();
    let mut m = DMatrix::zeros(n, n);
    let mut empty_fibers = Vec::new();
    for j in 0..n {
        let fiber = l.map.fiber(j);
        let mass: f64 = fiber.iter().map(|&k| x[k]).sum();
        let weights: Vec<f64> = if mass > 0.0 {
            fiber.iter().map(|&k| x[k] / mass).collect()
        } else {
            empty_fibers.push(j);
            vec![1.0 / fiber.len() as f64; fiber.len()]
        };
        for (&k, w) in fiber.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (i, v) in l.collapsed_column(&op, k).into_iter().enumerate() {
                m[(i, j)] += w * v;
            }
        }
    }
    Ok(ConditionalUnlift {
        chain: StochasticMatrix::renormalized(m, Some(l.base.clone()))?,
        empty_fibers,
    })
}

/// Collapsed ergodic flows `sum A_{l,k} pi_hat_k` over fiber pairs.
fn collapsed_flows(l: &Lift, pi_hat: &[f64]) -> DMatrix<f64> {
    let n = l.base_n();
    let mut q = DMatrix::zeros(n, n);
    let op = l.a.sparse();
    for k in 0..l.lifted_n() {
        if pi_hat[k] == 0.0 {
            continue;
        }
        let j = l.map.project(k);
        for (r, v) in op.column(k) {
            q[(l.map.project(r), j)] += v * pi_hat[k];
        }
    }
    q
}

fn require_lift_stationary(l: &Lift, pi_hat: &Distribution) -> Result<()> {
    l.map.check_len(pi_hat.len())?;
    let residual = l.a.stationarity_residual(pi_hat);
    if residual > LIFT_STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    Ok(())
}

/// The base chain whose ergodic flows are the collapsed flows of `A` at `pi_hat`.
pub fn induced_chain(l: &Lift, pi_hat: &Distribution) -> Result<StochasticMatrix> {
    require_lift_stationary(l, pi_hat)?;
    let pi = l.map.collapse(pi_hat.as_slice());
    if let Some(k) = pi.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroMarginalSupport(k));
    }
    let mut q = collapsed_flows(l, pi_hat.as_slice());
    for (j, mut col) in q.column_iter_mut().enumerate() {
        col /= pi[j];
    }
    StochasticMatrix::renormalized(q, Some(l.base.clone()))
}

/// The limit of the averages `(1/T) sum_t A^t x0`.
///
/// For irreducible `A` this is the unique stationary distribution. Otherwise
/// the lazy chain `(I + A)/2` is iterated from the seed: it is aperiodic with
/// the same ergodic projection, so its iterates converge to the same limit.
pub fn lifted_stationary(l: &Lift, seed: &Distribution) -> Result<Distribution> {
    l.map.check_len(seed.len())?;
    if is_irreducible(&l.a) {
        return stationary(&l.a);
    }
    lazy_limit(&l.a.sparse(), seed.as_slice().to_vec()).and_then(Distribution::normalized)
}

fn lazy_limit(op: &SparseColumns, x0: Vec<f64>) -> Result<Vec<f64>> {
    let mut x = x0;
    let mut ax = vec![0.0; x.len()];
    for _ in 0..CESARO_CAP {
        op.mul_into(&x, &mut ax);
        // tv between x and (x + Ax)/2 is half of tv(x, Ax)
        let step = 0.5 * tv(&x, &ax);
        for (xi, ai) in x.iter_mut().zip(&ax) {
            *xi = 0.5 * (*xi + ai);
        }
        if step < CESARO_TOL {
            // what is left on transient states is iteration residue
            for v in x.iter_mut().filter(|v| **v < TRANSIENT_RESIDUE) {
                *v = 0.0;
            }
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { steps: CESARO_CAP })
}

/// Which initializations a scenario allows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Init {
    /// `x(0) = F p(0)` through the lift's designed map.
    Designed,
    /// Any `x(0)` with the required marginal.
    Free,
}

/// Constraint on ergodic flows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Flows {
    Free,
    Exact,
    Within(f64),
}

impl Flows {
    /// Accepted deviation, `None` when unconstrained.
    pub fn tolerance(self) -> Option<f64> {
        match self {
            Flows::Free => None,
            Flows::Exact => Some(EXACT_FLOW_TOL),
            Flows::Within(d) => Some(d),
        }
    }
}

/// Five scenario flags; lower case means the constraint is imposed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub init: Init,
    /// `i`: `C x(0) = pi` must imply `C x(t) = pi`.
    pub invariant: bool,
    /// `m`: the full lifted state must mix, not only the marginal.
    pub full_convergence: bool,
    /// `r`: `A` must be irreducible.
    pub irreducible: bool,
    pub flows: Flows,
}

impl FromStr for ScenarioSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("scenario {s:?}: expected e.g. \"sImre\" or \"SIMre:0.001\""));
        let chars: Vec<char> = s.chars().collect();
        if chars.len() < 5 {
            return Err(bad());
        }
        let flag = |c: char, upper: char| match c {
            _ if c == upper => Ok(false),
            _ if c == upper.to_ascii_lowercase() => Ok(true),
            _ => Err(bad()),
        };
        let init = if flag(chars[0], 'S')? { Init::Free } else { Init::Designed };
        let rest: String = chars[5..].iter().collect();
        let flows = match (chars[4], rest.as_str()) {
            ('E', "") => Flows::Free,
            ('e', "") => Flows::Exact,
            ('e', r) => {
                let d: f64 = r.strip_prefix(':').and_then(|d| d.parse().ok()).ok_or_else(bad)?;
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(bad());
                }
                Flows::Within(d)
            }
            _ => return Err(bad()),
        };
        Ok(ScenarioSpec {
            init,
            invariant: flag(chars[1], 'I')?,
            full_convergence: flag(chars[2], 'M')?,
            irreducible: flag(chars[3], 'R')?,
            flows,
        })
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pick = |constrained: bool, upper: char| if constrained { upper.to_ascii_lowercase() } else { upper };
        write!(
            f,
            "{}{}{}{}",
            pick(self.init == Init::Free, 'S'),
            pick(self.invariant, 'I'),
            pick(self.full_convergence, 'M'),
            pick(self.irreducible, 'R')
        )?;
        match self.flows {
            Flows::Free => write!(f, "E"),
            Flows::Exact => write!(f, "e"),
            Flows::Within(d) => write!(f, "e:{d}"),
        }
    }
}

impl Serialize for ScenarioSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Outcome of an invariance test, with a violating initialization if any.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceCheck {
    pub holds: bool,
    pub max_dev: f64,
    pub witness: Option<Distribution>,
}

/// Under `Free`, checks `C A` on the affine set `{x : C x = pi}` exactly
/// (equal collapsed columns inside each fiber, and `C A x* = pi` on fiber
/// representatives). Under `Designed`, follows `F pi` for `horizon` steps.
pub fn check_invariance(l: &Lift, pi: &Distribution, init: Init, horizon: usize) -> Result<InvarianceCheck> {
    if pi.len() != l.base_n() {
        return Err(Error::DimensionMismatch { expected: l.base_n(), found: pi.len() });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("invariance horizon must be >= 1".into()));
    }
    let op = l.a.sparse();
    match init {
        Init::Designed => {
            let f = l.f.as_ref().ok_or(Error::MissingInitMap)?;
            let start = f.apply(pi.as_slice());
            let mut x = start.clone();
            let mut max_dev: f64 = 0.0;
            for _ in 0..horizon {
                x = op.mul(&x);
                max_dev = max_dev.max(tv(&l.map.collapse(&x), pi.as_slice()));
            }
            let holds = max_dev <= INVARIANCE_TOL;
            Ok(InvarianceCheck {
                holds,
                max_dev,
                witness: if holds { None } else { Some(Distribution::normalized(start)?) },
            })
        }
        Init::Free => {
            let n = l.base_n();
            let reps: Vec<usize> = (0..n).map(|k| l.map.fiber(k)[0]).collect();
            let mut x_star = vec![0.0; l.lifted_n()];
            for k in 0..n {
                x_star[reps[k]] = pi[k];
            }
            let cax = l.map.collapse(&op.mul(&x_star));
            let base_dev = tv(&cax, pi.as_slice());
            let mut max_dev = base_dev;
            let mut witness = (base_dev > INVARIANCE_TOL).then(|| x_star.clone());
            for k in 0..n {
                let ref_col = l.collapsed_column(&op, reps[k]);
                for &m in &l.map.fiber(k)[1..] {
                    let col = l.collapsed_column(&op, m);
                    let dev = 0.5 * pi[k] * l1(&col.iter().zip(&ref_col).map(|(a, b)| a - b).collect::<Vec<_>>());
                    if dev > max_dev {
                        max_dev = dev;
                    }
                    if witness.is_none() && dev > INVARIANCE_TOL {
                        let mut x = x_star.clone();
                        x[reps[k]] = 0.0;
                        x[m] = pi[k];
                        witness = Some(x);
                    }
                }
            }
            Ok(InvarianceCheck {
                holds: witness.is_none(),
                max_dev,
                witness: witness.map(Distribution::normalized).transpose()?,
            })
        }
    }
}

fn starts(l: &Lift, init: Init) -> Result<Vec<Vec<f64>>> {
    match init {
        Init::Designed => {
            let f = l.f.as_ref().ok_or(Error::MissingInitMap)?;
            Ok((0..l.base_n()).map(|j| f.column(j)).collect())
        }
        Init::Free => Ok((0..l.lifted_n()).map(|k| Distribution::point(l.lifted_n(), k).into_vec()).collect()),
    }
}

/// A stationary `x_bar` with marginal close to `pi`, used to stop
/// trajectories early; `r` is the remaining TV budget.
fn marginal_anchor(l: &Lift, pi: &Distribution, eps: f64) -> Option<(Vec<f64>, f64)> {
    let seed = match &l.f {
        Some(f) => f.apply(pi.as_slice()),
        None => l.map.fiber_uniform(pi),
    };
    let seed = Distribution::normalized(seed).ok()?;
    let xbar = lifted_stationary(l, &seed).ok()?;
    let off = tv(&l.map.collapse(xbar.as_slice()), pi.as_slice());
    (off < eps).then(|| (xbar.into_vec(), eps - off))
}

/// Horizon used when none is given: `max(100, 50 N)` on the base size.
pub fn default_lift_horizon(l: &Lift) -> usize {
    default_horizon(l.base_n())
}

/// Worst case over the scenario's extreme starts of the time after which
/// `tv(C A^t x0, pi) <= eps` holds up to `t_max`.
pub fn marginal_mixing_time(l: &Lift, pi: &Distribution, eps: f64, init: Init, t_max: usize) -> Result<MixingTime> {
    crate::markov::check_eps(eps)?;
    if pi.len() != l.base_n() {
        return Err(Error::DimensionMismatch { expected: l.base_n(), found: pi.len() });
    }
    let xs = starts(l, init)?;
    let op = l.a.sparse();
    let anchor = marginal_anchor(l, pi, eps);
    let anchor_ref = anchor.as_ref().map(|(x, r)| (x.as_slice(), *r));
    let mut worst = MixingTime::Mixed(0);
    for x0 in xs {
        worst = worst.max(settle_time(
            &op,
            x0,
            |x| tv(&l.map.collapse(x), pi.as_slice()),
            eps,
            t_max,
            anchor_ref,
        ));
        if worst == MixingTime::Unmixed {
            break;
        }
    }
    Ok(worst)
}

/// Marginal mixing time from one given lifted start.
pub fn marginal_mixing_time_from(
    l: &Lift,
    pi: &Distribution,
    eps: f64,
    x0: &Distribution,
    t_max: usize,
) -> Result<MixingTime> {
    crate::markov::check_eps(eps)?;
    l.map.check_len(x0.len())?;
    if pi.len() != l.base_n() {
        return Err(Error::DimensionMismatch { expected: l.base_n(), found: pi.len() });
    }
    let anchor = marginal_anchor(l, pi, eps);
    Ok(settle_time(
        &l.a.sparse(),
        x0.as_slice().to_vec(),
        |x| tv(&l.map.collapse(x), pi.as_slice()),
        eps,
        t_max,
        anchor.as_ref().map(|(x, r)| (x.as_slice(), *r)),
    ))
}

/// The exact fixed point reached from `x0`, if any, within `t_max` steps.
fn reached_fixed_point(op: &SparseColumns, x0: &[f64], t_max: usize) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    for _ in 0..t_max {
        op.mul_into(&x, &mut next);
        if next == x {
            return Some(x);
        }
        std::mem::swap(&mut x, &mut next);
    }
    None
}

/// Worst case over the scenario's starts of the time after which the full
/// lifted state stays within `eps` of its own limit `lifted_stationary(x0)`.
pub fn full_mixing_time(l: &Lift, eps: f64, init: Init, t_max: usize) -> Result<MixingTime> {
    crate::markov::check_eps(eps)?;
    let xs = starts(l, init)?;
    let op = l.a.sparse();
    let shared = if is_irreducible(&l.a) {
        Some(stationary(&l.a)?.into_vec())
    } else {
        None
    };
    let mut worst = MixingTime::Mixed(0);
    for x0 in xs {
        let target = match &shared {
            Some(t) => t.clone(),
            None => match reached_fixed_point(&op, &x0, t_max) {
                Some(t) => t,
                None => lazy_limit(&op, x0.clone())?,
            },
        };
        worst = worst.max(settle_time(
            &op,
            x0,
            |x| tv(x, &target),
            eps,
            t_max,
            Some((&target, eps)),
        ));
        if worst == MixingTime::Unmixed {
            break;
        }
    }
    Ok(worst)
}

/// Largest entrywise gap between collapsed lifted flows and `Q^(P_ref)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowMatch {
    pub max_dev: f64,
    pub ok: bool,
}

pub fn check_flow_match(l: &Lift, pi_hat: &Distribution, p_ref: &StochasticMatrix, delta: f64) -> Result<FlowMatch> {
    require_lift_stationary(l, pi_hat)?;
    if p_ref.n() != l.base_n() {
        return Err(Error::DimensionMismatch { expected: l.base_n(), found: p_ref.n() });
    }
    let pi = Distribution::new(l.map.collapse(pi_hat.as_slice()))?;
    p_ref.require_stationary(&pi, LIFT_STATIONARY_TOL)?;
    let q_hat = collapsed_flows(l, pi_hat.as_slice());
    let q = crate::markov::ergodic_flows(p_ref, &pi)?;
    let max_dev = (q_hat - q).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FlowMatch {
        max_dev,
        ok: max_dev <= delta,
    })
}

/// `P^q` with column `j` equal to `C A e_{q(j)}`.
#[derive(Clone, Debug)]
pub struct Unlifted {
    pub chain: StochasticMatrix,
    /// False when collapsed columns differ within a fiber, so that `P^q`
    /// does not reproduce every marginal trajectory.
    pub equivalent: bool,
}

pub fn unlift_si(l: &Lift, choice: &[usize]) -> Result<Unlifted> {
    let n = l.base_n();
    if choice.len() != n {
        return Err(Error::BadChoiceMap(format!("{} choices for {n} base nodes", choice.len())));
    }
    for (j, &q) in choice.iter().enumerate() {
        if q >= l.lifted_n() || l.map.project(q) != j {
            return Err(Error::BadChoiceMap(format!("lifted node {q} is not in the fiber of {j}")));
        }
    }
    let op = l.a.sparse();
    let mut m = DMatrix::zeros(n, n);
    let mut equivalent = true;
    for (j, &q) in choice.iter().enumerate() {
        let col = l.collapsed_column(&op, q);
        for &other in l.map.fiber(j) {
            let oc = l.collapsed_column(&op, other);
            if col.iter().zip(&oc).any(|(a, b)| (a - b).abs() > INVARIANCE_TOL) {
                equivalent = false;
            }
        }
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(Unlifted {
        chain: StochasticMatrix::new(m, Some(l.base.clone()))?,
        equivalent,
    })
}

/// `pi_hat` restricted to the preimage of `X`, renormalized.
pub fn adversarial_init(map: &LiftMap, pi_hat: &Distribution, x: &Cut) -> Result<Distribution> {
    map.check_len(pi_hat.len())?;
    let w = crate::conductance::restrict(pi_hat.as_slice(), |l| x.contains(map.project(l)))?;
    Distribution::new(w)
}

/// One row of a scenario report.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    /// `lower`, `upper` or `equal`.
    pub kind: &'static str,
    pub value: f64,
    pub measured: MixingTime,
    pub holds: bool,
}

/// Settings for [`scenario_report`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReportOptions {
    pub eps: f64,
    pub t_max: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { eps: 0.25, t_max: None }
    }
}

/// Measured mixing times, constraint verdicts and the applicable bounds.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioSpec,
    pub construction: String,
    pub eps: f64,
    pub t_max: usize,
    pub diameter: usize,
    pub tau_m: MixingTime,
    pub tau: MixingTime,
    pub invariance: Option<bool>,
    pub irreducible: bool,
    pub flow_deviation: Option<f64>,
    pub flows_ok: Option<bool>,
    pub bounds: Vec<BoundCheck>,
    pub notes: Vec<String>,
    pub pass: bool,
}

fn inverse_phi_bound(scale: f64, phi: f64) -> f64 {
    if phi > 0.0 {
        1.0 / (scale * phi)
    } else {
        f64::INFINITY
    }
}

/// Evaluates a lift against a scenario: mixing times under the scenario's
/// initialization, the verdicts of the imposed constraints, and the bounds
/// of the bound table that apply to it.
pub fn scenario_report(
    l: &Lift,
    spec: &ScenarioSpec,
    pi: &Distribution,
    reference: Option<&StochasticMatrix>,
    opts: ReportOptions,
) -> Result<ScenarioReport> {
    let t_max = opts.t_max.unwrap_or_else(|| default_lift_horizon(l));
    let eps = opts.eps;
    let d = diameter(&l.base)?;
    let mut notes = Vec::new();
    let tau_m = marginal_mixing_time(l, pi, eps, spec.init, t_max)?;
    let tau = full_mixing_time(l, eps, spec.init, t_max)?;
    let irreducible = is_irreducible(&l.a);

    let inv = if spec.invariant {
        Some(check_invariance(l, pi, spec.init, (4 * (d + 1)).max(50))?)
    } else {
        None
    };

    let seed = Distribution::normalized(match &l.f {
        Some(f) => f.apply(pi.as_slice()),
        None => l.map.fiber_uniform(pi),
    })?;
    let (flow_deviation, flows_ok) = match spec.flows.tolerance() {
        Some(delta) => {
            let p_ref = reference.ok_or(Error::MissingReferenceChain)?;
            let pi_hat = lifted_stationary(l, &seed)?;
            if !irreducible {
                notes.push("flows checked for the steady state reached from the seed only".into());
            }
            let fm = check_flow_match(l, &pi_hat, p_ref, delta)?;
            (Some(fm.max_dev), Some(fm.ok))
        }
        None => (None, None),
    };

    let graph_phi = if l.base_n() <= MAX_LP_NODES {
        Some(phi_graph(&l.base, pi)?.phi)
    } else {
        None
    };
    let mut bounds = Vec::new();
    let lower = |name: &str, value: f64, bounds: &mut Vec<BoundCheck>| {
        bounds.push(BoundCheck {
            name: name.into(),
            kind: "lower",
            value,
            measured: tau_m,
            holds: tau_m.at_least(value),
        })
    };
    match spec.init {
        Init::Free => {
            if let (Some(_), Some(p_ref)) = (spec.flows.tolerance(), reference) {
                let phi = phi_chain(p_ref, pi)?.phi;
                lower("1/(4 Phi(P))", inverse_phi_bound(4.0, phi), &mut bounds);
            } else if let Some(phi) = graph_phi {
                lower("1/(4 Phi)", inverse_phi_bound(4.0, phi), &mut bounds);
            } else {
                // the induced chain is a local chain, so this is the stronger check
                let pi_hat = lifted_stationary(l, &seed)?;
                let p_tilde = induced_chain(l, &pi_hat)?;
                let pi_m = Distribution::new(l.map.collapse(pi_hat.as_slice()))?;
                let phi = phi_chain(&p_tilde, &pi_m)?.phi;
                notes.push(format!(
                    "graph conductance needs at most {MAX_LP_NODES} nodes; induced-chain conductance used instead"
                ));
                lower("1/(4 Phi(induced)) - 1", inverse_phi_bound(4.0, phi) - 1.0, &mut bounds);
            }
            if spec.invariant {
                let choice: Vec<usize> = (0..l.base_n()).map(|k| l.map.fiber(k)[0]).collect();
                let un = unlift_si(l, &choice)?;
                let base_tau = if un.equivalent {
                    mixing_time(&un.chain, pi, eps, t_max).ok()
                } else {
                    None
                };
                if let Some(base_tau) = base_tau {
                    bounds.push(BoundCheck {
                        name: "tau of the unlifted chain".into(),
                        kind: "equal",
                        value: base_tau.steps().map_or(f64::INFINITY, |t| t as f64),
                        measured: tau_m,
                        holds: base_tau == tau_m,
                    });
                } else {
                    notes.push("no unlifted chain reproduces the marginal dynamics".into());
                }
            }
        }
        Init::Designed => {
            if spec.invariant {
                match graph_phi {
                    Some(phi) => lower("1/(8 Phi)", inverse_phi_bound(8.0, phi), &mut bounds),
                    None => notes.push(format!("graph conductance needs at most {MAX_LP_NODES} nodes")),
                }
            } else if spec.irreducible && spec.flows == Flows::Exact {
                notes.push("no diameter-time construction is known for exact flows with irreducibility".into());
            } else {
                let measured = if spec.full_convergence { tau } else { tau_m };
                bounds.push(BoundCheck {
                    name: "D + 1".into(),
                    kind: "upper",
                    value: (d + 1) as f64,
                    measured,
                    holds: measured.at_most((d + 1) as f64),
                });
            }
        }
    }

    let mut pass = bounds.iter().all(|b| b.holds);
    pass &= inv.as_ref().is_none_or(|c| c.holds);
    pass &= flows_ok.unwrap_or(true);
    if spec.irreducible {
        pass &= irreducible;
    }
    if spec.full_convergence {
        pass &= tau != MixingTime::Unmixed;
    }
    Ok(ScenarioReport {
        scenario: *spec,
        construction: l.metadata.construction.clone(),
        eps,
        t_max,
        diameter: d,
        tau_m,
        tau,
        invariance: inv.map(|c| c.holds),
        irreducible,
        flow_deviation,
        flows_ok,
        bounds,
        notes,
        pass,
    })
}
