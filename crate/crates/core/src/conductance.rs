//! Cut and chain conductance, graph conductance as a linear program, and
//! the leakage and contraction checks built on them.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, Cut, Graph};
use crate::markov::{l1, Distribution, StochasticMatrix, SUM_TOL};

/// Largest node count accepted by [`phi_graph`].
pub const MAX_LP_NODES: usize = 14;
/// Constraint residual accepted on the LP optimizer.
pub const LP_TOL: f64 = 1e-8;
/// Absolute slack on the leakage and contraction inequalities.
pub const CHECK_SLACK: f64 = 1e-9;

fn unit_graph(n: usize) -> Graph {
    Graph::directed(n, std::iter::empty()).expect("n > 0")
}

/// Stationary flow leaving `X`, divided by `pi(X)`.
pub fn phi_cut(p: &StochasticMatrix, pi: &Distribution, x: &Cut) -> Result<f64> {
    let n = p.n();
    if pi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pi.len() });
    }
    let weight: f64 = (0..n).filter(|&i| x.contains(i)).map(|i| pi[i]).sum();
    if weight <= 0.0 {
        return Err(Error::EmptyCutWeight);
    }
    let mut flow = 0.0;
    for i in (0..n).filter(|&i| x.contains(i)) {
        for j in (0..n).filter(|&j| !x.contains(j)) {
            flow += p.get(j, i) * pi[i];
        }
    }
    Ok(flow / weight)
}

/// Conductance of a chain together with the minimizing cut.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConductance {
    pub phi: f64,
    pub argmin: Cut,
}

/// `min phi_cut` over every cut with `pi(X) <= 1/2`; the lowest mask wins ties.
pub fn phi_chain(p: &StochasticMatrix, pi: &Distribution) -> Result<ChainConductance> {
    p.require_stationary(pi, SUM_TOL)?;
    let cuts = graph::enumerate_cuts(&unit_graph(p.n()), pi)?;
    let mut best: Option<ChainConductance> = None;
    for c in cuts {
        let phi = phi_cut(p, pi, &c)?;
        if best.as_ref().is_none_or(|b| phi < b.phi) {
            best = Some(ChainConductance { phi, argmin: c });
        }
    }
    best.ok_or_else(|| Error::BadSize("chain needs at least two nodes".into()))
}

/// Best achievable conductance on a graph and one chain attaining it.
#[derive(Clone, Debug)]
pub struct GraphConductance {
    pub phi: f64,
    pub chain: StochasticMatrix,
}

/// Maximizes `phi(P)` over local chains with `P pi = pi`.
///
/// Variables are the entries of `P` on arcs and the diagonal plus a scalar
/// `t`; every cut contributes one linear constraint
/// `sum_{i in X, j notin X} P_{j,i} pi_i >= t pi(X)`.
pub fn phi_graph(g: &Graph, pi: &Distribution) -> Result<GraphConductance> {
    let n = g.n();
    if n > MAX_LP_NODES {
        return Err(Error::TooManyNodes { n, max: MAX_LP_NODES });
    }
    if pi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pi.len() });
    }
    if !pi.has_full_support() {
        return Err(Error::InvalidDistribution("graph conductance needs a full-support target".into()));
    }
    g.require_connected()?;
    let cuts = graph::enumerate_cuts(g, pi)?;

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // entries[i] lists (j, var) for transitions i -> j, diagonal included
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut col = vec![(i, lp.add_var(0.0, (0.0, 1.0)))];
        for &j in g.successors(i) {
            col.push((j, lp.add_var(0.0, (0.0, 1.0))));
        }
        entries.push(col);
    }
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));

    for col in &entries {
        let terms: Vec<_> = col.iter().map(|&(_, v)| (v, 1.0)).collect();
        lp.add_constraint(&terms[..], ComparisonOp::Eq, 1.0);
    }
    // the last balance row follows from the column sums
    for j in 0..n - 1 {
        let terms: Vec<_> = entries
            .iter()
            .enumerate()
            .flat_map(|(i, col)| col.iter().filter(move |&&(r, _)| r == j).map(move |&(_, v)| (v, pi[i])))
            .collect();
        lp.add_constraint(&terms[..], ComparisonOp::Eq, pi[j]);
    }
    for c in &cuts {
        let mut terms = vec![(t, -c.weight)];
        for (i, col) in entries.iter().enumerate().filter(|&(i, _)| c.contains(i)) {
            terms.extend(col.iter().filter(|&&(j, _)| !c.contains(j)).map(|&(_, v)| (v, pi[i])));
        }
        lp.add_constraint(&terms[..], ComparisonOp::Ge, 0.0);
    }

    let sol = lp.solve().map_err(|e| Error::InfeasibleLp(e.to_string()))?;
    let mut m = DMatrix::zeros(n, n);
    for (i, col) in entries.iter().enumerate() {
        for &(j, v) in col {
            m[(j, i)] = sol[v].max(0.0);
        }
    }
    let chain = StochasticMatrix::renormalized(m, Some(g.clone()))?;
    let phi = sol[t];

    let residual = chain.stationarity_residual(pi);
    if residual > LP_TOL {
        return Err(Error::InfeasibleLp(format!("balance residual {residual:.3e}")));
    }
    for c in &cuts {
        let slack = phi_cut(&chain, pi, c)? - phi;
        if slack < -LP_TOL {
            return Err(Error::InfeasibleLp(format!("cut {:#b} violated by {:.3e}", c.mask, -slack)));
        }
    }
    Ok(GraphConductance { phi, chain })
}

/// Mass that leaves `X` within `t` steps from `pi` restricted to `X`,
/// against the bound `t * phi_cut`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeakageCheck {
    pub leakage: f64,
    pub bound: f64,
    pub ok: bool,
}

pub fn lemma1_check(p: &StochasticMatrix, pi: &Distribution, x: &Cut, t: usize) -> Result<LeakageCheck> {
    p.require_stationary(pi, SUM_TOL)?;
    if t == 0 {
        return Err(Error::InvalidParameter("leakage horizon must be >= 1".into()));
    }
    let n = p.n();
    let start = restrict(pi.as_slice(), |i| x.contains(i))?;
    let op = p.sparse();
    let mut state = start;
    for _ in 0..t {
        state = op.mul(&state);
    }
    let leakage: f64 = (0..n).filter(|&j| !x.contains(j)).map(|j| state[j]).sum();
    let bound = t as f64 * phi_cut(p, pi, x)?;
    Ok(LeakageCheck {
        leakage,
        bound,
        ok: leakage <= bound + CHECK_SLACK,
    })
}

/// `w` restricted to the nodes accepted by `keep`, renormalized.
pub(crate) fn restrict(w: &[f64], keep: impl Fn(usize) -> bool) -> Result<Vec<f64>> {
    let mass: f64 = (0..w.len()).filter(|&i| keep(i)).map(|i| w[i]).sum();
    if mass <= 0.0 {
        return Err(Error::EmptyCutWeight);
    }
    Ok((0..w.len()).map(|i| if keep(i) { w[i] / mass } else { 0.0 }).collect())
}

/// Both sides of `phi(P) <= 4 ln(1/pi_min) / (D - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiameterConductance {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Natural logarithm; a violation is reported, not raised.
pub fn diameter_conductance_check(p: &StochasticMatrix, pi: &Distribution, d: usize) -> Result<DiameterConductance> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("diameter {d} must be >= 2")));
    }
    let lhs = phi_chain(p, pi)?.phi;
    let rhs = 4.0 * (1.0 / pi.min()).ln() / (d as f64 - 1.0);
    Ok(DiameterConductance {
        lhs,
        rhs,
        ok: lhs <= rhs + CHECK_SLACK,
    })
}

/// The clock chain on states `0..=D+1`: deterministic advance through
/// `0..=D`, then hold with `1 - gamma` or jump back to 0 with `gamma`.
pub fn clock_chain(d: usize, gamma: f64) -> Result<StochasticMatrix> {
    let k = d + 2;
    let mut m = DMatrix::zeros(k, k);
    for i in 0..=d {
        m[(i + 1, i)] = 1.0;
    }
    m[(d + 1, d + 1)] = 1.0 - gamma;
    m[(0, d + 1)] += gamma;
    StochasticMatrix::new(m, None)
}

/// `l1` contraction of a zero-sum deviation over `D+1` clock steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClockContraction {
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

pub fn clock_contraction_check(d: usize, gamma: f64, q0: &[f64]) -> Result<ClockContraction> {
    let max = 1.0 / (2.0 * (d as f64 + 1.0));
    if !(gamma > 0.0 && gamma < max) {
        return Err(Error::BadGamma { gamma, max });
    }
    if q0.len() != d + 2 {
        return Err(Error::DimensionMismatch { expected: d + 2, found: q0.len() });
    }
    let norm0 = l1(q0);
    let total: f64 = q0.iter().sum();
    if total.abs() > 1e-12 * norm0.max(1.0) {
        return Err(Error::InvalidParameter(format!("deviation sums to {total}, not 0")));
    }
    let bound = 2.0 * (d as f64 + 1.0) * gamma;
    if norm0 == 0.0 {
        return Ok(ClockContraction { ratio: 0.0, bound, ok: true });
    }
    let clock = clock_chain(d, gamma)?;
    let mut q = q0.to_vec();
    for _ in 0..=d {
        q = clock.apply(&q);
    }
    let ratio = l1(&q) / norm0;
    Ok(ClockContraction {
        ratio,
        bound,
        ok: ratio <= bound + CHECK_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{barbell, complete, cycle, path};
    use crate::markov::stationary;
    use approx::assert_abs_diff_eq;

    fn uniform_chain(n: usize) -> StochasticMatrix {
        StochasticMatrix::new(DMatrix::from_element(n, n, 1.0 / n as f64), None).unwrap()
    }

    #[test]
    fn phi_cut_examples() {
        let u4 = Distribution::uniform(4);
        let x = Cut::from_members(&[0, 1], &u4).unwrap();
        assert_eq!(phi_cut(&StochasticMatrix::identity(4), &u4, &x).unwrap(), 0.0);
        assert_abs_diff_eq!(phi_cut(&uniform_chain(4), &u4, &x).unwrap(), 0.5, epsilon = 1e-15);

        // barbell with the bridge traversed surely
        let n = 4;
        let g = barbell(n).unwrap();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            m[(i, i)] = 1.0;
        }
        m[(n - 1, n - 1)] = 0.0;
        m[(n, n - 1)] = 1.0;
        m[(n, n)] = 0.0;
        m[(n - 1, n)] = 1.0;
        let p = StochasticMatrix::new(m, Some(g)).unwrap();
        let u = Distribution::uniform(2 * n);
        let left = Cut::from_members(&(0..n).collect::<Vec<_>>(), &u).unwrap();
        assert_abs_diff_eq!(phi_cut(&p, &u, &left).unwrap(), 1.0 / n as f64, epsilon = 1e-15);

        let empty = Cut { mask: 0, weight: 0.0 };
        assert!(matches!(phi_cut(&p, &u, &empty), Err(Error::EmptyCutWeight)));
    }

    #[test]
    fn phi_chain_examples() {
        let u4 = Distribution::uniform(4);
        let k4 = phi_chain(&uniform_chain(4), &u4).unwrap();
        assert_abs_diff_eq!(k4.phi, 0.5, epsilon = 1e-15);
        assert_eq!(k4.argmin.mask, 0b0011);
        assert_eq!(phi_chain(&StochasticMatrix::identity(4), &u4).unwrap().phi, 0.0);
        let skew = Distribution::new(vec![0.4, 0.6]).unwrap();
        assert!(matches!(phi_chain(&uniform_chain(2), &skew), Err(Error::NotStationary { .. })));
    }

    #[test]
    fn phi_chain_is_the_minimum_over_cuts() {
        let g = cycle(6).unwrap();
        let p = StochasticMatrix::lazy_walk(&g, 0.3).unwrap();
        let pi = stationary(&p).unwrap();
        let best = phi_chain(&p, &pi).unwrap();
        for c in graph::enumerate_cuts(&g, &pi).unwrap() {
            assert!(best.phi <= phi_cut(&p, &pi, &c).unwrap());
        }
    }

    #[test]
    fn graph_conductance_small_cases() {
        // two nodes: stationarity forces P_{1,0} = P_{0,1} = a and phi = a
        let two = phi_graph(&path(2).unwrap(), &Distribution::uniform(2)).unwrap();
        assert_abs_diff_eq!(two.phi, 1.0, epsilon = 1e-9);

        // K4: the symmetric optimum (zero diagonal, 1/3 elsewhere) gives 2/3
        let k4 = complete(4).unwrap();
        let u = Distribution::uniform(4);
        let res = phi_graph(&k4, &u).unwrap();
        assert!(res.phi >= 0.5);
        assert_abs_diff_eq!(res.phi, 2.0 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(phi_chain(&res.chain, &u).unwrap().phi, res.phi, epsilon = 1e-8);
    }

    #[test]
    fn graph_conductance_dominates_given_chains() {
        let g = barbell(3).unwrap();
        let u = Distribution::uniform(6);
        let best = phi_graph(&g, &u).unwrap();
        assert!(best.phi <= 1.0 / 3.0 + 1e-8);
        for hold in [0.0, 0.2, 0.5, 0.9] {
            let p = StochasticMatrix::metropolis(&g, &u).unwrap();
            let lazy = StochasticMatrix::new(
                p.matrix() * (1.0 - hold) + DMatrix::identity(6, 6) * hold,
                Some(g.clone()),
            )
            .unwrap();
            assert!(phi_chain(&lazy, &u).unwrap().phi <= best.phi + 1e-8);
        }
        assert!(matches!(
            phi_graph(&cycle(15).unwrap(), &Distribution::uniform(15)),
            Err(Error::TooManyNodes { n: 15, .. })
        ));
    }

    #[test]
    fn leakage_examples() {
        let g = cycle(5).unwrap();
        let p = StochasticMatrix::lazy_walk(&g, 0.5).unwrap();
        let pi = Distribution::uniform(5);
        let x = Cut::from_members(&[0, 1], &pi).unwrap();
        let one = lemma1_check(&p, &pi, &x, 1).unwrap();
        assert_abs_diff_eq!(one.leakage, phi_cut(&p, &pi, &x).unwrap(), epsilon = 1e-15);
        assert!(one.ok);
        for t in 1..10 {
            let r = lemma1_check(&StochasticMatrix::identity(5), &pi, &x, t).unwrap();
            assert_eq!(r.leakage, 0.0);
        }
        assert!(lemma1_check(&p, &pi, &x, 0).is_err());
    }

    #[test]
    fn diameter_bound_on_lazy_cycle() {
        let g = cycle(16).unwrap();
        let p = StochasticMatrix::lazy_walk(&g, 0.5).unwrap();
        let r = diameter_conductance_check(&p, &Distribution::uniform(16), 8).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(diameter_conductance_check(&p, &Distribution::uniform(16), 1).is_err());
    }

    #[test]
    fn clock_contraction_examples() {
        let zero = clock_contraction_check(5, 0.01, &[0.0; 7]).unwrap();
        assert_eq!(zero.ratio, 0.0);
        let q0 = [0.3, -0.1, 0.2, -0.25, 0.05, 0.1, -0.3];
        let r = clock_contraction_check(5, 0.01, &q0).unwrap();
        assert_abs_diff_eq!(r.bound, 0.12, epsilon = 1e-15);
        assert!(r.ok, "{r:?}");
        assert!(matches!(clock_contraction_check(5, 0.1, &q0), Err(Error::BadGamma { .. })));
        assert!(clock_contraction_check(5, 0.01, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }
}
