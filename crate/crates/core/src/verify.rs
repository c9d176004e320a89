//! Named verification suites. Each suite returns a report of checks
//! `(check, measured, bound, pass)`; all randomness comes from one seed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::conductance::{self, clock_contraction_check, lemma1_check, phi_chain, phi_cut, phi_graph};
use crate::constructions::{
    diameter_mixer, diaconis_cycle_lift, four_cycle_lift, lazy_diaconis_cycle_lift, periodic_node_clock_lift,
    si_replicated_lift, stochastic_bridge, MixerParams, MixerVariant,
};
use crate::error::{Error, Result};
use crate::graph::{barbell, cycle, diameter, path, Cut, Graph};
use crate::lift::{
    self, adversarial_init, check_flow_match, check_invariance, default_lift_horizon, full_mixing_time,
    induced_chain, lifted_stationary, marginal_mixing_time, marginal_mixing_time_from, scenario_report, unlift_si,
    Init, Lift, ReportOptions,
};
use crate::markov::{self, is_irreducible, mixing_time, stationary, Distribution, MixingTime, StochasticMatrix, TimeVaryingChain};
use crate::random::{self, connected_graph, full_support, local_chain, subset_mask, zero_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemma1,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Example1,
    Example2,
    Example3,
    ClockContraction,
    BridgeExactness,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Lemma1,
        Suite::Thm1,
        Suite::Thm2,
        Suite::Thm3,
        Suite::Thm4,
        Suite::Example1,
        Suite::Example2,
        Suite::Example3,
        Suite::ClockContraction,
        Suite::BridgeExactness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Thm3 => "thm3",
            Suite::Thm4 => "thm4",
            Suite::Example1 => "example1",
            Suite::Example2 => "example2",
            Suite::Example3 => "example3",
            Suite::ClockContraction => "clock-contraction",
            Suite::BridgeExactness => "bridge-exactness",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// How `measured` must relate to `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    /// `None` stands for an unbounded value such as an unmixed chain.
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub relation: Relation,
    pub pass: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Check {
    fn new(check: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= bound,
            Relation::AtLeast => measured >= bound,
            Relation::Below => measured < bound,
            Relation::Equal => measured == bound,
        };
        Check {
            check: check.into(),
            measured: finite(measured),
            bound: finite(bound),
            relation,
            pass,
        }
    }

    fn at_most(check: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check::new(check, measured, Relation::AtMost, bound)
    }

    fn at_least(check: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check::new(check, measured, Relation::AtLeast, bound)
    }

    fn equal(check: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check::new(check, measured, Relation::Equal, bound)
    }

    fn holds(check: impl Into<String>, ok: bool) -> Self {
        Check::equal(check, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

fn steps(t: MixingTime) -> f64 {
    t.steps().map_or(f64::INFINITY, |s| s as f64)
}

/// Outcome of one suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub version: &'static str,
    pub seed: u64,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub fn tolerances() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("column_sum", markov::SUM_TOL),
        ("stationary_residual", markov::STATIONARY_RESIDUAL),
        ("lift_stationary", lift::LIFT_STATIONARY_TOL),
        ("invariance", lift::INVARIANCE_TOL),
        ("exact_flows", lift::EXACT_FLOW_TOL),
        ("cesaro_step", lift::CESARO_TOL),
        ("lp_residual", conductance::LP_TOL),
        ("inequality_slack", conductance::CHECK_SLACK),
        ("bridge_endpoint", BRIDGE_TOL),
        ("correction_residual", crate::constructions::CORRECTION_TOL),
    ])
}

/// Endpoint accuracy required of stochastic bridges.
pub const BRIDGE_TOL: f64 = 1e-10;
/// Mixing threshold used by every suite.
pub const EPS: f64 = 0.25;

pub fn run(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Lemma1 => lemma1(seed)?,
        Suite::Thm1 => thm1(seed)?,
        Suite::Thm2 => thm2(seed)?,
        Suite::Thm3 => thm3()?,
        Suite::Thm4 => thm4()?,
        Suite::Example1 => example1()?,
        Suite::Example2 => example2()?,
        Suite::Example3 => example3()?,
        Suite::ClockContraction => clock_contraction(seed)?,
        Suite::BridgeExactness => bridge_exactness(seed)?,
    };
    Ok(SuiteReport {
        suite,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        tolerances: tolerances(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    markov::tv_distance(
        &Distribution::normalized(a.to_vec()).expect("nonnegative"),
        &Distribution::normalized(b.to_vec()).expect("nonnegative"),
    )
    .expect("same length")
}

fn lemma1(seed: u64) -> Result<Vec<Check>> {
    let mut rng = random::rng(seed);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let g = connected_graph(&mut rng, n, 0.3)?;
        let p = local_chain(&mut rng, &g)?;
        let pi = stationary(&p)?;
        let mask = subset_mask(&mut rng, n);
        let x = Cut::from_members(&(0..n).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>(), &pi)?;
        let t = rng.random_range(1..=20);
        let r = lemma1_check(&p, &pi, &x, t)?;
        worst = worst.max(r.leakage - r.bound);
        violations += usize::from(!r.ok);
    }
    // one step leaks exactly the cut conductance
    let g = cycle(6)?;
    let p = StochasticMatrix::lazy_walk(&g, 0.4)?;
    let pi = Distribution::uniform(6);
    let x = Cut::from_members(&[0, 1, 2], &pi)?;
    let one = lemma1_check(&p, &pi, &x, 1)?;
    Ok(vec![
        Check::equal("violations", violations as f64, 0.0),
        Check::at_most("max_leakage_minus_bound", worst, conductance::CHECK_SLACK),
        Check::at_most("one_step_leakage_gap", (one.leakage - phi_cut(&p, &pi, &x)?).abs(), 1e-15),
    ])
}

fn thm1(seed: u64) -> Result<Vec<Check>> {
    let mut rng = random::rng(seed);
    let g = cycle(6)?;
    let p = StochasticMatrix::lazy_walk(&g, 0.3)?;
    let l = si_replicated_lift(&p, 2)?;
    let pi = Distribution::uniform(6);
    let inv = check_invariance(&l, &pi, Init::Free, 1)?;
    let choice: Vec<usize> = (0..6).map(|j| j + 6 * rng.random_range(0..2)).collect();
    let un = unlift_si(&l, &choice)?;
    let op = l.chain().sparse();
    let base = un.chain.sparse();
    let mut gap: f64 = 0.0;
    for _ in 0..20 {
        let mut x = full_support(&mut rng, 12)?.into_vec();
        let mut q = l.map().collapse(&x);
        for _ in 0..50 {
            x = op.mul(&x);
            q = base.mul(&q);
            gap = gap.max(tv(&l.map().collapse(&x), &q));
        }
    }
    let unlift_err = (un.chain.matrix() - p.matrix()).amax();

    let d = diaconis_cycle_lift(8)?;
    let u8 = Distribution::uniform(8);
    let d_inv = check_invariance(&d, &u8, Init::Free, 1)?;
    let witness = diaconis_witness(8);
    let cax = d.map().collapse(&d.chain().sparse().mul(&witness));
    let d_un = unlift_si(&d, &(0..8).collect::<Vec<_>>())?;
    Ok(vec![
        Check::at_most("replicated_invariance_dev", inv.max_dev, lift::INVARIANCE_TOL),
        Check::at_most("replicated_unlift_error", unlift_err, 1e-12),
        Check::at_most("replicated_trajectory_gap", gap, 1e-9),
        Check::holds("diaconis_fails_invariance", !d_inv.holds),
        Check::holds("diaconis_unlift_flagged", !d_un.equivalent),
        Check::equal("diaconis_witness_mass_at_2", cax[2], 0.0),
    ])
}

/// Mass `1/N` on `(-, 1)` and on `(+, k)` for every other `k`.
fn diaconis_witness(n: usize) -> Vec<f64> {
    let mut x = vec![0.0; 2 * n];
    for k in 0..n {
        x[if k == 1 { n + 1 } else { k }] = 1.0 / n as f64;
    }
    x
}

fn named_instances(seed: u64) -> Result<Vec<(String, Graph, Distribution)>> {
    let mut out = vec![
        ("barbell(6)".to_string(), barbell(6)?, Distribution::uniform(12)),
        ("cycle(8)".to_string(), cycle(8)?, Distribution::uniform(8)),
        ("path(5)".to_string(), path(5)?, Distribution::uniform(5)),
    ];
    let mut rng = random::rng(seed);
    for k in 0..20 {
        let n = rng.random_range(3..=10);
        let g = connected_graph(&mut rng, n, 0.25)?;
        out.push((format!("random{k}"), g, full_support(&mut rng, n)?));
    }
    Ok(out)
}

fn thm2(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, g, pi) in named_instances(seed)? {
        let d = diameter(&g)?;
        let l = diameter_mixer(&g, &pi, MixerVariant::Reducible, &MixerParams::default())?.lift;
        let f = l.init().ok_or(Error::MissingInitMap)?;
        let op = l.chain().sparse();
        let mut worst: f64 = 0.0;
        for i in 0..g.n() {
            let mut x = f.column(i);
            for _ in 0..d {
                x = op.mul(&x);
            }
            worst = worst.max(tv(&l.map().collapse(&x), pi.as_slice()));
        }
        let tau = marginal_mixing_time(&l, &pi, EPS, Init::Designed, default_lift_horizon(&l))?;
        checks.push(Check::at_most(format!("tv_at_D[{name}]"), worst, BRIDGE_TOL));
        checks.push(Check::at_most(format!("tau_M[{name}]"), steps(tau), (d + 1) as f64));
    }

    let c8 = cycle(8)?;
    let u8 = Distribution::uniform(8);
    let lazy = StochasticMatrix::lazy_walk(&c8, 0.5)?;
    let params = MixerParams {
        reference: Some(lazy.clone()),
        ..MixerParams::default()
    };
    let flows = diameter_mixer(&c8, &u8, MixerVariant::Flows, &params)?.lift;
    let seed_x = Distribution::normalized(flows.init().ok_or(Error::MissingInitMap)?.apply(u8.as_slice()))?;
    let pi_hat = lifted_stationary(&flows, &seed_x)?;
    let fm = check_flow_match(&flows, &pi_hat, &lazy, lift::EXACT_FLOW_TOL)?;
    checks.push(Check::at_most("flow_dev[flows variant, cycle(8)]", fm.max_dev, lift::EXACT_FLOW_TOL));

    for (name, g, pi, p) in corollary_instances()? {
        let gamma = 1e-3;
        let params = MixerParams {
            gamma,
            reference: Some(p.clone()),
        };
        let m = diameter_mixer(&g, &pi, MixerVariant::Irreducible, &params)?;
        let l = &m.lift;
        let pi_hat = stationary(l.chain())?;
        let off = tv(&l.map().collapse(pi_hat.as_slice()), pi.as_slice());
        let fm = check_flow_match(l, &pi_hat, &p, 10.0 * gamma)?;
        let d = diameter(&g)?;
        let tau = marginal_mixing_time(l, &pi, EPS, Init::Designed, default_lift_horizon(l))?;
        checks.push(Check::holds(format!("irreducible[{name}]"), is_irreducible(l.chain())));
        checks.push(Check::at_most(format!("marginal_tv[{name}]"), off, lift::LIFT_STATIONARY_TOL));
        checks.push(Check::at_most(format!("flow_dev[{name}]"), fm.max_dev, 10.0 * m.gamma.unwrap_or(gamma)));
        checks.push(Check::at_most(format!("tau_M[irreducible, {name}]"), steps(tau), (d + 1) as f64));
    }
    Ok(checks)
}

fn corollary_instances() -> Result<Vec<(&'static str, Graph, Distribution, StochasticMatrix)>> {
    let c4 = cycle(4)?;
    let lazy = StochasticMatrix::lazy_walk(&c4, 0.5)?;
    let b3 = barbell(3)?;
    let u6 = Distribution::uniform(6);
    let metro = StochasticMatrix::metropolis(&b3, &u6)?;
    Ok(vec![
        ("cycle(4)", c4, Distribution::uniform(4), lazy),
        ("barbell(3)", b3, u6, metro),
    ])
}

/// `tau_M` from the adversarial start on the worst cut of the induced chain,
/// and the bound `1/(4 Phi(induced)) - 1`.
fn adversarial_time(l: &Lift) -> Result<(MixingTime, f64)> {
    let seed = match l.init() {
        Some(f) => f.apply(&vec![1.0 / l.base_n() as f64; l.base_n()]),
        None => vec![1.0 / l.lifted_n() as f64; l.lifted_n()],
    };
    let pi_hat = lifted_stationary(l, &Distribution::normalized(seed)?)?;
    let pi_m = Distribution::new(l.map().collapse(pi_hat.as_slice()))?;
    let p_tilde = induced_chain(l, &pi_hat)?;
    let best = phi_chain(&p_tilde, &pi_m)?;
    let x0 = adversarial_init(l.map(), &pi_hat, &best.argmin)?;
    let tau = marginal_mixing_time_from(l, &pi_m, EPS, &x0, default_lift_horizon(l))?;
    let bound = if best.phi > 0.0 { 1.0 / (4.0 * best.phi) - 1.0 } else { f64::INFINITY };
    Ok((tau, bound))
}

fn thm3() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut lifts: Vec<(String, Lift)> = vec![
        ("diaconis N=8".into(), diaconis_cycle_lift(8)?),
        ("diaconis N=16".into(), diaconis_cycle_lift(16)?),
        ("lazy diaconis N=16".into(), lazy_diaconis_cycle_lift(16, 1.0 / 16.0)?),
        ("four-cycle".into(), four_cycle_lift(0.05, 0.01)?.lift),
    ];
    for (name, g, pi, p) in corollary_instances()? {
        let params = MixerParams {
            gamma: 1e-3,
            reference: Some(p),
        };
        lifts.push((format!("irreducible mixer {name}"), diameter_mixer(&g, &pi, MixerVariant::Irreducible, &params)?.lift));
    }
    for (name, l) in &lifts {
        let (tau, bound) = adversarial_time(l)?;
        checks.push(Check::at_least(format!("adversarial_tau_M[{name}]"), steps(tau), bound));
    }
    // graph conductance bound under free initialization
    let l = lazy_diaconis_cycle_lift(8, 1.0 / 8.0)?;
    let u8 = Distribution::uniform(8);
    let tau = marginal_mixing_time(&l, &u8, EPS, Init::Free, default_lift_horizon(&l))?;
    let phi = phi_graph(&cycle(8)?, &u8)?.phi;
    checks.push(Check::at_least("tau_M[lazy diaconis N=8] vs 1/(4 Phi)", steps(tau), 1.0 / (4.0 * phi)));
    let report = scenario_report(
        &lazy_diaconis_cycle_lift(16, 1.0 / 16.0)?,
        &"sImrE".parse()?,
        &Distribution::uniform(16),
        None,
        ReportOptions::default(),
    )?;
    checks.push(Check::holds("scenario sImrE [lazy diaconis N=16]", report.pass));
    Ok(checks)
}

/// Bridges for every start obtained by rotating the bridge from node 0.
fn rotated_bridges(n: usize) -> Result<Vec<TimeVaryingChain>> {
    let g = cycle(n)?;
    let base = stochastic_bridge(&g, &Distribution::point(n, 0), &Distribution::uniform(n))?;
    (0..n)
        .map(|s| {
            let steps = base
                .steps()
                .iter()
                .map(|p| {
                    let m = DMatrix::from_fn(n, n, |i, j| p.get((i + n - s) % n, (j + n - s) % n));
                    StochasticMatrix::new(m, Some(g.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            TimeVaryingChain::new(n, steps)
        })
        .collect()
}

fn thm4() -> Result<Vec<Check>> {
    let n = 8;
    let g = cycle(n)?;
    let d = diameter(&g)?;
    let u = Distribution::uniform(n);
    let l = periodic_node_clock_lift(&g, &rotated_bridges(n)?)?;
    let horizon = 10 * (d + 1);
    let free = marginal_mixing_time(&l, &u, EPS, Init::Free, horizon)?;
    let inv = check_invariance(&l, &u, Init::Designed, horizon)?;

    let fc = four_cycle_lift(0.05, 0.01)?;
    let u4 = Distribution::uniform(4);
    let tau = marginal_mixing_time(&fc.lift, &u4, EPS, Init::Designed, 200)?;
    let phi = phi_graph(&cycle(4)?, &u4)?.phi;
    let report = scenario_report(&fc.lift, &"Simre".parse()?, &u4, Some(&fc.reference), ReportOptions::default())?;
    Ok(vec![
        Check::at_most("tau_M[periodic node-clock, cycle(8), free start]", steps(free), 2.0 * (d + 1) as f64),
        Check::holds("invariance[periodic node-clock, cycle(8)]", inv.holds),
        Check::at_least("tau_M[four-cycle] vs 1/(8 Phi)", steps(tau), 1.0 / (8.0 * phi)),
        Check::holds("scenario Simre [four-cycle]", report.pass),
    ])
}

fn example1() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let sizes = [16usize, 32, 64];
    let mut lift_tau = Vec::new();
    let mut walk_tau = Vec::new();
    for &n in &sizes {
        let l = lazy_diaconis_cycle_lift(n, 1.0 / n as f64)?;
        lift_tau.push(steps(full_mixing_time(&l, EPS, Init::Free, default_lift_horizon(&l))?));
        let walk = StochasticMatrix::lazy_walk(&cycle(n)?, 0.5)?;
        walk_tau.push(steps(mixing_time(&walk, &Distribution::uniform(n), EPS, markov::default_horizon(n))?));
        checks.push(Check::at_most(format!("tau[lift N={n}]"), lift_tau.last().copied().unwrap_or(0.0), f64::INFINITY));
        checks.push(Check::at_most(format!("tau[walk N={n}]"), walk_tau.last().copied().unwrap_or(0.0), f64::INFINITY));
    }
    for k in 1..sizes.len() {
        let rl = lift_tau[k] / lift_tau[k - 1];
        let rw = walk_tau[k] / walk_tau[k - 1];
        checks.push(Check::at_least(format!("lift_ratio_min[N={}]", sizes[k]), rl, 1.6));
        checks.push(Check::at_most(format!("lift_ratio_max[N={}]", sizes[k]), rl, 2.6));
        checks.push(Check::at_least(format!("walk_ratio_min[N={}]", sizes[k]), rw, 3.2));
        checks.push(Check::at_most(format!("walk_ratio_max[N={}]", sizes[k]), rw, 4.8));
    }
    checks.push(Check::at_least("speedup[N=64]", walk_tau[2] / lift_tau[2], 4.0));

    let n = 16;
    let l = lazy_diaconis_cycle_lift(n, 1.0 / n as f64)?;
    let tau_m = steps(marginal_mixing_time(&l, &Distribution::uniform(n), EPS, Init::Free, default_lift_horizon(&l))?);
    checks.push(Check::at_most("tau_M[N=16] <= 2N", tau_m, 2.0 * n as f64));
    checks.push(Check::at_least("tau_M[N=16] >= N/4", tau_m, n as f64 / 4.0));
    let plain = diaconis_cycle_lift(n)?;
    let plain_tau = full_mixing_time(&plain, EPS, Init::Free, default_lift_horizon(&plain))?;
    checks.push(Check::holds("non-lazy lift on even N never mixes", plain_tau == MixingTime::Unmixed));
    let witness = diaconis_witness(8);
    let d8 = diaconis_cycle_lift(8)?;
    let cax = d8.map().collapse(&d8.chain().sparse().mul(&witness));
    checks.push(Check::equal("witness_mass_at_2", cax[2], 0.0));
    Ok(checks)
}

fn example2() -> Result<Vec<Check>> {
    let mut checks = vec![Check::equal("diameter[barbell(6)]", diameter(&barbell(6)?)? as f64, 3.0)];
    for n in 3..=6 {
        let g = barbell(n)?;
        let u = Distribution::uniform(2 * n);
        let best = phi_graph(&g, &u)?;
        checks.push(Check::at_most(format!("phi_graph[barbell({n})]"), best.phi, 1.0 / n as f64 + conductance::LP_TOL));
        let again = phi_chain(&best.chain, &u)?.phi;
        checks.push(Check::at_most(format!("lp_self_consistency[barbell({n})]"), (again - best.phi).abs(), conductance::LP_TOL));
    }
    Ok(checks)
}

fn example3() -> Result<Vec<Check>> {
    let (delta, gamma) = (0.05, 0.01);
    let fc = four_cycle_lift(delta, gamma)?;
    let u4 = Distribution::uniform(4);
    let tau_m = marginal_mixing_time(&fc.lift, &u4, EPS, Init::Designed, 200)?;
    let pi_hat = lifted_stationary(&fc.lift, &Distribution::uniform(12))?;
    let fm = check_flow_match(&fc.lift, &pi_hat, &fc.reference, 1e-9)?;
    let phi_p = phi_chain(&fc.reference, &u4)?.phi;
    let bound = 1.0 / (4.0 * phi_p);
    let phi_g = phi_graph(&cycle(4)?, &u4)?.phi;
    let small = four_cycle_lift(0.01, gamma)?;
    let bound_small = 1.0 / (4.0 * phi_chain(&small.reference, &u4)?.phi);
    let ratio = bound_small / bound;
    Ok(vec![
        Check::equal("tau_M", steps(tau_m), 2.0),
        Check::at_most("flow_dev", fm.max_dev, 1e-9),
        Check::at_most("bound_1_over_4PhiP_error", (bound - 5.07).abs(), 0.01),
        Check::new("bound_1_over_4PhiP", steps(tau_m), Relation::Below, bound),
        Check::at_least("bound_1_over_8Phi", steps(tau_m), 1.0 / (8.0 * phi_g)),
        Check::at_least("speedup_ratio_delta_0.01_min", ratio, 4.5),
        Check::at_most("speedup_ratio_delta_0.01_max", ratio, 5.5),
        Check::holds("irreducible", is_irreducible(fc.lift.chain())),
    ])
}

fn clock_contraction(seed: u64) -> Result<Vec<Check>> {
    let mut rng = random::rng(seed);
    let mut checks = Vec::new();
    for d in 2..=10usize {
        let gamma = 0.4 / (2.0 * (d as f64 + 1.0));
        let mut worst: f64 = 0.0;
        let mut bound = 0.0;
        for _ in 0..100 {
            let r = clock_contraction_check(d, gamma, &zero_sum(&mut rng, d + 2))?;
            worst = worst.max(r.ratio);
            bound = r.bound;
        }
        checks.push(Check::at_most(format!("ratio[D={d}]"), worst, bound + conductance::CHECK_SLACK));
    }
    Ok(checks)
}

fn bridge_exactness(seed: u64) -> Result<Vec<Check>> {
    let mut rng = random::rng(seed);
    let mut worst_tv: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut nonlocal = 0usize;
    let mut bad_length = 0usize;
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let g = connected_graph(&mut rng, n, 0.2)?;
        let target = full_support(&mut rng, n)?;
        let d = diameter(&g)?;
        for i in 0..n {
            let b = stochastic_bridge(&g, &Distribution::point(n, i), &target)?;
            bad_length += usize::from(b.len() != d);
            for step in b.steps() {
                for c in 0..n {
                    worst_sum = worst_sum.max((step.matrix().column(c).sum() - 1.0).abs());
                    for r in 0..n {
                        if step.get(r, c) != 0.0 && r != c && !g.has_arc(c, r) {
                            nonlocal += 1;
                        }
                    }
                }
            }
            let end = b.apply(&Distribution::point(n, i))?;
            worst_tv = worst_tv.max(markov::tv_distance(&end, &target)?);
        }
    }
    Ok(vec![
        Check::at_most("worst_endpoint_tv", worst_tv, BRIDGE_TOL),
        Check::at_most("worst_column_sum_error", worst_sum, 1e-12),
        Check::equal("nonlocal_moves", nonlocal as f64, 0.0),
        Check::equal("wrong_length", bad_length as f64, 0.0),
    ])
}
