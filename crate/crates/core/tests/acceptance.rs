//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines are always printed.

// `!(a <= b)` is intended: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use liftmix::conductance::{clock_contraction_check, lemma1_check, phi_chain, phi_graph};
use liftmix::constructions::{
    diameter_mixer, four_cycle_lift, lazy_diaconis_cycle_lift, si_replicated_lift, stochastic_bridge, diaconis_cycle_lift,
    MixerParams, MixerVariant,
};
use liftmix::graph::{barbell, cycle, diameter, path, Cut, Graph};
use liftmix::lift::{
    adversarial_init, check_invariance, default_lift_horizon, full_mixing_time, induced_chain,
    lifted_stationary, marginal_mixing_time, marginal_mixing_time_from, unlift_si, Init, Lift,
};
use liftmix::markov::{default_horizon, is_irreducible, mixing_time, stationary, Distribution, MixingTime, StochasticMatrix};
use liftmix::random::{self, connected_graph, full_support, local_chain, subset_mask, zero_sum};
use nalgebra::{DMatrix, DVector};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn collapse(l: &Lift, x: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; l.base_n()];
    for (k, v) in x.iter().enumerate() {
        p[l.map().project(k)] += v;
    }
    p
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    }
}

/// The graphs and targets of the diameter-mixer criterion.
fn mixer_instances() -> Vec<(String, Graph, Distribution)> {
    let mut out = vec![
        ("barbell(6)".to_string(), barbell(6).unwrap(), Distribution::uniform(12)),
        ("cycle(8)".to_string(), cycle(8).unwrap(), Distribution::uniform(8)),
        ("path(5)".to_string(), path(5).unwrap(), Distribution::uniform(5)),
    ];
    let mut rng = random::rng(0);
    for k in 0..20 {
        let n = 3 + k % 8;
        let g = connected_graph(&mut rng, n, 0.25).unwrap();
        let pi = full_support(&mut rng, n).unwrap();
        out.push((format!("random #{k} (n={n})"), g, pi));
    }
    out
}

fn corollary_instances() -> Vec<(&'static str, Graph, Distribution, StochasticMatrix)> {
    let c4 = cycle(4).unwrap();
    let lazy = StochasticMatrix::lazy_walk(&c4, 0.5).unwrap();
    let b3 = barbell(3).unwrap();
    let u6 = Distribution::uniform(6);
    let metro = StochasticMatrix::metropolis(&b3, &u6).unwrap();
    vec![
        ("cycle(4)", c4, Distribution::uniform(4), lazy),
        ("barbell(3)", b3, u6, metro),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_tv: f64 = 0.0;
    let instances = mixer_instances();
    for (name, g, pi) in &instances {
        let d = diameter(g).unwrap();
        let l = diameter_mixer(g, pi, MixerVariant::Reducible, &MixerParams::default())
            .unwrap()
            .lift;
        let a = l.chain().matrix();
        let f = l.init().unwrap().matrix();
        for i in 0..g.n() {
            let mut x: DVector<f64> = f.column(i).into_owned();
            for _ in 0..d {
                x = a * x;
            }
            let err = tv(&collapse(&l, x.as_slice()), pi.as_slice());
            worst_tv = worst_tv.max(err);
            ensure!(err <= 1e-10, "{name}: start {i} has tv {err:.2e} at t = D = {d}");
        }
        let tau = marginal_mixing_time(&l, pi, 0.25, Init::Designed, default_lift_horizon(&l)).unwrap();
        ensure!(tau.at_most((d + 1) as f64), "{name}: tau_M = {tau:?} > D + 1 = {}", d + 1);
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{} graphs, worst tv at t = D {worst_tv:.1e}, tau_M <= D + 1",
        instances.len()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let gamma = 1e-3;
    let mut details = Vec::new();
    for (name, g, pi, p) in corollary_instances() {
        let params = MixerParams {
            gamma,
            reference: Some(p.clone()),
        };
        let m = diameter_mixer(&g, &pi, MixerVariant::Irreducible, &params).unwrap();
        let l = &m.lift;
        let used = m.gamma.unwrap();
        ensure!(is_irreducible(l.chain()), "{name}: lift is reducible");
        let pi_hat = stationary(l.chain()).unwrap();
        let a = l.chain().matrix();
        let x = DVector::from_column_slice(pi_hat.as_slice());
        ensure!(((a * &x) - &x).amax() < 1e-12, "{name}: pi_hat is not stationary");
        let off = collapse(l, pi_hat.as_slice())
            .iter()
            .zip(pi.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        ensure!(off <= 1e-8, "{name}: marginal of pi_hat off by {off:.2e}");
        // flows recomputed from the dense matrix
        let n = g.n();
        let mut q_hat = DMatrix::<f64>::zeros(n, n);
        for k in 0..l.lifted_n() {
            for r in 0..l.lifted_n() {
                q_hat[(l.map().project(r), l.map().project(k))] += a[(r, k)] * pi_hat[k];
            }
        }
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((q_hat[(i, j)] - p.get(i, j) * pi[j]).abs());
            }
        }
        ensure!(dev <= 10.0 * used, "{name}: flow deviation {dev:.2e} > 10 gamma");
        let d = diameter(&g).unwrap();
        let tau = marginal_mixing_time(l, &pi, 0.25, Init::Designed, default_lift_horizon(l)).unwrap();
        ensure!(tau.at_most((d + 1) as f64), "{name}: tau_M = {tau:?} > D + 1");
        details.push(format!("{name}: gamma {used}, {} nodes, flow dev {dev:.1e}", l.lifted_n()));
    }
    within(Duration::from_secs(10), start)?;
    Ok(details.join("; "))
}

/// Dense oracle: worst point-mass start, scanning every `t` to the horizon.
fn dense_mixing_time(a: &DMatrix<f64>, target: &[f64], eps: f64, t_max: usize) -> Option<usize> {
    let n = a.nrows();
    let mut worst = 0;
    for s in 0..n {
        let mut x = DVector::zeros(n);
        x[s] = 1.0;
        let mut last_bad = None;
        for t in 0..=t_max {
            if tv(x.as_slice(), target) > eps {
                last_bad = Some(t);
            }
            x = a * x;
        }
        match last_bad {
            Some(t) if t == t_max => return None,
            Some(t) => worst = worst.max(t + 1),
            None => {}
        }
    }
    Some(worst)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let sizes = [16usize, 32, 64];
    let mut lift_tau = Vec::new();
    let mut walk_tau = Vec::new();
    for &n in &sizes {
        let l = lazy_diaconis_cycle_lift(n, 1.0 / n as f64).unwrap();
        let t = full_mixing_time(&l, 0.25, Init::Free, default_lift_horizon(&l)).unwrap();
        let walk = StochasticMatrix::lazy_walk(&cycle(n).unwrap(), 0.5).unwrap();
        let w = mixing_time(&walk, &Distribution::uniform(n), 0.25, default_horizon(n)).unwrap();
        ensure!(t.steps().is_some() && w.steps().is_some(), "N = {n}: unmixed");
        if n == 16 {
            let u2 = vec![1.0 / 32.0; 32];
            let oracle = dense_mixing_time(l.chain().matrix(), &u2, 0.25, 400);
            ensure!(oracle == t.steps(), "N = 16: lift tau {t:?} vs dense oracle {oracle:?}");
            let oracle = dense_mixing_time(walk.matrix(), &[1.0 / 16.0; 16], 0.25, 400);
            ensure!(oracle == w.steps(), "N = 16: walk tau {w:?} vs dense oracle {oracle:?}");
        }
        lift_tau.push(t.steps().unwrap() as f64);
        walk_tau.push(w.steps().unwrap() as f64);
    }
    for k in 1..sizes.len() {
        let rl = lift_tau[k] / lift_tau[k - 1];
        let rw = walk_tau[k] / walk_tau[k - 1];
        ensure!((1.6..=2.6).contains(&rl), "lift ratio {rl:.2} at N = {}", sizes[k]);
        ensure!((3.2..=4.8).contains(&rw), "walk ratio {rw:.2} at N = {}", sizes[k]);
    }
    let speedup = walk_tau[2] / lift_tau[2];
    ensure!(speedup >= 4.0, "speedup at N = 64 is {speedup:.2}");
    // the non-lazy lift is periodic on even N
    let plain = diaconis_cycle_lift(16).unwrap();
    let plain_tau = full_mixing_time(&plain, 0.25, Init::Free, 800).unwrap();
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "lift tau {lift_tau:?}, walk tau {walk_tau:?}, speedup {speedup:.2} at N = 64 (non-lazy N = 16: {plain_tau:?})"
    ))
}

fn criterion_4() -> Outcome {
    let mut vals = Vec::new();
    for n in 3..=6 {
        let g = barbell(n).unwrap();
        let phi = phi_graph(&g, &Distribution::uniform(2 * n)).unwrap().phi;
        ensure!(phi <= 1.0 / n as f64 + 1e-8, "barbell({n}): phi {phi} > 1/{n}");
        vals.push(format!("n={n}: {phi:.4}"));
    }
    Ok(vals.join(", "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (delta, gamma) = (0.05, 0.01);
    let fc = four_cycle_lift(delta, gamma).unwrap();
    let l = &fc.lift;
    let u4 = Distribution::uniform(4);
    let tau = marginal_mixing_time(l, &u4, 0.25, Init::Designed, 200).unwrap();
    ensure!(tau == MixingTime::Mixed(2), "tau_M = {tau:?}");
    // closed-form steady state
    let layer = [gamma, gamma, 1.0].map(|w| w / (1.0 + 2.0 * gamma) / 4.0);
    let pi_hat: Vec<f64> = (0..12).map(|k| layer[k / 4]).collect();
    let a = l.chain().matrix();
    let x = DVector::from_column_slice(&pi_hat);
    ensure!(((a * &x) - &x).amax() < 1e-15, "closed-form steady state is not stationary");
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut q = 0.0;
            for r in (0..12).filter(|r| r % 4 == i) {
                for k in (0..12).filter(|k| k % 4 == j) {
                    q += a[(r, k)] * pi_hat[k];
                }
            }
            dev = dev.max((q - fc.reference.get(i, j) / 4.0).abs());
        }
    }
    ensure!(dev <= 1e-9, "flow deviation {dev:.2e}");
    let phi_p = phi_chain(&fc.reference, &u4).unwrap().phi;
    ensure!(((1.0 - fc.phi) * delta - phi_p).abs() < 1e-12, "Phi(P) = {phi_p}");
    let flow_bound = 1.0 / (4.0 * phi_p);
    ensure!((flow_bound - 5.07).abs() < 0.01, "1/(4 Phi(P)) = {flow_bound}");
    ensure!(tau.at_most(flow_bound), "tau_M does not beat 1/(4 Phi(P))");
    let phi_g = phi_graph(&cycle(4).unwrap(), &u4).unwrap().phi;
    let graph_bound = 1.0 / (8.0 * phi_g);
    ensure!(tau.at_least(graph_bound), "tau_M below 1/(8 Phi) = {graph_bound}");
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "tau_M = 2, flow dev {dev:.1e}, 1/(4 Phi(P)) = {flow_bound:.3}, 1/(8 Phi) = {graph_bound:.3}"
    ))
}

fn criterion_6() -> Outcome {
    let g = cycle(6).unwrap();
    let p = StochasticMatrix::lazy_walk(&g, 0.3).unwrap();
    let l = si_replicated_lift(&p, 2).unwrap();
    let pi = Distribution::uniform(6);
    ensure!(check_invariance(&l, &pi, Init::Free, 1).unwrap().holds, "replicated lift fails invariance");
    let un = unlift_si(&l, &[6, 1, 8, 3, 10, 5]).unwrap();
    ensure!(un.equivalent, "replicated lift flagged as not equivalent");
    let a = l.chain().matrix();
    let pq = un.chain.matrix();
    let mut rng = random::rng(0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x0 = full_support(&mut rng, 12).unwrap();
        let mut x = DVector::from_column_slice(x0.as_slice());
        let mut p_t = DVector::from_vec(collapse(&l, x0.as_slice()));
        for _ in 0..50 {
            x = a * x;
            p_t = pq * p_t;
            worst = worst.max(tv(&collapse(&l, x.as_slice()), p_t.as_slice()));
        }
    }
    ensure!(worst <= 1e-9, "trajectory gap {worst:.2e}");

    let n = 8;
    let d = diaconis_cycle_lift(n).unwrap();
    let u = Distribution::uniform(n);
    let check = check_invariance(&d, &u, Init::Free, 1).unwrap();
    ensure!(!check.holds, "Diaconis lift passes the invariance test");
    // (+, 3), (-, 1) and (+, k) elsewhere
    let mut x = vec![0.0; 2 * n];
    for k in 0..n {
        x[if k == 1 { n + 1 } else { k }] = 1.0 / n as f64;
    }
    let cax = collapse(&d, (d.chain().matrix() * DVector::from_vec(x)).as_slice());
    ensure!(cax[2] == 0.0, "(CAx)_2 = {}", cax[2]);
    Ok(format!("replicated gap {worst:.1e}; Diaconis witness gives (CAx)_2 = 0"))
}

fn criterion_7() -> Outcome {
    let mut rng = random::rng(0);
    let mut violations = 0;
    for _ in 0..500 {
        let n = 2 + rand::Rng::random_range(&mut rng, 0..7usize);
        let g = connected_graph(&mut rng, n, 0.3).unwrap();
        let p = local_chain(&mut rng, &g).unwrap();
        let pi = stationary(&p).unwrap();
        let mask = subset_mask(&mut rng, n);
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let x = Cut::from_members(&members, &pi).unwrap();
        let t = 1 + rand::Rng::random_range(&mut rng, 0..20usize);
        if !lemma1_check(&p, &pi, &x, t).unwrap().ok {
            violations += 1;
        }
    }
    ensure!(violations == 0, "{violations} violations");
    Ok("500 instances, 0 violations".into())
}

/// Every lift built by the criteria above, with its target.
fn constructed_lifts() -> Vec<(String, Lift)> {
    let mut out = Vec::new();
    for (name, g, pi) in mixer_instances() {
        let m = diameter_mixer(&g, &pi, MixerVariant::Reducible, &MixerParams::default()).unwrap();
        out.push((format!("reducible mixer on {name}"), m.lift));
    }
    for (name, g, pi, p) in corollary_instances() {
        let params = MixerParams {
            gamma: 1e-3,
            reference: Some(p),
        };
        let m = diameter_mixer(&g, &pi, MixerVariant::Irreducible, &params).unwrap();
        out.push((format!("irreducible mixer on {name}"), m.lift));
    }
    for n in [16, 32, 64] {
        out.push((format!("lazy Diaconis N={n}"), lazy_diaconis_cycle_lift(n, 1.0 / n as f64).unwrap()));
    }
    out.push(("four-cycle lift".into(), four_cycle_lift(0.05, 0.01).unwrap().lift));
    out
}

/// Conductance of `p` over cuts that are arcs of the cycle, with the
/// minimizing node set. Exact for rotation-invariant chains.
fn cycle_interval_phi(p: &StochasticMatrix, pi: &[f64]) -> (f64, Vec<usize>) {
    let n = p.n();
    let mut best = (f64::INFINITY, Vec::new());
    for s in 0..n {
        for len in 1..n {
            let set: Vec<usize> = (0..len).map(|k| (s + k) % n).collect();
            let w: f64 = set.iter().map(|&i| pi[i]).sum();
            if w > 0.5 + 1e-12 {
                continue;
            }
            let mut inside = vec![false; n];
            for &i in &set {
                inside[i] = true;
            }
            let mut flow = 0.0;
            for &i in &set {
                for j in (0..n).filter(|&j| !inside[j]) {
                    flow += p.get(j, i) * pi[i];
                }
            }
            if flow / w < best.0 {
                best = (flow / w, set);
            }
        }
    }
    best
}

fn criterion_8() -> Outcome {
    let lifts = constructed_lifts();
    let mut checked = 0;
    for (name, l) in &lifts {
        let seed = match l.init() {
            Some(f) => f.apply(&vec![1.0 / l.base_n() as f64; l.base_n()]),
            None => vec![1.0 / l.lifted_n() as f64; l.lifted_n()],
        };
        let pi_hat = lifted_stationary(l, &Distribution::normalized(seed).unwrap()).unwrap();
        let pi_m = Distribution::normalized(collapse(l, pi_hat.as_slice())).unwrap();
        let p_tilde = induced_chain(l, &pi_hat).unwrap();
        let (phi, x0) = if l.base_n() <= 24 {
            let best = phi_chain(&p_tilde, &pi_m).unwrap();
            (best.phi, adversarial_init(l.map(), &pi_hat, &best.argmin).unwrap())
        } else {
            let (phi, set) = cycle_interval_phi(&p_tilde, pi_m.as_slice());
            let w: Vec<f64> = (0..l.lifted_n())
                .map(|k| if set.contains(&l.map().project(k)) { pi_hat[k] } else { 0.0 })
                .collect();
            (phi, Distribution::normalized(w).unwrap())
        };
        let bound = if phi > 0.0 { 1.0 / (4.0 * phi) - 1.0 } else { f64::INFINITY };
        let tau = marginal_mixing_time_from(l, &pi_m, 0.25, &x0, default_lift_horizon(l)).unwrap();
        ensure!(tau.at_least(bound), "{name}: tau_M {tau:?} < 1/(4 Phi) - 1 = {bound:.3}");
        checked += 1;
    }
    Ok(format!("{checked} lifts, all above 1/(4 Phi(induced)) - 1"))
}

fn criterion_9() -> Outcome {
    let mut rng = random::rng(0);
    let mut worst: f64 = 0.0;
    for d in 2..=10usize {
        let gamma = 0.4 / (2.0 * (d as f64 + 1.0));
        for _ in 0..100 {
            let q0 = zero_sum(&mut rng, d + 2);
            let r = clock_contraction_check(d, gamma, &q0).unwrap();
            ensure!(r.ok, "D = {d}: ratio {} > bound {}", r.ratio, r.bound);
            worst = worst.max(r.ratio / r.bound);
        }
    }
    Ok(format!("900 deviations, worst ratio/bound {worst:.3}"))
}

fn criterion_10() -> Outcome {
    let mut rng = random::rng(0);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = 2 + k % 9;
        let g = connected_graph(&mut rng, n, 0.2).unwrap();
        let target = full_support(&mut rng, n).unwrap();
        let d = diameter(&g).unwrap();
        for i in 0..n {
            let b = stochastic_bridge(&g, &Distribution::point(n, i), &target).unwrap();
            ensure!(b.len() == d, "bridge length {} != D = {d}", b.len());
            let mut x = DVector::zeros(n);
            x[i] = 1.0;
            for step in b.steps() {
                let m = step.matrix();
                for c in 0..n {
                    let s = m.column(c).sum();
                    ensure!((s - 1.0).abs() <= 1e-12, "column sum {s}");
                    for r in 0..n {
                        ensure!(m[(r, c)] >= 0.0, "negative entry");
                        ensure!(m[(r, c)] == 0.0 || r == c || g.has_arc(c, r), "non-local move {c} -> {r}");
                    }
                }
                x = m * x;
            }
            let err = tv(x.as_slice(), target.as_slice());
            worst = worst.max(err);
            ensure!(err <= 1e-10, "graph {k}, source {i}: tv {err:.2e}");
        }
    }
    Ok(format!("50 graphs, worst endpoint tv {worst:.1e}"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("diameter-time mixing", criterion_1),
        ("irreducible mixer with matched flows", criterion_2),
        ("Diaconis lift scaling", criterion_3),
        ("barbell graph conductance", criterion_4),
        ("four-cycle lift beats flow conductance", criterion_5),
        ("unlifting under invariance", criterion_6),
        ("cut leakage", criterion_7),
        ("conductance bound from adversarial starts", criterion_8),
        ("clock contraction", criterion_9),
        ("bridge exactness", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:6.2}s] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:6.2}s] {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
