use liftmix::constructions::{
    bridges_to, diameter_mixer, diaconis_cycle_lift, lazy_diaconis_cycle_lift, node_clock_index, node_clock_lift,
    periodic_clock_lift, periodic_node_clock_lift, MixerParams, MixerVariant,
};
use liftmix::graph::{barbell, cycle, diameter};
use liftmix::lift::{scenario_report, ReportOptions};
use liftmix::markov::{ergodic_flows, is_irreducible, Distribution, StochasticMatrix, TimeVaryingChain};
use liftmix::random::{self, full_support};

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn constant(p: &StochasticMatrix, len: usize) -> TimeVaryingChain {
    TimeVaryingChain::new(p.n(), vec![p.clone(); len]).unwrap()
}

#[test]
fn node_clock_bridges_land_on_pi() {
    let g = barbell(3).unwrap();
    let n = g.n();
    let d = diameter(&g).unwrap();
    let mut rng = random::rng(1);
    let pi = full_support(&mut rng, n).unwrap();
    let l = node_clock_lift(&g, &bridges_to(&g, &pi).unwrap(), &pi).unwrap();
    assert_eq!(l.lifted_n(), (d + 2) * n * n);
    let a = l.chain().sparse();
    for _ in 0..20 {
        let p = full_support(&mut rng, n).unwrap();
        let mut x = l.init().unwrap().apply(p.as_slice());
        for t in 1..=3 * d {
            x = a.mul(&x);
            if t >= d {
                assert!(tv(&l.map().collapse(&x), pi.as_slice()) <= 1e-12, "t = {t}");
            }
            for v0 in 0..n {
                for v in (0..n).filter(|&v| v != v0) {
                    assert_eq!(x[node_clock_index(n, 0, v0, v)], 0.0);
                }
            }
        }
    }
}

#[test]
fn periodic_clock_lift_of_a_constant_chain() {
    let g = cycle(4).unwrap();
    let p = StochasticMatrix::lazy_walk(&g, 0.5).unwrap();
    let l = periodic_clock_lift(&g, &constant(&p, 3)).unwrap();
    assert!(is_irreducible(l.chain()));
    let a = l.chain().sparse();
    let p0 = Distribution::point(4, 1);
    let mut x = l.init().unwrap().apply(p0.as_slice());
    let mut q = p0.into_vec();
    for _ in 0..20 {
        x = a.mul(&x);
        q = p.apply(&q);
        assert!(tv(&l.map().collapse(&x), &q) <= 1e-14);
    }
    // layer t sits at offset t * N
    for t in 0..3 {
        let mut x = vec![0.0; 12];
        x[t * 4 + 2] = 1.0;
        for _ in 0..(3 - t) % 3 {
            x = a.mul(&x);
        }
        assert!((x[..4].iter().sum::<f64>() - 1.0).abs() <= 1e-14, "layer {t}");
    }
}

#[test]
fn periodic_node_clock_returns_to_the_diagonal() {
    let g = cycle(5).unwrap();
    let n = g.n();
    let pi = Distribution::uniform(n);
    let bridges = bridges_to(&g, &pi).unwrap();
    let t_len = bridges[0].len();
    let l = periodic_node_clock_lift(&g, &bridges).unwrap();
    assert_eq!(l.lifted_n(), (t_len + 1) * n * n);
    let a = l.chain().sparse();
    for t in 0..=t_len {
        for v0 in 0..n {
            for v in 0..n {
                let mut x = vec![0.0; l.lifted_n()];
                x[node_clock_index(n, t, v0, v)] = 1.0;
                for _ in 0..t_len + 1 - t {
                    x = a.mul(&x);
                }
                let on_diagonal: f64 = (0..n).map(|k| x[node_clock_index(n, 0, k, k)]).sum();
                assert!((on_diagonal - 1.0).abs() <= 1e-12, "start ({t}, {v0}, {v})");
            }
        }
    }
}

#[test]
fn periodic_node_clock_of_a_constant_chain() {
    let g = cycle(5).unwrap();
    let p = StochasticMatrix::lazy_walk(&g, 0.3).unwrap();
    let per_node = vec![constant(&p, 2); 5];
    let l = periodic_node_clock_lift(&g, &per_node).unwrap();
    let a = l.chain().sparse();
    let p0 = Distribution::point(5, 0);
    let mut x = l.init().unwrap().apply(p0.as_slice());
    let mut q = p0.into_vec();
    for _ in 0..2 {
        x = a.mul(&x);
        q = p.apply(&q);
        assert!(tv(&l.map().collapse(&x), &q) <= 1e-14);
    }
}

#[test]
fn diaconis_flows_are_rotation_symmetric() {
    let n = 10;
    for l in [diaconis_cycle_lift(n).unwrap(), lazy_diaconis_cycle_lift(n, 0.1).unwrap()] {
        let flows = ergodic_flows(l.chain(), &Distribution::uniform(2 * n)).unwrap();
        let rot = |k: usize, s: usize| (k / n) * n + (k % n + s) % n;
        for s in 1..n {
            for i in 0..2 * n {
                for j in 0..2 * n {
                    assert_eq!(flows[(rot(i, s), rot(j, s))], flows[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn scenario_reports_for_known_lifts() {
    let g = barbell(6).unwrap();
    let pi = Distribution::uniform(12);
    let mixer = diameter_mixer(&g, &pi, MixerVariant::Reducible, &MixerParams::default()).unwrap();
    let r = scenario_report(&mixer.lift, &"SIMRE".parse().unwrap(), &pi, None, ReportOptions::default()).unwrap();
    assert!(r.tau_m.at_most(4.0), "{:?}", r.tau_m);
    assert!(r.pass);

    let l = lazy_diaconis_cycle_lift(16, 1.0 / 16.0).unwrap();
    let u = Distribution::uniform(16);
    let r = scenario_report(&l, &"sImrE".parse().unwrap(), &u, None, ReportOptions::default()).unwrap();
    assert!(r.pass);
    assert!(r.bounds.iter().all(|b| b.holds));
}
