//! Worked examples per operation, each against an arithmetic or sampling oracle.

mod common;

use std::sync::OnceLock;

use common::oracle::sigma_min_2x2;
use tfe_core::codec::{average_data_rate, periodic_extension, synthesize_from_tuple, CoderController, CoderLaw};
use tfe_core::entropy::{
    build_feasible_tuple, build_feasible_tuple_with, estimate_rwtfe, refinement_covers, ConstructionParams,
    EstimateBudget, InvarianceTuple,
};
use tfe_core::geometry::{pullback_region, AxisBox, Grid, OpenCover, OpenSet, PullbackMode};
use tfe_core::plant::fixtures::{contracting, plant_a, plant_b, plant_c, plant_c_with_jump};
use tfe_core::plant::{check_observability, InputSequence, OutputMap, PlantModel};
use tfe_core::reach::{image_overapprox, synthesize_steering, verify_constraint_c, verify_constraint_rc, ObservedMap, SteeringOptions};
use tfe_core::simloop::{check_robust_weak_invariance, check_weak_invariance, run_closed_loop};
use tfe_core::Error;

fn idx(p: &PlantModel, u: f64) -> usize {
    p.input_index(&[u]).unwrap_or_else(|| panic!("{u} is not an input"))
}

fn seq(p: &PlantModel, us: &[f64]) -> InputSequence {
    InputSequence(us.iter().map(|&u| idx(p, u)).collect())
}

fn interval(lo: f64, hi: f64) -> OpenSet {
    OpenSet::from_box(AxisBox::open(vec![lo], vec![hi]))
}

/// Scalar tuple at `s = 0` with the given elements and one-step inputs.
fn scalar_tuple(p: &PlantModel, elements: &[(f64, f64)], inputs: &[f64], radius: f64) -> InvarianceTuple {
    let map = ObservedMap::new(p, &InputSequence::empty()).unwrap();
    let target = map.target(&[1024]).unwrap();
    InvarianceTuple {
        s: 0,
        v: InputSequence::empty(),
        alpha: OpenCover::new(elements.iter().map(|&(a, b)| interval(a, b)).collect(), target),
        tau: 1,
        g: inputs.iter().map(|&u| seq(p, &[u])).collect(),
        robust_radius: radius,
        delta_k: 1e-6,
    }
}

fn plant_a_tuple() -> &'static InvarianceTuple {
    static T: OnceLock<InvarianceTuple> = OnceLock::new();
    T.get_or_init(|| build_feasible_tuple(&plant_a(), 0, &InputSequence::empty(), 1, 0.0).unwrap())
}

fn plant_a_cc() -> CoderController {
    synthesize_from_tuple(&plant_a(), plant_a_tuple()).unwrap()
}

fn plant_b_params() -> ConstructionParams {
    let mut params = ConstructionParams::default();
    params.steering.steer_box = Some(AxisBox::closed(vec![-4.0, -4.0], vec![4.0, 4.0]));
    params
}

fn plant_b_tuple() -> &'static InvarianceTuple {
    static T: OnceLock<InvarianceTuple> = OnceLock::new();
    T.get_or_init(|| {
        let p = plant_b();
        let v = seq(&p, &[0.0]);
        build_feasible_tuple_with(&p, 1, &v, 4, &plant_b_params()).unwrap()
    })
}

/// Image hull of `[lo, hi]` under one step of PLANT-C without the input.
fn plant_c_hull(lo: f64, hi: f64, jump: f64) -> (f64, f64) {
    let mut out = (f64::INFINITY, f64::NEG_INFINITY);
    if lo < 0.3 {
        out = (2.0 * lo, 2.0 * hi.min(0.3));
    }
    if hi >= 0.3 {
        out = (out.0.min(2.0 * lo.max(0.3) - jump), out.1.max(2.0 * hi - jump));
    }
    out
}

/// Grid input nearest to `-(lo + hi) / 2`.
fn centering_input(lo: f64, hi: f64) -> f64 {
    (-(lo + hi) / 2.0 * 64.0).round() / 64.0
}

const SIX: [(f64, f64); 6] = [(-1.02, -0.62), (-0.68, -0.28), (-0.34, 0.06), (0.0, 0.4), (0.34, 0.74), (0.68, 1.08)];

fn six_element_tuple(jump: f64, radius: f64) -> InvarianceTuple {
    let p = plant_c_with_jump(jump);
    let inputs: Vec<f64> = SIX
        .iter()
        .map(|&(a, b)| {
            let (lo, hi) = plant_c_hull((a - radius).max(-1.0), (b + radius).min(1.0), 0.1);
            centering_input(lo, hi)
        })
        .collect();
    scalar_tuple(&p, &SIX, &inputs, radius)
}

#[test]
fn step_examples() {
    assert_eq!(plant_a().step(&[0.25], idx(&plant_a(), -0.5)).unwrap(), vec![0.0]);
    assert_eq!(plant_c().step(&[0.3], idx(&plant_c(), 0.0)).unwrap(), vec![0.5]);
    let b = plant_b();
    let x = b.step(&[0.1, 0.0], idx(&b, 0.0)).unwrap();
    assert!((x[0] - 0.12).abs() < 1e-15 && x[1] == 0.0, "{x:?}");
}

#[test]
fn step_rejects_states_outside_x() {
    assert!(plant_a().step(&[1.5], 0).is_err());
    assert!(plant_a().step(&[0.0], 10_000).is_err());
}

#[test]
fn open_loop_examples() {
    let a = plant_a();
    assert_eq!(a.run_open_loop(&[0.5], &InputSequence::empty()).unwrap(), vec![vec![0.5]]);
    assert_eq!(
        a.run_open_loop(&[0.5], &seq(&a, &[-1.0, 0.0])).unwrap(),
        vec![vec![0.5], vec![0.0], vec![0.0]]
    );

    let b = plant_b();
    let traj = b.run_open_loop(&[1.0, 1.0], &seq(&b, &[0.0, 0.0, 0.0])).unwrap();
    // A^3 = [[1.2^3, 3·1.2^2], [0, 1.2^3]].
    let cube = [1.2f64.powi(3) + 3.0 * 1.44, 1.2f64.powi(3)];
    let end = traj.last().unwrap();
    assert_eq!(traj.len(), 4);
    assert!((end[0] - cube[0]).abs() < 1e-12 && (end[1] - cube[1]).abs() < 1e-12, "{end:?}");
}

#[test]
fn output_map_examples() {
    let a = plant_a();
    assert_eq!(a.output_map(&[0.3], &InputSequence::empty()).unwrap(), vec![vec![0.3]]);
    let b = plant_b();
    let y = b.output_map(&[0.5, 0.25], &seq(&b, &[0.0])).unwrap();
    assert_eq!(y.len(), 2);
    assert_eq!(y[0], vec![0.5]);
    assert!((y[1][0] - 0.85).abs() < 1e-15, "{y:?}");
}

#[test]
fn observed_states_reconstruct() {
    let b = plant_b();
    let map = ObservedMap::new(&b, &seq(&b, &[0.0])).unwrap();
    for k in 0..100 {
        let x0 = [-1.0 + 2.0 * (k / 10) as f64 / 9.0, -1.0 + 2.0 * (k % 10) as f64 / 9.0];
        let y = map.observe(&x0).unwrap();
        let back = map.reconstruct(&y);
        assert!((back[0] - x0[0]).abs() < 1e-12 && (back[1] - x0[1]).abs() < 1e-12, "{back:?}");
    }
}

#[test]
fn observability_examples() {
    let mut full = plant_b();
    full.output = OutputMap::Identity;
    let r = check_observability(&full, 0, &InputSequence::empty()).unwrap();
    assert!(r.ok);
    assert!((r.separation - 1.0).abs() < 1e-12);

    let b = plant_b();
    let r = check_observability(&b, 0, &InputSequence::empty()).unwrap();
    assert!(!r.ok);
    assert!(r.separation.abs() < 1e-12);

    let r = check_observability(&b, 1, &seq(&b, &[0.0])).unwrap();
    assert!(r.ok && r.certified);
    assert!((r.separation - sigma_min_2x2(1.0, 0.0, 1.2, 1.0)).abs() < 1e-9);
}

#[test]
fn piecewise_pullback_agrees_with_sampling() {
    let c = plant_c();
    let zero = c.input(idx(&c, 0.0)).unwrap().to_vec();
    let grid = Grid::uniform(c.x.clone(), 200).unwrap();
    let region = grid.full_region();
    let image = |b: &AxisBox| AxisBox::hull_of(&c.dynamics.image(b, &zero));
    let int_k = OpenSet::from_box(c.k.as_open());
    let inner = pullback_region(&region, image, &int_k, PullbackMode::Inner);
    let outer = pullback_region(&region, image, &int_k, PullbackMode::Outer);
    assert!(!inner.is_empty());
    for cell in 0..grid.cell_count() {
        let b = grid.cell_box(cell);
        let hits: Vec<bool> = (0..=50)
            .map(|k| b.lo[0] + (b.hi[0] - b.lo[0]) * k as f64 / 50.0)
            .map(|x| int_k.contains_point(&c.dynamics.eval(&[x], &zero).unwrap()))
            .collect();
        if inner.contains_cell(cell) {
            assert!(hits.iter().all(|&h| h), "inner cell {cell} has a sample leaving int K");
        }
        if hits.iter().any(|&h| h) {
            assert!(outer.contains_cell(cell), "outer pullback misses cell {cell}");
        }
    }
}

#[test]
fn plant_b_box_image_is_tight_against_sampling() {
    let b = plant_b();
    let source = AxisBox::closed(vec![-0.05, -0.05], vec![0.05, 0.05]);
    let zeros = seq(&b, &[0.0, 0.0]);
    let bound = AxisBox::hull_of(&image_overapprox(&b, &source, &zeros).unwrap()).unwrap();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for i in 0..=40 {
        for j in 0..=40 {
            let x0 = [-0.05 + 0.1 * i as f64 / 40.0, -0.05 + 0.1 * j as f64 / 40.0];
            let end = b.run_open_loop(&x0, &zeros).unwrap().pop().unwrap();
            assert!(bound.contains_point(&end), "{end:?}");
            for a in 0..2 {
                lo[a] = lo[a].min(end[a]);
                hi[a] = hi[a].max(end[a]);
            }
        }
    }
    for a in 0..2 {
        assert!(bound.width(a) <= 1.5 * (hi[a] - lo[a]), "axis {a}: {} vs {}", bound.width(a), hi[a] - lo[a]);
    }
}

#[test]
fn five_centred_intervals_satisfy_constraint_c() {
    let a = plant_a();
    let centres: Vec<f64> = (-2..=2).map(|k| k as f64 * 52.0 / 128.0).collect();
    let elements: Vec<(f64, f64)> = centres.iter().map(|c| (c - 0.245, c + 0.245)).collect();
    let inputs: Vec<f64> = centres.iter().map(|c| -2.0 * c).collect();
    let report = verify_constraint_c(&a, &scalar_tuple(&a, &elements, &inputs, 0.0)).unwrap();
    assert!(report.ok && report.covers, "{:?}", report.failing);
    assert!(report.min_margin > 0.0);

    let report = verify_constraint_c(&a, &scalar_tuple(&a, &elements, &[0.0; 5], 0.0)).unwrap();
    assert!(!report.ok);
    assert!(report.covers);
    assert!(report.failing.is_some());
}

#[test]
fn constraint_c_refuses_unobservable_prefixes() {
    let b = plant_b();
    let mut t = plant_b_tuple().clone();
    t.s = 0;
    t.v = InputSequence::empty();
    assert!(matches!(verify_constraint_c(&b, &t), Err(Error::ObservabilityUncertified { .. })));
}

#[test]
fn six_element_robust_cover_satisfies_rc() {
    let t = six_element_tuple(0.1, 1e-3);
    let report = verify_constraint_rc(&plant_c(), &t).unwrap();
    assert!(report.ok, "{:?} margin {}", report.failing, report.min_margin);
}

#[test]
fn straddling_element_fails_rc_for_a_large_jump() {
    let p = plant_c_with_jump(3.0);
    let mut t = six_element_tuple(0.1, 1e-3);
    t.g[3] = seq(&p, &[-0.40625]);
    let report = verify_constraint_rc(&p, &t).unwrap();
    assert!(!report.ok);
    assert!(report.certificates[3].iter().any(|c| !c.contained_in_int_k));
}

#[test]
fn single_interval_never_fits_k() {
    let a = plant_a();
    for u in [-1.0, 0.0, 0.5, 2.0] {
        let t = scalar_tuple(&a, &[(-1.0, 1.0)], &[u], 0.0);
        assert!(!verify_constraint_c(&a, &t).unwrap().ok, "u = {u}");
        let mut r = t.clone();
        r.robust_radius = 1e-3;
        assert!(!verify_constraint_rc(&a, &r).unwrap().ok, "u = {u}");
    }
}

#[test]
fn steering_examples() {
    let opts = SteeringOptions::default();
    let a = plant_a();
    let s = synthesize_steering(&a, &[0.0], 3, 0.0, &opts).unwrap();
    assert_eq!((s.t, s.inputs.clone()), (1, seq(&a, &[0.0])));
    let s = synthesize_steering(&a, &[1.0], 3, 0.01, &opts).unwrap();
    assert_eq!((s.t, s.inputs.clone()), (1, seq(&a, &[-2.0])));

    let c = plant_c();
    let s = synthesize_steering(&c, &[0.3], 3, 0.01, &opts).unwrap();
    assert_eq!(s.t, 1);
    let u = c.input(s.inputs.0[0]).unwrap()[0];
    assert!((u + 0.55).abs() <= 0.05, "u = {u}");
    let (lo, hi) = plant_c_hull(0.29, 0.31, 0.1);
    assert!(lo + u > -0.08 && hi + u < 0.07, "images [{}, {}]", lo + u, hi + u);
}

#[test]
fn plant_a_tuple_has_short_centred_elements() {
    let a = plant_a();
    let t = plant_a_tuple();
    assert!(t.alpha.elements.len() >= 5);
    for (e, g) in t.alpha.elements.iter().zip(&t.g) {
        let b = e.bounding_box().unwrap();
        let (lo, hi) = (b.lo[0].max(-1.0), b.hi[0].min(1.0));
        assert!(hi - lo < 0.5, "element ({lo}, {hi})");
        let u = a.input(g.0[0]).unwrap()[0];
        assert!(2.0 * lo + u > -0.5 && 2.0 * hi + u < 0.5, "element ({lo}, {hi}) with u = {u}");
    }
}

#[test]
fn plant_b_tuple_at_horizon_four_is_certified() {
    let b = plant_b();
    let t = plant_b_tuple();
    let report = verify_constraint_c(&b, t).unwrap();
    assert!(report.ok);
    assert!(report.certificates.iter().flatten().all(|c| c.margin > 0.0));

    let map = ObservedMap::new(&b, &t.v).unwrap();
    for i in 0..100 {
        for j in 0..100 {
            let x0 = [-1.0 + 2.0 * (i as f64 + 0.5) / 100.0, -1.0 + 2.0 * (j as f64 + 0.5) / 100.0];
            let y = map.observe(&x0).unwrap();
            let e = t.alpha.elements.iter().position(|e| e.contains_point(&y)).expect("observation covered");
            let traj = b.run_open_loop(&x0, &t.v.concat(&t.g[e])).unwrap();
            assert!(b.k.as_open().contains_point(traj.last().unwrap()), "x0 = {x0:?}");
        }
    }
}

#[test]
fn robust_plant_c_tuple_straddles_the_switch() {
    let t = build_feasible_tuple(&plant_c(), 0, &InputSequence::empty(), 1, 1e-3).unwrap();
    assert!(t.alpha.elements.iter().any(|e| e.contains_point(&[0.3])
        && e.bounding_box().is_some_and(|b| b.lo[0] < 0.3 && 0.3 < b.hi[0])));
    assert!(verify_constraint_rc(&plant_c(), &t).unwrap().ok);
}

#[test]
fn robust_estimate_of_plant_a_keeps_five_elements() {
    let params = ConstructionParams {
        robust_radius: 1e-3,
        ..ConstructionParams::default()
    };
    let est = estimate_rwtfe(&plant_a(), &EstimateBudget::fully_observed(vec![1], params)).unwrap();
    assert_eq!(est.n, 5);
    assert_eq!(est.h_upper, 5f64.log2());
    assert!(est.robust);
}

#[test]
fn fixed_point_plant_has_zero_entropy() {
    let mut p = contracting(0.0);
    p.inputs = vec![vec![0.0]];
    let params = ConstructionParams {
        robust_radius: 1e-3,
        ..ConstructionParams::default()
    };
    let est = estimate_rwtfe(&p, &EstimateBudget::fully_observed(vec![1], params)).unwrap();
    assert_eq!((est.n, est.witness.tau, est.h_upper), (1, 1, 0.0));
}

#[test]
fn first_refinement_is_the_witness_cover() {
    let d = refinement_covers(&plant_a(), plant_a_tuple(), 2, &[2000]).unwrap();
    assert_eq!(d.n_beta[0], plant_a_tuple().alpha.elements.len());
    assert!(d.n_beta[1] <= 25);
}

#[test]
fn synthesized_controller_shapes() {
    let cc = plant_a_cc();
    assert_eq!(cc.alphabets, vec![5]);
    assert_eq!(average_data_rate(&cc).unwrap(), 5f64.log2());

    let p = contracting(0.4);
    let t = build_feasible_tuple(&p, 0, &InputSequence::empty(), 1, 0.0).unwrap();
    let cc = synthesize_from_tuple(&p, &t).unwrap();
    assert_eq!(cc.alphabets, vec![1]);
    assert_eq!(average_data_rate(&cc).unwrap(), 0.0);

    let cc = synthesize_from_tuple(&plant_b(), plant_b_tuple()).unwrap();
    let m = plant_b_tuple().alpha.elements.len();
    assert_eq!(cc.alphabets, vec![1, m, 1, 1, 1]);
}

#[test]
fn infeasible_tuple_is_refused() {
    let a = plant_a();
    let t = scalar_tuple(&a, &[(-1.0, 1.0)], &[0.0], 0.0);
    assert!(matches!(synthesize_from_tuple(&a, &t), Err(Error::Refused(_))));
}

#[test]
fn extension_at_the_period_is_idempotent() {
    let a = plant_a();
    let cc = plant_a_cc();
    let ext = periodic_extension(&cc, 1).unwrap();
    for k in 0..=20 {
        let x0 = [-1.0 + k as f64 / 10.0];
        assert_eq!(run_closed_loop(&a, &cc, &x0, 3), run_closed_loop(&a, &ext, &x0, 3));
    }
}

#[test]
fn extended_controller_reenters_k_every_cycle() {
    let a = plant_a();
    let cc = periodic_extension(&plant_a_cc(), 1).unwrap();
    for k in 0..100 {
        let x0 = [-1.0 + 2.0 * k as f64 / 99.0];
        let trace = run_closed_loop(&a, &cc, &x0, 3);
        assert!(trace.fault.is_none(), "{:?}", trace.fault);
        assert!(trace.in_int_k[1..=3].iter().all(|&b| b), "x0 = {x0:?}");
    }
}

#[test]
fn zero_rate_extension_stays_zero_rate() {
    let p = contracting(0.4);
    let zero = seq(&p, &[0.0]);
    let law = CoderLaw::CoverIndex {
        elements: vec![interval(-2.0, 2.0)],
    };
    let mut cc = CoderController::new(InputSequence::empty(), 1, law, vec![zero]).unwrap();
    let grid = Grid::uniform(p.x.clone(), 100).unwrap();
    assert!(check_weak_invariance(&p, &mut cc, 3, &grid).pass);
    let ext = periodic_extension(&cc, 3).unwrap();
    assert_eq!(ext.alphabets, vec![1, 1, 1]);
    assert_eq!(average_data_rate(&ext).unwrap(), 0.0);
}

#[test]
fn data_rate_of_a_four_step_cycle() {
    let a = plant_a();
    let zero = idx(&a, 0.0);
    let elements: Vec<OpenSet> = (0..17).map(|i| interval(i as f64, i as f64 + 1.5)).collect();
    let controls = vec![InputSequence(vec![zero; 3]); 17];
    let mut cc = CoderController::new(InputSequence(vec![zero]), 3, CoderLaw::CoverIndex { elements }, controls).unwrap();
    cc.invariance_times.insert(4);
    assert_eq!(cc.alphabets, vec![1, 17, 1, 1]);
    assert!((average_data_rate(&cc).unwrap() - 17f64.log2() / 4.0).abs() < 1e-15);
}

#[test]
fn closed_loop_examples() {
    let p = contracting(0.4);
    let law = CoderLaw::CoverIndex {
        elements: vec![interval(-2.0, 2.0)],
    };
    let cc = CoderController::new(InputSequence::empty(), 1, law, vec![seq(&p, &[0.0])]).unwrap();
    let trace = run_closed_loop(&p, &cc, &[1.0], 4);
    assert!((trace.states[2][0] - 0.16).abs() < 1e-15);
    assert!(trace.in_int_k[2..].iter().all(|&b| b));
    assert_eq!(trace.total_bits(), 0.0);

    let a = plant_a();
    let trace = run_closed_loop(&a, &plant_a_cc(), &[0.9], 1);
    let t = plant_a_tuple();
    let first = t.alpha.elements.iter().position(|e| e.contains_point(&[0.9])).unwrap();
    assert_eq!(trace.symbols[0].symbol, first + 1);
    let b = t.alpha.elements[first].bounding_box().unwrap();
    let u = a.input(trace.inputs[0]).unwrap()[0];
    assert_eq!(u, a.input(t.g[first].0[0]).unwrap()[0]);
    let centre = (b.lo[0] + b.hi[0].min(1.0)) / 2.0;
    assert!((2.0 * centre + u).abs() < 0.01, "u = {u} for centre {centre}");
    assert!(trace.in_int_k[1]);
}

#[test]
fn partially_observed_closed_loop_follows_the_open_loop() {
    let b = plant_b();
    let t = plant_b_tuple();
    let cc = synthesize_from_tuple(&b, t).unwrap();
    let trace = run_closed_loop(&b, &cc, &[1.0, -1.0], 5);
    assert!(trace.fault.is_none(), "{:?}", trace.fault);
    assert_eq!(trace.inputs[0], t.v.0[0]);
    assert_eq!(trace.symbols.iter().filter(|e| e.alphabet > 1).count(), 1);
    let event = trace.symbols.iter().find(|e| e.alphabet > 1).unwrap();
    assert_eq!(event.step, 1);
    let open = b.run_open_loop(&[1.0, -1.0], &t.v.concat(&t.g[event.symbol - 1])).unwrap();
    assert_eq!(trace.states, open);
    assert!(trace.in_int_k[5]);
}

#[test]
fn weak_invariance_examples() {
    let a = plant_a();
    let grid = Grid::uniform(a.x.clone(), 1000).unwrap();
    let mut cc = plant_a_cc();
    let v = check_weak_invariance(&a, &mut cc, 1, &grid);
    assert!(v.pass && v.counterexamples.is_empty());
    assert!(v.checked >= 2001);

    let mut bad = plant_a_cc();
    bad.controls[4] = seq(&a, &[0.0]);
    let v = check_weak_invariance(&a, &mut bad, 1, &grid);
    assert!(!v.pass);
    let last = plant_a_tuple().alpha.elements[4].bounding_box().unwrap();
    assert!(v.counterexamples.iter().all(|c| c.x0[0] > last.lo[0]));
    assert!(v.counterexamples.iter().any(|c| c.x0 == vec![1.0]));
}

#[test]
fn large_jump_fails_robust_invariance_at_the_switch() {
    let p = plant_c_with_jump(3.0);
    let grid = Grid::uniform(p.x.clone(), 20).unwrap();
    let at_switch = |x: &[f64]| (x[0] - 0.3).abs() < 1e-12;
    assert!(grid.vertices().iter().any(|x| at_switch(x)));
    for u in 0..p.inputs.len() {
        let law = CoderLaw::CoverIndex {
            elements: vec![interval(-2.0, 2.0)],
        };
        let mut cc = CoderController::new(InputSequence::empty(), 1, law, vec![InputSequence(vec![u])]).unwrap();
        let v = check_robust_weak_invariance(&p, &mut cc, 1, &grid, 1e-3).unwrap();
        assert!(!v.pass);
        assert!(v.counterexamples.iter().any(|c| at_switch(&c.x0)), "u index {u}");
    }
}

