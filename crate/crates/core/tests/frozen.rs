use glacier::estimators::estimate_f;
use glacier::experiments::with_threads;
use glacier::frozen::{run_frozen, sample_clocks, ClockAssignment, FrozenState};
use glacier::lattice::{build_annulus, build_box, domain_from_dual_circuit, DualCircuit, Domain, Vertex};
use glacier::streams::Streams;
use glacier::Clocks;
use proptest::prelude::*;

fn run<'d>(domain: &'d Domain, threshold: u32, seed: u64, i: u64) -> (Clocks, FrozenState<'d, f64>) {
    let clocks: Clocks = sample_clocks(domain, &mut Streams::new(seed, "frozen-props").trial(i));
    let state = run_frozen(domain, &clocks, threshold).unwrap();
    (clocks, state)
}

/// Every structural invariant of a finished run.
fn check_state(clocks: &ClockAssignment<f64>, s: &FrozenState<'_, f64>) {
    let d = s.domain();
    let n = s.threshold();
    let forest = s.forest();
    for v in 0..d.vertex_count() {
        let vol = forest.volume_of(v);
        if s.is_frozen_id(v) {
            assert!(vol >= n && vol <= (2 * n).saturating_sub(2).max(n), "frozen volume {vol} at N={n}");
        } else {
            assert!(vol < n, "unfrozen volume {vol} at N={n}");
        }
    }
    let blocked: std::collections::HashSet<u32> = s.blocked().iter().copied().collect();
    for e in 0..d.edge_count() {
        let (a, b) = d.endpoints(e);
        if s.is_open(e) {
            assert!(!blocked.contains(&(e as u32)));
            assert_eq!(forest.root(a), forest.root(b));
        } else {
            // refused because an endpoint cluster was already frozen
            assert!(blocked.contains(&(e as u32)), "closed edge {e} never processed");
            assert!(s.is_frozen_id(a) || s.is_frozen_id(b));
        }
    }
    let events = s.freeze_events();
    assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
    let frozen_roots: std::collections::HashSet<usize> =
        (0..d.vertex_count()).filter(|&v| s.is_frozen_id(v)).map(|v| forest.root(v)).collect();
    if n > 1 {
        assert_eq!(events.len(), frozen_roots.len());
        for ev in events {
            assert_eq!(forest.root_volume(ev.root), ev.volume);
            assert_eq!(clocks.time(ev.edge), ev.time);
        }
        // no edge of a frozen cluster opens after the freeze
        for e in s.open_edges() {
            let r = forest.root(d.endpoints(e).0);
            if let Some(ev) = events.iter().find(|ev| ev.root == r) {
                assert!(clocks.time(e) <= ev.time);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_runs_satisfy_invariants(radius in 1u32..12, threshold in 1u32..80, seed in any::<u64>()) {
        let domain = build_box(radius);
        let (clocks, state) = run(&domain, threshold, seed, 0);
        check_state(&clocks, &state);
    }

    #[test]
    fn annulus_runs_satisfy_invariants(inner in 0u32..4, width in 1u32..6, threshold in 1u32..40, seed in any::<u64>()) {
        let domain = build_annulus(inner, inner + width).unwrap();
        let (clocks, state) = run(&domain, threshold, seed, 1);
        check_state(&clocks, &state);
    }
}

#[test]
fn holes_are_unfrozen_components() {
    let domain = build_box(15);
    for i in 0..40 {
        let (_, s) = run(&domain, 30, 9, i);
        let Ok(hole) = s.hole_containing(Vertex::ORIGIN) else {
            assert!(s.is_frozen(Vertex::ORIGIN).unwrap());
            continue;
        };
        let inside: std::collections::HashSet<usize> = hole.vertices.iter().copied().collect();
        assert!(hole.vertices.iter().all(|&v| !s.is_frozen_id(v)));
        for &e in &hole.boundary {
            let (a, b) = domain.endpoints(e);
            let out = if inside.contains(&a) { b } else { a };
            assert!(inside.contains(&a) != inside.contains(&b));
            assert!(s.is_frozen_id(out));
        }
    }
}

#[test]
fn dual_circuit_domain_matches_box() {
    let boxed = build_box(6);
    let circuit = domain_from_dual_circuit(&DualCircuit::around_box(6));
    assert_eq!(boxed, circuit);
    let (_, a) = run(&boxed, 12, 4, 0);
    let (_, b) = run(&circuit, 12, 4, 0);
    assert_eq!(a, b);
}

#[test]
fn threshold_above_volume_leaves_everything_open() {
    let domain = build_box(5);
    for i in 0..20 {
        let (_, s) = run(&domain, 122, 2, i);
        assert_eq!(s.open_count(), domain.edge_count());
        assert!(s.freeze_events().is_empty());
    }
}

#[test]
fn f_estimate_ignores_thread_count() {
    let one = with_threads(Some(1), || estimate_f(50, 8, 300, 21).unwrap()).unwrap();
    let four = with_threads(Some(4), || estimate_f(50, 8, 300, 21).unwrap()).unwrap();
    assert_eq!(one, four);
}
