mod common;

use common::{approx_eq, brute_force_total_utility, links_of, reference_run, tiny_instance};
use kkps_sim::{max_total_utility, run, Simulation};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
fn engine_matches_reference_interpreter_step_by_step() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for case in 0..120 {
        let inst = tiny_instance(&mut rng);
        let reference = reference_run(&inst.world, &inst.params, &inst.pseudo);
        let mut sim =
            Simulation::with_initial_scores(&inst.world, &inst.params, inst.pseudo.clone())
                .expect("tiny instances validate");
        for (step, expected) in reference.link_sets.iter().enumerate() {
            let record = sim.step();
            assert_eq!(
                record.iteration,
                step + 1,
                "case {case}: iteration numbering drifted"
            );
            let got = links_of(sim.state());
            assert_eq!(
                &got, expected,
                "case {case} diverged at iteration {} with params {:?}",
                step + 1,
                inst.params
            );
            assert_eq!(
                record.cumulative_links,
                expected.len(),
                "case {case}: cumulative link count is not the link set size"
            );
            assert!(
                approx_eq(record.attained_utility, reference.attained[step], 1e-12),
                "case {case} iteration {}: attained {} vs reference {}",
                step + 1,
                record.attained_utility,
                reference.attained[step]
            );
        }
        if reference.converged {
            let last = sim.records().last().expect("at least one iteration ran");
            assert_eq!(last.new_links, 0, "case {case}: engine still adding links");
        }
    }
}

#[test]
fn full_runs_match_reference_from_seeded_scores() {
    let mut rng = ChaCha12Rng::seed_from_u64(515);
    for case in 0..40 {
        let inst = tiny_instance(&mut rng);
        let out = run(&inst.world, &inst.params).expect("tiny instances validate");
        let pseudo = out.state.pseudo_scores().to_vec();
        let reference = reference_run(&inst.world, &inst.params, &pseudo);
        assert_eq!(
            links_of(&out.state),
            *reference.link_sets.last().expect("at least one iteration"),
            "case {case}: final link sets differ"
        );
        assert_eq!(
            out.trajectory.records.len(),
            reference.link_sets.len(),
            "case {case}: run lengths differ"
        );
        assert_eq!(
            out.trajectory.converged, reference.converged,
            "case {case}: convergence flags differ"
        );
    }
}

#[test]
fn engine_state_invariants_hold_on_tiny_instances() {
    let mut rng = ChaCha12Rng::seed_from_u64(90210);
    for case in 0..80 {
        let inst = tiny_instance(&mut rng);
        let out = run(&inst.world, &inst.params).expect("tiny instances validate");
        let state = &out.state;
        assert_eq!(
            state.indegree().to_vec(),
            state.recomputed_indegree(),
            "case {case}: cached in-degrees drifted from the link set"
        );
        assert_eq!(
            state.indegree().iter().sum::<usize>(),
            state.link_count(),
            "case {case}: total in-degree is not the link count"
        );
        let cap = inst.params.m * inst.params.docs_per_topic();
        assert!(
            state.link_count() <= cap,
            "case {case}: {} links exceed the capacity {cap}",
            state.link_count()
        );
        let mut prev = 0;
        for record in &out.trajectory.records {
            assert!(
                record.cumulative_links >= prev,
                "case {case}: cumulative links decreased"
            );
            prev = record.cumulative_links;
            assert!(
                (0.0..=1.0).contains(&record.efficiency),
                "case {case}: efficiency {} out of range",
                record.efficiency
            );
        }
    }
}

#[test]
fn max_total_utility_matches_exhaustive_subset_search() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for case in 0..200 {
        let inst = tiny_instance(&mut rng);
        for b in 1..=3 {
            let fast = max_total_utility(&inst.world, b);
            let brute = brute_force_total_utility(&inst.world, b);
            assert!(
                approx_eq(fast, brute, 1e-9),
                "case {case} b={b}: {fast} vs exhaustive {brute}"
            );
        }
    }
}
