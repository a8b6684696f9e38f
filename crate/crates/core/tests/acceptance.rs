//! One test per acceptance criterion. Each prints a single
//! `acceptance: criterion N PASS|FAIL - detail` line (visible with
//! `--nocapture`) and then asserts, so the suite both reports and gates.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::{approx_eq, links_of, reference_run, tiny_instance};
use kkps_sim::experiments::{preset, run_sweep, spearman, stats, PresetName, SweepResult};
use kkps_sim::io::{edges_to_tsv, fit_both, fits_to_json, trajectory_to_csv, world_to_json};
use kkps_sim::params::{Scope, TieBreak, UpdateMode};
use kkps_sim::{
    fit_power_law, max_total_utility, run, DegreeHistogram, FitMethod, InitDist, ModelParams,
    Simulation, TopicWorld, ValueDist,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn sweep(name: PresetName) -> &'static SweepResult {
    fn get(lock: &'static OnceLock<SweepResult>, name: PresetName) -> &'static SweepResult {
        lock.get_or_init(|| run_sweep(&preset(name)).expect("preset sweeps are valid"))
    }
    static FIG2: OnceLock<SweepResult> = OnceLock::new();
    static FIG3: OnceLock<SweepResult> = OnceLock::new();
    static FIG4: OnceLock<SweepResult> = OnceLock::new();
    static FIG5: OnceLock<SweepResult> = OnceLock::new();
    static FIG6: OnceLock<SweepResult> = OnceLock::new();
    static FIG7: OnceLock<SweepResult> = OnceLock::new();
    match name {
        PresetName::Fig2 => get(&FIG2, name),
        PresetName::Fig3 => get(&FIG3, name),
        PresetName::Fig4 => get(&FIG4, name),
        PresetName::Fig5 => get(&FIG5, name),
        PresetName::Fig6 => get(&FIG6, name),
        PresetName::Fig7 => get(&FIG7, name),
    }
}

fn report(criterion: usize, pass: bool, detail: &str) {
    println!(
        "acceptance: criterion {criterion} {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn baseline_params(init_dist: InitDist, seed: u64) -> ModelParams {
    ModelParams {
        k: 80,
        m: 750,
        n: 1500,
        a: 1,
        b: 1,
        q_dist: ValueDist::Uniform01,
        init_dist,
        seed,
        max_iterations: 50,
        scope: Scope::TopicRelevant,
        update_mode: UpdateMode::Synchronous,
        tie_break: TieBreak::Index,
    }
}

const INITS: [InitDist; 3] = [
    InitDist::Uniform { max: 1.0 },
    InitDist::Poisson { rate: 5.0 },
    InitDist::Normal {
        mean: 5.0,
        std: 2.0,
    },
];

fn median(values: &[f64]) -> f64 {
    stats(values).expect("nonempty sample").median
}

/// Strictly increasing adjacent pairs, i.e. violations of a non-increasing
/// claim.
fn increases(series: &[f64]) -> usize {
    series.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Strictly decreasing adjacent pairs, i.e. violations of a non-decreasing
/// claim.
fn decreases(series: &[f64]) -> usize {
    series.windows(2).filter(|w| w[1] < w[0]).count()
}

fn goodness_median(result: &SweepResult, coords: &[usize]) -> f64 {
    result
        .cell_by_coords(coords)
        .expect("preset cell completed")
        .aggregate
        .mle_goodness
        .as_ref()
        .expect("mle fits available")
        .median
}

fn exponent_median(result: &SweepResult, coords: &[usize]) -> f64 {
    result
        .cell_by_coords(coords)
        .expect("preset cell completed")
        .aggregate
        .mle_exponent
        .as_ref()
        .expect("mle fits available")
        .median
}

fn efficiency_median(result: &SweepResult, coords: &[usize]) -> f64 {
    result
        .cell_by_coords(coords)
        .expect("preset cell completed")
        .aggregate
        .final_efficiency
        .median
}

#[test]
fn criterion_1_baseline_beats_exponential_controls() {
    let mut pass = true;
    let mut details = Vec::new();
    for (init_idx, init) in INITS.iter().enumerate() {
        let mut goodness = Vec::new();
        let mut exponents = Vec::new();
        let mut control_goodness = Vec::new();
        for seed in 1..=10u64 {
            let params = baseline_params(*init, seed);
            let world = TopicWorld::generate(&params).expect("baseline world generates");
            let out = run(&world, &params).expect("baseline run completes");
            let hist = DegreeHistogram::from_state(&out.state);
            let fit =
                fit_power_law(&hist, FitMethod::Mle).expect("baseline degrees are fittable");
            goodness.push(fit.goodness);
            exponents.push(fit.exponent);
            let mean = hist.positive_mean().expect("links exist");
            let control = common::sample_geometric(
                mean,
                hist.positive_total(),
                0xACCE5500 + seed * 13 + init_idx as u64,
            );
            let control_fit = fit_power_law(&DegreeHistogram::from_degrees(&control), FitMethod::Mle)
                .expect("controls are fittable");
            control_goodness.push(control_fit.goodness);
        }
        let g = median(&goodness);
        let cg = median(&control_goodness);
        let e = median(&exponents);
        let ok = g >= cg && e > 1.5;
        pass &= ok;
        details.push(format!(
            "{}: goodness {:.3} vs control {:.3}, exponent {:.2}",
            init.label(),
            g,
            cg,
            e
        ));
    }
    let detail = details.join("; ");
    report(1, pass, &detail);
    assert!(pass, "criterion 1 failed: {detail}");
}

#[test]
fn criterion_2_goodness_non_increasing_in_endorsement_budget() {
    let mut pass = true;
    let mut details = Vec::new();
    for name in [PresetName::Fig2, PresetName::Fig3] {
        let result = sweep(name);
        for (init_idx, init) in INITS.iter().enumerate() {
            let series: Vec<f64> = (0..5)
                .map(|b_idx| goodness_median(result, &[b_idx, 0, init_idx]))
                .collect();
            let inversions = increases(&series);
            let ok = inversions <= 1;
            pass &= ok;
            details.push(format!(
                "{} k=80 {}: {} inversion(s) over {:?}",
                name.as_str(),
                init.label(),
                inversions,
                series
                    .iter()
                    .map(|g| format!("{g:.3}"))
                    .collect::<Vec<_>>()
            ));
        }
    }
    let detail = details.join("; ");
    report(2, pass, &detail);
    assert!(pass, "criterion 2 failed: {detail}");
}

#[test]
fn criterion_3_more_topics_push_the_exponent_curve_down() {
    let mut pass = true;
    let mut details = Vec::new();
    for name in [PresetName::Fig2, PresetName::Fig3] {
        let result = sweep(name);
        let budgets: Vec<f64> = (0..5)
            .map(|i| result.config.axes[0].numeric_value(i))
            .collect();
        for (init_idx, init) in INITS.iter().enumerate() {
            let diffs: Vec<f64> = (0..5)
                .map(|b_idx| {
                    exponent_median(result, &[b_idx, 1, init_idx])
                        - exponent_median(result, &[b_idx, 0, init_idx])
                })
                .collect();
            let below = diffs.iter().filter(|&&d| d < 0.0).count();
            let rho = spearman(&budgets, &diffs);
            let ok = below == diffs.len() || rho < 0.0;
            pass &= ok;
            details.push(format!(
                "{} {}: {}/5 below, rho {:.2}",
                name.as_str(),
                init.label(),
                below,
                rho
            ));
        }
    }
    let detail = details.join("; ");
    report(3, pass, &detail);
    assert!(pass, "criterion 3 failed: {detail}");
}

#[test]
fn criterion_4_efficiency_grows_with_recommendation_budget() {
    let result = sweep(PresetName::Fig4);
    let medians: Vec<f64> = (0..5)
        .map(|a_idx| efficiency_median(result, &[a_idx]))
        .collect();
    let inversions = decreases(&medians);
    let first_gain = medians[1] - medians[0];
    let last_gain = medians[4] - medians[3];
    let pass = inversions <= 1 && first_gain > last_gain;
    let detail = format!(
        "medians {:?}, {} inversion(s), gain a=2..4 {:.3} vs a=8..20 {:.3}",
        medians.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>(),
        inversions,
        first_gain,
        last_gain
    );
    report(4, pass, &detail);
    assert!(pass, "criterion 4 failed: {detail}");
}

#[test]
fn criterion_5_efficiency_grows_with_topic_count() {
    let gated = sweep(PresetName::Fig6);
    let medians: Vec<f64> = (0..3)
        .map(|k_idx| efficiency_median(gated, &[k_idx]))
        .collect();
    let pass = decreases(&medians) == 0;
    let reported = sweep(PresetName::Fig5);
    let side: Vec<String> = (0..4)
        .map(|k_idx| format!("{:.3}", efficiency_median(reported, &[k_idx])))
        .collect();
    let detail = format!(
        "medians over k {:?}; minimal-budget grid (reported, not gated): {:?}",
        medians.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>(),
        side
    );
    report(5, pass, &detail);
    assert!(pass, "criterion 5 failed: {detail}");
}

#[test]
fn criterion_6_efficiency_grows_with_endorsement_budget() {
    let result = sweep(PresetName::Fig7);
    let medians: Vec<f64> = (0..4)
        .map(|b_idx| efficiency_median(result, &[b_idx]))
        .collect();
    let inversions = decreases(&medians);
    let pass = inversions == 0;
    let detail = format!(
        "medians over b {:?}, {} decreasing step(s)",
        medians.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>(),
        inversions
    );
    report(6, pass, &detail);
    assert!(pass, "criterion 6 failed: {detail}");
}

#[test]
fn criterion_7_most_improvement_lands_by_iteration_three() {
    let mut pass = true;
    let mut worst = (f64::INFINITY, String::new());
    for name in PresetName::ALL {
        let result = sweep(name);
        assert_eq!(
            result.completed().count(),
            result.cells.len(),
            "{} has failed cells",
            name.as_str()
        );
        for cell in result.completed() {
            let captured = cell.aggregate.early_capture.median;
            if captured < worst.0 {
                worst = (captured, format!("{} {}", name.as_str(), cell.label));
            }
            pass &= captured >= 0.8;
        }
    }
    let detail = format!(
        "lowest cell median {:.3} ({}) against the 0.8 floor",
        worst.0, worst.1
    );
    report(7, pass, &detail);
    assert!(pass, "criterion 7 failed: {detail}");
}

#[test]
fn criterion_8_engine_matches_reference_interpreter() {
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    let instances = 110;
    let mut divergence = None;
    'outer: for case in 0..instances {
        let inst = tiny_instance(&mut rng);
        let reference = reference_run(&inst.world, &inst.params, &inst.pseudo);
        let mut sim =
            Simulation::with_initial_scores(&inst.world, &inst.params, inst.pseudo.clone())
                .expect("tiny instances validate");
        for (step, expected) in reference.link_sets.iter().enumerate() {
            let record = sim.step();
            if &links_of(sim.state()) != expected
                || !approx_eq(record.attained_utility, reference.attained[step], 1e-12)
            {
                divergence = Some(format!("case {case} diverged at iteration {}", step + 1));
                break 'outer;
            }
        }
        for b in 1..=2 {
            let fast = max_total_utility(&inst.world, b);
            let brute = common::brute_force_total_utility(&inst.world, b);
            if !approx_eq(fast, brute, 1e-9) {
                divergence = Some(format!("case {case} b={b}: utility {fast} vs {brute}"));
                break 'outer;
            }
        }
    }
    let pass = divergence.is_none();
    let detail = divergence.unwrap_or_else(|| {
        format!("{instances} instances: link trajectories and exhaustive top-b utility agree")
    });
    report(8, pass, &detail);
    assert!(pass, "criterion 8 failed: {detail}");
}

#[test]
fn criterion_9_invariants_determinism_and_fitter_recovery() {
    let mut pass = true;
    let mut details = Vec::new();

    for seed in [1, 2, 3] {
        let params = baseline_params(INITS[0], seed);
        let world = TopicWorld::generate(&params).expect("baseline world generates");
        let nzu = world.nonzero_utility_count();
        let expected_nzu = params.m * params.docs_per_topic();
        let out = run(&world, &params).expect("baseline run completes");
        let state = &out.state;
        let ok = nzu == expected_nzu
            && state.link_count() <= params.max_link_capacity()
            && state.indegree().iter().sum::<usize>() == state.link_count()
            && out
                .trajectory
                .records
                .iter()
                .all(|r| (0.0..=1.0).contains(&r.efficiency));
        pass &= ok;
        if !ok {
            details.push(format!("seed {seed}: invariant violated"));
        }
    }
    details.push("link cap, in-degree sum, nonzero-utility count and efficiency bounds hold".into());

    let params = baseline_params(INITS[0], 5);
    let render = || {
        let world = TopicWorld::generate(&params).expect("baseline world generates");
        let out = run(&world, &params).expect("baseline run completes");
        let hist = DegreeHistogram::from_state(&out.state);
        let mut bytes = trajectory_to_csv(&out.trajectory.records);
        bytes.push_str(&edges_to_tsv(&out.state));
        bytes.push_str(&fits_to_json(&fit_both(&hist)));
        bytes.push_str(&world_to_json(&world));
        bytes
    };
    let identical = render() == render();
    pass &= identical;
    details.push(if identical {
        "repeat run is byte-identical".into()
    } else {
        "repeat run differs".into()
    });

    let sample = common::sample_discrete_power_law(2.5, 100_000, 31415);
    let fit = fit_power_law(&DegreeHistogram::from_degrees(&sample), FitMethod::Mle)
        .expect("synthetic sample fits");
    let recovered = (fit.exponent - 2.5).abs() <= 0.1;
    pass &= recovered;
    details.push(format!("fitter recovered {:.3} for true 2.5", fit.exponent));

    let detail = details.join("; ");
    report(9, pass, &detail);
    assert!(pass, "criterion 9 failed: {detail}");
}

#[test]
fn desk_scale_run_finishes_quickly() {
    let params = baseline_params(INITS[0], 1);
    let start = Instant::now();
    let world = TopicWorld::generate(&params).expect("baseline world generates");
    run(&world, &params).expect("baseline run completes");
    let elapsed = start.elapsed();
    let pass = elapsed.as_millis() < 1000;
    println!(
        "acceptance: performance {} - world generation plus full run took {:?}",
        if pass { "PASS" } else { "FAIL" },
        elapsed
    );
    assert!(pass, "desk-scale run took {elapsed:?}");
}
