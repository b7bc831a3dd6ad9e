//! Monte Carlo checks that the tests hold their size on fair sources and have
//! power against dependent ones.

use fairtoss::experiment::{
    compare_recency, run_one_shot, run_temperature_sweep, BoltzmannResponder, ExperimentConfig,
    DEFAULT_TEMPERATURES,
};
use fairtoss::sources::{
    boltzmann_probability, derive_seed, sample_boltzmann, BoltzmannParams, DecisionRng, SourceKind,
    SourceSpec,
};
use fairtoss::stats::RunMode;
use fairtoss::{BinarySequence, Decision, PromptId};

fn fair(seed: u64, n: usize) -> BinarySequence {
    sample_boltzmann(
        &BoltzmannParams::binary(0.0, 0.0, 1.0),
        &mut DecisionRng::seeded(seed),
        n,
    )
    .unwrap()
}

#[test]
fn fair_sampler_passes_uniformity_through_the_runner() {
    let params = BoltzmannParams::binary(0.0, 0.0, 1.0);
    let mut passes = 0;
    for seed in 0..50 {
        let mut cfg = ExperimentConfig::new("cal", SourceSpec::new(SourceKind::Boltzmann(params.clone())));
        cfg.inter_call_delay_ms = 0;
        let mut src = BoltzmannResponder::new(&params, derive_seed(99, seed)).unwrap();
        let res = run_one_shot(&cfg, &mut src, &mut std::io::sink()).unwrap();
        if res.prompts.iter().all(|p| !p.uniformity.unwrap().reject_null) {
            passes += 1;
        }
    }
    // Two independent 5% tests per seed: expect about 90% joint passes.
    assert!(passes >= 40, "{passes}/50");
}

#[test]
fn alternation_is_detected_against_fair() {
    let alt: BinarySequence = (0..1000)
        .map(|i| if i % 2 == 0 { Decision::Yes } else { Decision::No })
        .collect();
    let c = compare_recency(&alt, &fair(5, 1000), 5, 0.05, RunMode::AtLeast).unwrap();
    let w1 = c.windows[0].test.as_ref().unwrap();
    assert!(w1.reject_null);
    assert_eq!(w1.mean_a, 1.0);
    assert!((w1.mean_b - 0.5).abs() < 0.05);
    // Alternating sequences have no runs longer than one.
    assert!(c.windows[1].test.is_none());
}

#[test]
fn fair_pairs_rarely_differ() {
    // 400 pairs keep the binomial noise of the estimated size near 1%.
    let pairs = 400;
    let mut rejections = [0usize; 5];
    for k in 0..pairs {
        let a = fair(derive_seed(1, k), 1000);
        let b = fair(derive_seed(2, k), 1000);
        let c = compare_recency(&a, &b, 5, 0.05, RunMode::AtLeast).unwrap();
        for (i, w) in c.windows.iter().enumerate() {
            if w.test.as_ref().is_some_and(|t| t.reject_null) {
                rejections[i] += 1;
            }
        }
    }
    for (w, r) in rejections.iter().enumerate() {
        let rate = *r as f64 / pairs as f64;
        assert!(rate <= 0.085, "w = {}: {r}/{pairs}", w + 1);
    }
}

#[test]
fn sweep_probabilities_fall_toward_half() {
    let probs: Vec<f64> = DEFAULT_TEMPERATURES
        .iter()
        .map(|&t| boltzmann_probability(&[1.0, 0.0], t).unwrap()[0])
        .collect();
    assert!(probs.windows(2).all(|p| p[1] < p[0]));
    assert!(probs.iter().all(|&p| p > 0.5));

    let mut cfg = ExperimentConfig::new(
        "sweep",
        SourceSpec::new(SourceKind::Boltzmann(BoltzmannParams::binary(1.0, 0.0, 1.0))).with_seed(3),
    );
    cfg.inter_call_delay_ms = 0;
    cfg.samples_per_prompt = 2000;
    let s = run_temperature_sweep(&cfg, &DEFAULT_TEMPERATURES, &mut std::io::sink()).unwrap();
    for (row, p) in s
        .rows
        .iter()
        .filter(|r| r.prompt_id == PromptId::Q1)
        .zip(&probs)
    {
        // Four standard errors at n = 2000.
        let se = (p * (1.0 - p) / 2000.0).sqrt();
        assert!((row.p_yes.unwrap() - p).abs() < 4.0 * se, "T = {}", row.temperature);
    }
}
