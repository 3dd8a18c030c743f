use gaze_privacy::attack::extract_features;
use gaze_privacy::data::synth::EventKind;
use gaze_privacy::data::{generate_corpus, generate_subject, SubjectParams, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn saccade_durations_follow_the_main_sequence() {
    let p = SubjectParams::default();
    assert!((p.saccade_duration_ms(10.0) - 43.0).abs() < 1e-12);
    let g = generate_subject(&p, 30.0, 1000.0, 3).unwrap();
    let saccades: Vec<_> = g.events.iter().filter(|e| e.kind == EventKind::Saccade).collect();
    assert!(saccades.len() > 40);
    for e in &saccades[..saccades.len() - 1] {
        let want = p.saccade_duration_ms(e.amplitude).round().max(2.0) as usize;
        assert_eq!(e.end - e.start, want, "amplitude {}", e.amplitude);
    }
}

#[test]
fn saccade_rate_matches_its_parameter() {
    let p = SubjectParams {
        saccade_rate: 2.0,
        ..SubjectParams::default()
    };
    let rates: Vec<f64> = (0..20)
        .map(|seed| {
            let g = generate_subject(&p, 60.0, 250.0, seed).unwrap();
            g.events.iter().filter(|e| e.kind == EventKind::Saccade).count() as f64 / 60.0
        })
        .collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    assert!((mean - 2.0).abs() <= 0.2, "mean rate {mean}");
}

#[test]
fn amplitudes_follow_their_gamma_distribution() {
    let p = SubjectParams::default();
    let amps: Vec<f64> = (0..10)
        .flat_map(|seed| generate_subject(&p, 60.0, 250.0, seed).unwrap().events)
        .filter(|e| e.kind == EventKind::Saccade)
        .map(|e| e.amplitude)
        .collect();
    let mean = amps.iter().sum::<f64>() / amps.len() as f64;
    assert!((mean - p.mean_amplitude()).abs() < 0.1 * p.mean_amplitude(), "mean amplitude {mean}");
    assert!(amps.iter().all(|a| *a <= 20.0 + 1e-9));
}

#[test]
fn distinct_subjects_produce_distinct_features() {
    let corpus = generate_corpus(
        &SynthConfig {
            subjects: 2,
            sessions: 1,
            duration_s: 60.0,
            ..SynthConfig::default()
        },
        11,
    )
    .unwrap();
    let means: Vec<Vec<f64>> = corpus
        .recordings
        .iter()
        .map(|r| {
            let f = extract_features(&r.recording.signal);
            (0..f[0].0.len()).map(|k| f.iter().map(|v| v.0[k]).sum::<f64>() / f.len() as f64).collect()
        })
        .collect();
    let differing = means[0].iter().zip(&means[1]).filter(|(a, b)| (*a - *b).abs() > 0.05 * a.abs().max(b.abs())).count();
    assert!(differing >= 4, "{means:?}");
}

#[test]
fn sessions_of_one_subject_are_closer_than_subjects() {
    let corpus = generate_corpus(
        &SynthConfig {
            subjects: 6,
            sessions: 2,
            duration_s: 60.0,
            ..SynthConfig::default()
        },
        5,
    )
    .unwrap();
    let rate = |k: usize| {
        let r = &corpus.recordings[k];
        r.events.iter().filter(|e| e.kind == EventKind::Saccade).count() as f64 / 60.0
    };
    let mut within = 0.0;
    let mut between = 0.0;
    for s in 0..6 {
        within += (rate(2 * s) - rate(2 * s + 1)).abs();
        between += (rate(2 * s) - rate((2 * s + 2) % 12)).abs();
    }
    assert!(within < between, "within {within} between {between}");
}

#[test]
fn sampled_parameters_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        let p = SubjectParams::sample(&mut rng);
        p.validate().unwrap();
        p.perturbed(0.05, &mut rng).validate().unwrap();
    }
}
