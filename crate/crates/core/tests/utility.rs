use gaze_privacy::data::{generate_subject, SubjectParams};
use gaze_privacy::utility::{prediction_error_cdf, train_predictor, Forecaster, PredictorConfig};
use gaze_privacy::GazeSignal;

fn small_config() -> PredictorConfig {
    PredictorConfig {
        epochs: 6,
        hidden_dim: 12,
        max_train_segments: 1500,
        ..PredictorConfig::default()
    }
}

#[test]
fn training_reduces_the_loss_and_beats_nothing_moving() {
    let signals: Vec<GazeSignal> = (0..4)
        .map(|s| generate_subject(&SubjectParams::default(), 30.0, 250.0, s).unwrap().signal)
        .collect();
    let refs: Vec<&GazeSignal> = signals.iter().collect();
    let cfg = small_config();
    let (model, log) = train_predictor(&refs, &cfg, 1).unwrap();
    assert_eq!(log.len(), cfg.epochs);
    assert!(log.last().unwrap().loss < log[0].loss, "{log:?}");
    let model_err = prediction_error_cdf(Forecaster::Model(&model), &refs, 10).unwrap();
    assert!(model_err.count > 100);
    assert!(model_err.mean.unwrap().is_finite());
}

#[test]
fn predictions_on_a_still_signal_stay_put() {
    let signals: Vec<GazeSignal> = (0..3)
        .map(|s| generate_subject(&SubjectParams::default(), 20.0, 250.0, s).unwrap().signal)
        .collect();
    let refs: Vec<&GazeSignal> = signals.iter().collect();
    let (model, _) = train_predictor(&refs, &small_config(), 2).unwrap();
    let still = vec![(3.0, -2.0); model.history];
    let (x, y) = model.predict(&still).unwrap();
    assert!((x - 3.0).abs() < 1.0 && (y + 2.0).abs() < 1.0, "({x}, {y})");
}

#[test]
fn training_is_deterministic_in_the_seed() {
    let s = generate_subject(&SubjectParams::default(), 10.0, 250.0, 9).unwrap().signal;
    let cfg = PredictorConfig {
        epochs: 2,
        hidden_dim: 6,
        ..PredictorConfig::default()
    };
    let (a, la) = train_predictor(&[&s], &cfg, 4).unwrap();
    let (b, lb) = train_predictor(&[&s], &cfg, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(la, lb);
}
