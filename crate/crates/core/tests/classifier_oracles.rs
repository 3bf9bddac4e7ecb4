use flame_core::classifier::{
    train_mlp, train_svm, train_svm_traced, KernelSpec, MlpModel, MlpParams, ModelFile, SvmParams,
    TrainedModel,
};
use flame_core::support_theory::data::{overlapping_gaussians, separable, SEPARABLE_GAP};
use flame_core::support_theory::{
    hard_margin_params, kkt_check_hard_margin, kkt_check_soft_margin,
};
use flame_core::FlameError;
use flame_oracles::{central_differences, hard_margin_plane};

#[test]
fn smo_matches_dense_dual_qp() {
    let data = separable(2024, 60, SEPARABLE_GAP);
    let y: Vec<f64> = data
        .labels
        .iter()
        .map(|&l| if l { 1.0 } else { -1.0 })
        .collect();
    let c = 1e6;
    let (w, b) = hard_margin_plane(&data.inputs, &y, c);

    let model = train_svm(
        &data.inputs,
        &data.labels,
        &SvmParams::new(c, KernelSpec::Linear),
    )
    .unwrap();
    let got = model.linear_weights().unwrap();
    let w_norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let w_err = ((got[0] - w[0]).powi(2) + (got[1] - w[1]).powi(2)).sqrt() / w_norm;
    assert!(w_err <= 1e-3, "weight error {w_err}");
    assert!(
        (model.bias - b).abs() <= 1e-3 * b.abs().max(1.0),
        "bias {} vs {b}",
        model.bias
    );
}

#[test]
fn smo_dual_objective_never_decreases() {
    let data = overlapping_gaussians(5, 80);
    let (_, trace) = train_svm_traced(
        &data.inputs,
        &data.labels,
        &SvmParams::new(1.0, KernelSpec::Rbf { gamma: 0.5 }),
    )
    .unwrap();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn trained_models_satisfy_kkt() {
    let data = separable(7, 60, SEPARABLE_GAP);
    let model = train_svm(&data.inputs, &data.labels, &hard_margin_params()).unwrap();
    assert!(
        kkt_check_hard_margin(&model, &data.inputs, &data.labels)
            .unwrap()
            .passed
    );
    // Separable data at large C reduces to the hard-margin case.
    assert!(
        kkt_check_soft_margin(&model, &data.inputs, &data.labels, model.c)
            .unwrap()
            .passed
    );

    let data = overlapping_gaussians(7, 80);
    let model = train_svm(
        &data.inputs,
        &data.labels,
        &SvmParams::new(1.0, KernelSpec::Rbf { gamma: 0.5 }),
    )
    .unwrap();
    assert!(
        kkt_check_soft_margin(&model, &data.inputs, &data.labels, 1.0)
            .unwrap()
            .passed
    );
}

#[test]
fn xor_is_not_hard_margin_separable() {
    let x = vec![
        vec![1.0, 1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
        vec![-1.0, 1.0],
    ];
    let y = vec![true, true, false, false];
    let model = train_svm(&x, &y, &SvmParams::new(100.0, KernelSpec::Linear)).unwrap();
    assert!(matches!(
        kkt_check_hard_margin(&model, &x, &y),
        Err(FlameError::NotSeparable(_))
    ));
    // At C = 1e6 the multipliers climb towards the bound in O(1) steps and
    // exhaust the update budget first.
    assert!(matches!(
        train_svm(&x, &y, &hard_margin_params()),
        Err(FlameError::Convergence { .. })
    ));
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let data = overlapping_gaussians(3, 20);
    let mut model = MlpModel::init(2, 6, 9);
    // Move off the initialization so that hidden units are in varied states.
    let params = MlpParams {
        hidden: 6,
        epochs: 50,
        learning_rate: 0.1,
        seed: 9,
    };
    let (trained, _) = train_mlp(&data.inputs, &data.labels, &params).unwrap();
    model.set_parameters(&trained.parameters());

    let (_, grad) = model.loss_and_gradient(&data.inputs, &data.labels);
    let analytic: Vec<f64> = grad.w1.iter().chain(&grad.w2).copied().collect();
    let theta = model.parameters();
    let numeric = central_differences(
        |p| {
            let mut m = model.clone();
            m.set_parameters(p);
            m.loss(&data.inputs, &data.labels)
        },
        &theta,
        1e-5,
    );
    for (k, &numeric) in numeric.iter().enumerate() {
        let scale = analytic[k].abs().max(numeric.abs()).max(1e-6);
        assert!(
            (analytic[k] - numeric).abs() <= 1e-4 * scale,
            "param {k}: {} vs {numeric}",
            analytic[k]
        );
    }
}

#[test]
fn mlp_training_reduces_loss() {
    let data = overlapping_gaussians(4, 60);
    let params = MlpParams {
        hidden: 16,
        epochs: 300,
        learning_rate: 0.1,
        seed: 1,
    };
    let (_, trace) = train_mlp(&data.inputs, &data.labels, &params).unwrap();
    assert!(trace.last().unwrap() < &trace[0]);
}

#[test]
fn model_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = overlapping_gaussians(2, 40);
    let svm = train_svm(
        &data.inputs,
        &data.labels,
        &SvmParams::new(1.0, KernelSpec::Rbf { gamma: 0.3 }),
    )
    .unwrap();
    let (mlp, _) = train_mlp(
        &data.inputs,
        &data.labels,
        &MlpParams {
            hidden: 4,
            epochs: 20,
            learning_rate: 0.1,
            seed: 0,
        },
    )
    .unwrap();
    for model in [TrainedModel::Svm(svm), TrainedModel::Mlp(mlp)] {
        let file = ModelFile::new(model, "h".into(), &data.inputs).unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(
            back.to_json().unwrap(),
            std::fs::read_to_string(&path).unwrap()
        );
        for x in &data.inputs {
            assert_eq!(
                back.model.decision(x).unwrap().to_bits(),
                file.model.decision(x).unwrap().to_bits()
            );
        }
    }
}

#[test]
fn tampered_model_file_rejected() {
    let data = overlapping_gaussians(2, 40);
    let svm = train_svm(
        &data.inputs,
        &data.labels,
        &SvmParams::new(1.0, KernelSpec::Linear),
    )
    .unwrap();
    let mut file = ModelFile::new(TrainedModel::Svm(svm), "h".into(), &data.inputs).unwrap();
    file.probe_scores[0] += 1e-9;
    assert!(ModelFile::from_json(&file.to_json().unwrap()).is_err());
}
