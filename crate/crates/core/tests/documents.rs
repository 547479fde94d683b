use delaystab::{
    CertificateSearchConfig, DecayBound, DecayForm, DelayModel, History, MuSpec, SampleSpec,
    SystemModel, TimeKind,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(value: &T) {
    let text = serde_json::to_string(value).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, value, "{text}");
}

#[test]
fn delay_models_round_trip() {
    for d in [
        DelayModel::Constant { tau: 1.5 },
        DelayModel::BoundedSinusoidal { a: 4.0, b: 1.0 },
        DelayModel::PiecewiseLinear {
            breakpoints: vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)],
        },
        DelayModel::Proportional { alpha: 0.5 },
        DelayModel::LogLag,
        DelayModel::AlternatingParity,
        DelayModel::ConstantDiscrete { d: 3 },
        DelayModel::ProportionalDiscrete { alpha: 0.25 },
    ] {
        round_trip(&d);
    }
}

#[test]
fn delay_documents_reject_unknown_fields() {
    assert!(
        serde_json::from_str::<DelayModel>(r#"{"kind":"proportional","alpha":0.5,"beta":1}"#)
            .is_err()
    );
    assert!(serde_json::from_str::<DelayModel>(r#"{"kind":"log_lag","tau":1}"#).is_err());
    assert!(serde_json::from_str::<DelayModel>(r#"{"kind":"quadratic"}"#).is_err());
}

#[test]
fn systems_round_trip() {
    let linear = SystemModel::linear(
        TimeKind::Discrete,
        &[vec![0.3, 0.2], vec![0.1, 0.4]],
        &[vec![vec![0.1, 0.0], vec![0.2, 0.1]]],
    )
    .unwrap();
    round_trip(&linear);
    let json = r#"{
        "kind": "continuous",
        "f": {"n": 2, "components": [[{"coeff": -5, "exp": [3, 0]}, {"coeff": 2, "exp": [1, 1]}],
                                     [{"coeff": 1, "exp": [2, 1]}, {"coeff": -4, "exp": [0, 2]}]]},
        "delayed": [{"n": 2, "components": [[{"coeff": 1, "exp": [1, 1]}], [{"coeff": 2, "exp": [4, 0]}]]}],
        "dilation": [1, 2],
        "degree": 2
    }"#;
    let model: SystemModel = serde_json::from_str(json).unwrap();
    assert_eq!(model.dilation().r(), &[1.0, 2.0]);
    round_trip(&model);
    assert!(
        serde_json::from_str::<SystemModel>(&json.replace("\"degree\": 2", "\"degree\": -1"))
            .is_err()
    );
    assert!(serde_json::from_str::<SystemModel>(&json.replace("[1, 2]", "[1, 0]")).is_err());
    assert!(serde_json::from_str::<SystemModel>(
        &json.replace("\"degree\"", "\"extra\": 0, \"degree\"")
    )
    .is_err());
}

#[test]
fn histories_round_trip() {
    round_trip(&History::Constant(vec![1.0, 2.0]));
    let table: History =
        serde_json::from_str(r#"{"table":{"times":[-1,0],"states":[[0,1],[1,1]]}}"#).unwrap();
    round_trip(&table);
    assert!(serde_json::from_str::<History>(r#"{"constant":[1],"table":null}"#).is_err());
}

#[test]
fn analysis_documents_round_trip() {
    round_trip(&CertificateSearchConfig::default());
    round_trip(&SampleSpec::default());
    let partial: CertificateSearchConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
    assert_eq!(partial.seed, 9);
    assert_eq!(
        partial.ray_samples,
        CertificateSearchConfig::default().ray_samples
    );
    assert!(serde_json::from_str::<CertificateSearchConfig>(r#"{"rays": 9}"#).is_err());

    round_trip(&MuSpec::PolynomialReciprocal {
        theta: 0.2,
        exponent: 1.0,
    });
    round_trip(&MuSpec::Declared {
        ratio_limit: Some(1.0),
        step_ratio_limit: None,
        derivative_ratio_limit: Some(0.1),
    });

    let bound = DecayBound::new(
        DecayForm::PowerRate { exponent: 0.3 },
        0.3,
        vec![2.0, 1.0],
        vec![Some(0.5), None],
    );
    round_trip(&bound);
}
