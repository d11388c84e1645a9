use hpc_detect::learners::{train, Hyperparameters, LearnerKind};
use hpc_detect::{stratified_split, synth, ClassLabel, GeneratorSpec, TaskMode};

#[test]
fn classes_are_exactly_balanced_and_non_negative() {
    let data = synth::generate(&GeneratorSpec::default().with_n_per_class(150).with_separability(0.3)).unwrap();
    assert_eq!(data.n_rows(), 900);
    assert_eq!(data.n_features(), 16);
    assert_eq!(data.task_mode(), TaskMode::Multiclass);
    for class in ClassLabel::MULTICLASS {
        assert_eq!(data.class_counts()[&class], 150);
    }
    assert!(data.rows().flatten().all(|&v| v >= 0.0 && v.is_finite()));
}

#[test]
fn same_seed_same_data_other_seed_other_data() {
    let spec = GeneratorSpec::default().with_n_per_class(20);
    let a = synth::generate(&spec).unwrap();
    assert_eq!(a, synth::generate(&spec).unwrap());
    assert_ne!(a, synth::generate(&spec.clone().with_seed(spec.seed + 1)).unwrap());
}

#[test]
fn binary_j48_accuracy_rises_with_separability() {
    let mut acc = Vec::new();
    for sep in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let data = synth::generate(&GeneratorSpec::default().with_n_per_class(200).with_separability(sep))
            .unwrap()
            .to_binary_view();
        let split = stratified_split(&data, 0.7, 2020).unwrap();
        let m = train(LearnerKind::J48, &Hyperparameters::default(), &split.train, 2020).unwrap();
        acc.push(m.accuracy(&split.test).unwrap());
    }
    let inversions: Vec<f64> = acc.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect();
    assert!(inversions.len() <= 1 && inversions.iter().all(|&d| d <= 0.01), "{acc:?}");
}

#[test]
fn spec_round_trips_through_toml() {
    let spec = GeneratorSpec::default().with_separability(0.4).with_seed(9);
    assert_eq!(GeneratorSpec::from_toml(&spec.to_toml()).unwrap(), spec);
}

#[test]
fn invalid_specs_are_rejected() {
    for spec in [
        GeneratorSpec::default().with_separability(1.5),
        GeneratorSpec::default().with_separability(-0.1),
        GeneratorSpec::default().with_n_per_class(0),
    ] {
        assert!(synth::generate(&spec).is_err());
    }
    let mut spec = GeneratorSpec::default();
    spec.profiles.get_mut(&ClassLabel::Worm).unwrap().scale[3] = 0.0;
    assert!(spec.validate().is_err());
    let mut spec = GeneratorSpec::default();
    spec.profiles.remove(&ClassLabel::Virus);
    assert!(spec.validate().is_err());
}
