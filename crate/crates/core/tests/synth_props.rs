use std::fs;

use puckergrade::pipeline::{self, PipelineConfig};
use puckergrade::synth::{self, generate_dataset, DatasetSpec};
use puckergrade::Grade;

#[test]
fn gradient_falls_with_every_grade() {
    for seed in 0..20 {
        let g: Vec<f64> = Grade::ALL
            .iter()
            .map(|&grade| synth::off_band_gradient(&synth::generate_sample(grade, seed, 256)))
            .collect();
        assert!(g.windows(2).all(|w| w[0] > w[1]), "seed {seed}: {g:?}");
    }
}

#[test]
fn severe_grades_sit_further_from_flat_in_feature_space() {
    let ds = generate_dataset(&DatasetSpec::from_totals(5, 21, 42, 256));
    let cfg = PipelineConfig::default();
    let mean = |grade: u8| -> Vec<f64> {
        let members: Vec<Vec<f64>> = ds
            .samples()
            .filter(|s| s.grade.value() == grade)
            .map(|s| {
                pipeline::feature_vector(&s.image, &cfg)
                    .unwrap()
                    .into_data()
            })
            .collect();
        let mut m = vec![0.0; cfg.feature_dim()];
        for v in &members {
            m.iter_mut()
                .zip(v)
                .for_each(|(a, b)| *a += b / members.len() as f64);
        }
        m
    };
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (m1, m4, m5) = (mean(1), mean(4), mean(5));
    assert!(dist(&m1, &m5) > dist(&m4, &m5));
}

#[test]
fn dataset_files_are_reproducible() {
    let spec = DatasetSpec::from_totals(5, 21, 42, 32);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_dataset(&spec).write_to(a.path()).unwrap();
    generate_dataset(&spec).write_to(b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 27);
    for name in &names {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let labels = fs::read_to_string(a.path().join("labels.tsv")).unwrap();
    assert_eq!(labels.lines().count(), 26);
    assert!(labels.lines().all(|l| {
        let (name, grade) = l.split_once('\t').unwrap();
        name.starts_with(&format!("g{grade}_"))
    }));
}
