use edumine::eda::pearson;
use edumine::synth::{generate, SynthSpec};

#[test]
fn subject_marginals_match_the_spec() {
    let spec = SynthSpec {
        n_students: 4000,
        seed: 8,
        ..SynthSpec::default()
    };
    let scored = generate(&spec).unwrap().scored_students().unwrap();
    let n = spec.n_students as f64;
    for (subject, target) in ["reading", "maths", "science", "problem_solving"]
        .iter()
        .zip(spec.marginals)
    {
        let v: Vec<f64> = scored
            .interval(subject)
            .unwrap()
            .iter()
            .flatten()
            .copied()
            .collect();
        assert_eq!(v.len(), spec.n_students);
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let se_mean = target.sd / n.sqrt();
        let se_sd = target.sd / (2.0 * n).sqrt();
        assert!(
            (mean - target.mean).abs() < 3.0 * se_mean,
            "{subject}: mean {mean} vs {}",
            target.mean
        );
        assert!(
            (sd - target.sd).abs() < 4.0 * se_sd,
            "{subject}: sd {sd} vs {}",
            target.sd
        );
        assert!(v.iter().all(|x| (0.0..=100.0).contains(x)));
    }
}

#[test]
fn subject_correlations_track_the_spec() {
    let spec = SynthSpec {
        n_students: 4000,
        seed: 9,
        ..SynthSpec::default()
    };
    let scored = generate(&spec).unwrap().scored_students().unwrap();
    let names = ["reading", "maths", "science", "problem_solving"];
    for i in 0..4 {
        for j in i + 1..4 {
            let r = pearson(&scored, names[i], names[j]).unwrap().r;
            let want = spec.correlations[i][j];
            assert!(
                (r - want).abs() < 0.05,
                "{} x {}: {r} vs {want}",
                names[i],
                names[j]
            );
        }
    }
}

#[test]
fn missing_rate_applies_to_survey_variables() {
    let spec = SynthSpec {
        n_students: 3000,
        seed: 10,
        missing_rate: 0.1,
        ..SynthSpec::default()
    };
    let out = generate(&spec).unwrap();
    for var in &spec.student_vars {
        let rate = out.students.missing_count(&var.name).unwrap() as f64 / 3000.0;
        assert!((rate - 0.1).abs() < 0.02, "{}: {rate}", var.name);
    }
}
