use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qhmm_core::circuits::{one_qubit_rdms, projected_gram_exact, projected_kernel_rdms};
use qhmm_core::io::{dataset_csv, distribution_csv, load_model, model_to_json, parse_model, read_csv, LoadedModel};
use qhmm_core::kernels::{gram, phi_predictive, DivergenceTable};
use qhmm_core::learn::{evaluate, svm_predict, svm_train, Classifier, Protocol};
use qhmm_core::qhmm::{embed_hmm, random_qhmm};
use qhmm_core::tasks::generate_dataset;
use qhmm_core::{Alphabet, ClassicalHmm, GenerativeModel, KernelSpec, Metric, Task};

#[test]
fn builtin_model_distribution_export() {
    let model = load_model("market4").unwrap();
    let q = model.channel();
    let dist = q.enumerate_distribution(6).unwrap();
    let (header, rows) = read_csv(&distribution_csv(&dist, q.alphabet()).unwrap()).unwrap();
    assert_eq!(header, ["sequence", "probability"]);
    assert_eq!(rows.len(), 64);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn file_model_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("market.json");
    let builtin = load_model("market4").unwrap();
    std::fs::write(&path, model_to_json(&builtin).unwrap()).unwrap();
    let loaded = load_model(path.to_str().unwrap()).unwrap();
    assert_eq!(loaded, builtin);
}

#[test]
fn unitary_file_drives_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_qhmm(2, 2, Alphabet::binary(), None, &mut rng).unwrap();
    let model = parse_model(&model_to_json(&LoadedModel::Unitary(u)).unwrap()).unwrap();
    let q = model.channel();
    assert!(q.validate().passed);
    let ds = generate_dataset(&q, 20, 6, &Task::Structural, 1).unwrap();
    let (_, rows) = read_csv(&dataset_csv(&ds, q.alphabet()).unwrap()).unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[0].len() == 6 && (r[1] == "0" || r[1] == "1")));
}

#[test]
fn dataset_to_classifier() {
    let m = ClassicalHmm::market4();
    let q = embed_hmm(&m);
    let ds = generate_dataset(&m, 60, 8, &Task::Structural, 11).unwrap();
    let spec = KernelSpec::structural(Metric::Trace);
    let g = gram(Some(&q), &spec, &ds.sequences, vec![String::new(); 60]).unwrap();
    let model = svm_train(&g, &ds.classes, 1000.0).unwrap();
    let correct = (0..60).filter(|&i| svm_predict(&model, g.row(i)).unwrap() == ds.classes[i]).count();
    assert!(correct >= 54, "{correct}/60");
}

#[test]
fn divergence_table_agrees_with_direct_gram() {
    let m = ClassicalHmm::market4();
    let q = embed_hmm(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seqs: Vec<_> = (0..30).map(|_| m.sample_sequence(8, &mut rng)).collect();
    for spec in [KernelSpec::predictive(Metric::Bures), KernelSpec::structural(Metric::Trace)] {
        let direct = gram(Some(&q), &spec, &seqs, vec![String::new(); 30]).unwrap();
        let table = DivergenceTable::build(Some(&q), &spec, &seqs).unwrap();
        let cached = table.gram(&seqs, None, vec![String::new(); 30]).unwrap();
        for (a, b) in direct.values.iter().zip(&cached.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn projected_gram_uses_feature_state_marginals() {
    let q = embed_hmm(&ClassicalHmm::market4());
    let seqs = Alphabet::binary().sequences(4).unwrap();
    let g = projected_gram_exact(&q, &seqs, 1.0).unwrap().gram;
    assert_eq!(g.n, 16);
    let rdms: Vec<_> = seqs.iter().map(|y| one_qubit_rdms(&phi_predictive(&q, y).unwrap()).unwrap()).collect();
    for i in 0..16 {
        for j in 0..16 {
            let k = projected_kernel_rdms(&rdms[i], &rdms[j], 1.0).unwrap();
            assert!((g.get(i, j) - k).abs() < 1e-10);
        }
    }
}

#[test]
fn evaluation_grid_shape_and_determinism() {
    let m = ClassicalHmm::market4();
    let q = embed_hmm(&m);
    let protocol = Protocol { n: 80, reps: 4, seed: 21, ..Protocol::default() };
    let kernels = [KernelSpec::predictive(Metric::Trace), KernelSpec::rbf(None)];
    let classifiers = [Classifier::Svc, Classifier::Knn];
    let a = evaluate(&m, Some(&q), &Task::predictive(), &kernels, &classifiers, &protocol).unwrap();
    let b = evaluate(&m, Some(&q), &Task::predictive(), &kernels, &classifiers, &protocol).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    for r in &a {
        assert!((0.0..=1.0).contains(&r.out_sample_accuracy));
        assert!(r.out_ci.0 <= r.out_sample_accuracy && r.out_sample_accuracy <= r.out_ci.1);
        assert_eq!(r.per_rep_out.len(), 4);
    }
}
