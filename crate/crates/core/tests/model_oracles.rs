//! Learner correctness checked against properties that do not depend on
//! the learners' own code: training accuracy by brute force, KKT
//! conditions of the SVM dual, finite-difference gradients, and serialized
//! models predicting bit-identically.

use flagsel_core::label::ClassLabel;
use flagsel_core::models::{
    train_cascade, train_dtc, train_nnr, train_svc, DtcParams, Kernel, Mlp, MlpParams, ModelParams, PredictedKey,
    SvcParams,
};
use flagsel_core::{TrainedModel, TrainingMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(v: u8) -> ClassLabel {
    ClassLabel::new(v).unwrap()
}

fn class_of(model: &TrainedModel, x: &[f64]) -> ClassLabel {
    match model.predict_row(x).unwrap() {
        PredictedKey::Class(k) => k,
        other => panic!("not a classifier: {other:?}"),
    }
}

fn training_accuracy(model: &TrainedModel, rows: &[Vec<f64>], y: &[ClassLabel]) -> f64 {
    let ok = rows.iter().zip(y).filter(|(r, t)| class_of(model, r) == **t).count();
    ok as f64 / rows.len() as f64
}

/// `n` rows per class around well separated centres.
fn blobs(classes: usize, n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for k in 0..classes {
        let centre: Vec<f64> = (0..dim).map(|d| if d == k % dim { 6.0 * (1 + k / dim) as f64 } else { 0.0 }).collect();
        for _ in 0..n {
            rows.push(centre.iter().map(|m| m + rng.gen_range(-1.0..1.0)).collect());
            y.push(c(k as u8));
        }
    }
    (rows, y)
}

#[test]
fn dtc_fits_consistent_data_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let dim = rng.gen_range(1..6);
        let n = rng.gen_range(5..200);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while rows.len() < n {
            // small integer grid makes ties and repeated values common
            let r: Vec<f64> = (0..dim).map(|_| rng.gen_range(0..5) as f64).collect();
            if !rows.contains(&r) {
                rows.push(r);
            }
            if rows.len() == 5usize.pow(dim as u32) {
                break;
            }
        }
        let mut y: Vec<ClassLabel> = rows.iter().map(|_| c(rng.gen_range(0..6))).collect();
        y[0] = c(0);
        y[1 % rows.len()] = c(5);
        if rows.len() < 2 {
            continue;
        }
        let m = TrainingMatrix::from_rows(&rows, y.clone()).unwrap();
        let model = train_dtc(&m, &DtcParams::default()).unwrap();
        assert_eq!(training_accuracy(&model, &rows, &y), 1.0, "trial {trial}");
        assert!(model.warnings.is_empty());
    }
}

/// Check the KKT conditions of every one-vs-rest dual problem.
fn assert_kkt(model: &TrainedModel, data: &TrainingMatrix, c_box: f64, tol: f64) {
    let ModelParams::Svc(svc) = &model.params else { panic!("not an svc") };
    let n = data.len();
    for machine in &svc.machines {
        let mut alpha = vec![0.0; n];
        let y: Vec<f64> = data.labels().iter().map(|l| if *l == machine.class { 1.0 } else { -1.0 }).collect();
        for (k, &row) in svc.support_indices.iter().enumerate() {
            alpha[row] = machine.coef[k] * y[row];
        }
        let balance: f64 = alpha.iter().zip(&y).map(|(a, s)| a * s).sum();
        assert!(balance.abs() < 1e-9, "sum alpha y = {balance}");
        let k = svc.machines.iter().position(|m| m.class == machine.class).unwrap();
        for i in 0..n {
            let cap = c_box * data.weights()[i];
            let z = model.normalization.apply(data.row(i));
            let margin = y[i] * svc.decision_values(&z)[k];
            let a = alpha[i];
            assert!(a >= -1e-12 && a <= cap + 1e-12, "alpha {a} outside [0, {cap}]");
            if a <= 1e-12 {
                assert!(margin >= 1.0 - tol, "row {i}: alpha 0, margin {margin}");
            } else if a >= cap - 1e-12 {
                assert!(margin <= 1.0 + tol, "row {i}: alpha at bound, margin {margin}");
            } else {
                assert!((margin - 1.0).abs() <= tol, "row {i}: free alpha {a}, margin {margin}");
            }
        }
    }
}

#[test]
fn svc_separable_data_and_kkt() {
    for (seed, classes, kernel) in [
        (1, 2, Kernel::Linear),
        (2, 3, Kernel::Linear),
        (3, 2, Kernel::Rbf { gamma: 0.5 }),
        (4, 4, Kernel::Rbf { gamma: 0.1 }),
    ] {
        let (rows, y) = blobs(classes, 30, 3, seed);
        let m = TrainingMatrix::from_rows(&rows, y.clone()).unwrap();
        let params = SvcParams { c: 10.0, kernel, ..SvcParams::default() };
        let model = train_svc(&m, &params).unwrap();
        assert_eq!(training_accuracy(&model, &rows, &y), 1.0, "seed {seed}");
        assert!(model.warnings.is_empty(), "{:?}", model.warnings);
        assert_kkt(&model, &m, params.c, params.tol);
    }
}

fn circles(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for k in 0..2 {
        for _ in 0..n {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let radius = if k == 0 { rng.gen_range(0.0..1.0) } else { rng.gen_range(2.5..3.5) };
            rows.push(vec![radius * angle.cos(), radius * angle.sin()]);
            y.push(c(k as u8));
        }
    }
    (rows, y)
}

#[test]
fn rbf_separates_circles_linear_cannot() {
    let (rows, y) = circles(100, 5);
    let m = TrainingMatrix::from_rows(&rows, y.clone()).unwrap();
    let rbf = train_svc(&m, &SvcParams { c: 10.0, kernel: Kernel::Rbf { gamma: 1.0 }, ..SvcParams::default() }).unwrap();
    assert_eq!(training_accuracy(&rbf, &rows, &y), 1.0);
    let linear = train_svc(&m, &SvcParams { c: 10.0, kernel: Kernel::Linear, ..SvcParams::default() }).unwrap();
    let acc = training_accuracy(&linear, &rows, &y);
    assert!(acc <= 0.70, "linear accuracy {acc}");
}

#[test]
fn duplicated_row_equals_doubled_weight() {
    let (mut rows, y) = blobs(2, 15, 2, 8);
    // overlap the classes a little so some multipliers sit at the bound
    rows[0] = vec![3.0, 3.0];
    rows[20] = vec![3.2, 2.9];
    let dim = rows[0].len();
    let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let raw = vec![true; dim];
    let params = SvcParams { c: 1.0, kernel: Kernel::Rbf { gamma: 0.3 }, tol: 1e-10, ..SvcParams::default() };

    let mut dup_rows = rows.clone();
    dup_rows.push(rows[0].clone());
    let mut dup_y = y.clone();
    dup_y.push(y[0]);
    let dup = TrainingMatrix::new(names.clone(), raw.clone(), &dup_rows, dup_y, vec![1.0; dup_rows.len()]).unwrap();

    let mut w = vec![1.0; rows.len()];
    w[0] = 2.0;
    let doubled = TrainingMatrix::new(names, raw, &rows, y, w).unwrap();

    let a = train_svc(&dup, &params).unwrap();
    let b = train_svc(&doubled, &params).unwrap();
    let (ModelParams::Svc(sa), ModelParams::Svc(sb)) = (&a.params, &b.params) else { unreachable!() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let probe: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..9.0)).collect();
        let (da, db) = (sa.decision_values(&probe), sb.decision_values(&probe));
        for (u, v) in da.iter().zip(&db) {
            assert!((u - v).abs() <= 1e-6, "{u} vs {v}");
        }
    }
}

fn finite_difference(net: &Mlp, x: &[f64], y: &[f64], w: &[f64], rows: &[usize], k: usize, h: f64) -> f64 {
    let p = net.parameters();
    let mut plus = net.clone();
    let mut q = p.clone();
    q[k] += h;
    plus.set_parameters(&q);
    let mut minus = net.clone();
    q[k] = p[k] - h;
    minus.set_parameters(&q);
    (plus.loss_and_gradient(x, y, w, rows).0 - minus.loss_and_gradient(x, y, w, rows).0) / (2.0 * h)
}

#[test]
fn nnr_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for arch in 0..20 {
        let input = rng.gen_range(1..7);
        let layers = rng.gen_range(1..4);
        let hidden: Vec<usize> = (0..layers).map(|_| rng.gen_range(1..9)).collect();
        let net = Mlp::new(input, &hidden, arch);
        let n = rng.gen_range(3..12);
        let x: Vec<f64> = (0..n * input).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
        let rows: Vec<usize> = (0..n).collect();
        let (_, grad) = net.loss_and_gradient(&x, &y, &w, &rows);
        for (k, g) in grad.iter().enumerate() {
            let numeric = finite_difference(&net, &x, &y, &w, &rows, k, 1e-5);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "arch {arch} {hidden:?} param {k}: analytic {g} numeric {numeric} rel {rel}");
        }
    }
    eprintln!("worst relative gradient error {worst:e}");
}

#[test]
fn nnr_fits_a_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..300).map(|i| vec![(i % 6) as f64, rng.gen_range(-1.0..1.0)]).collect();
    let y: Vec<ClassLabel> = rows.iter().map(|r| c(r[0] as u8)).collect();
    let m = TrainingMatrix::from_rows(&rows, y).unwrap();
    let model = train_nnr(&m, &MlpParams { epochs: 200, ..MlpParams::default() }).unwrap();
    let mse: f64 = rows
        .iter()
        .map(|r| {
            let PredictedKey::Score(v) = model.predict_row(r).unwrap() else { unreachable!() };
            (v - r[0]) * (v - r[0])
        })
        .sum::<f64>()
        / rows.len() as f64;
    assert!(mse < 1e-2, "mse {mse}");
}

fn probe_bits(model: &TrainedModel, probe: &[f64]) -> Vec<u64> {
    match model.predict_row(probe).unwrap() {
        PredictedKey::Class(k) => vec![u64::from(k.value())],
        PredictedKey::Score(v) => vec![v.to_bits()],
        PredictedKey::Cascade(a, b, v) => vec![u64::from(a.value()), u64::from(b.value()), v.to_bits()],
    }
}

#[test]
fn serialized_models_predict_bit_identically() {
    let (rows, y) = blobs(4, 25, 3, 13);
    let m = TrainingMatrix::from_rows(&rows, y).unwrap();
    let small_net = MlpParams { epochs: 20, ..MlpParams::default() };
    let models = [
        train_dtc(&m, &DtcParams::default()).unwrap(),
        train_svc(&m, &SvcParams::default()).unwrap(),
        train_nnr(&m, &small_net).unwrap(),
        train_cascade(&m, &DtcParams::default(), &SvcParams::default(), &small_net).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for model in &models {
        let text = serde_json::to_string(model).unwrap();
        let back: TrainedModel = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, model);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        for _ in 0..1000 {
            let probe: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..20.0)).collect();
            assert_eq!(probe_bits(model, &probe), probe_bits(&back, &probe));
        }
    }
}
