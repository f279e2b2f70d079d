use std::sync::Arc;

use approx::assert_abs_diff_eq;
use identifiability::model::{ForwardModel, LinearModel, PriorSpec};
use identifiability::oracle::{
    build_vandermonde, lg_sobol_first_order, linspace, LinearGaussianSpec,
};
use identifiability::sobol::first_order_indices;
use identifiability::{Error, Result};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("theta{i}")).collect()
}

/// Closure-backed model for nonlinear cases.
struct Fn2 {
    names: Vec<String>,
    f: fn(&[f64]) -> Vec<f64>,
    outputs: usize,
}

impl std::fmt::Debug for Fn2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Fn2")
    }
}

impl ForwardModel for Fn2 {
    fn name(&self) -> &str {
        "closure"
    }
    fn parameter_names(&self) -> &[String] {
        &self.names
    }
    fn output_count(&self) -> usize {
        self.outputs
    }
    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(theta))
    }
}

fn closure(m: usize, outputs: usize, f: fn(&[f64]) -> Vec<f64>) -> Arc<dyn ForwardModel> {
    Arc::new(Fn2 {
        names: names(m),
        f,
        outputs,
    })
}

#[test]
fn additive_pair_splits_evenly() {
    let model = LinearModel::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
    let r = first_order_indices(&model, &PriorSpec::standard(names(2)), 1 << 14, 1, 1).unwrap();
    for (s, se) in r.indices.iter().zip(&r.std_errors) {
        assert_abs_diff_eq!(*s, 0.5, epsilon = 0.03);
        assert!(*se > 0.0 && *se < 0.02, "{se}");
    }
    assert_abs_diff_eq!(r.indices.iter().sum::<f64>(), 1.0, epsilon = 0.04);
}

#[test]
fn reference_linear_model_matches_closed_form() {
    let spec = LinearGaussianSpec::reference(3, 100);
    let exact = lg_sobol_first_order(&spec).unwrap();
    let model = LinearModel::new(spec.features.clone()).unwrap();
    let r = first_order_indices(&model, &PriorSpec::standard(names(3)), 1 << 14, 7, 1).unwrap();
    for (s, e) in r.indices.iter().zip(&exact) {
        assert_abs_diff_eq!(*s, *e, epsilon = 0.02);
    }
    assert!(
        r.indices[0] > r.indices[1] && r.indices[1] > r.indices[2],
        "{:?}",
        r.indices
    );
    // an even point count keeps d = 0 off the grid
    assert_eq!(r.constant_outputs, 0);
}

#[test]
fn closed_form_oracle_examples() {
    // y = θ1 + 2θ2 with unit variances: 1/5, 4/5
    let spec = LinearGaussianSpec::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
        nalgebra::DVector::zeros(2),
        DMatrix::identity(2, 2),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    let s = lg_sobol_first_order(&spec).unwrap();
    assert_abs_diff_eq!(s[0], 0.2, epsilon = 1e-15);
    assert_abs_diff_eq!(s[1], 0.8, epsilon = 1e-15);
    // columns d, d²: the d=0 row is constant and drops out, d=±1 split evenly
    let v = build_vandermonde(&linspace(-1.0, 1.0, 3), 2).unwrap();
    let spec = LinearGaussianSpec::new(
        v,
        nalgebra::DVector::zeros(2),
        DMatrix::identity(2, 2),
        DMatrix::identity(3, 3) * 0.1,
    )
    .unwrap();
    let s = lg_sobol_first_order(&spec).unwrap();
    assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-15);
}

#[test]
fn nonlinear_square_term() {
    // Var(θ1) = 1, Var(θ2²) = 2
    let model = closure(2, 1, |t| vec![t[0] + t[1] * t[1]]);
    let r = first_order_indices(
        model.as_ref(),
        &PriorSpec::standard(names(2)),
        1 << 15,
        3,
        1,
    )
    .unwrap();
    assert_abs_diff_eq!(r.indices[0], 1.0 / 3.0, epsilon = 0.03);
    assert_abs_diff_eq!(r.indices[1], 2.0 / 3.0, epsilon = 0.03);
}

#[test]
fn pure_interaction_has_no_first_order_effect() {
    let model = closure(2, 1, |t| vec![t[0] * t[1]]);
    let r = first_order_indices(
        model.as_ref(),
        &PriorSpec::standard(names(2)),
        1 << 14,
        5,
        1,
    )
    .unwrap();
    for s in &r.indices {
        assert!(s.abs() < 0.03, "{:?}", r.indices);
    }
}

#[test]
fn affine_output_transform_leaves_indices_unchanged() {
    let base = closure(3, 2, |t| {
        vec![t[0] + 0.5 * t[1] - 0.2 * t[2], t[0] * t[2] + t[1]]
    });
    let scaled = closure(3, 2, |t| {
        vec![
            -4.0 * (t[0] + 0.5 * t[1] - 0.2 * t[2]) + 11.0,
            3.0 * (t[0] * t[2] + t[1]) - 2.0,
        ]
    });
    let prior = PriorSpec::standard(names(3));
    let a = first_order_indices(base.as_ref(), &prior, 4096, 9, 1).unwrap();
    let b = first_order_indices(scaled.as_ref(), &prior, 4096, 9, 1).unwrap();
    for (x, y) in a.indices.iter().zip(&b.indices) {
        assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
    }
}

#[test]
fn constant_outputs_are_excluded() {
    let model = closure(2, 2, |t| vec![t[0] + t[1], 4.0]);
    let r =
        first_order_indices(model.as_ref(), &PriorSpec::standard(names(2)), 4096, 2, 1).unwrap();
    assert_eq!(r.constant_outputs, 1);
    assert_abs_diff_eq!(r.indices[0], 0.5, epsilon = 0.05);
}

#[test]
fn zero_variance_model_is_degenerate() {
    let model = LinearModel::new(DMatrix::zeros(3, 2)).unwrap();
    let err = first_order_indices(&model, &PriorSpec::standard(names(2)), 256, 0, 1).unwrap_err();
    assert!(matches!(err, Error::DegenerateModel(_)), "{err}");
}

#[test]
fn worker_count_does_not_change_result() {
    let model = closure(3, 2, |t| vec![t[0].sin() + t[1] * t[2], t[2].exp()]);
    let prior = PriorSpec::standard(names(3));
    let a = first_order_indices(model.as_ref(), &prior, 2048, 4, 1).unwrap();
    let b = first_order_indices(model.as_ref(), &prior, 2048, 4, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_arguments_are_rejected() {
    let model = LinearModel::new(DMatrix::identity(2, 2)).unwrap();
    assert!(first_order_indices(&model, &PriorSpec::standard(names(3)), 1024, 0, 1).is_err());
    assert!(first_order_indices(&model, &PriorSpec::standard(names(2)), 2, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_linear_models_track_closed_form(
        m in 1usize..=3,
        n in 1usize..=4,
        seed in any::<u64>(),
        entries in proptest::collection::vec(-2.0f64..2.0, 12),
    ) {
        let features = DMatrix::from_fn(n, m, |r, c| entries[r * 3 + c]);
        let spec = LinearGaussianSpec::new(
            features.clone(),
            nalgebra::DVector::zeros(m),
            DMatrix::identity(m, m),
            DMatrix::identity(n, n),
        ).unwrap();
        let exact = lg_sobol_first_order(&spec).unwrap();
        let model = LinearModel::new(features).unwrap();
        let r = first_order_indices(&model, &PriorSpec::standard(names(m)), 4096, seed, 1).unwrap();
        for (s, e) in r.indices.iter().zip(&exact) {
            prop_assert!((s - e).abs() < 0.06, "{:?} vs {:?}", r.indices, exact);
        }
    }
}
