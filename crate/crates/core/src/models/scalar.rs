use super::Model;
use crate::jet::Carrier;

/// `ẋ = 1 - x`, `x(0) = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarModel;

impl Model for ScalarModel {
    fn name(&self) -> &'static str {
        "scalar"
    }

    fn dimension(&self) -> usize {
        1
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn var_name(&self, _i: usize) -> String {
        "x".into()
    }

    fn incidence(&self, _i: usize) -> &[usize] {
        &[0]
    }

    fn rhs<C: Carrier, S: Fn(usize) -> C>(&self, _i: usize, q: &S, _t: C) -> C {
        C::constant(1.0) - q(0)
    }

    fn diag_jacobian<S: Fn(usize) -> f64>(&self, _i: usize, _q: &S, _t: f64) -> Option<f64> {
        Some(-1.0)
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        Some(vec![-(-t).exp_m1()])
    }
}

impl ScalarModel {
    /// `k`-th time derivative of the exact solution.
    pub fn exact_derivative(t: f64, k: usize) -> f64 {
        if k == 0 {
            -(-t).exp_m1()
        } else if k % 2 == 1 {
            (-t).exp()
        } else {
            -(-t).exp()
        }
    }
}
