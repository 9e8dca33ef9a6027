//! Two-layer ReLU model with unit-sphere input weights.
//!
//! The model is `v(x) = c0 + Σ_i c_i · relu(ω_i·x - b_i)`: a continuous
//! piecewise-linear function whose kinks lie on the hinge hyperplanes
//! `ω_i·x = b_i`. Input weights are kept on the unit sphere; the scaling
//! identity `relu(ω·x - b) = |ω| relu(ω/|ω|·x - b/|ω|)` makes this lossless.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// `max{0, t}`.
#[inline]
pub fn relu(t: f64) -> f64 {
    t.max(0.0)
}

/// Hidden-layer unit: input direction `omega` and bias `b`.
///
/// `omega` is a unit vector after any normalization; in one dimension the
/// convention is `omega = [1.0]` and only the bias moves during training.
#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub omega: Vec<f64>,
    pub b: f64,
}

impl Neuron {
    pub fn new(omega: Vec<f64>, b: f64) -> Self {
        Self { omega, b }
    }

    /// `omega·x - b`.
    #[inline]
    pub fn preactivation(&self, x: &[f64]) -> f64 {
        math::dot(&self.omega, x) - self.b
    }
}

/// Gradient of the model output with respect to all parameters at one point.
/// The `d_omega` rows are projected onto the tangent space of the unit
/// sphere at the corresponding `omega`.
#[derive(Debug, Clone)]
pub struct ModelGradient {
    pub d_c0: f64,
    pub d_c: Vec<f64>,
    pub d_b: Vec<f64>,
    pub d_omega: Vec<Vec<f64>>,
}

/// The full parameter set of a two-layer ReLU model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluModel {
    dim: usize,
    c0: f64,
    c: Vec<f64>,
    neurons: Vec<Neuron>,
}

/// Batch evaluation with the per-neuron pre-activations retained
/// (`preactivations[p * n_neurons + i] = ω_i·x_p - b_i`).
#[derive(Debug, Clone)]
pub struct BatchEval {
    pub values: Vec<f64>,
    pub preactivations: Vec<f64>,
    pub n_neurons: usize,
}

impl BatchEval {
    pub fn preactivations_at(&self, point: usize) -> &[f64] {
        &self.preactivations[point * self.n_neurons..(point + 1) * self.n_neurons]
    }
}

impl ReluModel {
    pub fn new(dim: usize, c0: f64, c: Vec<f64>, neurons: Vec<Neuron>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        if c.len() != neurons.len() {
            return Err(Error::invalid("output weights and neurons must have equal length"));
        }
        if let Some(bad) = neurons.iter().position(|nr| nr.omega.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: neurons[bad].omega.len() });
        }
        Ok(Self { dim, c0, c, neurons })
    }

    /// Constant model with no neurons.
    pub fn constant(dim: usize, c0: f64) -> Result<Self> {
        Self::new(dim, c0, Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    /// `(d+1)·n + 1`: output weights and bias plus a unit direction and bias
    /// per neuron (the sphere constraint removes one degree of freedom).
    pub fn parameter_count(&self) -> usize {
        (self.dim + 1) * self.neurons.len() + 1
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn set_output_weights(&mut self, c0: f64, c: Vec<f64>) -> Result<()> {
        if c.len() != self.neurons.len() {
            return Err(Error::DimensionMismatch { expected: self.neurons.len(), got: c.len() });
        }
        self.c0 = c0;
        self.c = c;
        Ok(())
    }

    /// Append new neurons with the given output weights.
    pub fn append_neurons(&mut self, neurons: Vec<Neuron>, c: Vec<f64>) -> Result<()> {
        if neurons.len() != c.len() {
            return Err(Error::invalid("new neurons and output weights must have equal length"));
        }
        if let Some(bad) = neurons.iter().position(|nr| nr.omega.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: neurons[bad].omega.len() });
        }
        self.neurons.extend(neurons);
        self.c.extend(c);
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// `c0 + Σ c_i relu(ω_i·x - b_i)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut v = self.c0;
        for (nr, &ci) in self.neurons.iter().zip(&self.c) {
            v += ci * relu(nr.preactivation(x));
        }
        v
    }

    /// Elementwise [`ReluModel::evaluate`] over a batch of points.
    pub fn evaluate_batch<'a, I>(&self, points: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut out = Vec::new();
        for x in points {
            self.check_point(x)?;
            out.push(self.eval_unchecked(x));
        }
        Ok(out)
    }

    /// Batch evaluation that also caches the per-neuron pre-activations for
    /// reuse by sign-pattern grouping and training.
    pub fn evaluate_batch_cached<'a, I>(&self, points: I) -> Result<BatchEval>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let n = self.neurons.len();
        let mut values = Vec::new();
        let mut pre = Vec::new();
        for x in points {
            self.check_point(x)?;
            let mut v = self.c0;
            for (nr, &ci) in self.neurons.iter().zip(&self.c) {
                let z = nr.preactivation(x);
                pre.push(z);
                v += ci * relu(z);
            }
            values.push(v);
        }
        Ok(BatchEval { values, preactivations: pre, n_neurons: n })
    }

    /// Rescale every `omega` to unit length, dividing the bias and scaling
    /// the output weight by the old length so the represented function is
    /// unchanged at every point.
    pub fn normalize(&self) -> Result<ReluModel> {
        let mut out = self.clone();
        for (i, nr) in out.neurons.iter_mut().enumerate() {
            let len = math::norm2(&nr.omega);
            if len == 0.0 {
                return Err(Error::DegenerateNeuron { index: i });
            }
            for w in nr.omega.iter_mut() {
                *w /= len;
            }
            nr.b /= len;
            out.c[i] *= len;
        }
        Ok(out)
    }

    /// Analytic gradient of the output at `x` with respect to every
    /// parameter. The ReLU subgradient at the kink is taken as zero, so a
    /// neuron sitting exactly on its hinge contributes nothing.
    pub fn model_gradient(&self, x: &[f64]) -> Result<ModelGradient> {
        self.check_point(x)?;
        let n = self.neurons.len();
        let d = self.dim;
        let mut d_c = vec![0.0; n];
        let mut d_b = vec![0.0; n];
        let mut d_omega = vec![vec![0.0; d]; n];
        for (i, (nr, &ci)) in self.neurons.iter().zip(&self.c).enumerate() {
            let z = nr.preactivation(x);
            d_c[i] = relu(z);
            if z > 0.0 {
                d_b[i] = -ci;
                let row = &mut d_omega[i];
                row.copy_from_slice(x);
                // project onto the tangent space of the sphere at omega
                let along = math::dot(row, &nr.omega);
                for (g, w) in row.iter_mut().zip(&nr.omega) {
                    *g = ci * (*g - along * w);
                }
            }
        }
        Ok(ModelGradient { d_c0: 1.0, d_c, d_b, d_omega })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hinge_1d() -> ReluModel {
        ReluModel::new(1, 0.0, vec![1.0], vec![Neuron::new(vec![1.0], 0.3)]).unwrap()
    }

    #[test]
    fn relu_branches() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(relu(0.0), 0.0);
    }

    #[test]
    fn evaluate_single_hinge() {
        let m = hinge_1d();
        assert!((m.evaluate(&[0.8]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_zero_output_weight() {
        let m = ReluModel::new(2, 2.0, vec![0.0], vec![Neuron::new(vec![0.6, 0.8], 0.1)]).unwrap();
        assert_eq!(m.evaluate(&[0.1, 0.9]).unwrap(), 2.0);
    }

    #[test]
    fn evaluate_two_neurons_hand_value() {
        let m = ReluModel::new(
            2,
            0.0,
            vec![1.0, -1.0],
            vec![Neuron::new(vec![1.0, 0.0], 0.0), Neuron::new(vec![0.0, 1.0], 0.0)],
        )
        .unwrap();
        assert!((m.evaluate(&[0.5, 0.25]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_wrong_dim() {
        let m = hinge_1d();
        assert!(matches!(
            m.evaluate(&[0.1, 0.2]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn batch_matches_loop_and_handles_empty() {
        let m = ReluModel::new(
            2,
            0.5,
            vec![1.0, 2.0],
            vec![Neuron::new(vec![1.0, 0.0], 0.2), Neuron::new(vec![0.0, 1.0], -0.1)],
        )
        .unwrap();
        let empty: Vec<&[f64]> = Vec::new();
        assert!(m.evaluate_batch(empty).unwrap().is_empty());
        let pts: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![-0.4, 0.9], vec![0.7, -0.3]];
        let batch = m.evaluate_batch(pts.iter().map(Vec::as_slice)).unwrap();
        for (x, v) in pts.iter().zip(&batch) {
            assert_eq!(m.evaluate(x).unwrap(), *v);
        }
        let single = m.evaluate_batch([pts[0].as_slice()]).unwrap();
        assert_eq!(single, vec![m.evaluate(&pts[0]).unwrap()]);
    }

    #[test]
    fn cached_batch_stores_preactivations() {
        let m = ReluModel::new(
            2,
            0.0,
            vec![1.0, -2.0],
            vec![Neuron::new(vec![1.0, 0.0], 0.25), Neuron::new(vec![0.0, 1.0], -0.5)],
        )
        .unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.5, 0.5], vec![-0.5, 0.0]];
        let be = m.evaluate_batch_cached(pts.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(be.preactivations_at(0), &[0.25, 1.0]);
        assert_eq!(be.preactivations_at(1), &[-0.75, 0.5]);
        assert_eq!(be.values.len(), 2);
    }

    #[test]
    fn normalize_rescales_and_preserves_values() {
        let m = ReluModel::new(2, 0.7, vec![1.0], vec![Neuron::new(vec![3.0, 4.0], 5.0)]).unwrap();
        let n = m.normalize().unwrap();
        assert!((n.neurons()[0].omega[0] - 0.6).abs() < 1e-15);
        assert!((n.neurons()[0].omega[1] - 0.8).abs() < 1e-15);
        assert!((n.neurons()[0].b - 1.0).abs() < 1e-15);
        assert!((n.c()[0] - 5.0).abs() < 1e-15);
        for &x in &[[-0.9, 0.4], [0.3, 0.8], [2.0, -1.0]] {
            assert!((m.evaluate(&x).unwrap() - n.evaluate(&x).unwrap()).abs() < 1e-12);
        }
        // idempotent on an already-unit direction
        let again = n.normalize().unwrap();
        assert_eq!(again.neurons()[0], n.neurons()[0]);
    }

    #[test]
    fn normalize_rejects_zero_direction() {
        let m = ReluModel::new(2, 0.0, vec![1.0], vec![Neuron::new(vec![0.0, 0.0], 0.1)]).unwrap();
        assert!(matches!(m.normalize(), Err(Error::DegenerateNeuron { index: 0 })));
    }

    #[test]
    fn gradient_inactive_neuron_is_silent() {
        let m = hinge_1d();
        let g = m.model_gradient(&[0.1]).unwrap();
        assert_eq!(g.d_c0, 1.0);
        assert_eq!(g.d_c[0], 0.0);
        assert_eq!(g.d_b[0], 0.0);
        assert_eq!(g.d_omega[0], vec![0.0]);
    }

    #[test]
    fn gradient_tangent_to_sphere() {
        let m = ReluModel::new(
            3,
            0.2,
            vec![1.3, -0.7],
            vec![
                Neuron::new(vec![0.6, 0.0, 0.8], -0.2),
                Neuron::new(vec![0.0, 1.0, 0.0], 0.1),
            ],
        )
        .unwrap();
        let g = m.model_gradient(&[0.4, 0.5, 0.6]).unwrap();
        for (row, nr) in g.d_omega.iter().zip(m.neurons()) {
            let along: f64 = row.iter().zip(&nr.omega).map(|(a, b)| a * b).sum();
            assert!(along.abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // A configuration at least 1e-3 away from every hinge.
        let m = ReluModel::new(
            2,
            0.3,
            vec![0.8, -1.1],
            vec![
                Neuron::new(vec![0.6, 0.8], 0.05),
                Neuron::new(vec![-0.8, 0.6], -0.4),
            ],
        )
        .unwrap();
        let x = [0.42, 0.31];
        for nr in m.neurons() {
            assert!(nr.preactivation(&x).abs() > 1e-3);
        }
        let g = m.model_gradient(&x).unwrap();
        let h = 1e-6;
        let eval = |m: &ReluModel| m.evaluate(&x).unwrap();

        let mut mp = m.clone();
        mp.c0 += h;
        let mut mm = m.clone();
        mm.c0 -= h;
        assert!(((eval(&mp) - eval(&mm)) / (2.0 * h) - g.d_c0).abs() < 1e-6);

        for i in 0..2 {
            let mut cp = m.c().to_vec();
            cp[i] += h;
            let mut cm = m.c().to_vec();
            cm[i] -= h;
            let mp = ReluModel::new(2, m.c0(), cp, m.neurons().to_vec()).unwrap();
            let mm = ReluModel::new(2, m.c0(), cm, m.neurons().to_vec()).unwrap();
            let fd = (eval(&mp) - eval(&mm)) / (2.0 * h);
            assert!((fd - g.d_c[i]).abs() / g.d_c[i].abs().max(1.0) < 1e-5);

            let mut np = m.neurons().to_vec();
            np[i].b += h;
            let mut nm = m.neurons().to_vec();
            nm[i].b -= h;
            let mp = ReluModel::new(2, m.c0(), m.c().to_vec(), np).unwrap();
            let mm = ReluModel::new(2, m.c0(), m.c().to_vec(), nm).unwrap();
            let fd = (eval(&mp) - eval(&mm)) / (2.0 * h);
            assert!((fd - g.d_b[i]).abs() / g.d_b[i].abs().max(1.0) < 1e-5);

            // Raw finite differences in omega, then project: matches the
            // tangent-space gradient rows.
            let omega = m.neurons()[i].omega.clone();
            let mut fd_raw = [0.0; 2];
            for j in 0..2 {
                let mut op = omega.clone();
                op[j] += h;
                let mut om = omega.clone();
                om[j] -= h;
                let mut np = m.neurons().to_vec();
                np[i].omega = op;
                let mut nm = m.neurons().to_vec();
                nm[i].omega = om;
                let mp = ReluModel::new(2, m.c0(), m.c().to_vec(), np).unwrap();
                let mm = ReluModel::new(2, m.c0(), m.c().to_vec(), nm).unwrap();
                fd_raw[j] = (eval(&mp) - eval(&mm)) / (2.0 * h);
            }
            let along: f64 = fd_raw.iter().zip(&omega).map(|(a, b)| a * b).sum();
            for j in 0..2 {
                let proj = fd_raw[j] - along * omega[j];
                assert!((proj - g.d_omega[i][j]).abs() / proj.abs().max(1.0) < 1e-5);
            }
        }
    }

    #[test]
    fn parameter_count_formula() {
        for (n, d) in [(20usize, 1usize), (38, 1), (578, 2), (7, 3)] {
            let neurons: Vec<Neuron> = (0..n)
                .map(|i| {
                    let mut omega = vec![0.0; d];
                    omega[0] = 1.0;
                    Neuron::new(omega, i as f64)
                })
                .collect();
            let m = ReluModel::new(d, 0.0, vec![0.0; n], neurons).unwrap();
            assert_eq!(m.parameter_count(), (d + 1) * n + 1);
        }
    }

    #[test]
    fn piecewise_linear_along_hinge_free_segment() {
        let m = ReluModel::new(
            2,
            0.1,
            vec![1.0, 2.0, -0.5],
            vec![
                Neuron::new(vec![1.0, 0.0], 0.5),
                Neuron::new(vec![0.0, 1.0], 0.5),
                Neuron::new(vec![0.6, 0.8], -0.3),
            ],
        )
        .unwrap();
        // Segment inside the region x<0.5, y<0.5, 0.6x+0.8y>-0.3.
        let a = [0.0, 0.0];
        let b = [0.4, 0.3];
        let mid = [0.2, 0.15];
        let va = m.evaluate(&a).unwrap();
        let vb = m.evaluate(&b).unwrap();
        let vm = m.evaluate(&mid).unwrap();
        assert!((vm - 0.5 * (va + vb)).abs() < 1e-10);
    }
}
