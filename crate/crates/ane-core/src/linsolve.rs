//! Output-weight solve at fixed hinge parameters.
//!
//! With the hinges frozen, the model is linear in `(c0, c)` over the basis
//! `φ_0 ≡ 1`, `φ_i = relu(ω_i·x - b_i)`. [`assemble`] builds the Gram matrix
//! and right-hand side under the discrete inner product of the quadrature
//! mesh (the same inner product the trainer minimizes, so the linear stage
//! is consistent with the nonlinear one), and [`solve_output`] solves the
//! normal equations by dense Cholesky.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::network::{relu, ReluModel};
use crate::quadrature::QuadMesh;
use crate::targets::TargetFn;

/// Dense symmetric Gram system for the output weights.
#[derive(Debug, Clone)]
pub struct MassSystem {
    dim: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl MassSystem {
    /// Build a system from explicit entries (row-major `dim × dim`).
    pub fn from_parts(dim: usize, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim || rhs.len() != dim {
            return Err(Error::invalid("system shape mismatch"));
        }
        Ok(Self { dim, matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

/// Assemble `M_ij = (φ_j, φ_i)_T` and `F_i = (f, φ_i)_T` over the mesh.
pub fn assemble(model: &ReluModel, mesh: &QuadMesh, f: &TargetFn) -> Result<MassSystem> {
    if model.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: mesh.dim() });
    }
    let n = model.n_neurons();
    let dim = n + 1;
    let mut matrix = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    let mut phi = vec![0.0; dim];
    for cell in mesh.cells() {
        let x = cell.center.as_slice();
        let w = cell.volume();
        phi[0] = 1.0;
        for (i, nr) in model.neurons().iter().enumerate() {
            phi[i + 1] = relu(nr.preactivation(x));
        }
        let fx = f.eval(x);
        for i in 0..dim {
            let wi = w * phi[i];
            if wi == 0.0 {
                continue;
            }
            rhs[i] += fx * wi;
            let row = &mut matrix[i * dim..(i + 1) * dim];
            for j in i..dim {
                row[j] += wi * phi[j];
            }
        }
    }
    // mirror the upper triangle so the matrix is exactly symmetric
    for i in 0..dim {
        for j in (i + 1)..dim {
            matrix[j * dim + i] = matrix[i * dim + j];
        }
    }
    Ok(MassSystem { dim, matrix, rhs })
}

/// In-place lower Cholesky factor of a dense symmetric matrix. Fails with
/// the offending pivot index when a pivot is non-positive or non-finite.
pub fn cholesky_factor(dim: usize, matrix: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), dim * dim);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = matrix[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::SingularSystem { pivot: i });
                }
                l[i * dim + i] = math::sqrt(s);
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(l)
}

fn solve_with_factor(dim: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * dim + k] * y[k];
        }
        y[i] = s / l[i * dim + i];
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let mut s = y[i];
        for k in (i + 1)..dim {
            s -= l[k * dim + i] * x[k];
        }
        x[i] = s / l[i * dim + i];
    }
    x
}

fn residual_norm(dim: usize, a: &[f64], x: &[f64], b: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    for i in 0..dim {
        let mut r = -b[i];
        for j in 0..dim {
            r += a[i * dim + j] * x[j];
        }
        s.add(r * r);
    }
    math::sqrt(s.value())
}

/// Solve `M c = F` for the output bias and weights `(c0, c)`.
///
/// On a failed factorization the diagonal is bumped once by
/// `1e-12 · trace/dim`; a second failure propagates the pivot error. One
/// step of iterative refinement keeps the residual near rounding level.
pub fn solve_output(system: &MassSystem) -> Result<(f64, Vec<f64>)> {
    let dim = system.dim;
    let a = &system.matrix;
    let l = match cholesky_factor(dim, a) {
        Ok(l) => l,
        Err(_) => {
            let trace: f64 = (0..dim).map(|i| a[i * dim + i]).sum();
            let bump = 1.0e-12 * trace / dim as f64;
            let mut bumped = a.clone();
            for i in 0..dim {
                bumped[i * dim + i] += bump;
            }
            cholesky_factor(dim, &bumped)?
        }
    };
    let mut x = solve_with_factor(dim, &l, &system.rhs);
    let rhs_norm = math::norm2(&system.rhs);
    if residual_norm(dim, a, &x, &system.rhs) > 1.0e-12 * rhs_norm {
        // one round of iterative refinement
        let mut r = vec![0.0; dim];
        for i in 0..dim {
            let mut s = system.rhs[i];
            for j in 0..dim {
                s -= a[i * dim + j] * x[j];
            }
            r[i] = s;
        }
        let dx = solve_with_factor(dim, &l, &r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    let c0 = x[0];
    let c = x.split_off(1);
    Ok((c0, c))
}

/// Assemble and solve in one step, writing the result into the model.
pub fn refit_output_weights(model: &mut ReluModel, mesh: &QuadMesh, f: &TargetFn) -> Result<()> {
    let system = assemble(model, mesh, f)?;
    let (c0, c) = solve_output(&system)?;
    model.set_output_weights(c0, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Neuron;
    use crate::quadrature::Domain;
    use crate::targets::TargetFn;

    fn unit_mesh(cells: usize) -> QuadMesh {
        QuadMesh::uniform(Domain::new(vec![0.0], vec![1.0]).unwrap(), &[cells]).unwrap()
    }

    #[test]
    fn constant_fit_recovers_mean() {
        let mesh = unit_mesh(64);
        let model = ReluModel::constant(1, 0.0).unwrap();
        let f = TargetFn::new("lin", |x: &[f64]| 2.0 * x[0]);
        let sys = assemble(&model, &mesh, &f).unwrap();
        assert_eq!(sys.dim(), 1);
        assert!((sys.entry(0, 0) - 1.0).abs() < 1e-12);
        let (c0, c) = solve_output(&sys).unwrap();
        assert!(c.is_empty());
        // mean of 2x over the centroids of [0,1]
        assert!((c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_entries_single_hinge() {
        let mesh = unit_mesh(2000);
        let model =
            ReluModel::new(1, 0.0, vec![0.0], vec![Neuron::new(vec![1.0], 0.5)]).unwrap();
        let f = TargetFn::new("zero", |_: &[f64]| 0.0);
        let sys = assemble(&model, &mesh, &f).unwrap();
        assert!((sys.entry(0, 0) - 1.0).abs() < 1e-10);
        assert!((sys.entry(0, 1) - 0.125).abs() / 0.125 < 1e-3);
        assert!((sys.entry(1, 0) - sys.entry(0, 1)).abs() < 1e-15);
        assert!((sys.entry(1, 1) - 1.0 / 24.0).abs() / (1.0 / 24.0) < 1e-3);
    }

    #[test]
    fn duplicate_hinges_fail_cholesky() {
        let mesh = unit_mesh(128);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0, 0.0],
            vec![Neuron::new(vec![1.0], 0.5), Neuron::new(vec![1.0], 0.5)],
        )
        .unwrap();
        let f = TargetFn::new("zero", |_: &[f64]| 0.0);
        let sys = assemble(&model, &mesh, &f).unwrap();
        // exact rank deficiency: the raw factorization must fail
        assert!(matches!(
            cholesky_factor(sys.dim(), sys.matrix()),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn target_in_span_is_recovered() {
        let mesh = unit_mesh(512);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0, 0.0],
            vec![Neuron::new(vec![1.0], 0.25), Neuron::new(vec![1.0], 0.7)],
        )
        .unwrap();
        // f = φ_1 exactly
        let f = TargetFn::new("phi1", |x: &[f64]| (x[0] - 0.25_f64).max(0.0));
        let sys = assemble(&model, &mesh, &f).unwrap();
        let (c0, c) = solve_output(&sys).unwrap();
        assert!(c0.abs() < 1e-8);
        assert!((c[0] - 1.0).abs() < 1e-8);
        assert!(c[1].abs() < 1e-8);
        let fitted =
            ReluModel::new(1, c0, c, model.neurons().to_vec()).unwrap();
        let res = crate::quadrature::discrete_norm(&mesh, |x| f.eval(x) - fitted.eval_unchecked(x))
            .unwrap();
        assert!(res <= 1e-8);
    }

    #[test]
    fn constant_target_needs_only_bias() {
        let mesh = unit_mesh(256);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0, 0.0],
            vec![Neuron::new(vec![1.0], 0.3), Neuron::new(vec![1.0], 0.6)],
        )
        .unwrap();
        let f = TargetFn::new("three", |_: &[f64]| 3.0);
        let sys = assemble(&model, &mesh, &f).unwrap();
        let (c0, c) = solve_output(&sys).unwrap();
        assert!((c0 - 3.0).abs() < 1e-8);
        for ci in c {
            assert!(ci.abs() < 1e-8);
        }
    }

    #[test]
    fn random_spd_matches_inverse_oracle() {
        // A = B Bᵀ + I is SPD; compare against Gauss-Jordan inverse.
        let b = [
            0.8, -0.3, 0.5, 0.1, //
            0.2, 0.9, -0.4, 0.6, //
            -0.7, 0.3, 0.5, -0.2, //
            0.4, -0.6, 0.1, 0.9,
        ];
        let dim = 4;
        let mut a = vec![0.0; 16];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in 0..dim {
                    s += b[i * dim + k] * b[j * dim + k];
                }
                a[i * dim + j] = s;
            }
        }
        let rhs = vec![1.0, -2.0, 0.5, 3.0];
        let sys = MassSystem::from_parts(dim, a.clone(), rhs.clone()).unwrap();
        let (c0, c) = solve_output(&sys).unwrap();
        let x = {
            let mut out = vec![c0];
            out.extend(c);
            out
        };

        // dense inverse via Gauss-Jordan
        let mut aug = vec![0.0; dim * 2 * dim];
        for i in 0..dim {
            for j in 0..dim {
                aug[i * 2 * dim + j] = a[i * dim + j];
            }
            aug[i * 2 * dim + dim + i] = 1.0;
        }
        for col in 0..dim {
            let piv = (col..dim)
                .max_by(|&r, &s| {
                    aug[r * 2 * dim + col].abs().total_cmp(&aug[s * 2 * dim + col].abs())
                })
                .unwrap();
            for j in 0..2 * dim {
                aug.swap(col * 2 * dim + j, piv * 2 * dim + j);
            }
            let p = aug[col * 2 * dim + col];
            for j in 0..2 * dim {
                aug[col * 2 * dim + j] /= p;
            }
            for r in 0..dim {
                if r == col {
                    continue;
                }
                let factor = aug[r * 2 * dim + col];
                for j in 0..2 * dim {
                    aug[r * 2 * dim + j] -= factor * aug[col * 2 * dim + j];
                }
            }
        }
        for i in 0..dim {
            let mut oracle = 0.0;
            for j in 0..dim {
                oracle += aug[i * 2 * dim + dim + j] * rhs[j];
            }
            assert!((oracle - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn galerkin_residual_is_orthogonal() {
        let mesh = unit_mesh(400);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0, 0.0, 0.0],
            vec![
                Neuron::new(vec![1.0], 0.2),
                Neuron::new(vec![1.0], 0.5),
                Neuron::new(vec![1.0], 0.8),
            ],
        )
        .unwrap();
        let f = TargetFn::new("curve", |x: &[f64]| (3.0 * x[0]).sin() + 0.5 * x[0]);
        let sys = assemble(&model, &mesh, &f).unwrap();
        let (c0, c) = solve_output(&sys).unwrap();
        let fitted = ReluModel::new(1, c0, c, model.neurons().to_vec()).unwrap();
        let f_norm = crate::quadrature::discrete_norm(&mesh, |x| f.eval(x)).unwrap();
        // residual against φ_0
        let r0 = crate::quadrature::integrate(&mesh, |x| f.eval(x) - fitted.eval_unchecked(x))
            .unwrap();
        assert!(r0.abs() <= 1e-8 * f_norm);
        for nr in fitted.neurons() {
            let ri = crate::quadrature::integrate(&mesh, |x| {
                (f.eval(x) - fitted.eval_unchecked(x)) * relu(nr.preactivation(x))
            })
            .unwrap();
            assert!(ri.abs() <= 1e-8 * f_norm);
        }
    }

    #[test]
    fn solution_is_best_in_subspace() {
        let mesh = unit_mesh(200);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0, 0.0],
            vec![Neuron::new(vec![1.0], 0.35), Neuron::new(vec![1.0], 0.65)],
        )
        .unwrap();
        let f = TargetFn::new("bump", |x: &[f64]| x[0] * (1.0 - x[0]));
        let sys = assemble(&model, &mesh, &f).unwrap();
        let (c0, c) = solve_output(&sys).unwrap();
        let fitted = ReluModel::new(1, c0, c.clone(), model.neurons().to_vec()).unwrap();
        let base = crate::quadrature::discrete_norm(&mesh, |x| f.eval(x) - fitted.eval_unchecked(x))
            .unwrap();
        for i in 0..c.len() {
            for delta in [1e-3, -1e-3] {
                let mut cp = c.clone();
                cp[i] += delta;
                let m = ReluModel::new(1, c0, cp, model.neurons().to_vec()).unwrap();
                let norm = crate::quadrature::discrete_norm(&mesh, |x| {
                    f.eval(x) - m.eval_unchecked(x)
                })
                .unwrap();
                assert!(norm >= base - 1e-12);
            }
        }
    }

    #[test]
    fn distinct_hinges_on_resolving_mesh_are_spd() {
        // Distinct hinges, several centroids strictly inside each activation
        // region: the discrete Gram matrix factorizes.
        let mesh = unit_mesh(64);
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.0; 5],
            vec![
                Neuron::new(vec![1.0], 0.1),
                Neuron::new(vec![1.0], 0.3),
                Neuron::new(vec![1.0], 0.5),
                Neuron::new(vec![1.0], 0.7),
                Neuron::new(vec![1.0], 0.9),
            ],
        )
        .unwrap();
        let f = TargetFn::new("zero", |_: &[f64]| 0.0);
        let sys = assemble(&model, &mesh, &f).unwrap();
        assert!(cholesky_factor(sys.dim(), sys.matrix()).is_ok());
    }
}
