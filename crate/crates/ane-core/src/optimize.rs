//! Full-batch Adam on the discrete least-squares loss.
//!
//! The trainer minimizes `½ ‖f - v‖²_T` over all model parameters while
//! reporting the norm itself. Directions stay on the unit sphere: gradients
//! for the `ω` blocks are projected onto the tangent space, and after every
//! step each direction is renormalized with the bias and output weight
//! compensated by the scaling identity, so the represented function is
//! untouched by the retraction. The run is fully deterministic — no
//! sampling, fixed summation order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::network::{ModelGradient, Neuron, ReluModel};
use crate::quadrature::{discrete_norm, QuadMesh};
use crate::targets::TargetFn;

/// Adam and stopping-rule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// The run stops once the best loss seen fails to improve by
    /// `plateau_rel` relative over the last `plateau_window` iterations
    /// (the raw loss oscillates under Adam; the running minimum makes the
    /// stopping test insensitive to individual spikes).
    pub plateau_window: usize,
    pub plateau_rel: f64,
    pub max_iters: usize,
    /// Carried for run reproducibility records; the full-batch loop itself
    /// draws no randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            plateau_window: 2000,
            plateau_rel: 1e-3,
            max_iters: 200_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.beta1 >= 0.0 && self.beta1 < 1.0 && self.beta2 >= 0.0 && self.beta2 < 1.0) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(self.eps_adam > 0.0) {
            return Err(Error::invalid("eps_adam must be positive"));
        }
        if self.plateau_window == 0 {
            return Err(Error::invalid("plateau_window must be at least 1"));
        }
        if !(self.plateau_rel >= 0.0) {
            return Err(Error::invalid("plateau_rel must be non-negative"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of a training run. `model` is the best iterate seen, not
/// necessarily the last one.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: ReluModel,
    pub final_loss: f64,
    pub iterations: usize,
    /// `(iteration, loss)` sampled every 100 iterations plus the final state.
    pub loss_trace: Vec<(usize, f64)>,
}

/// Mesh samples flattened for the training hot loop: coordinates stored
/// axis-major (`coords[j*n_points + p]`) so per-neuron sweeps run over
/// contiguous memory, cell volumes as weights, and the target cached at
/// the centroids.
struct Sampled {
    n_points: usize,
    coords: Vec<f64>,
    ws: Vec<f64>,
    fv: Vec<f64>,
}

impl Sampled {
    fn new(mesh: &QuadMesh, f: &TargetFn) -> Self {
        let dim = mesh.dim();
        let n_points = mesh.n_cells();
        let mut coords = vec![0.0; n_points * dim];
        let mut ws = Vec::with_capacity(n_points);
        let mut fv = Vec::with_capacity(n_points);
        for (p, cell) in mesh.cells().iter().enumerate() {
            for j in 0..dim {
                coords[j * n_points + p] = cell.center[j];
            }
            ws.push(cell.volume());
            fv.push(f.eval(&cell.center));
        }
        Self { n_points, coords, ws, fv }
    }

    fn axis(&self, j: usize) -> &[f64] {
        &self.coords[j * self.n_points..(j + 1) * self.n_points]
    }
}

/// Flat parameter layout: `[c0 | c(n) | b(n) | omega(n*d, row-major)]`.
struct Packing {
    dim: usize,
    n: usize,
}

impl Packing {
    fn len(&self) -> usize {
        1 + 2 * self.n + self.n * self.dim
    }

    fn c0(&self) -> usize {
        0
    }

    fn c(&self, i: usize) -> usize {
        1 + i
    }

    fn b(&self, i: usize) -> usize {
        1 + self.n + i
    }

    fn omega(&self, i: usize) -> core::ops::Range<usize> {
        let start = 1 + 2 * self.n + i * self.dim;
        start..start + self.dim
    }

    fn pack(&self, model: &ReluModel) -> Vec<f64> {
        let mut p = vec![0.0; self.len()];
        p[self.c0()] = model.c0();
        for (i, &ci) in model.c().iter().enumerate() {
            p[self.c(i)] = ci;
        }
        for (i, nr) in model.neurons().iter().enumerate() {
            p[self.b(i)] = nr.b;
            p[self.omega(i)].copy_from_slice(&nr.omega);
        }
        p
    }

    fn unpack(&self, params: &[f64]) -> ReluModel {
        let c = (0..self.n).map(|i| params[self.c(i)]).collect();
        let neurons = (0..self.n)
            .map(|i| Neuron::new(params[self.omega(i)].to_vec(), params[self.b(i)]))
            .collect();
        ReluModel::new(self.dim, params[self.c0()], c, neurons)
            .expect("packing preserves shape")
    }
}

/// Scratch buffers reused across iterations of the training loop.
struct Workspace {
    values: Vec<f64>,
    weighted_residual: Vec<f64>,
}

impl Workspace {
    fn new(n_points: usize) -> Self {
        Self { values: vec![0.0; n_points], weighted_residual: vec![0.0; n_points] }
    }
}

const LANES: usize = 4;

/// Per-neuron forward sweep: `values[p] += c_i relu(ω_i·x_p - b_i)`.
fn forward_sweep<const D: usize>(axes: &[&[f64]; D], w: &[f64; D], b: f64, ci: f64, values: &mut [f64]) {
    for (p, v) in values.iter_mut().enumerate() {
        let mut z = -b;
        for j in 0..D {
            z += w[j] * axes[j][p];
        }
        *v += ci * z.max(0.0);
    }
}

/// Per-neuron backward sweep over the weighted residuals; returns the
/// gradient contributions `(g_c, g_b, g_ω)` for neuron `i`. Accumulation
/// runs in fixed four-lane order so results are reproducible.
fn backward_sweep<const D: usize>(
    axes: &[&[f64]; D],
    w: &[f64; D],
    b: f64,
    ci: f64,
    sw: &[f64],
) -> (f64, f64, [f64; D]) {
    let n_points = sw.len();
    let mut gc = [0.0; LANES];
    let mut gb = [0.0; LANES];
    let mut gw = [[0.0; LANES]; D];
    let chunks = n_points / LANES;
    for chunk in 0..chunks {
        let base = chunk * LANES;
        for lane in 0..LANES {
            let p = base + lane;
            let mut z = -b;
            for j in 0..D {
                z += w[j] * axes[j][p];
            }
            let mask = if z > 0.0 { 1.0 } else { 0.0 };
            let t = mask * sw[p];
            gc[lane] += t * z;
            gb[lane] += t;
            for j in 0..D {
                gw[j][lane] += t * axes[j][p];
            }
        }
    }
    for p in chunks * LANES..n_points {
        let mut z = -b;
        for j in 0..D {
            z += w[j] * axes[j][p];
        }
        let mask = if z > 0.0 { 1.0 } else { 0.0 };
        let t = mask * sw[p];
        gc[0] += t * z;
        gb[0] += t;
        for j in 0..D {
            gw[j][0] += t * axes[j][p];
        }
    }
    let sum4 = |a: [f64; LANES]| (a[0] + a[1]) + (a[2] + a[3]);
    let mut gw_out = [0.0; D];
    for j in 0..D {
        gw_out[j] = ci * sum4(gw[j]);
    }
    (sum4(gc), -ci * sum4(gb), gw_out)
}

fn kernel<const D: usize>(
    params: &[f64],
    pk: &Packing,
    s: &Sampled,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    let n = pk.n;
    let c0 = params[pk.c0()];
    let (head, tail) = params.split_at(1 + n);
    let c = &head[1..];
    let (bs, omegas) = tail.split_at(n);

    let mut axes: [&[f64]; D] = [&[]; D];
    for (j, a) in axes.iter_mut().enumerate() {
        *a = s.axis(j);
    }

    ws.values.fill(c0);
    for i in 0..n {
        let mut w = [0.0; D];
        w.copy_from_slice(&omegas[i * D..(i + 1) * D]);
        forward_sweep::<D>(&axes, &w, bs[i], c[i], &mut ws.values);
    }

    let mut loss = KahanSum::new();
    let mut g_c0 = 0.0;
    for p in 0..s.n_points {
        let r = ws.values[p] - s.fv[p];
        let sw = r * s.ws[p];
        loss.add(r * sw);
        g_c0 += sw;
        ws.weighted_residual[p] = sw;
    }

    grad.fill(0.0);
    grad[pk.c0()] = g_c0;
    for i in 0..n {
        let mut w = [0.0; D];
        w.copy_from_slice(&omegas[i * D..(i + 1) * D]);
        let (gc, gb, gw) =
            backward_sweep::<D>(&axes, &w, bs[i], c[i], &ws.weighted_residual);
        grad[pk.c(i)] = gc;
        grad[pk.b(i)] = gb;
        grad[pk.omega(i)].copy_from_slice(&gw);
    }
    math::clamp_nonneg(loss.value())
}

/// Fused squared-loss and gradient pass. Returns `‖f - v‖²_T`; `grad` gets
/// the gradient of `½ ‖f - v‖²_T` in packed layout (`ω` rows unprojected).
fn loss_sq_and_grad(
    params: &[f64],
    pk: &Packing,
    s: &Sampled,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    match pk.dim {
        1 => kernel::<1>(params, pk, s, grad, ws),
        2 => kernel::<2>(params, pk, s, grad, ws),
        3 => kernel::<3>(params, pk, s, grad, ws),
        _ => kernel_dyn(params, pk, s, grad, ws),
    }
}

/// Arbitrary-dimension fallback of [`kernel`], point-major.
fn kernel_dyn(
    params: &[f64],
    pk: &Packing,
    s: &Sampled,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    let n = pk.n;
    let d = pk.dim;
    let n_points = s.n_points;
    let c0 = params[pk.c0()];
    let (head, tail) = params.split_at(1 + n);
    let c = &head[1..];
    let (bs, omegas) = tail.split_at(n);

    ws.values.fill(c0);
    for i in 0..n {
        let w = &omegas[i * d..(i + 1) * d];
        for p in 0..n_points {
            let mut z = -bs[i];
            for j in 0..d {
                z += w[j] * s.coords[j * n_points + p];
            }
            ws.values[p] += c[i] * z.max(0.0);
        }
    }
    let mut loss = KahanSum::new();
    let mut g_c0 = 0.0;
    for p in 0..n_points {
        let r = ws.values[p] - s.fv[p];
        let sw = r * s.ws[p];
        loss.add(r * sw);
        g_c0 += sw;
        ws.weighted_residual[p] = sw;
    }
    grad.fill(0.0);
    grad[pk.c0()] = g_c0;
    for i in 0..n {
        let w = &omegas[i * d..(i + 1) * d];
        let mut gc = 0.0;
        let mut gb = 0.0;
        let g_omega = pk.omega(i);
        for p in 0..n_points {
            let mut z = -bs[i];
            for j in 0..d {
                z += w[j] * s.coords[j * n_points + p];
            }
            if z > 0.0 {
                let t = ws.weighted_residual[p];
                gc += t * z;
                gb += t;
                for j in 0..d {
                    grad[g_omega.start + j] += c[i] * t * s.coords[j * n_points + p];
                }
            }
        }
        grad[pk.c(i)] = gc;
        grad[pk.b(i)] = -c[i] * gb;
    }
    math::clamp_nonneg(loss.value())
}

/// Remove the radial component of each `ω` gradient row.
fn project_tangent(params: &[f64], grad: &mut [f64], pk: &Packing) {
    for i in 0..pk.n {
        let range = pk.omega(i);
        let omega = &params[range.clone()];
        let row = &mut grad[range];
        let along = math::dot(row, omega);
        for (g, w) in row.iter_mut().zip(omega) {
            *g -= along * w;
        }
    }
}

/// Renormalize each direction and compensate bias and output weight by the
/// old length, leaving the represented function unchanged.
fn retract_to_sphere(params: &mut [f64], pk: &Packing) {
    for i in 0..pk.n {
        let range = pk.omega(i);
        let len = math::norm2(&params[range.clone()]);
        if len == 1.0 || len == 0.0 {
            continue;
        }
        for w in params[range].iter_mut() {
            *w /= len;
        }
        params[pk.b(i)] /= len;
        params[pk.c(i)] *= len;
    }
}

/// Discrete least-squares loss `‖f - v‖_T`.
pub fn loss(model: &ReluModel, mesh: &QuadMesh, f: &TargetFn) -> Result<f64> {
    if model.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: mesh.dim() });
    }
    discrete_norm(mesh, |x| f.eval(x) - model.eval_unchecked(x))
}

/// Gradient of `½ ‖f - v‖²_T` with respect to every parameter, `ω` rows
/// projected onto the sphere tangent.
pub fn loss_gradient(model: &ReluModel, mesh: &QuadMesh, f: &TargetFn) -> Result<ModelGradient> {
    if model.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: mesh.dim() });
    }
    let pk = Packing { dim: model.dim(), n: model.n_neurons() };
    let params = pk.pack(model);
    let s = Sampled::new(mesh, f);
    let mut grad = vec![0.0; pk.len()];
    let mut ws = Workspace::new(s.n_points);
    loss_sq_and_grad(&params, &pk, &s, &mut grad, &mut ws);
    project_tangent(&params, &mut grad, &pk);
    Ok(ModelGradient {
        d_c0: grad[pk.c0()],
        d_c: (0..pk.n).map(|i| grad[pk.c(i)]).collect(),
        d_b: (0..pk.n).map(|i| grad[pk.b(i)]).collect(),
        d_omega: (0..pk.n).map(|i| grad[pk.omega(i)].to_vec()).collect(),
    })
}

/// Full-batch Adam from the given model, stopping on the plateau rule or at
/// `max_iters`, whichever comes first.
pub fn adam_train(
    model: &ReluModel,
    mesh: &QuadMesh,
    f: &TargetFn,
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    if model.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: mesh.dim() });
    }
    let pk = Packing { dim: model.dim(), n: model.n_neurons() };
    let s = Sampled::new(mesh, f);
    let n_params = pk.len();

    let mut params = pk.pack(model);
    let mut grad = vec![0.0; n_params];
    let mut ws = Workspace::new(s.n_points);
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut beta1_pow = 1.0;
    let mut beta2_pow = 1.0;

    let mut losses: Vec<f64> = Vec::with_capacity(config.max_iters.min(1 << 20));
    let mut best_curve: Vec<f64> = Vec::with_capacity(config.max_iters.min(1 << 20));
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut updates = 0;

    for t in 1..=config.max_iters {
        let loss_sq = loss_sq_and_grad(&params, &pk, &s, &mut grad, &mut ws);
        let l = math::sqrt(loss_sq);
        if !l.is_finite() {
            return Err(Error::Diverged { iteration: t, learning_rate: config.learning_rate });
        }
        losses.push(l);
        if (t - 1) % 100 == 0 {
            trace.push((t - 1, l));
        }
        if l < best_loss {
            best_loss = l;
            best_params.copy_from_slice(&params);
        }
        best_curve.push(best_loss);
        if t > config.plateau_window {
            let earlier = best_curve[t - 1 - config.plateau_window];
            if best_loss >= (1.0 - config.plateau_rel) * earlier {
                break;
            }
        }

        project_tangent(&params, &mut grad, &pk);
        beta1_pow *= config.beta1;
        beta2_pow *= config.beta2;
        let m_corr = 1.0 / (1.0 - beta1_pow);
        let v_corr = 1.0 / (1.0 - beta2_pow);
        for k in 0..n_params {
            let g = grad[k];
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
            let m_hat = m[k] * m_corr;
            let v_hat = v[k] * v_corr;
            params[k] -= config.learning_rate * m_hat / (math::sqrt(v_hat) + config.eps_adam);
        }
        retract_to_sphere(&mut params, &pk);
        updates = t;
    }

    let last = *losses.last().expect("at least one iteration runs");
    if trace.last().map(|&(i, _)| i) != Some(losses.len() - 1) {
        trace.push((losses.len() - 1, last));
    }
    Ok(TrainResult {
        model: pk.unpack(&best_params),
        final_loss: best_loss,
        iterations: updates,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve;
    use crate::network::Neuron;
    use crate::partition::build_partition;
    use crate::quadrature::Domain;

    fn mesh_1d(cells: usize) -> QuadMesh {
        QuadMesh::uniform(Domain::new(vec![0.0], vec![1.0]).unwrap(), &[cells]).unwrap()
    }

    #[test]
    fn loss_trivials() {
        let mesh = mesh_1d(50);
        let f1 = TargetFn::new("one", |_: &[f64]| 1.0);
        let exact = ReluModel::constant(1, 1.0).unwrap();
        assert_eq!(loss(&exact, &mesh, &f1).unwrap(), 0.0);
        let zero = ReluModel::constant(1, 0.0).unwrap();
        assert!((loss(&zero, &mesh, &f1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loss_equals_partition_total() {
        let mesh = mesh_1d(300);
        let model = ReluModel::new(
            1,
            0.2,
            vec![0.8, -0.5],
            vec![Neuron::new(vec![1.0], 0.4), Neuron::new(vec![1.0], 0.75)],
        )
        .unwrap();
        let f = TargetFn::new("curve", |x: &[f64]| (4.0 * x[0]).sin());
        let l = loss(&model, &mesh, &f).unwrap();
        let part = build_partition(&model, &mesh, &f).unwrap();
        let from_part = part.total_sq.sqrt();
        assert!((l - from_part).abs() <= 1e-12 * l.max(1e-30));
    }

    #[test]
    fn gradient_stationary_in_linear_block_after_solve() {
        let mesh = mesh_1d(400);
        let mut model = ReluModel::new(
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
        let f = TargetFn::new("curve", |x: &[f64]| x[0] * x[0]);
        linsolve::refit_output_weights(&mut model, &mesh, &f).unwrap();
        let g = loss_gradient(&model, &mesh, &f).unwrap();
        assert!(g.d_c0.abs() <= 1e-8);
        for gi in &g.d_c {
            assert!(gi.abs() <= 1e-8);
        }
    }

    #[test]
    fn gradient_zero_bias_sensitivity_without_output_weight() {
        let mesh = mesh_1d(64);
        let model = ReluModel::new(
            1,
            0.5,
            vec![0.0, 0.0],
            vec![Neuron::new(vec![1.0], 0.3), Neuron::new(vec![1.0], 0.6)],
        )
        .unwrap();
        let f = TargetFn::new("lin", |x: &[f64]| x[0]);
        let g = loss_gradient(&model, &mesh, &f).unwrap();
        for gb in &g.d_b {
            assert_eq!(*gb, 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Random-ish kink-free configurations in one and two dimensions.
        for dim in [1usize, 2] {
            let domain = if dim == 1 {
                Domain::new(vec![0.0], vec![1.0]).unwrap()
            } else {
                Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
            };
            let counts: Vec<usize> = if dim == 1 { vec![37] } else { vec![11, 13] };
            let mesh = QuadMesh::uniform(domain, &counts).unwrap();
            let f = TargetFn::new("wave", move |x: &[f64]| {
                let mut s = 0.3;
                for (j, &xj) in x.iter().enumerate() {
                    s += ((1.0 + j as f64) * 1.7 * xj).sin();
                }
                s
            });
            for trial in 0..20 {
                let phase = trial as f64 * 0.137;
                let neurons: Vec<Neuron> = (0..2)
                    .map(|i| {
                        let mut omega = vec![0.0; dim];
                        if dim == 1 {
                            omega[0] = 1.0;
                        } else {
                            let a = 0.9 * phase + 0.31 + i as f64;
                            omega[0] = a.cos();
                            omega[1] = a.sin();
                        }
                        Neuron::new(omega, 0.217 + 0.31 * i as f64 + 0.071 * phase)
                    })
                    .collect();
                let model = ReluModel::new(
                    dim,
                    0.4 - phase,
                    vec![0.9 + phase, -1.2],
                    neurons,
                )
                .unwrap();
                // skip configurations with a centroid too close to a hinge
                let near_kink = mesh.cells().iter().any(|cell| {
                    model
                        .neurons()
                        .iter()
                        .any(|nr| nr.preactivation(&cell.center).abs() < 1e-3)
                });
                if near_kink {
                    continue;
                }
                let analytic = loss_gradient(&model, &mesh, &f).unwrap();
                let h = 1e-6;
                let loss_sq_of = |m: &ReluModel| {
                    let l = loss(m, &mesh, &f).unwrap();
                    0.5 * l * l
                };
                let check = |fd: f64, an: f64| {
                    let scale = an.abs().max(fd.abs()).max(1e-6);
                    assert!(
                        (fd - an).abs() / scale < 1e-5,
                        "fd {fd} vs analytic {an} (dim {dim}, trial {trial})"
                    );
                };
                let mut mp = model.clone();
                mp.set_output_weights(model.c0() + h, model.c().to_vec()).unwrap();
                let mut mm = model.clone();
                mm.set_output_weights(model.c0() - h, model.c().to_vec()).unwrap();
                check((loss_sq_of(&mp) - loss_sq_of(&mm)) / (2.0 * h), analytic.d_c0);
                for i in 0..2 {
                    let mut cp = model.c().to_vec();
                    cp[i] += h;
                    let mut cm = model.c().to_vec();
                    cm[i] -= h;
                    let mp = ReluModel::new(dim, model.c0(), cp, model.neurons().to_vec()).unwrap();
                    let mm = ReluModel::new(dim, model.c0(), cm, model.neurons().to_vec()).unwrap();
                    check((loss_sq_of(&mp) - loss_sq_of(&mm)) / (2.0 * h), analytic.d_c[i]);

                    let mut np = model.neurons().to_vec();
                    np[i].b += h;
                    let mut nm = model.neurons().to_vec();
                    nm[i].b -= h;
                    let mp = ReluModel::new(dim, model.c0(), model.c().to_vec(), np).unwrap();
                    let mm = ReluModel::new(dim, model.c0(), model.c().to_vec(), nm).unwrap();
                    check((loss_sq_of(&mp) - loss_sq_of(&mm)) / (2.0 * h), analytic.d_b[i]);

                    if dim > 1 {
                        let omega = model.neurons()[i].omega.clone();
                        let mut fd_raw = vec![0.0; dim];
                        for j in 0..dim {
                            let mut op = omega.clone();
                            op[j] += h;
                            let mut om = omega.clone();
                            om[j] -= h;
                            let mut np = model.neurons().to_vec();
                            np[i].omega = op;
                            let mut nm = model.neurons().to_vec();
                            nm[i].omega = om;
                            let mp =
                                ReluModel::new(dim, model.c0(), model.c().to_vec(), np).unwrap();
                            let mm =
                                ReluModel::new(dim, model.c0(), model.c().to_vec(), nm).unwrap();
                            fd_raw[j] = (loss_sq_of(&mp) - loss_sq_of(&mm)) / (2.0 * h);
                        }
                        let along: f64 =
                            fd_raw.iter().zip(&omega).map(|(a, b)| a * b).sum();
                        for j in 0..dim {
                            check(fd_raw[j] - along * omega[j], analytic.d_omega[i][j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn train_from_solved_state_stops_on_plateau() {
        let mesh = mesh_1d(128);
        // target inside the model span
        let f = TargetFn::new("phi", |x: &[f64]| 2.0 + 3.0 * (x[0] - 0.5_f64).max(0.0));
        let mut model =
            ReluModel::new(1, 0.0, vec![0.0], vec![Neuron::new(vec![1.0], 0.5)]).unwrap();
        linsolve::refit_output_weights(&mut model, &mesh, &f).unwrap();
        let start = loss(&model, &mesh, &f).unwrap();
        let config = TrainConfig { plateau_window: 50, max_iters: 10_000, ..TrainConfig::default() };
        let result = adam_train(&model, &mesh, &f, &config).unwrap();
        assert!(result.iterations <= config.plateau_window + 1);
        assert!(result.final_loss <= start + 1e-15);
    }

    #[test]
    fn training_improves_loss_and_keeps_directions_unit() {
        let mesh = QuadMesh::uniform(
            Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            &[16, 16],
        )
        .unwrap();
        let f = TargetFn::new("ridge", |x: &[f64]| (x[0] + 0.6 * x[1]).max(0.0) - 0.2);
        let model = ReluModel::new(
            2,
            0.0,
            vec![0.5, 0.5],
            vec![
                Neuron::new(vec![0.8, 0.6], 0.1),
                Neuron::new(vec![-0.6, 0.8], -0.2),
            ],
        )
        .unwrap();
        let start = loss(&model, &mesh, &f).unwrap();
        let config = TrainConfig {
            learning_rate: 1e-4,
            plateau_window: 100,
            max_iters: 100,
            ..TrainConfig::default()
        };
        let result = adam_train(&model, &mesh, &f, &config).unwrap();
        assert!(result.final_loss <= start);
        for nr in result.model.neurons() {
            assert!((math::norm2(&nr.omega) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let mesh = mesh_1d(100);
        let f = TargetFn::new("bump", |x: &[f64]| x[0] * (1.0 - x[0]));
        let model = ReluModel::new(
            1,
            0.1,
            vec![0.4, -0.3],
            vec![Neuron::new(vec![1.0], 0.3), Neuron::new(vec![1.0], 0.7)],
        )
        .unwrap();
        let config = TrainConfig { max_iters: 500, plateau_window: 500, ..TrainConfig::default() };
        let a = adam_train(&model, &mesh, &f, &config).unwrap();
        let b = adam_train(&model, &mesh, &f, &config).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
    }

    #[test]
    fn divergent_start_reports_iteration() {
        let mesh = mesh_1d(16);
        let f = TargetFn::new("one", |_: &[f64]| 1.0);
        // Output scale chosen so the squared loss overflows immediately.
        let model = ReluModel::new(
            1,
            f64::MAX,
            vec![f64::MAX],
            vec![Neuron::new(vec![1.0], -1.0)],
        )
        .unwrap();
        let err = adam_train(&model, &mesh, &f, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { iteration: 1, .. }));
    }

    #[test]
    fn one_dimensional_directions_never_move() {
        let mesh = mesh_1d(64);
        let f = TargetFn::new("bump", |x: &[f64]| x[0] * (1.0 - x[0]));
        let model = ReluModel::new(
            1,
            0.0,
            vec![0.2, 0.2],
            vec![Neuron::new(vec![1.0], 0.25), Neuron::new(vec![1.0], 0.75)],
        )
        .unwrap();
        let config = TrainConfig { max_iters: 300, plateau_window: 300, ..TrainConfig::default() };
        let result = adam_train(&model, &mesh, &f, &config).unwrap();
        for nr in result.model.neurons() {
            assert_eq!(nr.omega, vec![1.0]);
        }
    }
}
