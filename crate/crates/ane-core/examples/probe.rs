// Scratch probe for calibration runs (not part of the deliverable surface).
use std::collections::BTreeMap;
use std::time::Instant;

use ane_core::driver::{
    ane_fixed_mesh, fixed_network, AmrConfig, AneConfig, Enhancement, NullClock, OutputInit,
};
use ane_core::optimize::TrainConfig;
use ane_core::quadrature::{integrate, QuadMesh};
use ane_core::TargetRegistry;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "quad".into());
    let reg = TargetRegistry::with_builtins();
    match which.as_str() {
        "quad" => {
            for standard in [false, true] {
                let mut params = BTreeMap::new();
                params.insert("kellogg_standard".to_string(), if standard { 1.0 } else { 0.0 });
                let built = reg.build("test2", &params).unwrap();
                let t0 = Instant::now();
                let fine = QuadMesh::uniform(built.spec.domain.clone(), &[1600, 1600]).unwrap();
                let reference = integrate(&fine, |x| built.f.eval(x)).unwrap();
                let ref_sq = integrate(&fine, |x| built.f.eval(x).powi(2)).unwrap();
                let ref_abs = integrate(&fine, |x| built.f.eval(x).abs()).unwrap();
                println!(
                    "standard={standard} ref={reference:.6e} ref_sq={ref_sq:.6e} ref_abs={ref_abs:.6e} ({:?})",
                    t0.elapsed()
                );
                for m in [50usize, 100, 200, 400] {
                    let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[m, m]).unwrap();
                    let q = integrate(&mesh, |x| built.f.eval(x)).unwrap();
                    let q_sq = integrate(&mesh, |x| built.f.eval(x).powi(2)).unwrap();
                    let q_abs = integrate(&mesh, |x| built.f.eval(x).abs()).unwrap();
                    println!(
                        "  m={m:4}  acc={:.4e}  acc_sq={:.4e}  acc_abs={:.4e}",
                        (reference - q).abs() / reference.abs(),
                        (ref_sq - q_sq).abs() / ref_sq.abs(),
                        (ref_abs - q_abs).abs() / ref_abs.abs()
                    );
                }
            }
        }
        "ane1d" => {
            let built = reg.build("test1", &BTreeMap::new()).unwrap();
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[1000]).unwrap();
            let cfg = AneConfig {
                epsilon: 0.005,
                enhancement: Enhancement::LocalAverage,
                output_init: OutputInit::Resolve,
                initial_m0: 9,
                initial_mesh_counts: vec![1000],
                amr: AmrConfig::default(),
                train: TrainConfig::default(),
                max_outer_iters: 12,
                max_neurons: None,
            };
            let t0 = Instant::now();
            let report = ane_fixed_mesh(&built.f, &mesh, &cfg, &NullClock).unwrap();
            println!("met={} elapsed={:?}", report.tolerance_met, t0.elapsed());
            for r in &report.records {
                println!(
                    "  outer={} n={} params={} loss={:.6e} xi={:.6} marked={}",
                    r.outer, r.neurons, r.parameters, r.train_loss, r.estimator, r.marked
                );
            }
        }
        "fixed1d" => {
            let built = reg.build("test1", &BTreeMap::new()).unwrap();
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[1000]).unwrap();
            for n in [20usize, 38] {
                for (tag, cfg) in [
                    ("paper-rule", TrainConfig::default()),
                    (
                        "long",
                        TrainConfig {
                            plateau_rel: 0.0,
                            max_iters: 200_000,
                            ..TrainConfig::default()
                        },
                    ),
                ] {
                    let t0 = Instant::now();
                    let report = fixed_network(&built.f, &mesh, n, 0.005, &cfg, &NullClock).unwrap();
                    let r = &report.records[0];
                    println!(
                        "fixed n={} [{}] xi={:.6} loss={:.6e} iters~{} elapsed={:?}",
                        n,
                        tag,
                        r.estimator,
                        r.train_loss,
                        report.loss_trace.last().unwrap().0,
                        t0.elapsed()
                    );
                }
            }
        }
        "trace1d" => {
            use ane_core::driver::initial_model;
            use ane_core::optimize::adam_train;
            let built = reg.build("test1", &BTreeMap::new()).unwrap();
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[1000]).unwrap();
            let model = initial_model(&built.f, &mesh, 19).unwrap();
            let iters: usize = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(40_000);
            let cfg = TrainConfig {
                plateau_window: iters,
                max_iters: iters,
                ..TrainConfig::default()
            };
            let t0 = Instant::now();
            let r = adam_train(&model, &mesh, &built.f, &cfg).unwrap();
            println!("iters={} best={:.6e} ({:?})", r.iterations, r.final_loss, t0.elapsed());
            for (i, l) in r.loss_trace.iter().step_by(iters / 2000) {
                println!("  {i:6} {l:.6e}");
            }
        }
        "bench2d" => {
            use ane_core::driver::initial_model;
            use ane_core::optimize::adam_train;
            let built = reg.build("test2", &BTreeMap::new()).unwrap();
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[200, 200]).unwrap();
            for m0 in [9usize, 29, 59] {
                let model = initial_model(&built.f, &mesh, m0).unwrap();
                let iters = 500;
                let cfg = TrainConfig {
                    plateau_window: iters,
                    max_iters: iters,
                    ..TrainConfig::default()
                };
                let t0 = Instant::now();
                let r = adam_train(&model, &mesh, &built.f, &cfg).unwrap();
                let dt = t0.elapsed();
                println!(
                    "n={} iters={} -> {:?} per iter, loss {:.4e}",
                    model.n_neurons(),
                    r.iterations,
                    dt / iters as u32,
                    r.final_loss
                );
            }
        }
        "kellogg" => {
            let standard = std::env::args().nth(2).as_deref() == Some("standard");
            let mut params = BTreeMap::new();
            if standard {
                params.insert("kellogg_standard".to_string(), 1.0);
            }
            let built = reg.build("test2", &params).unwrap();
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &[200, 200]).unwrap();
            let cfg = AneConfig {
                epsilon: 0.05,
                enhancement: Enhancement::LocalBulk { gamma1: 0.7 },
                output_init: OutputInit::Resolve,
                initial_m0: 9,
                initial_mesh_counts: vec![200, 200],
                amr: AmrConfig::default(),
                train: TrainConfig::default(),
                max_outer_iters: 10,
                max_neurons: Some(120),
            };
            struct StdClock(Instant);
            impl ane_core::driver::Clock for StdClock {
                fn now_secs(&self) -> f64 {
                    self.0.elapsed().as_secs_f64()
                }
            }
            let t0 = Instant::now();
            let report = ane_fixed_mesh(&built.f, &mesh, &cfg, &StdClock(t0)).unwrap();
            println!(
                "standard={standard} met={} elapsed={:?}",
                report.tolerance_met,
                t0.elapsed()
            );
            for r in &report.records {
                println!(
                    "  outer={} n={} loss={:.6e} xi={:.6} marked={} t={:.1}s",
                    r.outer, r.neurons, r.train_loss, r.estimator, r.marked, r.wall_time_secs
                );
            }
        }
        other => eprintln!("unknown probe {other}"),
    }
}
