//! Artifact file formats.
//!
//! - model checkpoint: plain text, header `d n`, then `c0`, then one line
//!   `c_i b_i ω_i[0] … ω_i[d-1]` per neuron, every value with 17
//!   significant digits so reloading is bit-stable;
//! - mesh dump: CSV `center_0..,half_0..,level`, one row per cell;
//! - partition dump: CSV `pattern_hash,n_points,indicator,centroid_0..`;
//! - run report: CSV, one row per outer iteration;
//! - loss trace: CSV `iteration,loss`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use ane_core::driver::{AmrRecord, RunReport};
use ane_core::partition::PhysicalPartition;
use ane_core::{Neuron, QuadMesh, ReluModel};

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// `{:.16e}` carries 17 significant digits, enough to round-trip any f64.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn save_checkpoint(path: &Path, model: &ReluModel) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{} {}", model.dim(), model.n_neurons()).unwrap();
    writeln!(out, "{}", full(model.c0())).unwrap();
    for (nr, &ci) in model.neurons().iter().zip(model.c()) {
        write!(out, "{} {}", full(ci), full(nr.b)).unwrap();
        for w in &nr.omega {
            write!(out, " {}", full(*w)).unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn load_checkpoint(path: &Path) -> Result<ReluModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("checkpoint is empty")?;
    let mut parts = header.split_whitespace();
    let dim: usize = parts
        .next()
        .context("checkpoint header missing dimension")?
        .parse()
        .context("checkpoint dimension is not an integer")?;
    let n: usize = parts
        .next()
        .context("checkpoint header missing neuron count")?
        .parse()
        .context("checkpoint neuron count is not an integer")?;
    let c0: f64 = lines
        .next()
        .context("checkpoint missing output bias line")?
        .trim()
        .parse()
        .context("checkpoint output bias is not a number")?;
    let mut c = Vec::with_capacity(n);
    let mut neurons = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines
            .next()
            .with_context(|| format!("checkpoint missing neuron line {i}"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("checkpoint neuron line {i} has a malformed number"))?;
        if vals.len() != 2 + dim {
            bail!("checkpoint neuron line {i} has {} values, expected {}", vals.len(), 2 + dim);
        }
        c.push(vals[0]);
        neurons.push(Neuron::new(vals[2..].to_vec(), vals[1]));
    }
    ReluModel::new(dim, c0, c, neurons).map_err(|e| anyhow::anyhow!("invalid checkpoint: {e}"))
}

pub fn write_mesh_csv(path: &Path, mesh: &QuadMesh) -> Result<()> {
    let d = mesh.dim();
    let mut out = String::new();
    for j in 0..d {
        write!(out, "center_{j},").unwrap();
    }
    for j in 0..d {
        write!(out, "half_{j},").unwrap();
    }
    out.push_str("level\n");
    for cell in mesh.cells() {
        for j in 0..d {
            write!(out, "{},", cell.center[j]).unwrap();
        }
        for j in 0..d {
            write!(out, "{},", cell.half_width[j]).unwrap();
        }
        writeln!(out, "{}", cell.level).unwrap();
    }
    write_atomic(path, &out)
}

pub fn write_partition_csv(path: &Path, partition: &PhysicalPartition) -> Result<()> {
    let d = partition.dim();
    let mut out = String::from("pattern_hash,n_points,indicator");
    for j in 0..d {
        write!(out, ",centroid_{j}").unwrap();
    }
    out.push('\n');
    for el in &partition.elements {
        write!(out, "{:016x},{},{}", el.pattern.hash64(), el.point_indices.len(), el.indicator)
            .unwrap();
        for j in 0..d {
            write!(out, ",{}", el.centroid[j]).unwrap();
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Report CSV; the wall-time column comes last so that reports from
/// identically seeded runs agree byte-for-byte on every other column.
pub fn write_report_csv(path: &Path, report: &RunReport) -> Result<()> {
    let mut out = String::from(
        "outer,neurons,parameters,mesh_cells,train_loss,estimator,marked,wall_time_secs\n",
    );
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.outer,
            r.neurons,
            r.parameters,
            r.mesh_cells,
            r.train_loss,
            r.estimator,
            r.marked,
            r.wall_time_secs
        )
        .unwrap();
    }
    write_atomic(path, &out)
}

pub fn write_trace_csv(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("iteration,loss\n");
    for (i, l) in trace {
        writeln!(out, "{i},{l}").unwrap();
    }
    write_atomic(path, &out)
}

pub fn write_amr_csv(path: &Path, history: &[AmrRecord]) -> Result<()> {
    let mut out = String::from("pass,cells,eta,accepted\n");
    for r in history {
        writeln!(out, "{},{},{},{}", r.pass, r.cells, r.eta, r.accepted).unwrap();
    }
    write_atomic(path, &out)
}

/// Generic comparison table used by the reproduction batteries.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    write_atomic(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ane_core::Domain;

    #[test]
    fn checkpoint_round_trip_is_bit_stable() {
        let model = ReluModel::new(
            2,
            0.123456789012345678,
            vec![1.0 / 3.0, -2.0 / 7.0],
            vec![
                Neuron::new(vec![0.6, 0.8], 1.0e-17),
                Neuron::new(vec![-1.0 / 3.0_f64.sqrt(), (2.0 / 3.0_f64).sqrt()], -0.25),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_checkpoint(&path, &model).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.dim(), model.dim());
        assert_eq!(loaded.c0().to_bits(), model.c0().to_bits());
        for (a, b) in loaded.c().iter().zip(model.c()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in loaded.neurons().iter().zip(model.neurons()) {
            assert_eq!(a.b.to_bits(), b.b.to_bits());
            for (x, y) in a.omega.iter().zip(&b.omega) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // saving the loaded model reproduces the file exactly
        let path2 = dir.path().join("model2.txt");
        save_checkpoint(&path2, &loaded).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&path2).unwrap()
        );
    }

    #[test]
    fn checkpoint_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "1 2\n0.0\n1.0 0.5 1.0\n").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn mesh_csv_has_expected_header() {
        let mesh = QuadMesh::uniform(
            Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            &[2, 2],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.csv");
        write_mesh_csv(&path, &mesh).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "center_0,center_1,half_0,half_1,level");
        assert_eq!(lines.count(), 4);
    }
}
