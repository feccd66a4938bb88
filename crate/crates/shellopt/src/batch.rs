//! Batch run execution: resolve a configuration, run the optimizer, and
//! write the output bundle (manifest, CSV log, checkpoints, VTK exports).

use crate::config::RunConfig;
use crate::driver::{optimize, IterationRecord, RunOutcome};
use crate::error::FeaError;
use crate::export::{checkpoint_to_string, density_vtk, tmesh_vtk};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Fea(#[from] FeaError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct OutputBundle {
    pub dir: PathBuf,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub density_vtk_path: PathBuf,
    pub tmesh_vtk_path: PathBuf,
    pub converged: bool,
    pub final_compliance: f64,
    pub final_volume_fraction: f64,
    pub n_iterations: usize,
    pub n_refinements: u32,
}

pub const CSV_HEADER: &str = "iter,level,C,V,ch,RCC,count,n_basis,n_elements,seconds";

/// One CSV row. Floats use shortest round-trip formatting; with timing
/// disabled the seconds column is written as 0 so logs are reproducible.
pub fn csv_row(r: &IterationRecord, timing: bool) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.iter,
        r.level,
        r.compliance,
        r.volume,
        r.ch,
        r.rcc,
        r.count,
        r.n_basis,
        r.n_elements,
        if timing { r.seconds } else { 0.0 }
    )
}

/// Executes the run described by `cfg` and writes all artifacts into `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<OutputBundle, RunError> {
    let (dcfg, case) = cfg.resolve()?;
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join("manifest.cfg");
    fs::write(&manifest_path, cfg.manifest())?;

    let csv_path = dir.join("log.csv");
    let mut csv = std::io::BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(csv, "{CSV_HEADER}")?;

    let mut ck_error: Option<std::io::Error> = None;
    let timing = cfg.timing;
    let every = cfg.checkpoint_every;
    let geometry = dcfg.geometry.clone();
    let thickness = dcfg.thickness;
    let outcome: RunOutcome = optimize(
        &dcfg,
        &case.loads,
        |record: &IterationRecord, rho: &crate::phtspace::Field<1>| {
        if let Err(e) = writeln!(csv, "{}", csv_row(record, timing)) {
            ck_error.get_or_insert(e);
        }
            if every > 0 && record.iter % every == 0 {
                let path = dir.join(format!("checkpoint_{:04}.txt", record.iter));
                let text = checkpoint_to_string(&geometry, thickness, rho);
                if let Err(e) = fs::write(path, text) {
                    ck_error.get_or_insert(e);
                }
            }
        },
    )?;
    csv.flush()?;
    if let Some(e) = ck_error {
        return Err(RunError::Io(e));
    }

    let checkpoint_path = dir.join("final.ckpt");
    fs::write(
        &checkpoint_path,
        checkpoint_to_string(&geometry, thickness, &outcome.rho),
    )?;
    let density_vtk_path = dir.join("density.vtk");
    fs::write(&density_vtk_path, density_vtk(&outcome.surf, &outcome.rho, 4)?)?;
    let tmesh_vtk_path = dir.join("tmesh.vtk");
    fs::write(
        &tmesh_vtk_path,
        tmesh_vtk(&outcome.surf, outcome.space.mesh(), 2)?,
    )?;

    let last = outcome
        .records
        .last()
        .ok_or_else(|| FeaError::Config("run produced no iterations".into()))?;
    Ok(OutputBundle {
        dir: dir.to_path_buf(),
        csv_path,
        manifest_path,
        checkpoint_path,
        density_vtk_path,
        tmesh_vtk_path,
        converged: outcome.converged,
        final_compliance: last.compliance,
        final_volume_fraction: last.volume / outcome.v_solid,
        n_iterations: outcome.records.len(),
        n_refinements: outcome.n_refinements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::Mode;

    fn quick_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.case = "case1".into();
        cfg.nx = 4;
        cfg.ny = 4;
        cfg.max_iters = 3;
        cfg.mode = Mode::TensorGlobal;
        cfg.timing = false;
        cfg
    }

    #[test]
    fn run_writes_bundle() {
        let dir = std::env::temp_dir().join(format!("shellopt-batch-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let bundle = run_to_dir(&quick_cfg(), &dir).unwrap();
        assert!(bundle.csv_path.exists());
        assert!(bundle.manifest_path.exists());
        assert!(bundle.checkpoint_path.exists());
        assert!(bundle.density_vtk_path.exists());
        assert!(bundle.tmesh_vtk_path.exists());
        assert!(!bundle.converged); // max_iters = 3
        let log = fs::read_to_string(&bundle.csv_path).unwrap();
        assert!(log.starts_with(CSV_HEADER));
        assert_eq!(log.lines().count(), 1 + 3);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn deterministic_logs_without_timing() {
        let dir1 = std::env::temp_dir().join(format!("shellopt-det1-{}", std::process::id()));
        let dir2 = std::env::temp_dir().join(format!("shellopt-det2-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir1);
        let _ = fs::remove_dir_all(&dir2);
        let cfg = quick_cfg();
        let b1 = run_to_dir(&cfg, &dir1).unwrap();
        let b2 = run_to_dir(&cfg, &dir2).unwrap();
        let l1 = fs::read(&b1.csv_path).unwrap();
        let l2 = fs::read(&b2.csv_path).unwrap();
        assert_eq!(l1, l2);
        let _ = fs::remove_dir_all(&dir1);
        let _ = fs::remove_dir_all(&dir2);
    }
}
