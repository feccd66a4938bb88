//! Run configuration: flat key-value text with dotted sections.
//!
//! Unknown keys are hard errors. The resolved configuration can be emitted
//! back as a manifest; re-running a manifest reproduces the run.

use crate::cases::{builtin_case, parse_case_file, CaseSpec, DEFAULT_LINE_POINTS};
use crate::driver::{DriverConfig, GeometrySource, InheritanceMode, Mode, RccDirection};
use crate::error::FeaError;
use crate::shellfea::{MaterialParams, QuadratureSpec};
use crate::shellgeom::AnalyticSurface;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: String,
    pub geometry_override: Option<String>,
    pub nx: usize,
    pub ny: usize,
    pub volume_fraction: Option<f64>,
    pub mat: MaterialParams,
    pub thickness: f64,
    pub tol_c: f64,
    pub tol_ref: f64,
    pub tol_rcc: f64,
    pub rho_l: f64,
    pub rho_u: f64,
    pub max_iters: usize,
    pub max_levels: u32,
    pub mode: Mode,
    pub inheritance: InheritanceMode,
    pub rcc_direction: RccDirection,
    pub quad: QuadratureSpec,
    pub line_points: usize,
    pub checkpoint_every: usize,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DriverConfig::default();
        RunConfig {
            case: "case1".to_string(),
            geometry_override: None,
            nx: 20,
            ny: 20,
            volume_fraction: None,
            mat: d.mat,
            thickness: d.thickness,
            tol_c: d.tol_c,
            tol_ref: d.tol_ref,
            tol_rcc: d.tol_rcc,
            rho_l: d.rho_l,
            rho_u: d.rho_u,
            max_iters: d.max_iters,
            max_levels: d.max_levels,
            mode: d.mode,
            inheritance: d.inheritance,
            rcc_direction: d.rcc_direction,
            quad: d.quad,
            line_points: DEFAULT_LINE_POINTS,
            checkpoint_every: 0,
            timing: true,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, FeaError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FeaError::Config(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .map_err(|e| FeaError::Config(format!("config line {}: {}", lineno + 1, e)))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid number `{v}`"))
        }
        match key {
            "case" => self.case = value.to_string(),
            "geometry" => {
                AnalyticSurface::from_name(value)
                    .ok_or_else(|| format!("unknown geometry `{value}`"))?;
                self.geometry_override = Some(value.to_string());
            }
            "mesh.nx" => self.nx = num(value)?,
            "mesh.ny" => self.ny = num(value)?,
            "volume.fraction" => self.volume_fraction = Some(num(value)?),
            "material.e0" => self.mat.e0 = num(value)?,
            "material.emin" => self.mat.e_min = num(value)?,
            "material.nu" => self.mat.nu = num(value)?,
            "material.penal" => self.mat.penal = num(value)?,
            "material.shear_correction" => self.mat.shear_correction = num(value)?,
            "shell.thickness" => self.thickness = num(value)?,
            "opt.tol_c" => self.tol_c = num(value)?,
            "opt.tol_ref" => self.tol_ref = num(value)?,
            "opt.tol_rcc" => self.tol_rcc = num(value)?,
            "opt.rho_l" => self.rho_l = num(value)?,
            "opt.rho_u" => self.rho_u = num(value)?,
            "opt.max_iters" => self.max_iters = num(value)?,
            "opt.max_levels" => self.max_levels = num(value)?,
            "opt.mode" => {
                self.mode = match value {
                    "adaptive" => Mode::Adaptive,
                    "tensor-global" => Mode::TensorGlobal,
                    _ => return Err(format!("invalid mode `{value}`")),
                }
            }
            "opt.inheritance" => {
                self.inheritance = match value {
                    "inherit" => InheritanceMode::Inherit,
                    "reset" => InheritanceMode::Reset,
                    _ => return Err(format!("invalid inheritance `{value}`")),
                }
            }
            "opt.rcc_direction" => {
                self.rcc_direction = match value {
                    "greater" => RccDirection::Greater,
                    "less" => RccDirection::Less,
                    _ => return Err(format!("invalid rcc direction `{value}`")),
                }
            }
            "quadrature.surface" => self.quad.surface = num(value)?,
            "quadrature.thickness" => self.quad.thickness = num(value)?,
            "loads.line_points" => self.line_points = num(value)?,
            "output.checkpoint_every" => self.checkpoint_every = num(value)?,
            "output.timing" => {
                self.timing = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("invalid bool `{value}`")),
                }
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Resolves the case (built-in name or case file path) and the final
    /// driver configuration.
    pub fn resolve(&self) -> Result<(DriverConfig, CaseSpec), FeaError> {
        let mut case = match builtin_case(&self.case, self.line_points) {
            Some(c) => c,
            None => {
                let path = Path::new(&self.case);
                if !path.exists() {
                    return Err(FeaError::Config(format!(
                        "unknown case `{}`; built-ins: {}",
                        self.case,
                        crate::cases::CASE_NAMES.join(", ")
                    )));
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| FeaError::Config(format!("reading case file: {e}")))?;
                parse_case_file(&text)?
            }
        };
        if let Some(name) = &self.geometry_override {
            case.geometry = AnalyticSurface::from_name(name)
                .ok_or_else(|| FeaError::Config(format!("unknown geometry `{name}`")))?;
        }
        if let Some(v) = self.volume_fraction {
            case.vstar = v;
        }
        crate::cases::validate_case(&case)?;
        let cfg = DriverConfig {
            geometry: GeometrySource::Builtin(case.geometry),
            nx: self.nx,
            ny: self.ny,
            vstar_fraction: case.vstar,
            mat: self.mat,
            thickness: self.thickness,
            tol_c: self.tol_c,
            tol_ref: self.tol_ref,
            tol_rcc: self.tol_rcc,
            rho_l: self.rho_l,
            rho_u: self.rho_u,
            max_iters: self.max_iters,
            max_levels: self.max_levels,
            mode: self.mode,
            inheritance: self.inheritance,
            rcc_direction: self.rcc_direction,
            quad: self.quad,
        };
        cfg.validate()?;
        Ok((cfg, case))
    }

    /// Full resolved configuration as manifest text; parsing it back gives an
    /// identical configuration.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("case", self.case.clone());
        if let Some(g) = &self.geometry_override {
            kv("geometry", g.clone());
        }
        kv("loads.line_points", self.line_points.to_string());
        kv("material.e0", fmt_f64(self.mat.e0));
        kv("material.emin", fmt_f64(self.mat.e_min));
        kv("material.nu", fmt_f64(self.mat.nu));
        kv("material.penal", fmt_f64(self.mat.penal));
        kv(
            "material.shear_correction",
            fmt_f64(self.mat.shear_correction),
        );
        kv("mesh.nx", self.nx.to_string());
        kv("mesh.ny", self.ny.to_string());
        kv("opt.inheritance", match self.inheritance {
            InheritanceMode::Inherit => "inherit".into(),
            InheritanceMode::Reset => "reset".into(),
        });
        kv("opt.max_iters", self.max_iters.to_string());
        kv("opt.max_levels", self.max_levels.to_string());
        kv("opt.mode", match self.mode {
            Mode::Adaptive => "adaptive".into(),
            Mode::TensorGlobal => "tensor-global".into(),
        });
        kv("opt.rcc_direction", match self.rcc_direction {
            RccDirection::Greater => "greater".into(),
            RccDirection::Less => "less".into(),
        });
        kv("opt.rho_l", fmt_f64(self.rho_l));
        kv("opt.rho_u", fmt_f64(self.rho_u));
        kv("opt.tol_c", fmt_f64(self.tol_c));
        kv("opt.tol_ref", fmt_f64(self.tol_ref));
        kv("opt.tol_rcc", fmt_f64(self.tol_rcc));
        kv("output.checkpoint_every", self.checkpoint_every.to_string());
        kv("output.timing", self.timing.to_string());
        kv("quadrature.surface", self.quad.surface.to_string());
        kv("quadrature.thickness", self.quad.thickness.to_string());
        kv("shell.thickness", fmt_f64(self.thickness));
        if let Some(v) = self.volume_fraction {
            kv("volume.fraction", fmt_f64(v));
        }
        out
    }
}

/// Shortest round-trip float formatting.
fn fmt_f64(v: f64) -> String {
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let text = "\
case = case1
mesh.nx = 10
mesh.ny = 10
volume.fraction = 0.3   # target
opt.mode = tensor-global
opt.tol_ref = 0.15
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.nx, 10);
        assert_eq!(cfg.mode, Mode::TensorGlobal);
        assert_eq!(cfg.tol_ref, 0.15);
        let (dcfg, case) = cfg.resolve().unwrap();
        assert_eq!(case.name, "case1");
        assert_eq!(dcfg.vstar_fraction, 0.3);
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let err = RunConfig::parse("mesh.nz = 7").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 1") && msg.contains("mesh.nz"), "{msg}");
    }

    #[test]
    fn manifest_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.nx = 12;
        cfg.tol_ref = 0.15;
        cfg.volume_fraction = Some(0.42);
        cfg.timing = false;
        let manifest = cfg.manifest();
        let back = RunConfig::parse(&manifest).unwrap();
        assert_eq!(back.nx, 12);
        assert_eq!(back.tol_ref, 0.15);
        assert_eq!(back.volume_fraction, Some(0.42));
        assert!(!back.timing);
        assert_eq!(back.manifest(), manifest);
    }

    #[test]
    fn defaults_match_run_settings() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.mat.e0, 2100.0);
        assert_eq!(cfg.mat.e_min, 1e-5);
        assert_eq!(cfg.mat.nu, 0.3);
        assert_eq!(cfg.mat.penal, 5.0);
        assert_eq!(cfg.thickness, 5.0);
        assert_eq!(cfg.tol_c, 0.01);
        assert_eq!(cfg.tol_ref, 0.025);
        assert_eq!(cfg.tol_rcc, 0.15);
        assert_eq!(cfg.rho_l, 0.1);
        assert_eq!(cfg.rho_u, 0.9);
        assert_eq!(cfg.max_iters, 300);
    }
}
