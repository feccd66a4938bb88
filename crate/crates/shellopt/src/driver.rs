//! Adaptive optimization loop: analyze, filter, update, refine.
//!
//! One iteration assembles the stiffness with the current density, solves,
//! filters the compliance sensitivities, and takes an MMA step. Refinement is
//! gated by a counter of consecutive small design changes together with the
//! relative change of compliance (RCC) against the first compliance on the
//! current mesh level. When it fires, gray elements (center density strictly
//! between the bounds) plus their one-ring neighbors are subdivided and the
//! density is either inherited exactly into the refined space or reset to 1.
//! Tensor-global mode skips all refinement logic and serves as the
//! fixed-mesh baseline.

use crate::error::FeaError;
use crate::mma::MmaState;
use crate::phtspace::{Field, PhtSpace};
use crate::shellfea::{Discretization, LoadCase, MaterialParams, QuadratureSpec};
use crate::shellgeom::{AnalyticSurface, MidSurface};
use crate::simpopt::{
    compliance_sensitivity, filter_sensitivities, variable_coords, volume_sensitivity,
    VertexIndex,
};
use crate::solver::ShellSolver;
use crate::tmesh::{ElementId, HierTMesh, MAX_DEPTH};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Adaptive,
    TensorGlobal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InheritanceMode {
    Inherit,
    Reset,
}

/// Direction of the RCC comparison in the refinement gate. The algorithm
/// refines when RCC exceeds the tolerance; `Less` flips the comparison for
/// experimentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RccDirection {
    Greater,
    Less,
}

/// Geometry input: a named built-in surface or explicit control-point
/// coefficients keyed by (vertex coordinate fractions, slot).
#[derive(Debug, Clone)]
pub enum GeometrySource {
    Builtin(AnalyticSurface),
    /// Entries `((s_num, s_den), (t_num, t_den), slot, xyz)`.
    ControlNet(Vec<((u64, u64), (u64, u64), u8, [f64; 3])>),
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub geometry: GeometrySource,
    pub nx: usize,
    pub ny: usize,
    pub vstar_fraction: f64,
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
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            geometry: GeometrySource::Builtin(AnalyticSurface::Plate),
            nx: 10,
            ny: 10,
            vstar_fraction: 0.3,
            mat: MaterialParams::default(),
            thickness: 5.0,
            tol_c: 0.01,
            tol_ref: 0.025,
            tol_rcc: 0.15,
            rho_l: 0.1,
            rho_u: 0.9,
            max_iters: 300,
            max_levels: 4,
            mode: Mode::Adaptive,
            inheritance: InheritanceMode::Inherit,
            rcc_direction: RccDirection::Greater,
            quad: QuadratureSpec::default(),
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<(), FeaError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(FeaError::Config("initial mesh must be at least 1x1".into()));
        }
        if !(self.vstar_fraction > 0.0 && self.vstar_fraction < 1.0) {
            return Err(FeaError::Config(format!(
                "volume fraction {} out of (0, 1)",
                self.vstar_fraction
            )));
        }
        if !(self.rho_l > 0.0 && self.rho_l < self.rho_u && self.rho_u < 1.0) {
            return Err(FeaError::Config(format!(
                "need 0 < rho_l < rho_u < 1, got {} and {}",
                self.rho_l, self.rho_u
            )));
        }
        for (name, v) in [
            ("tol_c", self.tol_c),
            ("tol_ref", self.tol_ref),
            ("tol_rcc", self.tol_rcc),
            ("thickness", self.thickness),
        ] {
            if v <= 0.0 {
                return Err(FeaError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.mat.validate()
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    pub level: u32,
    pub compliance: f64,
    pub volume: f64,
    pub ch: f64,
    pub rcc: f64,
    pub count: u32,
    pub n_basis: usize,
    pub n_elements: usize,
    pub seconds: f64,
}

/// Outcome of an optimization run.
pub struct RunOutcome {
    pub rho: Field<1>,
    pub space: Arc<PhtSpace>,
    pub surf: MidSurface,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub n_refinements: u32,
    pub v_solid: f64,
}

/// Refinement gate of the optimization loop, kept separate so the trigger
/// logic is testable on synthetic traces.
#[derive(Debug, Clone)]
pub struct AlgoGuard {
    pub count: u32,
    pub c_old: f64,
}

impl Default for AlgoGuard {
    fn default() -> Self {
        Self::new()
    }
}

impl AlgoGuard {
    pub fn new() -> Self {
        AlgoGuard {
            count: 0,
            c_old: 1e-5,
        }
    }

    /// First compliance evaluated on a fresh level (k >= 1) resets the RCC
    /// reference. Non-positive values fall back to the initialization seed.
    pub fn begin_level(&mut self, c_new: f64) {
        self.c_old = if c_new > 0.0 { c_new } else { 1e-5 };
    }

    /// Relative change of compliance against the level reference.
    pub fn rcc(&self, c_new: f64) -> f64 {
        let c_old = if self.c_old > 0.0 { self.c_old } else { 1e-5 };
        (c_new - c_old).abs() / c_old
    }

    pub fn observe_ch(&mut self, ch: f64, tol_ref: f64) {
        if ch < tol_ref {
            self.count += 1;
        }
    }

    pub fn should_refine(&self, rcc: f64, tol_rcc: f64, dir: RccDirection) -> bool {
        self.count == 3
            && match dir {
                RccDirection::Greater => rcc > tol_rcc,
                RccDirection::Less => rcc < tol_rcc,
            }
    }

    pub fn after_refinement(&mut self) {
        self.count = 0;
    }
}

/// Elements whose center density lies strictly between the gray bounds.
pub fn mark_gray(
    disc: &Discretization,
    rho: &Field<1>,
    rho_l: f64,
    rho_u: f64,
) -> Vec<ElementId> {
    let dens = disc.element_densities(rho);
    disc.elems
        .iter()
        .zip(&dens)
        .filter(|(_, &d)| rho_l < d && d < rho_u)
        .map(|(em, _)| em.element)
        .collect()
}

/// Single-ring expansion: the marked set plus every active element sharing an
/// edge or a vertex with a marked element.
pub fn expand_marks(mesh: &HierTMesh, marked: &[ElementId]) -> Vec<ElementId> {
    let mut out = marked.to_vec();
    for &e in marked {
        out.extend(mesh.neighbors(e).expect("marked element is active"));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Builds the mid-surface for a geometry source over the given level-0 space.
pub fn build_geometry(
    space: &Arc<PhtSpace>,
    source: &GeometrySource,
    thickness: f64,
) -> Result<MidSurface, FeaError> {
    match source {
        GeometrySource::Builtin(surface) => {
            Ok(MidSurface::from_analytic(space, *surface, thickness)?)
        }
        GeometrySource::ControlNet(entries) => {
            let mesh = space.mesh();
            let (ds, dt) = mesh.denominators();
            let mut coeffs = vec![0.0; space.dim() * 3];
            let mut seen = vec![false; space.dim()];
            for &((sn, sd), (tn, td), slot, xyz) in entries {
                if sd == 0 || td == 0 || ds % sd != 0 || dt % td != 0 || slot > 3 {
                    return Err(FeaError::Config(format!(
                        "control point ({sn}/{sd}, {tn}/{td}, slot {slot}) does not \
                         lie on the mesh lattice"
                    )));
                }
                let coord = (sn * (ds / sd), tn * (dt / td));
                let v = mesh.vertex_id_at(coord).ok_or_else(|| {
                    FeaError::Config(format!(
                        "control point ({sn}/{sd}, {tn}/{td}) is not a mesh vertex"
                    ))
                })?;
                let ids = space
                    .vertex_basis(v)
                    .ok_or_else(|| FeaError::Config("control point at a T-junction".into()))?;
                let b = ids[slot as usize];
                for c in 0..3 {
                    coeffs[b.idx() * 3 + c] = xyz[c];
                }
                seen[b.idx()] = true;
            }
            if seen.iter().any(|&s| !s) {
                return Err(FeaError::Config(
                    "control net does not cover every basis function".into(),
                ));
            }
            let geom = Field::from_coeffs(space, coeffs).map_err(crate::GeomError::from)?;
            Ok(MidSurface::new(geom, thickness))
        }
    }
}

/// Run instrumentation. `on_iteration` fires once per iteration with the
/// post-update density; `on_refinement` fires at refinement events with the
/// density before and after inheritance onto the refined space.
pub trait RunObserver {
    fn on_iteration(&mut self, _record: &IterationRecord, _rho: &Field<1>) {}
    fn on_refinement(&mut self, _before: &Field<1>, _after: &Field<1>) {}
}

impl<F: FnMut(&IterationRecord, &Field<1>)> RunObserver for F {
    fn on_iteration(&mut self, record: &IterationRecord, rho: &Field<1>) {
        self(record, rho)
    }
}

/// Runs the optimization.
pub fn optimize(
    cfg: &DriverConfig,
    loads: &LoadCase,
    mut observer: impl RunObserver,
) -> Result<RunOutcome, FeaError> {
    cfg.validate()?;
    let mesh0 = HierTMesh::tensor(cfg.nx, cfg.ny).map_err(crate::SpaceError::from)?;
    let mut space = Arc::new(PhtSpace::level0(mesh0).map_err(FeaError::Space)?);
    let surf = build_geometry(&space, &cfg.geometry, cfg.thickness)?;
    let mut rho = Field::<1>::constant(&space, [1.0]);
    let mut disc = Discretization::new(&surf, &space, loads, cfg.quad, &cfg.mat)?;
    let mut solver = ShellSolver::new(disc.block_order.clone());
    let mut dvol = volume_sensitivity(&disc);
    let mut coords = variable_coords(&space);
    let mut vindex = VertexIndex::build(&space);
    let mut mma = MmaState::new(space.dim());
    let mut guard = AlgoGuard::new();
    let v_solid = disc.v_solid();
    let vstar = cfg.vstar_fraction * v_solid;

    let mut level: u32 = 0;
    let mut first_eval_on_level = false;
    let mut ch = 1.0;
    let mut iter = 0;
    let mut n_refinements = 0;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut converged = false;

    loop {
        if ch < cfg.tol_c {
            converged = true;
            break;
        }
        if iter >= cfg.max_iters {
            break;
        }
        iter += 1;
        let tic = Instant::now();
        let level_used = level;
        let n_basis = space.dim();
        let n_elements = space.mesh().n_active();

        let sys = disc.assemble(&rho, &cfg.mat, loads)?;
        let u = solver.solve(&sys.k, &sys.f)?;
        let c_new = disc.compliance(&sys, &u)?;
        if first_eval_on_level {
            guard.begin_level(c_new);
            first_eval_on_level = false;
        }
        let energies = disc.element_energies(&u);
        let raw = compliance_sensitivity(&disc, &cfg.mat, &sys.rho_e, &energies);
        let filtered = filter_sensitivities(&space, &vindex, &coords, &rho, &raw);
        let v_current = disc.volume_from_densities(&sys.rho_e);
        let x_new = mma.update(rho.coeffs(), &filtered, v_current, &dvol, vstar)?;
        ch = x_new
            .iter()
            .zip(rho.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rho = Field::from_coeffs(&space, x_new).map_err(FeaError::Space)?;
        let rcc = guard.rcc(c_new);
        guard.observe_ch(ch, cfg.tol_ref);

        let v_record = disc.volume_from_densities(&disc.element_densities(&rho));

        if cfg.mode == Mode::Adaptive && guard.should_refine(rcc, cfg.tol_rcc, cfg.rcc_direction)
        {
            if level >= cfg.max_levels || space.mesh().max_level() >= MAX_DEPTH {
                log::warn!(
                    "refinement trigger at iter {iter} skipped: level limit reached \
                     (level {level}, max {})",
                    cfg.max_levels
                );
                guard.after_refinement();
            } else {
                let gray = mark_gray(&disc, &rho, cfg.rho_l, cfg.rho_u);
                if gray.is_empty() {
                    log::info!("refinement trigger at iter {iter}: no gray elements");
                    guard.after_refinement();
                } else {
                    let expanded = expand_marks(space.mesh(), &gray);
                    let new_space =
                        Arc::new(space.refine(&expanded).map_err(FeaError::Space)?);
                    let inherited = match cfg.inheritance {
                        InheritanceMode::Inherit => {
                            rho.inherit(&new_space).map_err(FeaError::Space)?
                        }
                        InheritanceMode::Reset => Field::constant(&new_space, [1.0]),
                    };
                    observer.on_refinement(&rho, &inherited);
                    rho = inherited;
                    space = new_space;
                    disc = Discretization::new(&surf, &space, loads, cfg.quad, &cfg.mat)?;
                    solver = ShellSolver::new(disc.block_order.clone());
                    dvol = volume_sensitivity(&disc);
                    coords = variable_coords(&space);
                    vindex = VertexIndex::build(&space);
                    mma = MmaState::new(space.dim());
                    guard.after_refinement();
                    level += 1;
                    n_refinements += 1;
                    first_eval_on_level = true;
                    log::info!(
                        "refined to level {level}: {} elements, {} basis functions",
                        space.mesh().n_active(),
                        space.dim()
                    );
                }
            }
        }

        let record = IterationRecord {
            iter,
            level: level_used,
            compliance: c_new,
            volume: v_record,
            ch,
            rcc,
            count: guard.count,
            n_basis,
            n_elements,
            seconds: tic.elapsed().as_secs_f64(),
        };
        observer.on_iteration(&record, &rho);
        records.push(record);
    }

    Ok(RunOutcome {
        rho,
        space,
        surf,
        records,
        converged,
        n_refinements,
        v_solid,
    })
}
