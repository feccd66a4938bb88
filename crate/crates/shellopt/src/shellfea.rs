//! Reissner-Mindlin shell discretization on PHT-spline spaces.
//!
//! Five DOFs per basis function: three translations and two rotations about
//! the local tangents. The strain-displacement matrix is composed as
//! `B = T H Gamma R`: `R` maps element DOFs to parametric displacement
//! derivatives, `Gamma` applies the inverse shell-map Jacobian blockwise,
//! `H` collects physical strains, and `T` rotates them into the local frame.
//! The local constitutive matrix enforces zero normal stress; transverse
//! shear carries a correction factor (default 5/6).

use crate::blocksparse::{BlockCsc, ZERO_BLOCK};
use crate::error::FeaError;
use crate::phtspace::{BasisId, Field, PhtSpace};
use crate::quadrature::{gauss_legendre, gauss_on_unit};
use crate::shellgeom::{LocalFrame, MidSurface};
use crate::tmesh::{ElementId, VertexId};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;
use std::sync::Arc;

pub const DOFS_PER_BASIS: usize = 5;

/// SIMP material parameters.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    pub e0: f64,
    pub e_min: f64,
    pub nu: f64,
    pub penal: f64,
    pub shear_correction: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            e0: 2100.0,
            e_min: 1e-5,
            nu: 0.3,
            penal: 5.0,
            shear_correction: 5.0 / 6.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), FeaError> {
        if !(self.e0 > self.e_min && self.e_min > 0.0) {
            return Err(FeaError::Config(format!(
                "need E0 > Emin > 0, got E0={}, Emin={}",
                self.e0, self.e_min
            )));
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(FeaError::Config(format!("Poisson ratio {} out of [0, 0.5)", self.nu)));
        }
        if self.penal < 1.0 {
            return Err(FeaError::Config(format!("SIMP exponent {} < 1", self.penal)));
        }
        Ok(())
    }

    /// SIMP interpolation `E(rho) = Emin + rho^p (E0 - Emin)`.
    #[inline]
    pub fn youngs(&self, rho: f64) -> f64 {
        self.e_min + rho.powf(self.penal) * (self.e0 - self.e_min)
    }

    /// Local constitutive matrix for unit Young's modulus (zero normal stress).
    pub fn d0(&self) -> DMatrix<f64> {
        let nu = self.nu;
        let mut d = DMatrix::zeros(6, 6);
        let c = 1.0 / (1.0 - nu * nu);
        d[(0, 0)] = c;
        d[(1, 1)] = c;
        d[(0, 1)] = nu * c;
        d[(1, 0)] = nu * c;
        let g = 1.0 / (2.0 * (1.0 + nu));
        d[(3, 3)] = g;
        d[(4, 4)] = self.shear_correction * g;
        d[(5, 5)] = self.shear_correction * g;
        d
    }
}

/// Point loads and fixed parametric points.
#[derive(Debug, Clone, Default)]
pub struct LoadCase {
    pub point_loads: Vec<(f64, f64, [f64; 3])>,
    pub fixed_points: Vec<(f64, f64)>,
}

/// Gauss orders: `surface` per parametric direction, `thickness` along zeta.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub surface: usize,
    pub thickness: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            surface: 4,
            thickness: 2,
        }
    }
}

/// Per-element unit-modulus stiffness, solid volume, and center basis values.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub element: ElementId,
    pub basis: Vec<BasisId>,
    pub k0: DMatrix<f64>,
    pub v0: f64,
    pub center_values: Vec<f64>,
}

/// Strain-displacement matrix `B` (6 x 5m) and `det J` at a parametric point.
pub fn strain_displacement(
    surf: &MidSurface,
    space: &PhtSpace,
    e: ElementId,
    s: f64,
    t: f64,
    zeta: f64,
) -> Result<(DMatrix<f64>, f64), FeaError> {
    let (u, w) = space.mesh().local_coords(e, s, t);
    let grads = space.basis_grad_at(e, u, w);
    // The geometry field lives on its own (level-0) space; resolve the
    // geometry element through that mesh, not the analysis mesh.
    let ge = surf
        .geometry()
        .space()
        .mesh()
        .element_at(s, t)
        .map_err(crate::error::SpaceError::from)?;
    let frame = surf.frame_in(ge, s, t)?;
    let (_, j, det) = surf.shell_map_in(ge, s, t, zeta)?;
    Ok((
        build_b(&grads, &frame, &j, zeta, surf.thickness)?,
        det,
    ))
}

fn build_b(
    grads: &[(BasisId, f64, f64, f64)],
    frame: &LocalFrame,
    j: &Matrix3<f64>,
    zeta: f64,
    thickness: f64,
) -> Result<DMatrix<f64>, FeaError> {
    let jinv = j
        .try_inverse()
        .ok_or_else(|| FeaError::SolveFailed("singular shell-map Jacobian".into()))?;
    let th = t_matrix(frame) * h_matrix();
    // (T H) Gamma with Gamma = blockdiag(J^-1, J^-1, J^-1)
    let mut m2 = DMatrix::zeros(6, 9);
    for blk in 0..3 {
        for r in 0..6 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += th[(r, 3 * blk + k)] * jinv[(k, c)];
                }
                m2[(r, 3 * blk + c)] = acc;
            }
        }
    }
    let m = grads.len();
    let mut b = DMatrix::zeros(6, DOFS_PER_BASIS * m);
    let half = 0.5 * thickness;
    let l = frame.v1;
    let mm = frame.v2;
    let (ls, lt) = (frame.dv1_ds, frame.dv1_dt);
    let (ms, mt) = (frame.dv2_ds, frame.dv2_dt);
    let mut r_i = [[0.0; DOFS_PER_BASIS]; 9];
    for (i, &(_, n, n_s, n_t)) in grads.iter().enumerate() {
        for row in r_i.iter_mut() {
            *row = [0.0; DOFS_PER_BASIS];
        }
        for comp in 0..3 {
            // translation derivative rows
            r_i[3 * comp][comp] = n_s;
            r_i[3 * comp + 1][comp] = n_t;
            // rotation columns: -(zeta h/2)(m N)_der and (zeta h/2)(l N)_der
            r_i[3 * comp][3] = -zeta * half * (ms[comp] * n + mm[comp] * n_s);
            r_i[3 * comp + 1][3] = -zeta * half * (mt[comp] * n + mm[comp] * n_t);
            r_i[3 * comp + 2][3] = -half * mm[comp] * n;
            r_i[3 * comp][4] = zeta * half * (ls[comp] * n + l[comp] * n_s);
            r_i[3 * comp + 1][4] = zeta * half * (lt[comp] * n + l[comp] * n_t);
            r_i[3 * comp + 2][4] = half * l[comp] * n;
        }
        for r in 0..6 {
            for c in 0..DOFS_PER_BASIS {
                let mut acc = 0.0;
                for k in 0..9 {
                    acc += m2[(r, k)] * r_i[k][c];
                }
                b[(r, DOFS_PER_BASIS * i + c)] = acc;
            }
        }
    }
    Ok(b)
}

/// Strain selector: physical displacement gradients to engineering strains.
fn h_matrix() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(6, 9);
    h[(0, 0)] = 1.0;
    h[(1, 4)] = 1.0;
    h[(2, 8)] = 1.0;
    h[(3, 1)] = 1.0;
    h[(3, 3)] = 1.0;
    h[(4, 5)] = 1.0;
    h[(4, 7)] = 1.0;
    h[(5, 2)] = 1.0;
    h[(5, 6)] = 1.0;
    h
}

/// Engineering-strain rotation into the local frame {v1, v2, v3}.
fn t_matrix(frame: &LocalFrame) -> DMatrix<f64> {
    let l = frame.v1;
    let m = frame.v2;
    let n = frame.v3;
    let row = |a: Vector3<f64>, b: Vector3<f64>, double: bool| {
        let f = if double { 2.0 } else { 1.0 };
        [
            f * a[0] * b[0],
            f * a[1] * b[1],
            f * a[2] * b[2],
            a[0] * b[1] + a[1] * b[0],
            a[1] * b[2] + a[2] * b[1],
            a[2] * b[0] + a[0] * b[2],
        ]
    };
    let rows = [
        row(l, l, false),
        row(m, m, false),
        row(n, n, false),
        row(l, m, true),
        row(m, n, true),
        row(n, l, true),
    ];
    let mut t = DMatrix::zeros(6, 6);
    for (r, vals) in rows.iter().enumerate() {
        for (c, &v) in vals.iter().enumerate() {
            t[(r, c)] = v;
        }
    }
    t
}

/// Unit-modulus element stiffness, solid volume, and center values for one element.
pub fn element_matrices(
    surf: &MidSurface,
    space: &PhtSpace,
    e: ElementId,
    quad: QuadratureSpec,
    d0: &DMatrix<f64>,
) -> Result<ElementMatrices, FeaError> {
    let mesh = space.mesh();
    let rect = mesh.element(e).rect;
    let (dens, dent) = mesh.denominators();
    let (s0, t0) = mesh.coord_to_f64((rect.s0, rect.t0));
    let hs = rect.width() as f64 / dens as f64;
    let ht = rect.height() as f64 / dent as f64;
    let (xs, ws) = gauss_on_unit(quad.surface);
    let (xz, wz) = gauss_legendre(quad.thickness);
    let table = space.element_table(e);
    let basis: Vec<BasisId> = table.iter().map(|(b, _)| *b).collect();
    let m = basis.len();
    let ndof = DOFS_PER_BASIS * m;
    let mut k0 = DMatrix::zeros(ndof, ndof);
    let mut v0 = 0.0;
    let mut db = DMatrix::zeros(6, ndof);
    let gmesh = surf.geometry().space().mesh();
    for (iu, &u) in xs.iter().enumerate() {
        for (iw, &w) in xs.iter().enumerate() {
            let s = s0 + hs * u;
            let t = t0 + ht * w;
            let grads = space.basis_grad_at(e, u, w);
            let ge = gmesh.element_at(s, t).map_err(crate::error::SpaceError::from)?;
            let frame = surf.frame_in(ge, s, t)?;
            for (iz, &z) in xz.iter().enumerate() {
                let (_, j, det) = surf.shell_map_in(ge, s, t, z)?;
                let b = build_b(&grads, &frame, &j, z, surf.thickness)?;
                let weight = ws[iu] * ws[iw] * wz[iz] * hs * ht * det.abs();
                db.gemm(1.0, d0, &b, 0.0);
                k0.gemm_tr(weight, &b, &db, 1.0);
                v0 += weight;
            }
        }
    }
    // enforce exact symmetry
    for r in 0..ndof {
        for c in (r + 1)..ndof {
            let half = 0.5 * (k0[(r, c)] + k0[(c, r)]);
            k0[(r, c)] = half;
            k0[(c, r)] = half;
        }
    }
    let center_values = space
        .basis_values_at(e, 0.5, 0.5)
        .iter()
        .map(|(_, v)| *v)
        .collect();
    Ok(ElementMatrices {
        element: e,
        basis,
        k0,
        v0,
        center_values,
    })
}

/// DOF bookkeeping: dense indices `basis * 5 + component` plus the constrained
/// set. Constraints always cover all five DOFs of a function, so the
/// block-level view `constrained_basis` mirrors the scalar one.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dofs: usize,
    pub constrained: Vec<bool>,
    pub constrained_basis: Vec<bool>,
    pub fixed_vertices: Vec<VertexId>,
}

impl DofMap {
    /// Fixed points constrain all five DOFs of the four functions anchored at
    /// the nearest basis vertex.
    pub fn build(space: &PhtSpace, loads: &LoadCase) -> DofMap {
        let n_dofs = space.dim() * DOFS_PER_BASIS;
        let mut constrained = vec![false; n_dofs];
        let mut constrained_basis = vec![false; space.dim()];
        let mesh = space.mesh();
        let mut fixed_vertices = Vec::new();
        for &(s, t) in &loads.fixed_points {
            let mut best: Option<(f64, VertexId)> = None;
            for v in mesh.basis_vertices() {
                let (vs, vt) = mesh.coord_to_f64(mesh.vertex(v).coord);
                let d2 = (vs - s) * (vs - s) + (vt - t) * (vt - t);
                if best.map(|(bd, _)| d2 < bd).unwrap_or(true) {
                    best = Some((d2, v));
                }
            }
            let (_, v) = best.expect("mesh has basis vertices");
            fixed_vertices.push(v);
            for b in space.vertex_basis(v).expect("basis vertex") {
                constrained_basis[b.idx()] = true;
                for c in 0..DOFS_PER_BASIS {
                    constrained[b.idx() * DOFS_PER_BASIS + c] = true;
                }
            }
        }
        DofMap {
            n_dofs,
            constrained,
            constrained_basis,
            fixed_vertices,
        }
    }
}

/// Assembled linear system with cached per-element scaling.
#[derive(Debug)]
pub struct AssembledSystem {
    pub k: BlockCsc,
    pub f: Vec<f64>,
    /// Element center densities after clamping to [0, 1].
    pub rho_e: Vec<f64>,
    /// SIMP modulus per element.
    pub scale_e: Vec<f64>,
}

/// Mesh-level cache: element matrices, DOF map, block sparsity and scatter
/// plan, and the fill-reducing block elimination order.
pub struct Discretization {
    pub space: Arc<PhtSpace>,
    pub elems: Vec<ElementMatrices>,
    pub dof_map: DofMap,
    colptr: Vec<usize>,
    rowidx: Vec<u32>,
    elem_pos: Vec<Vec<u32>>,
    diag_pos: Vec<usize>,
    /// Block (basis-function) elimination order for the factorization.
    pub block_order: Vec<usize>,
    v_solid: f64,
}

impl Discretization {
    pub fn new(
        surf: &MidSurface,
        space: &Arc<PhtSpace>,
        loads: &LoadCase,
        quad: QuadratureSpec,
        mat: &MaterialParams,
    ) -> Result<Self, FeaError> {
        mat.validate()?;
        let d0 = mat.d0();
        let ids: Vec<ElementId> = space.mesh().active_elements().collect();
        let elems: Vec<ElementMatrices> = ids
            .par_iter()
            .map(|&e| element_matrices(surf, space, e, quad, &d0))
            .collect::<Result<_, _>>()?;
        let dof_map = DofMap::build(space, loads);
        let (colptr, rowidx, elem_pos, diag_pos) = build_scatter(&elems, space.dim(), &dof_map);
        let block_order = nested_dissection_order(space);
        let v_solid = elems.iter().map(|em| em.v0).sum();
        Ok(Discretization {
            space: space.clone(),
            elems,
            dof_map,
            colptr,
            rowidx,
            elem_pos,
            diag_pos,
            block_order,
            v_solid,
        })
    }

    #[inline]
    pub fn n_dofs(&self) -> usize {
        self.dof_map.n_dofs
    }

    #[inline]
    pub fn v_solid(&self) -> f64 {
        self.v_solid
    }

    /// Density at each element center, clamped to [0, 1].
    pub fn element_densities(&self, rho: &Field<1>) -> Vec<f64> {
        let mut clamped_any = false;
        let out: Vec<f64> = self
            .elems
            .iter()
            .map(|em| {
                let mut v = 0.0;
                for (b, n) in em.basis.iter().zip(&em.center_values) {
                    v += rho.coeff(*b, 0) * n;
                }
                if !(0.0..=1.0).contains(&v) {
                    if v < -1e-9 || v > 1.0 + 1e-9 {
                        clamped_any = true;
                    }
                    v = v.clamp(0.0, 1.0);
                }
                v
            })
            .collect();
        if clamped_any {
            log::warn!("element center densities clamped to [0, 1]");
        }
        out
    }

    /// Volume `V = sum_e V0_e rho_e` for given element densities.
    pub fn volume_from_densities(&self, rho_e: &[f64]) -> f64 {
        self.elems
            .iter()
            .zip(rho_e)
            .map(|(em, &r)| em.v0 * r)
            .sum()
    }

    /// Assembles `K(rho)` and the load vector with constraints applied by
    /// symmetric row/column elimination with unit diagonal.
    pub fn assemble(
        &self,
        rho: &Field<1>,
        mat: &MaterialParams,
        loads: &LoadCase,
    ) -> Result<AssembledSystem, FeaError> {
        let rho_e = self.element_densities(rho);
        let scale_e: Vec<f64> = rho_e.iter().map(|&r| mat.youngs(r)).collect();
        let mut data = vec![ZERO_BLOCK; self.rowidx.len()];
        for (b, &p) in self.diag_pos.iter().enumerate() {
            if self.dof_map.constrained_basis[b] {
                let blk = &mut data[p];
                for c in 0..DOFS_PER_BASIS {
                    blk[c * DOFS_PER_BASIS + c] = 1.0;
                }
            }
        }
        for (em, (pos, &scale)) in self
            .elems
            .iter()
            .zip(self.elem_pos.iter().zip(scale_e.iter()))
        {
            let m = em.basis.len();
            for lc in 0..m {
                for lr in 0..m {
                    let p = pos[lc * m + lr];
                    if p == u32::MAX {
                        continue;
                    }
                    let blk = &mut data[p as usize];
                    for c in 0..DOFS_PER_BASIS {
                        for r in 0..DOFS_PER_BASIS {
                            blk[c * DOFS_PER_BASIS + r] += scale
                                * em.k0[(DOFS_PER_BASIS * lr + r, DOFS_PER_BASIS * lc + c)];
                        }
                    }
                }
            }
        }
        let mut f = vec![0.0; self.n_dofs()];
        let mesh = self.space.mesh();
        for &(s, t, g) in &loads.point_loads {
            let e = mesh.element_at(s, t).map_err(crate::error::SpaceError::from)?;
            let (u, w) = mesh.local_coords(e, s, t);
            for (b, n) in self.space.basis_values_at(e, u, w) {
                for (c, &gc) in g.iter().enumerate() {
                    let dof = b.idx() * DOFS_PER_BASIS + c;
                    if !self.dof_map.constrained[dof] {
                        f[dof] += n * gc;
                    }
                }
            }
        }
        if self.dof_map.fixed_vertices.is_empty() && f.iter().any(|&x| x != 0.0) {
            return Err(FeaError::Unconstrained);
        }
        let k = BlockCsc {
            n: self.space.dim(),
            colptr: self.colptr.clone(),
            rowidx: self.rowidx.clone(),
            data,
        };
        Ok(AssembledSystem {
            k,
            f,
            rho_e,
            scale_e,
        })
    }

    /// Per-element strain energies at unit modulus: `U_e' K0_e U_e`.
    pub fn element_energies(&self, u: &[f64]) -> Vec<f64> {
        self.elems
            .par_iter()
            .map(|em| {
                let n = em.k0.nrows();
                let mut ue = DMatrix::zeros(n, 1);
                for (i, b) in em.basis.iter().enumerate() {
                    for c in 0..DOFS_PER_BASIS {
                        ue[(DOFS_PER_BASIS * i + c, 0)] = u[b.idx() * DOFS_PER_BASIS + c];
                    }
                }
                let ku = &em.k0 * &ue;
                ue.dot(&ku)
            })
            .collect()
    }

    /// Compliance via both routes of the cross-check: `sum_e U_e' K_e U_e`
    /// against `U' F`. Returns `U' F`.
    pub fn compliance(&self, system: &AssembledSystem, u: &[f64]) -> Result<f64, FeaError> {
        let energies = self.element_energies(u);
        let c1: f64 = energies
            .iter()
            .zip(&system.scale_e)
            .map(|(&en, &sc)| sc * en)
            .sum();
        let c2: f64 = u.iter().zip(&system.f).map(|(&a, &b)| a * b).sum();
        let scale = c1.abs().max(c2.abs()).max(1e-300);
        if (c1 - c2).abs() > 1e-8 * scale {
            return Err(FeaError::ComplianceMismatch { a: c1, b: c2 });
        }
        Ok(c2)
    }
}

/// Builds the block-CSC structure over unconstrained couplings plus the full
/// block diagonal, and the per-element block scatter positions (u32::MAX
/// marks dropped constrained blocks).
#[allow(clippy::type_complexity)]
fn build_scatter(
    elems: &[ElementMatrices],
    n_basis: usize,
    dof_map: &DofMap,
) -> (Vec<usize>, Vec<u32>, Vec<Vec<u32>>, Vec<usize>) {
    let con = &dof_map.constrained_basis;
    let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n_basis];
    for em in elems {
        for bc in &em.basis {
            if con[bc.idx()] {
                continue;
            }
            let col = &mut cols[bc.idx()];
            for br in &em.basis {
                if !con[br.idx()] {
                    col.push(br.0);
                }
            }
        }
    }
    for (b, col) in cols.iter_mut().enumerate() {
        col.push(b as u32);
        col.sort_unstable();
        col.dedup();
    }
    let mut colptr = Vec::with_capacity(n_basis + 1);
    let mut rowidx: Vec<u32> = Vec::new();
    colptr.push(0);
    for col in &cols {
        rowidx.extend_from_slice(col);
        colptr.push(rowidx.len());
    }
    let diag_pos: Vec<usize> = (0..n_basis)
        .map(|b| {
            let start = colptr[b];
            let end = colptr[b + 1];
            start
                + rowidx[start..end]
                    .binary_search(&(b as u32))
                    .expect("diagonal present")
        })
        .collect();
    let elem_pos: Vec<Vec<u32>> = elems
        .iter()
        .map(|em| {
            let m = em.basis.len();
            let mut pos = vec![u32::MAX; m * m];
            for (lc, bc) in em.basis.iter().enumerate() {
                if con[bc.idx()] {
                    continue;
                }
                let start = colptr[bc.idx()];
                let end = colptr[bc.idx() + 1];
                for (lr, br) in em.basis.iter().enumerate() {
                    if con[br.idx()] {
                        continue;
                    }
                    let k = rowidx[start..end]
                        .binary_search(&br.0)
                        .expect("scatter target present");
                    pos[lc * m + lr] = (start + k) as u32;
                }
            }
            pos
        })
        .collect();
    (colptr, rowidx, elem_pos, diag_pos)
}

/// Geometric nested dissection over basis-function supports. Functions whose
/// supports straddle the split plane form the separator, so the two halves
/// decouple exactly; the separator is eliminated last.
fn nested_dissection_order(space: &PhtSpace) -> Vec<usize> {
    let n = space.dim();
    let mesh = space.mesh();
    let (ds, dt) = mesh.denominators();
    let mut spans = Vec::with_capacity(n);
    for b in 0..n {
        let meta = space.basis_meta(BasisId(b as u32));
        let r = meta.support;
        spans.push((
            r.s0 as f64 / ds as f64,
            r.s1 as f64 / ds as f64,
            r.t0 as f64 / dt as f64,
            r.t1 as f64 / dt as f64,
        ));
    }
    let mut order = Vec::with_capacity(n);
    let mut ids: Vec<u32> = (0..n as u32).collect();
    nd_recurse(&spans, &mut ids, &mut order);
    order.into_iter().map(|b| b as usize).collect()
}

fn nd_recurse(spans: &[(f64, f64, f64, f64)], ids: &mut [u32], order: &mut Vec<u32>) {
    const LEAF: usize = 24;
    if ids.len() <= LEAF {
        ids.sort_unstable();
        order.extend_from_slice(ids);
        return;
    }
    let (mut lo_s, mut hi_s, mut lo_t, mut hi_t) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &b in ids.iter() {
        let (s0, s1, t0, t1) = spans[b as usize];
        let ms = 0.5 * (s0 + s1);
        let mt = 0.5 * (t0 + t1);
        lo_s = lo_s.min(ms);
        hi_s = hi_s.max(ms);
        lo_t = lo_t.min(mt);
        hi_t = hi_t.max(mt);
    }
    let split_s = hi_s - lo_s >= hi_t - lo_t;
    let key = |b: u32| {
        let (s0, s1, t0, t1) = spans[b as usize];
        if split_s {
            0.5 * (s0 + s1)
        } else {
            0.5 * (t0 + t1)
        }
    };
    ids.sort_unstable_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap().then(a.cmp(&b)));
    let plane = key(ids[ids.len() / 2]);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &b in ids.iter() {
        let (s0, s1, t0, t1) = spans[b as usize];
        let (lo, hi) = if split_s { (s0, s1) } else { (t0, t1) };
        if hi <= plane {
            left.push(b);
        } else if lo >= plane {
            right.push(b);
        } else {
            sep.push(b);
        }
    }
    if left.is_empty() || right.is_empty() {
        // Degenerate split: everything straddles. Emit in id order.
        ids.sort_unstable();
        order.extend_from_slice(ids);
        return;
    }
    nd_recurse(spans, &mut left, order);
    nd_recurse(spans, &mut right, order);
    sep.sort_unstable();
    order.extend_from_slice(&sep);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phtspace::PhtSpace;
    use crate::shellgeom::AnalyticSurface;
    use crate::tmesh::HierTMesh;

    fn plate(n: usize, h: f64) -> (MidSurface, Arc<PhtSpace>) {
        let mesh = HierTMesh::tensor(n, n).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        let surf = MidSurface::from_analytic(&space, AnalyticSurface::Plate, h).unwrap();
        (surf, space)
    }

    #[test]
    fn simp_values() {
        let mat = MaterialParams::default();
        assert!((mat.youngs(1.0) - 2100.0).abs() < 1e-9);
        assert!((mat.youngs(0.0) - 1e-5).abs() < 1e-20);
        let expect = 1e-5 + 0.5f64.powi(5) * (2100.0 - 1e-5);
        assert!((mat.youngs(0.5) - expect).abs() < 1e-9);
        assert!((expect - 65.625).abs() < 1e-3);
    }

    #[test]
    fn rigid_translations_give_zero_strain() {
        let (surf, space) = plate(2, 5.0);
        let e = space.mesh().element_at(0.3, 0.3).unwrap();
        let (b, _) = strain_displacement(&surf, &space, e, 0.3, 0.3, 0.4).unwrap();
        let m = b.ncols() / DOFS_PER_BASIS;
        for comp in 0..3 {
            let mut dofs = DMatrix::zeros(b.ncols(), 1);
            for i in 0..m {
                dofs[(DOFS_PER_BASIS * i + comp, 0)] = 1.0;
            }
            let strain = &b * &dofs;
            assert!(
                strain.norm() < 1e-10,
                "rigid translation {} produced strain {}",
                comp,
                strain.norm()
            );
        }
    }

    #[test]
    fn membrane_rows_match_plane_stress_oracle() {
        // On a flat plate at zeta = 0 the frame is v1 = y, v2 = x, v3 = z,
        // so the local membrane strains are (eps_yy, eps_xx, gamma_xy).
        let (surf, space) = plate(3, 5.0);
        let (s, t) = (0.41, 0.67);
        let e = space.mesh().element_at(s, t).unwrap();
        let (b, _) = strain_displacement(&surf, &space, e, s, t, 0.0).unwrap();
        let (u, w) = space.mesh().local_coords(e, s, t);
        let grads = space.basis_grad_at(e, u, w);
        for (i, &(_, _n, ns, nt)) in grads.iter().enumerate() {
            let cu = DOFS_PER_BASIS * i;
            let cv = DOFS_PER_BASIS * i + 1;
            // eps_v2 = eps_xx = du/dx
            assert!((b[(1, cu)] - ns).abs() < 1e-12);
            assert!(b[(1, cv)].abs() < 1e-12);
            // eps_v1 = eps_yy = dv/dy
            assert!((b[(0, cv)] - nt).abs() < 1e-12);
            assert!(b[(0, cu)].abs() < 1e-12);
            // gamma_12 = gamma_xy = du/dy + dv/dx
            assert!((b[(3, cu)] - nt).abs() < 1e-12);
            assert!((b[(3, cv)] - ns).abs() < 1e-12);
        }
    }

    #[test]
    fn k0_symmetric_and_rigid_null() {
        let (surf, space) = plate(2, 5.0);
        let mat = MaterialParams::default();
        let e = space.mesh().element_at(0.3, 0.3).unwrap();
        let em = element_matrices(&surf, &space, e, QuadratureSpec::default(), &mat.d0()).unwrap();
        let max = em.k0.amax();
        let mut asym: f64 = 0.0;
        for r in 0..em.k0.nrows() {
            for c in 0..em.k0.ncols() {
                asym = asym.max((em.k0[(r, c)] - em.k0[(c, r)]).abs());
            }
        }
        assert!(asym <= 1e-12 * max);
        let m = em.basis.len();
        for comp in 0..3 {
            let mut x = DMatrix::zeros(em.k0.nrows(), 1);
            for i in 0..m {
                x[(DOFS_PER_BASIS * i + comp, 0)] = 1.0;
            }
            let energy = x.dot(&(&em.k0 * &x));
            assert!(energy.abs() < 1e-10 * max);
        }
    }

    #[test]
    fn quadrature_refinement_stable() {
        let (surf, space) = plate(2, 5.0);
        let mat = MaterialParams::default();
        let e = space.mesh().element_at(0.3, 0.3).unwrap();
        let a = element_matrices(
            &surf,
            &space,
            e,
            QuadratureSpec { surface: 4, thickness: 2 },
            &mat.d0(),
        )
        .unwrap();
        let b = element_matrices(
            &surf,
            &space,
            e,
            QuadratureSpec { surface: 8, thickness: 4 },
            &mat.d0(),
        )
        .unwrap();
        let scale = a.k0.amax();
        let mut diff: f64 = 0.0;
        for r in 0..a.k0.nrows() {
            for c in 0..a.k0.ncols() {
                diff = diff.max((a.k0[(r, c)] - b.k0[(r, c)]).abs());
            }
        }
        assert!(diff < 1e-8 * scale, "quadrature drift {}", diff / scale);
    }

    #[test]
    fn volume_of_solid_plate() {
        let (surf, space) = plate(3, 5.0);
        let mat = MaterialParams::default();
        let loads = LoadCase::default();
        let disc =
            Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
        assert!((disc.v_solid() - 5.0).abs() < 1e-10);
        let rho = Field::constant(&space, [1.0]);
        let re = disc.element_densities(&rho);
        assert!((disc.volume_from_densities(&re) - 5.0).abs() < 1e-10);
        let rho3 = Field::constant(&space, [0.3]);
        let re3 = disc.element_densities(&rho3);
        assert!((disc.volume_from_densities(&re3) - 1.5).abs() < 1e-10);
    }

    #[test]
    fn volume_invariant_under_refinement() {
        // geometry stays on the level-0 space while the analysis mesh refines
        let (surf, space) = plate(2, 5.0);
        let mat = MaterialParams::default();
        let all: Vec<_> = space.mesh().active_elements().collect();
        let refined = Arc::new(space.refine(&all).unwrap());
        let loads = LoadCase::default();
        let d0 = Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat)
            .unwrap();
        let d1 = Discretization::new(&surf, &refined, &loads, QuadratureSpec::default(), &mat)
            .unwrap();
        assert!((d0.v_solid() - d1.v_solid()).abs() < 1e-10);
    }

    #[test]
    fn load_at_midsurface_has_no_rotation_entries() {
        let (surf, space) = plate(2, 5.0);
        let mat = MaterialParams::default();
        let loads = LoadCase {
            point_loads: vec![(0.5, 0.5, [0.0, 0.0, -100.0])],
            fixed_points: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
        };
        let disc =
            Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
        let rho = Field::constant(&space, [1.0]);
        let sys = disc.assemble(&rho, &mat, &loads).unwrap();
        for b in 0..space.dim() {
            assert_eq!(sys.f[b * DOFS_PER_BASIS + 3], 0.0);
            assert_eq!(sys.f[b * DOFS_PER_BASIS + 4], 0.0);
        }
        let sum_w: f64 = (0..space.dim()).map(|b| sys.f[b * DOFS_PER_BASIS + 2]).sum();
        // partition of unity concentrates the full load (minus constrained rows)
        assert!(sum_w < 0.0 && sum_w >= -100.0);
    }

    #[test]
    fn unconstrained_loaded_system_rejected() {
        let (surf, space) = plate(2, 5.0);
        let mat = MaterialParams::default();
        let loads = LoadCase {
            point_loads: vec![(0.5, 0.5, [0.0, 0.0, -1.0])],
            fixed_points: vec![],
        };
        let disc =
            Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
        let rho = Field::constant(&space, [1.0]);
        assert!(matches!(
            disc.assemble(&rho, &mat, &loads),
            Err(FeaError::Unconstrained)
        ));
    }
}
