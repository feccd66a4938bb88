//! Design variables, analytic sensitivities, and the adaptive Shepard filter.
//!
//! Each basis function is one design variable. Its parametric coordinate is
//! the Greville-style point of the function within the anchor's support mesh;
//! the four coordinates per anchor are distinct, which is what lets the
//! filter tell the four coefficients of one vertex apart. Filtering averages
//! over all variables anchored inside the support rectangle of the target
//! variable, so the filter radius adapts to the local mesh size with no
//! user-provided radius.

use crate::phtspace::{Field, PhtSpace};
use crate::shellfea::{Discretization, MaterialParams};
use crate::tmesh::VertexId;

/// Floor for the density in the 1/rho factor of the filter.
pub const FILTER_DENSITY_FLOOR: f64 = 1e-3;

/// Parametric coordinates of the four design variables anchored at a basis
/// vertex, ordered by slot (`s_slot + 2 t_slot`).
pub fn design_var_coords(space: &PhtSpace, v: VertexId) -> Result<[(f64, f64); 4], crate::SpaceError> {
    let mesh = space.mesh();
    let support = mesh.support_mesh(v)?;
    let coord = mesh.vertex(v).coord;
    let (ds, dt) = mesh.denominators();
    let f = |num: u64, den: u64| num as f64 / den as f64;
    let (s0, sv, s1) = (f(support.s0, ds), f(coord.0, ds), f(support.s1, ds));
    let (t0, tv, t1) = (f(support.t0, dt), f(coord.1, dt), f(support.t1, dt));
    let s_lo = (s0 + 2.0 * sv) / 3.0;
    let s_hi = (2.0 * sv + s1) / 3.0;
    let t_lo = (t0 + 2.0 * tv) / 3.0;
    let t_hi = (2.0 * tv + t1) / 3.0;
    Ok([(s_lo, t_lo), (s_hi, t_lo), (s_lo, t_hi), (s_hi, t_hi)])
}

/// Coordinates for every design variable, indexed by basis id.
pub fn variable_coords(space: &PhtSpace) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); space.dim()];
    for v in space.mesh().basis_vertices() {
        let coords = design_var_coords(space, v).expect("basis vertex");
        let ids = space.vertex_basis(v).expect("basis vertex");
        for (slot, &b) in ids.iter().enumerate() {
            out[b.idx()] = coords[slot];
        }
    }
    out
}

/// Raw compliance sensitivity: for each variable,
/// `dC/drho_i = -sum_e p (E0 - Emin) rho_e^{p-1} (U_e' K0_e U_e) N_i(center e)`.
pub fn compliance_sensitivity(
    disc: &Discretization,
    mat: &MaterialParams,
    rho_e: &[f64],
    energies: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; disc.space.dim()];
    for ((em, &re), &en) in disc.elems.iter().zip(rho_e).zip(energies) {
        let factor = -mat.penal * (mat.e0 - mat.e_min) * re.powf(mat.penal - 1.0) * en;
        if factor == 0.0 {
            continue;
        }
        for (b, n) in em.basis.iter().zip(&em.center_values) {
            if *n != 0.0 {
                out[b.idx()] += factor * n;
            }
        }
    }
    out
}

/// Volume sensitivity `dV/drho_i = sum_e V0_e N_i(center e)`; independent of rho.
pub fn volume_sensitivity(disc: &Discretization) -> Vec<f64> {
    let mut out = vec![0.0; disc.space.dim()];
    for em in &disc.elems {
        for (b, n) in em.basis.iter().zip(&em.center_values) {
            out[b.idx()] += em.v0 * n;
        }
    }
    out
}

/// Spatial index of basis vertices bucketed by level-0 cell.
pub struct VertexIndex {
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<VertexId>>,
}

impl VertexIndex {
    pub fn build(space: &PhtSpace) -> VertexIndex {
        let mesh = space.mesh();
        let (nx, ny) = mesh.resolution();
        let us = 1u64 << crate::tmesh::MAX_DEPTH;
        let mut buckets = vec![Vec::new(); nx * ny];
        for v in mesh.basis_vertices() {
            let (s, t) = mesh.vertex(v).coord;
            let i = ((s / us) as usize).min(nx - 1);
            let j = ((t / us) as usize).min(ny - 1);
            buckets[j * nx + i].push(v);
        }
        VertexIndex { nx, ny, buckets }
    }

    /// Basis vertices with coordinates inside the closed rectangle.
    fn in_rect(&self, space: &PhtSpace, rect: &crate::tmesh::Rect, out: &mut Vec<VertexId>) {
        out.clear();
        let us = 1u64 << crate::tmesh::MAX_DEPTH;
        let i0 = (rect.s0 / us) as usize;
        let i1 = ((rect.s1 / us) as usize).min(self.nx - 1);
        let j0 = (rect.t0 / us) as usize;
        let j1 = ((rect.t1 / us) as usize).min(self.ny - 1);
        let mesh = space.mesh();
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &v in &self.buckets[j * self.nx + i] {
                    let (s, t) = mesh.vertex(v).coord;
                    if rect.contains_closed(s, t) {
                        out.push(v);
                    }
                }
            }
        }
    }
}

/// Adaptive Shepard sensitivity filter.
///
/// For variable `i`, neighbors are all variables anchored at basis vertices
/// inside the support rectangle of `i` (including `i` itself). Distances are
/// normalized by the largest neighbor distance, and
/// `w(r) = (1 - r)^6_+ (35 r^2 + 18 r + 3)`.
pub fn filter_sensitivities(
    space: &PhtSpace,
    index: &VertexIndex,
    coords: &[(f64, f64)],
    rho: &Field<1>,
    raw: &[f64],
) -> Vec<f64> {
    let n = space.dim();
    debug_assert_eq!(raw.len(), n);
    let mut out = vec![0.0; n];
    let mut verts = Vec::new();
    for v in space.mesh().basis_vertices() {
        let support = space.mesh().support_mesh(v).expect("basis vertex");
        index.in_rect(space, &support, &mut verts);
        let ids = space.vertex_basis(v).expect("basis vertex");
        for &b in ids.iter() {
            let (si, ti) = coords[b.idx()];
            let mut max_d2 = 0.0f64;
            for &u in &verts {
                for &bj in space.vertex_basis(u).expect("basis vertex").iter() {
                    let (sj, tj) = coords[bj.idx()];
                    let d2 = (si - sj) * (si - sj) + (ti - tj) * (ti - tj);
                    max_d2 = max_d2.max(d2);
                }
            }
            let max_d = max_d2.sqrt().max(f64::MIN_POSITIVE);
            let mut wsum = 0.0;
            let mut acc = 0.0;
            for &u in &verts {
                for &bj in space.vertex_basis(u).expect("basis vertex").iter() {
                    let (sj, tj) = coords[bj.idx()];
                    let d = ((si - sj) * (si - sj) + (ti - tj) * (ti - tj)).sqrt();
                    let w = shepard_weight(d / max_d);
                    wsum += w;
                    acc += w * rho.coeff(bj, 0) * raw[bj.idx()];
                }
            }
            let rho_i = rho.coeff(b, 0).max(FILTER_DENSITY_FLOOR);
            out[b.idx()] = acc / (rho_i * wsum);
        }
    }
    out
}

/// `w(r) = (1 - r)^6_+ (35 r^2 + 18 r + 3)`.
#[inline]
pub fn shepard_weight(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let v = 1.0 - r;
    let v2 = v * v;
    let v6 = v2 * v2 * v2;
    v6 * (35.0 * r * r + 18.0 * r + 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phtspace::PhtSpace;
    use crate::tmesh::HierTMesh;
    use std::sync::Arc;

    #[test]
    fn shepard_endpoint_values() {
        assert_eq!(shepard_weight(0.0), 3.0);
        assert_eq!(shepard_weight(1.0), 0.0);
        let w = shepard_weight(0.5);
        assert!((w - 0.5f64.powi(6) * 20.75).abs() < 1e-15);
        assert!((w - 0.32421875).abs() < 1e-12);
    }

    #[test]
    fn design_var_coords_quarter_vertex() {
        // vertex (1/4, 1/4) after one subdivision of a 2x2 mesh has support
        // [0, 1/2]^2; Eq-style coordinates follow.
        let mesh = HierTMesh::tensor(2, 2).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        let e = space.mesh().element_at(0.25, 0.25).unwrap();
        let refined = space.refine(&[e]).unwrap();
        let (ds, dt) = refined.mesh().denominators();
        let v = refined.mesh().vertex_id_at((ds / 4, dt / 4)).unwrap();
        let coords = design_var_coords(&refined, v).unwrap();
        assert!((coords[0].0 - 1.0 / 6.0).abs() < 1e-15);
        assert!((coords[0].1 - 1.0 / 6.0).abs() < 1e-15);
        assert!((coords[3].0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((coords[3].1 - 1.0 / 3.0).abs() < 1e-15);
        // distinct and inside the support rectangle
        for a in 0..4 {
            assert!(coords[a].0 > 0.0 && coords[a].0 < 0.5);
            assert!(coords[a].1 > 0.0 && coords[a].1 < 0.5);
            for bq in (a + 1)..4 {
                assert!(coords[a] != coords[bq]);
            }
        }
    }

    #[test]
    fn filter_of_uniform_data_is_identity() {
        let mesh = HierTMesh::tensor(4, 4).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        let coords = variable_coords(&space);
        let index = VertexIndex::build(&space);
        let rho = Field::constant(&space, [0.8]);
        let raw = vec![-2.0; space.dim()];
        let filtered = filter_sensitivities(&space, &index, &coords, &rho, &raw);
        for &f in &filtered {
            assert!((f - -2.0).abs() < 1e-12, "got {}", f);
        }
    }

    #[test]
    fn filter_preserves_sign_and_bounds() {
        let mesh = HierTMesh::tensor(3, 3).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        let coords = variable_coords(&space);
        let index = VertexIndex::build(&space);
        let n = space.dim();
        let rho_coeffs: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * ((i * 13 % 7) as f64 / 7.0)).collect();
        let rho = Field::from_coeffs(&space, rho_coeffs.clone()).unwrap();
        let raw: Vec<f64> = (0..n).map(|i| -1.0 - (i % 5) as f64).collect();
        let filtered = filter_sensitivities(&space, &index, &coords, &rho, &raw);
        for i in 0..n {
            assert!(filtered[i] <= 0.0);
            let lo = (0..n)
                .map(|j| rho_coeffs[j] * raw[j])
                .fold(f64::INFINITY, f64::min)
                / rho_coeffs[i].max(FILTER_DENSITY_FLOOR);
            assert!(filtered[i] >= lo - 1e-12);
        }
    }
}
