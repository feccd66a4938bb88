//! PHT-spline space S(3,3,1,1,T) over a hierarchical T-mesh.
//!
//! Basis functions are stored per element as 16 Bézier ordinates. Every basis
//! vertex (boundary or interior crossing) anchors four functions; the space
//! dimension is exactly `4 (V^b + V^+)`.
//!
//! Level 0 coincides with the bicubic C1 tensor-product B-spline space with
//! doubled interior knots. Refinement subdivides elements, splits the ordinate
//! patches of existing functions, zeroes the 2x2 ordinate groups associated
//! with newly promoted basis vertices (truncation), and constructs four new
//! tensor-product functions per new basis vertex from its support mesh.
//!
//! Refinement sets are processed in batches of increasing element level so the
//! result matches the canonical level-by-level construction regardless of the
//! order in which elements were handed in. When a vertex is promoted next to a
//! quadrant that earlier calls already subdivided, truncation is carried out
//! against that quadrant's polynomial (reconstructed from the corner Hermite
//! data) so the canonical space is still obtained.
//!
//! The construction maintains one key invariant: a basis function has zero
//! value, zero gradient and zero mixed derivative at every basis vertex other
//! than its own anchor. Coefficient inheritance relies on it.

use crate::bernstein::{
    corner_group_is_zero, hermite_at_corner, patch_eval_jet, patch_from_corner_hermite,
    patch_restrict, restrict1, tensor_patch, zero_corner_group, Patch,
};
use crate::error::{MeshError, SpaceError};
use crate::tmesh::{ElementId, HierTMesh, Rect, VertexId};
use nalgebra::{Matrix4, RowVector4};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Identifier of a basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisId(pub u32);

impl BasisId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Anchor and bookkeeping of one basis function. `slot` enumerates the four
/// functions of the anchor as `s_slot + 2 * t_slot`, where factor 0 is the 1D
/// function with Greville abscissa `(x_lo + 2 x_v) / 3` and factor 1 the one
/// with `(2 x_v + x_hi) / 3`.
#[derive(Debug, Clone)]
pub struct BasisMeta {
    pub anchor: VertexId,
    pub slot: u8,
    pub level: u32,
    pub support: Rect,
}

/// PHT-spline space. Immutable after construction; `refine` returns a new space.
#[derive(Debug, Clone)]
pub struct PhtSpace {
    mesh: HierTMesh,
    basis: Vec<BasisMeta>,
    /// Per element: (basis id, ordinates), sorted by basis id.
    tables: Vec<Vec<(BasisId, Patch)>>,
    vertex_basis: Vec<Option<[BasisId; 4]>>,
}

impl PhtSpace {
    /// Builds the level-0 space on a tensor-product mesh: four bicubic C1
    /// B-spline functions per vertex.
    pub fn level0(mesh: HierTMesh) -> Result<Self, SpaceError> {
        if mesh.max_level() != 0 {
            return Err(SpaceError::NotLevelZero);
        }
        let mut space = PhtSpace {
            basis: Vec::with_capacity(4 * mesh.n_basis_vertices()),
            tables: vec![Vec::new(); mesh.n_elements_total()],
            vertex_basis: vec![None; mesh.n_vertices()],
            mesh,
        };
        for v in space.mesh.vertex_ids() {
            let support = space.mesh.support_mesh(v).expect("level-0 vertex is basis");
            let base = space.basis.len() as u32;
            for slot in 0..4u8 {
                space.basis.push(BasisMeta {
                    anchor: v,
                    slot,
                    level: 0,
                    support,
                });
            }
            space.vertex_basis[v.idx()] =
                Some([BasisId(base), BasisId(base + 1), BasisId(base + 2), BasisId(base + 3)]);
        }
        let elements: Vec<ElementId> = space.mesh.active_elements().collect();
        for e in elements {
            let rect = space.mesh.element(e).rect;
            let corners = space.mesh.element(e).corners;
            for &v in &corners {
                let sup = space.mesh.support_mesh(v).unwrap();
                let coord = space.mesh.vertex(v).coord;
                let fs = [
                    factor_ordinates(sup.s0, coord.0, sup.s1, rect.s0, rect.s1, 0),
                    factor_ordinates(sup.s0, coord.0, sup.s1, rect.s0, rect.s1, 1),
                ];
                let ft = [
                    factor_ordinates(sup.t0, coord.1, sup.t1, rect.t0, rect.t1, 0),
                    factor_ordinates(sup.t0, coord.1, sup.t1, rect.t0, rect.t1, 1),
                ];
                let ids = space.vertex_basis[v.idx()].unwrap();
                for slot in 0..4usize {
                    let patch = tensor_patch(&fs[slot & 1], &ft[slot >> 1]);
                    space.tables[e.idx()].push((ids[slot], patch));
                }
            }
            space.tables[e.idx()].sort_unstable_by_key(|(b, _)| *b);
        }
        Ok(space)
    }

    #[inline]
    pub fn mesh(&self) -> &HierTMesh {
        &self.mesh
    }

    /// Space dimension; equals `4 (V^b + V^+)`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    pub fn basis_meta(&self, b: BasisId) -> &BasisMeta {
        &self.basis[b.idx()]
    }

    #[inline]
    pub fn element_table(&self, e: ElementId) -> &[(BasisId, Patch)] {
        &self.tables[e.idx()]
    }

    #[inline]
    pub fn vertex_basis(&self, v: VertexId) -> Option<[BasisId; 4]> {
        self.vertex_basis[v.idx()]
    }

    /// Refines the given active elements and returns the space on the refined
    /// mesh. The input set may mix levels; it is processed coarsest-first.
    pub fn refine(&self, elements: &[ElementId]) -> Result<PhtSpace, SpaceError> {
        let mut set = elements.to_vec();
        set.sort_unstable();
        set.dedup();
        let mut by_level: BTreeMap<u32, Vec<ElementId>> = BTreeMap::new();
        for &e in &set {
            let el = self.mesh.element(e);
            if !el.is_active() {
                return Err(MeshError::InactiveElement(e.idx()).into());
            }
            by_level.entry(el.level).or_default().push(e);
        }
        let mut s = self.clone();
        for (_, batch) in by_level {
            let mut infos = Vec::with_capacity(batch.len());
            let mut new_basis = Vec::new();
            for e in batch {
                let info = s.mesh.subdivide(e).map_err(SpaceError::from)?;
                new_basis.extend_from_slice(&info.new_basis);
                infos.push(info);
            }
            s.tables.resize(s.mesh.n_elements_total(), Vec::new());
            s.vertex_basis.resize(s.mesh.n_vertices(), None);
            for info in &infos {
                let parent = std::mem::take(&mut s.tables[info.element.idx()]);
                for (k, &child) in info.children.iter().enumerate() {
                    let (sa, sb, ta, tb) = quadrant_local(k);
                    let table: Vec<_> = parent
                        .iter()
                        .map(|(b, p)| (*b, patch_restrict(p, sa, sb, ta, tb)))
                        .collect();
                    s.tables[child.idx()] = table;
                }
            }
            new_basis.sort_unstable();
            new_basis.dedup();
            for &v in &new_basis {
                s.truncate_all_at(v);
            }
            for &v in &new_basis {
                s.add_vertex_functions(v);
            }
        }
        debug_assert_eq!(s.basis.len(), 4 * s.mesh.n_basis_vertices());
        Ok(s)
    }

    /// Quadrant rectangles of the support mesh around the anchor cross.
    fn support_quadrants(support: &Rect, coord: (u64, u64)) -> Vec<Rect> {
        let (vs, vt) = coord;
        let mut s_ranges = Vec::with_capacity(2);
        if vs > support.s0 {
            s_ranges.push((support.s0, vs));
        }
        if vs < support.s1 {
            s_ranges.push((vs, support.s1));
        }
        let mut t_ranges = Vec::with_capacity(2);
        if vt > support.t0 {
            t_ranges.push((support.t0, vt));
        }
        if vt < support.t1 {
            t_ranges.push((vt, support.t1));
        }
        let mut out = Vec::with_capacity(4);
        for &(t0, t1) in &t_ranges {
            for &(s0, s1) in &s_ranges {
                out.push(Rect { s0, s1, t0, t1 });
            }
        }
        out
    }

    fn corner_of(rect: &Rect, coord: (u64, u64)) -> usize {
        let cs = (coord.0 == rect.s1) as usize;
        let ct = (coord.1 == rect.t1) as usize;
        debug_assert!(coord.0 == rect.s0 || coord.0 == rect.s1);
        debug_assert!(coord.1 == rect.t0 || coord.1 == rect.t1);
        cs + 2 * ct
    }

    /// Zeroes the ordinate groups associated with the new basis vertex `v` for
    /// every existing function, matching the canonical construction even when
    /// a support quadrant was already subdivided by earlier refinements.
    fn truncate_all_at(&mut self, v: VertexId) {
        let support = self.mesh.support_mesh(v).expect("new basis vertex has support");
        let coord = self.mesh.vertex(v).coord;
        for q in Self::support_quadrants(&support, coord) {
            let qid = self
                .mesh
                .element_with_rect(&q)
                .expect("support quadrant is a mesh cell");
            let corner = Self::corner_of(&q, coord);
            if self.mesh.element(qid).is_active() {
                for (_, p) in self.tables[qid.idx()].iter_mut() {
                    zero_corner_group(p, corner);
                }
            } else {
                self.virtual_truncate(qid, &q, corner, v);
            }
        }
    }

    /// Truncation against an already-subdivided quadrant: subtract, per
    /// function, the polynomial carrying its Hermite data at `v` over the
    /// whole quadrant, then restore exact zeros at every basis-vertex corner.
    fn virtual_truncate(&mut self, qid: ElementId, q: &Rect, corner: usize, v: VertexId) {
        let d_star = self.mesh.active_descendant_at_corner(qid, corner);
        let (hs_d, ht_d) = self.rect_dims_f64(&self.mesh.element(d_star).rect);
        let cands: Vec<(BasisId, [f64; 4])> = self.tables[d_star.idx()]
            .iter()
            .filter(|(_, p)| !corner_group_is_zero(p, corner))
            .map(|(b, p)| (*b, hermite_at_corner(p, corner, hs_d, ht_d)))
            .collect();
        if cands.is_empty() {
            return;
        }
        let descendants = self.mesh.active_descendants(qid);
        let (hs_q, ht_q) = self.rect_dims_f64(q);
        for (b, l) in cands {
            let v_part = patch_from_corner_hermite(&l, corner, hs_q, ht_q);
            for &d in &descendants {
                let drect = self.mesh.element(d).rect;
                let (sa, sb, ta, tb) = local_range(q, &drect);
                let part = patch_restrict(&v_part, sa, sb, ta, tb);
                let table = &mut self.tables[d.idx()];
                let k = table
                    .binary_search_by_key(&b, |(id, _)| *id)
                    .expect("function covers the whole quadrant");
                for (ord, sub) in table[k].1.iter_mut().zip(part.iter()) {
                    *ord -= sub;
                }
                if d == d_star {
                    zero_corner_group(&mut table[k].1, corner);
                }
            }
        }
        // Repair: corner groups at basis vertices other than a function's own
        // anchor must be exactly zero.
        for &d in &descendants {
            let corners = self.mesh.element(d).corners;
            for (c, &u) in corners.iter().enumerate() {
                if u == v || !self.mesh.vertex(u).is_basis() {
                    continue;
                }
                for (b, p) in self.tables[d.idx()].iter_mut() {
                    if self.basis[b.idx()].anchor != u {
                        zero_corner_group(p, c);
                    }
                }
            }
        }
    }

    /// Creates the four tensor-product functions anchored at a new basis vertex.
    fn add_vertex_functions(&mut self, v: VertexId) {
        let support = self.mesh.support_mesh(v).expect("basis vertex");
        let coord = self.mesh.vertex(v).coord;
        let base = self.basis.len() as u32;
        let ids = [
            BasisId(base),
            BasisId(base + 1),
            BasisId(base + 2),
            BasisId(base + 3),
        ];
        let quadrants = Self::support_quadrants(&support, coord);
        let level = self.mesh.element(
            self.mesh
                .element_with_rect(&quadrants[0])
                .expect("support quadrant is a mesh cell"),
        )
        .level;
        for slot in 0..4u8 {
            self.basis.push(BasisMeta {
                anchor: v,
                slot,
                level,
                support,
            });
        }
        self.vertex_basis[v.idx()] = Some(ids);
        for q in &quadrants {
            let qid = self.mesh.element_with_rect(q).unwrap();
            for d in self.mesh.active_descendants(qid) {
                let drect = self.mesh.element(d).rect;
                let fs = [
                    factor_ordinates(support.s0, coord.0, support.s1, drect.s0, drect.s1, 0),
                    factor_ordinates(support.s0, coord.0, support.s1, drect.s0, drect.s1, 1),
                ];
                let ft = [
                    factor_ordinates(support.t0, coord.1, support.t1, drect.t0, drect.t1, 0),
                    factor_ordinates(support.t0, coord.1, support.t1, drect.t0, drect.t1, 1),
                ];
                let mut patches = [
                    tensor_patch(&fs[0], &ft[0]),
                    tensor_patch(&fs[1], &ft[0]),
                    tensor_patch(&fs[0], &ft[1]),
                    tensor_patch(&fs[1], &ft[1]),
                ];
                // Truncate the new functions at every other basis vertex
                // cornering this element (deeper vertices from earlier
                // refinements; a no-op elsewhere).
                let corners = self.mesh.element(d).corners;
                for (c, &u) in corners.iter().enumerate() {
                    if u != v && self.mesh.vertex(u).is_basis() {
                        for p in patches.iter_mut() {
                            zero_corner_group(p, c);
                        }
                    }
                }
                let table = &mut self.tables[d.idx()];
                for slot in 0..4usize {
                    table.push((ids[slot], patches[slot]));
                }
            }
        }
    }

    #[inline]
    fn rect_dims_f64(&self, rect: &Rect) -> (f64, f64) {
        let (ds, dt) = self.mesh.denominators();
        (
            rect.width() as f64 / ds as f64,
            rect.height() as f64 / dt as f64,
        )
    }

    /// Values and global first derivatives of all basis functions that are
    /// non-vanishing on `e`, at local coordinates `(u, w)`.
    pub fn basis_grad_at(&self, e: ElementId, u: f64, w: f64) -> Vec<(BasisId, f64, f64, f64)> {
        let rect = self.mesh.element(e).rect;
        let (hs, ht) = self.rect_dims_f64(&rect);
        self.tables[e.idx()]
            .iter()
            .map(|(b, p)| {
                let jet = patch_eval_jet(p, u, w);
                (*b, jet.f, jet.fu / hs, jet.fw / ht)
            })
            .collect()
    }

    /// Values of all non-vanishing basis functions on `e` at local `(u, w)`.
    pub fn basis_values_at(&self, e: ElementId, u: f64, w: f64) -> Vec<(BasisId, f64)> {
        self.tables[e.idx()]
            .iter()
            .map(|(b, p)| (*b, crate::bernstein::patch_eval(p, u, w)))
            .collect()
    }

    /// Geometric information `[N, N_s, N_t, N_st]` of basis function `b` at
    /// basis vertex `v`, taken as the limit from an incident active element.
    pub fn basis_geometric_info(&self, b: BasisId, v: VertexId) -> Result<[f64; 4], SpaceError> {
        if !self.mesh.vertex(v).is_basis() {
            return Err(MeshError::NotABasisVertex(v.idx()).into());
        }
        let coord = self.mesh.vertex(v).coord;
        let e = self.mesh.element_at_lattice(coord.0, coord.1);
        let el = self.mesh.element(e);
        let corner = Self::corner_of(&el.rect, coord);
        let (hs, ht) = self.rect_dims_f64(&el.rect);
        match self.tables[e.idx()].binary_search_by_key(&b, |(id, _)| *id) {
            Ok(k) => Ok(hermite_at_corner(&self.tables[e.idx()][k].1, corner, hs, ht)),
            Err(_) => Ok([0.0; 4]),
        }
    }
}

/// Local range of `child` inside `parent`, both exact lattice rectangles.
#[inline]
pub(crate) fn local_range(parent: &Rect, child: &Rect) -> (f64, f64, f64, f64) {
    let w = parent.width() as f64;
    let h = parent.height() as f64;
    (
        (child.s0 - parent.s0) as f64 / w,
        (child.s1 - parent.s0) as f64 / w,
        (child.t0 - parent.t0) as f64 / h,
        (child.t1 - parent.t0) as f64 / h,
    )
}

#[inline]
fn quadrant_local(k: usize) -> (f64, f64, f64, f64) {
    let sa = if k & 1 == 0 { 0.0 } else { 0.5 };
    let ta = if k & 2 == 0 { 0.0 } else { 0.5 };
    (sa, sa + 0.5, ta, ta + 0.5)
}

/// Bézier ordinates over `[e_lo, e_hi]` of the 1D C1 cubic factor `which`
/// anchored at `v` with support `[sup_lo, sup_hi]`. Interior anchors carry the
/// two B-splines on the knot vector `(lo, lo, v, v, hi, hi)`; anchors clamped
/// at a support end carry the one-sided boundary pair.
fn factor_ordinates(
    sup_lo: u64,
    v: u64,
    sup_hi: u64,
    e_lo: u64,
    e_hi: u64,
    which: usize,
) -> [f64; 4] {
    debug_assert!(which < 2);
    let (side_lo, side_hi, poly) = if v == sup_lo {
        let poly = if which == 0 {
            [1.0, 0.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0, 0.0]
        };
        (v, sup_hi, poly)
    } else if v == sup_hi {
        let poly = if which == 0 {
            [0.0, 0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 0.0, 1.0]
        };
        (sup_lo, v, poly)
    } else {
        let alpha = (v - sup_lo) as f64;
        let beta = (sup_hi - v) as f64;
        let vv = beta / (alpha + beta);
        let ww = alpha / (alpha + beta);
        if e_hi <= v {
            let poly = if which == 0 {
                [0.0, 0.0, 1.0, vv]
            } else {
                [0.0, 0.0, 0.0, ww]
            };
            (sup_lo, v, poly)
        } else {
            debug_assert!(e_lo >= v);
            let poly = if which == 0 {
                [vv, 0.0, 0.0, 0.0]
            } else {
                [ww, 1.0, 0.0, 0.0]
            };
            (v, sup_hi, poly)
        }
    };
    debug_assert!(side_lo <= e_lo && e_hi <= side_hi);
    if e_lo == side_lo && e_hi == side_hi {
        poly
    } else {
        let w = (side_hi - side_lo) as f64;
        let a = (e_lo - side_lo) as f64 / w;
        let b = (e_hi - side_lo) as f64 / w;
        restrict1(&poly, a, b)
    }
}

/// Evaluation jet of a field: value and derivatives with respect to the global
/// parameter coordinates.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet<const D: usize> {
    pub value: [f64; D],
    pub ds: [f64; D],
    pub dt: [f64; D],
    pub dst: [f64; D],
    pub dss: [f64; D],
    pub dtt: [f64; D],
}

impl<const D: usize> Default for FieldJet<D> {
    fn default() -> Self {
        FieldJet {
            value: [0.0; D],
            ds: [0.0; D],
            dt: [0.0; D],
            dst: [0.0; D],
            dss: [0.0; D],
            dtt: [0.0; D],
        }
    }
}

/// Coefficient vector over a [`PhtSpace`]: `D` scalars per basis function.
#[derive(Debug, Clone)]
pub struct Field<const D: usize> {
    space: Arc<PhtSpace>,
    coeffs: Vec<f64>,
}

impl<const D: usize> Field<D> {
    pub fn constant(space: &Arc<PhtSpace>, value: [f64; D]) -> Self {
        let n = space.dim();
        let mut coeffs = vec![0.0; n * D];
        for b in 0..n {
            // Constant fields come from the partition of unity: every
            // coefficient equals the constant.
            coeffs[b * D..(b + 1) * D].copy_from_slice(&value);
        }
        Field {
            space: space.clone(),
            coeffs,
        }
    }

    pub fn from_coeffs(space: &Arc<PhtSpace>, coeffs: Vec<f64>) -> Result<Self, SpaceError> {
        if coeffs.len() != space.dim() * D {
            return Err(SpaceError::CoefficientCount {
                got: coeffs.len(),
                want: space.dim(),
                dim: D,
            });
        }
        Ok(Field {
            space: space.clone(),
            coeffs,
        })
    }

    #[inline]
    pub fn space(&self) -> &Arc<PhtSpace> {
        &self.space
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, b: BasisId, c: usize) -> f64 {
        self.coeffs[b.idx() * D + c]
    }

    /// Full jet at a parameter point.
    pub fn eval_jet(&self, s: f64, t: f64) -> Result<FieldJet<D>, MeshError> {
        let e = self.space.mesh.element_at(s, t)?;
        Ok(self.eval_jet_in(e, s, t))
    }

    /// Full jet at a point known to lie in active element `e`.
    pub fn eval_jet_in(&self, e: ElementId, s: f64, t: f64) -> FieldJet<D> {
        let rect = self.space.mesh.element(e).rect;
        let (s0, t0) = self.space.mesh.coord_to_f64((rect.s0, rect.t0));
        let (hs, ht) = self.space.rect_dims_f64(&rect);
        let u = (s - s0) / hs;
        let w = (t - t0) / ht;
        self.eval_jet_local(e, u, w, hs, ht)
    }

    fn eval_jet_local(&self, e: ElementId, u: f64, w: f64, hs: f64, ht: f64) -> FieldJet<D> {
        let mut out = FieldJet::default();
        for (b, p) in self.space.tables[e.idx()].iter() {
            let jet = patch_eval_jet(p, u, w);
            let base = b.idx() * D;
            for c in 0..D {
                let coeff = self.coeffs[base + c];
                out.value[c] += coeff * jet.f;
                out.ds[c] += coeff * jet.fu;
                out.dt[c] += coeff * jet.fw;
                out.dst[c] += coeff * jet.fuw;
                out.dss[c] += coeff * jet.fuu;
                out.dtt[c] += coeff * jet.fww;
            }
        }
        for c in 0..D {
            out.ds[c] /= hs;
            out.dt[c] /= ht;
            out.dst[c] /= hs * ht;
            out.dss[c] /= hs * hs;
            out.dtt[c] /= ht * ht;
        }
        out
    }

    /// Value only.
    pub fn value(&self, s: f64, t: f64) -> Result<[f64; D], MeshError> {
        let e = self.space.mesh.element_at(s, t)?;
        Ok(self.value_in(e, s, t))
    }

    pub fn value_in(&self, e: ElementId, s: f64, t: f64) -> [f64; D] {
        let rect = self.space.mesh.element(e).rect;
        let (s0, t0) = self.space.mesh.coord_to_f64((rect.s0, rect.t0));
        let (hs, ht) = self.space.rect_dims_f64(&rect);
        let u = (s - s0) / hs;
        let w = (t - t0) / ht;
        let mut out = [0.0; D];
        for (b, p) in self.space.tables[e.idx()].iter() {
            let n = crate::bernstein::patch_eval(p, u, w);
            let base = b.idx() * D;
            for c in 0..D {
                out[c] += self.coeffs[base + c] * n;
            }
        }
        out
    }

    /// Geometric information `L(f)(v) = [f, f_s, f_t, f_st]` per component, as
    /// the limit from an incident active element. Evaluation happens at the
    /// exact lattice coordinates of the vertex.
    pub fn geometric_info(&self, v: VertexId) -> Result<[[f64; 4]; D], SpaceError> {
        if !self.space.mesh.vertex(v).is_basis() {
            return Err(MeshError::NotABasisVertex(v.idx()).into());
        }
        Ok(self.geometric_info_any(v))
    }

    fn geometric_info_any(&self, v: VertexId) -> [[f64; 4]; D] {
        let coord = self.space.mesh.vertex(v).coord;
        let e = self.space.mesh.element_at_lattice(coord.0, coord.1);
        let rect = self.space.mesh.element(e).rect;
        let u = (coord.0 - rect.s0) as f64 / rect.width() as f64;
        let w = (coord.1 - rect.t0) as f64 / rect.height() as f64;
        let (hs, ht) = self.space.rect_dims_f64(&rect);
        let jet = self.eval_jet_local(e, u, w, hs, ht);
        let mut out = [[0.0; 4]; D];
        for c in 0..D {
            out[c] = [jet.value[c], jet.ds[c], jet.dt[c], jet.dst[c]];
        }
        out
    }

    /// Re-expresses this field exactly in a refined space via the geometric
    /// information of the new basis functions.
    pub fn inherit(&self, new_space: &Arc<PhtSpace>) -> Result<Field<D>, SpaceError> {
        let old_mesh = self.space.mesh();
        let new_mesh = new_space.mesh();
        if old_mesh.resolution() != new_mesh.resolution()
            || new_space.dim() < self.space.dim()
        {
            return Err(SpaceError::SpaceMismatch);
        }
        for ov in old_mesh.basis_vertices() {
            let coord = old_mesh.vertex(ov).coord;
            let still_basis = new_mesh
                .vertex_id_at(coord)
                .map(|nv| new_mesh.vertex(nv).is_basis())
                .unwrap_or(false);
            if !still_basis {
                return Err(SpaceError::SpaceMismatch);
            }
        }
        let mut coeffs = vec![0.0; new_space.dim() * D];
        for v in new_mesh.basis_vertices() {
            let coord = new_mesh.vertex(v).coord;
            let ids = new_space.vertex_basis(v).expect("basis vertex has functions");
            let mut g = Matrix4::zeros();
            for (i, &b) in ids.iter().enumerate() {
                let row = new_space.basis_geometric_info(b, v)?;
                for (j, &x) in row.iter().enumerate() {
                    g[(i, j)] = x;
                }
            }
            let ginv = g
                .try_inverse()
                .ok_or(SpaceError::SingularGeometricInfo(v.idx()))?;
            let l = self.old_info_at(new_mesh, coord);
            for c in 0..D {
                let lv = RowVector4::new(l[c][0], l[c][1], l[c][2], l[c][3]);
                let p = lv * ginv;
                for (i, &b) in ids.iter().enumerate() {
                    coeffs[b.idx() * D + c] = p[i];
                }
            }
        }
        Field::from_coeffs(new_space, coeffs)
    }

    /// Jet of the old field at an exact lattice coordinate of the new mesh
    /// (the lattices agree since refinement preserves the resolution).
    fn old_info_at(&self, new_mesh: &HierTMesh, coord: (u64, u64)) -> [[f64; 4]; D] {
        debug_assert_eq!(new_mesh.denominators(), self.space.mesh.denominators());
        let e = self.space.mesh.element_at_lattice(coord.0, coord.1);
        let rect = self.space.mesh.element(e).rect;
        let u = (coord.0 - rect.s0) as f64 / rect.width() as f64;
        let w = (coord.1 - rect.t0) as f64 / rect.height() as f64;
        let (hs, ht) = self.space.rect_dims_f64(&rect);
        let jet = self.eval_jet_local(e, u, w, hs, ht);
        let mut out = [[0.0; 4]; D];
        for c in 0..D {
            out[c] = [jet.value[c], jet.ds[c], jet.dt[c], jet.dst[c]];
        }
        out
    }
}
