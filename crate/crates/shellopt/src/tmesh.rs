//! Hierarchical T-mesh over the unit parameter square.
//!
//! The mesh starts from an `nx x ny` tensor-product grid (level 0) and is
//! refined by dyadic cross insertion: an element splits into four equal
//! quadrants. Vertices are classified as boundary, interior crossing, or
//! T-junction from their incident edge directions; boundary and crossing
//! vertices are the basis vertices that carry spline functions.
//!
//! All mesh coordinates are exact integers on the lattice with denominators
//! `(nx << MAX_DEPTH, ny << MAX_DEPTH)`, so dyadic bisection never touches
//! floating point. Point queries take `f64` parameter coordinates.

use crate::error::MeshError;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Maximum refinement depth below level 0. Subdividing a level-16 element is rejected.
pub const MAX_DEPTH: u32 = 16;

/// Identifier of a mesh vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

/// Identifier of a mesh element (active or subdivided).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl VertexId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl ElementId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Incident-edge direction bits.
pub const DIR_SP: u8 = 1; // +s
pub const DIR_SM: u8 = 2; // -s
pub const DIR_TP: u8 = 4; // +t
pub const DIR_TM: u8 = 8; // -t
const DIR_ALL: u8 = DIR_SP | DIR_SM | DIR_TP | DIR_TM;

/// Vertex classification per incident edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    Boundary,
    InteriorCrossing,
    TJunction,
}

/// Exact axis-aligned rectangle on the mesh lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub s0: u64,
    pub s1: u64,
    pub t0: u64,
    pub t1: u64,
}

impl Rect {
    #[inline]
    pub fn width(&self) -> u64 {
        self.s1 - self.s0
    }

    #[inline]
    pub fn height(&self) -> u64 {
        self.t1 - self.t0
    }

    #[inline]
    pub fn center(&self) -> (u64, u64) {
        ((self.s0 + self.s1) / 2, (self.t0 + self.t1) / 2)
    }

    /// Closed rectangles intersect in at least a point.
    #[inline]
    pub fn touches(&self, other: &Rect) -> bool {
        self.s0 <= other.s1 && other.s0 <= self.s1 && self.t0 <= other.t1 && other.t0 <= self.t1
    }

    #[inline]
    pub fn contains_closed(&self, s: u64, t: u64) -> bool {
        self.s0 <= s && s <= self.s1 && self.t0 <= t && t <= self.t1
    }

    #[inline]
    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.s0 <= other.s0 && other.s1 <= self.s1 && self.t0 <= other.t0 && other.t1 <= self.t1
    }
}

/// Mesh vertex: exact coordinate, incident edge directions, classification.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub coord: (u64, u64),
    dirs: u8,
    pub class: VertexClass,
    /// Support-mesh rectangle, fixed when the vertex becomes a basis vertex.
    support: Option<Rect>,
}

impl Vertex {
    #[inline]
    pub fn is_basis(&self) -> bool {
        self.class != VertexClass::TJunction
    }

    #[inline]
    pub fn dirs(&self) -> u8 {
        self.dirs
    }
}

/// Mesh element. Children, when present, are the four dyadic quadrants
/// ordered ll, lr, ul, ur (bit 0 = +s half, bit 1 = +t half).
#[derive(Debug, Clone)]
pub struct Element {
    pub rect: Rect,
    pub level: u32,
    pub parent: Option<ElementId>,
    pub children: Option<[ElementId; 4]>,
    /// Corner vertices ordered ll, lr, ul, ur.
    pub corners: [VertexId; 4],
}

impl Element {
    #[inline]
    pub fn is_active(&self) -> bool {
        self.children.is_none()
    }
}

/// Result of one element subdivision.
#[derive(Debug, Clone)]
pub struct SubdivisionInfo {
    pub element: ElementId,
    pub children: [ElementId; 4],
    pub center: VertexId,
    /// Vertices that became basis vertices through this subdivision:
    /// the center, new boundary midpoints, and promoted T-junctions.
    pub new_basis: Vec<VertexId>,
}

/// Hierarchical T-mesh.
#[derive(Debug, Clone)]
pub struct HierTMesh {
    nx: usize,
    ny: usize,
    elements: Vec<Element>,
    vertices: Vec<Vertex>,
    vertex_at: HashMap<(u64, u64), VertexId>,
    grid: Vec<ElementId>,
    n_active: usize,
    n_basis_vertices: usize,
    max_level: u32,
}

impl HierTMesh {
    /// Builds the level-0 `nx x ny` tensor-product mesh.
    pub fn tensor(nx: usize, ny: usize) -> Result<Self, MeshError> {
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidResolution(nx, ny));
        }
        let us = 1u64 << MAX_DEPTH; // lattice units per level-0 cell
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut vertex_at = HashMap::new();
        let mut n_basis_vertices = 0;
        for j in 0..=ny {
            for i in 0..=nx {
                let coord = (i as u64 * us, j as u64 * us);
                let mut dirs = 0;
                if i < nx {
                    dirs |= DIR_SP;
                }
                if i > 0 {
                    dirs |= DIR_SM;
                }
                if j < ny {
                    dirs |= DIR_TP;
                }
                if j > 0 {
                    dirs |= DIR_TM;
                }
                let boundary = i == 0 || i == nx || j == 0 || j == ny;
                let class = if boundary {
                    VertexClass::Boundary
                } else {
                    VertexClass::InteriorCrossing
                };
                let support = Rect {
                    s0: i.saturating_sub(1) as u64 * us,
                    s1: (i + 1).min(nx) as u64 * us,
                    t0: j.saturating_sub(1) as u64 * us,
                    t1: (j + 1).min(ny) as u64 * us,
                };
                let id = VertexId(vertices.len() as u32);
                vertex_at.insert(coord, id);
                vertices.push(Vertex {
                    coord,
                    dirs,
                    class,
                    support: Some(support),
                });
                n_basis_vertices += 1;
            }
        }
        let vid = |i: usize, j: usize| VertexId((j * (nx + 1) + i) as u32);
        let mut elements = Vec::with_capacity(nx * ny);
        let mut grid = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let rect = Rect {
                    s0: i as u64 * us,
                    s1: (i + 1) as u64 * us,
                    t0: j as u64 * us,
                    t1: (j + 1) as u64 * us,
                };
                let id = ElementId(elements.len() as u32);
                grid.push(id);
                elements.push(Element {
                    rect,
                    level: 0,
                    parent: None,
                    children: None,
                    corners: [vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)],
                });
            }
        }
        Ok(Self {
            nx,
            ny,
            elements,
            vertices,
            vertex_at,
            grid,
            n_active: nx * ny,
            n_basis_vertices,
            max_level: 0,
        })
    }

    #[inline]
    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Lattice denominators per parametric direction.
    #[inline]
    pub fn denominators(&self) -> (u64, u64) {
        (
            (self.nx as u64) << MAX_DEPTH,
            (self.ny as u64) << MAX_DEPTH,
        )
    }

    #[inline]
    pub fn coord_to_f64(&self, c: (u64, u64)) -> (f64, f64) {
        let (ds, dt) = self.denominators();
        (c.0 as f64 / ds as f64, c.1 as f64 / dt as f64)
    }

    #[inline]
    pub fn element(&self, e: ElementId) -> &Element {
        &self.elements[e.idx()]
    }

    #[inline]
    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.idx()]
    }

    #[inline]
    pub fn n_elements_total(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// Number of basis vertices, i.e. `V^b + V^+`.
    #[inline]
    pub fn n_basis_vertices(&self) -> usize {
        self.n_basis_vertices
    }

    #[inline]
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn vertex_id_at(&self, coord: (u64, u64)) -> Option<VertexId> {
        self.vertex_at.get(&coord).copied()
    }

    /// Active element ids in creation order (deterministic).
    pub fn active_elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_active())
            .map(|(i, _)| ElementId(i as u32))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    /// Basis-vertex ids in creation order.
    pub fn basis_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_basis())
            .map(|(i, _)| VertexId(i as u32))
    }

    fn vertex_mut(&mut self, id: VertexId) -> &mut Vertex {
        &mut self.vertices[id.idx()]
    }

    fn on_domain_boundary(&self, coord: (u64, u64)) -> bool {
        let (ds, dt) = self.denominators();
        coord.0 == 0 || coord.0 == ds || coord.1 == 0 || coord.1 == dt
    }

    /// Ensures the vertex at `coord` exists with the `into` edge direction added,
    /// plus both along-edge directions (the host edge is split at this vertex).
    /// Returns the id and whether the vertex just became a basis vertex.
    fn touch_edge_midpoint(
        &mut self,
        coord: (u64, u64),
        along: u8,
        into: u8,
        support: Rect,
    ) -> (VertexId, bool) {
        if let Some(&id) = self.vertex_at.get(&coord) {
            let v = self.vertex_mut(id);
            debug_assert_eq!(v.class, VertexClass::TJunction);
            v.dirs |= along | into;
            if v.dirs == DIR_ALL {
                v.class = VertexClass::InteriorCrossing;
                v.support = Some(support);
                self.n_basis_vertices += 1;
                return (id, true);
            }
            (id, false)
        } else {
            let boundary = self.on_domain_boundary(coord);
            let class = if boundary {
                VertexClass::Boundary
            } else {
                VertexClass::TJunction
            };
            let id = VertexId(self.vertices.len() as u32);
            self.vertex_at.insert(coord, id);
            self.vertices.push(Vertex {
                coord,
                dirs: along | into,
                class,
                support: if boundary { Some(support) } else { None },
            });
            if boundary {
                self.n_basis_vertices += 1;
            }
            (id, boundary)
        }
    }

    /// Subdivides an active element into four quadrants.
    pub fn subdivide(&mut self, e: ElementId) -> Result<SubdivisionInfo, MeshError> {
        let el = self
            .elements
            .get(e.idx())
            .ok_or(MeshError::InactiveElement(e.idx()))?;
        if !el.is_active() {
            return Err(MeshError::InactiveElement(e.idx()));
        }
        if el.level >= MAX_DEPTH {
            return Err(MeshError::DepthExceeded(e.idx()));
        }
        let rect = el.rect;
        let level = el.level;
        let corners = el.corners;
        let (sm, tm) = rect.center();
        let hw = rect.width() / 2;
        let hh = rect.height() / 2;
        let mut new_basis = Vec::new();

        // Center vertex: always new, always an interior crossing.
        debug_assert!(self.vertex_at.get(&(sm, tm)).is_none());
        let center = VertexId(self.vertices.len() as u32);
        self.vertex_at.insert((sm, tm), center);
        self.vertices.push(Vertex {
            coord: (sm, tm),
            dirs: DIR_ALL,
            class: VertexClass::InteriorCrossing,
            support: Some(rect),
        });
        self.n_basis_vertices += 1;
        new_basis.push(center);

        // Edge midpoints. Support rects span the full edge along it and half an
        // element to each side across it (one-sided at the domain boundary).
        let bottom = {
            let support = Rect {
                s0: rect.s0,
                s1: rect.s1,
                t0: rect.t0.saturating_sub(hh),
                t1: tm,
            };
            self.touch_edge_midpoint((sm, rect.t0), DIR_SP | DIR_SM, DIR_TP, support)
        };
        let top = {
            let (_, dt) = self.denominators();
            let support = Rect {
                s0: rect.s0,
                s1: rect.s1,
                t0: tm,
                t1: (rect.t1 + hh).min(dt),
            };
            self.touch_edge_midpoint((sm, rect.t1), DIR_SP | DIR_SM, DIR_TM, support)
        };
        let left = {
            let support = Rect {
                s0: rect.s0.saturating_sub(hw),
                s1: sm,
                t0: rect.t0,
                t1: rect.t1,
            };
            self.touch_edge_midpoint((rect.s0, tm), DIR_TP | DIR_TM, DIR_SP, support)
        };
        let right = {
            let (ds, _) = self.denominators();
            let support = Rect {
                s0: sm,
                s1: (rect.s1 + hw).min(ds),
                t0: rect.t0,
                t1: rect.t1,
            };
            self.touch_edge_midpoint((rect.s1, tm), DIR_TP | DIR_TM, DIR_SM, support)
        };
        for (id, promoted) in [bottom, top, left, right] {
            if promoted {
                new_basis.push(id);
            }
        }
        let (bottom, top, left, right) = (bottom.0, top.0, left.0, right.0);

        let base = self.elements.len() as u32;
        let children = [
            ElementId(base),
            ElementId(base + 1),
            ElementId(base + 2),
            ElementId(base + 3),
        ];
        let child_rects = [
            Rect { s0: rect.s0, s1: sm, t0: rect.t0, t1: tm },
            Rect { s0: sm, s1: rect.s1, t0: rect.t0, t1: tm },
            Rect { s0: rect.s0, s1: sm, t0: tm, t1: rect.t1 },
            Rect { s0: sm, s1: rect.s1, t0: tm, t1: rect.t1 },
        ];
        let child_corners = [
            [corners[0], bottom, left, center],
            [bottom, corners[1], center, right],
            [left, center, corners[2], top],
            [center, right, top, corners[3]],
        ];
        for k in 0..4 {
            self.elements.push(Element {
                rect: child_rects[k],
                level: level + 1,
                parent: Some(e),
                children: None,
                corners: child_corners[k],
            });
        }
        self.elements[e.idx()].children = Some(children);
        self.n_active += 3;
        self.max_level = self.max_level.max(level + 1);
        Ok(SubdivisionInfo {
            element: e,
            children,
            center,
            new_basis,
        })
    }

    /// Active elements whose closed rectangle touches the closed rectangle of `e`
    /// (edge or vertex sharing), excluding `e` itself. Sorted by id.
    pub fn neighbors(&self, e: ElementId) -> Result<Vec<ElementId>, MeshError> {
        let el = &self.elements[e.idx()];
        if !el.is_active() {
            return Err(MeshError::InactiveElement(e.idx()));
        }
        let rect = el.rect;
        let mut out = Vec::new();
        self.collect_touching(&rect, &mut out);
        out.retain(|&id| id != e);
        out.sort_unstable();
        Ok(out)
    }

    /// All active elements whose closed rect touches `rect`.
    pub fn collect_touching(&self, rect: &Rect, out: &mut Vec<ElementId>) {
        let us = 1u64 << MAX_DEPTH;
        let i0 = (rect.s0.saturating_sub(1) / us) as usize;
        let i1 = ((rect.s1 / us) as usize).min(self.nx - 1);
        let j0 = (rect.t0.saturating_sub(1) / us) as usize;
        let j1 = ((rect.t1 / us) as usize).min(self.ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                self.collect_touching_rec(self.grid[j * self.nx + i], rect, out);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    fn collect_touching_rec(&self, e: ElementId, rect: &Rect, out: &mut Vec<ElementId>) {
        let el = &self.elements[e.idx()];
        if !el.rect.touches(rect) {
            return;
        }
        match el.children {
            None => out.push(e),
            Some(children) => {
                for c in children {
                    self.collect_touching_rec(c, rect, out);
                }
            }
        }
    }

    /// The unique active element whose half-open rectangle contains `(s, t)`
    /// (closed on the upper domain boundary). Points on internal edges belong
    /// to the element with the larger corner.
    pub fn element_at(&self, s: f64, t: f64) -> Result<ElementId, MeshError> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(MeshError::OutOfDomain(s, t));
        }
        let i = ((s * self.nx as f64).floor() as usize).min(self.nx - 1);
        let j = ((t * self.ny as f64).floor() as usize).min(self.ny - 1);
        let mut e = self.grid[j * self.nx + i];
        loop {
            let el = &self.elements[e.idx()];
            match el.children {
                None => return Ok(e),
                Some(children) => {
                    let (cs, ct) = el.rect.center();
                    let (cs, ct) = self.coord_to_f64((cs, ct));
                    let k = (s >= cs) as usize + 2 * (t >= ct) as usize;
                    e = children[k];
                }
            }
        }
    }

    /// Local `[0,1]^2` coordinates of a parameter point within element `e`.
    pub fn local_coords(&self, e: ElementId, s: f64, t: f64) -> (f64, f64) {
        let rect = self.elements[e.idx()].rect;
        let (ds, dt) = self.denominators();
        let s0 = rect.s0 as f64 / ds as f64;
        let t0 = rect.t0 as f64 / dt as f64;
        let hs = rect.width() as f64 / ds as f64;
        let ht = rect.height() as f64 / dt as f64;
        ((s - s0) / hs, (t - t0) / ht)
    }

    /// Exact-lattice point query with the same tie-break semantics as
    /// [`HierTMesh::element_at`], done entirely in integers.
    pub fn element_at_lattice(&self, s: u64, t: u64) -> ElementId {
        let us = 1u64 << MAX_DEPTH;
        let i = ((s / us) as usize).min(self.nx - 1);
        let j = ((t / us) as usize).min(self.ny - 1);
        let mut e = self.grid[j * self.nx + i];
        loop {
            let el = &self.elements[e.idx()];
            match el.children {
                None => return e,
                Some(children) => {
                    let (cs, ct) = el.rect.center();
                    let k = (s >= cs) as usize + 2 * (t >= ct) as usize;
                    e = children[k];
                }
            }
        }
    }

    /// The element (active or not) with exactly this rectangle, if present.
    pub fn element_with_rect(&self, rect: &Rect) -> Option<ElementId> {
        let us = 1u64 << MAX_DEPTH;
        let i = (rect.s0 / us) as usize;
        let j = (rect.t0 / us) as usize;
        if i >= self.nx || j >= self.ny {
            return None;
        }
        let mut e = self.grid[j * self.nx + i];
        loop {
            let el = &self.elements[e.idx()];
            if el.rect == *rect {
                return Some(e);
            }
            if !el.rect.contains_rect(rect) {
                return None;
            }
            let children = el.children?;
            let (cs, ct) = el.rect.center();
            let k = (rect.s0 >= cs) as usize + 2 * (rect.t0 >= ct) as usize;
            e = children[k];
        }
    }

    /// Descends from `e` toward the given corner until reaching an active element.
    pub fn active_descendant_at_corner(&self, e: ElementId, corner: usize) -> ElementId {
        let mut cur = e;
        while let Some(children) = self.elements[cur.idx()].children {
            cur = children[corner];
        }
        cur
    }

    /// All active descendants of `e` (or `e` itself when active), sorted by id.
    pub fn active_descendants(&self, e: ElementId) -> Vec<ElementId> {
        let mut out = Vec::new();
        let mut stack = vec![e];
        while let Some(cur) = stack.pop() {
            match self.elements[cur.idx()].children {
                None => out.push(cur),
                Some(children) => stack.extend(children),
            }
        }
        out.sort_unstable();
        out
    }

    /// Support-mesh rectangle of a basis vertex.
    pub fn support_mesh(&self, v: VertexId) -> Result<Rect, MeshError> {
        self.vertices[v.idx()]
            .support
            .ok_or(MeshError::NotABasisVertex(v.idx()))
    }

    /// Active elements that have `v` as a corner, sorted by id.
    pub fn elements_at_corner(&self, v: VertexId) -> Vec<ElementId> {
        let coord = self.vertices[v.idx()].coord;
        let rect = Rect { s0: coord.0, s1: coord.0, t0: coord.1, t1: coord.1 };
        let mut touching = Vec::new();
        self.collect_touching(&rect, &mut touching);
        touching
            .into_iter()
            .filter(|&e| self.elements[e.idx()].corners.contains(&v))
            .collect()
    }

    /// Re-derives the incident edge directions of a vertex from the active
    /// elements around it. Used to cross-check stored classifications.
    pub fn derive_dirs(&self, v: VertexId) -> u8 {
        let (s, t) = self.vertices[v.idx()].coord;
        let probe = Rect { s0: s, s1: s, t0: t, t1: t };
        let mut incident = Vec::new();
        self.collect_touching(&probe, &mut incident);
        let mut dirs = 0;
        for &e in &incident {
            let r = self.elements[e.idx()].rect;
            if (r.t0 == t || r.t1 == t) && r.s0 <= s && s < r.s1 {
                dirs |= DIR_SP;
            }
            if (r.t0 == t || r.t1 == t) && r.s0 < s && s <= r.s1 {
                dirs |= DIR_SM;
            }
            if (r.s0 == s || r.s1 == s) && r.t0 <= t && t < r.t1 {
                dirs |= DIR_TP;
            }
            if (r.s0 == s || r.s1 == s) && r.t0 < t && t <= r.t1 {
                dirs |= DIR_TM;
            }
        }
        dirs
    }

    /// Classification derived from scratch; must match the stored class.
    pub fn derive_class(&self, v: VertexId) -> VertexClass {
        if self.on_domain_boundary(self.vertices[v.idx()].coord) {
            VertexClass::Boundary
        } else if self.derive_dirs(v) == DIR_ALL {
            VertexClass::InteriorCrossing
        } else {
            VertexClass::TJunction
        }
    }

    /// Debug dump: one line per active element, `level s0 t0 s1 t1` in exact
    /// rational text.
    pub fn dump(&self) -> String {
        let (ds, dt) = self.denominators();
        let mut out = String::new();
        for e in self.active_elements() {
            let el = &self.elements[e.idx()];
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                el.level,
                frac(el.rect.s0, ds),
                frac(el.rect.t0, dt),
                frac(el.rect.s1, ds),
                frac(el.rect.t1, dt),
            );
        }
        out
    }

    /// Exact sum of active-element areas in lattice units; the invariant is
    /// that this equals the full domain area.
    pub fn active_area_lattice(&self) -> u128 {
        self.active_elements()
            .map(|e| {
                let r = self.elements[e.idx()].rect;
                r.width() as u128 * r.height() as u128
            })
            .sum()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact rational text for `num/den`: `0`, `1`, or a reduced fraction.
pub fn frac(num: u64, den: u64) -> String {
    if num == 0 {
        return "0".to_string();
    }
    if num == den {
        return "1".to_string();
    }
    let g = gcd(num, den);
    format!("{}/{}", num / g, den / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(mesh: &HierTMesh) -> (usize, usize) {
        let mut vb = 0;
        let mut vp = 0;
        for v in mesh.vertex_ids() {
            match mesh.vertex(v).class {
                VertexClass::Boundary => vb += 1,
                VertexClass::InteriorCrossing => vp += 1,
                VertexClass::TJunction => {}
            }
        }
        (vb, vp)
    }

    #[test]
    fn tensor_2x2() {
        let mesh = HierTMesh::tensor(2, 2).unwrap();
        assert_eq!(mesh.n_active(), 4);
        assert_eq!(mesh.n_vertices(), 9);
        let (vb, vp) = counts(&mesh);
        assert_eq!((vb, vp), (8, 1));
    }

    #[test]
    fn tensor_1x1_degenerate() {
        let mesh = HierTMesh::tensor(1, 1).unwrap();
        assert_eq!(mesh.n_active(), 1);
        let (vb, vp) = counts(&mesh);
        assert_eq!((vb, vp), (4, 0));
    }

    #[test]
    fn tensor_20x20() {
        let mesh = HierTMesh::tensor(20, 20).unwrap();
        assert_eq!(mesh.n_active(), 400);
        assert_eq!(mesh.n_vertices(), 441);
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(HierTMesh::tensor(0, 3).is_err());
        assert!(HierTMesh::tensor(3, 0).is_err());
    }

    #[test]
    fn subdivide_2x2_lower_left() {
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let e = mesh.element_at(0.25, 0.25).unwrap();
        let info = mesh.subdivide(e).unwrap();
        let (vb, vp) = counts(&mesh);
        assert_eq!((vb, vp), (10, 2));
        let tj = mesh
            .vertex_ids()
            .filter(|&v| mesh.vertex(v).class == VertexClass::TJunction)
            .count();
        assert_eq!(tj, 2);
        // center + two new boundary midpoints became basis vertices
        assert_eq!(info.new_basis.len(), 3);
        assert_eq!(mesh.n_active(), 7);
    }

    #[test]
    fn subdivide_1x1_gives_3x3_topology() {
        let mut mesh = HierTMesh::tensor(1, 1).unwrap();
        let e = mesh.element_at(0.5, 0.5).unwrap();
        mesh.subdivide(e).unwrap();
        let (vb, vp) = counts(&mesh);
        assert_eq!((vb, vp), (8, 1));
        assert_eq!(mesh.n_active(), 4);
    }

    #[test]
    fn shared_midpoint_promotion() {
        // Subdividing both cells adjacent to a shared edge promotes the edge
        // midpoint T-junction to an interior crossing.
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let a = mesh.element_at(0.25, 0.25).unwrap();
        mesh.subdivide(a).unwrap();
        let (ds, dt) = mesh.denominators();
        let mid = mesh.vertex_id_at((ds / 2, dt / 4)).unwrap();
        assert_eq!(mesh.vertex(mid).class, VertexClass::TJunction);
        let b = mesh.element_at(0.75, 0.25).unwrap();
        let info = mesh.subdivide(b).unwrap();
        assert_eq!(mesh.vertex(mid).class, VertexClass::InteriorCrossing);
        assert!(info.new_basis.contains(&mid));
    }

    #[test]
    fn subdividing_inactive_rejected() {
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let e = mesh.element_at(0.25, 0.25).unwrap();
        mesh.subdivide(e).unwrap();
        assert!(matches!(
            mesh.subdivide(e),
            Err(MeshError::InactiveElement(_))
        ));
    }

    #[test]
    fn neighbors_moore() {
        let mesh = HierTMesh::tensor(4, 4).unwrap();
        let e = mesh.element_at(0.4, 0.4).unwrap();
        assert_eq!(mesh.neighbors(e).unwrap().len(), 8);
        let corner = mesh.element_at(0.1, 0.1).unwrap();
        let mesh2 = HierTMesh::tensor(2, 2).unwrap();
        let corner2 = mesh2.element_at(0.1, 0.1).unwrap();
        assert_eq!(mesh2.neighbors(corner2).unwrap().len(), 3);
        assert_eq!(mesh.neighbors(corner).unwrap().len(), 3);
    }

    #[test]
    fn neighbors_coarse_cell_once() {
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let a = mesh.element_at(0.25, 0.25).unwrap();
        let info = mesh.subdivide(a).unwrap();
        // small child adjacent to the unrefined coarse cell on its right
        let child = info.children[1];
        let coarse = mesh.element_at(0.75, 0.25).unwrap();
        let n = mesh.neighbors(child).unwrap();
        assert_eq!(n.iter().filter(|&&x| x == coarse).count(), 1);
    }

    #[test]
    fn neighbors_symmetric() {
        let mut mesh = HierTMesh::tensor(3, 3).unwrap();
        let e = mesh.element_at(0.5, 0.5).unwrap();
        mesh.subdivide(e).unwrap();
        let e2 = mesh.element_at(0.4, 0.4).unwrap();
        mesh.subdivide(e2).unwrap();
        let active: Vec<_> = mesh.active_elements().collect();
        for &a in &active {
            for &b in &active {
                if a == b {
                    continue;
                }
                let na = mesh.neighbors(a).unwrap().contains(&b);
                let nb = mesh.neighbors(b).unwrap().contains(&a);
                assert_eq!(na, nb);
            }
        }
    }

    #[test]
    fn support_mesh_examples() {
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let (ds, dt) = mesh.denominators();
        let center = mesh.vertex_id_at((ds / 2, dt / 2)).unwrap();
        assert_eq!(
            mesh.support_mesh(center).unwrap(),
            Rect { s0: 0, s1: ds, t0: 0, t1: dt }
        );
        let bmid = mesh.vertex_id_at((ds / 2, 0)).unwrap();
        assert_eq!(
            mesh.support_mesh(bmid).unwrap(),
            Rect { s0: 0, s1: ds, t0: 0, t1: dt / 2 }
        );
        let e = mesh.element_at(0.25, 0.25).unwrap();
        let info = mesh.subdivide(e).unwrap();
        let c = info.center;
        assert_eq!(mesh.vertex(c).coord, (ds / 4, dt / 4));
        assert_eq!(
            mesh.support_mesh(c).unwrap(),
            Rect { s0: 0, s1: ds / 2, t0: 0, t1: dt / 2 }
        );
        // T-junction input is a usage error
        let tj = mesh.vertex_id_at((ds / 2, dt / 4)).unwrap();
        assert!(mesh.support_mesh(tj).is_err());
    }

    #[test]
    fn element_at_tie_breaks() {
        let mesh = HierTMesh::tensor(2, 2).unwrap();
        let ll = mesh.element_at(0.3, 0.3).unwrap();
        assert_eq!(mesh.element(ll).rect.s0, 0);
        let ur = mesh.element_at(0.5, 0.5).unwrap();
        let (ds, dt) = mesh.denominators();
        assert_eq!(mesh.element(ur).rect.s0, ds / 2);
        assert_eq!(mesh.element(ur).rect.t0, dt / 2);
        let top = mesh.element_at(1.0, 1.0).unwrap();
        assert_eq!(mesh.element(top).rect.s1, ds);
        assert!(mesh.element_at(1.2, 0.0).is_err());
    }

    #[test]
    fn area_and_classes_after_random_refinement() {
        let mut mesh = HierTMesh::tensor(3, 2).unwrap();
        // deterministic pseudo-random subdivision pattern
        let mut pick = 7usize;
        for _ in 0..12 {
            let active: Vec<_> = mesh.active_elements().collect();
            pick = (pick * 31 + 11) % active.len();
            mesh.subdivide(active[pick]).unwrap();
        }
        let (ds, dt) = mesh.denominators();
        assert_eq!(mesh.active_area_lattice(), ds as u128 * dt as u128);
        for v in mesh.vertex_ids() {
            assert_eq!(mesh.vertex(v).class, mesh.derive_class(v));
            assert_eq!(mesh.vertex(v).dirs(), mesh.derive_dirs(v));
        }
    }

    #[test]
    fn dump_is_exact_rational() {
        let mut mesh = HierTMesh::tensor(2, 2).unwrap();
        let e = mesh.element_at(0.25, 0.25).unwrap();
        mesh.subdivide(e).unwrap();
        let dump = mesh.dump();
        assert!(dump.contains("1 0 0 1/4 1/4"));
        assert!(dump.contains("0 1/2 0 1 1/2"));
    }
}
