//! Exports: legacy-VTK surface and wireframe files, field serialization, and
//! run checkpoints (mesh dump plus density coefficients).
//!
//! Coefficients are keyed by the anchor vertex coordinate (exact rational
//! text) and slot, so files stay valid across basis renumbering. Checkpoints
//! rebuild the space by replaying the recorded active-element set level by
//! level, which reproduces the canonical construction.

use crate::driver::GeometrySource;
use crate::error::FeaError;
use crate::phtspace::{Field, PhtSpace};
use crate::shellgeom::{AnalyticSurface, MidSurface};
use crate::tmesh::{frac, ElementId, HierTMesh, Rect};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

/// Serializes a scalar field: one line per coefficient, keyed by
/// `(anchor s, anchor t, slot)` in exact rational text.
pub fn field_to_string(field: &Field<1>) -> String {
    let space = field.space();
    let mesh = space.mesh();
    let (ds, dt) = mesh.denominators();
    let mut rows: Vec<(u64, u64, u8, f64)> = Vec::with_capacity(space.dim());
    for v in mesh.basis_vertices() {
        let coord = mesh.vertex(v).coord;
        let ids = space.vertex_basis(v).expect("basis vertex");
        for (slot, &b) in ids.iter().enumerate() {
            rows.push((coord.0, coord.1, slot as u8, field.coeff(b, 0)));
        }
    }
    rows.sort_by_key(|&(s, t, slot, _)| (s, t, slot));
    let mut out = String::new();
    let _ = writeln!(out, "field 1 {}", rows.len());
    for (s, t, slot, c) in rows {
        let _ = writeln!(out, "{} {} {} {}", frac(s, ds), frac(t, dt), slot, c);
    }
    out
}

fn parse_frac(text: &str, den: u64) -> Result<u64, FeaError> {
    let bad = || FeaError::Config(format!("invalid rational `{text}`"));
    let (num, d) = match text.split_once('/') {
        Some((n, d)) => (
            n.parse::<u64>().map_err(|_| bad())?,
            d.parse::<u64>().map_err(|_| bad())?,
        ),
        None => (text.parse::<u64>().map_err(|_| bad())?, 1),
    };
    if d == 0 || den % d != 0 {
        return Err(FeaError::Config(format!(
            "rational `{text}` does not lie on the mesh lattice"
        )));
    }
    Ok(num * (den / d))
}

/// Parses a serialized field against an existing space.
pub fn field_from_str(space: &Arc<PhtSpace>, text: &str) -> Result<Field<1>, FeaError> {
    let mesh = space.mesh();
    let (ds, dt) = mesh.denominators();
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| FeaError::Config("empty field block".into()))?
        .1;
    let mut hp = header.split_whitespace();
    if hp.next() != Some("field") {
        return Err(FeaError::Config("expected `field` header".into()));
    }
    let dim: usize = hp
        .next()
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| FeaError::Config("bad field header".into()))?;
    let n: usize = hp
        .next()
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| FeaError::Config("bad field header".into()))?;
    if dim != 1 {
        return Err(FeaError::Config(format!("expected scalar field, got dim {dim}")));
    }
    if n != space.dim() {
        return Err(FeaError::Config(format!(
            "field has {n} coefficients, space has {}",
            space.dim()
        )));
    }
    let mut coeffs = vec![f64::NAN; space.dim()];
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad =
            |msg: &str| FeaError::Config(format!("field line {}: {}", lineno + 1, msg));
        if parts.len() != 4 {
            return Err(bad("expected `s t slot value`"));
        }
        let s = parse_frac(parts[0], ds)?;
        let t = parse_frac(parts[1], dt)?;
        let slot: usize = parts[2].parse().map_err(|_| bad("bad slot"))?;
        let value: f64 = parts[3].parse().map_err(|_| bad("bad value"))?;
        let v = mesh
            .vertex_id_at((s, t))
            .ok_or_else(|| bad("not a mesh vertex"))?;
        let ids = space
            .vertex_basis(v)
            .ok_or_else(|| bad("vertex carries no basis functions"))?;
        if slot > 3 {
            return Err(bad("slot out of range"));
        }
        coeffs[ids[slot].idx()] = value;
    }
    if coeffs.iter().any(|c| c.is_nan()) {
        return Err(FeaError::Config("field is missing coefficients".into()));
    }
    Field::from_coeffs(space, coeffs).map_err(FeaError::Space)
}

/// Writes a full checkpoint: geometry reference, mesh dump, density field.
pub fn checkpoint_to_string(
    geometry: &GeometrySource,
    thickness: f64,
    rho: &Field<1>,
) -> String {
    let space = rho.space();
    let mesh = space.mesh();
    let (nx, ny) = mesh.resolution();
    let mut out = String::new();
    let _ = writeln!(out, "checkpoint");
    match geometry {
        GeometrySource::Builtin(s) => {
            let _ = writeln!(out, "geometry builtin {}", s.name());
        }
        GeometrySource::ControlNet(entries) => {
            let _ = writeln!(out, "geometry controlnet {}", entries.len());
            for ((sn, sd), (tn, td), slot, xyz) in entries {
                let _ = writeln!(
                    out,
                    "{}/{} {}/{} {} {} {} {}",
                    sn, sd, tn, td, slot, xyz[0], xyz[1], xyz[2]
                );
            }
        }
    }
    let _ = writeln!(out, "thickness {}", thickness);
    let _ = writeln!(out, "mesh {} {}", nx, ny);
    out.push_str(&mesh.dump());
    let _ = writeln!(out, "endmesh");
    out.push_str(&field_to_string(rho));
    out
}

pub struct Checkpoint {
    pub geometry: GeometrySource,
    pub thickness: f64,
    pub space: Arc<PhtSpace>,
    pub rho: Field<1>,
}

/// Reads a checkpoint, replaying the mesh dump to rebuild the space.
pub fn checkpoint_from_str(text: &str) -> Result<Checkpoint, FeaError> {
    let mut lines = text.lines().peekable();
    let bad = |msg: &str| FeaError::Config(format!("checkpoint: {msg}"));
    if lines.next().map(str::trim) != Some("checkpoint") {
        return Err(bad("missing `checkpoint` header"));
    }
    let geom_line = lines.next().ok_or_else(|| bad("missing geometry"))?;
    let mut gp = geom_line.split_whitespace();
    if gp.next() != Some("geometry") {
        return Err(bad("missing geometry line"));
    }
    let geometry = match gp.next() {
        Some("builtin") => {
            let name = gp.next().ok_or_else(|| bad("missing builtin name"))?;
            GeometrySource::Builtin(
                AnalyticSurface::from_name(name)
                    .ok_or_else(|| bad(&format!("unknown geometry `{name}`")))?,
            )
        }
        Some("controlnet") => {
            let n: usize = gp
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad("bad controlnet count"))?;
            let mut entries = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next().ok_or_else(|| bad("truncated control net"))?;
                let p: Vec<&str> = line.split_whitespace().collect();
                if p.len() != 6 {
                    return Err(bad("control point expects `s t slot x y z`"));
                }
                let parse_pair = |txt: &str| -> Result<(u64, u64), FeaError> {
                    match txt.split_once('/') {
                        Some((a, b)) => Ok((
                            a.parse().map_err(|_| bad("bad fraction"))?,
                            b.parse().map_err(|_| bad("bad fraction"))?,
                        )),
                        None => Ok((txt.parse().map_err(|_| bad("bad fraction"))?, 1)),
                    }
                };
                entries.push((
                    parse_pair(p[0])?,
                    parse_pair(p[1])?,
                    p[2].parse().map_err(|_| bad("bad slot"))?,
                    [
                        p[3].parse().map_err(|_| bad("bad coordinate"))?,
                        p[4].parse().map_err(|_| bad("bad coordinate"))?,
                        p[5].parse().map_err(|_| bad("bad coordinate"))?,
                    ],
                ));
            }
            GeometrySource::ControlNet(entries)
        }
        _ => return Err(bad("geometry must be `builtin` or `controlnet`")),
    };
    let thickness: f64 = lines
        .next()
        .and_then(|l| l.strip_prefix("thickness"))
        .and_then(|x| x.trim().parse().ok())
        .ok_or_else(|| bad("missing thickness"))?;
    let mesh_line = lines.next().ok_or_else(|| bad("missing mesh header"))?;
    let mut mp = mesh_line.split_whitespace();
    if mp.next() != Some("mesh") {
        return Err(bad("missing mesh header"));
    }
    let nx: usize = mp
        .next()
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| bad("bad mesh size"))?;
    let ny: usize = mp
        .next()
        .and_then(|x| x.parse().ok())
        .ok_or_else(|| bad("bad mesh size"))?;
    let mesh0 = HierTMesh::tensor(nx, ny).map_err(crate::SpaceError::from)?;
    let (ds, dt) = mesh0.denominators();
    let mut active: HashSet<(u64, u64, u64, u64)> = HashSet::new();
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "endmesh" {
            break;
        }
        if line.is_empty() {
            continue;
        }
        let p: Vec<&str> = line.split_whitespace().collect();
        if p.len() != 5 {
            return Err(bad("mesh line expects `level s0 t0 s1 t1`"));
        }
        active.insert((
            parse_frac(p[1], ds)?,
            parse_frac(p[2], dt)?,
            parse_frac(p[3], ds)?,
            parse_frac(p[4], dt)?,
        ));
    }
    let mut space = PhtSpace::level0(mesh0).map_err(FeaError::Space)?;
    for _ in 0..=crate::tmesh::MAX_DEPTH {
        let to_split: Vec<ElementId> = space
            .mesh()
            .active_elements()
            .filter(|&e| {
                let r = space.mesh().element(e).rect;
                !active.contains(&(r.s0, r.t0, r.s1, r.t1))
            })
            .collect();
        if to_split.is_empty() {
            break;
        }
        space = space.refine(&to_split).map_err(FeaError::Space)?;
    }
    if space.mesh().n_active() != active.len() {
        return Err(bad("mesh dump is not a refinement of the base mesh"));
    }
    let space = Arc::new(space);
    let field_text: String = text
        .lines()
        .skip_while(|l| !l.starts_with("field "))
        .collect::<Vec<_>>()
        .join("\n");
    let rho = field_from_str(&space, &field_text)?;
    Ok(Checkpoint {
        geometry,
        thickness,
        space,
        rho,
    })
}

/// Legacy ASCII VTK of the density on the mid-surface. Every active element
/// is tessellated into `tess x tess` quads with point data `density` and
/// `thresholded` (1 where density >= 0.5) and cell data `level`.
pub fn density_vtk(surf: &MidSurface, rho: &Field<1>, tess: usize) -> Result<String, FeaError> {
    let tess = tess.max(1);
    let space = rho.space();
    let mesh = space.mesh();
    let elements: Vec<ElementId> = mesh.active_elements().collect();
    let ppe = (tess + 1) * (tess + 1);
    let np = elements.len() * ppe;
    let nc = elements.len() * tess * tess;
    let mut points = String::new();
    let mut density = String::new();
    let mut thresh = String::new();
    let mut cells = String::new();
    let mut levels = String::new();
    for (ei, &e) in elements.iter().enumerate() {
        let el = mesh.element(e);
        let rect = el.rect;
        let (ds, dt) = mesh.denominators();
        let s0 = rect.s0 as f64 / ds as f64;
        let t0 = rect.t0 as f64 / dt as f64;
        let hs = rect.width() as f64 / ds as f64;
        let ht = rect.height() as f64 / dt as f64;
        for j in 0..=tess {
            for i in 0..=tess {
                let s = s0 + hs * i as f64 / tess as f64;
                let t = t0 + ht * j as f64 / tess as f64;
                let x = surf
                    .position(s, t)
                    .map_err(FeaError::Geom)?;
                let _ = writeln!(points, "{} {} {}", x[0], x[1], x[2]);
                let r = rho.value_in(e, s, t)[0];
                let _ = writeln!(density, "{}", r);
                let _ = writeln!(thresh, "{}", if r >= 0.5 { 1 } else { 0 });
            }
        }
        let base = ei * ppe;
        for j in 0..tess {
            for i in 0..tess {
                let p0 = base + j * (tess + 1) + i;
                let p1 = p0 + 1;
                let p2 = p0 + tess + 2;
                let p3 = p0 + tess + 1;
                let _ = writeln!(cells, "4 {} {} {} {}", p0, p1, p2, p3);
            }
        }
        for _ in 0..tess * tess {
            let _ = writeln!(levels, "{}", el.level);
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("shell density\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", np);
    out.push_str(&points);
    let _ = writeln!(out, "CELLS {} {}", nc, nc * 5);
    out.push_str(&cells);
    let _ = writeln!(out, "CELL_TYPES {}", nc);
    for _ in 0..nc {
        out.push_str("9\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", np);
    out.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
    out.push_str(&density);
    out.push_str("SCALARS thresholded int 1\nLOOKUP_TABLE default\n");
    out.push_str(&thresh);
    let _ = writeln!(out, "CELL_DATA {}", nc);
    out.push_str("SCALARS level int 1\nLOOKUP_TABLE default\n");
    out.push_str(&levels);
    Ok(out)
}

/// Legacy ASCII VTK wireframe of the T-mesh on the mid-surface: each active
/// element boundary as line segments, `samples` segments per edge.
pub fn tmesh_vtk(surf: &MidSurface, mesh: &HierTMesh, samples: usize) -> Result<String, FeaError> {
    let samples = samples.max(1);
    let mut points = String::new();
    let mut lines_s = String::new();
    let mut np = 0usize;
    let mut nc = 0usize;
    let (ds, dt) = mesh.denominators();
    for e in mesh.active_elements() {
        let rect: Rect = mesh.element(e).rect;
        let s0 = rect.s0 as f64 / ds as f64;
        let s1 = rect.s1 as f64 / ds as f64;
        let t0 = rect.t0 as f64 / dt as f64;
        let t1 = rect.t1 as f64 / dt as f64;
        let edges = [
            ((s0, t0), (s1, t0)),
            ((s1, t0), (s1, t1)),
            ((s1, t1), (s0, t1)),
            ((s0, t1), (s0, t0)),
        ];
        for ((sa, ta), (sb, tb)) in edges {
            let base = np;
            for k in 0..=samples {
                let f = k as f64 / samples as f64;
                let s = sa + (sb - sa) * f;
                let t = ta + (tb - ta) * f;
                let x = surf.position(s, t).map_err(FeaError::Geom)?;
                let _ = writeln!(points, "{} {} {}", x[0], x[1], x[2]);
                np += 1;
            }
            for k in 0..samples {
                let _ = writeln!(lines_s, "2 {} {}", base + k, base + k + 1);
                nc += 1;
            }
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("t-mesh wireframe\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", np);
    out.push_str(&points);
    let _ = writeln!(out, "CELLS {} {}", nc, nc * 3);
    out.push_str(&lines_s);
    let _ = writeln!(out, "CELL_TYPES {}", nc);
    for _ in 0..nc {
        out.push_str("3\n");
    }
    Ok(out)
}
