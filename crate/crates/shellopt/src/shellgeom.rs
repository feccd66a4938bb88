//! Mid-surface geometry, local frames, and the volumetric shell map.
//!
//! The mid-surface is a PHT-spline field with three components over the fixed
//! level-0 geometry space; analysis meshes refine independently of it. Local
//! frames follow the usual shell convention: `v3` is the unit normal, `v1` is
//! the normalized cross product of `v3` with the global axis least parallel
//! to it (preferring x, then y, then z on ties), and `v2 = v1 x v3`. Note the
//! operand order: {v1, v2, v3} is left-handed (`v1 x v2 = -v3`), which fixes
//! the sign convention of the rotation DOFs.

use crate::error::GeomError;
use crate::phtspace::{Field, PhtSpace};
use crate::tmesh::ElementId;
use nalgebra::{Matrix3, Matrix4, RowVector4, Vector3};
use std::sync::Arc;

/// Analytic jet of a surface at a parameter point: position and derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceJet {
    pub p: Vector3<f64>,
    pub ds: Vector3<f64>,
    pub dt: Vector3<f64>,
    pub dst: Vector3<f64>,
}

/// Built-in analytic mid-surfaces used as stand-ins for the example shells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticSurface {
    /// Unit flat plate: S = (s, t, 0).
    Plate,
    /// Cylindrical panel of radius 1 sweeping a 90-degree arc.
    CylPanel,
    /// Half cylinder: S = (cos pi s, sin pi s, t).
    HalfCylinder,
    /// Hyperbolic paraboloid z = 0.8 (s - 1/2)(t - 1/2).
    Hypar,
    /// Spherical cap of radius 1 over the unit square.
    SphericalCap,
}

impl AnalyticSurface {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "plate" => Some(Self::Plate),
            "cyl-panel" => Some(Self::CylPanel),
            "half-cylinder" => Some(Self::HalfCylinder),
            "hypar" => Some(Self::Hypar),
            "spherical-cap" => Some(Self::SphericalCap),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Plate => "plate",
            Self::CylPanel => "cyl-panel",
            Self::HalfCylinder => "half-cylinder",
            Self::Hypar => "hypar",
            Self::SphericalCap => "spherical-cap",
        }
    }

    pub fn jet(&self, s: f64, t: f64) -> SurfaceJet {
        let zero = Vector3::zeros();
        match self {
            Self::Plate => SurfaceJet {
                p: Vector3::new(s, t, 0.0),
                ds: Vector3::new(1.0, 0.0, 0.0),
                dt: Vector3::new(0.0, 1.0, 0.0),
                dst: zero,
            },
            Self::CylPanel => {
                let phi_max = std::f64::consts::FRAC_PI_2;
                let phi = (s - 0.5) * phi_max;
                SurfaceJet {
                    p: Vector3::new(phi.sin(), t, phi.cos()),
                    ds: Vector3::new(phi_max * phi.cos(), 0.0, -phi_max * phi.sin()),
                    dt: Vector3::new(0.0, 1.0, 0.0),
                    dst: zero,
                }
            }
            Self::HalfCylinder => {
                let a = std::f64::consts::PI;
                let phi = a * s;
                SurfaceJet {
                    p: Vector3::new(phi.cos(), phi.sin(), t),
                    ds: Vector3::new(-a * phi.sin(), a * phi.cos(), 0.0),
                    dt: Vector3::new(0.0, 0.0, 1.0),
                    dst: zero,
                }
            }
            Self::Hypar => {
                let c = 0.8;
                SurfaceJet {
                    p: Vector3::new(s, t, c * (s - 0.5) * (t - 0.5)),
                    ds: Vector3::new(1.0, 0.0, c * (t - 0.5)),
                    dt: Vector3::new(0.0, 1.0, c * (s - 0.5)),
                    dst: Vector3::new(0.0, 0.0, c),
                }
            }
            Self::SphericalCap => {
                let r2 = 1.0;
                let p = s - 0.5;
                let q = t - 0.5;
                let z = (r2 - p * p - q * q).sqrt();
                SurfaceJet {
                    p: Vector3::new(s, t, z),
                    ds: Vector3::new(1.0, 0.0, -p / z),
                    dt: Vector3::new(0.0, 1.0, -q / z),
                    dst: Vector3::new(0.0, 0.0, -p * q / (z * z * z)),
                }
            }
        }
    }
}

/// Local orthonormal frame and its parametric derivatives.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub v3: Vector3<f64>,
    pub dv1_ds: Vector3<f64>,
    pub dv1_dt: Vector3<f64>,
    pub dv2_ds: Vector3<f64>,
    pub dv2_dt: Vector3<f64>,
    pub dv3_ds: Vector3<f64>,
    pub dv3_dt: Vector3<f64>,
}

/// Mid-surface: geometry field over the fixed level-0 space plus thickness.
#[derive(Debug, Clone)]
pub struct MidSurface {
    geom: Field<3>,
    pub thickness: f64,
}

impl MidSurface {
    pub fn new(geom: Field<3>, thickness: f64) -> Self {
        MidSurface { geom, thickness }
    }

    /// Fits the analytic surface on the given geometry space by Hermite
    /// interpolation of `[S, S_s, S_t, S_st]` at every basis vertex.
    pub fn from_analytic(
        space: &Arc<PhtSpace>,
        surface: AnalyticSurface,
        thickness: f64,
    ) -> Result<Self, GeomError> {
        let mesh = space.mesh();
        let mut coeffs = vec![0.0; space.dim() * 3];
        for v in mesh.basis_vertices() {
            let (sv, tv) = mesh.coord_to_f64(mesh.vertex(v).coord);
            let jet = surface.jet(sv, tv);
            let ids = space.vertex_basis(v).expect("basis vertex");
            let mut g = Matrix4::zeros();
            for (i, &b) in ids.iter().enumerate() {
                let row = space.basis_geometric_info(b, v).map_err(GeomError::from)?;
                for (j, &x) in row.iter().enumerate() {
                    g[(i, j)] = x;
                }
            }
            let ginv = g
                .try_inverse()
                .ok_or(crate::error::SpaceError::SingularGeometricInfo(v.idx()))?;
            for c in 0..3 {
                let l = RowVector4::new(jet.p[c], jet.ds[c], jet.dt[c], jet.dst[c]);
                let p = l * ginv;
                for (i, &b) in ids.iter().enumerate() {
                    coeffs[b.idx() * 3 + c] = p[i];
                }
            }
        }
        let geom = Field::from_coeffs(space, coeffs).map_err(GeomError::from)?;
        Ok(MidSurface::new(geom, thickness))
    }

    #[inline]
    pub fn geometry(&self) -> &Field<3> {
        &self.geom
    }

    /// Mid-surface position.
    pub fn position(&self, s: f64, t: f64) -> Result<Vector3<f64>, GeomError> {
        let v = self
            .geom
            .value(s, t)
            .map_err(crate::error::SpaceError::from)
            .map_err(GeomError::from)?;
        Ok(Vector3::from_column_slice(&v))
    }

    /// Local frame with analytic parametric derivatives.
    pub fn frame(&self, s: f64, t: f64) -> Result<LocalFrame, GeomError> {
        let e = self
            .geom
            .space()
            .mesh()
            .element_at(s, t)
            .map_err(crate::error::SpaceError::from)?;
        self.frame_in(e, s, t)
    }

    /// Same as [`MidSurface::frame`] with the containing element known.
    pub fn frame_in(&self, e: ElementId, s: f64, t: f64) -> Result<LocalFrame, GeomError> {
        let jet = self.geom.eval_jet_in(e, s, t);
        let s_s = Vector3::from_column_slice(&jet.ds);
        let s_t = Vector3::from_column_slice(&jet.dt);
        let s_ss = Vector3::from_column_slice(&jet.dss);
        let s_st = Vector3::from_column_slice(&jet.dst);
        let s_tt = Vector3::from_column_slice(&jet.dtt);

        let w = s_s.cross(&s_t);
        let wn = w.norm();
        if wn < 1e-12 {
            return Err(GeomError::DegenerateSurface(s, t));
        }
        let v3 = w / wn;
        let dw_ds = s_ss.cross(&s_t) + s_s.cross(&s_st);
        let dw_dt = s_st.cross(&s_t) + s_s.cross(&s_tt);
        let dv3_ds = (dw_ds - v3 * v3.dot(&dw_ds)) / wn;
        let dv3_dt = (dw_dt - v3 * v3.dot(&dw_dt)) / wn;

        // Global axis least parallel to the normal, preferring x, then y, then z.
        let mut axis = 0;
        for k in 1..3 {
            if v3[k].abs() < v3[axis].abs() {
                axis = k;
            }
        }
        let mut a = Vector3::zeros();
        a[axis] = 1.0;

        let y = v3.cross(&a);
        let yn = y.norm();
        let v1 = y / yn;
        let dy_ds = dv3_ds.cross(&a);
        let dy_dt = dv3_dt.cross(&a);
        let dv1_ds = (dy_ds - v1 * v1.dot(&dy_ds)) / yn;
        let dv1_dt = (dy_dt - v1 * v1.dot(&dy_dt)) / yn;

        let v2 = v1.cross(&v3);
        let dv2_ds = dv1_ds.cross(&v3) + v1.cross(&dv3_ds);
        let dv2_dt = dv1_dt.cross(&v3) + v1.cross(&dv3_dt);

        Ok(LocalFrame {
            v1,
            v2,
            v3,
            dv1_ds,
            dv1_dt,
            dv2_ds,
            dv2_dt,
            dv3_ds,
            dv3_dt,
        })
    }

    /// Volumetric shell map `X = S + zeta (h/2) v3` with its Jacobian
    /// (rows are the derivatives with respect to `s`, `t`, `zeta`).
    pub fn shell_map(
        &self,
        s: f64,
        t: f64,
        zeta: f64,
    ) -> Result<(Vector3<f64>, Matrix3<f64>, f64), GeomError> {
        let e = self
            .geom
            .space()
            .mesh()
            .element_at(s, t)
            .map_err(crate::error::SpaceError::from)?;
        self.shell_map_in(e, s, t, zeta)
    }

    pub fn shell_map_in(
        &self,
        e: ElementId,
        s: f64,
        t: f64,
        zeta: f64,
    ) -> Result<(Vector3<f64>, Matrix3<f64>, f64), GeomError> {
        let jet = self.geom.eval_jet_in(e, s, t);
        let frame = self.frame_in(e, s, t)?;
        let half = 0.5 * self.thickness;
        let pos = Vector3::from_column_slice(&jet.value);
        let x = pos + frame.v3 * (zeta * half);
        let row_s = Vector3::from_column_slice(&jet.ds) + frame.dv3_ds * (zeta * half);
        let row_t = Vector3::from_column_slice(&jet.dt) + frame.dv3_dt * (zeta * half);
        let row_z = frame.v3 * half;
        let j = Matrix3::from_rows(&[row_s.transpose(), row_t.transpose(), row_z.transpose()]);
        let det = j.determinant();
        let scale = row_s.norm() * row_t.norm() * row_z.norm();
        if det.abs() < 1e-14 * scale.max(1e-300) {
            return Err(GeomError::SingularJacobian(s, t, zeta));
        }
        Ok((x, j, det))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phtspace::PhtSpace;
    use crate::tmesh::HierTMesh;

    fn surface(kind: AnalyticSurface, n: usize, h: f64) -> MidSurface {
        let mesh = HierTMesh::tensor(n, n).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        MidSurface::from_analytic(&space, kind, h).unwrap()
    }

    #[test]
    fn flat_plate_is_exact() {
        let surf = surface(AnalyticSurface::Plate, 3, 5.0);
        let p = surf.position(0.5, 0.5).unwrap();
        assert!((p - Vector3::new(0.5, 0.5, 0.0)).norm() < 1e-10);
        let p2 = surf.position(0.37, 0.82).unwrap();
        assert!((p2 - Vector3::new(0.37, 0.82, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn plate_frame_and_derivatives() {
        let surf = surface(AnalyticSurface::Plate, 2, 5.0);
        let f = surf.frame(0.3, 0.6).unwrap();
        assert!((f.v3 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        for d in [f.dv1_ds, f.dv1_dt, f.dv2_ds, f.dv2_dt, f.dv3_ds, f.dv3_dt] {
            assert!(d.norm() < 1e-10);
        }
    }

    #[test]
    fn half_cylinder_normal_is_radial() {
        let surf = surface(AnalyticSurface::HalfCylinder, 16, 1.0);
        for &(s, t) in &[(0.2, 0.5), (0.45, 0.1), (0.7, 0.9)] {
            let f = surf.frame(s, t).unwrap();
            let phi = std::f64::consts::PI * s;
            let radial = Vector3::new(phi.cos(), phi.sin(), 0.0);
            assert!(
                (f.v3 - radial).norm() < 1e-4,
                "normal {:?} vs radial {:?}",
                f.v3,
                radial
            );
        }
    }

    #[test]
    fn frame_orthonormality() {
        for kind in [
            AnalyticSurface::CylPanel,
            AnalyticSurface::Hypar,
            AnalyticSurface::SphericalCap,
        ] {
            let surf = surface(kind, 8, 1.0);
            for k in 0..100 {
                let s = (0.173 * k as f64 + 0.04) % 1.0;
                let t = (0.311 * k as f64 + 0.02) % 1.0;
                let f = surf.frame(s, t).unwrap();
                assert!((f.v1.norm() - 1.0).abs() < 1e-12);
                assert!((f.v2.norm() - 1.0).abs() < 1e-12);
                assert!((f.v3.norm() - 1.0).abs() < 1e-12);
                assert!(f.v1.dot(&f.v2).abs() < 1e-12);
                assert!(f.v2.dot(&f.v3).abs() < 1e-12);
                assert!(f.v3.dot(&f.v1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_derivatives_match_finite_differences() {
        let surf = surface(AnalyticSurface::CylPanel, 8, 1.0);
        let h = 1e-5;
        for &(s, t) in &[(0.3, 0.4), (0.6, 0.7), (0.22, 0.81)] {
            let f = surf.frame(s, t).unwrap();
            let fp = surf.frame(s + h, t).unwrap();
            let fm = surf.frame(s - h, t).unwrap();
            for (analytic, plus, minus) in [
                (f.dv1_ds, fp.v1, fm.v1),
                (f.dv2_ds, fp.v2, fm.v2),
                (f.dv3_ds, fp.v3, fm.v3),
            ] {
                let fd = (plus - minus) / (2.0 * h);
                // absolute floor covers near-zero derivatives where central
                // differences only produce rounding noise
                let denom = analytic.norm().max(1e-2);
                assert!(
                    (analytic - fd).norm() / denom < 1e-6,
                    "frame derivative mismatch at ({}, {}): {:?} vs {:?}",
                    s,
                    t,
                    analytic,
                    fd
                );
            }
        }
    }

    #[test]
    fn plate_shell_map_jacobian() {
        let surf = surface(AnalyticSurface::Plate, 2, 5.0);
        let (x, j, det) = surf.shell_map(0.3, 0.3, 0.5).unwrap();
        assert!((det - 2.5).abs() < 1e-10);
        assert!((x - Vector3::new(0.3, 0.3, 1.25)).norm() < 1e-10);
        assert!((j - Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.5))).norm() < 1e-10);
        // zeta = 0 returns the mid-surface
        let (x0, _, _) = surf.shell_map(0.3, 0.3, 0.0).unwrap();
        assert!((x0 - Vector3::new(0.3, 0.3, 0.0)).norm() < 1e-12);
        // symmetric through the thickness on a plate
        let (_, _, dp) = surf.shell_map(0.3, 0.3, 0.8).unwrap();
        let (_, _, dm) = surf.shell_map(0.3, 0.3, -0.8).unwrap();
        assert_eq!(dp, dm);
    }

    #[test]
    fn sum_collapse_of_thickness_term() {
        // sum_i (h/2) N_i equals h/2 by partition of unity.
        let surf = surface(AnalyticSurface::Hypar, 4, 2.0);
        let space = surf.geometry().space().clone();
        for &(s, t) in &[(0.21, 0.43), (0.77, 0.18)] {
            let e = space.mesh().element_at(s, t).unwrap();
            let rect = space.mesh().element(e).rect;
            let (s0, t0) = space.mesh().coord_to_f64((rect.s0, rect.t0));
            let (ds, dt) = space.mesh().denominators();
            let u = (s - s0) / (rect.width() as f64 / ds as f64);
            let w = (t - t0) / (rect.height() as f64 / dt as f64);
            let sum: f64 = space.basis_values_at(e, u, w).iter().map(|(_, v)| v).sum();
            let h = surf.thickness;
            assert!((sum * 0.5 * h - 0.5 * h).abs() < 1e-12);
        }
    }
}
