use shellopt::phtspace::{Field, PhtSpace};
use shellopt::shellfea::{Discretization, LoadCase, QuadratureSpec};
use shellopt::shellgeom::{AnalyticSurface, MidSurface};
use shellopt::solver::ShellSolver;
use shellopt::tmesh::HierTMesh;
use std::sync::Arc;

fn supports() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..=16 {
        let x = i as f64 / 16.0;
        out.push((x, 0.0));
        out.push((x, 1.0));
        if i != 0 && i != 16 {
            out.push((0.0, x));
            out.push((1.0, x));
        }
    }
    out
}

fn patch_loads(k: usize) -> Vec<(f64, f64, [f64; 3])> {
    let mut out = Vec::new();
    let per = 100.0 / (k * k) as f64;
    for i in 0..k {
        for j in 0..k {
            let s = 0.25 + 0.5 * i as f64 / (k - 1) as f64;
            let t = 0.25 + 0.5 * j as f64 / (k - 1) as f64;
            out.push((s, t, [0.0, 0.0, -per]));
        }
    }
    out
}

fn deflection(n: usize, h: f64, k: usize) -> f64 {
    let mesh = HierTMesh::tensor(n, n).unwrap();
    let space = Arc::new(PhtSpace::level0(mesh).unwrap());
    let surf = MidSurface::from_analytic(&space, AnalyticSurface::Plate, h).unwrap();
    let loads = LoadCase {
        point_loads: patch_loads(k),
        fixed_points: supports(),
    };
    let mat = Default::default();
    let disc = Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
    let rho = Field::constant(&space, [1.0]);
    let sys = disc.assemble(&rho, &mat, &loads).unwrap();
    let mut solver = ShellSolver::new(disc.block_order.clone());
    let u = solver.solve(&sys.k, &sys.f).unwrap();
    let uf = Field::<5>::from_coeffs(&space, u).unwrap();
    uf.value(0.5, 0.5).unwrap()[2].abs()
}

fn main() {
    let h = 5.0;
    for k in [8usize, 12] {
        let w16 = deflection(16, h, k);
        let w24 = deflection(24, h, k);
        let w32 = deflection(32, h, k);
        println!(
            "k={:2} : w16={:10.6e} w24={:10.6e} w32={:10.6e}  rel(16->32)={:.5} rel(24->32)={:.5}",
            k, w16, w24, w32,
            (w32 - w16).abs() / w32.abs(),
            (w32 - w24).abs() / w32.abs()
        );
    }
}
