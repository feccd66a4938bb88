use shellopt::phtspace::{Field, PhtSpace};
use shellopt::shellfea::{Discretization, LoadCase, QuadratureSpec};
use shellopt::shellgeom::{AnalyticSurface, MidSurface};
use shellopt::solver::ShellSolver;
use shellopt::tmesh::HierTMesh;
use std::sync::Arc;

fn supports() -> Vec<(f64, f64)> {
    // mesh-independent support set: 8 intervals per edge
    let mut out = Vec::new();
    for i in 0..=8 {
        let x = i as f64 / 8.0;
        out.push((x, 0.0));
        out.push((x, 1.0));
        if i != 0 && i != 8 {
            out.push((0.0, x));
            out.push((1.0, x));
        }
    }
    out
}

fn deflection(n: usize, h: f64, probe: (f64, f64)) -> f64 {
    let mesh = HierTMesh::tensor(n, n).unwrap();
    let space = Arc::new(PhtSpace::level0(mesh).unwrap());
    let surf = MidSurface::from_analytic(&space, AnalyticSurface::Plate, h).unwrap();
    let loads = LoadCase {
        point_loads: vec![(0.5, 0.5, [0.0, 0.0, -100.0])],
        fixed_points: supports(),
    };
    let mat = Default::default();
    let disc = Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
    let rho = Field::constant(&space, [1.0]);
    let sys = disc.assemble(&rho, &mat, &loads).unwrap();
    let mut solver = ShellSolver::new(disc.block_order.clone());
    let u = solver.solve(&sys.k, &sys.f).unwrap();
    let uf = Field::<5>::from_coeffs(&space, u).unwrap();
    uf.value(probe.0, probe.1).unwrap()[2].abs()
}

fn main() {
    for h in [5.0, 1.0] {
        for probe in [(0.5, 0.5), (0.25, 0.25)] {
            let w8 = deflection(8, h, probe);
            let w16 = deflection(16, h, probe);
            let w32 = deflection(32, h, probe);
            println!(
                "h={:4.1} probe={:?}: w8={:10.6e} w16={:10.6e} w32={:10.6e}  rel(16->32)={:.5}",
                h, probe, w8, w16, w32, (w32 - w16).abs() / w32.abs()
            );
        }
    }
}
