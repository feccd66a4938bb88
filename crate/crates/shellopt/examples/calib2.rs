use shellopt::phtspace::{Field, PhtSpace};
use shellopt::shellfea::{Discretization, LoadCase, QuadratureSpec};
use shellopt::shellgeom::{AnalyticSurface, MidSurface};
use shellopt::solver::ShellSolver;
use shellopt::tmesh::HierTMesh;
use std::sync::Arc;

fn deflection(n: usize, h: f64, delta: f64) -> f64 {
    let mesh = HierTMesh::tensor(n, n).unwrap();
    let space = Arc::new(PhtSpace::level0(mesh).unwrap());
    let surf = MidSurface::from_analytic(&space, AnalyticSurface::Plate, h).unwrap();
    let g = [0.0, 0.0, -25.0];
    let loads = LoadCase {
        point_loads: vec![
            (0.5 - delta, 0.5 - delta, g),
            (0.5 + delta, 0.5 - delta, g),
            (0.5 - delta, 0.5 + delta, g),
            (0.5 + delta, 0.5 + delta, g),
        ],
        fixed_points: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
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
    for h in [5.0, 1.0] {
        for delta in [0.125, 0.25] {
            let w8 = deflection(8, h, delta);
            let w16 = deflection(16, h, delta);
            let w32 = deflection(32, h, delta);
            println!(
                "h={:4.1} d={:5.3}: w8={:10.6e} w16={:10.6e} w32={:10.6e}  rel(16->32)={:.5}",
                h, delta, w8, w16, w32, (w32 - w16).abs() / w32.abs()
            );
        }
    }
}
