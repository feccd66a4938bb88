use shellopt::driver::{DriverConfig, GeometrySource};
use shellopt::phtspace::{Field, PhtSpace};
use shellopt::shellfea::{Discretization, LoadCase, QuadratureSpec};
use shellopt::shellgeom::{AnalyticSurface, MidSurface};
use shellopt::solver::ShellSolver;
use shellopt::tmesh::HierTMesh;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let _ = (DriverConfig::default(), GeometrySource::Builtin(AnalyticSurface::Plate));
    for n in [20usize, 40] {
        let mesh = HierTMesh::tensor(n, n).unwrap();
        let space = Arc::new(PhtSpace::level0(mesh).unwrap());
        let surf = MidSurface::from_analytic(&space, AnalyticSurface::Plate, 5.0).unwrap();
        let loads = LoadCase {
            point_loads: vec![(0.5, 0.5, [0.0, 0.0, -100.0])],
            fixed_points: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
        };
        let mat = Default::default();
        let t0 = Instant::now();
        let disc = Discretization::new(&surf, &space, &loads, QuadratureSpec::default(), &mat).unwrap();
        let t_disc = t0.elapsed();
        let rho = Field::constant(&space, [1.0]);
        let t1 = Instant::now();
        let sys = disc.assemble(&rho, &mat, &loads).unwrap();
        let t_asm = t1.elapsed();
        let nnz = sys.k.data.len();
        let mut solver = ShellSolver::new(disc.block_order.clone());
        let t2 = Instant::now();
        let u = solver.solve(&sys.k, &sys.f).unwrap();
        let t_solve = t2.elapsed();
        // second solve with slightly scaled matrix: PCG path
        let rho2 = Field::constant(&space, [0.97]);
        let sys2 = disc.assemble(&rho2, &mat, &loads).unwrap();
        let t3 = Instant::now();
        let _u2 = solver.solve(&sys2.k, &sys2.f).unwrap();
        let t_pcg = t3.elapsed();
        let t4 = Instant::now();
        let _en = disc.element_energies(&u);
        let t_en = t4.elapsed();
        println!(
            "n={:3} dofs={:6} blocks(K)={:8} disc={:6.2}s asm={:5.3}s factor+solve={:6.2}s pcg={:5.3}s energies={:5.3}s stats={:?}",
            n, disc.n_dofs(), nnz, t_disc.as_secs_f64(), t_asm.as_secs_f64(),
            t_solve.as_secs_f64(), t_pcg.as_secs_f64(), t_en.as_secs_f64(), solver.stats()
        );
    }
}
