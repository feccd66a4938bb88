use shellopt::driver::{optimize, DriverConfig, Mode};
use shellopt::shellfea::LoadCase;

fn main() {
    let mut cfg = DriverConfig::default();
    cfg.nx = 6;
    cfg.ny = 6;
    cfg.max_iters = 60;
    cfg.tol_ref = 0.05;
    cfg.tol_rcc = 0.01;
    cfg.mode = Mode::Adaptive;
    cfg.max_levels = 2;
    let loads = LoadCase {
        point_loads: vec![(0.5, 0.5, [0.0, 0.0, -100.0])],
        fixed_points: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
    };
    let t0 = std::time::Instant::now();
    let out = optimize(&cfg, &loads, |r: &shellopt::driver::IterationRecord, _: &shellopt::phtspace::Field<1>| {
        if r.iter % 5 == 0 || r.iter < 4 {
            println!(
                "it {:3} lvl {} C {:12.5} V {:8.5} ch {:8.5} rcc {:8.4} cnt {} nb {:5} ne {:4} {:6.3}s",
                r.iter, r.level, r.compliance, r.volume, r.ch, r.rcc, r.count, r.n_basis, r.n_elements, r.seconds
            );
        }
    })
    .unwrap();
    println!(
        "done: converged={} refinements={} iters={} total {:.2}s  V/Vsolid={:.4}",
        out.converged,
        out.n_refinements,
        out.records.len(),
        t0.elapsed().as_secs_f64(),
        out.records.last().unwrap().volume / out.v_solid
    );
}
