use looptrilat::geometry::sample_pseudo_generic;
use looptrilat::measurement::{build_trilateration_ensemble, MeasurementMode};
use looptrilat::reconstruction::{match_to_truth, reconstruct, ReconOpts};

fn run(n: usize, d: usize, mode: MeasurementMode, b: u32, extra: usize, seed: u64, restricted: bool) {
    let t0 = std::time::Instant::now();
    let truth = sample_pseudo_generic::<f64>(n, d, seed, 1.0).unwrap();
    let ensemble = build_trilateration_ensemble(n, d, mode, extra, b, seed).unwrap();
    let data = ensemble.evaluate(&truth, b, seed).unwrap();
    let opts = ReconOpts { restricted_3d: restricted, ..ReconOpts::default() };
    match reconstruct(&data, mode, &opts) {
        Ok(result) => {
            let report = match_to_truth(&result.configuration, &truth, 1e-6);
            let rmsd = report.map(|r| r.rmsd).unwrap_or(f64::NAN);
            println!(
                "n={n} d={d} {mode} b={b} extra={extra} seed={seed}: got {} pts, rmsd {:.2e}, bases {} ({} accepted), growth {}, {:?}",
                result.n,
                rmsd,
                result.diagnostics.base_tuples_tested,
                result.diagnostics.base_accepted,
                result.diagnostics.growth_tuples_tested,
                t0.elapsed()
            );
        }
        Err(e) => println!("n={n} d={d} {mode} b={b} seed={seed}: ERROR {e} after {:?}", t0.elapsed()),
    }
}

fn main() {
    for seed in [0u64, 1, 2] {
        run(8, 2, MeasurementMode::Loop, 3, 3, seed, false);
    }
    for seed in [0u64, 1, 2] {
        run(8, 2, MeasurementMode::Path, 3, 3, seed, false);
    }
    for seed in [0u64, 1] {
        run(5, 3, MeasurementMode::Loop, 2, 0, seed, true);
        run(6, 3, MeasurementMode::Loop, 2, 0, seed, true);
    }
}
