use std::sync::Arc;

use garrote::data::{sample_mask, shepp_logan, synth_signal, SignalSpec};
use garrote::experiments::report::{read_sweeps_csv, sweep_rows, write_sweeps_csv};
use garrote::experiments::{
    fov_mse, rel_error, run_resampling_experiment, sweep, CtSetup, Grids, MethodKind, ResamplingConfig, Scale,
    SoundTask,
};
use garrote::operators::{compose, make_subsample_operator, CtGeometry, Sinogram};
use garrote::optim::OptConfig;
use garrote::raster::Image;
use garrote::solvers::{reconstruct, solve, Basis, Method, Solution, SparseProblem};
use garrote::transforms::DctBasis;

fn short(iters: usize) -> OptConfig {
    OptConfig {
        max_iters: iters,
        ..OptConfig::default()
    }
}

#[test]
fn resampling_pipeline_fills_in_missing_samples() {
    let x = synth_signal(&SignalSpec::new(256, 2000.0).unwrap());
    let mask = sample_mask(x.len(), 0.5, 3).unwrap();
    let observed: Vec<f64> = mask.observed().iter().map(|&i| x[i]).collect();
    let basis = DctBasis::new(x.len()).unwrap();
    let theta = compose(Arc::new(make_subsample_operator(mask.clone()).unwrap()), &basis).unwrap();
    let problem = SparseProblem::new(Arc::new(theta), observed).unwrap();
    let sol = solve(&problem, &Method::lasso(0.05).unwrap(), &OptConfig::default().with_seed(1)).unwrap();
    let xhat = reconstruct(&sol, Basis::Dct(&basis)).unwrap();
    let missing = mask.missing();
    let truth: Vec<f64> = missing.iter().map(|&i| x[i]).collect();
    let guess: Vec<f64> = missing.iter().map(|&i| xhat[i]).collect();
    assert!(rel_error(&truth, &guess).unwrap() < 0.5);

    let json = sol.to_json().unwrap();
    let back: Solution = serde_json::from_str(&json).unwrap();
    assert_eq!(back, sol);
}

#[test]
fn sweep_does_not_depend_on_worker_count() {
    let x = synth_signal(&SignalSpec::new(128, 2000.0).unwrap());
    let task = SoundTask::Resampling { ratio: 0.4 };
    let grid = [-6.0, -3.0, -1.0];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&x, &task, MethodKind::Vg, &grid, 3, 11, &short(200)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sweep_csv_round_trips() {
    let x = synth_signal(&SignalSpec::new(128, 2000.0).unwrap());
    let cfg = ResamplingConfig {
        ratios: vec![0.3],
        trials: 2,
        grids: Grids {
            lasso: vec![0.01, 0.1],
            vg: vec![-4.0, -2.0],
        },
        opt: short(100),
        ..ResamplingConfig::preset(Scale::Desk)
    };
    let report = run_resampling_experiment(&x, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweeps.csv");
    write_sweeps_csv(&report, &path).unwrap();
    assert_eq!(read_sweeps_csv(&path).unwrap(), sweep_rows(&report));
}

#[test]
fn ct_pipeline_beats_the_empty_image() {
    let image = shepp_logan(32).unwrap();
    let setup = CtSetup::new(&image, CtGeometry::new(32, 24).unwrap()).unwrap();
    let zero = fov_mse(setup.truth(), &Image::zeros(32)).unwrap();
    let fbp = setup.fbp().unwrap();
    let lasso = setup.solve(&Method::lasso(0.1).unwrap(), &short(1000)).unwrap();
    assert!(fbp.mse < 0.5 * zero, "fbp {} zero {zero}", fbp.mse);
    assert!(lasso.mse < 0.5 * zero, "lasso {} zero {zero}", lasso.mse);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sino.bin");
    setup.sinogram().write_binary(&path).unwrap();
    assert_eq!(&Sinogram::read_binary(&path).unwrap(), setup.sinogram());
}
