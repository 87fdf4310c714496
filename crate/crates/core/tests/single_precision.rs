use rbffd::driver::{run, RunConfig};
use rbffd::geometry::Point2;
use rbffd::rbf::{compute_weights, RbfConfig};

#[test]
fn five_point_cross_in_f32() {
    let nb = [(1.0f32, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)].map(|(x, y)| Point2::new(x * 0.1, y * 0.1));
    let w = compute_weights(Point2::origin(), &nb, 0.0f32, &RbfConfig::default()).unwrap();
    for (got, want) in w.weights.iter().zip([-400.0f32, 100.0, 100.0, 100.0, 100.0]) {
        assert!((got - want).abs() <= 1e-3 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn linear_problem_in_f32() {
    let mut c = RunConfig::<f32>::for_problem("linear").unwrap();
    c.max_steps = 0;
    c.grid_step = 0.02;
    let r = run(&c).unwrap();
    assert!(r[0].e_c < 1e-5, "{}", r[0].e_c);
}

#[test]
fn refinement_in_f32_tracks_f64() {
    let mut c32 = RunConfig::<f32>::for_problem("tp6a").unwrap();
    c32.max_steps = 3;
    c32.grid_step = 0.02;
    let mut c64 = RunConfig::<f64>::for_problem("tp6a").unwrap();
    c64.max_steps = 3;
    c64.grid_step = 0.02;
    let r32 = run(&c32).unwrap();
    let r64 = run(&c64).unwrap();
    assert_eq!(r32[0].n_interior, r64[0].n_interior);
    assert!(((r32[0].e_c as f64) - r64[0].e_c).abs() <= 1e-3 * r64[0].e_c);
    assert!(r32.last().unwrap().e_c < r32[0].e_c);
}
