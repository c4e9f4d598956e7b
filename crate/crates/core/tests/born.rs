use slitlab_core::born::*;
use slitlab_core::field::{ComplexField2D, Grid2D, RealField2D, C64};
use slitlab_core::propagate::{evolve, EvolutionPlan};

fn setup() -> (ComplexField2D, RealField2D) {
    let g = Grid2D::new(32, 32, 16.0, 16.0, -8.0, -8.0).unwrap();
    let u = ComplexField2D::from_fn(&g, |x, y| {
        C64::from_polar((-((x + 2.5).powi(2) + y * y) / 2.0).exp(), 2.0 * x)
    })
    .normalized()
    .unwrap();
    let v = RealField2D::from_fn(&g, |x, y| 5.0 * (-2.0 * x * x - y * y / 2.0).exp());
    (u, v)
}

fn residuals(u: &ComplexField2D, v: &RealField2D, n_steps: usize, iterations: usize) -> Vec<f64> {
    let dt = 1.0 / n_steps as f64;
    let full = evolve(
        u,
        &EvolutionPlan::new(dt, n_steps).with_potential(v.clone()),
    )
    .unwrap();
    let mut s = born_init(u, &EvolutionPlan::new(dt, n_steps))
        .unwrap()
        .with_reference(full.field)
        .unwrap();
    for _ in 0..iterations {
        s = born_step(s, v).unwrap();
    }
    s.residual_history()
}

#[test]
fn fixed_point_defect_is_second_order() {
    let (u, v) = setup();
    let defects: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| {
            let plan = EvolutionPlan::new(1.0 / n as f64, n)
                .with_potential(v.clone())
                .recording(1);
            born_fixed_point_check(&evolve(&u, &plan).unwrap().slab.unwrap(), &v).unwrap()
        })
        .collect();
    for w in defects.windows(2) {
        let r = w[0] / w[1];
        assert!((3.0..5.0).contains(&r), "{defects:?}");
    }
}

#[test]
fn weak_potential_residuals_decrease() {
    let (u, v) = setup();
    let r = residuals(&u, &v.scaled(0.1), 200, 5);
    assert_eq!(r.len(), 5);
    assert!(r[0] < 0.3);
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn residuals_scale_with_coupling() {
    // The n-th iterate misses terms of order λ^{n+1}.
    let (u, v) = setup();
    let a = residuals(&u, &v.scaled(0.02), 200, 1)[0];
    let b = residuals(&u, &v.scaled(0.01), 200, 1)[0];
    assert!((a / b - 4.0).abs() < 0.4, "{}", a / b);
}

#[test]
fn strong_potential_is_flagged() {
    let (u, v) = setup();
    let dt = 1.0 / 200.0;
    let strong = v.scaled(40.0);
    let full = evolve(
        &u,
        &EvolutionPlan::new(dt, 200).with_potential(strong.clone()),
    )
    .unwrap();
    let mut s = born_init(&u, &EvolutionPlan::new(dt, 200))
        .unwrap()
        .with_reference(full.field)
        .unwrap();
    for _ in 0..6 {
        s = born_step(s, &strong).unwrap();
    }
    assert!(s.outside_contraction_regime(), "{:?}", s.residual_history());
}

#[test]
fn recording_stride_must_divide_steps() {
    let (u, _) = setup();
    assert!(born_init(&u, &EvolutionPlan::new(0.01, 10).recording(3)).is_err());
    let s = born_init(&u, &EvolutionPlan::new(0.01, 12).recording(3)).unwrap();
    assert_eq!(s.w0().len(), 5);
    assert!((s.w0().spacing() - 0.03).abs() < 1e-15);
}

#[test]
fn reference_grid_must_match() {
    let (u, _) = setup();
    let other = Grid2D::new(16, 16, 16.0, 16.0, -8.0, -8.0).unwrap();
    let s = born_init(&u, &EvolutionPlan::new(0.01, 4)).unwrap();
    let wrong = ComplexField2D::from_fn(&other, |_, _| C64::new(1.0, 0.0));
    assert!(s.with_reference(wrong).is_err());
}
