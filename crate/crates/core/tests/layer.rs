use mpbl::check::{erfc_oracle, manufactured_order, ERFC_TOL, MMS_ORDER, MMS_ORDER_SLACK};
use mpbl::grid::{Grid, GridSpec, TimeGrid};
use mpbl::layer::heat_solve;
use mpbl::ops::Ops;

#[test]
fn step_boundary_matches_erfc() {
    let r = erfc_oracle(512, 0.0).unwrap();
    assert!(r.max_error <= ERFC_TOL, "max erfc error {}", r.max_error);
    assert!(r.pass(), "{r:?}");
}

#[test]
fn perturbed_weights_fail_the_erfc_mass() {
    let r = erfc_oracle(512, 1e-3).unwrap();
    assert!(!r.pass(), "{r:?}");
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let order = manufactured_order().unwrap();
    assert!((order - MMS_ORDER).abs() <= MMS_ORDER_SLACK, "order {order}");
}

#[test]
fn source_free_solutions_obey_the_maximum_principle() {
    let o = Ops::new(Grid::new(GridSpec { n_x: 4, n_y: 16, n_z: 200, z_max: 20.0, ..GridSpec::default() }).unwrap());
    let wall = |t: f64| (0..4).map(|i| (o.grid.x.node(i) + 3.0 * t).sin() * (1.0 - (-5.0 * t).exp())).collect();
    let out = heat_solve(&o, TimeGrid::new(1.0, 400).unwrap(), 1, 2, &wall, &|_| None).unwrap();
    for (_, f) in &out {
        assert!(f.max_abs() <= 1.0 + 1e-9);
    }
}

#[test]
fn zero_wall_data_stays_zero() {
    let o = Ops::new(Grid::new(GridSpec { n_x: 4, n_y: 16, n_z: 100, ..GridSpec::default() }).unwrap());
    let out = heat_solve(&o, TimeGrid::new(0.5, 50).unwrap(), 10, 2, &|_| vec![0.0; 4], &|_| None).unwrap();
    assert!(out.iter().all(|(_, f)| f.max_abs() == 0.0));
}
