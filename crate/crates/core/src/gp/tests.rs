use proptest::prelude::*;

use super::*;

fn mono(c: f64, e: &[f64]) -> PosyMonomial {
    PosyMonomial::new(c, e.to_vec())
}

fn program(names: &[&str], objective: Posynomial, inequalities: Vec<Posynomial>) -> GeometricProgram {
    GeometricProgram {
        var_names: names.iter().map(|s| s.to_string()).collect(),
        objective,
        inequalities,
        equalities: vec![],
    }
}

#[test]
fn single_variable_lower_bound() {
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[-1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective_value - 2.0).abs() < 1e-7);
    assert!((r.assignment[0] - 2.0).abs() < 1e-6);
    assert!(r.kkt_residual <= 1e-6);
}

#[test]
fn optimum_on_a_hyperbola() {
    let gp = program(&["z1", "z2"], vec![mono(1.0, &[1.0, 1.0])], vec![vec![mono(1.0, &[-1.0, -1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective_value - 1.0).abs() < 1e-7);
    assert!((r.assignment[0] * r.assignment[1] - 1.0).abs() < 1e-6);
}

#[test]
fn equality_constraints_are_eliminated() {
    let mut gp = program(&["z1", "z2"], vec![mono(1.0, &[1.0, 0.0]), mono(1.0, &[0.0, 1.0])], vec![]);
    gp.equalities.push(mono(0.25, &[1.0, 1.0]));
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective_value - 4.0).abs() < 1e-6);
}

#[test]
fn infeasible_program_is_detected() {
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(1.0, &[1.0])], vec![mono(2.0, &[-1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Infeasible);
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[0.0])]]);
    assert_eq!(solve_gp(&gp, &SolverSettings::default()).unwrap().status, Status::Infeasible);
}

#[test]
fn tight_feasible_set_without_interior() {
    // z ≤ 1 and 1/z ≤ 1 force z = 1.
    let gp = program(&["z"], vec![mono(3.0, &[2.0])], vec![vec![mono(1.0, &[1.0])], vec![mono(1.0, &[-1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert!(r.is_optimal(), "{r:?}");
    assert!((r.objective_value - 3.0).abs() < 1e-6);
}

#[test]
fn variables_driven_to_zero_are_flagged() {
    let gp = program(&["z", "w"], vec![mono(1.0, &[1.0, 0.0]), mono(1.0, &[0.0, 1.0])], vec![vec![mono(1.0, &[0.0, -1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!(r.numerically_zero[0]);
    assert!(!r.numerically_zero[1]);
    assert!((r.objective_value - 1.0).abs() < 1e-7);
}

#[test]
fn feasibility_only_program() {
    let gp = program(&["a", "b"], vec![], vec![vec![mono(1.0, &[1.0, 0.0]), mono(1.0, &[0.0, 1.0])]]);
    let r = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert_eq!(r.objective_value, 0.0);
    assert!(check_feasible(&gp, &r.assignment, 0.0).unwrap());
}

#[test]
fn check_feasible_examples() {
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[-1.0])]]);
    assert!(!check_feasible(&gp, &[1.0], 1e-7).unwrap());
    assert!(check_feasible(&gp, &[2.0], 1e-7).unwrap());
    assert!(check_feasible(&gp, &[1.0, 2.0], 1e-7).is_err());
}

#[test]
fn solver_is_deterministic() {
    let gp = program(
        &["a", "b", "c"],
        vec![mono(1.0, &[-1.0, 0.5, 0.0]), mono(2.0, &[0.0, 0.0, 1.0])],
        vec![vec![mono(0.3, &[1.0, 0.0, 0.0]), mono(0.4, &[0.0, 1.0, -1.0])], vec![mono(0.5, &[0.0, -1.0, 0.0])]],
    );
    let a = solve_gp(&gp, &SolverSettings::default()).unwrap();
    let b = solve_gp(&gp, &SolverSettings::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn convex_dump_is_json() {
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[-1.0])]]);
    let dump = log_transform(&gp).unwrap().to_json();
    let v: serde_json::Value = serde_json::from_str(&dump).unwrap();
    assert_eq!(v["constraints"][0]["exponents"][0][0], -1.0);
}

#[test]
fn signomial_constraint_condenses() {
    // minimize z subject to 2 - z ≤ 1.
    let sp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[0.0]), mono(-1.0, &[1.0])]]);
    let r = solve_signomial(&sp, &SolverSettings::default(), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!(r.heuristic);
    assert!((r.objective_value - 1.0).abs() < 1e-6);
}

#[test]
fn signomial_without_negatives_matches_gp() {
    let gp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[-1.0])]]);
    let a = solve_gp(&gp, &SolverSettings::default()).unwrap();
    let b = solve_signomial(&gp, &SolverSettings::default(), None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn signed_objective_uses_epigraph() {
    // minimize 1 - z subject to z ≤ 3.
    let sp = program(&["z"], vec![mono(1.0, &[0.0]), mono(-1.0, &[1.0])], vec![vec![mono(1.0 / 3.0, &[1.0])]]);
    let r = solve_signomial(&sp, &SolverSettings::default(), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective_value + 2.0).abs() < 1e-6, "{r:?}");
}

#[test]
fn signomial_phase_one_finds_start() {
    // minimize x subject to 4 - x*y ≤ 1 - ... i.e. x*y ≥ 4, y ≤ 2.
    let sp = program(
        &["x", "y"],
        vec![mono(1.0, &[1.0, 0.0])],
        vec![vec![mono(5.0, &[0.0, 0.0]), mono(-1.0, &[1.0, 1.0])], vec![mono(0.5, &[0.0, 1.0])]],
    );
    let r = solve_signomial(&sp, &SolverSettings::default(), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective_value - 2.0).abs() < 1e-5, "{r:?}");
}

#[test]
fn impossible_signomial_constraint() {
    let sp = program(&["z"], vec![mono(1.0, &[1.0])], vec![vec![mono(2.0, &[0.0])], vec![mono(-1.0, &[1.0])]]);
    let r = solve_signomial(&sp, &SolverSettings::default(), None).unwrap();
    assert_eq!(r.status, Status::Infeasible);
}

fn random_lse() -> impl Strategy<Value = LogSumExp> {
    (1usize..5).prop_flat_map(|terms| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), terms),
            prop::collection::vec(-2.0f64..2.0, terms),
        )
            .prop_map(|(exponents, log_coefficients)| LogSumExp { exponents, log_coefficients })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transformed_constraints_are_convex(f in random_lse(), y in prop::collection::vec(-4.0f64..4.0, 3)) {
        let h = f.hessian(&y);
        let m = nalgebra::DMatrix::from_fn(3, 3, |i, j| h[i][j]);
        let eig = nalgebra::SymmetricEigen::new(m);
        prop_assert!(eig.eigenvalues.min() >= -1e-9);
    }
}

/// Random feasible GPs: every constraint holds at z = 1 with room to spare.
fn random_gp() -> impl Strategy<Value = GeometricProgram> {
    let monomial = |scale: f64| {
        (0.05f64..1.0, prop::collection::vec(-2i32..=2, 3))
            .prop_map(move |(c, e)| mono(c * scale, &e.iter().map(|&x| f64::from(x)).collect::<Vec<_>>()))
    };
    (
        prop::collection::vec(monomial(1.0), 1..4),
        prop::collection::vec(prop::collection::vec(monomial(0.3), 1..3), 1..4),
    )
        .prop_map(|(objective, inequalities)| GeometricProgram {
            var_names: vec!["a".into(), "b".into(), "c".into()],
            objective,
            inequalities,
            equalities: vec![],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dropping_a_constraint_never_raises_the_optimum(gp in random_gp()) {
        let settings = SolverSettings::default();
        let full = solve_gp(&gp, &settings).unwrap();
        prop_assume!(full.is_optimal() && full.objective_value > 1e-100);
        let mut relaxed = gp.clone();
        relaxed.inequalities.pop();
        let r = solve_gp(&relaxed, &settings).unwrap();
        prop_assert!(r.is_optimal(), "{:?} {:?}", r, relaxed);
        prop_assert!(r.objective_value <= full.objective_value * (1.0 + 1e-6) + 1e-12);
        prop_assert!(check_feasible(&gp, &full.assignment, settings.feas_tol).unwrap());
        prop_assert!(full.kkt_residual <= 1e-6);
    }
}
