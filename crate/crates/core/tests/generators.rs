//! Each action's infinitesimal generator, read off by differentiating the
//! point map at the identity, lies in the computed algebra exactly when the
//! action is listed for that exponent.

use lpsym_core::actions::GroupAction;
use lpsym_core::classify::classify;
use lpsym_core::exact::{int, Rat};
use lpsym_core::prolongation::VectorFieldAnsatz;
use lpsym_core::verify::{listed_symmetry, ACTION_IDS};

/// Generator of each action family at n = 2 along the first axis.
fn generator(id: &str) -> VectorFieldAnsatz {
    let f = |xi: [&str; 2], phi: &str| VectorFieldAnsatz::parse(2, &xi, phi).unwrap();
    match id {
        "g1" => f(["-x2", "x1"], "0"),
        "g2" => f(["0", "0"], "u"),
        "g3" => f(["x1^2 + 1", "x1*x2"], "x1*u"),
        "g4" => f(["0", "0"], "1"),
        "g5" => f(["0", "0"], "x1"),
        "g6" => f(["x1", "-x2"], "0"),
        "g7" => f(["x1", "0"], "1/3*u"),
        "g8" => f(["1", "0"], "0"),
        "g9" => f(["x1^2", "x1*x2"], "x1*u"),
        _ => unreachable!(),
    }
}

fn action(id: &str, t: f64) -> GroupAction {
    // g2 is parameterized multiplicatively
    let eps = if id == "g2" { t.exp() } else { t };
    GroupAction::from_id(id, 2, 0, eps, None).unwrap()
}

#[test]
fn generators_are_derivatives_of_the_actions() {
    let points = [([0.3, -0.7], 1.4), ([-1.1, 0.2], 0.6), ([0.5, 0.9], 2.0)];
    let h = 1e-5;
    for id in ACTION_IDS {
        let v = generator(id);
        let mut values = vec![0.0; v.table().len()];
        for (x, u) in points {
            values[..2].copy_from_slice(&x);
            values[2] = u;
            let (yp, vp) = action(id, h).apply(&x, u).unwrap();
            let (ym, vm) = action(id, -h).apply(&x, u).unwrap();
            for i in 0..2 {
                let fd = (yp[i] - ym[i]) / (2.0 * h);
                assert!(
                    (fd - v.xi()[i].eval_f64(&values)).abs() < 1e-8,
                    "{id} xi{i}"
                );
            }
            let fd = (vp - vm) / (2.0 * h);
            assert!((fd - v.phi().eval_f64(&values)).abs() < 1e-8, "{id} phi");
        }
    }
}

#[test]
fn generators_belong_exactly_to_listed_exponents() {
    let exponents: [Rat; 5] = [int(3), int(1), int(-3), int(4), int(-2)];
    for p in &exponents {
        let basis = classify(2, p, 3).unwrap();
        for id in ACTION_IDS {
            assert_eq!(
                basis.contains(&generator(id)),
                listed_symmetry(id, 2, p),
                "{id} at p = {p}"
            );
        }
    }
}
