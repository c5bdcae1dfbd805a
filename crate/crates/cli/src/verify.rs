use std::f64::consts::PI;

use mbrb::channel::{z_rotation, Unitary2};
use mbrb::gates::{
    byproduct_bits, clifford_group, derandomized_design, measurement_product, pauli_group, two_design_report,
    verify_angle_rows, AngleRow, CLIFFORD_ANGLE_TABLE,
};
use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::config::VerifyToggles;

const TOL: f64 = 1e-10;

/// Deliberate faults for exercising the failure paths.
#[derive(Clone, Copy, Debug, Default)]
pub struct Hooks {
    pub pauli_as_design: bool,
    pub corrupt_table: bool,
}

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn angle_table(hooks: Hooks) -> Check {
    let mut rows: Vec<AngleRow> = CLIFFORD_ANGLE_TABLE.to_vec();
    if hooks.corrupt_table {
        rows[4].quarter_turns[1] = (rows[4].quarter_turns[1] + 1) % 4;
    }
    match verify_angle_rows(&rows) {
        Ok(r) => check("angle table", true, format!("{} rows, max deviation {:.2e}", r.rows.len(), r.max_deviation)),
        Err(e) => check("angle table", false, e.to_string()),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Closed forms of the five design rotations and the fixed gate at φ1 = φ2 = 0.
fn reference_design() -> ([Unitary2; 5], Unitary2) {
    let r3 = 1.0 / 3f64.sqrt();
    let s3 = 3f64.sqrt();
    let sixth = c(1.0 / 6.0, 0.0);
    let u = |m: Matrix2<Complex64>| Unitary2::new(m).expect("reference matrices are unitary");
    let a1 =
        u(Matrix2::new(c(r3, 0.0), -sixth * c(1.0, 1.0) * c(s3, 3.0), sixth * c(1.0, 1.0) * c(3.0, s3), c(-r3, 0.0)));
    let a2 = u(Matrix2::new(c(r3, 0.0), c(r3, r3), c(r3, -r3), c(-r3, 0.0)));
    let a3 = u(Matrix2::new(
        c(0.0, 0.0),
        Complex64::from_polar(1.0, -PI / 4.0),
        Complex64::from_polar(1.0, PI / 4.0),
        c(0.0, 0.0),
    ));
    let h = Unitary2::h();
    let zq = z_rotation(PI / 4.0).expect("finite");
    let zm = z_rotation(r3.acos()).expect("finite");
    ([a1, a2, a3, Unitary2::z(), Unitary2::x()], zq * h * zm * h * zq * h)
}

fn design_matrices() -> Check {
    let d = match derandomized_design(0.0, 0.0) {
        Ok(d) => d,
        Err(e) => return check("design matrices", false, e.to_string()),
    };
    let (reference, q) = reference_design();
    let worst =
        d.a.iter().zip(&reference).map(|(a, r)| a.phase_distance(r)).fold(d.q_gate.phase_distance(&q), f64::max);
    check("design matrices", worst < TOL, format!("max deviation {worst:.2e}"))
}

fn two_designs(hooks: Hooks) -> Vec<Check> {
    let clifford: Vec<Unitary2> = clifford_group().iter().map(|g| g.unitary).collect();
    let design: Vec<Unitary2> = if hooks.pauli_as_design {
        pauli_group().to_vec()
    } else {
        match derandomized_design(0.0, 0.0) {
            Ok(d) => d.elements.to_vec(),
            Err(e) => return vec![check("2-design (derandomized set)", false, e.to_string())],
        }
    };
    [("2-design (Clifford group)", clifford), ("2-design (derandomized set)", design)]
        .into_iter()
        .map(|(name, set)| match two_design_report(&set, 1e-9, 10, 0x2de5_1a9e) {
            Ok(r) => check(
                name,
                r.passed,
                format!(
                    "frame potential {:.12}, off-target {:.1e}, fidelity gap {:.1e}",
                    r.frame_potential, r.max_off_target, r.max_fidelity_gap
                ),
            ),
            Err(e) => check(name, false, e.to_string()),
        })
        .collect()
}

fn byproducts() -> Check {
    let mut mismatches = 0;
    for code in 0..512u32 {
        let n = [(code & 3) as u8, ((code >> 2) & 3) as u8, ((code >> 4) & 3) as u8];
        let m = [((code >> 6) & 1) as u8, ((code >> 7) & 1) as u8, ((code >> 8) & 1) as u8];
        let angles = n.map(|k| f64::from(k) * PI / 2.0);
        let (b1, b2) = byproduct_bits(n, m);
        let predicted = Unitary2::pauli_xz(b1 == 1, b2 == 1) * measurement_product(&angles, &[0, 0, 0]);
        if predicted.phase_distance(&measurement_product(&angles, &m)) > TOL {
            mismatches += 1;
        }
    }
    check("byproduct bits", mismatches == 0, format!("{mismatches} mismatches over 512 combinations"))
}

pub fn run_checks(toggles: VerifyToggles, hooks: Hooks) -> Vec<Check> {
    let mut checks = Vec::new();
    if toggles.angle_table {
        checks.push(angle_table(hooks));
    }
    if toggles.design_matrices {
        checks.push(design_matrices());
    }
    if toggles.two_design {
        checks.extend(two_designs(hooks));
    }
    if toggles.byproducts {
        checks.push(byproducts());
    }
    checks
}
