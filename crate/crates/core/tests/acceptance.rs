//! Acceptance criteria at the reference setting M = 6, N = 12, a = 0.25,
//! b = 0.75, beta = 1. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ballslep::basis::{basis_field_eval, dot, synthesize, BallPoint};
use ballslep::locmat::{assemble, entry, Region};
use ballslep::quadrature::{tensor_integrate_cone, TensorOrders};
use ballslep::rotation::{mat_vec, rotate_coeffs, transpose, EulerAngles};
use ballslep::slepian::{classify, energy_ratio, region_gram, shannon_number, solve, SlepianBasis};
use ballslep::{
    BallGeometry, Bandlimit, BasisIndex, FieldType, LocalisationMatrix, QuadratureSpec, SystemId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    bandlimit: Bandlimit,
    geom: BallGeometry,
    spec: QuadratureSpec,
}

impl Setup {
    fn new() -> Self {
        Self {
            bandlimit: Bandlimit::new(6, 12).unwrap(),
            geom: BallGeometry::unit(),
            spec: QuadratureSpec::default(),
        }
    }

    fn cone(&self, theta_deg: f64) -> Region {
        Region::new(0.25, 0.75, theta_deg.to_radians(), &self.geom).unwrap()
    }
}

struct Solved {
    sys: SystemId,
    matrix: LocalisationMatrix,
    basis: SlepianBasis,
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn shannon_table(s: &Setup) -> Outcome {
    let expected = [
        (SystemId::I, [20.0, 54.0, 104.0, 169.0]),
        (SystemId::II, [22.0, 62.0, 119.0, 193.0]),
        (SystemId::III, [21.0, 57.0, 109.0, 177.0]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (sys, want) in expected {
        let mut got = Vec::new();
        for (theta, w) in [15.0, 25.0, 35.0, 45.0].iter().zip(want) {
            let v = shannon_number(sys, &s.bandlimit, &s.cone(*theta), &s.geom, &s.spec)
                .map_err(|e| e.to_string())?;
            ok &= (v.round() - w).abs() <= 1.0;
            got.push(format!("{v:.2}"));
        }
        parts.push(format!("{sys}: [{}]", got.join(", ")));
    }
    check(ok, parts.join("; "))
}

fn dimensions(solved: &[Solved]) -> Outcome {
    let k = &solved[0].matrix;
    let (p, q) = (k.normal_block().dim(), k.tangential_block().dim());
    check(
        p == 1183 && q == 2352 && k.dim() == 3535,
        format!("P {p}^2, Q {q}^2, Z {}", k.dim()),
    )
}

fn nearest(values: &[f64], target: f64) -> f64 {
    values
        .iter()
        .map(|v| (v - target).abs())
        .fold(f64::INFINITY, f64::min)
}

fn figure_eigenvalues(solved: &[Solved]) -> Outcome {
    let targets = [
        (SystemId::I, 0.999056, 0.999123),
        (SystemId::II, 0.996101, 0.996101),
        (SystemId::III, 0.998982, 0.998987),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (sol, (sys, tp, tq)) in solved.iter().zip(targets) {
        assert_eq!(sol.sys, sys);
        let (mut normal, mut tangential) = (Vec::new(), Vec::new());
        for k in 0..sol.basis.len() {
            if sol.basis.is_normal(k) {
                normal.push(sol.basis.functions[k].lambda);
            } else {
                tangential.push(sol.basis.functions[k].lambda);
            }
        }
        let (dp, dq) = (nearest(&normal, tp), nearest(&tangential, tq));
        ok &= dp <= 2e-3 && dq <= 2e-3;
        parts.push(format!(
            "{sys}: top P {:.6} (dist {dp:.1e}), top Q {:.6} (dist {dq:.1e})",
            normal[0], tangential[0]
        ));
    }
    check(ok, parts.join("; "))
}

fn containment(solved: &[Solved]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for sol in solved {
        let vals = sol.basis.eigenvalues();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gap = (sol.basis.eigenvalue_sum() - sol.matrix.trace()).abs();
        let z = vals.len() as f64;
        ok &= lo >= -1e-8 && hi <= 1.0 + 1e-8 && gap <= 1e-8 * z;
        parts.push(format!(
            "{}: [{lo:.2e}, {hi:.9}], |sum - trace| {gap:.1e}",
            sol.sys
        ));
    }
    check(ok, parts.join("; "))
}

fn full_ball(s: &Setup) -> Outcome {
    let region = Region::full_ball(&s.geom);
    let mut ok = true;
    let mut parts = Vec::new();
    for sys in SystemId::ALL {
        let k =
            assemble(sys, &s.bandlimit, &region, &s.geom, &s.spec).map_err(|e| e.to_string())?;
        let mut dev: f64 = 0.0;
        for m in [k.normal_block(), k.tangential_block()] {
            let n = m.dim();
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((m.get(i, j) - e).abs());
                }
            }
        }
        let basis = solve(&k, true).map_err(|e| e.to_string())?;
        let eig_dev = basis
            .eigenvalues()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        ok &= dev <= 1e-10 && eig_dev <= 1e-10;
        parts.push(format!(
            "{sys}: |K - I| {dev:.1e}, |lambda - 1| {eig_dev:.1e}"
        ));
    }
    check(ok, parts.join("; "))
}

/// Draws an entry of the given case with matching orders so that most
/// samples are structurally non-zero.
fn draw_entry(rng: &mut ChaCha8Rng, b: &Bandlimit, case: usize) -> (BasisIndex, BasisIndex) {
    let nn = b.max_angular();
    let mm = b.max_radial();
    let (fp, fq) = match case {
        0 => (FieldType::Normal, FieldType::Normal),
        1 => (FieldType::Gradient, FieldType::Gradient),
        2 => (FieldType::Curl, FieldType::Curl),
        _ => (FieldType::Gradient, FieldType::Curl),
    };
    let lowest = fp.min_degree();
    let n = rng.gen_range(lowest.max(if case == 3 { 1 } else { 0 })..=nn);
    let j = rng.gen_range(-(n as i32)..=n as i32);
    let j = if case == 3 && j == 0 {
        1.min(n as i32)
    } else {
        j
    };
    let jq = if case == 3 { -j } else { j };
    let np = rng.gen_range(fq.min_degree().max(jq.unsigned_abs() as usize)..=nn);
    let p = BasisIndex::new(fp, rng.gen_range(0..=mm), n, j).unwrap();
    let q = BasisIndex::new(fq, rng.gen_range(0..=mm), np, jq).unwrap();
    (p, q)
}

fn entry_oracle(s: &Setup) -> Outcome {
    let region = s.cone(45.0);
    let orders = TensorOrders::for_bandlimit(s.bandlimit.max_radial(), s.bandlimit.max_angular());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for sys in SystemId::ALL {
        for k in 0..20 {
            let (p, q) = draw_entry(&mut rng, &s.bandlimit, k % 4);
            let analytic =
                entry(sys, &p, &q, &region, &s.geom, &s.spec).map_err(|e| e.to_string())?;
            let brute = tensor_integrate_cone(
                |r, phi, t| {
                    let x = BallPoint { r, phi, t };
                    Ok(dot(
                        &basis_field_eval(sys, &s.geom, p, x)?,
                        &basis_field_eval(sys, &s.geom, q, x)?,
                    ))
                },
                &region,
                orders,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max((analytic - brute).abs());
            if analytic.abs() > 1e-12 {
                nonzero += 1;
            }
        }
    }
    check(
        worst <= 1e-6,
        format!("60 entries ({nonzero} non-zero), max |analytic - volume quadrature| {worst:.1e}"),
    )
}

fn top_per_block(basis: &SlepianBasis, count: usize) -> Vec<usize> {
    let normal: Vec<usize> = (0..basis.len())
        .filter(|&k| basis.is_normal(k))
        .take(count)
        .collect();
    let tangential: Vec<usize> = (0..basis.len())
        .filter(|&k| !basis.is_normal(k))
        .take(count)
        .collect();
    normal.into_iter().chain(tangential).collect()
}

fn energy_oracle(s: &Setup, solved: &[Solved]) -> Outcome {
    let region = s.cone(45.0);
    let mut worst: f64 = 0.0;
    for sol in solved {
        for k in top_per_block(&sol.basis, 3) {
            let c = sol.basis.coefficients(k);
            let ratio = energy_ratio(sol.sys, &s.geom, &s.bandlimit, &c, &region)
                .map_err(|e| e.to_string())?;
            worst = worst.max((ratio - sol.basis.functions[k].lambda).abs());
        }
    }
    check(
        worst <= 1e-6,
        format!("top 3 of P and Q per system, max |ratio - lambda| {worst:.1e}"),
    )
}

fn region_orthogonality(s: &Setup, solved: &[Solved]) -> Outcome {
    let region = s.cone(45.0);
    let mut worst: f64 = 0.0;
    for sol in solved {
        let coeffs: Vec<Vec<f64>> = (0..5).map(|k| sol.basis.coefficients(k)).collect();
        let gram = region_gram(sol.sys, &s.geom, &s.bandlimit, &coeffs, &region)
            .map_err(|e| e.to_string())?;
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j {
                    sol.basis.functions[i].lambda
                } else {
                    0.0
                };
                worst = worst.max((gram[i][j] - expect).abs());
            }
        }
    }
    check(
        worst <= 1e-6,
        format!("top 5 per system, max deviation {worst:.1e}"),
    )
}

fn rotation(s: &Setup, solved: &[Solved]) -> Outcome {
    let angles = EulerAngles::new(PI / 2.0, PI / 2.0, PI / 2.0);
    let r = angles.matrix();
    let rt = transpose(&r);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let points: Vec<BallPoint> = (0..100)
        .map(|_| BallPoint {
            r: rng.gen_range(0.05..0.95),
            phi: rng.gen_range(0.0..2.0 * PI),
            t: rng.gen_range(-0.95..0.95),
        })
        .collect();
    let back: Vec<BallPoint> = points
        .iter()
        .map(|p| BallPoint::from_cartesian(mat_vec(&rt, &p.to_cartesian())))
        .collect();
    let (mut field_err, mut norm_err): (f64, f64) = (0.0, 0.0);
    for sol in solved {
        for k in top_per_block(&sol.basis, 1) {
            let c = sol.basis.coefficients(k);
            let rc = rotate_coeffs(&s.bandlimit, &c, &angles).map_err(|e| e.to_string())?;
            let n0: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n1: f64 = rc.iter().map(|x| x * x).sum::<f64>().sqrt();
            norm_err = norm_err.max((n0 - n1).abs());
            let lhs = synthesize(sol.sys, &s.geom, &s.bandlimit, &rc, &points)
                .map_err(|e| e.to_string())?;
            let orig =
                synthesize(sol.sys, &s.geom, &s.bandlimit, &c, &back).map_err(|e| e.to_string())?;
            for (l, o) in lhs.iter().zip(&orig) {
                let rhs = mat_vec(&r, o);
                for i in 0..3 {
                    field_err = field_err.max((l[i] - rhs[i]).abs());
                }
            }
        }
    }
    check(
        field_err <= 1e-8 && norm_err <= 1e-12,
        format!("max field error {field_err:.1e}, max norm change {norm_err:.1e}"),
    )
}

fn significance(s: &Setup, solved: &[Solved]) -> Outcome {
    let region = s.cone(45.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for sol in solved {
        let shannon = shannon_number(sol.sys, &s.bandlimit, &region, &s.geom, &s.spec)
            .map_err(|e| e.to_string())?;
        let count = classify(&sol.basis, 0.5).well.len() as f64;
        let rel = (count - shannon).abs() / shannon;
        ok &= rel <= 0.15;
        let at_s = sol.basis.functions[shannon.round() as usize - 1].lambda;
        let count_04 = classify(&sol.basis, 0.4).well.len();
        parts.push(format!(
            "{}: {count} vs S {shannon:.1} ({:+.1}%), lambda at rank S {at_s:.3}, {count_04} at 0.4",
            sol.sys,
            100.0 * (count - shannon) / shannon
        ));
    }
    check(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let s = Setup::new();
    let start = Instant::now();
    let solved: Vec<Solved> = SystemId::ALL
        .iter()
        .map(|&sys| {
            let matrix =
                assemble(sys, &s.bandlimit, &s.cone(45.0), &s.geom, &s.spec).expect("assembly");
            let basis = solve(&matrix, true).expect("eigensolve");
            Solved { sys, matrix, basis }
        })
        .collect();
    println!(
        "assembled and solved three systems in {:.1?}",
        start.elapsed()
    );

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Shannon-number table", Box::new(|| shannon_table(&s))),
        ("matrix dimensions", Box::new(|| dimensions(&solved))),
        (
            "figure eigenvalues",
            Box::new(|| figure_eigenvalues(&solved)),
        ),
        ("spectrum containment", Box::new(|| containment(&solved))),
        ("full-ball identity", Box::new(|| full_ball(&s))),
        ("entry oracle", Box::new(|| entry_oracle(&s))),
        (
            "energy-ratio oracle",
            Box::new(|| energy_oracle(&s, &solved)),
        ),
        (
            "l2(R) orthogonality",
            Box::new(|| region_orthogonality(&s, &solved)),
        ),
        ("rotation equivariance", Box::new(|| rotation(&s, &solved))),
        ("significance split", Box::new(|| significance(&s, &solved))),
    ];

    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match run() {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} ({:.1?})",
                i + 1,
                t.elapsed()
            ),
            Err(detail) => {
                failures += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} ({:.1?})",
                    i + 1,
                    t.elapsed()
                );
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
