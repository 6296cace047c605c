use std::fs;
use std::path::Path;
use std::process::Command;

use ballslep::basis::basis_field_eval;
use ballslep::io::{write_binary, BinaryHeader, BlockShape, PayloadKind};
use ballslep::rotation::{mat_vec, transpose};
use ballslep::{BallPoint, SystemId};
use ballslep_cli::commands::*;
use ballslep_cli::config::{GridConfig, RegionConfig};
use ballslep_cli::verify::cmd_verify;
use ballslep_cli::{EulerConfig, RunConfig};

fn small(dir: &Path, sys: SystemId) -> RunConfig {
    RunConfig {
        system: sys,
        max_radial: 2,
        max_angular: 4,
        output_dir: dir.to_path_buf(),
        grid: GridConfig {
            n_r: 4,
            n_phi: 12,
            n_t: 7,
            sphere_radius: None,
        },
        ..RunConfig::default()
    }
}

fn full_ball(mut cfg: RunConfig) -> RunConfig {
    cfg.region = RegionConfig {
        a: 0.0,
        b: cfg.beta,
        theta_deg: 180.0,
    };
    cfg
}

#[test]
fn default_matrix_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().into(),
        ..RunConfig::default()
    };
    let meta = cmd_assemble(&cfg).unwrap();
    assert_eq!((meta.p_size, meta.q_size, meta.dim), (1183, 2352, 3535));
    let stored: MatrixMeta =
        serde_json::from_str(&fs::read_to_string(dir.path().join(MATRIX_META_FILE)).unwrap())
            .unwrap();
    assert_eq!(stored, meta);
}

#[test]
fn default_solve_has_concentrated_top_function() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        output_dir: dir.path().into(),
        ..RunConfig::default()
    };
    let report = cmd_solve(&cfg, &SolveOptions::default()).unwrap();
    assert!(report.eigenvalues[0].lambda >= 0.999);
    assert_eq!(report.eigenvalues.len(), 3535);
    assert_eq!(
        load_eigen_report(&dir.path().join(EIGENVALUES_FILE)).unwrap(),
        report
    );

    // top normal function on the sphere of radius 0.5
    let top_normal = report
        .eigenvalues
        .iter()
        .find(|e| e.block.starts_with('P'))
        .unwrap();
    cfg.grid = GridConfig {
        n_r: 1,
        n_phi: 72,
        n_t: 91,
        sphere_radius: Some(0.5),
    };
    let rows = cmd_evaluate(&cfg, &Source::Rank(top_normal.rank)).unwrap();
    let cos_cap = 45f64.to_radians().cos();
    let total: f64 = rows.iter().map(|r| r.norm * r.norm).sum();
    let inside: f64 = rows
        .iter()
        .filter(|r| r.z / 0.5 >= cos_cap)
        .map(|r| r.norm * r.norm)
        .sum();
    assert!(
        inside / total >= 0.9,
        "fraction inside cap {}",
        inside / total
    );
}

#[test]
fn full_ball_trace_and_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    for sys in SystemId::ALL {
        let cfg = full_ball(small(dir.path(), sys));
        let meta = cmd_assemble(&cfg).unwrap();
        assert!((meta.trace - meta.dim as f64).abs() < 1e-10);
        let report = cmd_solve(&cfg, &SolveOptions::default()).unwrap();
        assert!(report
            .eigenvalues
            .iter()
            .all(|e| (e.lambda - 1.0).abs() < 1e-10));
    }
}

#[test]
fn narrow_cap_shannon_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        output_dir: dir.path().into(),
        ..RunConfig::default()
    };
    cfg.region.theta_deg = 15.0;
    let f = cmd_shannon(&cfg).unwrap();
    assert_eq!(f.shannon.s.round(), 20.0);
    assert!((f.shannon.s - f.shannon.s_closed_form).abs() < 1e-8);
    assert!(dir.path().join(SHANNON_FILE).exists());
}

#[test]
fn outputs_are_byte_identical_on_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = small(dir, SystemId::III);
        cmd_assemble(&cfg).unwrap();
        cmd_solve(
            &cfg,
            &SolveOptions {
                csv: true,
                keep: None,
            },
        )
        .unwrap();
        cmd_shannon(&cfg).unwrap();
        cmd_evaluate(&cfg, &Source::Rank(2)).unwrap();
    }
    for name in [
        MATRIX_FILE,
        MATRIX_META_FILE,
        EIGENVALUES_FILE,
        EIGENVALUES_CSV_FILE,
        COEFFICIENTS_FILE,
        SHANNON_FILE,
        SAMPLES_FILE,
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn mixed_config_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), SystemId::I);
    cmd_solve(&cfg, &SolveOptions::default()).unwrap();
    let mut other = cfg.clone();
    other.region.b = 0.7;
    let err = cmd_evaluate(&other, &Source::Rank(1)).unwrap_err();
    assert!(err.to_string().contains("does not match"), "{err}");
    assert!(load_matrix(&dir.path().join(MATRIX_FILE), &other).is_err());
    other.euler_deg = Some(EulerConfig {
        alpha: 10.0,
        beta: 20.0,
        gamma: 30.0,
    });
    assert!(cmd_rotate(&other, None).is_err());
    // solve under the new config replaces the stale matrix
    cmd_solve(&other, &SolveOptions::default()).unwrap();
    assert!(load_matrix(&dir.path().join(MATRIX_FILE), &other).is_ok());
}

#[test]
fn stored_coefficients_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), SystemId::II);
    cmd_solve(
        &cfg,
        &SolveOptions {
            csv: false,
            keep: Some(7),
        },
    )
    .unwrap();
    let (_, basis) = solve_config(&cfg).unwrap();
    let (set, rotated) = load_coefficients_for(&dir.path().join(COEFFICIENTS_FILE), &cfg).unwrap();
    assert!(!rotated);
    assert_eq!(set.vectors.len(), 7);
    for k in 0..7 {
        assert_eq!(set.vectors[k], basis.coefficients(k));
        assert_eq!(set.eigenvalues[k], basis.functions[k].lambda);
    }
}

#[test]
fn samples_round_trip_and_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), SystemId::I);
    cmd_solve(&cfg, &SolveOptions::default()).unwrap();
    let rows = cmd_evaluate(&cfg, &Source::Rank(1)).unwrap();
    assert_eq!(load_samples(&dir.path().join(SAMPLES_FILE)).unwrap(), rows);
    let header = fs::read_to_string(dir.path().join(SAMPLES_FILE)).unwrap();
    assert!(header.starts_with("x,y,z,fx,fy,fz,norm\n"));
    for r in &rows {
        let n = (r.fx * r.fx + r.fy * r.fy + r.fz * r.fz).sqrt();
        assert!((r.norm - n).abs() <= 1e-12);
    }
    let meta: SamplesMeta =
        serde_json::from_str(&fs::read_to_string(dir.path().join(SAMPLES_META_FILE)).unwrap())
            .unwrap();
    assert_eq!(meta.config_hash, cfg.hash_hex());
    assert_eq!(meta.rows, rows.len());
}

#[test]
fn canonical_coefficients_sample_the_basis_field() {
    let dir = tempfile::tempdir().unwrap();
    for sys in SystemId::ALL {
        let cfg = small(dir.path(), sys);
        let bandlimit = cfg.bandlimit().unwrap();
        let z = bandlimit.dim();
        let picks = [0, z / 3, z - 1];
        let mut flat = vec![0.0; z * picks.len()];
        for (col, &p) in picks.iter().enumerate() {
            flat[p * picks.len() + col] = 1.0;
        }
        let header = BinaryHeader {
            kind: PayloadKind::Coefficients,
            sys,
            bandlimit,
            region: cfg.region().unwrap(),
            geom: cfg.geometry().unwrap(),
            config_hash: cfg.hash(),
            blocks: vec![
                BlockShape {
                    rows: z as u64,
                    cols: picks.len() as u64,
                },
                BlockShape {
                    rows: picks.len() as u64,
                    cols: 1,
                },
            ],
        };
        let path = dir.path().join("canonical.bin");
        let mut file = fs::File::create(&path).unwrap();
        write_binary(&mut file, &header, &[&flat, &[0.0; 3]]).unwrap();
        drop(file);
        let points = grid_points(&cfg);
        for (col, &p) in picks.iter().enumerate() {
            let rows = cmd_evaluate(&cfg, &Source::File(path.clone(), col + 1)).unwrap();
            let idx = bandlimit.unflat_index(p).unwrap();
            for (row, x) in rows.iter().zip(&points) {
                let g = basis_field_eval(sys, &cfg.geometry().unwrap(), idx, *x).unwrap();
                assert_eq!([row.fx, row.fy, row.fz], g);
            }
        }
    }
}

#[test]
fn rotated_samples_match_mapped_unrotated_field() {
    let dir = tempfile::tempdir().unwrap();
    for sys in SystemId::ALL {
        let cfg = small(dir.path(), sys);
        cmd_solve(&cfg, &SolveOptions::default()).unwrap();
        let mut rotated = cfg.clone();
        rotated.euler_deg = Some(EulerConfig {
            alpha: 90.0,
            beta: 90.0,
            gamma: 90.0,
        });
        let rows = cmd_evaluate(&rotated, &Source::Rank(1)).unwrap();

        // the same through the rotate command and the rotated file
        cmd_rotate(&rotated, None).unwrap();
        let via_file =
            cmd_evaluate(&rotated, &Source::File(dir.path().join(ROTATED_FILE), 1)).unwrap();
        assert_eq!(rows, via_file);

        let r = rotated.euler().unwrap().matrix();
        let rt = transpose(&r);
        let (set, _) = load_coefficients_for(&dir.path().join(COEFFICIENTS_FILE), &cfg).unwrap();
        let back: Vec<BallPoint> = grid_points(&cfg)
            .iter()
            .map(|p| BallPoint::from_cartesian(mat_vec(&rt, &p.to_cartesian())))
            .collect();
        // grid points that map onto a pole have no unrotated oracle value
        let keep: Vec<usize> = (0..back.len())
            .filter(|&i| back[i].t.abs() < 1.0 - POLE_CLAMP)
            .collect();
        assert!(keep.len() > back.len() / 2);
        let back: Vec<BallPoint> = keep.iter().map(|&i| back[i]).collect();
        let plain = sample_rows(&cfg, &set.vectors[0], &back).unwrap();
        for (&i, o) in keep.iter().zip(&plain) {
            let row = &rows[i];
            let mapped = mat_vec(&r, &[o.fx, o.fy, o.fz]);
            for (a, b) in [row.fx, row.fy, row.fz].iter().zip(&mapped) {
                assert!((a - b).abs() <= 1e-8, "{sys}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn default_config_passes_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().into(),
        ..RunConfig::default()
    };
    let report = cmd_verify(&cfg, false).unwrap();
    assert!(report.all_passed, "{report:#?}");
    assert_eq!(report.checks.len(), 5);
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn injected_fault_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_verify(&small(dir.path(), SystemId::II), true).unwrap();
    assert!(!report.all_passed);
    let failed: Vec<_> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(failed, ["entry_oracle"]);
}

#[test]
fn full_cap_config_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), SystemId::III);
    cfg.region.theta_deg = 180.0;
    let report = cmd_verify(&cfg, false).unwrap();
    assert!(report.all_passed, "{report:#?}");
}

fn ballslep(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ballslep"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"system": "II", "M": 1, "N": 3, "region": {"theta_deg": 60}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = ballslep(&[
        "shannon",
        "--config",
        cfg_path.to_str().unwrap(),
        "--N",
        "2",
        "--theta-deg",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let f: ShannonFile =
        serde_json::from_str(&fs::read_to_string(out.join(SHANNON_FILE)).unwrap()).unwrap();
    assert_eq!(
        (f.system, f.max_radial, f.max_angular, f.theta_deg),
        (SystemId::II, 1, 2, 30.0)
    );
}

#[test]
fn binary_reports_bad_input_and_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        ballslep(&["shannon", "--a", "0.9", "--b", "0.5", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ballslep(&["evaluate", "--M", "1", "--N", "2", "--out", out])
            .status
            .code(),
        Some(2)
    );
    let verify = ballslep(&[
        "verify",
        "--M",
        "1",
        "--N",
        "2",
        "--out",
        out,
        "--inject-fault",
    ]);
    assert_eq!(verify.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&verify.stdout).contains("FAIL entry_oracle"));
    let ok = ballslep(&["verify", "--M", "1", "--N", "2", "--out", out]);
    assert_eq!(ok.status.code(), Some(0));
}
