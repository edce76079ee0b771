use std::fs;
use std::path::Path;
use std::process::Command;

use corrgeom::equivalence::VerdictFile;
use corrgeom::linalg::{random_unitary, seeded_rng};
use corrgeom::{conjugate, Atom, CorrelationGeometry, CorrelationMeasure, GeometryFile};
use serde_json::Value;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn corrgeom(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_corrgeom"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn geometry(dir: &Path, name: &str) -> CorrelationGeometry {
    CorrelationGeometry::from_json_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn write_conjugated(dir: &Path, from: &str, to: &str, seed: u64) {
    let g = geometry(dir, from);
    let u = random_unitary(g.f, &mut seeded_rng(seed));
    let atoms = g
        .atoms()
        .iter()
        .map(|a| Atom::new(conjugate(&u, &a.operator).unwrap(), a.weight))
        .collect();
    let h = CorrelationGeometry::with_bound(
        g.f,
        g.bound,
        CorrelationMeasure {
            atoms,
            agg_tol: g.measure.agg_tol,
        },
    )
    .unwrap();
    fs::write(dir.join(to), h.to_json_string()).unwrap();
}

#[test]
fn build_tetrads_gives_one_atom() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(dir.path(), &["build", "--builtin", "torus-tetrads", "-o", "g.json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let g = geometry(dir.path(), "g.json");
    assert_eq!(g.atoms().len(), 1);
    let report = json(&out.stderr);
    assert_eq!(report["command"], "build");
    assert_eq!(report["outputs"][0]["path"], "g.json");
    assert_eq!(report["exit_code"], 0);
}

#[test]
fn build_plane_waves_gives_one_atom_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(
        dir.path(),
        &["build", "--builtin", "circle-plane-waves", "--n", "8", "--kmax", "1"],
    );
    assert_eq!(out.code, 0);
    let g = CorrelationGeometry::from_json_str(&out.stdout).unwrap();
    assert_eq!(g.atoms().len(), 8);
    assert_eq!(g.f, 3);
}

#[test]
fn build_from_model_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let model = corrgeom::circle_plane_waves(12, 2).unwrap();
    fs::write(dir.path().join("m.json"), model.to_json_string()).unwrap();
    let a = corrgeom(dir.path(), &["build", "m.json", "--report", "r.json"]);
    let b = corrgeom(
        dir.path(),
        &["build", "--builtin", "circle-plane-waves", "--n", "12", "--kmax", "2"],
    );
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let report = json(&fs::read_to_string(dir.path().join("r.json")).unwrap());
    assert_eq!(report["inputs"][0]["path"], "m.json");
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_model_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"manifold\": [").unwrap();
    let out = corrgeom(dir.path(), &["build", "bad.json"]);
    assert_eq!(out.code, 64);
    assert!(out.stderr.contains("model file"));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(corrgeom(dir.path(), &[]).code, 64);
    assert_eq!(corrgeom(dir.path(), &["build"]).code, 64);
    assert_eq!(corrgeom(dir.path(), &["build", "--builtin", "moebius"]).code, 64);
    assert_eq!(corrgeom(dir.path(), &["mix", "a.json"]).code, 64);
    assert_eq!(
        corrgeom(
            dir.path(),
            &["build", "--builtin", "circle-plane-waves", "--n", "3", "--kmax", "1"]
        )
        .code,
        64
    );
}

#[test]
fn missing_files_exit_66() {
    let dir = tempfile::tempdir().unwrap();
    corrgeom(dir.path(), &["build", "--builtin", "torus-tetrads", "-o", "g.json"]);
    assert_eq!(corrgeom(dir.path(), &["compare", "g.json", "nope.json"]).code, 66);
    assert_eq!(corrgeom(dir.path(), &["build", "nope.json"]).code, 66);
    assert_eq!(
        corrgeom(
            dir.path(),
            &["mix", "g.json", "g.json", "--tau", "0.5", "--aligner-from", "v.json"]
        )
        .code,
        66
    );
}

#[test]
fn ambiguous_sea_exits_70() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(
        dir.path(),
        &["build", "--builtin", "lattice-dirac-sea", "--m-fields", "1"],
    );
    assert_eq!(out.code, 70, "{}", out.stderr);
    assert_eq!(json(out.stderr.split_once('\n').unwrap().1)["exit_code"], 70);
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corrgeom(d, &["build", "--builtin", "circle-plane-waves", "-o", "r1.json"]);
    corrgeom(
        d,
        &[
            "build",
            "--builtin",
            "circle-plane-waves",
            "--radius",
            "2",
            "-o",
            "r2.json",
        ],
    );

    let same = corrgeom(d, &["compare", "r1.json", "r1.json"]);
    assert_eq!(same.code, 0);
    assert_eq!(json(&same.stdout)["residual"], 0.0);

    write_conjugated(d, "r1.json", "c.json", 5);
    let conj = corrgeom(d, &["compare", "r1.json", "c.json"]);
    assert_eq!(conj.code, 0, "{}", conj.stdout);
    assert_eq!(json(&conj.stdout)["verdict"], "equivalent");

    let diff = corrgeom(d, &["compare", "r1.json", "r2.json"]);
    assert_eq!(diff.code, 1);
    let verdict = VerdictFile::parse(&diff.stdout).unwrap();
    let certificate = verdict.certificate.expect("certificate");
    assert!(certificate.verify(&geometry(d, "r1.json"), &geometry(d, "r2.json")));
}

#[test]
fn compare_inconclusive_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let projector = |n: [f64; 3]| {
        let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let (x, y, z) = (n[0] / r, n[1] / r, n[2] / r);
        vec![
            [0.5 * (1.0 + z), 0.0],
            [0.5 * x, -0.5 * y],
            [0.5 * x, 0.5 * y],
            [0.5 * (1.0 - z), 0.0],
        ]
    };
    let vs = [[1.0, 0.0, 0.2], [0.3, 1.0, 0.5], [-0.4, 0.7, -0.9]];
    let write = |name: &str, flip: f64| {
        let atoms: Vec<Value> = vs
            .iter()
            .map(|v| {
                let m = projector([v[0], v[1], flip * v[2]]);
                serde_json::json!({ "weight": 1.0, "matrix": m })
            })
            .collect();
        let doc = serde_json::json!({ "f": 2, "p": 1, "q": 0, "atoms": atoms, "agg_tol": 1e-8 });
        fs::write(d.join(name), doc.to_string()).unwrap();
    };
    write("a.json", 1.0);
    write("b.json", -1.0);
    let out = corrgeom(d, &["compare", "a.json", "b.json"]);
    assert_eq!(out.code, 2, "{}", out.stdout);
    assert_eq!(json(&out.stdout)["verdict"], "inconclusive");
}

#[test]
fn gauge_check_plane_waves() {
    let dir = tempfile::tempdir().unwrap();
    for chi in ["const", "sin", "random"] {
        let out = corrgeom(
            dir.path(),
            &[
                "gauge-check",
                "--builtin",
                "circle-plane-waves",
                "--chi",
                chi,
                "--q",
                "1",
            ],
        );
        assert_eq!(out.code, 0, "{chi}: {}", out.stdout);
        let v = json(&out.stdout);
        assert!(v["deviation"].as_f64().unwrap() <= 1e-13, "{chi}");
        assert_eq!(v["verdict"]["verdict"], "equivalent");
    }
    let lattice = corrgeom(
        dir.path(),
        &[
            "gauge-check",
            "--builtin",
            "lattice-dirac-sea",
            "--chi",
            "random",
            "--seed",
            "4",
        ],
    );
    assert_eq!(lattice.code, 0, "{}", lattice.stdout);
    assert!(json(&lattice.stdout)["verdict"]["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn gauge_check_rejects_gradient_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(dir.path(), &["gauge-check", "--builtin", "circle-trig-pair"]);
    assert_eq!(out.code, 64);
}

#[test]
fn diffeo_check_rotations() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--shift", "3"][..], &["--shift", "-5"], &["--reflect"]] {
        let mut full = vec!["diffeo-check", "--builtin", "circle-trig-pair", "--n", "32"];
        full.extend_from_slice(args);
        let out = corrgeom(dir.path(), &full);
        assert_eq!(out.code, 0, "{args:?}: {}", out.stdout);
        assert!(json(&out.stdout)["residual"].as_f64().unwrap() <= 1e-8);
    }
    let torus = corrgeom(
        dir.path(),
        &["diffeo-check", "--builtin", "torus-tetrads", "--shift", "1"],
    );
    assert_eq!(torus.code, 64);
}

#[test]
fn diffeo_check_with_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let n = 4usize;
    let perm: Vec<usize> = (0..n * n).map(|k| (k + n) % (n * n)).collect();
    let jac = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; n * n];
    fs::write(
        dir.path().join("map.json"),
        serde_json::json!({ "perm": perm, "jacobians": jac }).to_string(),
    )
    .unwrap();
    let out = corrgeom(
        dir.path(),
        &["diffeo-check", "--builtin", "torus-tetrads", "--map", "map.json"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    fs::write(
        dir.path().join("bad.json"),
        serde_json::json!({ "perm": [0, 0], "jacobians": [] }).to_string(),
    )
    .unwrap();
    assert_eq!(
        corrgeom(
            dir.path(),
            &["diffeo-check", "--builtin", "torus-tetrads", "--map", "bad.json"]
        )
        .code,
        64
    );
}

#[test]
fn symmetry_check_translations_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let all = corrgeom(
        d,
        &[
            "symmetry-check",
            "--builtin",
            "circle-plane-waves",
            "--n",
            "32",
            "--kmax",
            "5",
            "--all-shifts",
        ],
    );
    assert_eq!(all.code, 0);
    let rows = json(&all.stdout);
    assert_eq!(rows.as_array().unwrap().len(), 32);
    assert!(rows
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["discrepancy"].as_f64().unwrap() <= 1e-10));

    corrgeom(d, &["build", "--builtin", "circle-plane-waves", "-o", "g.json"]);
    let identity = vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
    let mut big = vec![[0.0, 0.0]; 9];
    for k in 0..3 {
        big[4 * k] = identity[0];
    }
    fs::write(d.join("id.json"), serde_json::to_string(&big).unwrap()).unwrap();
    assert_eq!(
        corrgeom(d, &["symmetry-check", "g.json", "--unitary", "id.json"]).code,
        0
    );

    let swap = vec![
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
    ];
    fs::write(d.join("swap.json"), serde_json::to_string(&swap).unwrap()).unwrap();
    let out = corrgeom(d, &["symmetry-check", "g.json", "--unitary", "swap.json"]);
    assert_eq!(out.code, 0, "{}", out.stdout);

    let mixing = vec![
        [0.6, 0.0],
        [0.8, 0.0],
        [0.0, 0.0],
        [-0.8, 0.0],
        [0.6, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
    ];
    fs::write(d.join("mixing.json"), serde_json::to_string(&mixing).unwrap()).unwrap();
    let out = corrgeom(d, &["symmetry-check", "g.json", "--unitary", "mixing.json"]);
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert!(!json(&out.stdout)["symmetric"].as_bool().unwrap());

    fs::write(d.join("bad.json"), serde_json::to_string(&identity).unwrap()).unwrap();
    assert_eq!(
        corrgeom(d, &["symmetry-check", "g.json", "--unitary", "bad.json"]).code,
        64
    );
}

#[test]
fn mix_sums_atoms_and_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corrgeom(d, &["build", "--builtin", "circle-plane-waves", "-o", "r1.json"]);
    corrgeom(
        d,
        &[
            "build",
            "--builtin",
            "circle-plane-waves",
            "--radius",
            "2",
            "-o",
            "r2.json",
        ],
    );
    let out = corrgeom(d, &["mix", "r1.json", "r2.json", "--tau", "0.5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let file = GeometryFile::parse(&out.stdout).unwrap();
    assert_eq!(file.atoms.len(), 32);
    let provenance = file.provenance.expect("provenance");
    assert_eq!(provenance.tau, 0.5);
    assert_eq!(provenance.parents.len(), 2);

    write_conjugated(d, "r1.json", "c.json", 11);
    corrgeom(d, &["compare", "r1.json", "c.json", "-o", "v.json"]);
    let aligned = corrgeom(
        d,
        &["mix", "r1.json", "c.json", "--tau", "0.5", "--aligner-from", "v.json"],
    );
    assert_eq!(aligned.code, 0, "{}", aligned.stderr);
    assert_eq!(GeometryFile::parse(&aligned.stdout).unwrap().atoms.len(), 16);

    corrgeom(d, &["compare", "r1.json", "r2.json", "-o", "neg.json"]);
    assert_eq!(
        corrgeom(
            d,
            &[
                "mix",
                "r1.json",
                "r2.json",
                "--tau",
                "0.5",
                "--aligner-from",
                "neg.json"
            ]
        )
        .code,
        64
    );
    assert_eq!(corrgeom(d, &["mix", "r1.json", "r2.json", "--tau", "1.5"]).code, 64);
}

#[test]
fn dim_check_prints_formula_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(dir.path(), &["dim-check", "--f", "4", "--p", "1", "--q", "1"]);
    assert_eq!(out.code, 0);
    let v = json(&out.stdout);
    assert_eq!(v["dimension"], 12);
    assert_eq!(v["measured_rank"], 12);
}

#[test]
fn resolution_table_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(
        dir.path(),
        &[
            "resolution",
            "--builtin",
            "circle-plane-waves",
            "--kmax",
            "1",
            "--ns",
            "4,8,16",
            "--format",
            "csv",
        ],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "n,hilbert_dim,atom_count,min_separation");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("16,3,16,"));
    let tetrads = corrgeom(
        dir.path(),
        &[
            "resolution",
            "--builtin",
            "torus-tetrads",
            "--ns",
            "2,4",
            "--format",
            "csv",
        ],
    );
    assert_eq!(tetrads.stdout.lines().nth(1), Some("2,2,1,"));
}

#[test]
fn agg_tol_accepts_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrgeom(
        dir.path(),
        &["build", "--builtin", "circle-plane-waves", "--agg-tol", "inf"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(json(&out.stdout)["agg_tol"], "inf");
}
