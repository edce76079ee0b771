//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use corrgeom::equivalence::{
    check_equivalence, check_equivalence_seeded, check_symmetry, diffeo_check, gauge_check, geometry_scale,
    induced_translation_unitary, lattice_gauge_check, CheckConfig, EquivalenceVerdict,
};
use corrgeom::linalg::{c, random_hermitian, random_unitary, seeded_rng, CMat};
use corrgeom::mixing::{mix, MixSpec};
use corrgeom::model::{CirclePlaneWaves, LatticeDiracModel};
use corrgeom::{
    circle_plane_waves, circle_trig_pair, conjugate, fpq_dimension, fpq_rank_check, hs_dist, lattice_dirac_sea,
    pushforward, signature, torus_tetrads, Atom, CorrelationGeometry, CorrelationMeasure, EffectiveModel, GaugeField,
    HermitianOperator, SignatureBound,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn builtins() -> Vec<(String, EffectiveModel)> {
    let mut out = Vec::new();
    for (n, k) in [(8, 1), (16, 2), (32, 5), (64, 3)] {
        out.push((
            format!("circle-plane-waves n={n} kmax={k}"),
            circle_plane_waves(n, k).unwrap(),
        ));
    }
    out.push((
        "circle-plane-waves n=16 radius=2".into(),
        CirclePlaneWaves::new(16, 1).radius(2.0).build().unwrap(),
    ));
    for n in [8, 16, 64] {
        out.push((format!("circle-trig-pair n={n}"), circle_trig_pair(n).unwrap()));
    }
    for n in [4, 8, 16] {
        out.push((format!("torus-tetrads n={n}"), torus_tetrads(n).unwrap()));
    }
    for (sites, m) in [(8, 4), (16, 8), (32, 16)] {
        let lattice = LatticeDiracModel::new(sites, 1.0, 0.5, 1.0);
        out.push((
            format!("lattice-dirac-sea sites={sites} m={m}"),
            lattice_dirac_sea(&lattice, m).unwrap(),
        ));
    }
    let potential: Vec<f64> = (0..16).map(|j| 0.1 * (j as f64).sin()).collect();
    let lattice = LatticeDiracModel::new(16, 1.0, 0.5, 1.0).with_potential(potential);
    out.push((
        "lattice-dirac-sea sites=16 m=8 with potential".into(),
        lattice_dirac_sea(&lattice, 8).unwrap(),
    ));
    out
}

fn criterion_1() -> Check {
    for n in [4, 8, 16] {
        let model = torus_tetrads(n).map_err(err)?;
        let g = pushforward(&model, 1e-8).map_err(err)?;
        ensure(g.atoms().len() == 1, || format!("n={n}: {} atoms", g.atoms().len()))?;
        let vol = model.manifold.total_volume();
        let a = &g.atoms()[0];
        ensure((a.weight - vol).abs() <= 1e-9, || {
            format!("n={n}: weight {} vs volume {vol}", a.weight)
        })?;
        let id = HermitianOperator::identity(2).map_err(err)?;
        let d = hs_dist(&a.operator, &id).map_err(err)?;
        ensure(d <= 1e-10, || format!("n={n}: ‖F − 1‖ = {d:e}"))?;
    }
    Ok("n ∈ {4, 8, 16}: one atom, weight = volume, operator = identity".into())
}

fn criterion_2() -> Check {
    let g = pushforward(&circle_trig_pair(64).map_err(err)?, 1e-8).map_err(err)?;
    for (i, a) in g.atoms().iter().enumerate() {
        let norm = a.operator.spectral_norm();
        let zeros = a.operator.spectrum().iter().filter(|l| l.abs() <= 1e-9 * norm).count();
        ensure(zeros == 1, || format!("atom {i}: {zeros} zero eigenvalues"))?;
    }
    Ok(format!(
        "{} atoms, each with exactly one zero eigenvalue",
        g.atoms().len()
    ))
}

fn criterion_3() -> Check {
    let mut atoms = 0;
    for (name, model) in builtins() {
        let d_fib = model.system.fiber_dim();
        let g = pushforward(&model, 1e-8).map_err(err)?;
        for a in g.atoms() {
            let s = signature(&a.operator, 1e-9).map_err(err)?;
            ensure(s.n_pos + s.n_neg <= d_fib, || {
                format!("{name}: rank {} > fiber {d_fib}", s.n_pos + s.n_neg)
            })?;
        }
        atoms += g.atoms().len();
    }
    Ok(format!("{atoms} atoms over {} built-in models", builtins().len()))
}

fn random_smooth(model: &EffectiveModel, seed: u64) -> GaugeField {
    let mut rng = seeded_rng(seed);
    let d = model.manifold.chart_dim;
    let coeffs: Vec<(usize, f64, f64, f64)> = (0..d)
        .flat_map(|a| (1..=3).map(move |j| (a, j as f64)))
        .map(|(a, j)| (a, j, rng.random_range(-1.0..1.0) / j, rng.random_range(-1.0..1.0) / j))
        .collect();
    GaugeField::from_chart(model, |x| {
        let mut v = 0.0;
        let mut g = vec![0.0; x.len()];
        for &(a, j, s, cc) in &coeffs {
            v += s * (j * x[a]).sin() + cc * (j * x[a]).cos();
            g[a] += j * (s * (j * x[a]).cos() - cc * (j * x[a]).sin());
        }
        (v, g)
    })
}

fn criterion_4() -> Check {
    let cfg = CheckConfig::default();
    let mut worst_dev = 0.0_f64;
    let mut worst_res = 0.0_f64;
    let models = [
        ("circle-plane-waves", circle_plane_waves(32, 3).map_err(err)?),
        ("torus-tetrads", torus_tetrads(8).map_err(err)?),
    ];
    for (name, model) in &models {
        let fields = [
            ("const", GaugeField::constant(model, 0.7)),
            (
                "sin",
                GaugeField::from_chart(model, |x| {
                    (x[0].sin(), {
                        let mut g = vec![0.0; x.len()];
                        g[0] = x[0].cos();
                        g
                    })
                }),
            ),
            ("random", random_smooth(model, 17)),
        ];
        for (chi, field) in &fields {
            for q in [1.0, -2.5] {
                let r = gauge_check(model, field, q, &cfg).map_err(err)?;
                ensure(r.deviation <= 1e-12, || {
                    format!("{name} χ={chi}: deviation {:e}", r.deviation)
                })?;
                let res = r.verdict.residual();
                ensure(r.verdict.is_equivalent() && res.unwrap() <= 1e-8, || {
                    format!("{name} χ={chi}: {:?}", r.verdict.label())
                })?;
                worst_dev = worst_dev.max(r.deviation);
                worst_res = worst_res.max(res.unwrap());
            }
        }
    }
    let mut lattice_res = 0.0_f64;
    let potential: Vec<f64> = (0..16).map(|j| 0.1 * (j as f64).sin()).collect();
    let lattices = [
        (LatticeDiracModel::new(16, 1.0, 0.5, 1.0), 8),
        (LatticeDiracModel::new(16, 1.0, 0.5, 1.0).with_potential(potential), 8),
    ];
    for (lattice, m) in &lattices {
        for seed in 0..3 {
            let mut rng = seeded_rng(100 + seed);
            let chi: Vec<f64> = (0..lattice.sites).map(|_| rng.random_range(-PI..PI)).collect();
            let v = lattice_gauge_check(lattice, *m, &chi, &cfg).map_err(err)?;
            ensure(v.is_equivalent() && v.residual().unwrap() <= 1e-9, || {
                format!("lattice m={m}: {v:?}")
            })?;
            lattice_res = lattice_res.max(v.residual().unwrap());
        }
    }
    Ok(format!(
        "max deviation {worst_dev:.2e}, max residual {worst_res:.2e}, lattice max residual {lattice_res:.2e}"
    ))
}

fn criterion_5() -> Check {
    let cfg = CheckConfig::default();
    let mut worst = 0.0_f64;
    let mut count = 0;
    let models = [
        circle_trig_pair(32).map_err(err)?,
        circle_plane_waves(24, 3).map_err(err)?,
    ];
    for model in &models {
        let n = model.n_points();
        let mut maps: Vec<(Vec<usize>, f64)> = (0..n).map(|s| ((0..n).map(|k| (k + s) % n).collect(), 1.0)).collect();
        maps.push(((0..n).map(|k| (n - k) % n).collect(), -1.0));
        for (perm, j) in maps {
            let jac = vec![DMatrix::from_element(1, 1, j); n];
            let v = diffeo_check(model, &perm, &jac, &cfg).map_err(err)?;
            ensure(v.is_equivalent() && v.residual().unwrap() <= 1e-8, || format!("{v:?}"))?;
            worst = worst.max(v.residual().unwrap());
            count += 1;
        }
    }
    Ok(format!("{count} rotations/reflections, max residual {worst:.2e}"))
}

fn criterion_6() -> Check {
    let mut cases = 0;
    for f in 1..=8usize {
        for r in 1..=4usize.min(f) {
            for p in 0..=r {
                let bound = SignatureBound::new(p, r - p);
                let formula = fpq_dimension(f, bound).map_err(err)?;
                ensure(formula == 2 * f * r - r * r, || {
                    format!("f={f} p+q={r}: formula {formula}")
                })?;
                let rank = fpq_rank_check(f, bound, 8, (f * 10 + r) as u64).map_err(err)?;
                ensure(rank == formula, || {
                    format!("f={f} (p,q)=({p},{}): rank {rank} vs {formula}", r - p)
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (f, p, q) cases with f ≤ 8, p+q ≤ 4"))
}

fn random_geometry(seed: u64) -> CorrelationGeometry {
    let mut rng = seeded_rng(seed);
    let f = rng.random_range(1..=16);
    let n = rng.random_range(1..=64);
    let atoms = (0..n)
        .map(|_| {
            let op = HermitianOperator::new(random_hermitian(f, &mut rng)).unwrap();
            Atom::new(op, rng.random_range(0.1..2.0))
        })
        .collect();
    CorrelationGeometry::from_measure(f, CorrelationMeasure { atoms, agg_tol: 1e-8 }).unwrap()
}

fn conjugated(g: &CorrelationGeometry, u: &CMat) -> CorrelationGeometry {
    let atoms = g
        .atoms()
        .iter()
        .map(|a| Atom::new(conjugate(u, &a.operator).unwrap(), a.weight))
        .collect();
    CorrelationGeometry::with_bound(
        g.f,
        g.bound,
        CorrelationMeasure {
            atoms,
            agg_tol: g.measure.agg_tol,
        },
    )
    .unwrap()
}

fn shifted_spectrum(g: &CorrelationGeometry, atom: usize, shift: f64) -> CorrelationGeometry {
    let mut out = g.clone();
    let op = &g.atoms()[atom].operator;
    let (_, vectors) = corrgeom::linalg::eigh(op.entries()).unwrap();
    let v = vectors.column(0).into_owned();
    let bumped = op.entries() + &v * v.adjoint() * c(shift, 0.0);
    out.measure.atoms[atom].operator = HermitianOperator::new(bumped).unwrap();
    out
}

fn criterion_7() -> Check {
    let tol = 1e-8;
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let g = random_geometry(seed);
        let u = random_unitary(g.f, &mut seeded_rng(seed + 1000));
        let mut h = conjugated(&g, &u);
        h.measure.atoms.reverse();
        let ab = check_equivalence_seeded(&g, &h, tol, seed).map_err(err)?;
        let ba = check_equivalence_seeded(&h, &g, tol, seed).map_err(err)?;
        let scale = geometry_scale(&g);
        for v in [&ab, &ba] {
            ensure(v.is_equivalent() && v.residual().unwrap() <= tol * scale, || {
                format!("seed {seed} (f={}, n={}): {}", g.f, g.atoms().len(), v.label())
            })?;
        }
        worst = worst.max(ab.residual().unwrap() / scale);
    }
    let mut names = BTreeMap::new();
    for seed in 0..100u64 {
        let g = random_geometry(seed + 500);
        let u = random_unitary(g.f, &mut seeded_rng(seed + 2000));
        let h = shifted_spectrum(&conjugated(&g, &u), 0, 1e-3);
        let ab = check_equivalence(&g, &h, tol).map_err(err)?;
        let ba = check_equivalence(&h, &g, tol).map_err(err)?;
        for (v, (x, y)) in [(&ab, (&g, &h)), (&ba, (&h, &g))] {
            match v {
                EquivalenceVerdict::Inequivalent { certificate } => {
                    ensure(certificate.verify(x, y), || {
                        format!("seed {seed}: certificate does not verify")
                    })?;
                    *names.entry(certificate.name()).or_insert(0) += 1;
                }
                other => {
                    return Err(format!(
                        "seed {seed} (f={}, n={}): {}",
                        g.f,
                        g.atoms().len(),
                        other.label()
                    ))
                }
            }
        }
    }
    Ok(format!(
        "100 conjugate pairs (max residual/scale {worst:.2e}), 100 perturbed pairs {names:?}, no contradictions"
    ))
}

fn criterion_8() -> Check {
    let mut worst = 0.0_f64;
    for k in 1..=5usize {
        let model = circle_plane_waves(32, k).map_err(err)?;
        let geom = pushforward(&model, 1e-8).map_err(err)?;
        for shift in 0..32 {
            let u = induced_translation_unitary(&model, shift).map_err(err)?;
            let r = check_symmetry(&geom, &u, 1e-8).map_err(err)?;
            ensure(r.symmetric && r.discrepancy <= 1e-10, || {
                format!("kmax={k} shift={shift}: discrepancy {:e}", r.discrepancy)
            })?;
            worst = worst.max(r.discrepancy);
        }
    }
    Ok(format!("kmax 1..=5, all 32 shifts, max discrepancy {worst:.2e}"))
}

fn criterion_9() -> Check {
    let pairs = [
        (
            pushforward(&circle_plane_waves(16, 1).unwrap(), 1e-8).unwrap(),
            pushforward(&CirclePlaneWaves::new(16, 1).radius(2.0).build().unwrap(), 1e-8).unwrap(),
        ),
        (
            pushforward(&torus_tetrads(4).unwrap(), 1e-8).unwrap(),
            pushforward(&circle_trig_pair(32).unwrap(), 1e-8).unwrap(),
        ),
        (random_geometry(7), random_geometry(8)),
    ];
    for (i, (g1, g2)) in pairs.iter().enumerate() {
        let (m1, m2) = (g1.total_mass(), g2.total_mass());
        for agg in [0.0, 1e-8, f64::INFINITY] {
            for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let m = mix(g1, g2, &MixSpec::new(tau), agg).map_err(err)?;
                let expected = tau * m2 + (1.0 - tau) * m1;
                let diff = (m.total_mass() - expected).abs();
                ensure(diff <= 1e-10 * expected.max(1.0), || {
                    format!("pair {i} τ={tau}: mass off by {diff:e}")
                })?;
            }
        }
        let at_one = mix(g1, g2, &MixSpec::new(1.0), 1e-8).map_err(err)?;
        let f = at_one.f;
        let padded = corrgeom::equivalence::embed(g2, f).map_err(err)?;
        ensure(at_one.atoms() == padded.atoms(), || {
            format!("pair {i}: τ=1 changed the atoms")
        })?;
        let at_zero = mix(g1, g2, &MixSpec::new(0.0), 1e-8).map_err(err)?;
        let padded = corrgeom::equivalence::embed(g1, f).map_err(err)?;
        ensure(at_zero.atoms() == padded.atoms(), || {
            format!("pair {i}: τ=0 changed the atoms")
        })?;
    }
    Ok("3 pairs × 3 agg_tol × 5 τ; endpoints return the inputs exactly".into())
}

fn criterion_10() -> Check {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (name, model) in builtins() {
        let vol = model.manifold.total_volume();
        for agg in [0.0, 1e-12, 1e-8, 1e-4, 1e-1, f64::INFINITY] {
            let g = pushforward(&model, agg).map_err(err)?;
            let rel = (g.total_mass() - vol).abs() / vol;
            ensure(rel <= 1e-9, || format!("{name} agg_tol={agg}: relative error {rel:e}"))?;
            worst = worst.max(rel);
            count += 1;
        }
    }
    Ok(format!("{count} geometries, max relative error {worst:.2e}"))
}

struct Run {
    code: i32,
    stdout: Vec<u8>,
    files: Vec<Vec<u8>>,
    report: serde_json::Value,
}

fn cli(dir: &Path, args: &[&str], outputs: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_corrgeom"))
        .args(args)
        .args(["--report", "report.json"])
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let mut report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    report.as_object_mut().unwrap().remove("wall_time_s");
    Run {
        code: out.status.code().unwrap(),
        stdout: out.stdout,
        files: outputs.iter().map(|f| fs::read(dir.join(f)).unwrap()).collect(),
        report,
    }
}

fn criterion_11() -> Check {
    let dirs = [tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?];
    let script: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec![
                "build",
                "--builtin",
                "circle-plane-waves",
                "--n",
                "16",
                "--kmax",
                "2",
                "-o",
                "a.json",
            ],
            vec!["a.json"],
        ),
        (
            vec![
                "build",
                "--builtin",
                "circle-plane-waves",
                "--n",
                "16",
                "--kmax",
                "2",
                "--radius",
                "2",
                "-o",
                "b.json",
            ],
            vec!["b.json"],
        ),
        (
            vec!["build", "--builtin", "circle-trig-pair", "--n", "32", "-o", "t.json"],
            vec!["t.json"],
        ),
        (
            vec!["build", "--builtin", "torus-tetrads", "--n", "8", "-o", "tt.json"],
            vec!["tt.json"],
        ),
        (
            vec![
                "build",
                "--builtin",
                "lattice-dirac-sea",
                "--sites",
                "16",
                "-o",
                "l.json",
            ],
            vec!["l.json"],
        ),
        (vec!["compare", "a.json", "b.json"], vec![]),
        (vec!["compare", "a.json", "a.json", "-o", "v.json"], vec!["v.json"]),
        (vec!["compare", "t.json", "l.json", "--seed", "3"], vec![]),
        (
            vec![
                "gauge-check",
                "--builtin",
                "circle-plane-waves",
                "--chi",
                "random",
                "--seed",
                "5",
            ],
            vec![],
        ),
        (
            vec![
                "gauge-check",
                "--builtin",
                "lattice-dirac-sea",
                "--chi",
                "random",
                "--seed",
                "5",
            ],
            vec![],
        ),
        (
            vec![
                "diffeo-check",
                "--builtin",
                "circle-trig-pair",
                "--n",
                "32",
                "--shift",
                "7",
                "--seed",
                "2",
            ],
            vec![],
        ),
        (
            vec![
                "diffeo-check",
                "--builtin",
                "circle-trig-pair",
                "--n",
                "32",
                "--reflect",
            ],
            vec![],
        ),
        (
            vec![
                "symmetry-check",
                "--builtin",
                "circle-plane-waves",
                "--n",
                "32",
                "--kmax",
                "5",
                "--all-shifts",
            ],
            vec![],
        ),
        (vec!["symmetry-check", "a.json", "--unitary", "v.json"], vec![]),
        (
            vec!["mix", "a.json", "b.json", "--tau", "0.25", "-o", "m.json"],
            vec!["m.json"],
        ),
        (
            vec!["mix", "a.json", "a.json", "--tau", "0.5", "--aligner-from", "v.json"],
            vec![],
        ),
        (
            vec!["dim-check", "--f", "6", "--p", "2", "--q", "1", "--seed", "9"],
            vec![],
        ),
        (
            vec![
                "resolution",
                "--builtin",
                "circle-plane-waves",
                "--kmax",
                "2",
                "--ns",
                "8,16,32",
                "--format",
                "csv",
            ],
            vec![],
        ),
        (
            vec![
                "resolution",
                "--builtin",
                "lattice-dirac-sea",
                "--ns",
                "8,16",
                "--format",
                "json",
            ],
            vec![],
        ),
    ];
    for (args, outputs) in &script {
        let a = cli(dirs[0].path(), args, outputs);
        let b = cli(dirs[1].path(), args, outputs);
        let same = a.code == b.code && a.stdout == b.stdout && a.files == b.files && a.report == b.report;
        ensure(same, || format!("`{}` differs between runs", args.join(" ")))?;
        ensure(a.code < 64, || {
            format!("`{}` failed with exit {}", args.join(" "), a.code)
        })?;
    }
    Ok(format!(
        "{} commands reproduced byte for byte (report minus wall time)",
        script.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("torus tetrads collapse to one identity atom", criterion_1),
        ("trig pair atoms are degenerate", criterion_2),
        ("atom rank bounded by fiber dimension", criterion_3),
        ("gauge transforms are exact equivalences", criterion_4),
        ("circle rotations and reflection are equivalences", criterion_5),
        ("regular stratum dimension formula", criterion_6),
        ("equivalence soundness", criterion_7),
        ("lattice translations are symmetries", criterion_8),
        ("mixing mass linearity", criterion_9),
        ("measure conservation", criterion_10),
        ("CLI reproducibility", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
