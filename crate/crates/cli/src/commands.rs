use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use corrgeom::correlation::{pairs_dim, pairs_to_matrix, regularity_report};
use corrgeom::equivalence::{
    check_equivalence_seeded, check_symmetry, diffeo_check, gauge_check, induced_translation_unitary,
    lattice_gauge_check, CheckConfig, EquivalenceVerdict, SymmetryReport, VerdictFile,
};
use corrgeom::linalg::{seeded_rng, CMat};
use corrgeom::mixing::{mix, mixture_diagnostics, mixture_file, MixSpec};
use corrgeom::{
    fpq_dimension, fpq_rank_check, pushforward, CorrelationGeometry, EffectiveModel, GaugeField, GeometryFile,
    SignatureBound,
};

use crate::args::{
    BuildArgs, Builtin, ChiKind, Common, CompareArgs, DiffeoArgs, DimArgs, GaugeArgs, MixArgs, ResolutionArgs,
    SymmetryArgs, TableFormat,
};
use crate::report::{exit, to_json, CmdResult, Failure, Outcome, Run};
use crate::source::load_model;

fn config(common: &Common) -> CheckConfig {
    CheckConfig {
        tol: common.tol,
        agg_tol: common.agg_tol,
        seed: common.seed,
    }
}

fn record_common(common: &Common, run: &mut Run, with_agg: bool) {
    run.param("tol", common.tol);
    if with_agg {
        run.param("agg_tol", corrgeom::correlation::AggTol(common.agg_tol));
    }
    run.param("seed", common.seed);
}

fn verdict_code(v: &EquivalenceVerdict) -> i32 {
    match v {
        EquivalenceVerdict::Equivalent { .. } => exit::OK,
        EquivalenceVerdict::Inequivalent { .. } => exit::NEGATIVE,
        EquivalenceVerdict::Inconclusive { .. } => exit::INCONCLUSIVE,
    }
}

fn read_geometry(path: &std::path::Path, run: &mut Run) -> CmdResult<CorrelationGeometry> {
    let text = run.read(path)?;
    Ok(GeometryFile::parse(&text)?.into_geometry()?)
}

#[derive(Serialize)]
struct BuildSummary {
    f: usize,
    p: usize,
    q: usize,
    atom_count: usize,
    total_mass: f64,
    regular_mass_fraction: f64,
}

pub fn build(args: &BuildArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    let (model, _) = load_model(&args.source, run)?;
    let geom = pushforward(&model, args.common.agg_tol)?;
    let regularity = regularity_report(&geom);
    run.verdict(BuildSummary {
        f: geom.f,
        p: geom.bound.p,
        q: geom.bound.q,
        atom_count: geom.atoms().len(),
        total_mass: geom.total_mass(),
        regular_mass_fraction: regularity.regular_mass_fraction,
    });
    Ok(Outcome {
        code: exit::OK,
        payload: geom.to_json_string(),
    })
}

pub fn compare(args: &CompareArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, false);
    let g1 = read_geometry(&args.first, run)?;
    let g2 = read_geometry(&args.second, run)?;
    let verdict = check_equivalence_seeded(&g1, &g2, args.common.tol, args.common.seed)?;
    let file = verdict.to_file();
    run.verdict(&file);
    Ok(Outcome {
        code: verdict_code(&verdict),
        payload: to_json(&file),
    })
}

/// `χ(x) = Σ_a Σ_{j≤3} (α_{aj} sin(j x_a) + β_{aj} cos(j x_a))` with
/// coefficients drawn from the seed, `α, β ∈ [−1/j, 1/j]`.
struct RandomSmooth {
    coeffs: Vec<Vec<(f64, f64)>>,
}

impl RandomSmooth {
    const MODES: usize = 3;

    fn new(dim: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let coeffs = (0..dim)
            .map(|_| {
                (1..=Self::MODES)
                    .map(|j| {
                        let amp = 1.0 / j as f64;
                        (rng.random_range(-amp..amp), rng.random_range(-amp..amp))
                    })
                    .collect()
            })
            .collect();
        Self { coeffs }
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (a, modes) in self.coeffs.iter().enumerate() {
            for (j, &(s, c)) in modes.iter().enumerate() {
                let k = (j + 1) as f64;
                let (sin, cos) = (k * x[a]).sin_cos();
                value += s * sin + c * cos;
                grad[a] += k * (s * cos - c * sin);
            }
        }
        (value, grad)
    }
}

type ChartFn = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>)>;

fn chi_function(kind: ChiKind, value: f64, dim: usize, seed: u64) -> ChartFn {
    match kind {
        ChiKind::Const => Box::new(move |x: &[f64]| (value, vec![0.0; x.len()])),
        ChiKind::Sin => Box::new(|x: &[f64]| {
            let mut grad = vec![0.0; x.len()];
            grad[0] = x[0].cos();
            (x[0].sin(), grad)
        }),
        ChiKind::Random => {
            let field = RandomSmooth::new(dim, seed);
            Box::new(move |x: &[f64]| field.eval(x))
        }
    }
}

#[derive(Serialize)]
struct GaugeOutput {
    deviation: Option<f64>,
    worst_point: Option<usize>,
    verdict: VerdictFile,
}

pub fn gauge(args: &GaugeArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    run.param("chi", format!("{:?}", args.chi).to_lowercase());
    if args.chi == ChiKind::Const {
        run.param("chi_value", args.chi_value);
    }
    run.param("q", args.q);
    let cfg = config(&args.common);
    let (model, builtin) = load_model(&args.source, run)?;
    let output = if builtin == Some(Builtin::LatticeDiracSea) {
        let b = &args.source.builtin;
        let sites = b.sites;
        let chi = chi_function(args.chi, args.chi_value, 1, args.common.seed);
        let values: Vec<f64> = (0..sites)
            .map(|j| chi(&[2.0 * PI * j as f64 / sites as f64]).0)
            .collect();
        let lattice = b.lattice(sites);
        let lattice = corrgeom::LatticeDiracModel {
            charge: args.q,
            ..lattice
        };
        run.param("charge", args.q);
        let verdict = lattice_gauge_check(&lattice, b.m_fields(sites), &values, &cfg)?;
        GaugeOutput {
            deviation: None,
            worst_point: None,
            verdict: verdict.to_file(),
        }
    } else {
        let dim = model.manifold.chart_dim;
        if dim == 0 {
            return Err(Failure::usage("gauge functions need at least one chart coordinate"));
        }
        let chi = chi_function(args.chi, args.chi_value, dim, args.common.seed);
        let field = GaugeField::from_chart(&model, chi);
        let report = gauge_check(&model, &field, args.q, &cfg)?;
        GaugeOutput {
            deviation: Some(report.deviation),
            worst_point: Some(report.worst_point),
            verdict: report.verdict.to_file(),
        }
    };
    run.verdict(&output);
    let code = verdict_code_of_file(&output.verdict);
    Ok(Outcome {
        code,
        payload: to_json(&output),
    })
}

fn verdict_code_of_file(file: &VerdictFile) -> i32 {
    match file.verdict.as_str() {
        "equivalent" => exit::OK,
        "inequivalent" => exit::NEGATIVE,
        _ => exit::INCONCLUSIVE,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    perm: Vec<usize>,
    jacobians: Vec<Vec<Vec<f64>>>,
}

fn chain_map(model: &EffectiveModel, shift: i64, reflect: bool) -> CmdResult<(Vec<usize>, Vec<DMatrix<f64>>)> {
    if model.manifold.chart_dim != 1 {
        return Err(Failure::usage(format!(
            "--shift/--reflect need a one-dimensional chart, this model has {}; use --map",
            model.manifold.chart_dim
        )));
    }
    let n = model.n_points() as i64;
    if n == 0 {
        return Err(Failure::usage("model has no points"));
    }
    let s = shift.rem_euclid(n);
    let perm = (0..n)
        .map(|k| {
            let k = if reflect { (n - k) % n } else { k };
            ((k + s) % n) as usize
        })
        .collect();
    let j = if reflect { -1.0 } else { 1.0 };
    Ok((perm, vec![DMatrix::from_element(1, 1, j); n as usize]))
}

pub fn diffeo(args: &DiffeoArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    let (model, _) = load_model(&args.source, run)?;
    let (perm, jacobians) = match &args.map {
        Some(path) => {
            let text = run.read(path)?;
            let map: MapFile = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("map file: {e}")))?;
            let jacobians = map
                .jacobians
                .iter()
                .map(|rows| {
                    let d = rows.len();
                    if rows.iter().any(|r| r.len() != d) {
                        return Err(Failure::usage("map file: Jacobians must be square"));
                    }
                    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
                })
                .collect::<CmdResult<Vec<_>>>()?;
            (map.perm, jacobians)
        }
        None => {
            run.param("shift", args.shift);
            run.param("reflect", args.reflect);
            chain_map(&model, args.shift, args.reflect)?
        }
    };
    let verdict = diffeo_check(&model, &perm, &jacobians, &config(&args.common))?;
    let file = verdict.to_file();
    run.verdict(&file);
    Ok(Outcome {
        code: verdict_code(&verdict),
        payload: to_json(&file),
    })
}

fn parse_unitary(text: &str) -> CmdResult<CMat> {
    if let Ok(file) = VerdictFile::parse(text) {
        return file
            .witness_matrix()?
            .ok_or_else(|| Failure::usage(format!("verdict `{}` carries no witness", file.verdict)));
    }
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| Failure::usage(format!("unitary file: {e}")))?;
    Ok(pairs_to_matrix(&pairs, pairs_dim(&pairs)?)?)
}

#[derive(Serialize)]
struct ShiftReport {
    shift: i64,
    #[serde(flatten)]
    report: SymmetryReport,
}

pub fn symmetry(args: &SymmetryArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    let tol = args.common.tol;
    if let Some(path) = &args.geometry {
        let geom = read_geometry(path, run)?;
        let unitary = args.unitary.as_ref().expect("clap enforces --unitary");
        let u = parse_unitary(&run.read(unitary)?)?;
        let report = check_symmetry(&geom, &u, tol)?;
        run.verdict(&report);
        let code = if report.symmetric { exit::OK } else { exit::NEGATIVE };
        return Ok(Outcome {
            code,
            payload: to_json(&report),
        });
    }
    let which = args
        .builtin
        .builtin
        .ok_or_else(|| Failure::usage("give a geometry with --unitary, or --builtin circle-plane-waves"))?;
    if which != Builtin::CirclePlaneWaves {
        return Err(Failure::usage(
            "lattice translations are available for circle-plane-waves only",
        ));
    }
    args.builtin.record(which, run);
    let n = args.builtin.n_or_default(which);
    let model = args.builtin.build_sized(which, n)?;
    let geom = pushforward(&model, args.common.agg_tol)?;
    let shifts: Vec<i64> = if args.all_shifts {
        (0..n as i64).collect()
    } else {
        vec![args.shift.unwrap_or(1)]
    };
    run.param("shifts", &shifts);
    let reports = shifts
        .iter()
        .map(|&shift| {
            let u = induced_translation_unitary(&model, shift)?;
            Ok(ShiftReport {
                shift,
                report: check_symmetry(&geom, &u, tol)?,
            })
        })
        .collect::<corrgeom::Result<Vec<_>>>()?;
    for r in &reports {
        run.verdict(r);
    }
    let code = if reports.iter().all(|r| r.report.symmetric) {
        exit::OK
    } else {
        exit::NEGATIVE
    };
    let payload = if args.all_shifts {
        to_json(&reports)
    } else {
        to_json(&reports[0])
    };
    Ok(Outcome { code, payload })
}

pub fn mixture(args: &MixArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    run.param("tau", args.tau);
    let g1 = read_geometry(&args.first, run)?;
    let g2 = read_geometry(&args.second, run)?;
    let mut spec = MixSpec::new(args.tau);
    if let Some(path) = &args.aligner_from {
        let file = VerdictFile::parse(&run.read(path)?)?;
        let u = file.witness_matrix()?.ok_or_else(|| {
            Failure::usage(format!(
                "{}: verdict `{}` carries no witness",
                path.display(),
                file.verdict
            ))
        })?;
        spec = spec.with_aligner(u);
    }
    let mixed = mix(&g1, &g2, &spec, args.common.agg_tol)?;
    run.verdict(mixture_diagnostics(&mixed));
    Ok(Outcome {
        code: exit::OK,
        payload: mixture_file(&mixed, &g1, &g2, &spec).to_json_string(),
    })
}

#[derive(Serialize)]
struct DimOutput {
    f: usize,
    p: usize,
    q: usize,
    dimension: usize,
    measured_rank: usize,
}

pub fn dim_check(args: &DimArgs, run: &mut Run) -> CmdResult<Outcome> {
    run.param("f", args.f);
    run.param("p", args.p);
    run.param("q", args.q);
    run.param("trials", args.trials);
    run.param("seed", args.common.seed);
    let bound = SignatureBound::new(args.p, args.q);
    let dimension = fpq_dimension(args.f, bound)?;
    let measured_rank = fpq_rank_check(args.f, bound, args.trials, args.common.seed)?;
    let out = DimOutput {
        f: args.f,
        p: args.p,
        q: args.q,
        dimension,
        measured_rank,
    };
    run.verdict(&out);
    let code = if dimension == measured_rank {
        exit::OK
    } else {
        exit::NEGATIVE
    };
    Ok(Outcome {
        code,
        payload: to_json(&out),
    })
}

pub fn resolution(args: &ResolutionArgs, run: &mut Run) -> CmdResult<Outcome> {
    record_common(&args.common, run, true);
    let which = args
        .builtin
        .builtin
        .ok_or_else(|| Failure::usage("resolution needs --builtin"))?;
    args.builtin.record(which, run);
    run.parameters.remove("n");
    run.parameters.remove("sites");
    run.param("ns", &args.ns);
    let rows =
        corrgeom::correlation::resolution_study(|n| args.builtin.build_sized(which, n), &args.ns, args.common.agg_tol)?;
    for row in &rows {
        run.verdict(row);
    }
    let payload = match args.format {
        TableFormat::Json => to_json(&rows),
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).map_err(|e| Failure::software(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::software(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Failure::software(e.to_string()))?
        }
    };
    Ok(Outcome {
        code: exit::OK,
        payload,
    })
}
