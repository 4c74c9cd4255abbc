use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use urt_core::certificates::{
    certified_with_shift, conjecture_check, min_self_interference_shift, zcompat_certificate, CertificateReport,
};
use urt_core::presets;
use urt_core::regions::{
    rate_membership, rates_to_sinr, sample_pareto_cloud, sinr_membership, write_cloud_csv, RegionQuery, Space,
};
use urt_core::scenario::{self, Scenario, ScenarioConfig};
use urt_core::spectral::{feasible_under_constraint, scaled_eigenpair};
use urt_core::sumrate::maximize_weighted_sumrate;
use urt_core::{AffineModel, Matrix64};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::io::{load_affine, load_json, load_mapping, load_norm, write_json, write_text, Paths, Summary};

pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Scenario(ScenarioCommand::Gen(a)) => scenario_gen(a),
        Command::Scenario(ScenarioCommand::Reduce(a)) => scenario_reduce(a),
        Command::CheckZcompat(a) => check_zcompat(a),
        Command::Radius(a) => radius(a),
        Command::Feasible(a) => feasible(a),
        Command::ParetoSample(a) => pareto_sample(a),
        Command::RateMember(a) => rate_member(a),
        Command::Sumrate(a) => sumrate(a),
        Command::ShiftMin(a) => shift_min(a),
        Command::Conjecture(a) => conjecture(a),
    }
}

fn positive_tol(tol: f64) -> CliResult<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--tol must be positive, got {tol}")))
    }
}

fn scenario_gen(a: &ScenarioGenArgs) -> CliResult<()> {
    Paths::default()
        .input_opt(a.config.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    let mut config: ScenarioConfig = match &a.config {
        Some(p) => load_json(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.store_channels |= a.store_channels;
    let s = scenario::generate(&config)?;
    write_json(a.out.as_ref(), &s)?;
    Summary::new()
        .put("users", config.num_users)
        .put("aps", config.num_aps)
        .put("realizations", config.num_realizations)
        .put("seed", config.seed)
        .nums("b", &s.moments.b)
        .nums("self", &s.moments.self_interference)
        .nums("noise", &s.moments.noise)
        .print()
}

fn scenario_reduce(a: &ScenarioReduceArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.input)
        .output_opt(a.out.as_ref())
        .output_opt(a.norm_out.as_ref())
        .validate()?;
    let s: Scenario = load_json(&a.input)?;
    let model = scenario::to_affine_model(&s)?;
    let norm = scenario::power_norm(&s)?;
    write_json(a.out.as_ref(), &model)?;
    write_json(a.norm_out.as_ref(), &norm)?;
    let mut out = Summary::new().put("users", model.dim());
    for (i, row) in model.matrix().to_rows().iter().enumerate() {
        out = out.nums(&format!("M{}", i + 1), row);
    }
    out.nums("u", model.noise()).num("p_max", s.config.p_max).print()
}

fn builtin_model(b: Builtin) -> AffineModel {
    let m: Matrix64 = match b {
        Builtin::Conjecture => presets::conjecture_matrix(),
        Builtin::Remark => presets::remark_matrix(),
        Builtin::Scenario => presets::scenario_matrix(),
    };
    let n = m.nrows();
    AffineModel::new(m, vec![1.0; n]).expect("preset matrices are valid")
}

fn certificate_summary(r: &CertificateReport<f64>) -> Summary {
    let pairs: Vec<String> = r.failing_pairs.iter().map(|(i, j)| format!("({i},{j})")).collect();
    let overall = serde_json::to_value(r.overall).expect("enum serializes");
    let mut out = Summary::new()
        .put("overall", overall.as_str().unwrap_or_default())
        .put("failing_pairs", pairs.join(";"));
    for v in &r.verdicts {
        out = out.put(&format!("inverse_z[{}]", v.label), v.inverse_z);
    }
    out
}

fn model_and_norm(
    model: Option<&PathBuf>,
    builtin: Option<Builtin>,
    norm: Option<&PathBuf>,
) -> CliResult<(AffineModel, Option<urt_core::Norm>)> {
    let model = match (model, builtin) {
        (_, Some(b)) => builtin_model(b),
        (Some(p), None) => load_affine(p)?,
        (None, None) => return Err(CliError::usage("either --model or --builtin-paper is required")),
    };
    let norm = norm.map(|p| load_norm(p)).transpose()?;
    Ok((model, norm))
}

fn check_zcompat(a: &CheckZcompatArgs) -> CliResult<()> {
    Paths::default()
        .input_opt(a.model.as_ref())
        .input_opt(a.norm.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    positive_tol(a.tol)?;
    let (model, norm) = model_and_norm(a.model.as_ref(), a.builtin_paper, a.norm.as_ref())?;
    let report = zcompat_certificate(&model, norm.as_ref(), a.tol)?;
    write_json(a.out.as_ref(), &report)?;
    certificate_summary(&report).print()
}

fn target_sinr(t: &Target) -> CliResult<Vec<f64>> {
    match (&t.sinr, &t.rates) {
        (Some(s), None) => Ok(s.clone()),
        (None, Some(r)) => Ok(rates_to_sinr(r)?),
        _ => Err(CliError::usage("exactly one of --sinr and --rates is required")),
    }
}

#[derive(Serialize)]
struct RadiusReport {
    sinr: Vec<f64>,
    spectral_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bound: Option<f64>,
}

fn radius(a: &RadiusArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.model)
        .input_opt(a.norm.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    positive_tol(a.tol)?;
    let mapping = load_mapping(&a.model)?;
    let norm = a.norm.as_ref().map(|p| load_norm(p)).transpose()?;
    let sinr = target_sinr(&a.target)?;
    let report = match norm {
        Some(norm) => {
            let eig = scaled_eigenpair(&sinr, &mapping, &norm, a.tol, a.max_iter, None)?;
            match eig {
                Some(e) => RadiusReport {
                    sinr,
                    spectral_radius: e.value,
                    eigenvector: Some(e.vector),
                    iterations: Some(e.iterations),
                    residual: Some(e.residual),
                    lower_bound: Some(e.lower_bound),
                    upper_bound: Some(e.upper_bound),
                },
                None => RadiusReport {
                    sinr,
                    spectral_radius: 0.0,
                    eigenvector: None,
                    iterations: None,
                    residual: None,
                    lower_bound: None,
                    upper_bound: None,
                },
            }
        }
        None => {
            let q = RegionQuery::unconstrained(mapping, Space::Sinr);
            let m = sinr_membership(&q, &sinr, 0.0)?;
            RadiusReport {
                sinr,
                spectral_radius: m.spectral_radius,
                eigenvector: None,
                iterations: None,
                residual: None,
                lower_bound: None,
                upper_bound: None,
            }
        }
    };
    write_json(a.out.as_ref(), &report)?;
    let mut out = Summary::new().num("spectral_radius", report.spectral_radius);
    if let Some(v) = &report.eigenvector {
        out = out.nums("eigenvector", v);
    }
    out.print()
}

fn feasible(a: &FeasibleArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.model)
        .input(&a.norm)
        .output_opt(a.out.as_ref())
        .validate()?;
    if !(a.tol >= 0.0) {
        return Err(CliError::usage("--tol must be nonnegative"));
    }
    let mapping = load_mapping(&a.model)?;
    let norm = load_norm(&a.norm)?;
    let sinr = target_sinr(&a.target)?;
    let verdict = feasible_under_constraint(&mapping, &norm, &sinr, a.tol)?;
    write_json(a.out.as_ref(), &verdict)?;
    let status = serde_json::to_value(verdict.status).expect("enum serializes");
    let mut out = Summary::new()
        .put("status", status.as_str().unwrap_or_default())
        .num("spectral_radius", verdict.spectral_radius);
    if let Some(p) = &verdict.power {
        out = out.nums("power", p);
    }
    out.print()
}

fn pareto_sample(a: &ParetoSampleArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.model)
        .input(&a.norm)
        .output_opt(a.out.as_ref())
        .validate()?;
    let mapping = load_mapping(&a.model)?;
    let norm = load_norm(&a.norm)?;
    let points = sample_pareto_cloud(&mapping, &norm, a.count, a.seed)?;
    let mut buf = Vec::new();
    write_cloud_csv(&mut buf, mapping.dim(), &points).expect("writing to memory");
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    match &a.out {
        Some(path) => {
            write_text(path, &text)?;
            let worst = points
                .iter()
                .map(|p| (p.radius_check - 1.0).abs())
                .fold(0.0, f64::max);
            Summary::new()
                .put("points", points.len())
                .num("max_radius_deviation", worst)
                .print()
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn rate_member(a: &RateMemberArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.model)
        .input_opt(a.norm.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    if !(a.tol >= 0.0) {
        return Err(CliError::usage("--tol must be nonnegative"));
    }
    let mapping = load_mapping(&a.model)?;
    let q = match &a.norm {
        Some(p) => RegionQuery::constrained(mapping, load_norm(p)?, Space::Rate)?,
        None => RegionQuery::unconstrained(mapping, Space::Rate),
    };
    let report = rate_membership(&q, &a.rates, a.tol)?;
    write_json(a.out.as_ref(), &report)?;
    let membership = serde_json::to_value(report.membership).expect("enum serializes");
    Summary::new()
        .put("membership", membership.as_str().unwrap_or_default())
        .num("spectral_radius", report.spectral_radius)
        .put("achievable", report.achievable)
        .print()
}

fn sumrate(a: &SumrateArgs) -> CliResult<()> {
    Paths::default()
        .input(&a.model)
        .input(&a.norm)
        .output_opt(a.out.as_ref())
        .validate()?;
    positive_tol(a.tol)?;
    let mapping = load_mapping(&a.model)?;
    let norm = load_norm(&a.norm)?;
    let sol = maximize_weighted_sumrate(&mapping, &norm, &a.weights, a.tol)?;
    write_json(a.out.as_ref(), &sol)?;
    let mut out = Summary::new().num("value", sol.value).nums("rates", &sol.rates);
    if let Some(p) = &sol.power {
        out = out.nums("power", p);
    }
    out.num("boundary_residual", sol.boundary_residual)
        .put("certified_convex", sol.certified_convex)
        .put("agreeing_starts", sol.agreeing_starts)
        .print()
}

#[derive(Serialize)]
struct ShiftReport {
    alpha: f64,
    certified: bool,
    report: CertificateReport<f64>,
}

fn shift_min(a: &ShiftMinArgs) -> CliResult<()> {
    Paths::default()
        .input_opt(a.model.as_ref())
        .input_opt(a.norm.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    positive_tol(a.tol)?;
    let (model, norm) = model_and_norm(a.model.as_ref(), a.builtin_paper, a.norm.as_ref())?;
    let alpha = min_self_interference_shift(&model, norm.as_ref(), a.tol)?;
    let certified = certified_with_shift(&model, norm.as_ref(), alpha)?;
    let shifted = model.with_self_interference(alpha)?;
    let report = zcompat_certificate(&shifted, norm.as_ref(), urt_core::certificates::DEFAULT_Z_TOL)?;
    let doc = ShiftReport {
        alpha,
        certified,
        report,
    };
    write_json(a.out.as_ref(), &doc)?;
    Summary::new()
        .num("alpha", alpha)
        .put("certified", certified)
        .print()
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Bare(Matrix64),
    Model {
        #[serde(rename = "M")]
        m: Matrix64,
    },
}

fn conjecture(a: &ConjectureArgs) -> CliResult<()> {
    Paths::default()
        .input_opt(a.matrix.as_ref())
        .output_opt(a.out.as_ref())
        .validate()?;
    if !(a.tol >= 0.0) {
        return Err(CliError::usage("--tol must be nonnegative"));
    }
    let (m, x1, x2, alpha) = if a.builtin_paper {
        presets::conjecture_instance::<f64>()
    } else {
        let path = a
            .matrix
            .as_ref()
            .ok_or_else(|| CliError::usage("--matrix or --builtin-paper is required"))?;
        let m = match load_json::<MatrixFile>(path)? {
            MatrixFile::Bare(m) | MatrixFile::Model { m } => m,
        };
        let missing = || CliError::usage("--x1, --x2 and --alpha are required with --matrix");
        (
            m,
            a.x1.clone().ok_or_else(missing)?,
            a.x2.clone().ok_or_else(missing)?,
            a.alpha.ok_or_else(missing)?,
        )
    };
    let report = conjecture_check(&m, &x1, &x2, alpha, a.tol)?;
    write_json(a.out.as_ref(), &report)?;
    Summary::new()
        .put("sym_psd", report.sym_psd)
        .num("min_sym_eigenvalue", report.min_sym_eigenvalue)
        .num("lhs", report.lhs)
        .num("rhs", report.rhs)
        .num("margin", report.margin)
        .put("quasiconvexity_violated", report.quasiconvexity_violated)
        .print()
}
