//! Command-line front end. Each subcommand resolves its inputs against
//! per-domain defaults, runs one library harness, and prints a report that
//! echoes the resolved configuration. Exit code 0 means the verdict was
//! pass (or the command is informational), 2 means a verdict failed, 1 means
//! the invocation itself was unusable.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pluriscale::bergman::{
    bergman_kernel, bergman_metric, klembeck_harness, monomial_norms, reproducing_defect,
    QuadratureSpec,
};
use pluriscale::geometry::{
    levi_classify, make_catalog_domain, order_of_contact, CurveFamily, DefiningFunction,
    LeviOptions,
};
use pluriscale::harmonic::{poisson_bound_scan, ScanGrid};
use pluriscale::invmetrics::{
    asymptotics_csv, graham_asymptotics, kobayashi_closed_form, lee_ratio, metric_sandwich,
};
use pluriscale::linalg::cr;
use pluriscale::report::Verdict;
use pluriscale::scaling::{
    caratheodory_kernel_estimate, normal_convergence_check, parse_point,
    pinchuk_scaling_sequence, DomainSequence, GridSpec, OrbitSpec,
};
use pluriscale::wu::wu_metric;
use pluriscale::{CVec, Error};

#[derive(Parser)]
#[command(name = "pluriscale", version, about = "Geometric analysis of domains in C^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Levi-form classification at a boundary point
    Levi(CommonArgs),
    /// Finite-type order by monomial-curve contact search
    Type(CommonArgs),
    /// Boundary scaling along an automorphism orbit against the model domain
    Scale(CommonArgs),
    /// Set convergence of a domain sequence on a marked grid
    #[command(name = "kernel-convergence")]
    KernelConvergence(CommonArgs),
    /// Kobayashi metric value (closed form where known, else sandwich bounds)
    Metric(CommonArgs),
    /// Boundary asymptotics of d(q)^{1/2}-normalized metric products
    Graham(CommonArgs),
    /// Comparison ratio of the metric against its boundary model
    Lee(CommonArgs),
    /// Bergman kernel and metric from monomial norms
    Bergman(CommonArgs),
    /// Boundary limit of the Bergman sectional curvature
    Klembeck(CommonArgs),
    /// Wu ellipsoid of the Kobayashi indicatrix
    Wu(CommonArgs),
    /// Poisson kernel two-sided bound scan on the disc or ball
    Poisson(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Levi(_) => "levi",
            Command::Type(_) => "type",
            Command::Scale(_) => "scale",
            Command::KernelConvergence(_) => "kernel-convergence",
            Command::Metric(_) => "metric",
            Command::Graham(_) => "graham",
            Command::Lee(_) => "lee",
            Command::Bergman(_) => "bergman",
            Command::Klembeck(_) => "klembeck",
            Command::Wu(_) => "wu",
            Command::Poisson(_) => "poisson",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Levi(a)
            | Command::Type(a)
            | Command::Scale(a)
            | Command::KernelConvergence(a)
            | Command::Metric(a)
            | Command::Graham(a)
            | Command::Lee(a)
            | Command::Bergman(a)
            | Command::Klembeck(a)
            | Command::Wu(a)
            | Command::Poisson(a) => a,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Catalog domain tag: ball, disc, bidisc, egg, siegel, halfspace, ...
    #[arg(long)]
    domain: Option<String>,
    /// Complex dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Exponent parameter: egg(k) exponent, or the sphere dimension n for poisson
    #[arg(long)]
    k: Option<u32>,
    /// Sequence length / search depth, where the command iterates
    #[arg(long)]
    m: Option<u32>,
    /// Point literal `re:im,re:im,...` (`:im` optional)
    #[arg(long)]
    point: Option<String>,
    /// Direction literal, same syntax as --point
    #[arg(long)]
    xi: Option<String>,
    /// Truncation degree for series computations
    #[arg(long)]
    trunc: Option<u32>,
    /// Verdict tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Grid spec `key=value,...`, or a bare integer resolution
    #[arg(long)]
    grid: Option<String>,
    /// Recorded in the config echo; only `scale` draws samples from it
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit the timestamp so identical invocations emit identical bytes
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// The configuration a command actually ran with: raw literals as given,
/// defaults filled in by the command. Echoed in every report.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trunc: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    format: Format,
}

impl RunConfig {
    fn from_args(command: &str, a: &CommonArgs) -> RunConfig {
        RunConfig {
            command: command.into(),
            domain: a.domain.clone(),
            dim: a.dim,
            k: a.k,
            m: a.m,
            point: a.point.clone(),
            xi: a.xi.clone(),
            trunc: a.trunc,
            tol: a.tol,
            grid: a.grid.clone(),
            seed: a.seed,
            format: a.format,
        }
    }
}

#[derive(Serialize)]
struct Envelope {
    schema: u32,
    config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    verdict: Verdict,
    result: serde_json::Value,
}

struct Outcome {
    verdict: Verdict,
    result: serde_json::Value,
    csv: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(verdict) if verdict.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Verdict> {
    let a = cli.command.args();
    let mut cfg = RunConfig::from_args(cli.command.name(), a);
    let outcome = match &cli.command {
        Command::Levi(a) => cmd_levi(a, &mut cfg)?,
        Command::Type(a) => cmd_type(a, &mut cfg)?,
        Command::Scale(a) => cmd_scale(a, &mut cfg)?,
        Command::KernelConvergence(a) => cmd_kernel(a, &mut cfg)?,
        Command::Metric(a) => cmd_metric(a, &mut cfg)?,
        Command::Graham(a) => cmd_graham(a, &mut cfg)?,
        Command::Lee(a) => cmd_lee(a, &mut cfg)?,
        Command::Bergman(a) => cmd_bergman(a, &mut cfg)?,
        Command::Klembeck(a) => cmd_klembeck(a, &mut cfg)?,
        Command::Wu(a) => cmd_wu(a, &mut cfg)?,
        Command::Poisson(a) => cmd_poisson(a, &mut cfg)?,
    };
    let verdict = outcome.verdict;
    let text = match a.format {
        Format::Json => {
            let envelope = Envelope {
                schema: 1,
                config: cfg,
                generated_at: if a.no_timestamp {
                    None
                } else {
                    Some(
                        std::time::SystemTime::now()
                            .duration_since(std::time::UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0),
                    )
                },
                verdict,
                result: outcome.result,
            };
            let mut s = serde_json::to_string_pretty(&envelope)?;
            s.push('\n');
            s
        }
        Format::Csv => outcome
            .csv
            .ok_or_else(|| anyhow!("--format csv is not available for this command"))?,
    };
    match &a.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(verdict)
}

// ---- shared resolution helpers ----

/// Domain tag with the egg exponent folded in: `--domain egg --k 3` → egg(3).
fn resolve_tag(a: &CommonArgs, default: Option<&str>) -> Result<String> {
    let base = match (&a.domain, default) {
        (Some(t), _) => t.clone(),
        (None, Some(d)) => d.to_string(),
        (None, None) => bail!("missing required key --domain"),
    };
    Ok(if base == "egg" { format!("egg({})", a.k.unwrap_or(2)) } else { base })
}

fn default_dim(tag: &str) -> usize {
    if tag == "disc" {
        1
    } else {
        2
    }
}

fn resolve_domain(a: &CommonArgs, cfg: &mut RunConfig, default: Option<&str>) -> Result<DefiningFunction> {
    let tag = resolve_tag(a, default)?;
    let dim = a.dim.unwrap_or_else(|| default_dim(&tag));
    let f = make_catalog_domain(&tag, dim).map_err(usage)?;
    cfg.domain = Some(tag);
    cfg.dim = Some(dim);
    Ok(f)
}

fn resolve_point(
    text: &Option<String>,
    key: &str,
    dim: usize,
    default: Option<&[f64]>,
) -> Result<CVec> {
    let v = match (text, default) {
        (Some(t), _) => parse_point(t).map_err(usage).with_context(|| format!("--{key}"))?,
        (None, Some(d)) => CVec::from_iterator(d.len(), d.iter().map(|&x| cr(x))),
        (None, None) => bail!("missing required key --{key}"),
    };
    if v.len() != dim {
        bail!("--{key} has {} coordinates, domain dimension is {dim}", v.len());
    }
    Ok(v)
}

fn point_literal(v: &CVec) -> String {
    v.iter().map(|z| format!("{}:{}", z.re, z.im)).collect::<Vec<_>>().join(",")
}

/// Config slots echo the user's literal verbatim; only defaults are filled
/// in with the canonical rendering.
fn echo_default(slot: &mut Option<String>, v: &CVec) {
    if slot.is_none() {
        *slot = Some(point_literal(v));
    }
}

fn usage(e: Error) -> anyhow::Error {
    anyhow!("{e}")
}

/// `key=value` pairs split on commas or whitespace; keys outside `known`
/// are rejected by name.
fn parse_kv(text: &str, known: &[&str]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for tok in text.split([',', ' ']).filter(|t| !t.is_empty()) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| anyhow!("grid spec expects key=value, got `{tok}`"))?;
        if !known.contains(&k) {
            bail!("unknown grid key `{k}` (known: {})", known.join(", "));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| anyhow!("bad value for grid key `{key}`: `{v}`"))
}

fn geometric_ladder(top: f64, bottom: f64) -> Vec<f64> {
    let mut ts = vec![top];
    while *ts.last().unwrap() > bottom * 1.5 {
        ts.push(ts.last().unwrap() / 2.0);
    }
    let last = ts.last_mut().unwrap();
    *last = bottom;
    ts
}

fn combine(verdicts: &[Verdict]) -> Verdict {
    if verdicts.iter().any(|v| matches!(v, Verdict::Fail)) {
        Verdict::Fail
    } else if verdicts.iter().any(|v| matches!(v, Verdict::Pass)) {
        Verdict::Pass
    } else {
        Verdict::Na
    }
}

// ---- subcommands ----

fn cmd_levi(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, None)?;
    let p = resolve_point(&a.point, "point", f.dim(), None)?;
    let report = levi_classify(&f, &p, &LeviOptions::default()).map_err(usage)?;
    Ok(Outcome { verdict: Verdict::Na, result: serde_json::to_value(&report)?, csv: None })
}

fn cmd_type(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, None)?;
    let p = resolve_point(&a.point, "point", f.dim(), None)?;
    let m = a.m.unwrap_or(6);
    cfg.m = Some(m);
    let family = CurveFamily { max_p: m, max_q: m, phases: 8 };
    let report = order_of_contact(&f, &p, &family).map_err(usage)?;
    Ok(Outcome { verdict: Verdict::Na, result: serde_json::to_value(&report)?, csv: None })
}

/// Interior samples of the Siegel model Re z_0 > |z'|², used as the compact
/// test set for scaling convergence.
fn siegel_compacts(seed: u64, count: usize, dim: usize) -> Vec<CVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let tail: Vec<num_complex::Complex64> = (1..dim)
                .map(|_| {
                    num_complex::Complex64::new(
                        0.6 * (rng.gen::<f64>() - 0.5),
                        0.6 * (rng.gen::<f64>() - 0.5),
                    )
                })
                .collect();
            let h: f64 = tail.iter().map(|z| z.norm_sqr()).sum();
            let head = num_complex::Complex64::new(
                h + 0.05 + rng.gen::<f64>(),
                rng.gen::<f64>() - 0.5,
            );
            CVec::from_iterator(dim, std::iter::once(head).chain(tail))
        })
        .collect()
}

fn cmd_scale(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let tag = resolve_tag(a, Some("ball"))?;
    cfg.domain = Some(tag.clone());
    let dim = a.dim.unwrap_or(2);
    cfg.dim = Some(dim);
    let nu_max = a.m.unwrap_or(12);
    cfg.m = Some(nu_max);
    let seed = a.seed.unwrap_or(31);
    cfg.seed = Some(seed);
    let source = make_catalog_domain(&tag, dim).map_err(usage)?;
    let (orbit, target, tol) = match tag.as_str() {
        "ball" => (
            OrbitSpec::ball_default(),
            make_catalog_domain("siegel", dim).map_err(usage)?,
            a.tol.unwrap_or(1e-2),
        ),
        "siegel" => (
            OrbitSpec::parse("family=siegel_dilation rate=0.5 base=1:0,0:0 accumulation=0:0,0:0")
                .map_err(usage)?,
            source.clone(),
            a.tol.unwrap_or(1e-12),
        ),
        other => bail!("scale orbits are defined for ball and siegel, not `{other}`"),
    };
    let orbit = match &a.grid {
        Some(spec) => OrbitSpec::parse(spec).map_err(usage)?,
        None => orbit,
    };
    cfg.tol = Some(tol);
    let sigmas = pinchuk_scaling_sequence(&source, &orbit, nu_max).map_err(usage)?;
    let compacts = siegel_compacts(seed, 40, dim);
    let report =
        normal_convergence_check(&sigmas, &source, &target, &compacts, tol).map_err(usage)?;
    Ok(Outcome {
        verdict: report.verdict,
        csv: Some(report.to_csv()),
        result: serde_json::to_value(&report)?,
    })
}

fn cmd_kernel(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let variant = a.domain.clone().unwrap_or_else(|| "expanding".into());
    cfg.domain = Some(variant.clone());
    let dim = a.dim.unwrap_or(1);
    cfg.dim = Some(dim);
    let seq = match variant.as_str() {
        "expanding" => DomainSequence::expanding_balls(dim),
        "shrinking" => DomainSequence::shrinking_balls(dim),
        other => bail!("kernel-convergence sequences are `expanding` or `shrinking`, not `{other}`"),
    };
    let p = resolve_point(&a.point, "point", dim, Some(&vec![0.0; dim]))?;
    echo_default(&mut cfg.point, &p);
    let mut grid = GridSpec { spacing: 0.2, half_width: 1.3, ..Default::default() };
    if let Some(m) = a.m {
        grid.horizon = m;
    }
    if let Some(spec) = &a.grid {
        for (k, v) in parse_kv(spec, &["spacing", "half_width", "horizon", "window"])? {
            match k.as_str() {
                "spacing" => grid.spacing = parse_num(&k, &v)?,
                "half_width" => grid.half_width = parse_num(&k, &v)?,
                "horizon" => grid.horizon = parse_num(&k, &v)?,
                "window" => grid.window = parse_num(&k, &v)?,
                _ => unreachable!(),
            }
        }
    }
    cfg.m = Some(grid.horizon);
    let est = caratheodory_kernel_estimate(&seq, &p, &grid).map_err(usage)?;
    let cap = 512usize;
    let marked: Vec<Vec<[f64; 2]>> = est
        .marked
        .iter()
        .take(cap)
        .map(|z| z.iter().map(|c| [c.re, c.im]).collect())
        .collect();
    let mut result = serde_json::json!({
        "sequence": seq.name(),
        "singleton": est.singleton,
        "marked_count": est.len(),
        "spacing": est.spacing,
        "horizon": est.horizon,
        "window": est.window,
        "notes": est.notes,
        "marked": marked,
    });
    if est.len() > cap {
        result["marked_truncated_to"] = serde_json::json!(cap);
    }
    Ok(Outcome { verdict: Verdict::Na, result, csv: None })
}

fn cmd_metric(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, None)?;
    let q = resolve_point(&a.point, "point", f.dim(), Some(&vec![0.0; f.dim()]))?;
    let mut xi_default = vec![0.0; f.dim()];
    xi_default[0] = 1.0;
    let xi = resolve_point(&a.xi, "xi", f.dim(), Some(&xi_default))?;
    echo_default(&mut cfg.point, &q);
    echo_default(&mut cfg.xi, &xi);
    let value = match kobayashi_closed_form(&f, &q, &xi) {
        Ok(v) => v,
        Err(Error::UnknownDomain(_)) => metric_sandwich(&f, &q, &xi).map_err(usage)?,
        Err(e) => return Err(usage(e)),
    };
    Ok(Outcome { verdict: Verdict::Na, result: serde_json::to_value(value)?, csv: None })
}

fn cmd_graham(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, Some("ball"))?;
    let d = f.dim();
    let mut e0 = vec![0.0; d];
    e0[0] = 1.0;
    let p = resolve_point(&a.point, "point", d, Some(&e0))?;
    let xi = resolve_point(&a.xi, "xi", d, Some(&e0))?;
    echo_default(&mut cfg.point, &p);
    echo_default(&mut cfg.xi, &xi);
    let tol = a.tol.unwrap_or(1e-3);
    cfg.tol = Some(tol);
    let ts = geometric_ladder(0.512, 1e-3);
    let report = graham_asymptotics(&f, &p, &xi, &ts, tol).map_err(usage)?;
    let verdict = combine(&[report.normal_product.verdict, report.tangential_product.verdict]);
    Ok(Outcome {
        verdict,
        csv: Some(asymptotics_csv(&report.rows)),
        result: serde_json::to_value(&report)?,
    })
}

fn cmd_lee(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, Some("ball"))?;
    let d = f.dim();
    let mut e0 = vec![0.0; d];
    e0[0] = 1.0;
    let p = resolve_point(&a.point, "point", d, Some(&e0))?;
    let xi = resolve_point(&a.xi, "xi", d, Some(&e0))?;
    echo_default(&mut cfg.point, &p);
    echo_default(&mut cfg.xi, &xi);
    let tol = a.tol.unwrap_or(2e-2);
    cfg.tol = Some(tol);
    let q_list: Vec<CVec> = geometric_ladder(0.512, 1e-3)
        .into_iter()
        .map(|t| &p * cr(1.0 - t))
        .collect();
    let report = lee_ratio(&f, &p, &xi, &q_list, tol).map_err(usage)?;
    Ok(Outcome {
        verdict: report.ratio.verdict,
        csv: Some(asymptotics_csv(&report.rows)),
        result: serde_json::to_value(&report)?,
    })
}

fn cmd_bergman(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, None)?;
    let trunc = a.trunc.unwrap_or(32);
    cfg.trunc = Some(trunc);
    let q = resolve_point(&a.point, "point", f.dim(), Some(&vec![0.0; f.dim()]))?;
    echo_default(&mut cfg.point, &q);
    let kern = monomial_norms(f.tag(), trunc, &QuadratureSpec::default()).map_err(usage)?;
    let k_qq = bergman_kernel(&kern, &q, &q).map_err(usage)?;
    let metric = bergman_metric(&kern, &q).map_err(usage)?;
    let defect = reproducing_defect(&kern, &q).map_err(usage)?;
    let result = serde_json::json!({
        "kernel_diag": [k_qq.re, k_qq.im],
        "metric": metric.entry_pairs(),
        "metric_eigenvalues": metric.eigenvalues,
        "reproducing_defect": defect,
        "truncation": trunc,
    });
    Ok(Outcome { verdict: Verdict::Na, result, csv: None })
}

fn cmd_klembeck(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let tag = resolve_tag(a, Some("ball"))?;
    let dim = a.dim.unwrap_or_else(|| default_dim(&tag));
    cfg.domain = Some(tag.clone());
    cfg.dim = Some(dim);
    let trunc = a.trunc.unwrap_or(48);
    cfg.trunc = Some(trunc);
    let egg = tag.starts_with("egg");
    let tol = a.tol.unwrap_or(if egg { 5e-2 } else { 1e-2 });
    cfg.tol = Some(tol);
    let (p_default, ts): (Vec<f64>, Vec<f64>) = if egg {
        (vec![0.0, 1.0], vec![0.4, 0.2, 0.1, 0.05])
    } else {
        let mut e0 = vec![0.0; dim];
        e0[0] = 1.0;
        (e0, vec![0.5, 0.4, 0.3])
    };
    let mut xi_default = vec![0.0; dim];
    xi_default[0] = 1.0;
    let p = resolve_point(&a.point, "point", dim, Some(&p_default))?;
    let xi = resolve_point(&a.xi, "xi", dim, Some(&xi_default))?;
    echo_default(&mut cfg.point, &p);
    echo_default(&mut cfg.xi, &xi);
    let report = klembeck_harness(&tag, &p, &xi, &ts, trunc, tol).map_err(usage)?;
    Ok(Outcome {
        verdict: report.verdict,
        csv: Some(report.to_csv()),
        result: serde_json::to_value(&report)?,
    })
}

fn cmd_wu(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let f = resolve_domain(a, cfg, Some("ball"))?;
    let q = resolve_point(&a.point, "point", f.dim(), Some(&vec![0.0; f.dim()]))?;
    echo_default(&mut cfg.point, &q);
    let resolution: usize = match &a.grid {
        Some(text) => text
            .parse()
            .map_err(|_| anyhow!("--grid for wu is a bare integer resolution, got `{text}`"))?,
        None => 32,
    };
    cfg.grid = Some(resolution.to_string());
    let tol = a.tol.unwrap_or(1e-8);
    cfg.tol = Some(tol);
    let ell = wu_metric(&f, &q, resolution, tol).map_err(usage)?;
    let verdict = if ell.containment_defect <= tol { Verdict::Pass } else { Verdict::Fail };
    let mut result = ell.to_json();
    result["resolution"] = serde_json::json!(resolution);
    result["normalization"] =
        serde_json::json!("indicatrix taken as the closed unit sublevel set of the metric");
    Ok(Outcome { verdict, result, csv: None })
}

fn cmd_poisson(a: &CommonArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let n = a.k.unwrap_or(1) as usize;
    cfg.k = Some(n as u32);
    let mut grid = ScanGrid::default();
    if let Some(spec) = &a.grid {
        for (k, v) in parse_kv(spec, &["radial", "angular", "levels", "max_radius"])? {
            match k.as_str() {
                "radial" => grid.radial = parse_num(&k, &v)?,
                "angular" => grid.angular = parse_num(&k, &v)?,
                "levels" => grid.levels = parse_num(&k, &v)?,
                "max_radius" => grid.max_radius = parse_num(&k, &v)?,
                _ => unreachable!(),
            }
        }
    }
    let (c1, c2, scan) = poisson_bound_scan(n, &grid).map_err(usage)?;
    let result = serde_json::json!({
        "summary": scan.summary_json(),
        "c1_hat": c1,
        "c2_hat": c2,
        "grid": grid,
        "report": serde_json::to_value(&scan.report)?,
    });
    Ok(Outcome { verdict: scan.report.verdict, result, csv: Some(scan.to_csv()) })
}
