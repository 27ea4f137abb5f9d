use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mterm::approx::{approx_error, greedy_baseline, oracle_profile, PlanParams, Scheme};
use mterm::decomposition::{lp_norm, BlockMode};
use mterm::norms::{besov_norm, bq1_norm, fmt_exponent, ClassParams, SpaceParams, TargetNorm};
use mterm::ratelab::{
    run_rate_experiment, scheme_approximant, theoretical_exponent, Clause, ExponentQuery, RateExperiment, RateReport,
};
use mterm::spectrum::{read_dump, write_dump, CoeffGrid, Spectrum, TrigPoly};
use mterm::testfuncs::{generate, random_sparse, GenKind, GenSpec, PhiKind};
use mterm::Error;

use crate::config::Config;
use crate::{ApproxArgs, Cli, Command, DumpArgs, ExponentArgs, GenArgs, NormArgs, OracleArgs, RatesArgs, SpaceArgs};

const DEFAULT_RATES_DIR: &str = "rates-out";

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Exponent(a) => exponent(cli, &mut cfg, a),
        Command::Gen(a) => gen(cli, &mut cfg, a),
        Command::Approx(a) => approx(cli, &mut cfg, a),
        Command::Norm(a) => norm(cli, &mut cfg, a),
        Command::Rates(a) => rates(cli, &mut cfg, a),
        Command::Oracle(a) => oracle(cli, &mut cfg, a),
        Command::Dump(a) => dump(cli, a),
    }
}

fn parse_enum<T>(cfg: &mut Config, key: &str, default: &str) -> Result<T>
where
    T: std::str::FromStr<Err = Error>,
{
    let raw: String = cfg.get(key, default.to_string())?;
    raw.parse::<T>().with_context(|| format!("config key `{key}`"))
}

fn apply_gen_flags(cfg: &mut Config, a: &GenArgs) {
    cfg.set("kind", a.kind.as_ref());
    cfg.set("d", a.d.as_ref());
    cfg.set("r", a.r.as_ref());
    cfg.set("p", a.p.as_ref());
    cfg.set("theta", a.theta.as_ref());
    cfg.set("s_max", a.s_max.as_ref());
    cfg.set("alpha", a.alpha.as_ref());
    cfg.set("phi_kind", a.phi_kind.as_ref());
}

fn apply_space_flags(cfg: &mut Config, a: &SpaceArgs) {
    cfg.set("target", a.target.as_ref());
    cfg.set("q", a.q.as_ref());
    cfg.set("block_mode", a.block_mode.as_ref());
}

fn read_gen_spec(cfg: &mut Config) -> Result<GenSpec> {
    let kind: GenKind = parse_enum(cfg, "kind", "random-besov")?;
    let d = cfg.get("d", 1usize)?;
    let r = cfg.get("r", 1.5f64)?;
    let p = cfg.get("p", 2.0f64)?;
    let theta = cfg.get("theta", f64::INFINITY)?;
    let s_max = cfg.get("s_max", 10usize)?;
    let seed = cfg.get("seed", 0u64)?;
    let alpha = cfg.get("alpha", 0.0f64)?;
    let phi_kind: PhiKind = parse_enum(cfg, "phi_kind", "random-signs")?;
    let cp = ClassParams::new(d, r, p, theta)?;
    let spec = GenSpec {
        kind,
        cp,
        s_max,
        seed,
        alpha,
        phi_kind,
    };
    spec.validate()?;
    Ok(spec)
}

fn read_space(cfg: &mut Config) -> Result<SpaceParams> {
    let mode: TargetNorm = parse_enum(cfg, "target", "bq1")?;
    let q = cfg.get("q", f64::INFINITY)?;
    let block_mode: BlockMode = parse_enum(cfg, "block_mode", "vp")?;
    Ok(SpaceParams::new(q, mode, block_mode)?)
}

fn out_dir(cli: &Cli) -> Option<&Path> {
    cli.out.as_deref()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn header(cfg: &Config) -> Vec<(String, String)> {
    cfg.resolved().iter().map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn dump_bytes(poly: &TrigPoly, cfg: &Config) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_dump(poly, &header(cfg), &mut buf)?;
    Ok(buf)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentOutput {
    pub query: ExponentQuery,
    /// `ok` or `open-case`.
    pub status: String,
    pub exponent: Option<f64>,
    pub clause: Option<Clause>,
    pub message: Option<String>,
}

fn exponent(cli: &Cli, cfg: &mut Config, a: &ExponentArgs) -> Result<ExitCode> {
    cfg.set("quantity", a.quantity.as_ref());
    cfg.set("class", a.class.as_ref());
    cfg.set("target", a.target.as_ref());
    cfg.set("d", a.d.as_ref());
    cfg.set("r", a.r.as_ref());
    cfg.set("p", a.p.as_ref());
    cfg.set("q", a.q.as_ref());
    cfg.set("theta", a.theta.as_ref());
    cfg.set("alpha", a.alpha.as_ref());
    let Some(r) = cfg.get_optional("r") else {
        bail!("the smoothness `r` is required");
    };
    let r: f64 = r
        .parse()
        .with_context(|| format!("config key `r`: cannot parse `{r}`"))?;
    let query = ExponentQuery {
        quantity: parse_enum(cfg, "quantity", "em")?,
        class: parse_enum(cfg, "class", "besov")?,
        target: parse_enum(cfg, "target", "bq1")?,
        d: cfg.get("d", 1usize)?,
        r,
        p: cfg.get("p", 2.0f64)?,
        q: cfg.get("q", f64::INFINITY)?,
        theta: cfg.get("theta", f64::INFINITY)?,
        alpha: cfg.get("alpha", 0.0f64)?,
    };
    cfg.finish()?;

    let (output, code) = match theoretical_exponent(&query) {
        Ok(e) => (
            ExponentOutput {
                query,
                status: "ok".into(),
                exponent: Some(e.value),
                clause: Some(e.clause),
                message: None,
            },
            ExitCode::SUCCESS,
        ),
        Err(Error::OpenCase(msg)) => (
            ExponentOutput {
                query,
                status: "open-case".into(),
                exponent: None,
                clause: None,
                message: Some(msg),
            },
            ExitCode::from(2),
        ),
        Err(e) => return Err(e.into()),
    };
    if cli.json {
        print_json(&output)?;
    } else if let (Some(v), Some(c)) = (output.exponent, output.clause) {
        let clause = serde_json::to_value(c)?;
        println!(
            "exponent {} ({})",
            display_exponent(v),
            clause.as_str().unwrap_or_default()
        );
    } else {
        println!("exponent open-case");
        eprintln!("open case: {}", output.message.as_deref().unwrap_or_default());
    }
    Ok(code)
}

/// Rounds away binary representation noise such as `-0.30000000000000004`.
fn display_exponent(v: f64) -> String {
    let rounded: f64 = format!("{v:.12}").parse().unwrap_or(v);
    format!("{rounded}")
}

fn seed_flag(cli: &Cli, cfg: &mut Config) {
    cfg.set("seed", cli.seed.as_ref());
}

fn gen(cli: &Cli, cfg: &mut Config, a: &GenArgs) -> Result<ExitCode> {
    apply_gen_flags(cfg, a);
    seed_flag(cli, cfg);
    let spec = read_gen_spec(cfg)?;
    cfg.finish()?;
    let f = generate(&spec)?;
    let bytes = dump_bytes(&f.to_poly(), cfg)?;
    match out_dir(cli) {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("function.txt"), &bytes)?;
            write_file(&dir.join("config.txt"), cfg.render().as_bytes())?;
            if cli.json {
                print_json(&GenSummary::new(&spec, &f))?;
            } else {
                println!(
                    "wrote {} terms to {}",
                    f.count_nonzero(),
                    dir.join("function.txt").display()
                );
            }
        }
        None if cli.json => print_json(&GenSummary::new(&spec, &f))?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GenSummary {
    spec: GenSpec,
    terms: usize,
    halfwidth: usize,
    l2: f64,
}

impl GenSummary {
    fn new(spec: &GenSpec, f: &CoeffGrid) -> Self {
        GenSummary {
            spec: *spec,
            terms: f.count_nonzero(),
            halfwidth: f.halfwidth(),
            l2: f.l2_norm_parseval(),
        }
    }
}

#[derive(Serialize)]
struct ApproxOutput {
    config: std::collections::BTreeMap<String, String>,
    sidecar: mterm::approx::ApproximantSidecar,
    space: String,
    error: f64,
}

fn approx(cli: &Cli, cfg: &mut Config, a: &ApproxArgs) -> Result<ExitCode> {
    apply_gen_flags(cfg, &a.gen);
    apply_space_flags(cfg, &a.space);
    seed_flag(cli, cfg);
    cfg.set("scheme", a.scheme.as_ref());
    cfg.set("m", a.m.as_ref());
    let spec = read_gen_spec(cfg)?;
    let space = read_space(cfg)?;
    let scheme: Scheme = parse_enum(cfg, "scheme", "univariate")?;
    let m = cfg.get("m", 64u64)?;
    cfg.finish()?;

    let f = generate(&spec)?;
    let pp = PlanParams::new(spec.cp.d, spec.cp.p, space.q, spec.cp.r);
    let approximant = scheme_approximant(&f, scheme, &pp, m)?;
    let error = approx_error(&f, &approximant, &space)?;
    let output = ApproxOutput {
        config: cfg.resolved().clone(),
        sidecar: approximant.sidecar(),
        space: space.label(),
        error,
    };
    if let Some(dir) = out_dir(cli) {
        ensure_dir(dir)?;
        write_file(&dir.join("approximant.txt"), &dump_bytes(&approximant.poly, cfg)?)?;
        let mut json = serde_json::to_vec_pretty(&output)?;
        json.push(b'\n');
        write_file(&dir.join("approximant.json"), &json)?;
        write_file(&dir.join("config.txt"), cfg.render().as_bytes())?;
    }
    if cli.json {
        print_json(&output)?;
    } else {
        println!(
            "{} m={} terms={} error({})={:e}",
            scheme,
            m,
            approximant.term_count(),
            output.space,
            error
        );
        if let Some(plan) = &approximant.plan {
            println!(
                "l={} gamma={} cutoff={} scale={}",
                plan.l, plan.gamma, plan.cutoff, plan.scale
            );
            for (s, b) in &plan.budgets {
                println!("  m_{s} = {b} (raw {})", plan.raw_budgets[s]);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct NormRow {
    #[serde(serialize_with = "ser_exponent")]
    q: f64,
    lq: f64,
    bq1: f64,
}

#[derive(Serialize)]
struct NormOutput {
    config: std::collections::BTreeMap<String, String>,
    dim: usize,
    terms: usize,
    class: ClassParams,
    besov_vp: f64,
    besov_sharp: Option<f64>,
    targets: Vec<NormRow>,
}

fn ser_exponent<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_exponent(*v))
}

fn load_dump(path: &Path) -> Result<TrigPoly> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_dump(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn norm(cli: &Cli, cfg: &mut Config, a: &NormArgs) -> Result<ExitCode> {
    apply_gen_flags(cfg, &a.gen);
    cfg.set("q", a.q.as_ref());
    if let Some(input) = &a.input {
        cfg.set("input", Some(&input.display().to_string()));
    }
    let input: Option<PathBuf> = cfg.get_optional("input").map(PathBuf::from);
    let (f, cp) = match input {
        Some(path) => {
            let poly = load_dump(&path)?;
            let cp = ClassParams::new(
                poly.dim(),
                cfg.get("r", 1.5f64)?,
                cfg.get("p", 2.0f64)?,
                cfg.get("theta", f64::INFINITY)?,
            )?;
            (CoeffGrid::from_poly(&poly, None)?, cp)
        }
        None => {
            seed_flag(cli, cfg);
            let spec = read_gen_spec(cfg)?;
            (generate(&spec)?, spec.cp)
        }
    };
    let qs: Vec<f64> = cfg.get_list("q", &[1.0, 2.0, 4.0, f64::INFINITY])?;
    cfg.finish()?;

    let besov_vp = besov_norm(&f, &cp, BlockMode::Vp)?;
    let besov_sharp = if cp.sharp_admissible() {
        Some(besov_norm(&f, &cp, BlockMode::Sharp)?)
    } else {
        None
    };
    let targets = qs
        .iter()
        .map(|&q| {
            Ok(NormRow {
                q,
                lq: lp_norm(&f, q)?,
                bq1: bq1_norm(&f, q, BlockMode::Vp)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let output = NormOutput {
        config: cfg.resolved().clone(),
        dim: f.dim(),
        terms: f.count_nonzero(),
        class: cp,
        besov_vp,
        besov_sharp,
        targets,
    };
    if cli.json {
        print_json(&output)?;
    } else {
        let (r, p, t) = (cp.r, fmt_exponent(cp.p), fmt_exponent(cp.theta));
        println!("B^{r}_{p},{t} (vp)    {:e}", besov_vp);
        if let Some(s) = besov_sharp {
            println!("B^{r}_{p},{t} (sharp) {:e}", s);
        }
        for row in &output.targets {
            let q = fmt_exponent(row.q);
            println!("L{q} {:e}  B{q},1 {:e}", row.lq, row.bq1);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// CSV with the resolved config as `# key = value` comment lines.
pub fn rates_csv(report: &RateReport, cfg_text: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in cfg_text.lines() {
        writeln!(buf, "# {line}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["m", "error", "scheme", "space", "seed"])?;
        let scheme = report.scheme.to_string();
        for run in &report.runs {
            let seed = run.seed.to_string();
            for (pt, err) in report.points.iter().zip(&run.errors) {
                w.write_record([&pt.m.to_string(), &format!("{err:e}"), &scheme, &report.space, &seed])?;
            }
        }
        for pt in &report.points {
            w.write_record([
                &pt.m.to_string(),
                &format!("{:e}", pt.error),
                &scheme,
                &report.space,
                "median",
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

#[derive(Serialize)]
struct RatesOutput<'a> {
    config: &'a std::collections::BTreeMap<String, String>,
    report: &'a RateReport,
}

fn rates(cli: &Cli, cfg: &mut Config, a: &RatesArgs) -> Result<ExitCode> {
    apply_gen_flags(cfg, &a.gen);
    apply_space_flags(cfg, &a.space);
    seed_flag(cli, cfg);
    cfg.set("scheme", a.scheme.as_ref());
    cfg.set("m_grid", a.m_grid.as_ref());
    cfg.set("seeds", a.seeds.as_ref());
    cfg.set("tolerance", a.tolerance.as_ref());
    cfg.set("drop_octaves", a.drop_octaves.as_ref());
    let gen = read_gen_spec(cfg)?;
    let space = read_space(cfg)?;
    let scheme: Scheme = parse_enum(cfg, "scheme", "univariate")?;
    let m_grid: Vec<u64> = cfg.get_list("m_grid", &[16, 32, 64, 128, 256, 512])?;
    let experiment = RateExperiment {
        gen,
        scheme,
        space,
        m_grid,
        seeds: cfg.get("seeds", 5usize)?,
        tolerance: cfg.get("tolerance", 0.3f64)?,
        drop_octaves: cfg.get("drop_octaves", 1usize)?,
    };
    cfg.finish()?;

    let report = run_rate_experiment(&experiment)?;
    let cfg_text = cfg.render();
    let dir = out_dir(cli)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_RATES_DIR));
    ensure_dir(&dir)?;
    write_file(&dir.join("rates.csv"), &rates_csv(&report, &cfg_text)?)?;
    let output = RatesOutput {
        config: cfg.resolved(),
        report: &report,
    };
    let mut json = serde_json::to_vec_pretty(&output)?;
    json.push(b'\n');
    write_file(&dir.join("report.json"), &json)?;
    write_file(&dir.join("config.txt"), cfg_text.as_bytes())?;

    if cli.json {
        print_json(&output)?;
    } else {
        for pt in &report.points {
            println!("m={:<6} median error {:e}", pt.m, pt.error);
        }
        match report.fitted_slope {
            Some(s) => println!(
                "slope {s:.4} vs exponent {} (tolerance {}): {:?}",
                report.theoretical_exponent, report.tolerance, report.verdict
            ),
            None => println!("no fit: {:?}", report.verdict),
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        println!("artifacts in {}", dir.display());
    }
    Ok(if report.verdict.is_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct OracleRow {
    m: usize,
    oracle_l2: f64,
    greedy_l2: f64,
    l2_equal: bool,
    oracle_bq1: f64,
    greedy_bq1: f64,
    greedy_at_least_oracle: bool,
}

fn oracle(cli: &Cli, cfg: &mut Config, a: &OracleArgs) -> Result<ExitCode> {
    cfg.set("d", a.d.as_ref());
    cfg.set("support", a.support.as_ref());
    cfg.set("halfwidth", a.halfwidth.as_ref());
    cfg.set("q", a.q.as_ref());
    seed_flag(cli, cfg);
    let d = cfg.get("d", 1usize)?;
    let n = cfg.get("support", 12usize)?;
    let halfwidth = cfg.get("halfwidth", 32usize)?;
    let q = cfg.get("q", 4.0f64)?;
    let seed = cfg.get("seed", 0u64)?;
    cfg.finish()?;

    let f = random_sparse(d, n, halfwidth, seed)?;
    let l2 = SpaceParams::lq(2.0)?;
    let bq1 = SpaceParams::bq1(q)?;
    let prof_l2 = oracle_profile(&f, &l2)?;
    let prof_bq1 = oracle_profile(&f, &bq1)?;
    // Roundoff floor of the oracle's sampled evaluation.
    let floor = 1e-12 * prof_bq1[0].1;
    let mut rows = Vec::new();
    for m in 0..=n {
        let g = greedy_baseline(&f, m as u64);
        let greedy_l2 = approx_error(&f, &g, &l2)?;
        let greedy_bq1 = approx_error(&f, &g, &bq1)?;
        let (oracle_l2, oracle_bq1) = (prof_l2[m].1, prof_bq1[m].1);
        rows.push(OracleRow {
            m,
            oracle_l2,
            greedy_l2,
            l2_equal: (oracle_l2 - greedy_l2).abs() <= 1e-10,
            oracle_bq1,
            greedy_bq1,
            greedy_at_least_oracle: greedy_bq1 >= oracle_bq1 * (1.0 - 1e-12) - floor,
        });
    }
    let ok = rows.iter().all(|r| r.l2_equal && r.greedy_at_least_oracle);
    if cli.json {
        print_json(&rows)?;
    } else {
        let b = bq1.label();
        println!(
            "{:>3}  {:>12} {:>12} {:>5}  {:>12} {:>12} {:>5}",
            "m",
            "oracle L2",
            "greedy L2",
            "eq",
            format!("oracle {b}"),
            format!("greedy {b}"),
            ">="
        );
        for r in &rows {
            println!(
                "{:>3}  {:>12.6e} {:>12.6e} {:>5}  {:>12.6e} {:>12.6e} {:>5}",
                r.m, r.oracle_l2, r.greedy_l2, r.l2_equal, r.oracle_bq1, r.greedy_bq1, r.greedy_at_least_oracle
            );
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct DumpSummary {
    dim: usize,
    terms: usize,
    max_freq: u64,
    l2: f64,
    real_valued: bool,
}

fn dump(cli: &Cli, a: &DumpArgs) -> Result<ExitCode> {
    let poly = load_dump(&a.input)?;
    let summary = DumpSummary {
        dim: poly.dim(),
        terms: poly.len(),
        max_freq: poly.max_freq(),
        l2: poly.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt(),
        real_valued: poly.is_conj_symmetric(),
    };
    if cli.json {
        print_json(&summary)?;
    } else {
        println!(
            "dim {} terms {} max |k| {} L2 {:e} real {}",
            summary.dim, summary.terms, summary.max_freq, summary.l2, summary.real_valued
        );
    }
    Ok(ExitCode::SUCCESS)
}
