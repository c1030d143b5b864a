//! The `atm` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cwg::{build_cwg, perron, PerronOptions};
use crate::error::{Error, Result};
use crate::garside::{compute_garside, GarsideConfig, GarsideStructure};
use crate::measures::{
    boundary_chain, normalize_to_mobius, uniform_measure, BoundaryChain, ChainOptions, Valuation,
};
use crate::mobius::{growth_coefficients, mobius_polynomial, smallest_root_p0, weighted_mobius_polynomial, SubsetRange};
use crate::presentation::{is_irreducible, parse_family, parse_presentation, MonoidPresentation};
use crate::stats::{concentration_experiment, delta_method_check, sample_exact, walker_rng, Statistic};
use crate::words::DEFAULT_CLASS_CAP;

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  2   invalid command line
  3   presentation syntax error
  4   unknown or malformed family
  5   invalid word
  6   word longer than the closure cap
  7   ambiguous left lcm
  8   Garside set size cap exceeded
  9   reducible monoid
  10  fewer than two generators
  11  invalid valuation
  12  spectral computation failed
  13  structural hypothesis violated
  14  internal consistency check failed
  15  i/o error";

#[derive(Parser, Debug, Serialize)]
#[command(name = "atm", version, about = "Garside combinatorics, Möbius inversion and random generation for Artin-Tits monoids", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct GlobalArgs {
    /// Built-in family instead of a spec file: braid:n, free:n, dihedral:m,
    /// dual-a:n, affine-a2, heap:n:i-j,..., free-product:A,B
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long = "max-iter", global = true, default_value_t = 1_000_000)]
    pub max_iter: usize,
    /// Longest word closed by brute force
    #[arg(long, global = true, default_value_t = DEFAULT_CLASS_CAP)]
    pub cap: usize,
    /// Largest Garside set accepted
    #[arg(long = "size-cap", global = true, default_value_t = crate::garside::DEFAULT_SIZE_CAP)]
    pub size_cap: usize,
    /// Emit a single JSON document on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the CWG matrix in coordinate format to this file
    #[arg(long = "dump-matrix", global = true)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct WeightArgs {
    /// Generator weights, e.g. a=0.3,b=7/10
    #[arg(long, conflicts_with = "uniform")]
    pub valuation: Option<String>,
    /// Uniform weights (the default)
    #[arg(long)]
    pub uniform: bool,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Structure, Möbius polynomial, spectral data and axiom checks
    Analyze { spec: Option<PathBuf> },
    /// Normal form and height of a word
    NormalForm { spec_or_word: Vec<String> },
    /// The Garside set; with --dump, simples and the arrow relation
    Garside {
        spec: Option<PathBuf>,
        #[arg(long)]
        dump: bool,
    },
    /// Möbius polynomial, p0 and growth coefficients
    Mobius {
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        kmax: usize,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Boundary prefixes sampled from the multiplicative measure
    Measure {
        spec: Option<PathBuf>,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, default_value_t = 5)]
        prefix: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Concentration and CLT experiment for an additive statistic
    Stats {
        spec: Option<PathBuf>,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// height or count:<generator>
        #[arg(long, default_value = "height")]
        stat: String,
        #[command(flatten)]
        weights: WeightArgs,
        /// CSV destination; a JSON-lines sidecar is written next to it
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Elements of a given length drawn exactly from the weighted law
    Sample {
        spec: Option<PathBuf>,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        weights: WeightArgs,
    },
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    out: &'a mut (dyn Write + Send),
}

fn io(e: std::io::Error) -> Error {
    Error::from(e)
}

fn load(global: &GlobalArgs, spec: Option<&PathBuf>) -> Result<MonoidPresentation> {
    match (spec, &global.family) {
        (Some(_), Some(_)) => Err(Error::Family("give either a spec file or --family".into())),
        (None, None) => Err(Error::Family("no monoid given (spec file or --family)".into())),
        (None, Some(f)) => parse_family(f),
        (Some(path), None) => parse_presentation(&std::fs::read_to_string(path)?),
    }
}

fn garside(global: &GlobalArgs, p: &MonoidPresentation) -> Result<GarsideStructure> {
    compute_garside(
        p,
        GarsideConfig {
            class_cap: global.cap,
            size_cap: global.size_cap,
        },
    )
}

fn valuation(p: &MonoidPresentation, w: &WeightArgs) -> Result<Valuation> {
    match &w.valuation {
        Some(text) => Valuation::parse(p, text),
        None => Ok(Valuation::uniform(p)),
    }
}

fn perron_opts(global: &GlobalArgs) -> PerronOptions {
    PerronOptions {
        tol: PerronOptions::default().tol,
        max_iter: global.max_iter,
    }
}

fn dump_matrix(global: &GlobalArgs, g: &GarsideStructure, w: &Valuation) -> Result<()> {
    if let Some(path) = &global.dump_matrix {
        let c = build_cwg(g, w)?;
        std::fs::write(path, c.dump_matrix())?;
    }
    Ok(())
}

fn emit_json(out: &mut (dyn Write + Send), v: &Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("serializable")).map_err(io)
}

fn cmd_analyze(ctx: &mut Ctx, spec: Option<&PathBuf>) -> Result<()> {
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let irr = is_irreducible(&p);
    let mu = mobius_polynomial(&g);
    let p0 = smallest_root_p0(&mu);
    let spectral: Result<(f64, f64)> = (|| {
        let c = build_cwg(&g, &Valuation::uniform(&p))?;
        let pd = perron(&c, perron_opts(ctx.global))?;
        let (bc, _) = uniform_measure(&g)?;
        Ok((pd.lambda, bc.kappa))
    })();
    let charney = g.charney_graph();
    let axioms = g.check_axioms();
    dump_matrix(ctx.global, &g, &Valuation::uniform(&p)).or_else(|e| match e {
        Error::Reducible(_) | Error::TooFewGenerators => Ok(()),
        e => Err(e),
    })?;
    let fmt_err = |e: &Error| format!("n/a ({e})");
    if ctx.global.json {
        let v = json!({
            "generators": p.symbols(),
            "simples": g.len(),
            "spherical": g.is_spherical(),
            "delta": g.delta().map(|d| g.format_simple(d)),
            "type_fc": g.is_type_fc(),
            "irreducible": irr.irreducible,
            "components": irr.components.iter().map(|c| c.iter().map(|&x| p.symbol(x).to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "charney_strongly_connected": charney.as_ref().ok().map(|c| c.strongly_connected),
            "mobius_polynomial": mu.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "p0": p0.as_ref().ok(),
            "lambda": spectral.as_ref().ok().map(|s| s.0),
            "kappa": spectral.as_ref().ok().map(|s| s.1),
            "axioms": axioms,
        });
        return emit_json(ctx.out, &v);
    }
    let o = &mut *ctx.out;
    let names: Vec<&str> = p.symbols().iter().map(|s| s.as_str()).collect();
    writeln!(o, "generators: {}", names.join(" ")).map_err(io)?;
    writeln!(o, "|S| = {}", g.len()).map_err(io)?;
    writeln!(o, "spherical: {}", g.is_spherical()).map_err(io)?;
    match g.delta() {
        Some(d) => writeln!(o, "delta: {}", g.format_simple(d)),
        None => writeln!(o, "delta: none"),
    }
    .map_err(io)?;
    writeln!(o, "type FC: {}", g.is_type_fc()).map_err(io)?;
    writeln!(o, "irreducible: {}", irr.irreducible).map_err(io)?;
    match &charney {
        Ok(c) => writeln!(
            o,
            "charney graph: {} vertices, strongly connected components: {}, strongly connected: {}",
            c.vertices.len(),
            c.components.len(),
            c.strongly_connected
        ),
        Err(e) => writeln!(o, "charney graph: {}", fmt_err(e)),
    }
    .map_err(io)?;
    writeln!(o, "mobius polynomial: {}", mu.format()).map_err(io)?;
    match &p0 {
        Ok(v) => writeln!(o, "p0 = {v:.6} ({v})"),
        Err(e) => writeln!(o, "p0 = {}", fmt_err(e)),
    }
    .map_err(io)?;
    match &spectral {
        Ok((l, k)) => writeln!(o, "lambda = {l:.6} ({l})\nkappa = {k:.6} ({k})"),
        Err(e) => writeln!(o, "lambda = {}\nkappa = {}", fmt_err(e), fmt_err(e)),
    }
    .map_err(io)?;
    writeln!(o, "axioms:").map_err(io)?;
    for c in &axioms.checks {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        writeln!(o, "  {} {verdict}: {}", c.name, c.detail).map_err(io)?;
    }
    if let Some(c) = &axioms.caveat {
        writeln!(o, "caveat: {c}").map_err(io)?;
    }
    Ok(())
}

fn cmd_normal_form(ctx: &mut Ctx, args: &[String]) -> Result<()> {
    let (spec, word) = match (args, &ctx.global.family) {
        ([w], Some(_)) => (None, w.clone()),
        ([], Some(_)) => (None, String::new()),
        ([s, w], None) => (Some(PathBuf::from(s)), w.clone()),
        _ => {
            return Err(Error::Family(
                "expected `normal-form <spec> <word>` or `--family F normal-form <word>`".into(),
            ))
        }
    };
    let p = load(ctx.global, spec.as_ref())?;
    let g = garside(ctx.global, &p)?;
    let x = g.parse_element(&word)?;
    let blocks: Vec<String> = x.blocks().map(|b| g.format_simple(b)).collect();
    if ctx.global.json {
        return emit_json(
            ctx.out,
            &json!({ "word": word, "normal_form": blocks, "height": x.block_count(), "length": g.length(&x) }),
        );
    }
    writeln!(ctx.out, "{}\nheight: {}", g.format_element(&x), x.block_count()).map_err(io)
}

fn cmd_garside(ctx: &mut Ctx, spec: Option<&PathBuf>, dump: bool) -> Result<()> {
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let arrows: Vec<(usize, usize)> = (0..g.len())
        .flat_map(|x| (0..g.len()).map(move |y| (x, y)))
        .filter(|&(x, y)| g.arrow(x, y))
        .collect();
    if ctx.global.json {
        let simples: Vec<Value> = (0..g.len())
            .map(|x| json!({ "index": x, "word": g.format_simple(x), "length": g.simple_len(x) }))
            .collect();
        return emit_json(
            ctx.out,
            &json!({
                "simples": simples,
                "delta": g.delta(),
                "spherical": g.is_spherical(),
                "type_fc": g.is_type_fc(),
                "arrows": if dump { Some(&arrows) } else { None },
            }),
        );
    }
    let o = &mut *ctx.out;
    if dump {
        writeln!(o, "# simples: index word length").map_err(io)?;
        for x in 0..g.len() {
            writeln!(o, "{x} {} {}", g.format_simple(x), g.simple_len(x)).map_err(io)?;
        }
        writeln!(o, "# arrows: x y").map_err(io)?;
        for (x, y) in arrows {
            writeln!(o, "{x} {y}").map_err(io)?;
        }
    } else {
        writeln!(o, "|S| = {}", g.len()).map_err(io)?;
        let names: Vec<String> = (0..g.len()).map(|x| g.format_simple(x)).collect();
        writeln!(o, "simples: {}", names.join(" ")).map_err(io)?;
        match g.delta() {
            Some(d) => writeln!(o, "delta: {}", g.format_simple(d)),
            None => writeln!(o, "delta: none"),
        }
        .map_err(io)?;
        writeln!(o, "type FC: {}", g.is_type_fc()).map_err(io)?;
    }
    Ok(())
}

fn cmd_mobius(ctx: &mut Ctx, spec: Option<&PathBuf>, kmax: usize, weights: &WeightArgs) -> Result<()> {
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let w = valuation(&p, weights)?;
    let mu = mobius_polynomial(&g);
    let p0 = smallest_root_p0(&mu);
    let weighted = weighted_mobius_polynomial(&g, &w, SubsetRange::Generators);
    let growth = growth_coefficients(&g, &w, kmax)?;
    if ctx.global.json {
        return emit_json(
            ctx.out,
            &json!({
                "mobius_polynomial": mu.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "weighted_mobius_polynomial": weighted.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "p0": p0.as_ref().ok(),
                "growth": growth.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            }),
        );
    }
    let o = &mut *ctx.out;
    writeln!(o, "# mobius polynomial: {}", mu.format()).map_err(io)?;
    if !w.is_uniform() {
        writeln!(o, "# weighted mobius polynomial: {}", crate::mobius::format_poly(&weighted)).map_err(io)?;
    }
    match &p0 {
        Ok(v) => writeln!(o, "# p0 = {v}"),
        Err(e) => writeln!(o, "# p0 = n/a ({e})"),
    }
    .map_err(io)?;
    writeln!(o, "k,lambda_k").map_err(io)?;
    for (k, c) in growth.iter().enumerate() {
        writeln!(o, "{k},{c}").map_err(io)?;
    }
    Ok(())
}

fn chain_for(g: &GarsideStructure, w: &Valuation, global: &GlobalArgs) -> Result<BoundaryChain> {
    let opts = ChainOptions {
        tol: global.tol,
        max_iter: global.max_iter,
    };
    if w.is_uniform() {
        let (bc, _) = uniform_measure(g)?;
        return Ok(bc);
    }
    let (f, _) = normalize_to_mobius(g, &w.to_real())?;
    boundary_chain(g, &f, opts)
}

fn cmd_measure(ctx: &mut Ctx, spec: Option<&PathBuf>, weights: &WeightArgs, prefix: usize, count: usize) -> Result<()> {
    if prefix == 0 {
        return Err(Error::Structural("--prefix must be at least 1".into()));
    }
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let w = valuation(&p, weights)?;
    dump_matrix(ctx.global, &g, &w)?;
    let bc = chain_for(&g, &w, ctx.global)?;
    let seed = ctx.global.seed;
    let seqs: Vec<Vec<usize>> = (0..count as u64)
        .into_par_iter()
        .map(|i| bc.sample_prefix(prefix, &mut walker_rng(seed, i)))
        .collect();
    for s in &seqs {
        if !g.is_normal_sequence(s) {
            return Err(Error::Consistency("sampled prefix is not a normal sequence".into()));
        }
    }
    let lines: Vec<String> = seqs
        .iter()
        .map(|s| s.iter().map(|&x| g.format_simple(x)).collect::<Vec<_>>().join(" | "))
        .collect();
    if ctx.global.json {
        return emit_json(ctx.out, &json!({ "kappa": bc.kappa, "prefixes": lines }));
    }
    for l in lines {
        writeln!(ctx.out, "{l}").map_err(io)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_stats(
    ctx: &mut Ctx,
    cli_config: &Value,
    spec: Option<&PathBuf>,
    length: usize,
    count: usize,
    stat: &str,
    weights: &WeightArgs,
    out: Option<&PathBuf>,
    err: &mut (dyn Write + Send),
) -> Result<()> {
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let w = valuation(&p, weights)?;
    dump_matrix(ctx.global, &g, &w)?;
    let st = Statistic::parse(&g, stat)?;
    let exp = concentration_experiment(&g, &w, &st, length, count, ctx.global.seed)?;
    let delta = delta_method_check(&exp);
    let _ = writeln!(err, "# runtime: {:.3} s", exp.report.runtime_secs);
    let summary = json!({ "config": cli_config, "report": exp.report, "delta_method": delta });
    match out {
        Some(path) => {
            std::fs::write(path, exp.csv())?;
            let mut side = path.clone().into_os_string();
            side.push(".jsonl");
            std::fs::write(PathBuf::from(side), format!("{}\n", serde_json::to_string(&summary).expect("serializable")))?;
        }
        None if !ctx.global.json => write!(ctx.out, "{}", exp.csv()).map_err(io)?,
        None => {}
    }
    if ctx.global.json {
        return emit_json(ctx.out, &summary);
    }
    let r = &exp.report;
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# k={} count={} statistic={} exact={}\n# mean F/|x| = {:.6} (gamma = {:.6})\n# variance = {:.6} (s2 = {:.6}, routes {:.3e} apart)\n# KS raw = {:.6}, KS lattice = {}\n# k/F: mean {:.6} (target {:.6}), variance {:.6} (target {:.6})",
        r.k, r.count, r.statistic, r.exact_sampling, r.empirical_mean, r.target_gamma,
        r.empirical_variance, r.target_s2, r.s2_relative_gap, r.ks_raw, opt(r.ks_lattice),
        delta.empirical_mean, delta.target_mean, delta.empirical_variance, delta.target_variance
    );
    for c in &r.caveats {
        let _ = writeln!(text, "# caveat: {c}");
    }
    if out.is_some() {
        ctx.out.write_all(text.as_bytes()).map_err(io)?;
    } else {
        err.write_all(text.as_bytes()).map_err(io)?;
    }
    Ok(())
}

fn cmd_sample(ctx: &mut Ctx, spec: Option<&PathBuf>, length: usize, count: usize, weights: &WeightArgs) -> Result<()> {
    let p = load(ctx.global, spec)?;
    let g = garside(ctx.global, &p)?;
    let w = valuation(&p, weights)?;
    dump_matrix(ctx.global, &g, &w)?;
    let c = build_cwg(&g, &w)?;
    let xs = sample_exact(&c, length, count, ctx.global.seed)?;
    let lines: Vec<String> = xs.iter().map(|x| g.format_element(x)).collect();
    if ctx.global.json {
        return emit_json(ctx.out, &json!({ "length": length, "samples": lines }));
    }
    for l in lines {
        writeln!(ctx.out, "{l}").map_err(io)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let config = serde_json::to_value(cli).expect("serializable");
    let _ = writeln!(err, "# config: {}", serde_json::to_string(&config).expect("serializable"));
    let mut ctx = Ctx {
        global: &cli.global,
        out,
    };
    match &cli.command {
        Command::Analyze { spec } => cmd_analyze(&mut ctx, spec.as_ref()),
        Command::NormalForm { spec_or_word } => cmd_normal_form(&mut ctx, spec_or_word),
        Command::Garside { spec, dump } => cmd_garside(&mut ctx, spec.as_ref(), *dump),
        Command::Mobius { spec, kmax, weights } => cmd_mobius(&mut ctx, spec.as_ref(), *kmax, weights),
        Command::Measure {
            spec,
            weights,
            prefix,
            count,
        } => cmd_measure(&mut ctx, spec.as_ref(), weights, *prefix, *count),
        Command::Stats {
            spec,
            length,
            count,
            stat,
            weights,
            out,
        } => cmd_stats(&mut ctx, &config, spec.as_ref(), *length, *count, stat, weights, out.as_ref(), err),
        Command::Sample {
            spec,
            length,
            count,
            weights,
        } => cmd_sample(&mut ctx, spec.as_ref(), *length, *count, weights),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let threads = cli
        .global
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli, out, err)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
