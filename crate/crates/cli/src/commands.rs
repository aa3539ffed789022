use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use gradfit::basis::{BasisFamily, DomainBox, InputMap, TensorBasis};
use gradfit::experiment::{self, CompareConfig};
use gradfit::expr::ExprGraph;
use gradfit::gels::{self, FitConfig, GradSamples, Sampler, Surrogate};
use gradfit::indexset::MultiIndexSet;
use gradfit::paramlin::{self, Netlist};
use gradfit::randfield::{self, LognormalParams};
use gradfit::sampling::{self, InputDistribution, Marginal, PointSet};
use gradfit::stats;

use crate::args::*;
use crate::CliError;

type CliResult<T> = Result<T, CliError>;

pub const MODEL: &str = "exp(-x1^2-0.5*(x2-1)*x2)";
pub const SINE: &str = "sin(x1)";

/// Destination that starts with a provenance comment.
struct Output {
    inner: Box<dyn Write>,
}

impl Output {
    fn open(path: Option<&Path>, invocation: &str) -> CliResult<Output> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let mut out = Output { inner };
        writeln!(out.inner, "# invocation: {invocation}").map_err(gradfit::Error::from)?;
        Ok(out)
    }

    fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(gradfit::Error::from)?;
        Ok(())
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.inner.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn open_file(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid {what} value `{t}`")))
        })
        .collect()
}

/// A single value is repeated `dim` times.
fn broadcast(v: Vec<f64>, dim: usize, what: &str) -> CliResult<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(CliError::Usage(format!("{what} has {n} entries, expected 1 or {dim}"))),
    }
}

pub fn parse_function(args: &FunctionArgs) -> CliResult<ExprGraph> {
    let text = match args.function.as_str() {
        "model" => MODEL,
        "sine" => SINE,
        other => other,
    };
    let graph = ExprGraph::parse(text)?;
    match args.dim {
        Some(d) if d < graph.arity() => Err(CliError::Usage(format!(
            "--dim {d} is smaller than the {} variables used",
            graph.arity()
        ))),
        Some(d) => Ok(ExprGraph::parse_with_arity(text, d)?),
        None => Ok(graph),
    }
}

fn domain(args: &DomainArgs, dim: usize) -> CliResult<DomainBox> {
    let lo = broadcast(parse_list(&args.lower, "--lower")?, dim, "--lower")?;
    let hi = broadcast(parse_list(&args.upper, "--upper")?, dim, "--upper")?;
    Ok(DomainBox::new(lo, hi)?)
}

fn index_set(args: &BasisArgs, dim: usize) -> CliResult<MultiIndexSet> {
    Ok(MultiIndexSet::hyperbolic(dim, args.q, args.p)?)
}

fn family(args: &BasisArgs) -> CliResult<BasisFamily> {
    args.family
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown basis family `{}`", args.family)))
}

fn box_sampler(kind: &str, bx: DomainBox) -> CliResult<Sampler> {
    match kind {
        "uniform" => Ok(Sampler::Uniform(bx)),
        "lhs" => Ok(Sampler::Lhs(bx)),
        other => Err(CliError::Usage(format!("sampler `{other}` is not available here"))),
    }
}

pub fn compare(args: &CompareArgs, invocation: &str) -> CliResult<()> {
    let graph = parse_function(&args.function)?;
    let dim = graph.arity();
    let bx = domain(&args.domain, dim)?;
    let set = index_set(&args.basis, dim)?;
    let sizes = match &args.sizes {
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("invalid basis size `{t}`")))
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => experiment::degree_levels(&set),
    };
    let basis = TensorBasis::with_box(family(&args.basis)?, set, bx.clone())?;
    let s = &args.sampling;
    let cfg = CompareConfig {
        fit: FitConfig::new(basis, s.m, s.n, box_sampler(&s.sampler, bx.clone())?, s.seed),
        sizes,
        test_points: experiment::regular_grid(&bx, args.test_grid)?,
    };
    let f = |x: &[f64]| graph.value(x);
    let g = |x: &[f64]| graph.gradient(x);
    let rows = experiment::compare(&f, &g, &cfg)?;
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    experiment::write_compare_csv(&mut out, &rows)?;
    out.finish()
}

fn fit_map(args: &FitArgs, dim: usize) -> CliResult<(InputMap, Option<InputDistribution>)> {
    let moments = || -> CliResult<(Vec<f64>, Vec<f64>)> {
        let mean = broadcast(parse_list(args.mean.as_deref().unwrap_or("0"), "--mean")?, dim, "--mean")?;
        let std = broadcast(parse_list(args.std.as_deref().unwrap_or("1"), "--std")?, dim, "--std")?;
        Ok((mean, std))
    };
    match args.map.as_str() {
        "box" => Ok((InputMap::Box(domain(&args.domain, dim)?), None)),
        "identity" | "standardize" => {
            let (mean, std) = moments()?;
            let marginals = mean
                .iter()
                .zip(&std)
                .map(|(&m, &s)| Marginal::normal(m, s))
                .collect::<gradfit::Result<Vec<_>>>()?;
            let dist = InputDistribution::new(marginals)?;
            let map = if args.map == "identity" {
                InputMap::Identity
            } else {
                InputMap::standardize(mean, std)?
            };
            Ok((map, Some(dist)))
        }
        other => Err(CliError::Usage(format!("unknown map `{other}`"))),
    }
}

pub fn fit(args: &FitArgs, invocation: &str) -> CliResult<()> {
    let fam = family(&args.basis)?;
    let surrogate = if let Some(path) = &args.samples {
        let dim = args
            .function
            .dim
            .ok_or_else(|| CliError::Usage("--samples needs --dim".into()))?;
        let samples = GradSamples::read_csv(open_file(path)?, dim)?;
        let samples = if args.no_derivatives {
            samples.without_derivatives()
        } else {
            samples
        };
        let (map, _) = fit_map(args, dim)?;
        let basis = TensorBasis::new(fam, index_set(&args.basis, dim)?, map)?;
        gels::fit_samples(&basis, &samples, gels::DEFAULT_RANK_TOL)?
    } else {
        let graph = parse_function(&args.function)?;
        let dim = graph.arity();
        let (map, dist) = fit_map(args, dim)?;
        let s = &args.sampling;
        let sampler = match (&map, s.sampler.as_str()) {
            (InputMap::Box(bx), kind) => box_sampler(kind, bx.clone())?,
            (_, "normal" | "uniform") => Sampler::Distribution(dist.expect("set for non-box maps")),
            (_, other) => {
                return Err(CliError::Usage(format!("sampler `{other}` needs --map box")));
            }
        };
        let basis = TensorBasis::new(fam, index_set(&args.basis, dim)?, map)?;
        let cfg = FitConfig::new(basis, s.m, s.n, sampler, s.seed);
        let f = |x: &[f64]| graph.value(x);
        let g = |x: &[f64]| graph.gradient(x);
        let grad: Option<gels::GradFn<'_>> = if args.no_derivatives { None } else { Some(&g) };
        let points = gels::select_points(&cfg)?;
        let samples = gels::evaluate(points, &f, grad)?;
        if let Some(pred) = &args.predictions {
            let surrogate = gels::fit_samples(&cfg.basis, &samples, cfg.rank_tol)?;
            write_predictions(&surrogate, samples.points().points(), pred, invocation)?;
            surrogate
        } else {
            gels::fit_samples(&cfg.basis, &samples, cfg.rank_tol)?
        }
    };
    if let Some(r) = surrogate.report() {
        eprintln!(
            "fit: M={} rank={} residual={:.3e} cond={:.3e}",
            surrogate.basis().len(),
            r.rank,
            r.residual_norm,
            r.sigma_max / r.sigma_min
        );
    }
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    out.write_all(surrogate.to_text().as_bytes()).map_err(gradfit::Error::from)?;
    out.finish()
}

fn write_predictions(s: &Surrogate, points: &[Vec<f64>], path: &Path, invocation: &str) -> CliResult<()> {
    let mut out = Output::open(Some(path), invocation)?;
    for x in points {
        let mut cols: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
        cols.push(format!("{:.17e}", s.eval(x)?));
        writeln!(out, "{}", cols.join(",")).map_err(gradfit::Error::from)?;
    }
    out.finish()
}

fn load_surrogate(path: &Path) -> CliResult<Surrogate> {
    Ok(Surrogate::from_text(&read_file(path)?)?)
}

pub fn eval(args: &EvalArgs, invocation: &str) -> CliResult<()> {
    let s = load_surrogate(&args.surrogate)?;
    let dim = s.basis().dim();
    let text = read_file(&args.points)?;
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_list(line, &format!("line {}", n + 1))?;
        if row.len() < dim {
            return Err(CliError::Usage(format!(
                "line {}: expected at least {dim} columns",
                n + 1
            )));
        }
        let x = &row[..dim];
        let mut cols: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
        cols.push(format!("{:.17e}", s.eval(x)?));
        cols.extend(s.grad(x)?.iter().map(|v| format!("{v:.17e}")));
        writeln!(out, "{}", cols.join(",")).map_err(gradfit::Error::from)?;
    }
    out.finish()
}

pub fn sample(args: &SampleArgs, invocation: &str) -> CliResult<()> {
    let bx = domain(&args.domain, args.dim)?;
    let points: PointSet = match args.sampler.as_str() {
        "uniform" => sampling::uniform_random(&bx, args.n, args.seed)?,
        "lhs" => sampling::lhs(&bx, args.n, args.seed)?,
        "maxvol" => {
            let basis = TensorBasis::with_box(family(&args.basis)?, index_set(&args.basis, args.dim)?, bx.clone())?;
            let cand = sampling::uniform_random(&bx, args.n, args.seed)?;
            sampling::maxvol_points(&basis, &cand, args.m)?
        }
        other => return Err(CliError::Usage(format!("unknown sampler `{other}`"))),
    };
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    points.write_csv(&mut out)?;
    out.finish()
}

pub fn field(args: &FieldArgs, invocation: &str) -> CliResult<()> {
    let nodes = randfield::grid_nodes(args.grid, -1.0, 1.0)?;
    let model = randfield::build_eole(nodes, args.sigma, args.terms)?;
    let params = LognormalParams::new(args.a, args.b)?;
    let xi = InputDistribution::standard_normal(args.terms)?
        .draw(&mut sampling::rng_from_seed(args.seed));
    let query = randfield::grid_nodes(args.resolution, -1.0, 1.0)?;
    let g = randfield::sample_gaussian_field(&model, &xi, &query)?;
    let k: Vec<f64> = g.iter().map(|&g| params.transform(g)).collect();
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    randfield::write_snapshot_csv(&mut out, &query, &g, &k)?;
    out.finish()
}

fn load_circuit(path: &Path, xi: Option<&str>) -> CliResult<(paramlin::Circuit, Vec<f64>)> {
    let net: Netlist = read_file(path)?.parse()?;
    let circuit = net.compile()?;
    let l = circuit.system.l();
    let xi = match xi {
        Some(t) => parse_list(t, "--xi")?,
        None => vec![0.0; l],
    };
    if xi.len() != l {
        return Err(CliError::Usage(format!("--xi has {} entries, netlist has {l} parameters", xi.len())));
    }
    Ok((circuit, xi))
}

pub fn dc(args: &DcArgs, invocation: &str) -> CliResult<()> {
    let (c, xi) = load_circuit(&args.netlist, args.xi.as_deref())?;
    let sol = paramlin::solve_dc_with_sens(&c.system, &xi, &c.input)?;
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    let mut header = vec!["node".to_string(), "voltage".to_string()];
    header.extend((1..=xi.len()).map(|i| format!("dv_dxi{i}")));
    writeln!(out, "{}", header.join(",")).map_err(gradfit::Error::from)?;
    for (k, node) in c.nodes.iter().enumerate() {
        let mut cols = vec![node.to_string(), format!("{:.17e}", sol.x[k])];
        cols.extend(sol.sens.iter().map(|s| format!("{:.17e}", s[k])));
        writeln!(out, "{}", cols.join(",")).map_err(gradfit::Error::from)?;
    }
    out.finish()
}

pub fn dae(args: &DaeArgs, invocation: &str) -> CliResult<()> {
    if !(args.h > 0.0) || !(args.t_end > 0.0) {
        return Err(CliError::Usage("--h and --t-end must be positive".into()));
    }
    let (c, xi) = load_circuit(&args.netlist, args.xi.as_deref())?;
    let steps = (args.t_end / args.h).round() as usize;
    if steps == 0 || steps > 10_000_000 {
        return Err(CliError::Usage("--t-end / --h gives an unusable step count".into()));
    }
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * args.h).collect();
    let input = c.input.clone();
    let traj = paramlin::integrate_dae_with_sens(&c.system, &xi, |_| input.clone(), &grid, None)?;
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    let nodes: Vec<String> = c.nodes.iter().map(|n| n.to_string()).collect();
    writeln!(out, "# columns: t, v[{}], then dv/dxi_i for i = 1..{}", nodes.join(" "), xi.len())
        .map_err(gradfit::Error::from)?;
    traj.write_csv(&mut out)?;
    out.finish()
}

/// The input distribution a surrogate was built for.
fn surrogate_distribution(s: &Surrogate) -> CliResult<InputDistribution> {
    let dim = s.basis().dim();
    Ok(match s.basis().map() {
        InputMap::Identity => InputDistribution::standard_normal(dim)?,
        InputMap::Standardize { mean, std } => InputDistribution::new(
            mean.iter()
                .zip(std)
                .map(|(&m, &sd)| Marginal::normal(m, sd))
                .collect::<gradfit::Result<Vec<_>>>()?,
        )?,
        InputMap::Box(bx) => InputDistribution::new(
            bx.lower()
                .iter()
                .zip(bx.upper())
                .map(|(&a, &b)| Marginal::uniform(a, b))
                .collect::<gradfit::Result<Vec<_>>>()?,
        )?,
    })
}

pub fn stats(args: &StatsArgs, invocation: &str) -> CliResult<()> {
    let s = load_surrogate(&args.surrogate)?;
    let dist = surrogate_distribution(&s)?;
    let mc = stats::surrogate_monte_carlo(&s, &dist, args.n, args.seed)?;
    let mut out = Output::open(args.output.as_deref(), invocation)?;
    let w = |out: &mut Output, key: &str, v: f64| writeln!(out, "{key},{v:.17e}").map_err(gradfit::Error::from);
    if s.basis().is_orthonormal() {
        w(&mut out, "pce_mean", stats::pce_mean(&s)?)?;
        w(&mut out, "pce_std", stats::pce_std(&s)?)?;
    }
    w(&mut out, "mc_mean", mc.mean)?;
    w(&mut out, "mc_std", mc.std)?;
    w(&mut out, "mc_mean_stderr", mc.mean_std_error())?;
    out.finish()?;
    if let Some(path) = &args.cdf {
        let mut out = Output::open(Some(path), invocation)?;
        mc.cdf.write_csv(&mut out)?;
        out.finish()?;
    }
    Ok(())
}
