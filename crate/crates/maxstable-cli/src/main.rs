//! `maxstable`: evaluate the limit distributions, emit spectral-density and
//! extremal-correlation tables, run the samplers, and produce convergence
//! reports. All output is CSV with `#` comment lines (tool version, resolved
//! config, seed) and 17-significant-digit numbers, so identical invocations
//! produce byte-identical files.
//!
//! Replicate-level parallelism honors `RAYON_NUM_THREADS`.

use clap::{Parser, Subcommand};
use maxstable::dependence::{spectral_density, SpectralDensity, Variogram};
use maxstable::distributions::{
    hr_bivariate_cdf, hr_mixture_cdf, rayleigh_mixture_cdf, type2_gumbel_mixture_cdf,
};
use maxstable::measures::MixtureMeasure;
use maxstable::simulate::{
    brown_resnick_field, mixture_process_field, rescaled_gaussian_max_field, replicate_map,
    sample_hr_mixture_ppp, GridSpec, RngHandle,
};
use maxstable::verify::convergence_report;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "maxstable",
    version,
    about = "Husler-Reiss mixture distributions, Brown-Resnick processes and their samplers",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a bivariate max-stable CDF at one point.
    Cdf {
        /// Model: hr | rayleigh | type2 | mixture-file
        #[arg(long)]
        model: String,
        /// Parameter: lambda (may be `inf`), sigma, b, or a measure file path.
        #[arg(long)]
        params: String,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral density table: one theta column, one value column per parameter.
    Spectral {
        /// Family: hr | rayleigh | type2
        #[arg(long)]
        family: String,
        /// Comma-separated parameter values, one output column each.
        #[arg(long, value_delimiter = ',')]
        param_list: Vec<f64>,
        /// Number of rows (midpoints of [0, pi/2]).
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extremal correlation function over a list of lags.
    Ecf {
        /// Variogram parameters `alpha,scale` for gamma(h) = scale |h|^alpha.
        #[arg(long)]
        variogram: String,
        /// Mixing family: rayleigh | type2 | laplace-file
        #[arg(long)]
        mixture: String,
        /// Family parameter (sigma or b); ignored for laplace-file.
        #[arg(long, default_value_t = 1.0)]
        mixture_param: f64,
        /// Atom file `r weight` per line for laplace-file.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Comma-separated lag distances.
        #[arg(long, value_delimiter = ',')]
        lags: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw samples: bivariate PPP pairs or max-stable fields.
    Simulate {
        /// Kind: ppp | br | mixture | rescaled
        #[arg(long)]
        kind: String,
        /// Mixing measure spec: rayleigh:S | type2:B | dirac:L | dirac:inf | file:PATH
        #[arg(long)]
        nu: Option<String>,
        /// Discretize a continuous measure to this many atoms (required for
        /// ppp with a continuous nu; the step is always explicit).
        #[arg(long)]
        discretize: Option<usize>,
        /// Grid points `x1,y1;x2,y2;...` (coords comma-, points semicolon-separated).
        #[arg(long)]
        grid: Option<String>,
        /// Variogram `alpha,scale`.
        #[arg(long)]
        variogram: Option<String>,
        /// Number of mixed fields for kind=mixture.
        #[arg(long)]
        n_mix: Option<u32>,
        /// Stability index in (0,2) for kind=rescaled.
        #[arg(long)]
        alpha: Option<f64>,
        /// Row count for kind=rescaled.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        accuracy: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence report for the triangular-array limit theorem.
    Verify {
        /// Mixing measure spec (see simulate --nu).
        #[arg(long)]
        nu: String,
        /// Comma-separated ascending row sizes.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        /// Evaluation grid `x1,y1;x2,y2;...` (default 3x3 over {-1,0,1}).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let mut body = String::new();
    let (config, out_path) = match &cli.command {
        Command::Cdf {
            model,
            params,
            x,
            y,
            out,
        } => {
            run_cdf(model, params, *x, *y, &mut body)?;
            (
                format!("cdf --model {model} --params {params} --x {x:.16e} --y {y:.16e}"),
                out.clone(),
            )
        }
        Command::Spectral {
            family,
            param_list,
            grid,
            out,
        } => {
            run_spectral(family, param_list, *grid, &mut body)?;
            (
                format!(
                    "spectral --family {family} --param-list {} --grid {grid}",
                    join_floats(param_list)
                ),
                out.clone(),
            )
        }
        Command::Ecf {
            variogram,
            mixture,
            mixture_param,
            file,
            lags,
            out,
        } => {
            run_ecf(variogram, mixture, *mixture_param, file.as_deref(), lags, &mut body)?;
            (
                format!(
                    "ecf --variogram {variogram} --mixture {mixture} --mixture-param {mixture_param:.16e} --lags {}",
                    join_floats(lags)
                ),
                out.clone(),
            )
        }
        Command::Simulate {
            kind,
            nu,
            discretize,
            grid,
            variogram,
            n_mix,
            alpha,
            n,
            replicates,
            seed,
            accuracy,
            out,
        } => {
            let args = SimulateArgs {
                kind,
                nu: nu.as_deref(),
                discretize: *discretize,
                grid: grid.as_deref(),
                variogram: variogram.as_deref(),
                n_mix: *n_mix,
                alpha: *alpha,
                n: *n,
                replicates: *replicates,
                seed: *seed,
                accuracy: *accuracy,
            };
            run_simulate(&args, &mut body)?;
            (
                format!(
                    "simulate --kind {kind} --nu {} --discretize {} --grid {} --variogram {} \
                     --n-mix {} --alpha {} --n {} --replicates {replicates} --seed {seed} --accuracy {accuracy:.16e}",
                    nu.as_deref().unwrap_or("-"),
                    opt_str(discretize),
                    grid.as_deref().unwrap_or("-"),
                    variogram.as_deref().unwrap_or("-"),
                    opt_str(n_mix),
                    opt_str(alpha),
                    opt_str(n)
                ),
                out.clone(),
            )
        }
        Command::Verify {
            nu,
            n_list,
            replicates,
            grid,
            seed,
            out,
        } => {
            run_verify(nu, n_list, *replicates, grid.as_deref(), *seed, &mut body)?;
            (
                format!(
                    "verify --nu {nu} --n-list {} --replicates {replicates} --grid {} --seed {seed}",
                    n_list
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    grid.as_deref().unwrap_or("-")
                ),
                out.clone(),
            )
        }
    };

    let seed_line = seed_of(&cli.command);
    let mut head = String::new();
    let _ = writeln!(head, "# maxstable {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(head, "# config: {config}");
    let _ = writeln!(head, "# seed: {seed_line}");
    let output = format!("{head}{body}");
    match out_path {
        Some(path) => std::fs::write(&path, output)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.as_bytes())
                .map_err(|e| format!("cannot write stdout: {e}"))?;
        }
    }
    Ok(())
}

fn seed_of(cmd: &Command) -> u64 {
    match cmd {
        Command::Simulate { seed, .. } | Command::Verify { seed, .. } => *seed,
        _ => 0,
    }
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn err_str<T>(r: maxstable::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn parse_measure_spec(spec: &str) -> Result<MixtureMeasure, String> {
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| format!("measure spec '{spec}' must look like family:param or file:path"))?;
    let parse_f = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .map_err(|e| format!("bad parameter '{s}': {e}"))
    };
    match head {
        "rayleigh" => err_str(MixtureMeasure::rayleigh(parse_f(rest)?)),
        "type2" | "type2gumbel" => err_str(MixtureMeasure::type2_gumbel(parse_f(rest)?)),
        "dirac" => {
            let loc = if rest == "inf" {
                maxstable::measures::Location::Infinite
            } else {
                err_str(maxstable::measures::Location::new(parse_f(rest)?))?
            };
            Ok(MixtureMeasure::dirac(loc))
        }
        "file" => {
            let text = std::fs::read_to_string(rest)
                .map_err(|e| format!("cannot read measure file {rest}: {e}"))?;
            err_str(MixtureMeasure::from_text(&text))
        }
        other => Err(format!("unknown measure family '{other}'")),
    }
}

fn parse_variogram(spec: &str) -> Result<Variogram, String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("variogram spec '{spec}' must be 'alpha,scale'"));
    }
    let alpha = parts[0]
        .parse::<f64>()
        .map_err(|e| format!("bad alpha '{}': {e}", parts[0]))?;
    let scale = parts[1]
        .parse::<f64>()
        .map_err(|e| format!("bad scale '{}': {e}", parts[1]))?;
    err_str(Variogram::power(alpha, scale))
}

fn parse_grid(spec: &str) -> Result<GridSpec, String> {
    let mut points = Vec::new();
    for p in spec.split(';') {
        let coords: Result<Vec<f64>, _> = p.split(',').map(|c| c.trim().parse::<f64>()).collect();
        points.push(coords.map_err(|e| format!("bad grid point '{p}': {e}"))?);
    }
    err_str(GridSpec::new(points))
}

fn parse_pair_grid(spec: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut grid = Vec::new();
    for p in spec.split(';') {
        let parts: Vec<&str> = p.split(',').collect();
        if parts.len() != 2 {
            return Err(format!("grid point '{p}' must be 'x,y'"));
        }
        let x = parts[0]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad x '{}': {e}", parts[0]))?;
        let y = parts[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad y '{}': {e}", parts[1]))?;
        grid.push((x, y));
    }
    Ok(grid)
}

fn run_cdf(model: &str, params: &str, x: f64, y: f64, body: &mut String) -> Result<(), String> {
    let value = match model {
        "hr" => {
            let lambda = if params == "inf" {
                f64::INFINITY
            } else {
                params
                    .parse::<f64>()
                    .map_err(|e| format!("bad lambda '{params}': {e}"))?
            };
            err_str(hr_bivariate_cdf(x, y, lambda))?
        }
        "rayleigh" => err_str(rayleigh_mixture_cdf(
            x,
            y,
            params
                .parse::<f64>()
                .map_err(|e| format!("bad sigma '{params}': {e}"))?,
        ))?,
        "type2" => err_str(type2_gumbel_mixture_cdf(
            x,
            y,
            params
                .parse::<f64>()
                .map_err(|e| format!("bad b '{params}': {e}"))?,
        ))?,
        "mixture-file" => {
            let text = std::fs::read_to_string(params)
                .map_err(|e| format!("cannot read measure file {params}: {e}"))?;
            let nu = err_str(MixtureMeasure::from_text(&text))?;
            err_str(hr_mixture_cdf(x, y, &nu))?
        }
        other => return Err(format!("unknown model '{other}' (hr|rayleigh|type2|mixture-file)")),
    };
    let _ = writeln!(body, "{value:.16e}");
    Ok(())
}

fn run_spectral(
    family: &str,
    params: &[f64],
    grid: usize,
    body: &mut String,
) -> Result<(), String> {
    if params.is_empty() || grid == 0 {
        return Err("spectral: needs a parameter list and grid > 0".into());
    }
    let densities: Vec<SpectralDensity> = params
        .iter()
        .map(|&p| {
            err_str(match family {
                "hr" => SpectralDensity::husler_reiss(p),
                "rayleigh" => SpectralDensity::rayleigh(p),
                "type2" => SpectralDensity::type2_gumbel(p),
                other => Err(maxstable::Error::Domain(format!(
                    "unknown spectral family '{other}' (hr|rayleigh|type2)"
                ))),
            })
        })
        .collect::<Result<_, _>>()?;
    let cols: Vec<String> = params.iter().map(|p| format!("{family}_{p}")).collect();
    let _ = writeln!(body, "theta,{}", cols.join(","));
    for i in 0..grid {
        let theta = (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / grid as f64;
        let mut row = format!("{theta:.16e}");
        for s in &densities {
            let v = err_str(spectral_density(theta, s))?;
            let _ = write!(row, ",{v:.16e}");
        }
        let _ = writeln!(body, "{row}");
    }
    Ok(())
}

fn run_ecf(
    variogram: &str,
    mixture: &str,
    mixture_param: f64,
    file: Option<&std::path::Path>,
    lags: &[f64],
    body: &mut String,
) -> Result<(), String> {
    if lags.is_empty() {
        return Err("ecf: needs at least one lag".into());
    }
    let gamma = parse_variogram(variogram)?;
    let _ = writeln!(body, "lag,rho");
    for &lag in lags {
        if !(lag >= 0.0) {
            return Err(format!("ecf: lag must be >= 0, got {lag}"));
        }
        let h = [lag];
        let rho = match mixture {
            "rayleigh" => err_str(maxstable::dependence::ecf_mixture(
                &h,
                &gamma,
                &err_str(MixtureMeasure::rayleigh(mixture_param))?,
            ))?,
            "type2" => err_str(maxstable::dependence::ecf_mixture(
                &h,
                &gamma,
                &err_str(MixtureMeasure::type2_gumbel(mixture_param))?,
            ))?,
            "laplace-file" => {
                let path = file.ok_or("ecf: laplace-file needs --file")?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let atoms = parse_laplace_atoms(&text)?;
                err_str(maxstable::dependence::ecf_laplace(&h, &gamma, &atoms))?
            }
            other => {
                return Err(format!(
                    "unknown mixture '{other}' (rayleigh|type2|laplace-file)"
                ))
            }
        };
        let _ = writeln!(body, "{lag:.16e},{rho:.16e}");
    }
    Ok(())
}

fn parse_laplace_atoms(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut atoms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(format!("line {}: expected 'rate weight'", i + 1));
        }
        let r = fields[0]
            .parse::<f64>()
            .map_err(|e| format!("line {}: bad rate: {e}", i + 1))?;
        let w = fields[1]
            .parse::<f64>()
            .map_err(|e| format!("line {}: bad weight: {e}", i + 1))?;
        atoms.push((r, w));
    }
    Ok(atoms)
}

struct SimulateArgs<'a> {
    kind: &'a str,
    nu: Option<&'a str>,
    discretize: Option<usize>,
    grid: Option<&'a str>,
    variogram: Option<&'a str>,
    n_mix: Option<u32>,
    alpha: Option<f64>,
    n: Option<u64>,
    replicates: usize,
    seed: u64,
    accuracy: f64,
}

impl SimulateArgs<'_> {
    fn measure(&self, for_ppp: bool) -> Result<MixtureMeasure, String> {
        let spec = self.nu.ok_or("simulate: this kind needs --nu")?;
        let nu = parse_measure_spec(spec)?;
        match (nu.is_atomic(), self.discretize) {
            (_, Some(nodes)) => err_str(nu.discretize(nodes)),
            (false, None) if for_ppp => Err(
                "simulate --kind ppp needs an atomic measure: pass --discretize <nodes> \
                 to make the discretization step explicit"
                    .into(),
            ),
            _ => Ok(nu),
        }
    }

    fn grid(&self) -> Result<GridSpec, String> {
        parse_grid(self.grid.ok_or("simulate: this kind needs --grid")?)
    }

    fn variogram(&self) -> Result<Variogram, String> {
        parse_variogram(self.variogram.ok_or("simulate: this kind needs --variogram")?)
    }
}

fn run_simulate(args: &SimulateArgs, body: &mut String) -> Result<(), String> {
    if args.replicates == 0 {
        return Err("simulate: replicates must be >= 1".into());
    }
    let handle = RngHandle::new(args.seed, 0);
    match args.kind {
        "ppp" => {
            let nu = args.measure(true)?;
            let samples = replicate_map(handle, args.replicates, |rh| {
                sample_hr_mixture_ppp(&nu, args.accuracy, &rh)
            });
            let _ = writeln!(body, "replicate,component,value");
            for (i, s) in samples.into_iter().enumerate() {
                let s = err_str(s)?;
                let _ = writeln!(
                    body,
                    "# replicate={i} stream={} truncation_bound={:.16e}",
                    handle.stream_id() + i as u64,
                    s.truncation_bound
                );
                let _ = writeln!(body, "{i},y1,{:.16e}", s.x);
                let _ = writeln!(body, "{i},y2,{:.16e}", s.y);
            }
        }
        "br" | "mixture" | "rescaled" => {
            let grid = args.grid()?;
            let fields: Vec<maxstable::Result<maxstable::simulate::FieldSample>> =
                match args.kind {
                    "br" => {
                        let gamma = args.variogram()?;
                        replicate_map(handle, args.replicates, |rh| {
                            brown_resnick_field(&grid, &gamma, args.accuracy, &rh)
                        })
                    }
                    "mixture" => {
                        let gamma = args.variogram()?;
                        let nu = args.measure(false)?;
                        let n_mix = args.n_mix.ok_or("simulate --kind mixture needs --n-mix")?;
                        replicate_map(handle, args.replicates, |rh| {
                            mixture_process_field(&grid, &gamma, &nu, n_mix, args.accuracy, &rh)
                        })
                    }
                    _ => {
                        let alpha = args.alpha.ok_or("simulate --kind rescaled needs --alpha")?;
                        let n = args.n.ok_or("simulate --kind rescaled needs --n")?;
                        let nu = args.measure(false)?;
                        replicate_map(handle, args.replicates, |rh| {
                            rescaled_gaussian_max_field(&grid, alpha, &nu, n, &rh)
                        })
                    }
                };
            write_fields(body, &grid, fields, args.replicates)?;
        }
        other => {
            return Err(format!(
                "unknown simulate kind '{other}' (ppp|br|mixture|rescaled)"
            ))
        }
    }
    Ok(())
}

fn write_fields(
    body: &mut String,
    grid: &GridSpec,
    fields: Vec<maxstable::Result<maxstable::simulate::FieldSample>>,
    replicates: usize,
) -> Result<(), String> {
    let coords: Vec<String> = (1..=grid.dim()).map(|i| format!("coord_{i}")).collect();
    if replicates == 1 {
        let field = err_str(fields.into_iter().next().unwrap())?;
        let mut buf = Vec::new();
        field
            .write_csv(&mut buf)
            .map_err(|e| format!("format error: {e}"))?;
        body.push_str(&String::from_utf8_lossy(&buf));
    } else {
        let _ = writeln!(body, "replicate,point_id,{},value", coords.join(","));
        for (i, field) in fields.into_iter().enumerate() {
            let field = err_str(field)?;
            let _ = writeln!(
                body,
                "# replicate={i} seed={} stream={} accuracy={:.16e} truncation_bound={:.16e}",
                field.seed.master_seed(),
                field.seed.stream_id(),
                field.accuracy,
                field.truncation_bound
            );
            for p in 0..grid.len() {
                let coords: Vec<String> = grid
                    .point(p)
                    .iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect();
                let _ = writeln!(
                    body,
                    "{i},{},{},{:.16e}",
                    grid.label(p),
                    coords.join(","),
                    field.values[p]
                );
            }
        }
    }
    Ok(())
}

fn run_verify(
    nu_spec: &str,
    n_list: &[u64],
    replicates: usize,
    grid: Option<&str>,
    seed: u64,
    body: &mut String,
) -> Result<(), String> {
    let nu = parse_measure_spec(nu_spec)?;
    let grid = match grid {
        Some(g) => parse_pair_grid(g)?,
        None => {
            let pts = [-1.0, 0.0, 1.0];
            pts.iter()
                .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
                .collect()
        }
    };
    let handle = RngHandle::new(seed, 0);
    let report = err_str(convergence_report(&nu, n_list, &grid, replicates, &handle))?;
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf)
        .map_err(|e| format!("format error: {e}"))?;
    body.push_str(&String::from_utf8_lossy(&buf));
    Ok(())
}
