use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde_json::{json, Value};

use rmtk::criteria;
use rmtk::output::{self, rational_json, Format};
use rmtk_core::angular::{hc_integral, mc_angular, morozov_moments, AngularProblem};
use rmtk_core::fredholm::{spacing_distribution, tracy_widom_beta2_with};
use rmtk_core::maps::connected_correlator_coeffs;
use rmtk_core::model::{parse_rational, Potential};
use rmtk_core::ortho::{recurrence, scaled_potential};
use rmtk_core::saddle::solve_one_cut;
use rmtk_core::sampling::{histogram, pooled_spacings, sample_gaussian, sample_wishart, wigner_surmise, EnsembleSpec};
use rmtk_core::toprec::{SpectralCurve, TopRec};

#[derive(Parser, Debug)]
#[command(name = "rmtk", version, about = "Random matrix workbench")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct PotentialArgs {
    /// Potential JSON file: array of {k, numerator, denominator}.
    #[arg(long, conflicts_with = "coeffs")]
    potential: Option<PathBuf>,
    /// Comma-separated t_1, t_2, … of V(x) = Σ t_k x^k / k (rationals or decimals).
    #[arg(long)]
    coeffs: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Eigenvalues of Gaussian β-ensembles or Wishart matrices.
    Sample {
        #[arg(long, default_value_t = 2)]
        beta: u8,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        draws: u64,
        /// Wishart aspect ratio u = N/p ≥ 1 (p = size); Gaussian ensemble when absent.
        #[arg(long)]
        wishart_u: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Emit a density histogram with this many bins instead of raw eigenvalues.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Equilibrium density of a one-cut potential.
    Density {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Unfolded bulk spacings against the Fredholm and Wigner laws.
    Spacing {
        #[arg(long, default_value_t = 2)]
        beta: u8,
        #[arg(long, default_value_t = 200)]
        size: usize,
        #[arg(long, default_value_t = 100)]
        draws: u64,
        #[arg(long, default_value_t = 0.5)]
        bulk: f64,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(long, default_value_t = 4.0)]
        s_max: f64,
    },
    /// Recurrence coefficients, norms and partition functions.
    Ortho {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Use the N-scaled weight e^{−N V}.
        #[arg(long)]
        scaled_n: Option<usize>,
    },
    /// Sine-kernel gap probability E(s) and spacing density P(s).
    Gap {
        #[arg(long, default_value_t = 4.0)]
        s_max: f64,
        #[arg(long, default_value_t = 161)]
        points: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
    },
    /// Tracy–Widom β = 2 distribution F2(s).
    Tw {
        #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
        s_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        s_max: f64,
        #[arg(long, default_value_t = 91)]
        points: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
    },
    /// Connected map counts: coefficients of W_{g,n} at Π x^{−μ_i−1} t^q.
    Maps {
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 0)]
        t_order: usize,
    },
    /// Topological recursion on the formal quartic curve.
    Toprec {
        #[arg(long)]
        g: usize,
        /// Number of points; 0 gives the free energy F_g (g ≥ 2).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t_order: usize,
        #[arg(long, default_value_t = 4)]
        mu_max: usize,
    },
    /// Itzykson–Zuber integral, Morozov moments and a Haar Monte-Carlo estimate.
    Angular {
        #[arg(long = "X", allow_hyphen_values = true)]
        x: String,
        #[arg(long = "Y", allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
    },
    /// Fast acceptance checks.
    Selftest,
}

enum Failure {
    Usage(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn usage(flag: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{flag}: {e}"))
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|x| x.trim().parse::<T>().map_err(|e| usage(flag, format!("{x:?}: {e}")))).collect()
}

fn load_potential(p: &PotentialArgs) -> Result<(Potential, Value), Failure> {
    let v = match (&p.potential, &p.coeffs) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage("--potential", e))?;
            let j: Value = serde_json::from_str(&text).map_err(|e| usage("--potential", e))?;
            Potential::from_json(&j).map_err(|e| usage("--potential", e))?
        }
        (None, Some(c)) => {
            let ts = c.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>().map_err(|e| usage("--coeffs", e))?;
            Potential::exact(ts).map_err(|e| usage("--coeffs", e))?
        }
        (None, None) => Potential::gaussian(),
    };
    let j = v.to_json().map_err(|e| Failure::Other(anyhow!(e)))?;
    Ok((v, j))
}

fn f(x: f64) -> String {
    format!("{x:e}")
}

struct Emitted {
    params: Value,
    seed: Option<u64>,
    format: Format,
    csv: Option<String>,
    json: Option<Value>,
}

fn run(cli: Cli) -> Result<Option<Emitted>, Failure> {
    let want = cli.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let seed = cli.seed;
    let e = match cli.cmd {
        Cmd::Sample { beta, size, draws, wishart_u, sigma2, bins } => {
            let mut all = vec![];
            let mut per_draw = vec![];
            let label = match wishart_u {
                None => {
                    let spec = EnsembleSpec::new(beta, size).map_err(|e| usage("--beta/--size", e))?;
                    for d in 0..draws {
                        let s = sample_gaussian(spec, seed, d);
                        all.extend(s.eigenvalues.iter().copied());
                        per_draw.push(s.eigenvalues);
                    }
                    "gaussian"
                }
                Some(u) => {
                    if !(u >= 1.0) {
                        return Err(usage("--wishart-u", "must be at least 1"));
                    }
                    let n = (u * size as f64).round() as usize;
                    for d in 0..draws {
                        let s = sample_wishart(size, n, sigma2, seed, d).map_err(|e| usage("--wishart-u/--sigma2", e))?;
                        all.extend(s.eigenvalues.iter().copied());
                        per_draw.push(s.eigenvalues);
                    }
                    "wishart"
                }
            };
            let params = json!({"ensemble": label, "beta": beta, "size": size, "draws": draws, "wishart_u": wishart_u, "sigma2": sigma2, "bins": bins});
            let format = want.unwrap_or(Format::Csv);
            if let Some(b) = bins {
                let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let h = histogram(&all, b, lo, hi.max(lo + 1e-12)).map_err(|e| usage("--bins", e))?;
                let rows: Vec<Vec<String>> = h.centers.iter().zip(&h.densities).map(|(c, d)| vec![f(*c), f(*d)]).collect();
                Emitted {
                    params,
                    seed: Some(seed),
                    format,
                    csv: Some(output::csv(&["center", "density"], &rows)),
                    json: Some(json!({"center": h.centers, "density": h.densities})),
                }
            } else {
                let mut csv = String::new();
                for (d, ev) in per_draw.iter().enumerate() {
                    csv.push_str(&format!("# beta,N,seed,draw\n# {beta},{size},{seed},{d}\n"));
                    for x in ev {
                        csv.push_str(&f(*x));
                        csv.push('\n');
                    }
                }
                let draws_json: Vec<Value> = per_draw.iter().enumerate().map(|(d, ev)| json!({"draw": d, "eigenvalues": ev})).collect();
                Emitted { params, seed: Some(seed), format, csv: Some(csv), json: Some(json!({"beta": beta, "N": size, "seed": seed, "draws": draws_json})) }
            }
        }
        Cmd::Density { pot, points } => {
            let (v, vj) = load_potential(&pot)?;
            if points < 2 {
                return Err(usage("--points", "need at least 2"));
            }
            let c = solve_one_cut(&v).map_err(|e| usage("--potential/--coeffs", e))?;
            let (b, a) = (c.b(), c.a());
            let xs: Vec<f64> = (0..points).map(|i| b + (a - b) * i as f64 / (points - 1) as f64).collect();
            let rho: Vec<f64> = xs.iter().map(|&x| c.density(x)).collect();
            let rows: Vec<Vec<String>> = xs.iter().zip(&rho).map(|(x, r)| vec![f(*x), f(*r)]).collect();
            Emitted {
                params: json!({"potential": vj, "points": points}),
                seed: None,
                format: want.unwrap_or(Format::Csv),
                csv: Some(output::csv(&["x", "rho"], &rows)),
                json: Some(json!({"a": a, "b": b, "x": xs, "rho": rho})),
            }
        }
        Cmd::Spacing { beta, size, draws, bulk, bins, s_max } => {
            let spec = EnsembleSpec::new(beta, size).map_err(|e| usage("--beta/--size", e))?;
            if !(bulk > 0.0 && bulk <= 1.0) {
                return Err(usage("--bulk", "must lie in (0, 1]"));
            }
            let sp = pooled_spacings(spec, seed, draws, bulk).map_err(|e| usage("--size/--bulk", e))?;
            let h = histogram(&sp, bins, 0.0, s_max).map_err(|e| usage("--bins/--s-max", e))?;
            let exact = if beta == 2 {
                let grid: Vec<f64> = (0..=((s_max / 0.025).ceil() as usize + 1)).map(|i| i as f64 * 0.025).collect();
                let curve = spacing_distribution(&grid, 48).map_err(|e| Failure::Other(anyhow!(e)))?;
                let p = curve.p.clone().unwrap();
                Some(h.centers.iter().map(|&s| curve.interpolate(&p, s)).collect::<Vec<f64>>())
            } else {
                None
            };
            let wig: Vec<f64> = h.centers.iter().map(|&s| wigner_surmise(beta, s).unwrap()).collect();
            let mut cols = vec!["s", "empirical", "wigner"];
            if exact.is_some() {
                cols.push("exact");
            }
            let rows: Vec<Vec<String>> = (0..h.centers.len())
                .map(|i| {
                    let mut r = vec![f(h.centers[i]), f(h.densities[i]), f(wig[i])];
                    if let Some(e) = &exact {
                        r.push(f(e[i]));
                    }
                    r
                })
                .collect();
            Emitted {
                params: json!({"beta": beta, "size": size, "draws": draws, "bulk": bulk, "bins": bins, "s_max": s_max}),
                seed: Some(seed),
                format: want.unwrap_or(Format::Csv),
                csv: Some(output::csv(&cols, &rows)),
                json: Some(json!({"count": sp.len(), "s": h.centers, "empirical": h.densities, "wigner": wig, "exact": exact})),
            }
        }
        Cmd::Ortho { pot, depth, scaled_n } => {
            let (v, vj) = load_potential(&pot)?;
            if depth == 0 {
                return Err(usage("--depth", "must be at least 1"));
            }
            let w = match scaled_n {
                Some(n) => scaled_potential(&v, n).map_err(|e| usage("--scaled-n", e))?,
                None => v,
            };
            let tab = recurrence(&w, depth).map_err(|e| usage("--potential/--coeffs", e))?;
            let gamma: Vec<f64> = (0..depth).map(|k| tab.gamma_f64(k)).collect();
            let s: Vec<f64> = (0..depth).map(|k| tab.s_f64(k)).collect();
            let h: Vec<f64> = (0..depth).map(|k| tab.h_f64(k)).collect();
            let zn: Vec<f64> = (1..=depth).map(|n| tab.partition_function(n).map(|z| z.to_f64())).collect::<Result<_, _>>().map_err(|e| Failure::Other(anyhow!(e)))?;
            let rows: Vec<Vec<String>> = (0..depth).map(|k| vec![k.to_string(), f(gamma[k]), f(s[k]), f(h[k]), f(zn[k])]).collect();
            Emitted {
                params: json!({"potential": vj, "depth": depth, "scaled_n": scaled_n}),
                seed: None,
                format: want.unwrap_or(Format::Json),
                csv: Some(output::csv(&["k", "gamma", "S", "h", "Z_(k+1)"], &rows)),
                json: Some(json!({"gamma": gamma, "S": s, "h": h, "ZN": zn})),
            }
        }
        Cmd::Gap { s_max, points, m } => {
            if !(s_max > 0.0) {
                return Err(usage("--s-max", "must be positive"));
            }
            if points < 5 {
                return Err(usage("--points", "need at least 5"));
            }
            let grid: Vec<f64> = (0..points).map(|i| s_max * i as f64 / (points - 1) as f64).collect();
            let c = spacing_distribution(&grid, m).map_err(|e| usage("--m", e))?;
            let p = c.p.clone().unwrap();
            let rows: Vec<Vec<String>> = (0..points).map(|i| vec![f(grid[i]), f(c.e[i]), f(p[i])]).collect();
            Emitted {
                params: json!({"s_max": s_max, "points": points, "m": m}),
                seed: None,
                format: want.unwrap_or(Format::Csv),
                csv: Some(output::csv(&["s", "E", "P"], &rows)),
                json: Some(json!({"s": grid, "E": c.e, "P": p})),
            }
        }
        Cmd::Tw { s_min, s_max, points, m } => {
            if !(s_max > s_min) || points < 2 {
                return Err(usage("--s-min/--s-max/--points", "need s_min < s_max and at least 2 points"));
            }
            let grid: Vec<f64> = (0..points).map(|i| s_min + (s_max - s_min) * i as f64 / (points - 1) as f64).collect();
            let f2: Vec<f64> = grid.iter().map(|&s| tracy_widom_beta2_with(s, m)).collect::<Result<_, _>>().map_err(|e| usage("--s-min", e))?;
            let rows: Vec<Vec<String>> = grid.iter().zip(&f2).map(|(s, v)| vec![f(*s), f(*v)]).collect();
            Emitted {
                params: json!({"s_min": s_min, "s_max": s_max, "points": points, "m": m}),
                seed: None,
                format: want.unwrap_or(Format::Csv),
                csv: Some(output::csv(&["s", "F2"], &rows)),
                json: Some(json!({"s": grid, "F2": f2})),
            }
        }
        Cmd::Maps { mu, t_order } => {
            let mu: Vec<usize> = parse_list("--mu", &mu)?;
            let table = connected_correlator_coeffs(&mu, t_order).map_err(|e| usage("--mu/--t-order", e))?;
            let entries: Vec<Value> = table
                .iter()
                .map(|((g, q), c)| {
                    let r = rational_json(c);
                    json!({"g": g, "q": q, "coeff_num": r["num"], "coeff_den": r["den"], "coeff": r})
                })
                .collect();
            let rows: Vec<Vec<String>> = table.iter().map(|((g, q), c)| vec![g.to_string(), q.to_string(), c.numer().to_string(), c.denom().to_string()]).collect();
            Emitted {
                params: json!({"mu": mu, "t_order": t_order}),
                seed: None,
                format: want.unwrap_or(Format::Json),
                csv: Some(output::csv(&["g", "q", "num", "den"], &rows)),
                json: Some(json!({"mu": mu, "table": entries})),
            }
        }
        Cmd::Toprec { g, n, t_order, mu_max } => {
            let curve = SpectralCurve::from_potential(&Potential::formal_quartic(t_order)).map_err(|e| usage("--t-order", e))?;
            let mut tr = TopRec::new(curve).map_err(|e| Failure::Other(anyhow!(e)))?;
            let mut entries = vec![];
            let mut rows = vec![];
            let push = |mu: Vec<usize>, c: &rmtk_core::model::FormalScalar, entries: &mut Vec<Value>, rows: &mut Vec<Vec<String>>| {
                for q in 0..=t_order {
                    let r: Rational = c.coeff(q);
                    let rj = rational_json(&r);
                    entries.push(json!({"g": g, "n": n, "mu": mu, "q": q, "num": rj["num"], "den": rj["den"]}));
                    let m: Vec<String> = mu.iter().map(|x| x.to_string()).collect();
                    rows.push(vec![g.to_string(), n.to_string(), m.join(" "), q.to_string(), r.numer().to_string(), r.denom().to_string()]);
                }
            };
            if n == 0 {
                let fg = tr.free_energy(g).map_err(|e| usage("--g/--n", e))?;
                push(vec![], &fg, &mut entries, &mut rows);
            } else {
                if mu_max == 0 {
                    return Err(usage("--mu-max", "must be at least 1"));
                }
                // nondecreasing μ tuples
                let mut mu = vec![1usize; n];
                loop {
                    let c = tr.w_coefficient(g, &mu).map_err(|e| usage("--g/--n", e))?;
                    push(mu.clone(), &c, &mut entries, &mut rows);
                    let Some(i) = (0..n).rev().find(|&i| mu[i] < mu_max) else { break };
                    let v = mu[i] + 1;
                    for x in mu.iter_mut().skip(i) {
                        *x = v;
                    }
                }
            }
            Emitted {
                params: json!({"g": g, "n": n, "t_order": t_order, "mu_max": mu_max}),
                seed: None,
                format: want.unwrap_or(Format::Json),
                csv: Some(output::csv(&["g", "n", "mu", "q", "num", "den"], &rows)),
                json: Some(json!({"g": g, "n": n, "t_order": t_order, "coefficients": entries})),
            }
        }
        Cmd::Angular { x, y, mc_samples } => {
            let xs: Vec<f64> = parse_list("--X", &x)?;
            let ys: Vec<f64> = parse_list("--Y", &y)?;
            let p = AngularProblem::new(xs.clone(), ys.clone()).map_err(|e| usage("--X/--Y", e))?;
            let z = hc_integral(&p).map_err(|e| usage("--X/--Y", e))?;
            let m = morozov_moments(&p).map_err(|e| usage("--X/--Y", e))?;
            let mc = if mc_samples > 0 { Some(mc_angular(&p, mc_samples, seed).map_err(|e| usage("--mc-samples", e))?) } else { None };
            let mut rows = vec![vec!["Z_formula".into(), String::new(), f(z)]];
            if let Some(mc) = &mc {
                rows.push(vec!["Z_mc".into(), String::new(), f(mc.estimate)]);
                rows.push(vec!["stderr".into(), String::new(), f(mc.stderr)]);
            }
            for (i, r) in m.iter().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    rows.push(vec!["morozov".into(), format!("{} {}", i, j), f(*v)]);
                }
            }
            Emitted {
                params: json!({"X": xs, "Y": ys, "mc_samples": mc_samples}),
                seed: Some(seed),
                format: want.unwrap_or(Format::Json),
                csv: Some(output::csv(&["quantity", "index", "value"], &rows)),
                json: Some(json!({"Z_formula": z, "Z_mc": mc.as_ref().map(|m| m.estimate), "stderr": mc.as_ref().map(|m| m.stderr), "morozov": m})),
            }
        }
        Cmd::Selftest => {
            let outcomes = criteria::fast_suite();
            let mut failed = 0;
            for o in &outcomes {
                println!("{}", o.line());
                for d in &o.details {
                    println!("      {d}");
                }
                if !o.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Failure::Other(anyhow!("{failed} selftest criteria failed")));
            }
            return Ok(None);
        }
    };
    Ok(Some(e))
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Sample { .. } => "sample",
        Cmd::Density { .. } => "density",
        Cmd::Spacing { .. } => "spacing",
        Cmd::Ortho { .. } => "ortho",
        Cmd::Gap { .. } => "gap",
        Cmd::Tw { .. } => "tw",
        Cmd::Maps { .. } => "maps",
        Cmd::Toprec { .. } => "toprec",
        Cmd::Angular { .. } => "angular",
        Cmd::Selftest => "selftest",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = subcommand_name(&cli.cmd);
    let out = cli.out.clone();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) => {
            let mut params = e.params;
            params["format"] = json!(e.format.name());
            let mut text = output::header(name, &params, e.seed);
            match e.format {
                Format::Csv => text.push_str(e.csv.as_deref().unwrap_or("")),
                Format::Json => {
                    text.push_str(&serde_json::to_string_pretty(e.json.as_ref().unwrap_or(&Value::Null)).unwrap());
                    text.push('\n');
                }
            }
            match output::write(out.as_deref(), &text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(err) => {
                    eprintln!("error: cannot write output{}: {err}", out.map(|p| format!(" {}", p.display())).unwrap_or_default());
                    ExitCode::from(3)
                }
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
