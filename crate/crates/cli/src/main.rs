mod args;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use hypernull_core::depth::{depth, optimize_gamma_for_depth, DepthOptions, LambdaPolicy};
use hypernull_core::figures::{generate, FigureOptions, OPTIMAL_GAMMA_BRACKET, PHASE_GAMMA_BRACKET, TOOL_VERSION};
use hypernull_core::selfcheck::{self, SelfcheckConfig};
use hypernull_core::sweep::{evaluate_quantity, sweep, Quantity, SweepGrid, SweepOptions};
use hypernull_core::{sampled_variance, variance, Cell, Error, Format, Scenario, ScenarioSpec, Table};

use args::{Cli, Command, DepthArgs, EvalArgs, FigureArgs, OutputArgs, ScenarioArgs, SelfcheckArgs, StateArg, SweepArgs};

enum Failure {
    /// Exit 1.
    ChecksFailed,
    /// Exit 2.
    Invalid(String),
    /// Exit 3.
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => {
                let flag = match name {
                    "range" => "--min/--max".to_owned(),
                    "figure" => "<name>".to_owned(),
                    other => format!("--{other}"),
                };
                Failure::Invalid(format!("invalid value for {flag}: {reason}"))
            }
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn scenario(a: &ScenarioArgs) -> Result<Scenario, Error> {
    let lambda = a.lambda.unwrap_or(a.gamma);
    a.squeeze.validate()?;
    let s = match a.state {
        StateArg::Hypergraph => Scenario::Hypergraph(
            ScenarioSpec::homogeneous(a.k, a.gamma, lambda, a.squeeze.r(), a.noise)
                .with_n0(a.n0)
                .with_index(a.index),
        ),
        StateArg::Phase => {
            if a.n0 != 0.0 {
                return Err(Error::InvalidParameter { name: "n0", reason: "phase states have no initial occupation".into() });
            }
            if a.index != 1 {
                return Err(Error::InvalidParameter { name: "index", reason: "phase states have a single nullifier".into() });
            }
            Scenario::phase(a.k, a.gamma, lambda, a.squeeze, a.noise)
        }
    };
    s.validate()?;
    Ok(s)
}

fn scenario_meta(t: &mut Table, a: &ScenarioArgs, s: &Scenario) {
    t.push_meta("state", if a.state == StateArg::Phase { "phase" } else { "hypergraph" });
    t.push_meta("k", a.k);
    t.push_meta("gamma", a.gamma);
    t.push_meta("lambda", s.lambda());
    t.push_meta("squeeze", a.squeeze);
    t.push_meta("r", a.squeeze.r());
    t.push_meta("noise", a.noise);
    t.push_meta("n0", a.n0);
    t.push_meta("index", a.index);
}

fn lambda_policy_str(p: LambdaPolicy) -> String {
    match p {
        LambdaPolicy::FixedAtGamma => "fixed-at-gamma".into(),
        LambdaPolicy::Optimized => "optimized".into(),
        LambdaPolicy::FixedValue(x) => x.to_string(),
    }
}

fn gamma_bracket(state: StateArg) -> (f64, f64) {
    match state {
        StateArg::Hypergraph => OPTIMAL_GAMMA_BRACKET,
        StateArg::Phase => PHASE_GAMMA_BRACKET,
    }
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(table: &Table, out: &OutputArgs) -> CmdResult {
    let mut w = open_output(out.output.as_deref())?;
    table.write(out.format.into(), &mut w)?;
    w.flush()?;
    Ok(())
}

fn header(command: &str, seed: u64) -> Table {
    Table::default().meta("tool", TOOL_VERSION).meta("command", command).meta("seed", seed)
}

fn with_columns(meta: Table, columns: &[&str]) -> Table {
    let mut t = Table::new(columns.iter().copied());
    t.metadata = meta.metadata;
    t
}

fn eval(a: &EvalArgs) -> CmdResult {
    let s = scenario(&a.scenario)?;
    let opts = DepthOptions { threshold: a.threshold.into(), ..DepthOptions::default() };
    let mut columns = vec!["variance", "method", "ground_thr", "squeezed_thr", "threshold", "margin", "class", "lambda_star", "var_min"];
    if a.samples.is_some() {
        columns.extend(["mc_variance", "mc_std_error"]);
    }
    let mut t = with_columns(header("eval", a.out.seed), &columns);
    scenario_meta(&mut t, &a.scenario, &s);
    let quantity = |q: Quantity| match evaluate_quantity(&s, q, &opts) {
        Err(Error::Unsupported(_)) => Ok(Cell::Null),
        other => other,
    };
    let mut row = vec![
        quantity(Quantity::Variance)?,
        variance(&s)?.method.as_str().into(),
        quantity(Quantity::GroundThreshold)?,
        quantity(Quantity::SqueezedThreshold)?,
        opts.threshold.as_str().into(),
        quantity(Quantity::Margin)?,
        quantity(Quantity::Classification)?,
        quantity(Quantity::LambdaStar)?,
        quantity(Quantity::MinVariance)?,
    ];
    if let Some(n) = a.samples {
        let mc = sampled_variance(&s, n, a.out.seed)?;
        t.push_meta("samples", n);
        row.extend([mc.value.into(), mc.std_error.into()]);
    }
    t.push(row);
    emit(&t, &a.out)
}

fn figure(a: &FigureArgs) -> CmdResult {
    let opts = FigureOptions {
        points: a.points,
        co_optimize_r: a.co_optimize_r,
        fig1_threshold: a.threshold.into(),
        kmax: a.kmax,
        seed: a.seed,
    };
    if opts.kmax < 3 {
        return Err(Failure::Invalid("invalid value for --kmax: need at least 3".into()));
    }
    if matches!(opts.points, Some(p) if p < 2) {
        return Err(Failure::Invalid("invalid value for --points: need at least 2".into()));
    }
    let tables = generate(a.name, a.panel.as_deref(), &opts)?;
    std::fs::create_dir_all(&a.output)?;
    let format: Format = a.format.into();
    let ext = if format == Format::Json { "json" } else { "csv" };
    for (stem, table) in tables {
        let path = a.output.join(format!("{stem}.{ext}"));
        let mut w = open_output(Some(&path))?;
        table.write(format, &mut w)?;
        w.flush()?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run_sweep(a: &SweepArgs) -> CmdResult {
    let s = scenario(&a.scenario)?;
    let grid = SweepGrid::new(a.axis, a.min, a.max, a.points, a.scale.into())?;
    let opts = SweepOptions {
        tie_lambda_to_gamma: !a.keep_lambda,
        depth: DepthOptions { lambda: a.lambda_policy, threshold: a.threshold.into(), lambda_bracket: None },
    };
    let body = sweep(&s, &grid, &a.outputs, &opts)?;
    let mut t = header("sweep", a.out.seed);
    scenario_meta(&mut t, &a.scenario, &s);
    t.push_meta("axis", a.axis);
    t.push_meta("min", a.min);
    t.push_meta("max", a.max);
    t.push_meta("points", a.points);
    t.push_meta("scale", if a.scale == args::ScaleArg::Log { "log" } else { "linear" });
    t.push_meta("lambda_tied_to_gamma", opts.tie_lambda_to_gamma);
    t.push_meta("lambda_policy", lambda_policy_str(a.lambda_policy));
    t.push_meta("threshold", opts.depth.threshold.as_str());
    t.metadata.extend(body.metadata);
    t.columns = body.columns;
    t.rows = body.rows;
    emit(&t, &a.out)
}

fn run_depth(a: &DepthArgs) -> CmdResult {
    let s = scenario(&a.scenario)?;
    let opts = DepthOptions { lambda: a.lambda_policy, threshold: a.threshold.into(), lambda_bracket: None };
    let kind = a.kind.into();
    let (gamma, d, plateau) = if a.optimize_gamma {
        let o = optimize_gamma_for_depth(&s, kind, gamma_bracket(a.scenario.state), &opts)?;
        (o.gamma, o.depth, Some(o.plateau))
    } else {
        (s.gamma(), depth(&s, kind, &opts)?, None)
    };
    let mut t = with_columns(
        header("depth", a.out.seed),
        &[
            "gamma",
            "kind",
            "critical_value",
            "loss_fraction",
            "never_fails",
            "margin_at_critical",
            "lambda_at_critical",
            "lambda_policy",
            "threshold",
            "plateau",
        ],
    );
    scenario_meta(&mut t, &a.scenario, &s);
    if a.optimize_gamma {
        let (lo, hi) = gamma_bracket(a.scenario.state);
        t.push_meta("gamma_bracket", format!("[{lo}, {hi}]"));
    }
    t.push(vec![
        gamma.into(),
        d.noise_kind.as_str().into(),
        d.critical_value.into(),
        d.loss_fraction().into(),
        Cell::Int(d.never_fails as i64),
        d.margin_at_critical.into(),
        d.lambda_at_critical.into(),
        lambda_policy_str(d.lambda_policy).as_str().into(),
        d.threshold_policy.as_str().into(),
        plateau.map(|p| Cell::Int(p as i64)).into(),
    ]);
    emit(&t, &a.out)
}

fn run_selfcheck(a: &SelfcheckArgs) -> CmdResult {
    let mut cfg = if a.quick { SelfcheckConfig::quick(a.seed) } else { SelfcheckConfig::full(a.seed) };
    if let Some(n) = a.samples {
        if n < 1000 {
            return Err(Failure::Invalid("invalid value for --samples: need at least 1000".into()));
        }
        cfg.mc_samples = n;
    }
    let report = selfcheck::run(&cfg);
    let mut w = open_output(a.output.as_deref())?;
    writeln!(w, "# {TOOL_VERSION} selfcheck seed={} quick={} samples={}", a.seed, a.quick, cfg.mc_samples)?;
    w.write_all(report.render().as_bytes())?;
    w.flush()?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Invalid("invalid value for --jobs: need at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Domain(e.to_string()))?;
    }
    match &cli.command {
        Command::Eval(a) => eval(a),
        Command::Figure(a) => figure(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Depth(a) => run_depth(a),
        Command::Selfcheck(a) => run_selfcheck(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cmd = Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true));
    let argv = match config::merge(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let matches = cmd.get_matches_from(argv);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed) => ExitCode::from(1),
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
