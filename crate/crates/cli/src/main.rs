//! `tpp`: generate, solve, train and evaluate traveling purchaser instances.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use tpp::eval::{evaluate, read_reference_file, Strategy};
use tpp::instance::generate::generate_set;
use tpp::instance::{load_instance, write_instance, GeneratorSpec};
use tpp::nn::{Checkpoint, ParamStore};
use tpp::oracle::export_milp;
use tpp::policy::Policy;
use tpp::training::{fine_tune, meta_train, train, Distribution, MetaConfig, StepRecord, TrainConfig, Trainer};
use tpp::{Error, TppInstance};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "tpp", version, about = "Traveling purchaser problem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    U,
    R,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded set of synthetic instances.
    Generate {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        markets: usize,
        #[arg(long)]
        products: usize,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance and print the solution as JSON.
    Solve {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Decode the policy on all eight square symmetries.
        #[arg(long)]
        augment: bool,
    },
    /// Train a policy from scratch (TOML config).
    Train(TrainArgs),
    /// Meta-train a policy over several distributions (TOML config).
    MetaTrain(TrainArgs),
    /// Adapt a checkpoint to a distribution with a few updates.
    FineTune {
        #[arg(long)]
        model: PathBuf,
        /// `u:M:K` or `r:M:K:LAMBDA`
        #[arg(long)]
        dist: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a strategy over a directory of instances and write a report.
    Eval {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        opt_file: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV report; an aligned text table is written next to it.
        #[arg(long)]
        report: PathBuf,
    },
    /// Write the MILP model of an instance in LP format.
    ExportMilp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an instance file and list every violation.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Metric log (JSON lines); defaults to `<out>.log.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Invalid(_) | Error::Parse { .. } | Error::Structure(_) | Error::UnsupportedFormat(_) | Error::MalformedRoute(_) => EXIT_VALIDATION,
            Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) => EXIT_USAGE,
            Error::InfeasibleRoute { .. } | Error::UnknownOffer { .. } | Error::IllegalAction { .. } | Error::Contract(_) | Error::TooLarge { .. } => EXIT_SOLVER,
        };
        fail(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Generate { variant, markets, products, lambda, count, seed, out } => generate(variant, markets, products, lambda, count, seed, &out),
        Command::Solve { strategy, model, input, augment } => solve(&strategy, model.as_deref(), &input, augment),
        Command::Train(a) => run_train(&a),
        Command::MetaTrain(a) => run_meta(&a),
        Command::FineTune { model, dist, steps, out, batch_size, lr, seed } => run_fine_tune(&model, &dist, steps, &out, batch_size, lr, seed),
        Command::Eval { strategy, set, opt_file, model, report } => run_eval(&strategy, &set, opt_file.as_deref(), model.as_deref(), &report),
        Command::ExportMilp { input, out } => {
            let inst = read_valid(&input)?;
            let mut file = fs::File::create(&out).map_err(Error::from)?;
            let stats = export_milp(&inst, &mut file)?;
            eprintln!("wrote {} ({} variables, {} constraints)", out.display(), stats.variables(), stats.constraints);
            Ok(())
        }
        Command::Validate { input } => {
            let inst = load_instance(&input)?;
            let violations = inst.validate();
            if violations.is_empty() {
                println!("valid: {} markets, {} products, {} offers", inst.num_markets(), inst.num_products(), inst.offers().len());
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(fail(EXIT_VALIDATION, format!("{} violation(s)", violations.len())))
            }
        }
    }
}

fn read_valid(path: &Path) -> Result<TppInstance, Failure> {
    let inst = load_instance(path)?;
    inst.ensure_valid()?;
    Ok(inst)
}

fn io(e: std::io::Error) -> Failure {
    Error::from(e).into()
}

fn generate(variant: VariantArg, markets: usize, products: usize, lambda: Option<f64>, count: usize, seed: u64, out: &Path) -> Outcome {
    let spec = match variant {
        VariantArg::U => {
            if lambda.is_some() {
                return Err(fail(EXIT_USAGE, "--lambda only applies to --variant r"));
            }
            GeneratorSpec::unrestricted(markets, products, seed)
        }
        VariantArg::R => GeneratorSpec::restricted(markets, products, lambda.ok_or_else(|| fail(EXIT_USAGE, "--variant r needs --lambda"))?, seed),
    };
    let set = generate_set(&spec, count)?;
    fs::create_dir_all(out).map_err(io)?;
    let width = count.saturating_sub(1).to_string().len().max(4);
    for (j, inst) in set.iter().enumerate() {
        let path = out.join(format!("inst{j:0width$}.tpp"));
        let file = fs::File::create(&path).map_err(io)?;
        write_instance(inst, std::io::BufWriter::new(file))?;
    }
    eprintln!("wrote {count} instances to {}", out.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<(Policy, ParamStore, Checkpoint), Failure> {
    let ck = Checkpoint::load(path)?;
    let (policy, store) = Policy::from_checkpoint(&ck).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    Ok((policy, store, ck))
}

fn solve(name: &str, model: Option<&Path>, input: &Path, augment: bool) -> Outcome {
    let mut strategy: Strategy = name.parse()?;
    if let Strategy::Rl { augment: a, .. } = &mut strategy {
        *a = augment;
    } else if augment {
        return Err(fail(EXIT_USAGE, "--augment only applies to rl strategies"));
    }
    let inst = read_valid(input)?;
    let loaded = match (strategy.needs_model(), model) {
        (true, Some(p)) => Some(load_model(p)?),
        (true, None) => return Err(fail(EXIT_USAGE, format!("strategy {name} needs --model"))),
        (false, _) => None,
    };
    let sol = strategy.solve(&inst, loaded.as_ref().map(|(p, s, _)| (p, s)))?;
    sol.check(&inst)?;
    let plan: Vec<serde_json::Value> = sol.plan.iter().map(|((i, k), u)| serde_json::json!({"market": i, "product": k, "units": u})).collect();
    let out = serde_json::json!({
        "strategy": strategy.to_string(),
        "route": sol.route.nodes(),
        "purchases": plan,
        "travel_cost": sol.travel_cost,
        "purchase_cost": sol.purchase_cost,
        "objective": sol.objective,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(io)?;
    toml::from_str(&text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn metric_log(args: &TrainArgs) -> Result<(PathBuf, fs::File), Failure> {
    let path = args.log.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".log.jsonl");
        p.into()
    });
    let file = fs::File::create(&path).map_err(io)?;
    Ok((path, file))
}

fn log_writer(file: &mut fs::File) -> impl FnMut(&StepRecord) + '_ {
    move |r| {
        let _ = writeln!(file, "{}", serde_json::to_string(r).expect("json"));
        if let Some(x) = &r.refresh {
            eprintln!(
                "epoch {}: policy {:.1} baseline {:.1} p={:.3e}{}",
                r.epoch,
                x.eval_policy,
                x.eval_baseline,
                x.p_value,
                if x.refreshed { " (baseline refreshed)" } else { "" }
            );
        }
    }
}

fn save(trainer: &Trainer, config: serde_json::Value, out: &Path) -> Outcome {
    trainer.checkpoint(config).save(out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run_train(args: &TrainArgs) -> Outcome {
    let config: TrainConfig = read_config(&args.config)?;
    config.check()?;
    let mut trainer = Trainer::new(config.policy.clone(), config.lr, config.seed)?;
    let (_, mut file) = metric_log(args)?;
    train(&config, &mut trainer, log_writer(&mut file))?;
    save(&trainer, serde_json::json!({"train": config}), &args.out)
}

fn run_meta(args: &TrainArgs) -> Outcome {
    let config: MetaConfig = read_config(&args.config)?;
    config.check()?;
    let mut trainer = Trainer::new(config.policy.clone(), config.lr, config.seed)?;
    let (_, mut file) = metric_log(args)?;
    meta_train(&config, &mut trainer, log_writer(&mut file))?;
    save(&trainer, serde_json::json!({"meta_train": config}), &args.out)
}

fn run_fine_tune(model: &Path, dist: &str, steps: usize, out: &Path, batch_size: usize, lr: f64, seed: u64) -> Outcome {
    let dist: Distribution = dist.parse()?;
    let (policy, store, ck) = load_model(model)?;
    let tuned = fine_tune(&policy, &store, &dist, steps, batch_size, lr, seed)?;
    let mut state = ck.state.clone();
    if !state.is_object() {
        state = serde_json::json!({});
    }
    state["fine_tune"] = serde_json::json!({"from": model.display().to_string(), "dist": dist.to_string(), "steps": steps, "batch_size": batch_size, "lr": lr, "seed": seed});
    Checkpoint::capture(&tuned, policy.model_card(&tuned), state).save(out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run_eval(name: &str, set: &Path, opt_file: Option<&Path>, model: Option<&Path>, report: &Path) -> Outcome {
    let strategy: Strategy = name.parse()?;
    let mut files: Vec<PathBuf> = fs::read_dir(set)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(fail(EXIT_USAGE, format!("no instance files in {}", set.display())));
    }
    let mut instances = Vec::with_capacity(files.len());
    for f in &files {
        let name = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        instances.push((name, load_instance(f)?));
    }
    let references = match opt_file {
        Some(p) => {
            let refs = read_reference_file(std::io::BufReader::new(fs::File::open(p).map_err(io)?))?;
            Some(instances.iter().map(|(n, _)| refs.get(n).copied()).collect::<Vec<_>>())
        }
        None => None,
    };
    let loaded = match (strategy.needs_model(), model) {
        (true, Some(p)) => Some(load_model(p)?),
        (true, None) => return Err(fail(EXIT_USAGE, format!("strategy {name} needs --model"))),
        (false, _) => None,
    };
    let r = evaluate(strategy, &instances, references.as_deref(), loaded.as_ref().map(|(p, s, _)| (p, s)))?;
    fs::write(report, r.to_csv()).map_err(io)?;
    let text = report.with_extension("txt");
    fs::write(&text, r.to_text()).map_err(io)?;
    print!("{}", r.to_text());
    if r.failures() > 0 {
        eprintln!("warning: {} instance(s) failed; aggregates cover the rest", r.failures());
    }
    Ok(())
}
