use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use leaf::error::Error;
use leaf::harness::{self, config::KEYS, emit_report, Format, MetricReport, RunConfig};
use leaf::models::{self, Family, ModelSpec};
use leaf::{data, oracles};

const CONFIG_ERROR: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

fn with_config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .short('c')
            .value_name("FILE")
            .help("flat key = value configuration file; flags override it"),
    );
    KEYS.iter().fold(cmd, |cmd, &(key, help)| {
        cmd.arg(Arg::new(key).long(key).value_name("VALUE").help(help))
    })
}

fn cli() -> Command {
    Command::new("leaf")
        .about("Explain black-box tabular classifiers and score the explanations")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_config_args(
            Command::new("explain").about("Audit one decision: R explanations of one instance by each explainer"),
        ))
        .subcommand(
            with_config_args(Command::new("sweep").about("Sweep instances x models x explainers x K"))
                .mut_arg("seed", |a| a.required(true)),
        )
        .subcommand(
            Command::new("verify")
                .about("Cross-check the explainers and metrics against brute-force oracles")
                .arg(Arg::new("seed").long("seed").value_name("SEED").default_value("0"))
                .arg(
                    Arg::new("cases")
                        .long("cases")
                        .value_name("N")
                        .default_value("100")
                        .value_parser(clap::value_parser!(usize)),
                ),
        )
        .subcommand(with_config_args(
            Command::new("train").about("Train the model zoo and print train/test accuracy"),
        ))
        .subcommand(
            Command::new("keys").about("List configuration keys").arg(
                Arg::new("defaults")
                    .long("defaults")
                    .action(ArgAction::SetTrue)
                    .help("print the default configuration instead"),
            ),
        )
}

fn build_config(m: &ArgMatches, base: RunConfig) -> Result<RunConfig, Error> {
    let mut cfg = base;
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)
            .map_err(|e| Error::Config(format!("{path}: {e}")))?;
    }
    for &(key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).map_err(|e| Error::Config(format!("--{key}: {e}")))?;
        }
    }
    Ok(cfg)
}

fn write_outputs(cfg: &RunConfig, r: &MetricReport) -> Result<(), Error> {
    if let Some(p) = &cfg.output_json {
        emit_report(r, Format::Json, p)?;
        eprintln!("wrote {}", p.display());
    }
    if let Some(p) = &cfg.output_csv {
        emit_report(r, Format::Csv, p)?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn explain(m: &ArgMatches) -> Result<(), Error> {
    let cfg = build_config(m, RunConfig::default())?;
    cfg.validate()?;
    let d = data::resolve(&cfg.dataset)?;
    let x = harness::p1_instance(&cfg, &d)?;
    let r = harness::run_p1_on(&cfg, &d, &x)?;
    let names = &r.dataset.feature_names;
    let entry = &r.models[0];
    println!(
        "model {} (test accuracy {}), K = {}, R = {}",
        entry.family,
        fmt_opt(entry.test_accuracy),
        cfg.k[0],
        cfg.repetitions
    );
    for c in &r.cells {
        let g = c.first_explanation.as_ref().expect("strict runs have explanations");
        let s = c.summary.as_ref().expect("strict runs have summaries");
        println!("\n[{}] g(x) = {:.4}, intercept {:.4}", c.explainer, g.evaluate(&x), g.intercept);
        for &i in &g.selected {
            println!("  {:<24} {:>+12.5}", names[i], g.weight(i));
        }
        println!(
            "  fidelity {:.3}  concordance {:.3}  prescriptivity {}  reiteration {}",
            s.local_fidelity.mean,
            s.local_concordance.mean,
            fmt_opt(s.prescriptivity.as_ref().map(|p| p.mean)),
            fmt_opt(c.reiteration_similarity)
        );
    }
    write_outputs(&cfg, &r)
}

fn sweep(m: &ArgMatches) -> Result<(), Error> {
    let cfg = build_config(m, RunConfig::default())?;
    let r = harness::run_p2(&cfg)?;
    for e in &r.models {
        if let Some(err) = &e.error {
            eprintln!("warning: {err}");
        }
        if let Some(d) = &e.descriptor {
            for w in &d.warnings {
                eprintln!("warning: {}: {w}", e.family);
            }
        }
    }
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for c in r.summaries() {
        if let Some(s) = c.reiteration_similarity {
            groups
                .entry((c.model.to_string(), c.explainer.to_string(), c.k))
                .or_default()
                .push(s);
        }
    }
    eprintln!(
        "{} cells, {} failed, {:.1}s",
        r.cells.len(),
        r.failed_cells(),
        r.timing.wall_clock_seconds
    );
    for ((model, method, k), v) in &groups {
        eprintln!(
            "  {model:<4} {method:<5} K={k:<3} mean reiteration similarity {:.3}",
            v.iter().sum::<f64>() / v.len() as f64
        );
    }
    if cfg.output_json.is_none() && cfg.output_csv.is_none() {
        println!("{}", r.to_json()?);
    }
    write_outputs(&cfg, &r)?;
    if r.failed_cells() == r.cells.len() {
        return Err(Error::InvalidDataset("every cell failed".into()));
    }
    Ok(())
}

fn verify(m: &ArgMatches) -> Result<bool, Error> {
    let raw = m.get_one::<String>("seed").expect("defaulted");
    let seed = harness::config::parse_seed(raw).ok_or_else(|| Error::Config(format!("bad seed {raw:?}")))?;
    let cases = *m.get_one::<usize>("cases").expect("defaulted");
    let mut ok = true;
    for c in oracles::verify(seed, cases) {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(ok)
}

fn train(m: &ArgMatches) -> Result<(), Error> {
    let base = RunConfig {
        models: Family::ALL.to_vec(),
        ..Default::default()
    };
    let cfg = build_config(m, base)?;
    cfg.validate()?;
    let d = data::resolve(&cfg.dataset)?;
    let p = harness::prepare(&cfg, &d)?;
    println!(
        "{}: {} rows, {} features, {} train / {} test",
        Path::new(&cfg.dataset).display(),
        d.n_rows(),
        d.n_features(),
        p.train.n_rows(),
        p.test.n_rows()
    );
    println!("{:<6} {:>10} {:>10}", "model", "train", "test");
    for &family in &cfg.models {
        let spec = ModelSpec::new(family, harness::model_seed(cfg.seed, family));
        match models::train(&spec, &p.train) {
            Ok(model) => {
                println!(
                    "{:<6} {:>10.3} {:>10.3}",
                    family.name(),
                    model.descriptor().training_accuracy,
                    models::accuracy(&model, &p.test)
                );
                for w in &model.descriptor().warnings {
                    println!("       warning: {w}");
                }
            }
            Err(e) => println!("{:<6} failed: {e}", family.name()),
        }
    }
    Ok(())
}

fn keys(m: &ArgMatches) {
    if m.get_flag("defaults") {
        print!("{}", RunConfig::default().to_text());
        return;
    }
    for (k, help) in KEYS {
        println!("{k:<24} {help}");
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match matches.subcommand() {
        Some(("explain", m)) => explain(m),
        Some(("sweep", m)) => sweep(m),
        Some(("train", m)) => train(m),
        Some(("keys", m)) => {
            keys(m);
            Ok(())
        }
        Some(("verify", m)) => match verify(m) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(RUNTIME_FAILURE),
            Err(e) => Err(e),
        },
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { CONFIG_ERROR } else { RUNTIME_FAILURE })
        }
    }
}
