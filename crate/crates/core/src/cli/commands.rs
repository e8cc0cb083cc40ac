use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{CliConfig, CliError, EvalArgs, GenArgs, Mode, ReportArgs, ScoreArgs, TrainArgs};
use crate::corpus::{generate_synthetic, parse_column_file, write_column_file, Dataset, SynthConfig};
use crate::curriculum::{run_baseline, run_tcl, RunLog};
use crate::difficulty::{score_dataset, MetricConfig};
use crate::eval::evaluate_tagger;
use crate::tagger::{load_checkpoint, save_checkpoint, Checkpoint, TaggerConfig, TaggerParams};
use crate::Error;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Run(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Formats like C's `%.{digits}g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (digits as i32 - 1 - exp) as usize, v))
    }
}

/// Creates `parent/prefix-<unix-ms>[-n]`, never reusing an existing directory.
fn fresh_dir(parent: &Path, prefix: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    for n in 0.. {
        let name = if n == 0 {
            format!("{prefix}-{stamp}")
        } else {
            format!("{prefix}-{stamp}-{n}")
        };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    unreachable!()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON form of a synthetic corpus configuration.
pub fn config_hash(cfg: &SynthConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = CliConfig::load(&args.config)?;
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.data_seed.map_or_else(|| cfg.resolve_seed(None), Ok)?,
    };
    let synth = cfg.synth_config();
    synth.validate()?;
    let corpus = generate_synthetic(&synth, seed)?;

    let dir = match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            dir.clone()
        }
        None => fresh_dir(&cfg.out_dir(), "gen")?,
    };
    let splits = [("train", &corpus.train), ("dev", &corpus.dev), ("test", &corpus.test)];
    for (name, _) in &splits {
        let path = dir.join(format!("{name}.tsv"));
        if path.exists() {
            return Err(CliError::Usage(format!("refusing to overwrite {}", path.display())));
        }
    }
    let mut files = serde_json::Map::new();
    for (name, ds) in &splits {
        let file = format!("{name}.tsv");
        write_column_file(ds, dir.join(&file))?;
        files.insert(
            name.to_string(),
            json!({ "path": file, "sentences": ds.len(), "tokens": ds.token_count() }),
        );
    }
    let manifest = json!({
        "seed": seed,
        "config_hash": config_hash(&synth),
        "config": synth,
        "files": files,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    writeln!(out, "{}", dir.display()).map_err(io_err(&dir))?;
    Ok(())
}

fn load_corpus(cfg: &CliConfig, seed: u64) -> Result<(Dataset, Dataset), CliError> {
    match (&cfg.train, &cfg.dev) {
        (Some(train_path), Some(dev_path)) => {
            let scheme = cfg.scheme.unwrap_or(crate::corpus::Scheme::Bmes);
            let train = parse_column_file(train_path, scheme)?;
            let dev = parse_column_file(dev_path, scheme)?.conform_to(&train.label_set, &train.vocab)?;
            Ok((train, dev))
        }
        (None, None) => {
            let synth = cfg.synth_config();
            let corpus = generate_synthetic(&synth, cfg.data_seed.unwrap_or(seed))?;
            Ok((corpus.train, corpus.dev))
        }
        _ => Err(CliError::Usage("config must set both `train` and `dev`, or neither".into())),
    }
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.mode == Mode::Baseline && args.metric.is_some() {
        return Err(CliError::Usage("--metric has no meaning with --mode baseline".into()));
    }
    let cfg = CliConfig::load(&args.config)?;
    let seed = cfg.resolve_seed(args.seed)?;
    let mut run = cfg.run_config().with_seed(seed);
    if let Some(kind) = args.metric {
        run.metric.kind = kind;
    }
    if let Some(v) = args.e0 {
        run.e0 = v;
    }
    if let Some(v) = args.es {
        run.es = v;
    }
    if let Some(v) = args.lambda0 {
        run.schedule.lambda0 = v;
    }
    if let Some(v) = args.e_grow {
        run.schedule.e_grow = v;
    }
    run.validate()?;

    let (train, dev) = load_corpus(&cfg, seed)?;
    let outcome = match args.mode {
        Mode::Tcl => run_tcl(&train, &dev, &run)?,
        Mode::Baseline => run_baseline(&train, &dev, &run)?,
    };

    let prefix = match args.mode {
        Mode::Tcl => format!("tcl-{}", run.metric.kind),
        Mode::Baseline => "baseline".to_string(),
    };
    let dir = fresh_dir(&args.out_dir.clone().unwrap_or_else(|| cfg.out_dir()), &prefix)?;
    let save = |params: &TaggerParams, name: &str| {
        save_checkpoint(params, &run.tagger, &train.label_set, &train.vocab, dir.join(name))
    };
    save(&outcome.student, "final.ckpt.json")?;
    save(&outcome.best, "best.ckpt.json")?;
    if let Some(teacher) = &outcome.teacher {
        save(teacher, "teacher.ckpt.json")?;
    }
    let log_path = dir.join("runlog.jsonl");
    fs::write(&log_path, outcome.log.to_jsonl()?).map_err(io_err(&log_path))?;
    write_json(&dir.join("run_config.json"), &run)?;
    writeln!(out, "{}", dir.display()).map_err(io_err(&dir))?;
    Ok(())
}

fn load_data_for(ckpt: &Checkpoint, path: &Path) -> Result<Dataset, CliError> {
    let ds = parse_column_file(path, ckpt.label_set.scheme())?;
    let ds = ds.conform_to(&ckpt.label_set, &ckpt.vocab)?;
    ckpt.ensure_compatible(&ds.label_set)?;
    Ok(ds)
}

pub fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let metric = MetricConfig {
        kind: args.metric,
        top_n: args.top_n,
        mc_passes: args.mc_passes,
        seed: CliConfig::default().resolve_seed(args.seed)?,
    };
    metric.validate()?;
    let (data, ckpt) = match &args.checkpoint {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            (load_data_for(&ckpt, &args.data)?, Some(ckpt))
        }
        None if metric.model_dependent() => {
            return Err(CliError::Usage(format!("the {} metric requires --checkpoint", metric.kind)));
        }
        None => (parse_column_file(&args.data, args.scheme)?, None),
    };
    let dropout = ckpt
        .as_ref()
        .map_or(TaggerConfig::default().dropout_rate, |c| c.config.dropout_rate);
    let instances = data.instances();
    let refs: Vec<_> = instances.iter().collect();
    let scores = score_dataset(ckpt.as_ref().map(|c| &c.params), &refs, &metric, dropout, 0)?;

    let mut csv = String::from("sentence_id,score,metric\n");
    for s in &scores {
        csv.push_str(&format!("{},{},{}\n", s.sentence_id, format_sig(s.score, 9), s.metric));
    }
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(io_err(path))?,
        None => out.write_all(csv.as_bytes()).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let data = load_data_for(&ckpt, &args.data)?;
    let report = evaluate_tagger(&ckpt.params, &data.instances(), &data.label_set)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    writeln!(out, "{text}").map_err(io_err(Path::new("<stdout>")))?;
    Ok(())
}

fn run_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    match path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
        Some(parent) if stem == "runlog" => parent.to_string(),
        _ => stem.to_string(),
    }
}

pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut runs = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for path in &args.logs {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let log = RunLog::from_jsonl(&text, path)?;
        let mut name = run_name(path);
        if names.contains(&name) {
            name = format!("{name}#{}", names.len());
        }
        names.push(name);
        runs.push(log.epochs().cloned().collect::<Vec<_>>());
    }

    let mut csv = String::from("epoch");
    for name in &names {
        csv.push_str(&format!(",{name}:dev_f1_cws,{name}:visits"));
    }
    csv.push('\n');
    let rows = runs.iter().map(Vec::len).max().unwrap_or(0);
    for row in 0..rows {
        csv.push_str(&row.to_string());
        for run in &runs {
            match run.get(row) {
                Some(r) => csv.push_str(&format!(
                    ",{},{}",
                    format_sig(r.dev_f1_cws, 9),
                    r.cumulative_sentence_visits
                )),
                None => csv.push_str(",,"),
            }
        }
        csv.push('\n');
    }
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(io_err(path))?,
        None => out.write_all(csv.as_bytes()).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(())
}
