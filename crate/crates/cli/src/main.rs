use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use dcxg_core::{interpret_batch, load_grammar_path, ActivationParams, VectorStore};
use serde_json::{json, Value};

/// Interpret sentences with a distributional construction grammar.
#[derive(Parser, Debug)]
#[command(name = "dcxg", version)]
struct Args {
    /// Grammar file (JSON).
    #[arg(long)]
    grammar: PathBuf,
    /// Word vector file (`word v1 .. vn` per line, optional `count dim` header).
    #[arg(long)]
    vectors: PathBuf,
    /// Activation parameters (JSON object; missing keys keep their defaults).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Print the processing trace instead of the summary.
    #[arg(long)]
    trace: bool,
    /// Print one JSON document with every interpretation.
    #[arg(long)]
    structured: bool,
    /// Recognition threshold for the direct route.
    #[arg(long)]
    threshold: Option<f64>,
    /// Cosine threshold for loose unification and vector cues.
    #[arg(long)]
    sim_threshold: Option<f64>,
    /// Maximal associative strength.
    #[arg(long)]
    mas: Option<f64>,
    /// Accepted for compatibility; processing is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Read sentences from a file, one per line (`-` for stdin).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Worker threads for sentence-parallel processing.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Sentences to interpret; read from stdin when none are given.
    sentences: Vec<String>,
}

fn read_lines(r: impl BufRead) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if !line.is_empty() && !line.starts_with('#') {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

fn params(args: &Args) -> Result<ActivationParams> {
    let mut p = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{}: invalid parameters", path.display()))?
        }
        None => ActivationParams::default(),
    };
    if let Some(t) = args.threshold {
        p.recognition_threshold = t;
    }
    if let Some(s) = args.sim_threshold {
        p.sim_threshold = s;
    }
    if let Some(m) = args.mas {
        p.mas = m;
    }
    p.validate().context("invalid parameters")?;
    Ok(p)
}

fn run(args: Args) -> Result<()> {
    let p = params(&args)?;
    let grammar =
        load_grammar_path(&args.grammar).with_context(|| format!("{}: cannot load grammar", args.grammar.display()))?;
    let vectors = VectorStore::load_path(&args.vectors)
        .with_context(|| format!("{}: cannot load vectors", args.vectors.display()))?;
    grammar.check_vocabulary(&vectors).with_context(|| {
        format!("{}: grammar refers to words missing from {}", args.grammar.display(), args.vectors.display())
    })?;

    let sentences = match &args.file {
        Some(path) if path.as_os_str() == "-" => read_lines(io::stdin().lock())?,
        Some(path) => {
            let f = std::fs::File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
            read_lines(io::BufReader::new(f))?
        }
        None if !args.sentences.is_empty() => args.sentences.clone(),
        None => read_lines(io::stdin().lock())?,
    };
    if sentences.is_empty() {
        bail!("no sentences to interpret");
    }

    let results = interpret_batch(&sentences, &grammar, &vectors, &p, args.threads)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.structured {
        let docs: Vec<Value> = sentences
            .iter()
            .zip(&results)
            .map(|(s, r)| match r {
                Ok(i) => i.to_json(),
                Err(e) => json!({ "sentence": s, "error": e.to_string() }),
            })
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "params": p, "interpretations": docs }))?)?;
        return Ok(());
    }
    for (s, r) in sentences.iter().zip(&results) {
        match r {
            Err(e) => writeln!(out, "sentence: {s}\nerror: {e}\n")?,
            Ok(i) if args.trace => writeln!(out, "# {}\n{}", i.tokens.join(" "), i.trace.to_lines())?,
            Ok(i) => writeln!(out, "{}", i.summary())?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
