//! Command-line front end. Each subcommand reads and writes the plain-text
//! corpus formats of the library modules.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baseline::{segment_baseline, train_perceptron, PerceptronModel};
use crate::bpe::{
    learn_bpe, read_subword_corpus, word_frequencies, write_subword_corpus, BpeModel, CachedBpe,
};
use crate::config::Config;
use crate::corpus::{
    build_vocab, read_raw_corpus, read_segmented_corpus, read_word_set, word_set,
    write_segmented_corpus, write_word_set, SegmentedSentence,
};
use crate::evaluator::{evaluate, Metrics};
use crate::labeler::{read_label_corpus, write_label_corpus, LabeledSequence};
use crate::refiner::{label_corpus, Refiner};
use crate::synth::{corrupt_corpus, generate, SynthSpec};
use crate::tagger::{load_pretrained_embeddings, train_model, TaggerModel};

#[derive(Debug, Parser)]
#[command(
    name = "segrefine",
    version,
    about = "Word segmentation with a subword refiner"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, env = "SEGREFINE_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic gold corpus (train/dev/test) and optional noisy copies.
    SynthGen(SynthGenArgs),
    /// Train the perceptron baseline and write its dictionary.
    TrainBaseline(TrainBaselineArgs),
    /// Segment raw text with a trained baseline.
    SegmentBaseline(SegmentBaselineArgs),
    /// Learn BPE merges from a segmented corpus.
    LearnBpe(LearnBpeArgs),
    /// Split a segmented corpus into subword and feature files.
    ApplyBpe(ApplyBpeArgs),
    /// Build tagger training files from gold and baseline segmentations.
    MakeLabels(MakeLabelsArgs),
    /// Train the subword tagger.
    TrainRefiner(TrainRefinerArgs),
    /// Improve an existing segmentation.
    Refine(RefineArgs),
    /// Score a segmentation against gold.
    Evaluate(EvaluateArgs),
    /// Baseline, BPE, tagger and decoder on raw text.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct SynthGenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 5000)]
    train: usize,
    #[arg(long, default_value_t = 500)]
    dev: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_atoms_alphabet)]
    alphabet: usize,
    #[arg(long, default_value_t = SynthSpec::default().vocab_size)]
    vocab_size: usize,
    /// Weights of word lengths 1..=4 atoms, comma separated.
    #[arg(long, default_value = "0.6,0.3,0.07,0.03")]
    word_len_weights: String,
    #[arg(long, default_value_t = SynthSpec::default().zipf_exponent)]
    zipf: f64,
    /// `length:weight` pairs, comma separated.
    #[arg(long, default_value = "3:1,4:1,5:1,6:1,7:1,8:1,9:1,10:1")]
    sentence_lens: String,
    /// Character appended to every atom; without it each character is an atom.
    #[arg(long)]
    atom_delimiter: Option<char>,
    #[arg(long)]
    seed: u64,
    /// Also write `<split>.baseline.txt` with boundaries deleted at this rate.
    #[arg(long, requires = "p_split")]
    p_merge: Option<f64>,
    /// Rate of boundaries inserted inside words for the noisy copies.
    #[arg(long, requires = "p_merge")]
    p_split: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainBaselineArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SegmentBaselineArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LearnBpeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    merges: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ApplyBpeArgs {
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    features: PathBuf,
}

#[derive(Debug, Args)]
struct MakeLabelsArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    out_tokens: PathBuf,
    #[arg(long)]
    out_features: PathBuf,
    #[arg(long)]
    out_labels: PathBuf,
}

#[derive(Debug, Args)]
struct TrainRefinerArgs {
    #[arg(long)]
    tokens: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Gold segmentation of the development set.
    #[arg(long, requires = "dev_input")]
    dev_gold: Option<PathBuf>,
    /// First-stage segmentation of the development set.
    #[arg(long, requires = "dev_gold")]
    dev_input: Option<PathBuf>,
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    vocab_out: PathBuf,
    /// `token v1 … vd` text vectors used to initialize token embeddings.
    #[arg(long)]
    pretrained: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Training word list; gold words absent from it count as OOV.
    #[arg(long)]
    train_vocab: PathBuf,
    /// Append a tab-separated record line (counts, then rates).
    #[arg(long)]
    record: bool,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    baseline_model: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

type CliResult<T = ()> = std::result::Result<T, String>;

fn msg(e: crate::Error) -> String {
    e.to_string()
}

fn at(path: &Path, line: usize, e: impl std::fmt::Display) -> String {
    format!("{}:{line}: {e}", path.display())
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status: 0 on success, 1 on a data error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("segrefine: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    let config = match &cli.config {
        Some(p) => Config::load(p).map_err(msg)?,
        None => Config::default(),
    };
    match cli.command {
        Command::SynthGen(a) => synth_gen(a),
        Command::TrainBaseline(a) => train_baseline(&config, a),
        Command::SegmentBaseline(a) => segment_baseline_cmd(&config, a),
        Command::LearnBpe(a) => learn_bpe_cmd(&config, a),
        Command::ApplyBpe(a) => apply_bpe_cmd(a),
        Command::MakeLabels(a) => make_labels(a),
        Command::TrainRefiner(a) => train_refiner_cmd(&config, a),
        Command::Refine(a) => refine(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Pipeline(a) => pipeline(&config, a),
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| format!("--{flag}: cannot parse {v:?}"))
        })
        .collect()
}

fn synth_gen(a: SynthGenArgs) -> CliResult {
    let weights: Vec<f64> = parse_list("word-len-weights", &a.word_len_weights)?;
    let word_len_weights: [f64; 4] = weights
        .try_into()
        .map_err(|_| "--word-len-weights: expected four values".to_string())?;
    let sentence_len_weights = a
        .sentence_lens
        .split(',')
        .map(|p| {
            let (n, w) = p.split_once(':').ok_or(format!(
                "--sentence-lens: expected length:weight, got {p:?}"
            ))?;
            Ok((
                n.trim()
                    .parse()
                    .map_err(|_| format!("--sentence-lens: bad length {n:?}"))?,
                w.trim()
                    .parse()
                    .map_err(|_| format!("--sentence-lens: bad weight {w:?}"))?,
            ))
        })
        .collect::<CliResult<Vec<(usize, f64)>>>()?;
    let spec = SynthSpec {
        n_atoms_alphabet: a.alphabet,
        vocab_size: a.vocab_size,
        word_len_weights,
        zipf_exponent: a.zipf,
        sentence_len_weights,
        atom_delimiter: a.atom_delimiter,
        seed: a.seed,
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| format!("{}: {e}", a.out_dir.display()))?;
    let all = generate(&spec, a.train + a.dev + a.test).map_err(msg)?;
    let (train, rest) = all.split_at(a.train);
    let (dev, test) = rest.split_at(a.dev);
    let splits = [("train", train), ("dev", dev), ("test", test)];
    for (name, corpus) in splits {
        write_segmented_corpus(a.out_dir.join(format!("{name}.txt")), corpus).map_err(msg)?;
    }
    write_word_set(a.out_dir.join("train.vocab.txt"), &word_set(train)).map_err(msg)?;
    let config = Config {
        atomizer: crate::config::AtomizerSection {
            atom_delimiters: a.atom_delimiter.map(String::from).unwrap_or_default(),
            punctuation_atoms: String::new(),
            presegment_chars: String::new(),
        },
        ..Config::default()
    };
    fs::write(a.out_dir.join("config.toml"), config.to_toml())
        .map_err(|e| format!("{}: {e}", a.out_dir.display()))?;
    if let (Some(pm), Some(ps)) = (a.p_merge, a.p_split) {
        for (i, (name, corpus)) in splits.iter().enumerate() {
            let seed = a.seed.wrapping_add(1 + i as u64);
            let noisy = corrupt_corpus(corpus, &spec.atomizer(), pm, ps, seed).map_err(msg)?;
            write_segmented_corpus(a.out_dir.join(format!("{name}.baseline.txt")), &noisy)
                .map_err(msg)?;
        }
    }
    Ok(())
}

fn train_baseline(config: &Config, a: TrainBaselineArgs) -> CliResult {
    let gold = read_segmented_corpus(&a.train).map_err(msg)?;
    let cfg = config.baseline();
    let model = train_perceptron(&gold, &cfg, a.epochs.unwrap_or(cfg.epochs), a.seed)
        .map_err(|e| format!("{}: {e}", a.train.display()))?;
    model.save(&a.model).map_err(msg)?;
    write_word_set(&a.dict, &word_set(&gold)).map_err(msg)
}

fn baseline_segment_all(
    config: &Config,
    model: &Path,
    dict: &Path,
    input: &Path,
) -> CliResult<Vec<SegmentedSentence>> {
    let model = PerceptronModel::load(model).map_err(msg)?;
    let dict = read_word_set(dict).map_err(msg)?;
    let cfg = config.baseline();
    read_raw_corpus(input)
        .map_err(msg)?
        .iter()
        .enumerate()
        .map(|(i, raw)| {
            segment_baseline(&model, &dict, &cfg, raw.as_str()).map_err(|e| at(input, i + 1, e))
        })
        .collect()
}

fn segment_baseline_cmd(config: &Config, a: SegmentBaselineArgs) -> CliResult {
    let out = baseline_segment_all(config, &a.model, &a.dict, &a.input)?;
    write_segmented_corpus(&a.out, &out).map_err(msg)
}

fn learn_bpe_cmd(config: &Config, a: LearnBpeArgs) -> CliResult {
    let corpus = read_segmented_corpus(&a.input).map_err(msg)?;
    let model = learn_bpe(
        &word_frequencies(&corpus),
        a.merges.unwrap_or(config.bpe.merges),
    );
    model.save(&a.out).map_err(msg)
}

fn apply_bpe_cmd(a: ApplyBpeArgs) -> CliResult {
    let bpe = BpeModel::load(&a.bpe).map_err(msg)?;
    let corpus = read_segmented_corpus(&a.input).map_err(msg)?;
    let mut cache = CachedBpe::new(&bpe);
    let seqs: Vec<_> = corpus.iter().map(|s| cache.segment(s)).collect();
    write_subword_corpus(&a.out, &a.features, &seqs).map_err(msg)
}

fn make_labels(a: MakeLabelsArgs) -> CliResult {
    let bpe = BpeModel::load(&a.bpe).map_err(msg)?;
    let gold = read_segmented_corpus(&a.gold).map_err(msg)?;
    let base = read_segmented_corpus(&a.baseline).map_err(msg)?;
    check_parallel(&a.gold, &gold, &a.baseline, &base)?;
    let labeled = label_corpus(&bpe, &gold, &base).map_err(msg)?;
    let seqs: Vec<_> = labeled.iter().map(|l| l.tokens.clone()).collect();
    write_subword_corpus(&a.out_tokens, &a.out_features, &seqs).map_err(msg)?;
    write_label_corpus(&a.out_labels, &labeled).map_err(msg)
}

/// Line-level check that two corpora have the same sentences' text.
fn check_parallel(
    gold_path: &Path,
    gold: &[SegmentedSentence],
    other_path: &Path,
    other: &[SegmentedSentence],
) -> CliResult {
    if gold.len() != other.len() {
        return Err(format!(
            "{}: {} lines, but {} has {}",
            other_path.display(),
            other.len(),
            gold_path.display(),
            gold.len()
        ));
    }
    for (i, (g, o)) in gold.iter().zip(other).enumerate() {
        if g.text() != o.text() {
            return Err(at(
                other_path,
                i + 1,
                format!("text differs from {}", gold_path.display()),
            ));
        }
    }
    Ok(())
}

fn train_refiner_cmd(config: &Config, a: TrainRefinerArgs) -> CliResult {
    let mut cfg = config.tagger();
    if let Some(h) = a.hidden {
        cfg.hidden = h;
        cfg.token_emb = h / 2;
        cfg.feat_emb = h - h / 2;
    }
    if let Some(l) = a.layers {
        cfg.n_layers = l;
    }
    if let Some(b) = a.batch {
        cfg.batch = b;
    }
    if let Some(d) = a.dropout {
        cfg.dropout = d;
    }
    cfg.validate().map_err(msg)?;
    let epochs = a.epochs.unwrap_or(config.tagger.epochs);
    let vocab_size = a.vocab_size.unwrap_or(config.tagger.vocab_size);

    let seqs = read_subword_corpus(&a.tokens, &a.features).map_err(msg)?;
    let labels = read_label_corpus(&a.labels).map_err(msg)?;
    if seqs.len() != labels.len() {
        return Err(format!(
            "{}: {} lines, but {} has {}",
            a.labels.display(),
            labels.len(),
            a.tokens.display(),
            seqs.len()
        ));
    }
    let train_set = seqs
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (tokens, labels))| {
            if tokens.len() != labels.len() {
                return Err(at(
                    &a.labels,
                    i + 1,
                    format!("{} labels for {} tokens", labels.len(), tokens.len()),
                ));
            }
            Ok(LabeledSequence { tokens, labels })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let bpe = BpeModel::load(&a.bpe).map_err(msg)?;
    let (dev_gold, dev_seqs) = match (&a.dev_gold, &a.dev_input) {
        (Some(g), Some(i)) => {
            let gold = read_segmented_corpus(g).map_err(msg)?;
            let input = read_segmented_corpus(i).map_err(msg)?;
            check_parallel(g, &gold, i, &input)?;
            let mut cache = CachedBpe::new(&bpe);
            let seqs = input.iter().map(|s| cache.segment(s)).collect();
            (gold, seqs)
        }
        _ => (Vec::new(), Vec::new()),
    };

    let token_seqs: Vec<_> = train_set.iter().map(|l| l.tokens.clone()).collect();
    let vocab = build_vocab(&token_seqs, vocab_size);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(a.seed);
    let mut model = TaggerModel::new(cfg, vocab.len(), &mut rng).map_err(msg)?;
    if let Some(p) = &a.pretrained {
        let n = load_pretrained_embeddings(p, &vocab, &mut model)
            .map_err(|e| format!("{}: {e}", p.display()))?;
        println!("pretrained vectors matched: {n}/{}", vocab.len());
    }
    let outcome = train_model(
        model, &vocab, &train_set, &dev_gold, &dev_seqs, epochs, &mut rng,
    )
    .map_err(msg)?;
    let mut stdout = std::io::stdout().lock();
    for r in &outcome.log {
        let dev = r
            .val_f
            .map(|f| format!("{f:.4}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            stdout,
            "epoch {}\tloss {:.6}\tdev_f {dev}",
            r.epoch, r.train_loss
        );
    }
    let _ = writeln!(stdout, "best epoch {}", outcome.best_epoch);
    outcome.model.save(&a.model_out).map_err(msg)?;
    vocab.save(&a.vocab_out).map_err(msg)
}

fn refine_all(
    refiner: &Refiner,
    input_path: &Path,
    input: &[SegmentedSentence],
) -> CliResult<Vec<SegmentedSentence>> {
    let mut cache = CachedBpe::new(&refiner.bpe);
    input
        .iter()
        .enumerate()
        .map(|(i, s)| {
            refiner
                .refine_subwords(&cache.segment(s))
                .map_err(|e| at(input_path, i + 1, e))
        })
        .collect()
}

fn refine(a: RefineArgs) -> CliResult {
    let refiner = Refiner::load(&a.model, &a.vocab, &a.bpe).map_err(msg)?;
    let input = read_segmented_corpus(&a.input).map_err(msg)?;
    let out = refine_all(&refiner, &a.input, &input)?;
    write_segmented_corpus(&a.out, &out).map_err(msg)
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult {
    let gold = read_segmented_corpus(&a.gold).map_err(msg)?;
    let pred = read_segmented_corpus(&a.pred).map_err(msg)?;
    let vocab: BTreeSet<String> = read_word_set(&a.train_vocab).map_err(msg)?;
    check_parallel(&a.gold, &gold, &a.pred, &pred)?;
    let m: Metrics = evaluate(&gold, &pred, &vocab).map_err(msg)?;
    print!("{}", m.report());
    if a.record {
        println!("{}", m.record());
    }
    Ok(())
}

fn pipeline(config: &Config, a: PipelineArgs) -> CliResult {
    let first = baseline_segment_all(config, &a.baseline_model, &a.dict, &a.input)?;
    let refiner = Refiner::load(&a.model, &a.vocab, &a.bpe).map_err(msg)?;
    let out = refine_all(&refiner, &a.input, &first)?;
    write_segmented_corpus(&a.out, &out).map_err(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["segrefine", "evaluate", "--bogus"]), 2);
        assert_eq!(run(["segrefine", "no-such-command"]), 2);
        assert_eq!(
            run([
                "segrefine",
                "train-baseline",
                "--train",
                "x",
                "--model",
                "m",
                "--dict",
                "d"
            ]),
            2
        );
    }

    #[test]
    fn missing_file_exits_one() {
        let code = run([
            "segrefine",
            "evaluate",
            "--gold",
            "/nonexistent/g.txt",
            "--pred",
            "/nonexistent/p.txt",
            "--train-vocab",
            "/nonexistent/v.txt",
        ]);
        assert_eq!(code, 1);
    }
}
