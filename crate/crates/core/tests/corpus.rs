use proptest::prelude::*;
use tcl::corpus::{
    bmes_to_word_spans, generate_synthetic, parse_column_file, parse_column_str, to_column_string, word_spans_to_bmes,
    write_column_file, Dataset, Scheme, SynthConfig, Word,
};

fn small_config(scheme: Scheme) -> SynthConfig {
    SynthConfig {
        scheme,
        vocab_a: 60,
        vocab_b: 60,
        chars_per_domain: 50,
        train_size: 200,
        dev_size: 40,
        test_size: 40,
        population: 300,
        ..SynthConfig::default()
    }
}

fn label_strings(ds: &Dataset) -> Vec<Vec<String>> {
    ds.sentences
        .iter()
        .map(|s| s.gold_labels.iter().map(|&l| ds.label_set.label(l).to_string()).collect())
        .collect()
}

fn tokens(ds: &Dataset) -> Vec<Vec<String>> {
    ds.sentences.iter().map(|s| s.tokens.clone()).collect()
}

#[test]
fn minimal_file_and_tab_requirement() {
    let ds = parse_column_str("阿\tB\n里\tE\n\n", Scheme::Bmes).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(tokens(&ds), [["阿", "里"]]);
    assert_eq!(label_strings(&ds), [["B", "E"]]);
    match parse_column_str("阿 B\n", Scheme::Bmes) {
        Err(tcl::Error::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn bmes_examples() {
    let (toks, labels) = word_spans_to_bmes(&[Word::new("我"), Word::new("喜欢")]).unwrap();
    assert_eq!(toks, ["我", "喜", "欢"]);
    assert_eq!(labels, ["S", "B", "E"]);
    let (_, labels) = word_spans_to_bmes(&[Word::tagged("我", "PN")]).unwrap();
    assert_eq!(labels, ["PN-S"]);
}

#[test]
fn generator_is_deterministic() {
    let cfg = small_config(Scheme::Bmes);
    let a = generate_synthetic(&cfg, 4).unwrap();
    let b = generate_synthetic(&cfg, 4).unwrap();
    assert_eq!(to_column_string(&a.train), to_column_string(&b.train));
    assert_eq!(to_column_string(&a.test), to_column_string(&b.test));
    let c = generate_synthetic(&cfg, 5).unwrap();
    assert_ne!(to_column_string(&a.train), to_column_string(&c.train));
}

#[test]
fn full_mix_ratio_uses_only_domain_a() {
    let cfg = SynthConfig {
        mix_ratio: 1.0,
        ..small_config(Scheme::Bmes)
    };
    let corpus = generate_synthetic(&cfg, 1).unwrap();
    let limit = 0x4E00 + cfg.chars_per_domain as u32;
    for ds in [&corpus.train, &corpus.dev, &corpus.test] {
        for s in &ds.sentences {
            for t in &s.tokens {
                let c = t.chars().next().unwrap() as u32;
                assert!((0x4E00..limit).contains(&c), "{t} is outside domain A");
            }
        }
    }
}

#[test]
fn oversized_split_is_rejected() {
    let cfg = SynthConfig {
        population: 100,
        ..small_config(Scheme::Bmes)
    };
    assert!(generate_synthetic(&cfg, 1).is_err());
}

#[test]
fn default_corpus_has_requested_sizes() {
    let corpus = generate_synthetic(&SynthConfig::default(), 1).unwrap();
    assert_eq!((corpus.train.len(), corpus.dev.len(), corpus.test.len()), (4000, 500, 500));
    assert_eq!(corpus.dev.vocab, corpus.train.vocab);
    corpus.train.validate().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_corpus_survives_write_and_parse(seed in any::<u64>(), joint in any::<bool>()) {
        let scheme = if joint { Scheme::Joint } else { Scheme::Bmes };
        let corpus = generate_synthetic(&small_config(scheme), seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for ds in [&corpus.train, &corpus.dev] {
            let path = dir.path().join("split.tsv");
            write_column_file(ds, &path).unwrap();
            let back = parse_column_file(&path, scheme).unwrap();
            prop_assert_eq!(tokens(&back), tokens(ds));
            prop_assert_eq!(label_strings(&back), label_strings(ds));
            let text = std::fs::read_to_string(&path).unwrap();
            prop_assert_eq!(to_column_string(&back), text);
        }
    }

    #[test]
    fn word_spans_round_trip(seed in any::<u64>(), joint in any::<bool>()) {
        let scheme = if joint { Scheme::Joint } else { Scheme::Bmes };
        let corpus = generate_synthetic(&small_config(scheme), seed).unwrap();
        for (toks, labels) in tokens(&corpus.train).iter().zip(label_strings(&corpus.train)) {
            let words = bmes_to_word_spans(toks, &labels).unwrap();
            let (t2, l2) = word_spans_to_bmes(&words).unwrap();
            prop_assert_eq!(&t2, toks);
            prop_assert_eq!(&l2, &labels);
        }
    }

    #[test]
    fn arbitrary_words_round_trip(words in prop::collection::vec(("[一-龥]{1,4}", prop::option::of("[A-Z]{1,3}")), 1..10)) {
        let all_tagged = words.iter().all(|(_, p)| p.is_some());
        let words: Vec<Word> = words
            .into_iter()
            .map(|(s, p)| match p {
                Some(p) if all_tagged => Word::tagged(s, p),
                _ => Word::new(s),
            })
            .collect();
        let (toks, labels) = word_spans_to_bmes(&words).unwrap();
        prop_assert_eq!(bmes_to_word_spans(&toks, &labels).unwrap(), words);
    }
}
