#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::thread::JoinHandle;

use qgate_core::bridge::{WireCandidate, WireRequest, WireResponse};
use qgate_core::corpus::{load_dataset, CategorySchema, Dataset, Format, Language, Split};
use qgate_core::{EmbedBackend, FillBackend, LabelVector, LabeledComment};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// 240 Pharo-style class comments with the six Pharo categories.
pub fn pharo_toy() -> Dataset {
    load_dataset(
        &fixture("pharo_toy.csv"),
        Format::Csv,
        &CategorySchema::challenge(Language::Pharo),
        Split::Train,
    )
    .expect("fixture loads")
}

pub fn first_n(d: &Dataset, n: usize) -> Dataset {
    Dataset::new(d.schema.clone(), d.items[..n].to_vec(), d.split).unwrap()
}

const WORDS: &[&str] = &[
    "returns",
    "the",
    "value",
    "of",
    "this",
    "method",
    "is",
    "cached",
    "list",
    "when",
    "called",
    "with",
    "a",
    "null",
    "argument",
    "throws",
    "error",
    "see",
    "also",
    "deprecated",
    "use",
    "instead",
    "parameter",
    "index",
    "must",
    "be",
    "positive",
    "todo",
    "fix",
    "later",
    "thread",
    "safe",
    "not",
    "for",
    "internal",
    "only",
    "author",
    "copy",
    "buffer",
    "size",
    ".",
    ",",
    "(",
    ")",
];

/// Random comment-like corpus of `n` sentences with 1..=max_tokens tokens
/// and random non-empty Java label vectors.
pub fn random_corpus(n: usize, max_tokens: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = CategorySchema::challenge(Language::Java);
    let items = (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=max_tokens);
            let text = (0..len)
                .map(|_| *WORDS.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ");
            let mut bits: Vec<bool> = (0..schema.width()).map(|_| rng.gen_bool(0.2)).collect();
            if !bits.iter().any(|&b| b) {
                bits[rng.gen_range(0..schema.width())] = true;
            }
            LabeledComment {
                id: format!("r{i:04}"),
                language: Language::Java,
                text,
                labels: LabelVector::new(bits),
            }
        })
        .collect();
    Dataset::new(schema, items, Split::Train).unwrap()
}

/// Serves the wire protocol over TCP on an ephemeral port, answering with
/// the given in-process backends. Handles `connections` connections, one
/// after the other, then exits.
pub fn spawn_server<F, E>(fill: F, embed: E, connections: usize) -> (String, JoinHandle<()>)
where
    F: FillBackend + 'static,
    E: EmbedBackend + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = std::thread::spawn(move || {
        for stream in listener.incoming().take(connections) {
            let stream = stream.unwrap();
            let mut writer = stream.try_clone().unwrap();
            for line in BufReader::new(stream).lines() {
                let Ok(line) = line else { break };
                let response = match serde_json::from_str::<WireRequest>(&line) {
                    Err(e) => WireResponse::Error {
                        error: format!("malformed request: {e}"),
                    },
                    Ok(WireRequest::Fill {
                        tokens,
                        masked_positions,
                        k,
                    }) => match fill.fill(&tokens, &masked_positions, k) {
                        Ok(lists) => WireResponse::Candidates {
                            candidates: lists
                                .into_iter()
                                .map(|l| {
                                    l.into_iter()
                                        .map(|c| WireCandidate {
                                            token: c.token,
                                            score: c.score,
                                        })
                                        .collect()
                                })
                                .collect(),
                        },
                        Err(e) => WireResponse::Error {
                            error: e.to_string(),
                        },
                    },
                    Ok(WireRequest::Embed { texts }) => {
                        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
                        match embed.embed(&refs) {
                            Ok(vectors) => WireResponse::Vectors { vectors },
                            Err(e) => WireResponse::Error {
                                error: e.to_string(),
                            },
                        }
                    }
                };
                let mut out = serde_json::to_string(&response).unwrap();
                out.push('\n');
                if writer.write_all(out.as_bytes()).is_err() {
                    break;
                }
            }
        }
    });
    (addr, handle)
}
