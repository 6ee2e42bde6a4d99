//! Shared inputs for the criterion benchmarks.

use qgate_core::{CategorySchema, Dataset, LabelVector, LabeledComment, Language, Split};

const SUBJECTS: [&str; 8] = [
    "the parser",
    "this collection",
    "the window",
    "a socket",
    "the cache",
    "this stream",
    "the scheduler",
    "the registry",
];
const VERBS: [&str; 6] = [
    "returns",
    "stores",
    "updates",
    "closes",
    "validates",
    "resolves",
];
const OBJECTS: [&str; 7] = [
    "the current element",
    "all pending events",
    "the file handle",
    "its configuration",
    "the next token",
    "a cached value",
    "the list of observers",
];

/// A deterministic corpus of `n` short comments with the Java schema.
pub fn corpus(n: usize) -> Dataset {
    let schema = CategorySchema::challenge(Language::Java);
    let items = (0..n)
        .map(|i| {
            let text = format!(
                "{} {} {} when {} {} {} .",
                SUBJECTS[i % SUBJECTS.len()],
                VERBS[i % VERBS.len()],
                OBJECTS[i % OBJECTS.len()],
                SUBJECTS[(i / 3) % SUBJECTS.len()],
                VERBS[(i / 5) % VERBS.len()],
                OBJECTS[(i / 7) % OBJECTS.len()],
            );
            let mut bits = vec![false; schema.width()];
            bits[i % schema.width()] = true;
            LabeledComment {
                id: format!("c{i}"),
                language: Language::Java,
                text,
                labels: LabelVector::new(bits),
            }
        })
        .collect();
    Dataset::new(schema, items, Split::Train).expect("valid corpus")
}
