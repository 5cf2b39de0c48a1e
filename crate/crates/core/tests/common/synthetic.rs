//! Seeded synthetic legal-style French text.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SUBJECTS: [&str; 8] = [
    "la cour d'appel",
    "le juge",
    "l'arrêt attaqué",
    "la société exposante",
    "le salarié",
    "l'employeur",
    "le bailleur",
    "la partie civile",
];
const VERBS: [&str; 8] = [
    "a violé",
    "a méconnu",
    "a dénaturé",
    "a privé de base légale",
    "a fait une fausse application de",
    "n'a pas tiré les conséquences de",
    "a inversé la charge de la preuve au regard de",
    "a excédé ses pouvoirs au regard de",
];
const ARTICLES: [&str; 6] = ["l'article", "les articles", "l'alinéa 2 de l'article", "le principe posé par l'article", "l'article L.", "l'article R."];
const CODES: [&str; 6] = ["du code civil", "du code du travail", "du code de commerce", "du code de procédure civile", "du code pénal", "du code de la consommation"];
const CLAUSES: [&str; 8] = [
    "qu'en statuant ainsi",
    "qu'en se déterminant par de tels motifs",
    "que le juge ne peut dénaturer les documents de la cause",
    "que la charge de la preuve incombe au demandeur",
    "qu'en retenant le contraire",
    "que tout jugement doit être motivé",
    "qu'en omettant de répondre à ces conclusions",
    "que la cassation est encourue de ce chef",
];
const MONTHS: [&str; 12] = [
    "janvier", "février", "mars", "avril", "mai", "juin", "juillet", "août", "septembre", "octobre", "novembre", "décembre",
];
const CITIES: [&str; 6] = ["Paris", "Lyon", "Douai", "Rennes", "Aix-en-Provence", "Versailles"];

/// One "ALORS QUE" style sentence.
pub fn sentence(rng: &mut ChaCha8Rng) -> String {
    let number = rng.random_range(1..60) * 10 + rng.random_range(1..9);
    format!(
        "ALORS QUE {} de {}, par arrêt du {} {} {}, {} {} {number} {} ; {}, {} {} ;",
        SUBJECTS.choose(rng).unwrap(),
        CITIES.choose(rng).unwrap(),
        rng.random_range(1..29),
        MONTHS.choose(rng).unwrap(),
        rng.random_range(1990..2021),
        VERBS.choose(rng).unwrap(),
        ARTICLES.choose(rng).unwrap(),
        CODES.choose(rng).unwrap(),
        CLAUSES.choose(rng).unwrap(),
        SUBJECTS.choose(rng).unwrap(),
        VERBS.choose(rng).unwrap(),
    )
}

/// Documents of a few sentences each until `bytes` is reached.
pub fn legal_corpus(bytes: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut docs = Vec::new();
    let mut total = 0;
    while total < bytes {
        let n = rng.random_range(2..6);
        let doc: Vec<String> = (0..n).map(|_| sentence(rng)).collect();
        let doc = doc.join(" ");
        total += doc.len();
        docs.push(doc);
    }
    docs
}

/// Random valid UTF-8 of at most `max_bytes` bytes mixing ASCII, French
/// letters, other scripts, emoji and whitespace.
pub fn random_unicode(rng: &mut ChaCha8Rng, max_bytes: usize) -> String {
    let target = rng.random_range(0..=max_bytes);
    let mut s = String::new();
    loop {
        let c = match rng.random_range(0..10) {
            0..=4 => rng.random_range(0x20u32..0x7f),
            5 => *[0xe9, 0xe8, 0xe0, 0xe7, 0xf4, 0x152, 0xab, 0xbb, 0xa7, 0x2019].choose(rng).unwrap(),
            6 => *[0x20, 0x0a, 0x09, 0x20, 0x0d].choose(rng).unwrap(),
            7 => rng.random_range(0x4e00u32..0x9fff),
            8 => rng.random_range(0x1f300u32..0x1f6ff),
            _ => rng.random_range(0x80u32..0x10ffff),
        };
        let Some(c) = char::from_u32(c) else { continue };
        if s.len() + c.len_utf8() > target {
            return s;
        }
        s.push(c);
    }
}
