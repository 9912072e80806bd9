use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::books;
use crate::Error;

/// A `Book.Chapter.Verse` reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VerseRef {
    pub book: String,
    pub chapter: u32,
    pub verse: u32,
}

/// Identifier of one passage.
///
/// Bible-style corpora use [`PassageId::Verse`]; anything that does not parse
/// as `Book.C.V` (with positive, zero-free-prefix numbers) is kept verbatim as
/// [`PassageId::Opaque`], so `parse` followed by `to_string` is always the
/// identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PassageId {
    Verse(VerseRef),
    Opaque(String),
}

fn positive(s: &str) -> Option<u32> {
    if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl PassageId {
    pub fn verse(book: &str, chapter: u32, verse: u32) -> Self {
        Self::Verse(VerseRef { book: book.to_owned(), chapter, verse })
    }

    /// Key used to match references across sources: known book names are
    /// folded to their OSIS abbreviation, so `Isaiah.25.8` and `Isa.25.8`
    /// resolve to the same passage.
    pub fn canonical_key(&self) -> String {
        match self {
            Self::Verse(v) => {
                let book = books::osis(&v.book).map_or_else(|| v.book.clone(), str::to_owned);
                format!("{book}.{}.{}", v.chapter, v.verse)
            }
            Self::Opaque(s) => s.clone(),
        }
    }

    fn book_rank(&self) -> Option<usize> {
        match self {
            Self::Verse(v) => books::book_index(&v.book),
            Self::Opaque(_) => None,
        }
    }
}

impl FromStr for PassageId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.is_empty() || s.chars().any(|c| c == '\t' || c == '\n' || c == '\r') {
            return Err(Error::InvalidArgument(format!("invalid passage id {s:?}")));
        }
        let mut parts = s.rsplitn(3, '.');
        let (v, c, b) = (parts.next(), parts.next(), parts.next());
        if let (Some(v), Some(c), Some(b)) = (v, c, b) {
            if let (Some(chapter), Some(verse)) = (positive(c), positive(v)) {
                if !b.is_empty() {
                    return Ok(Self::verse(b, chapter, verse));
                }
            }
        }
        Ok(Self::Opaque(s.to_owned()))
    }
}

impl fmt::Display for PassageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Verse(v) => write!(f, "{}.{}.{}", v.book, v.chapter, v.verse),
            Self::Opaque(s) => f.write_str(s),
        }
    }
}

/// Canonical order: verses by (book position, book name, chapter, verse),
/// then opaque ids lexicographically. Within a corpus, prefer
/// [`Corpus::position`](super::Corpus::position), which is file order.
impl Ord for PassageId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Verse(a), Self::Verse(b)) => {
                let ra = self.book_rank().unwrap_or(usize::MAX);
                let rb = other.book_rank().unwrap_or(usize::MAX);
                (ra, &a.book, a.chapter, a.verse).cmp(&(rb, &b.book, b.chapter, b.verse))
            }
            (Self::Verse(_), Self::Opaque(_)) => Ordering::Less,
            (Self::Opaque(_), Self::Verse(_)) => Ordering::Greater,
            (Self::Opaque(a), Self::Opaque(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for PassageId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for PassageId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PassageId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_verse_refs() {
        let id: PassageId = "Isaiah.25.8".parse().unwrap();
        assert_eq!(id, PassageId::verse("Isaiah", 25, 8));
        assert_eq!(id.canonical_key(), "Isa.25.8");
        let id: PassageId = "1Cor.15.54".parse().unwrap();
        assert_eq!(id.canonical_key(), "1Cor.15.54");
    }

    #[test]
    fn opaque_fallbacks() {
        for s in ["emma-4-12", "Gen.01.1", "Gen.0.1", ".1.2", "a.b.c", "pp.1"] {
            let id: PassageId = s.parse().unwrap();
            assert!(matches!(id, PassageId::Opaque(_)), "{s}");
            assert_eq!(id.to_string(), s);
        }
        assert!("".parse::<PassageId>().is_err());
        assert!("a\tb".parse::<PassageId>().is_err());
    }

    #[test]
    fn canonical_ordering() {
        let mut ids: Vec<PassageId> = ["Rev.1.1", "Gen.2.1", "Gen.1.10", "Gen.1.2", "zz", "Exod.1.1"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        ids.sort();
        let got: Vec<String> = ids.iter().map(ToString::to_string).collect();
        assert_eq!(got, ["Gen.1.2", "Gen.1.10", "Gen.2.1", "Exod.1.1", "Rev.1.1", "zz"]);
    }

    proptest! {
        #[test]
        fn parse_format_identity(s in "[A-Za-z0-9 ._:-]{1,24}") {
            let id: PassageId = s.parse().unwrap();
            prop_assert_eq!(id.to_string(), s);
        }

        #[test]
        fn verse_roundtrip(book in "[1-3]?[A-Z][a-z]{1,10}", c in 1u32..200, v in 1u32..200) {
            let s = format!("{book}.{c}.{v}");
            let id: PassageId = s.parse().unwrap();
            prop_assert_eq!(&id, &PassageId::verse(&book, c, v));
            prop_assert_eq!(id.to_string(), s);
        }
    }
}
