//! Canonical book names (OSIS abbreviations) for the 66-book Protestant canon.

/// (OSIS abbreviation, full English name) in canonical order.
pub const BOOKS: [(&str, &str); 66] = [
    ("Gen", "Genesis"),
    ("Exod", "Exodus"),
    ("Lev", "Leviticus"),
    ("Num", "Numbers"),
    ("Deut", "Deuteronomy"),
    ("Josh", "Joshua"),
    ("Judg", "Judges"),
    ("Ruth", "Ruth"),
    ("1Sam", "1 Samuel"),
    ("2Sam", "2 Samuel"),
    ("1Kgs", "1 Kings"),
    ("2Kgs", "2 Kings"),
    ("1Chr", "1 Chronicles"),
    ("2Chr", "2 Chronicles"),
    ("Ezra", "Ezra"),
    ("Neh", "Nehemiah"),
    ("Esth", "Esther"),
    ("Job", "Job"),
    ("Ps", "Psalms"),
    ("Prov", "Proverbs"),
    ("Eccl", "Ecclesiastes"),
    ("Song", "Song of Solomon"),
    ("Isa", "Isaiah"),
    ("Jer", "Jeremiah"),
    ("Lam", "Lamentations"),
    ("Ezek", "Ezekiel"),
    ("Dan", "Daniel"),
    ("Hos", "Hosea"),
    ("Joel", "Joel"),
    ("Amos", "Amos"),
    ("Obad", "Obadiah"),
    ("Jonah", "Jonah"),
    ("Mic", "Micah"),
    ("Nah", "Nahum"),
    ("Hab", "Habakkuk"),
    ("Zeph", "Zephaniah"),
    ("Hag", "Haggai"),
    ("Zech", "Zechariah"),
    ("Mal", "Malachi"),
    ("Matt", "Matthew"),
    ("Mark", "Mark"),
    ("Luke", "Luke"),
    ("John", "John"),
    ("Acts", "Acts"),
    ("Rom", "Romans"),
    ("1Cor", "1 Corinthians"),
    ("2Cor", "2 Corinthians"),
    ("Gal", "Galatians"),
    ("Eph", "Ephesians"),
    ("Phil", "Philippians"),
    ("Col", "Colossians"),
    ("1Thess", "1 Thessalonians"),
    ("2Thess", "2 Thessalonians"),
    ("1Tim", "1 Timothy"),
    ("2Tim", "2 Timothy"),
    ("Titus", "Titus"),
    ("Phlm", "Philemon"),
    ("Heb", "Hebrews"),
    ("Jas", "James"),
    ("1Pet", "1 Peter"),
    ("2Pet", "2 Peter"),
    ("1John", "1 John"),
    ("2John", "2 John"),
    ("3John", "3 John"),
    ("Jude", "Jude"),
    ("Rev", "Revelation"),
];

const ALIASES: [(&str, usize); 8] = [
    ("psalm", 18),
    ("songofsongs", 21),
    ("canticles", 21),
    ("revelations", 65),
    ("revelationofjohn", 65),
    ("qoheleth", 20),
    ("phm", 56),
    ("jdg", 6),
];

fn fold(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace() && *c != '_' && *c != '.')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Canonical position (0-based) of a book given its OSIS abbreviation, full
/// name, a common alias, or an unambiguous prefix of at least three
/// characters of the full name. Case, spaces and underscores are ignored.
pub fn book_index(name: &str) -> Option<usize> {
    let key = fold(name);
    BOOKS
        .iter()
        .position(|(osis, full)| fold(osis) == key || fold(full) == key)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == key).map(|&(_, i)| i))
        .or_else(|| unique_prefix(&key))
}

fn unique_prefix(key: &str) -> Option<usize> {
    if key.chars().count() < 3 {
        return None;
    }
    let mut hits = BOOKS.iter().enumerate().filter(|(_, (_, full))| fold(full).starts_with(key));
    match (hits.next(), hits.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

/// OSIS abbreviation for a recognised book name.
pub fn osis(name: &str) -> Option<&'static str> {
    book_index(name).map(|i| BOOKS[i].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        assert_eq!(osis("Isaiah"), Some("Isa"));
        assert_eq!(osis("isa"), Some("Isa"));
        assert_eq!(osis("1 Corinthians"), Some("1Cor"));
        assert_eq!(osis("1Corinthians"), Some("1Cor"));
        assert_eq!(osis("Psalm"), Some("Ps"));
        assert_eq!(osis("Psa"), Some("Ps"));
        assert_eq!(osis("Deut"), Some("Deut"));
        assert_eq!(osis("Jud"), None);
        assert_eq!(osis("Ge"), None);
        assert_eq!(osis("Song of Songs"), Some("Song"));
        assert_eq!(book_index("Genesis"), Some(0));
        assert_eq!(book_index("Rev"), Some(65));
        assert_eq!(osis("Hezekiah"), None);
    }
}
