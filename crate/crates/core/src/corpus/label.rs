use std::path::Path;

use crate::corpus::GenreLabel;
use crate::error::{Error, Result};

/// Fields encoded in a YMIR-style file name:
/// `song_sample_title_artist_genre.wav`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFields {
    pub song_number: u32,
    pub sample_number: u32,
    pub title: String,
    pub artist: String,
    pub genre: GenreLabel,
}

/// Parses a label from a file name (directories and extension are ignored).
///
/// The two leading numeric fields and the two trailing fields are fixed;
/// anything in between is rejoined with `_` as the title.
pub fn parse_label(filename: &str) -> Result<LabelFields> {
    let stem = Path::new(filename)
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Label(format!("no file stem in `{filename}`")))?;
    let tokens: Vec<&str> = stem.split('_').collect();
    if tokens.len() < 5 {
        return Err(Error::Label(format!(
            "`{stem}` has {} underscore-separated fields, need at least 5",
            tokens.len()
        )));
    }
    let number = |tok: &str, what: &str| -> Result<u32> {
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Format(format!("{what} `{tok}` in `{stem}` is not numeric")));
        }
        tok.parse().map_err(|_| Error::Format(format!("{what} `{tok}` is out of range")))
    };
    let n = tokens.len();
    Ok(LabelFields {
        song_number: number(tokens[0], "song number")?,
        sample_number: number(tokens[1], "sample number")?,
        title: tokens[2..n - 2].join("_"),
        artist: tokens[n - 2].to_string(),
        genre: tokens[n - 1].parse()?,
    })
}

pub fn format_label(fields: &LabelFields) -> String {
    format!(
        "{:03}_{:02}_{}_{}_{}.wav",
        fields.song_number, fields.sample_number, fields.title, fields.artist, fields.genre
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent reference: peel fields off both ends of the stem.
    fn split_from_both_ends(stem: &str) -> (String, String, String, String, String) {
        let (head, genre) = stem.rsplit_once('_').unwrap();
        let (head, artist) = head.rsplit_once('_').unwrap();
        let (song, rest) = head.split_once('_').unwrap();
        let (sample, title) = rest.split_once('_').unwrap();
        (song.into(), sample.into(), title.into(), artist.into(), genre.into())
    }

    #[test]
    fn parses_documented_example() {
        let f = parse_label("012_03_Mytitle_Artist_Hadhrami.wav").unwrap();
        assert_eq!(
            f,
            LabelFields {
                song_number: 12,
                sample_number: 3,
                title: "Mytitle".into(),
                artist: "Artist".into(),
                genre: GenreLabel::Hadhrami
            }
        );
    }

    #[test]
    fn minimal_tokens() {
        let f = parse_label("001_01_A_B_Adeni.wav").unwrap();
        assert_eq!((f.song_number, f.sample_number), (1, 1));
        assert_eq!((f.title.as_str(), f.artist.as_str(), f.genre), ("A", "B", GenreLabel::Adeni));
    }

    #[test]
    fn long_titles_are_rejoined() {
        let name = "007_02_Long_Song_Name_Artist_Lahji.wav";
        let f = parse_label(name).unwrap();
        let oracle = split_from_both_ends("007_02_Long_Song_Name_Artist_Lahji");
        assert_eq!(f.title, oracle.2);
        assert_eq!(f.title, "Long_Song_Name");
        assert_eq!(f.artist, oracle.3);
        assert_eq!(f.genre, GenreLabel::Lahji);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_label("001_01_A_B_Jazz.wav"), Err(Error::Label(_))));
        assert!(matches!(parse_label("x01_01_A_B_Adeni.wav"), Err(Error::Format(_))));
        assert!(matches!(parse_label("001_xx_A_B_Adeni.wav"), Err(Error::Format(_))));
        assert!(matches!(parse_label("001_01_A_Adeni.wav"), Err(Error::Label(_))));
        assert_eq!(parse_label("genre/dir/001_01_A_B_tihami.wav").unwrap().genre, GenreLabel::Tihami);
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(
            song in 0u32..100_000,
            sample in 0u32..1000,
            title in "[A-Za-z0-9 -]{1,12}(_[A-Za-z0-9]{1,6}){0,3}",
            artist in "[A-Za-z0-9 -]{1,12}",
            g in 0usize..5,
        ) {
            let fields = LabelFields {
                song_number: song,
                sample_number: sample,
                title,
                artist,
                genre: GenreLabel::from_id(g).unwrap(),
            };
            prop_assert_eq!(parse_label(&format_label(&fields)).unwrap(), fields);
        }
    }
}
