//! Manifest persistence: header `path,raw_label,class_index,speaker_id,fold`.

use std::collections::BTreeSet;
use std::path::Path;

use speechcmd_core::dataset::{ClassLabel, Manifest, ManifestEntry};

use crate::error::{Error, IoContext, Result};

pub const HEADER: [&str; 5] = ["path", "raw_label", "class_index", "speaker_id", "fold"];

pub fn to_string(manifest: &Manifest) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for e in &manifest.entries {
        w.write_record([
            e.path.as_str(),
            e.raw_label.as_str(),
            &e.class.index().to_string(),
            e.speaker_id.as_str(),
            &e.fold.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn from_str(text: &str, origin: &Path) -> Result<Manifest> {
    let csv_err = |source| Error::Csv { path: origin.to_path_buf(), source };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER) {
        return Err(Error::format("manifest", format!("expected header {}", HEADER.join(","))));
    }
    let mut entries = Vec::new();
    let mut folds = BTreeSet::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| Error::format("manifest", format!("row {}: bad {what}", line + 2));
        let class_index: usize = rec[2].parse().map_err(|_| bad("class_index"))?;
        let fold: i32 = rec[4].parse().map_err(|_| bad("fold"))?;
        let mut e = ManifestEntry::new(&rec[0], &rec[1], &rec[3]);
        e.class = ClassLabel::from_index(class_index)?;
        e.fold = fold;
        if fold >= 0 {
            folds.insert(fold);
        }
        entries.push(e);
    }
    let mut m = Manifest::new(entries);
    m.n_folds = folds.iter().next_back().map_or(0, |&f| f as usize + 1);
    m.silence_sources = m
        .entries
        .iter()
        .filter_map(|e| e.fragment().map(|(rec, _)| rec.to_string()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(m)
}

pub fn write(manifest: &Manifest, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(manifest)).at(path)
}

pub fn read(path: &Path) -> Result<Manifest> {
    from_str(&std::fs::read_to_string(path).at(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Manifest::new(vec![
            ManifestEntry::new("c/down/1e4064b8_nohash_0.wav", "down", "1e4064b8"),
            ManifestEntry::new("c/bed/aa_nohash_1.wav", "bed", "aa"),
        ]);
        m.add_silence_fragments("c/_background_noise_/white, 1.wav", 2);
        // A cleaned entry keeps its folder name but carries class silence.
        m.entries[1].class = ClassLabel::Silence;
        for (i, e) in m.entries.iter_mut().enumerate() {
            e.fold = (i % 3) as i32;
        }
        let text = to_string(&m);
        assert!(text.starts_with("path,raw_label,class_index,speaker_id,fold\n"));
        let back = from_str(&text, Path::new("m.csv")).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!(back.n_folds, 3);
        assert_eq!(back.silence_sources, vec!["c/_background_noise_/white, 1.wav".to_string()]);
    }

    #[test]
    fn rejects_bad_rows() {
        let p = Path::new("m.csv");
        assert!(from_str("a,b\n", p).is_err());
        assert!(from_str("path,raw_label,class_index,speaker_id,fold\nx,yes,12,s,0\n", p).is_err());
        assert!(from_str("path,raw_label,class_index,speaker_id,fold\nx,yes,0,s,z\n", p).is_err());
    }
}
